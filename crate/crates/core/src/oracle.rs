//! Brute-force reference computations for tests and differential runs.
//!
//! Nothing here calls the arithmetic of `matcore`, `signfn`, `spectra` or
//! `chol`; `Mat` is used only as a container. Inner products use
//! error-free transformations (two-sum, Dekker two-product), so sums are
//! accurate to roughly twice the working precision.

use crate::error::{Error, Result};
use crate::matcore::{Mat, C64};

const MAX_SWEEPS: usize = 60;
const OFF_TOL: f64 = 1e-14;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

/// Compensated real accumulator.
#[derive(Default, Clone, Copy)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.s, x);
        self.s = s;
        self.c += e;
    }

    fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.c += e;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Compensated complex dot product `sum x_k * y_k` (no conjugation).
fn dot(x: impl Iterator<Item = C64>, y: impl Iterator<Item = C64>) -> C64 {
    let (mut re, mut im) = (Acc::default(), Acc::default());
    for (a, b) in x.zip(y) {
        re.add_prod(a.re, b.re);
        re.add_prod(-a.im, b.im);
        im.add_prod(a.re, b.im);
        im.add_prod(a.im, b.re);
    }
    C64::new(re.value(), im.value())
}

fn dense(a: &Mat) -> Vec<C64> {
    a.data().to_vec()
}

fn to_mat(rows: usize, cols: usize, data: Vec<C64>) -> Result<Mat> {
    Mat::new(rows, cols, data)
}

fn frob(data: &[C64]) -> f64 {
    let mut acc = Acc::default();
    for z in data {
        acc.add_prod(z.re, z.re);
        acc.add_prod(z.im, z.im);
    }
    acc.value().sqrt()
}

fn require_hermitian(a: &Mat, op: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("{op} needs a square matrix")));
    }
    let n = a.rows();
    for i in 0..n {
        if a.get(i, i).im != 0.0 {
            return Err(Error::Precondition(format!("{op}: non-real diagonal")));
        }
        for j in 0..i {
            if a.get(i, j) != a.get(j, i).conj() {
                return Err(Error::Precondition(format!("{op}: input is not Hermitian")));
            }
        }
    }
    Ok(())
}

/// Product with compensated inner products.
pub fn matmul_reference(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, p, q) = (a.rows(), a.cols(), b.cols());
    let mut out = Vec::with_capacity(m * q);
    for i in 0..m {
        for j in 0..q {
            out.push(dot((0..p).map(|k| a.get(i, k)), (0..p).map(|k| b.get(k, j))));
        }
    }
    to_mat(m, q, out)
}

/// `x^H * M * x` with compensated sums.
pub fn quadratic_form_reference(m: &Mat, x: &[C64]) -> Result<C64> {
    if m.rows() != x.len() || m.cols() != x.len() {
        return Err(Error::DimensionMismatch("quadratic form".into()));
    }
    let n = x.len();
    let mx: Vec<C64> = (0..n)
        .map(|i| dot(m.row(i).iter().copied(), x.iter().copied()))
        .collect();
    Ok(dot(x.iter().map(|z| z.conj()), mx.into_iter()))
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse_reference(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let n = a.rows();
    let mut w = dense(a);
    let mut inv: Vec<C64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| w[x * n + col].norm().total_cmp(&w[y * n + col].norm()))
            .unwrap();
        if w[piv * n + col].norm() == 0.0 {
            return Err(Error::Singular("reference inverse found a zero pivot".into()));
        }
        if piv != col {
            for j in 0..n {
                w.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let d = w[col * n + col].inv();
        for j in 0..n {
            w[col * n + j] *= d;
            inv[col * n + j] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = w[r * n + col];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let (wc, ic) = (w[col * n + j], inv[col * n + j]);
                w[r * n + j] -= f * wc;
                inv[r * n + j] -= f * ic;
            }
        }
    }
    to_mat(n, n, inv)
}

/// Reference eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct OracleEig {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, ordered like `eigenvalues`.
    pub eigenvectors: Mat,
    /// `||A V - V D||_F`.
    pub residual: f64,
}

/// Cyclic two-sided Jacobi. Each rotation first removes the phase of the
/// pivot with a diagonal unitary, then applies a real plane rotation.
pub fn eig_reference(a: &Mat) -> Result<OracleEig> {
    require_hermitian(a, "eig_reference")?;
    let n = a.rows();
    let mut w = dense(a);
    let mut v: Vec<C64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let scale = frob(&w);
    let mut converged = n < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        let off = {
            let mut acc = Acc::default();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let z = w[i * n + j];
                        acc.add_prod(z.re, z.re);
                        acc.add_prod(z.im, z.im);
                    }
                }
            }
            acc.value().sqrt()
        };
        if off <= OFF_TOL * scale {
            converged = true;
            break;
        }
        if sweeps == MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let (app, aqq) = (w[p * n + p].re, w[q * n + q].re);
                let phase = apq / r; // e^{i phi}
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = phase.conj(); // D_qq
                                      // Columns: A <- A U, with U = D * J.
                for k in 0..n {
                    let (akp, akq) = (w[k * n + p], w[k * n + q]);
                    w[k * n + p] = akp * c - akq * e * s;
                    w[k * n + q] = akp * s + akq * e * c;
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = vkp * c - vkq * e * s;
                    v[k * n + q] = vkp * s + vkq * e * c;
                }
                // Rows: A <- U^H A.
                let ec = e.conj();
                for k in 0..n {
                    let (apk, aqk) = (w[p * n + k], w[q * n + k]);
                    w[p * n + k] = apk * c - aqk * ec * s;
                    w[q * n + k] = apk * s + aqk * ec * c;
                }
                w[p * n + q] = C64::new(0.0, 0.0);
                w[q * n + p] = C64::new(0.0, 0.0);
                w[p * n + p] = C64::new(app - t * r, 0.0);
                w[q * n + q] = C64::new(aqq + t * r, 0.0);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            attempts: MAX_SWEEPS,
            reason: "Jacobi sweep cap reached".into(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[x * n + x].re.total_cmp(&w[y * n + y].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| w[i * n + i].re).collect();
    let mut vecs = Vec::with_capacity(n * n);
    for i in 0..n {
        for &j in &order {
            vecs.push(v[i * n + j]);
        }
    }
    let eigenvectors = to_mat(n, n, vecs)?;
    let mut res = Vec::with_capacity(n * n);
    for i in 0..n {
        for (j, &lam) in eigenvalues.iter().enumerate() {
            let av = dot(a.row(i).iter().copied(), (0..n).map(|k| eigenvectors.get(k, j)));
            res.push(av - eigenvectors.get(i, j) * lam);
        }
    }
    Ok(OracleEig {
        eigenvalues,
        residual: frob(&res),
        eigenvectors,
    })
}

pub fn eigenvalues_reference(a: &Mat) -> Result<Vec<f64>> {
    Ok(eig_reference(a)?.eigenvalues)
}

/// `V f(D) V^H` for a Hermitian input.
fn spectral_map(a: &Mat, f: impl Fn(usize, f64) -> f64) -> Result<Mat> {
    let e = eig_reference(a)?;
    let n = a.rows();
    let fd: Vec<f64> = e.eigenvalues.iter().enumerate().map(|(i, &l)| f(i, l)).collect();
    let v = &e.eigenvectors;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let z = dot((0..n).map(|k| v.get(i, k) * fd[k]), (0..n).map(|k| v.get(j, k).conj()));
            out[i * n + j] = if i == j { C64::new(z.re, 0.0) } else { z };
            out[j * n + i] = out[i * n + j].conj();
        }
    }
    to_mat(n, n, out)?.certify_hermitian()
}

/// Sign of a Hermitian matrix with no zero eigenvalue.
pub fn sgn_reference(a: &Mat) -> Result<Mat> {
    let e = eigenvalues_reference(a)?;
    if e.contains(&0.0) {
        return Err(Error::Precondition("sign of a matrix with a zero eigenvalue".into()));
    }
    spectral_map(a, |_, l| if l > 0.0 { 1.0 } else { -1.0 })
}

/// Orthogonal projector onto the eigenvectors of the `k` smallest eigenvalues.
pub fn density_reference(a: &Mat, k: usize) -> Result<Mat> {
    if k > a.rows() {
        return Err(Error::Precondition(format!("k = {k} exceeds n = {}", a.rows())));
    }
    spectral_map(a, |i, _| if i < k { 1.0 } else { 0.0 })
}

/// Row-by-row Cholesky. Rejects inputs that are not Hermitian positive-definite.
pub fn chol_reference(m: &Mat) -> Result<Mat> {
    require_hermitian(m, "chol_reference")?;
    let n = m.rows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = Acc::default();
        d.add(m.get(j, j).re);
        for k in 0..j {
            let z = l[j * n + k];
            d.add_prod(-z.re, z.re);
            d.add_prod(-z.im, z.im);
        }
        let d = d.value();
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite(format!("reference pivot {j} is {d:e}")));
        }
        let ljj = d.sqrt();
        l[j * n + j] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let s = m.get(i, j) - dot((0..j).map(|k| l[i * n + k]), (0..j).map(|k| l[j * n + k].conj()));
            l[i * n + j] = s / ljj;
        }
    }
    to_mat(n, n, l)
}

/// Singular values, nondecreasing, by one-sided (Hestenes) Jacobi.
pub fn singular_values_reference(a: &Mat) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    // Work on columns of the taller orientation.
    let (rows, cols, mut colv): (usize, usize, Vec<Vec<C64>>) = if m >= n {
        (m, n, (0..n).map(|j| a.column(j)).collect())
    } else {
        (
            n,
            m,
            (0..m).map(|i| a.row(i).iter().map(|z| z.conj()).collect()).collect(),
        )
    };
    let norm2 = |x: &[C64]| {
        let mut acc = Acc::default();
        for z in x {
            acc.add_prod(z.re, z.re);
            acc.add_prod(z.im, z.im);
        }
        acc.value()
    };
    let mut done = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if done {
            break;
        }
        done = true;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let alpha = norm2(&colv[p]);
                let beta = norm2(&colv[q]);
                let g = dot(colv[p].iter().map(|z| z.conj()), colv[q].iter().copied());
                let r = g.norm();
                if r == 0.0 || r <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                done = false;
                let e = (g / r).conj();
                let zeta = (beta - alpha) / (2.0 * r);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..rows {
                    let xp = colv[p][k];
                    let xq = colv[q][k] * e;
                    colv[p][k] = xp * c - xq * s;
                    colv[q][k] = xp * s + xq * c;
                }
            }
        }
    }
    if !done {
        return Err(Error::NoConvergence {
            attempts: MAX_SWEEPS,
            reason: "one-sided Jacobi sweep cap reached".into(),
        });
    }
    let mut sv: Vec<f64> = colv.iter().map(|c| norm2(c).sqrt()).collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv)
}

/// Spectral norm of any matrix.
pub fn norm_reference(a: &Mat) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    Ok(*singular_values_reference(a)?.last().unwrap())
}

/// 2-norm condition number; infinite for a singular matrix.
pub fn condition_number_reference(a: &Mat) -> Result<f64> {
    let sv = singular_values_reference(a)?;
    let (lo, hi) = (sv[0], sv[sv.len() - 1]);
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

/// Minimum spacing between eigenvalues of a Hermitian matrix.
pub fn gap_reference(a: &Mat) -> Result<f64> {
    let e = eigenvalues_reference(a)?;
    Ok(e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of the pencil `H x = lambda S x`, via `L^{-1} H L^{-H}` with
/// `S = L L^H`.
pub fn generalized_eig_reference(h: &Mat, s: &Mat) -> Result<Vec<f64>> {
    require_hermitian(h, "generalized_eig_reference")?;
    if h.rows() != s.rows() {
        return Err(Error::DimensionMismatch("pencil sizes differ".into()));
    }
    let n = h.rows();
    let l = chol_reference(s)?;
    // Forward substitution on each column: Y = L^{-1} H.
    let lower_solve = |b: Vec<C64>| -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let s = b[i] - dot((0..i).map(|k| l.get(i, k)), x[..i].iter().copied());
            x[i] = s / l.get(i, i);
        }
        x
    };
    let y: Vec<Vec<C64>> = (0..n).map(|j| lower_solve(h.column(j))).collect();
    // W = L^{-1} Y^H = (L^{-1} H L^{-H})^H; the result is Hermitian.
    let w: Vec<Vec<C64>> = (0..n)
        .map(|i| lower_solve((0..n).map(|j| y[j][i].conj()).collect()))
        .collect();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            // entry (i, j) of W^H lives at w[i][j] conjugated; average both triangles.
            let z = (w[i][j].conj() + w[j][i]) * 0.5;
            data[j * n + i] = if i == j { C64::new(z.re, 0.0) } else { z };
            data[i * n + j] = data[j * n + i].conj();
        }
    }
    eigenvalues_reference(&to_mat(n, n, data)?)
}

/// Orthonormal basis of the column span by twice-iterated modified
/// Gram-Schmidt. Fails on numerically dependent columns.
pub fn orthonormalize(a: &Mat) -> Result<Mat> {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        return Err(Error::DimensionMismatch("more columns than rows".into()));
    }
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = a.column(j);
        let start = frob(&v);
        for _ in 0..2 {
            for u in &q {
                let r = dot(u.iter().map(|z| z.conj()), v.iter().copied());
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= r * y;
                }
            }
        }
        let nv = frob(&v);
        if nv <= 1e-10 * start || nv == 0.0 {
            return Err(Error::Singular(format!("column {j} is dependent")));
        }
        q.push(v.into_iter().map(|z| z / nv).collect());
    }
    to_mat(
        m,
        n,
        (0..m).flat_map(|i| q.iter().map(move |c| c[i])).collect::<Vec<_>>(),
    )
}

/// `Q diag(d) Q^H`, made exactly Hermitian.
pub fn hermitian_from_spectrum(q: &Mat, d: &[f64]) -> Result<Mat> {
    let n = q.rows();
    if q.cols() != d.len() {
        return Err(Error::DimensionMismatch("spectrum length".into()));
    }
    let k = d.len();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let z = dot((0..k).map(|t| q.get(i, t) * d[t]), (0..k).map(|t| q.get(j, t).conj()));
            out[i * n + j] = if i == j { C64::new(z.re, 0.0) } else { z };
            out[j * n + i] = out[i * n + j].conj();
        }
    }
    to_mat(n, n, out)?.certify_hermitian()
}

/// `||A - B||_2`.
pub fn diff_norm_reference(a: &Mat, b: &Mat) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch("difference of unequal shapes".into()));
    }
    let d: Vec<C64> = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    norm_reference(&to_mat(a.rows(), a.cols(), d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn herm_from_seed(n: usize, seed: u64) -> Mat {
        let mut s = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(next(), 0.0);
            for j in i + 1..n {
                let z = C64::new(next(), next());
                data[i * n + j] = z;
                data[j * n + i] = z.conj();
            }
        }
        Mat::new(n, n, data).unwrap().certify_hermitian().unwrap()
    }

    #[test]
    fn diagonal_is_its_own_decomposition() {
        let a = Mat::from_diag(&[3.0, -1.0, 2.0]);
        let e = eig_reference(&a).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn real_two_by_two_closed_form() {
        let (a, b, c) = (0.7, -0.3, -0.2);
        let m = Mat::from_real(2, 2, &[a, b, b, c])
            .unwrap()
            .certify_hermitian()
            .unwrap();
        let e = eigenvalues_reference(&m).unwrap();
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        assert!((e[0] - (a + c - disc) / 2.0).abs() < 1e-15);
        assert!((e[1] - (a + c + disc) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn complex_hermitian_self_check() {
        for (n, seed) in [(5, 1), (16, 2), (40, 3)] {
            let a = herm_from_seed(n, seed);
            let e = eig_reference(&a).unwrap();
            assert!(e.residual <= 1e-12 * n as f64, "residual {}", e.residual);
            let v = &e.eigenvectors;
            let vhv = matmul_reference(&v.adjoint(), v).unwrap();
            let dev = diff_norm_reference(&vhv, &Mat::identity(n)).unwrap();
            assert!(dev <= 1e-12 * n as f64, "orthonormality {dev}");
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn references_on_small_examples() {
        assert_eq!(
            sgn_reference(&Mat::from_diag(&[2.0, -3.0])).unwrap(),
            Mat::from_diag(&[1.0, -1.0])
        );
        assert_eq!(
            density_reference(&Mat::from_diag(&[-1.0, 0.0, 1.0]), 1).unwrap(),
            Mat::from_diag(&[1.0, 0.0, 0.0])
        );
        let m = Mat::from_real(2, 2, &[4., 2., 2., 3.])
            .unwrap()
            .certify_hermitian()
            .unwrap();
        let l = chol_reference(&m).unwrap();
        assert_eq!(l.get(0, 0).re, 2.0);
        assert_eq!(l.get(1, 0).re, 1.0);
        assert!((l.get(1, 1).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l.get(0, 1).re, 0.0);
        assert!(chol_reference(&Mat::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn singular_values_and_inverse() {
        let a = Mat::from_real(3, 2, &[3., 0., 0., 1., 0., 0.]).unwrap();
        let sv = singular_values_reference(&a).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-15 && (sv[1] - 3.0).abs() < 1e-15);
        assert!((condition_number_reference(&a).unwrap() - 3.0).abs() < 1e-14);
        let h = herm_from_seed(12, 9);
        let hi = inverse_reference(&h).unwrap();
        let r = diff_norm_reference(&matmul_reference(&h, &hi).unwrap(), &Mat::identity(12)).unwrap();
        assert!(r < 1e-10);
        let ev = eigenvalues_reference(&h).unwrap();
        let nrm = ev.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        assert!((norm_reference(&h).unwrap() - nrm).abs() < 1e-13);
    }

    #[test]
    fn generalized_diagonal_pencil() {
        let h = Mat::from_diag(&[0.5, -0.25]);
        let s = Mat::from_diag(&[0.25, 1.0]);
        let e = generalized_eig_reference(&h, &s).unwrap();
        assert_eq!(e, vec![-0.25, 2.0]);
    }

    #[test]
    fn gershgorin_contains_eigenvalues() {
        let n = 10;
        let mut a = herm_from_seed(n, 4);
        a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                a.get(i, j) + C64::new(10.0 * i as f64, 0.0)
            } else {
                a.get(i, j) * 0.1
            }
        })
        .certify_hermitian()
        .unwrap();
        let ev = eigenvalues_reference(&a).unwrap();
        for l in ev {
            assert!((0..n).any(|i| {
                let rad: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).norm()).sum();
                (l - a.get(i, i).re).abs() <= rad
            }));
        }
    }

    #[test]
    fn planted_spectrum_round_trip() {
        let g = herm_from_seed(8, 11);
        let q = orthonormalize(&g).unwrap();
        let d = [-0.5, -0.5, -0.5, 0.0, 0.25, 0.25, 0.75, 1.0];
        let a = hermitian_from_spectrum(&q, &d).unwrap();
        let ev = eigenvalues_reference(&a).unwrap();
        for (x, y) in ev.iter().zip(d) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn trace_and_frobenius_preserved(n in 2usize..12, seed in any::<u64>()) {
            let a = herm_from_seed(n, seed);
            let e = eigenvalues_reference(&a).unwrap();
            let tr: f64 = a.diag_real().iter().sum();
            prop_assert!((e.iter().sum::<f64>() - tr).abs() < 1e-13 * n as f64);
            let f2: f64 = e.iter().map(|l| l * l).sum::<f64>().sqrt();
            prop_assert!((f2 - a.frobenius()).abs() < 1e-13 * n as f64);
        }
    }
}
