//! Dense complex matrices and the three stability-contracted primitives:
//! multiplication, symmetrization and inversion.

mod io;
mod kernels;

pub use io::{read_matrix, read_matrix_binary, read_matrix_text, write_matrix_binary, write_matrix_text};

use std::ops::Range;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fparith::{PrecisionBudget, StabilityConstants};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix.
///
/// `hermitian_certified` guarantees bit-exact conjugate symmetry with a real
/// diagonal; every constructor that sets it has checked the entries.
///
/// Equality compares shape and entries; the certification flag is ignored.
#[derive(Debug, Clone)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    hermitian: bool,
}

impl PartialEq for Mat {
    fn eq(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Mat> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("matrix entries must be finite".into()));
        }
        Ok(Mat {
            rows,
            cols,
            data,
            hermitian: false,
        })
    }

    /// Unchecked constructor for kernels whose output is finite by construction
    /// or validated by the caller.
    pub(crate) fn raw(rows: usize, cols: usize, data: Vec<C64>) -> Mat {
        debug_assert_eq!(data.len(), rows * cols);
        Mat {
            rows,
            cols,
            data,
            hermitian: false,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat::raw(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m.hermitian = true;
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat::raw(rows, cols, data)
    }

    /// Real matrix from row-major values.
    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Mat> {
        Mat::new(rows, cols, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(d: &[f64]) -> Mat {
        let n = d.len();
        let mut m = Mat::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = C64::new(x, 0.0);
        }
        m.hermitian = d.iter().all(|x| x.is_finite());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn hermitian_certified(&self) -> bool {
        self.hermitian
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Certify conjugate symmetry; fails unless it already holds bit-exactly.
    pub fn certify_hermitian(mut self) -> Result<Mat> {
        if !self.is_exactly_hermitian() {
            return Err(Error::Precondition("matrix is not exactly Hermitian".into()));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        for i in 0..n {
            if self.get(i, i).im != 0.0 {
                return false;
            }
            for j in i + 1..n {
                if self.get(i, j) != self.get(j, i).conj() {
                    return false;
                }
            }
        }
        true
    }

    pub fn adjoint(&self) -> Mat {
        let mut m = Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj());
        m.hermitian = self.hermitian;
        m
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn block(&self, r: Range<usize>, c: Range<usize>) -> Mat {
        let (r0, c0) = (r.start, c.start);
        Mat::from_fn(r.len(), c.len(), |i, j| self.get(r0 + i, c0 + j))
    }

    /// Columns `c` of the matrix.
    pub fn columns(&self, c: Range<usize>) -> Mat {
        self.block(0..self.rows, c)
    }

    /// `[[a11, a12], [a21, a22]]`.
    pub fn from_blocks(a11: &Mat, a12: &Mat, a21: &Mat, a22: &Mat) -> Result<Mat> {
        if a11.rows != a12.rows || a21.rows != a22.rows || a11.cols != a21.cols || a12.cols != a22.cols {
            return Err(Error::DimensionMismatch("inconsistent block shapes".into()));
        }
        let (k, m) = (a11.rows, a21.rows);
        let (p, q) = (a11.cols, a12.cols);
        Ok(Mat::from_fn(k + m, p + q, |i, j| match (i < k, j < p) {
            (true, true) => a11.get(i, j),
            (true, false) => a12.get(i, j - p),
            (false, true) => a21.get(i - k, j),
            (false, false) => a22.get(i - k, j - p),
        }))
    }

    /// Horizontal concatenation `[a | b]`.
    pub fn hstack(a: &Mat, b: &Mat) -> Result<Mat> {
        if a.rows != b.rows {
            return Err(Error::DimensionMismatch("hstack row counts differ".into()));
        }
        let p = a.cols;
        Ok(Mat::from_fn(a.rows, a.cols + b.cols, |i, j| {
            if j < p {
                a.get(i, j)
            } else {
                b.get(i, j - p)
            }
        }))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).re).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Error unless every entry is finite; `op` names the producing operation.
    pub(crate) fn require_finite(self, op: &str) -> Result<Mat> {
        if self.is_finite() {
            Ok(self)
        } else if op.is_empty() {
            Err(Error::PrecisionOverflow)
        } else {
            Err(Error::Diverged(format!("{op} produced non-finite entries")))
        }
    }

    /// Elementwise sum, rounded on the machine.
    pub fn add(&self, other: &Mat, b: &PrecisionBudget) -> Result<Mat> {
        self.zip(other, |x, y| b.add(x, y))
    }

    pub fn sub(&self, other: &Mat, b: &PrecisionBudget) -> Result<Mat> {
        self.zip(other, |x, y| b.sub(x, y))
    }

    fn zip(&self, other: &Mat, f: impl Fn(C64, C64) -> C64) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| f(x, y)).collect();
        Ok(Mat::raw(self.rows, self.cols, data))
    }

    /// Multiply every entry by a real scalar, rounded on the machine.
    pub fn scale(&self, s: f64, b: &PrecisionBudget) -> Mat {
        let mut m = Mat::raw(self.rows, self.cols, self.data.iter().map(|&z| b.scale(z, s)).collect());
        // real scaling preserves exact conjugate symmetry
        m.hermitian = self.hermitian && s.is_finite();
        m
    }

    /// `s I - self` for square matrices.
    pub fn shift_neg(&self, s: f64, b: &PrecisionBudget) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("shift of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut m = Mat::from_fn(n, n, |i, j| {
            let a = self.get(i, j);
            if i == j {
                b.sub(C64::new(s, 0.0), a)
            } else {
                -a
            }
        });
        m.hermitian = self.hermitian;
        Ok(m)
    }

    /// Matrix-vector product at native precision (used by estimators).
    pub(crate) fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub(crate) fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// Spectral-norm estimate: 30 power-iteration steps on `A^H A` from a
    /// fixed seeded start vector. Reporting only; never an upper bound.
    pub fn norm_estimate(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
        let mut v: Vec<C64> = (0..self.cols)
            .map(|_| {
                let a = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                let b = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                C64::new(a, b)
            })
            .collect();
        let mut sigma = 0.0;
        for _ in 0..30 {
            let nv = vec_norm(&v);
            if nv == 0.0 {
                return sigma;
            }
            v.iter_mut().for_each(|z| *z /= nv);
            let w = self.apply(&v);
            sigma = vec_norm(&w);
            v = self.apply_adjoint(&w);
        }
        sigma.max(self.max_abs())
    }
}

pub(crate) fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix-multiplication algorithm behind [`mm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MulBackend {
    #[default]
    Classical,
    /// Strassen recursion with a classical base case at dimension <= 64.
    Strassen,
}

impl MulBackend {
    /// Exponent `e` of `mu_mm(n) = n^e` for this backend.
    pub fn mm_exponent(self) -> f64 {
        match self {
            MulBackend::Classical => 2.0,
            MulBackend::Strassen => 2.2,
        }
    }
}

/// A floating-point machine: precision, stability constants and the
/// multiplication backend every operation runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub budget: PrecisionBudget,
    pub consts: StabilityConstants,
    pub backend: MulBackend,
}

impl Machine {
    pub fn native() -> Machine {
        Machine::new(PrecisionBudget::native(), MulBackend::Classical)
    }

    pub fn emulated(bits: u32) -> Result<Machine> {
        Ok(Machine::new(PrecisionBudget::emulated(bits)?, MulBackend::Classical))
    }

    pub fn new(budget: PrecisionBudget, backend: MulBackend) -> Machine {
        Machine {
            budget,
            consts: StabilityConstants::with_mm_exponent(backend.mm_exponent()),
            backend,
        }
    }

    pub fn with_consts(mut self, consts: StabilityConstants) -> Machine {
        self.consts = consts;
        self
    }

    pub fn u(&self) -> f64 {
        self.budget.u()
    }
}

impl Default for Machine {
    fn default() -> Self {
        Machine::native()
    }
}

/// Certificate attached to a primitive: the evaluated error bound of its
/// stability contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpReport {
    pub op_name: String,
    pub bound_claimed: f64,
    pub precision_used: PrecisionBudget,
}

impl OpReport {
    pub fn new(op: &str, bound: f64, budget: &PrecisionBudget) -> OpReport {
        let bound = if bound.is_nan() {
            f64::MAX
        } else {
            bound.clamp(0.0, f64::MAX)
        };
        OpReport {
            op_name: op.to_string(),
            bound_claimed: bound,
            precision_used: budget.clone(),
        }
    }
}

fn check_product_shapes(a: &Mat, b: &Mat) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Product `A B` on the machine's backend, without a certificate.
pub fn matmul(a: &Mat, b: &Mat, machine: &Machine) -> Result<Mat> {
    check_product_shapes(a, b)?;
    let c = match machine.backend {
        MulBackend::Classical => kernels::classical(a, b, &machine.budget),
        MulBackend::Strassen => kernels::strassen(a, b, &machine.budget),
    };
    c.require_finite("")
}

/// Stable multiplication: `||C - AB|| <= mu_mm(n) u ||A|| ||B||`.
pub fn mm(a: &Mat, b: &Mat, machine: &Machine) -> Result<(Mat, OpReport)> {
    let c = matmul(a, b, machine)?;
    let n = a.rows.max(a.cols).max(b.cols);
    let bound = machine.consts.mu_mm(n) * machine.u() * a.norm_estimate() * b.norm_estimate();
    Ok((c, OpReport::new("mm", bound, &machine.budget)))
}

/// Replace the strictly lower triangle by the conjugate of the strictly upper
/// triangle and zero the diagonal imaginary parts.
pub fn herm(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "herm needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut m = Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => a.get(i, j),
        std::cmp::Ordering::Equal => C64::new(a.get(i, i).re, 0.0),
        std::cmp::Ordering::Greater => a.get(j, i).conj(),
    });
    m.hermitian = true;
    Ok(m)
}

/// Inverse by recursive 2x2 block elimination through Schur complements,
/// split at `floor(n/2)`.
pub fn invert(a: &Mat, machine: &Machine) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "inverse of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if a.rows == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let tol = pivot_tolerance(a, &machine.budget);
    invert_rec(a, machine, tol)?.require_finite("inversion")
}

fn pivot_tolerance(a: &Mat, b: &PrecisionBudget) -> f64 {
    let u = if b.u() > 0.0 {
        b.u()
    } else {
        PrecisionBudget::native().u()
    };
    a.rows as f64 * u * a.max_abs()
}

fn invert_rec(a: &Mat, machine: &Machine, tol: f64) -> Result<Mat> {
    let n = a.rows;
    let b = &machine.budget;
    if n == 1 {
        let p = a.get(0, 0);
        if !(p.norm() > tol) {
            return Err(Error::Singular(format!("pivot {:.3e} below {:.3e}", p.norm(), tol)));
        }
        return Ok(Mat::raw(1, 1, vec![b.div(ONE, p)]));
    }
    let k = n / 2;
    let a11 = a.block(0..k, 0..k);
    let a12 = a.block(0..k, k..n);
    let a21 = a.block(k..n, 0..k);
    let a22 = a.block(k..n, k..n);

    let x11 = invert_rec(&a11, machine, tol)?;
    let t = matmul(&a21, &x11, machine)?; // A21 A11^-1
    let schur = a22.sub(&matmul(&t, &a12, machine)?, b)?;
    let y = invert_rec(&schur, machine, tol)?;
    let u = matmul(&x11, &a12, machine)?; // A11^-1 A12
    let b12 = matmul(&u, &y, machine)?.scale(-1.0, b);
    let b21 = matmul(&y, &t, machine)?.scale(-1.0, b);
    let b11 = x11.sub(&matmul(&b12, &t, machine)?, b)?;
    Mat::from_blocks(&b11, &b12, &b21, &y)
}

/// Stable inversion with its certificate
/// `mu_inv(n) u kappa^(c_inv log n) ||A^-1||`, kappa estimated by power
/// iteration on `A` and the computed inverse.
pub fn inv(a: &Mat, machine: &Machine) -> Result<(Mat, OpReport)> {
    let c = invert(a, machine)?;
    let n = a.rows;
    let inv_norm = c.norm_estimate();
    let kappa = (a.norm_estimate() * inv_norm).max(1.0);
    let k = &machine.consts;
    let bound = k.mu_inv(n) * machine.u() * kappa.powf(k.inv_log_exponent(n)) * inv_norm;
    Ok((c, OpReport::new("inv", bound, &machine.budget)))
}

/// `herm(mm(A, B))` for products known to be Hermitian.
pub fn herm_mm(a: &Mat, b: &Mat, machine: &Machine) -> Result<Mat> {
    herm(&matmul(a, b, machine)?)
}

/// `herm(inv(A))` for Hermitian `A`.
pub fn herm_inv(a: &Mat, machine: &Machine) -> Result<Mat> {
    herm(&invert(a, machine)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(v: [f64; 4]) -> Mat {
        Mat::from_real(2, 2, &v).unwrap()
    }

    #[test]
    fn two_by_two_product() {
        let (c, rep) = mm(&m2([1., 2., 3., 4.]), &m2([5., 6., 7., 8.]), &Machine::native()).unwrap();
        assert_eq!(c, m2([19., 22., 43., 50.]));
        assert!(rep.bound_claimed >= 0.0);
        let s = Machine::new(PrecisionBudget::native(), MulBackend::Strassen);
        assert_eq!(
            matmul(&m2([1., 2., 3., 4.]), &m2([5., 6., 7., 8.]), &s).unwrap(),
            m2([19., 22., 43., 50.])
        );
    }

    #[test]
    fn identity_product_is_exact() {
        let a = Mat::from_fn(5, 3, |i, j| C64::new(i as f64 * 0.3 - 1.0, j as f64 / 7.0));
        let c = matmul(&Mat::identity(5), &a, &Machine::native()).unwrap();
        assert_eq!(c.data(), a.data());
    }

    #[test]
    fn dimension_mismatch() {
        let r = mm(&Mat::zeros(2, 3), &Mat::zeros(2, 3), &Machine::native());
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        assert!(herm(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn herm_examples() {
        assert_eq!(herm(&m2([1., 2., 9., 3.])).unwrap(), m2([1., 2., 2., 3.]));
        let a = Mat::new(
            2,
            2,
            vec![C64::new(1., 0.1), C64::new(2., 0.), C64::new(0., 0.), C64::new(3., 0.)],
        )
        .unwrap();
        let h = herm(&a).unwrap();
        assert_eq!(h, m2([1., 2., 2., 3.]));
        assert!(h.hermitian_certified());
        let already = m2([1., 2., 2., 3.]).certify_hermitian().unwrap();
        assert_eq!(herm(&already).unwrap(), already);
    }

    #[test]
    fn inverse_examples() {
        let mach = Machine::native();
        assert_eq!(
            invert(&Mat::identity(4), &mach).unwrap().data(),
            Mat::identity(4).data()
        );
        let d = invert(&Mat::from_diag(&[2., 4.]), &mach).unwrap();
        assert_eq!(d.diag_real(), vec![0.5, 0.25]);
        assert_eq!(d.get(0, 1), ZERO);
        assert_eq!(
            herm_inv(&Mat::from_diag(&[2., 2.]), &mach).unwrap(),
            Mat::from_diag(&[0.5, 0.5])
        );
    }

    #[test]
    fn singular_pivot_detected() {
        let r = invert(&m2([0., 1., 1., 0.]), &Machine::native());
        assert!(matches!(r, Err(Error::Singular(_))));
        let r = invert(&m2([1., 2., 2., 4.]), &Machine::native());
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn emulated_outputs_are_representable() {
        let mach = Machine::emulated(10).unwrap();
        let a = Mat::from_fn(6, 6, |i, j| {
            C64::new(1.0 / (1 + i + j) as f64, (i as f64 - j as f64) / 3.0)
        });
        let b = a.adjoint();
        let p = mach.budget.significand_bits().unwrap();
        let check = |m: &Mat| {
            m.data().iter().all(|z| {
                crate::fparith::round_significand(z.re, p) == z.re && crate::fparith::round_significand(z.im, p) == z.im
            })
        };
        assert!(check(&matmul(&a, &b, &mach).unwrap()));
        let shifted = a.add(&Mat::identity(6).scale(4.0, &mach.budget), &mach.budget).unwrap();
        assert!(check(&invert(&shifted, &mach).unwrap()));
        let s = Machine::new(mach.budget.clone(), MulBackend::Strassen);
        assert!(check(&matmul(&a, &b, &s).unwrap()));
    }

    #[test]
    fn hstack_and_blocks() {
        let a = Mat::from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64, 0.0));
        let top = a.block(0..1, 0..3);
        let rest = a.block(1..3, 0..3);
        assert_eq!(top.rows(), 1);
        let back = Mat::from_blocks(
            &a.block(0..1, 0..1),
            &a.block(0..1, 1..3),
            &a.block(1..3, 0..1),
            &a.block(1..3, 1..3),
        )
        .unwrap();
        assert_eq!(back.data(), a.data());
        assert_eq!(rest.get(0, 0).re, 3.0);
        let h = Mat::hstack(&a.columns(0..1), &a.columns(1..3)).unwrap();
        assert_eq!(h.data(), a.data());
    }
}
