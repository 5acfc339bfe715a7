//! Householder tridiagonalization followed by implicit QL, in native
//! arithmetic. Used as a differential-testing backend.

use crate::error::{Error, Result};
use crate::matcore::{Mat, C64};

const QL_MAX_ITER: usize = 60;

/// Eigenvalues (nondecreasing) and orthonormal eigenvectors of a Hermitian
/// matrix.
pub(crate) fn eigh(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = a.rows();
    let mut w = a.data().to_vec();
    let mut q: Vec<C64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();

    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| w[i * n + k]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);
        // H = I - 2 v v^H on indices k+1..n. Apply from the left, then right.
        for j in 0..n {
            let s: C64 = (k + 1..n).map(|i| v[i - k - 1].conj() * w[i * n + j]).sum();
            for i in k + 1..n {
                w[i * n + j] -= v[i - k - 1] * s * 2.0;
            }
        }
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| w[i * n + j] * v[j - k - 1]).sum();
            for j in k + 1..n {
                w[i * n + j] -= s * v[j - k - 1].conj() * 2.0;
            }
            let s: C64 = (k + 1..n).map(|j| q[i * n + j] * v[j - k - 1]).sum();
            for j in k + 1..n {
                q[i * n + j] -= s * v[j - k - 1].conj() * 2.0;
            }
        }
    }

    // Phase the off-diagonal real: T' = D^H T D.
    let mut d = vec![C64::new(1.0, 0.0); n];
    let mut diag: Vec<f64> = (0..n).map(|i| w[i * n + i].re).collect();
    let mut off = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let t = w[(k + 1) * n + k];
        let r = t.norm();
        off[k] = r;
        d[k + 1] = if r == 0.0 { d[k] } else { d[k] * (t / r) };
    }
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut diag, &mut off, &mut z, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    // V = Q D Z
    let mut vecs = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (c, &j) in order.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += q[i * n + k] * d[k] * z[k * n + j];
            }
            vecs[i * n + c] = s;
        }
    }
    Ok((values, Mat::new(n, n, vecs)?))
}

/// Implicit QL with Wilkinson-type shifts on a real symmetric tridiagonal
/// matrix; `e[i]` couples `d[i]` and `d[i+1]`. Rotations accumulate in `z`.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    attempts: QL_MAX_ITER,
                    reason: "tridiagonal QL".into(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{diff_norm_reference, eigenvalues_reference, matmul_reference};
    use crate::shatter::sample_gue;
    use crate::PrecisionBudget;

    #[test]
    fn matches_oracle_and_diagonalizes() {
        for (n, seed) in [(1, 0), (2, 1), (3, 2), (9, 3), (33, 4)] {
            let a = sample_gue(n, &PrecisionBudget::native(), seed).unwrap();
            let (vals, v) = eigh(&a).unwrap();
            let want = eigenvalues_reference(&a).unwrap();
            for (x, y) in vals.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
            let av = matmul_reference(&a, &v).unwrap();
            let vd = Mat::from_fn(n, n, |i, j| v.get(i, j) * vals[j]);
            assert!(diff_norm_reference(&av, &vd).unwrap() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let a = Mat::from_diag(&[0.5, 0.5, 0.5, -0.25]);
        let (vals, _) = eigh(&a).unwrap();
        assert_eq!(vals, vec![-0.25, 0.5, 0.5, 0.5]);
    }
}
