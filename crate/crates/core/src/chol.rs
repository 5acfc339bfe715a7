//! Recursive block Cholesky factorization.
//!
//! `M = [[A, B^H], [B, C]]` factors as `L = [[L11, 0], [B A^-1 L11, L22]]`
//! where `L11 L11^H = A` and `L22 L22^H = C - B A^-1 B^H`. All four matrix
//! operations go through [`matmul`], [`invert`] and [`herm`], so their
//! rounding is the machine's.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fparith::budget_chol;
use crate::matcore::{herm, invert, matmul, vec_norm, Machine, Mat, C64};

#[derive(Debug, Clone)]
pub struct CholResult {
    /// Lower triangular with a real positive diagonal.
    pub l: Mat,
    /// Claimed bound on `||L L^H - M||`.
    pub backward_bound: f64,
    pub recursion_depth: u32,
    /// Condition number estimate used for `backward_bound`.
    pub kappa_estimate: f64,
}

/// Summary suitable for reports.
#[derive(Debug, Clone, Serialize)]
pub struct CholSummary {
    pub n: usize,
    pub backward_bound: f64,
    pub recursion_depth: u32,
    pub kappa_estimate: f64,
}

impl CholResult {
    pub fn summary(&self) -> CholSummary {
        CholSummary {
            n: self.l.rows(),
            backward_bound: self.backward_bound,
            recursion_depth: self.recursion_depth,
            kappa_estimate: self.kappa_estimate,
        }
    }
}

/// `(A, B, C)` with `A` the leading `floor(n/2)` block and `B` the block
/// below it.
pub fn schur_blocks(m: &Mat) -> Result<(Mat, Mat, Mat)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("Schur blocks of a non-square matrix".into()));
    }
    let n = m.rows();
    if n < 2 {
        return Err(Error::Precondition("Schur blocks need n >= 2".into()));
    }
    let k = n / 2;
    Ok((m.block(0..k, 0..k), m.block(k..n, 0..k), m.block(k..n, k..n)))
}

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// The reported bound is the theorem's `eps ||M||` evaluated at the
/// machine's unit roundoff and an estimate of `kappa(M)`.
pub fn chol(m: &Mat, machine: &Machine) -> Result<CholResult> {
    chol_traced(m, machine, &mut |_| {})
}

/// [`chol`] for a target accuracy, refusing machines below the theorem's
/// precision for the supplied condition number.
pub fn chol_for(m: &Mat, kappa: f64, eps: f64, machine: &Machine) -> Result<CholResult> {
    let required = budget_chol(m.rows().max(1), kappa, eps, &machine.consts)?;
    machine.budget.check("chol", &required)?;
    let mut r = chol(m, machine)?;
    r.backward_bound = eps * m.norm_estimate();
    Ok(r)
}

/// [`chol`] calling `observe` on every Schur complement it forms.
pub(crate) fn chol_traced(m: &Mat, machine: &Machine, observe: &mut dyn FnMut(&Mat)) -> Result<CholResult> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("Cholesky of a non-square matrix".into()));
    }
    if !m.hermitian_certified() {
        return Err(Error::Precondition("chol needs a Hermitian-certified input".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::Precondition("chol needs n >= 1".into()));
    }
    let (l, depth) = factor(m, machine, observe)?;
    let norm = m.norm_estimate();
    let kappa = (norm * inverse_norm_estimate(&l)).max(1.0);
    let k = &machine.consts;
    let ln = if n > 1 { (n as f64).log2() } else { 0.0 };
    let u = machine.u();
    let bound = u * k.c1 * (n as f64).powf(k.c2) * kappa.powf(k.c3 * ln) * norm;
    Ok(CholResult {
        l,
        backward_bound: if bound.is_finite() { bound } else { f64::MAX },
        recursion_depth: depth,
        kappa_estimate: kappa,
    })
}

fn factor(m: &Mat, machine: &Machine, observe: &mut dyn FnMut(&Mat)) -> Result<(Mat, u32)> {
    let n = m.rows();
    let b = &machine.budget;
    if n == 1 {
        let d = m.get(0, 0).re;
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("pivot {d:e}")));
        }
        return Ok((Mat::from_diag(&[b.sqrt(d)]), 0));
    }
    let (a, bl, c) = schur_blocks(m)?;
    let (l11, d1) = factor(&a, machine, observe)?;
    let bai = matmul(&bl, &invert(&a, machine).map_err(as_breakdown)?, machine)?;
    let l21 = matmul(&bai, &l11, machine)?;
    let t = herm(&matmul(&bai, &bl.adjoint(), machine)?)?;
    let s = herm(&c.sub(&t, b)?)?;
    if let Some(i) = (0..s.rows()).find(|&i| !(s.get(i, i).re > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "Schur complement diagonal {i} is {:e}",
            s.get(i, i).re
        )));
    }
    observe(&s);
    let (l22, d2) = factor(&s, machine, observe)?;
    let k = a.rows();
    let zero = Mat::zeros(k, n - k);
    Ok((Mat::from_blocks(&l11, &zero, &l21, &l22)?, 1 + d1.max(d2)))
}

fn as_breakdown(e: Error) -> Error {
    match e {
        Error::Singular(s) => Error::NotPositiveDefinite(format!("leading block singular: {s}")),
        other => other,
    }
}

/// Estimate of `||(L L^H)^-1||` by power iteration with
/// triangular solves.
fn inverse_norm_estimate(l: &Mat) -> f64 {
    let n = l.rows();
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0, (i % 3) as f64 * 0.25)).collect();
    let mut est = 0.0;
    for _ in 0..20 {
        let nv = vec_norm(&v);
        if nv == 0.0 || !nv.is_finite() {
            break;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let w = back_solve(l, &forward_solve(l, &v));
        est = vec_norm(&w);
        v = w;
    }
    est
}

fn forward_solve(l: &Mat, x: &[C64]) -> Vec<C64> {
    let n = l.rows();
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = x[i];
        for j in 0..i {
            s -= l.get(i, j) * y[j];
        }
        y[i] = s / l.get(i, i);
    }
    y
}

fn back_solve(l: &Mat, y: &[C64]) -> Vec<C64> {
    let n = l.rows();
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= l.get(j, i).conj() * x[j];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::hpd;
    use crate::oracle::{
        chol_reference, condition_number_reference, diff_norm_reference, matmul_reference, norm_reference,
    };
    use proptest::prelude::*;

    fn residual(m: &Mat, l: &Mat) -> f64 {
        diff_norm_reference(&matmul_reference(l, &l.adjoint()).unwrap(), m).unwrap()
    }

    fn assert_triangular(l: &Mat) {
        for i in 0..l.rows() {
            for j in i + 1..l.cols() {
                assert_eq!(l.get(i, j), C64::new(0.0, 0.0));
            }
            assert!(l.get(i, i).im == 0.0 && l.get(i, i).re > 0.0);
        }
    }

    #[test]
    fn identity_and_small() {
        let m = Machine::native();
        let r = chol(&Mat::identity(5).certify_hermitian().unwrap(), &m).unwrap();
        assert_eq!(r.l, Mat::identity(5));
        let a = Mat::from_real(2, 2, &[4.0, 2.0, 2.0, 3.0])
            .unwrap()
            .certify_hermitian()
            .unwrap();
        let r = chol(&a, &m).unwrap();
        let want = chol_reference(&a).unwrap();
        assert!(diff_norm_reference(&r.l, &want).unwrap() < 1e-15);
        assert_eq!(r.l.get(0, 0).re, 2.0);
        assert_eq!(r.l.get(1, 0).re, 1.0);
        assert!((r.l.get(1, 1).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.recursion_depth, 1);
    }

    #[test]
    fn random_hpd_native() {
        let m = Machine::native();
        for (n, seed) in [(7, 1), (16, 2), (64, 3)] {
            let a = hpd(n, 100.0, seed).unwrap();
            let r = chol(&a, &m).unwrap();
            assert_triangular(&r.l);
            let norm = norm_reference(&a).unwrap();
            assert!(residual(&a, &r.l) <= 1e-10 * norm);
            assert_eq!(r.recursion_depth, (n as f64).log2().ceil() as u32);
            let kappa = condition_number_reference(&a).unwrap();
            assert!(r.kappa_estimate <= kappa * 1.000001 && r.kappa_estimate >= kappa / 10.0);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = Mat::from_diag(&[1.0, -1.0, 2.0]).certify_hermitian().unwrap();
        assert!(matches!(
            chol(&a, &Machine::native()),
            Err(Error::NotPositiveDefinite(_))
        ));
        let a = Mat::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0])
            .unwrap()
            .certify_hermitian()
            .unwrap();
        assert!(matches!(
            chol(&a, &Machine::native()),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(chol(
            &Mat::from_real(2, 2, &[1.0, 0.5, 0.0, 1.0]).unwrap(),
            &Machine::native()
        )
        .is_err());
    }

    #[test]
    fn budget_checked_variant() {
        let a = hpd(8, 10.0, 4).unwrap();
        assert!(matches!(
            chol_for(&a, 10.0, 1e-6, &Machine::emulated(24).unwrap()),
            Err(Error::BudgetInfeasible { .. })
        ));
        // with the placeholder constants only kappa = 1 fits in 53 bits
        let a = hpd(8, 1.0, 4).unwrap();
        let r = chol_for(&a, 1.0, 1e-2, &Machine::native()).unwrap();
        assert!(residual(&a, &r.l) <= r.backward_bound);
    }

    #[test]
    fn schur_block_shapes() {
        let (a, b, c) = schur_blocks(&Mat::identity(2)).unwrap();
        assert_eq!((a.rows(), b.rows(), b.cols(), c.rows()), (1, 1, 1, 1));
        let (a, b, c) = schur_blocks(&Mat::identity(5)).unwrap();
        assert_eq!((a.rows(), b.rows(), b.cols(), c.rows()), (2, 3, 2, 3));
        assert!(schur_blocks(&Mat::identity(1)).is_err());
    }

    #[test]
    fn schur_complement_growth() {
        let a = hpd(32, 1e3, 5).unwrap();
        let norm = norm_reference(&a).unwrap();
        let kappa = condition_number_reference(&a).unwrap();
        let mut seen = 0;
        chol_traced(&a, &Machine::native(), &mut |s| {
            seen += 1;
            assert!(norm_reference(s).unwrap() <= 2.0 * norm);
            assert!(condition_number_reference(s).unwrap() <= 2.0 * kappa);
        })
        .unwrap();
        assert_eq!(seen, 31);
    }

    #[test]
    fn breakdown_under_low_precision() {
        let m = Machine::emulated(12).unwrap();
        let broke = (0..20).any(|seed| {
            let a = hpd(32, 1e4, 100 + seed).unwrap();
            match chol(&a, &m) {
                Err(_) => true,
                Ok(r) => residual(&a, &r.l) > 1e-8 * norm_reference(&a).unwrap(),
            }
        });
        assert!(broke);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn factors_random_hpd(n in 1usize..24, seed in any::<u64>(), logk in 0.0f64..3.0) {
            let a = hpd(n, 10f64.powf(logk), seed).unwrap();
            let r = chol(&a, &Machine::native()).unwrap();
            let norm = norm_reference(&a).unwrap();
            prop_assert!(residual(&a, &r.l) <= 1e-8 * norm);
            prop_assert_eq!(r.recursion_depth, if n == 1 { 0 } else { (n as f64).log2().ceil() as u32 });
            let (ab, bb, cb) = schur_blocks(&a).unwrap_or((a.clone(), Mat::zeros(1, 1), a.clone()));
            prop_assert!(norm_reference(&ab).unwrap() <= norm * (1.0 + 1e-12));
            prop_assert!(norm_reference(&cb).unwrap() <= norm * (1.0 + 1e-12));
            prop_assert!(norm_reference(&bb).unwrap() <= norm / 2.0 * (1.0 + 1e-12));
        }
    }
}
