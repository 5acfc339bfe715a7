//! Seeded test problems. These build matrices with known spectra and
//! therefore use the reference routines in [`crate::oracle`]; the solvers
//! themselves never do.

use crate::dft::KsProblem;
use crate::error::{Error, Result};
use crate::fparith::PrecisionBudget;
use crate::matcore::{Machine, Mat, C64};
use crate::oracle::{hermitian_from_spectrum, norm_reference, orthonormalize};
use crate::shatter::{derive_seed, sample_gue, shatterh, NoiseStream, ShatterResult};

fn require_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("problem size must be at least 1".into()));
    }
    Ok(())
}

/// Haar-like unitary from orthonormalizing a complex Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> Result<Mat> {
    require_size(n)?;
    let mut stream = NoiseStream::new(seed);
    let b = PrecisionBudget::native();
    let z = Mat::from_fn(n, n, |i, j| stream.gaussian((i * n + j) as u64, 1.0, &b));
    orthonormalize(&z)
}

/// `Q diag(values) Q^H` with a random unitary `Q`.
pub fn planted_spectrum(values: &[f64], seed: u64) -> Result<Mat> {
    let q = random_unitary(values.len(), seed)?;
    hermitian_from_spectrum(&q, values)
}

/// GUE sample scaled to spectral norm `norm`.
pub fn random_hermitian(n: usize, norm: f64, seed: u64) -> Result<Mat> {
    require_size(n)?;
    let b = PrecisionBudget::native();
    let g = sample_gue(n, &b, seed)?;
    let s = norm_reference(&g)?;
    if s == 0.0 {
        return Ok(g);
    }
    Ok(g.scale(norm / s, &b))
}

/// A random Hermitian matrix of norm 1/2 after shattering with `gamma`.
pub fn shattered(n: usize, gamma: f64, seed: u64) -> Result<ShatterResult> {
    let a = random_hermitian(n, 0.5, derive_seed(seed, 0))?;
    shatterh(&a, gamma, &Machine::native(), derive_seed(seed, 1))
}

/// Hermitian positive-definite matrix with eigenvalues log-spaced between
/// `1/kappa` and 1.
pub fn hpd(n: usize, kappa: f64, seed: u64) -> Result<Mat> {
    require_size(n)?;
    if !(kappa >= 1.0) {
        return Err(Error::Precondition(format!("condition target {kappa} must be >= 1")));
    }
    let values: Vec<f64> = if n == 1 {
        vec![1.0]
    } else {
        (0..n).map(|i| kappa.powf(-(i as f64) / (n - 1) as f64)).collect()
    };
    planted_spectrum(&values, seed)
}

/// Nearest-neighbour chain with hopping `t` and zero on-site energy.
pub fn tight_binding_chain(n: usize, hopping: f64) -> Result<Mat> {
    require_size(n)?;
    Mat::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            C64::new(hopping, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .certify_hermitian()
}

/// Closed-form eigenvalues `2 t cos(j pi / (n + 1))` of the chain,
/// nondecreasing.
pub fn tight_binding_spectrum(n: usize, hopping: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|j| 2.0 * hopping * (j as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Matrix whose spectrum repeats each of `levels` about `n / levels.len()`
/// times. Returns the matrix and its planted, nondecreasing spectrum.
pub fn degenerate_spectrum(n: usize, levels: &[f64], seed: u64) -> Result<(Mat, Vec<f64>)> {
    require_size(n)?;
    if levels.is_empty() {
        return Err(Error::Precondition("need at least one level".into()));
    }
    let mut values: Vec<f64> = (0..n).map(|i| levels[i * levels.len() / n]).collect();
    values.sort_by(f64::total_cmp);
    Ok((planted_spectrum(&values, seed)?, values))
}

/// Random spectrum in `[-1/2, 1/2]` with the `k` lowest eigenvalues below
/// `-gap/2` and the rest above `gap/2`.
pub fn gapped_spectrum(n: usize, k: usize, gap: f64, seed: u64) -> Result<(Mat, Vec<f64>)> {
    require_size(n)?;
    if k > n || !(gap > 0.0 && gap < 1.0) {
        return Err(Error::Precondition(format!(
            "need k <= n and gap in (0, 1), got k={k} gap={gap}"
        )));
    }
    let mut stream = NoiseStream::new(derive_seed(seed, 7));
    let b = PrecisionBudget::native();
    let half = gap / 2.0;
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let z = stream.gaussian(i as u64, 1.0, &b);
            let t = 0.5 + z.re.atan() / std::f64::consts::PI;
            let mag = half + t * (0.5 - half);
            if i < k {
                -mag
            } else {
                mag
            }
        })
        .collect();
    // pin the band edges so the Fermi gap is exactly `gap`
    if k > 0 {
        values[0] = -half;
    }
    if k < n {
        values[k] = half;
    }
    values.sort_by(f64::total_cmp);
    Ok((planted_spectrum(&values, seed)?, values))
}

/// Generalized Kohn-Sham style problem: Hamiltonian with a Fermi gap at
/// `k`, overlap `I + 0.1 (nearest-neighbour)` and `queries` random
/// basis-evaluation rows.
pub fn ks_problem(n: usize, k: usize, queries: usize, seed: u64) -> Result<KsProblem> {
    if n < 2 {
        return Err(Error::Precondition("a Kohn-Sham problem needs n >= 2".into()));
    }
    let (h, _) = gapped_spectrum(n, k, 0.2, derive_seed(seed, 1))?;
    let s = Mat::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.1, 0.0),
        _ => C64::new(0.0, 0.0),
    })
    .certify_hermitian()?;
    let mut stream = NoiseStream::new(derive_seed(seed, 2));
    let b = PrecisionBudget::native();
    let x = Mat::from_fn(queries, n, |i, j| {
        C64::new(stream.gaussian((i * n + j) as u64, 1.0, &b).re, 0.0)
    });
    KsProblem::new(h, Some(s), k, if queries > 0 { Some(x) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{condition_number_reference, eigenvalues_reference};

    #[test]
    fn hpd_hits_condition_target() {
        let m = hpd(12, 100.0, 3).unwrap();
        let k = condition_number_reference(&m).unwrap();
        assert!((50.0..=200.0).contains(&k), "kappa {k}");
    }

    #[test]
    fn chain_matches_closed_form() {
        let h = tight_binding_chain(10, 0.5).unwrap();
        let got = eigenvalues_reference(&h).unwrap();
        let want = tight_binding_spectrum(10, 0.5);
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn deterministic_and_planted() {
        assert_eq!(
            random_hermitian(8, 0.9, 1).unwrap(),
            random_hermitian(8, 0.9, 1).unwrap()
        );
        let (a, vals) = degenerate_spectrum(9, &[-0.5, 0.0, 0.25], 4).unwrap();
        assert_eq!(vals, vec![-0.5, -0.5, -0.5, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25]);
        let got = eigenvalues_reference(&a).unwrap();
        for (x, y) in got.iter().zip(&vals) {
            assert!((x - y).abs() <= 1e-13);
        }
        let (_, vals) = gapped_spectrum(10, 4, 0.1, 2).unwrap();
        assert!((vals[4] - vals[3] - 0.1).abs() <= 1e-15);
        assert!(vals.iter().all(|x| x.abs() <= 0.5));
    }
}
