//! Gaussian sampling and Hermitian pseudospectral shattering.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fparith::{budget_shatterh, PrecisionBudget};
use crate::matcore::{herm, Machine, Mat, C64};

/// Independent sub-seed for a labelled sub-task.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream of uniform pairs: draw `k` depends only on
/// `(seed, k)`, never on the order in which draws are requested.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> NoiseStream {
        NoiseStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Two uniforms, the first in (0, 1] and the second in [0, 1).
    fn uniforms(&mut self, index: u64) -> (f64, f64) {
        self.rng.set_word_pos(u128::from(index) * 4);
        let a = self.rng.next_u64() >> 11;
        let b = self.rng.next_u64() >> 11;
        let scale = 1.0 / (1u64 << 53) as f64;
        ((a + 1) as f64 * scale, b as f64 * scale)
    }

    /// Complex Gaussian with `E|g|^2 = sigma^2`, draw number `index`.
    pub fn gaussian(&mut self, index: u64, sigma: f64, budget: &PrecisionBudget) -> C64 {
        let (u1, u2) = self.uniforms(index);
        sample_gaussian(sigma, u1, u2, budget)
    }
}

/// Box-Muller from two uniforms with every step rounded by `budget`.
/// `sigma = 0` gives exactly zero.
pub fn sample_gaussian(sigma: f64, u1: f64, u2: f64, budget: &PrecisionBudget) -> C64 {
    let f = |x: f64| budget.fl(x);
    let r = f(sigma * budget.sqrt(f(-f(u1.ln()))));
    let theta = f(f(2.0 * PI) * u2);
    C64::new(f(r * f(theta.cos())), f(r * f(theta.sin())))
}

/// GUE sample `(Z + Z^H) / sqrt(2n)` with standard complex Gaussian `Z`.
pub fn sample_gue(n: usize, budget: &PrecisionBudget, seed: u64) -> Result<Mat> {
    if n == 0 {
        return Err(Error::Precondition("GUE sample needs n >= 1".into()));
    }
    let mut stream = NoiseStream::new(seed);
    let z: Vec<C64> = (0..n * n).map(|k| stream.gaussian(k as u64, 1.0, budget)).collect();
    let s = budget.fl(1.0 / budget.sqrt(2.0 * n as f64));
    let g = Mat::from_fn(n, n, |i, j| {
        budget.scale(budget.add(z[i * n + j], z[j * n + i].conj()), s)
    });
    herm(&g)
}

/// Output of [`shatterh`].
#[derive(Debug, Clone)]
pub struct ShatterResult {
    /// Perturbed matrix, Hermitian-certified.
    pub x: Mat,
    pub gamma: f64,
    /// `gamma / (2 n^3)`: minimum gap guaranteed with probability `1 - 3/n`.
    pub claimed_gap: f64,
    /// `8 gamma`: bound on `||X - A||` under the same event.
    pub claimed_drift: f64,
    pub seed: u64,
}

/// Add a scaled GUE perturbation, `X = A + gamma (Z + Z^H)` with
/// `E|Z_ij|^2 = 1/(2n)`, rounding after each of the three matrix steps.
///
/// Rounding commutes with conjugation, so `Z + Z^H` and every later step
/// stay exactly Hermitian.
pub fn shatterh(a: &Mat, gamma: f64, machine: &Machine, seed: u64) -> Result<ShatterResult> {
    if !a.hermitian_certified() {
        return Err(Error::Precondition("shatterh needs a Hermitian-certified input".into()));
    }
    let n = a.rows();
    let required = budget_shatterh(n, gamma, &machine.consts)?;
    let b = &machine.budget;
    b.check("shatterh", &required)?;
    #[cfg(debug_assertions)]
    {
        let est = a.norm_estimate();
        if est > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "shatterh needs ||A|| <= 1, estimate {est}"
            )));
        }
    }
    let sigma = b.sqrt(b.fl(1.0 / (2.0 * n as f64)));
    let mut stream = NoiseStream::new(seed);
    let z: Vec<C64> = (0..n * n).map(|k| stream.gaussian(k as u64, sigma, b)).collect();
    let x = Mat::from_fn(n, n, |i, j| {
        let g1 = b.add(z[i * n + j], z[j * n + i].conj());
        let g2 = b.scale(g1, gamma);
        b.add(a.get(i, j), g2)
    });
    let x = x.require_finite("")?.certify_hermitian()?;
    let nf = n as f64;
    Ok(ShatterResult {
        x,
        gamma,
        claimed_gap: gamma / (2.0 * nf * nf * nf),
        claimed_drift: 8.0 * gamma,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fparith::round_significand;
    use crate::oracle::{diff_norm_reference, eigenvalues_reference, norm_reference};
    use proptest::prelude::*;

    #[test]
    fn zero_sigma_is_exact_zero() {
        let mut s = NoiseStream::new(3);
        for k in 0..100 {
            assert_eq!(s.gaussian(k, 0.0, &PrecisionBudget::native()), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut s = NoiseStream::new(42);
        let b = PrecisionBudget::native();
        let n = 100_000;
        let (mut mean, mut second) = (C64::new(0.0, 0.0), 0.0);
        for k in 0..n {
            let g = s.gaussian(k, 1.0, &b);
            mean += g;
            second += g.norm_sqr();
        }
        mean /= n as f64;
        second /= n as f64;
        assert!(mean.norm() <= 0.02, "mean {mean}");
        assert!((second - 1.0).abs() <= 0.03, "second moment {second}");
    }

    #[test]
    fn draws_are_order_independent() {
        let b = PrecisionBudget::native();
        let mut s1 = NoiseStream::new(9);
        let forward: Vec<C64> = (0..20).map(|k| s1.gaussian(k, 1.0, &b)).collect();
        let mut s2 = NoiseStream::new(9);
        for k in (0..20).rev() {
            assert_eq!(s2.gaussian(k, 1.0, &b), forward[k as usize]);
        }
    }

    #[test]
    fn gue_entry_variance() {
        let n = 4;
        let trials = 10_000;
        let b = PrecisionBudget::native();
        let mut acc = vec![0.0; n * n];
        for t in 0..trials {
            let g = sample_gue(n, &b, derive_seed(5, t)).unwrap();
            assert!(g.hermitian_certified());
            for (a, z) in acc.iter_mut().zip(g.data()) {
                *a += z.norm_sqr();
            }
        }
        for v in acc {
            let var = v / trials as f64;
            assert!((var * n as f64 - 1.0).abs() <= 0.1, "variance {var}");
        }
    }

    #[test]
    fn gue_norm_tail() {
        let b = PrecisionBudget::native();
        for t in 0..1000 {
            let g = sample_gue(16, &b, derive_seed(77, t)).unwrap();
            assert!(norm_reference(&g).unwrap() <= 7.8);
        }
    }

    #[test]
    fn zero_matrix_region_bound() {
        let m = Machine::native();
        let a = Mat::zeros(8, 8).certify_hermitian().unwrap();
        for t in 0..200 {
            let r = shatterh(&a, 0.25, &m, t).unwrap();
            let x = norm_reference(&r.x).unwrap();
            assert!(x / 0.25 <= 8.0 && x < 2.0, "trial {t}: ||X|| = {x}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let a = Mat::zeros(16, 16).certify_hermitian().unwrap();
        let m = Machine::emulated(20).unwrap();
        assert!(matches!(
            shatterh(&a, 1.0 / 32.0, &m, 1),
            Err(Error::BudgetInfeasible { .. })
        ));
        let m = Machine::emulated(32).unwrap();
        assert!(shatterh(&a, 1.0 / 32.0, &m, 1).is_ok());
        assert!(shatterh(&Mat::zeros(16, 16), 0.1, &Machine::native(), 1).is_err());
    }

    #[test]
    fn emulated_output_is_representable() {
        let a = Mat::from_diag(&[0.5, -0.25, 0.0, 0.125]);
        let m = Machine::emulated(40).unwrap();
        let r = shatterh(&a, 0.1, &m, 4).unwrap();
        for z in r.x.data() {
            assert_eq!(round_significand(z.re, 39), z.re);
            assert_eq!(round_significand(z.im, 39), z.im);
        }
    }

    #[test]
    fn claimed_quantities() {
        let a = Mat::identity(4).scale(0.5, &PrecisionBudget::native());
        let r = shatterh(&a, 0.125, &Machine::native(), 0).unwrap();
        assert_eq!(r.claimed_gap, 0.125 / 128.0);
        assert_eq!(r.claimed_drift, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn deterministic_hermitian_and_weyl(n in 2usize..10, seed in any::<u64>(), gamma in 0.001f64..0.49) {
            let base = sample_gue(n, &PrecisionBudget::native(), seed ^ 1).unwrap();
            let a = base.scale(1.0 / (norm_reference(&base).unwrap() * 1.01), &PrecisionBudget::native());
            let m = Machine::native();
            let r1 = shatterh(&a, gamma, &m, seed).unwrap();
            let r2 = shatterh(&a, gamma, &m, seed).unwrap();
            prop_assert_eq!(&r1.x, &r2.x);
            prop_assert!(r1.x.is_exactly_hermitian());
            let drift = diff_norm_reference(&r1.x, &a).unwrap();
            let ex = eigenvalues_reference(&r1.x).unwrap();
            let ea = eigenvalues_reference(&a).unwrap();
            for (x, y) in ex.iter().zip(&ea) {
                prop_assert!((x - y).abs() <= drift * (1.0 + 1e-12) + 1e-14);
            }
        }
    }
}
