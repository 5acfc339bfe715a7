//! Floating-point machine model.
//!
//! A [`PrecisionBudget`] is either the native IEEE double machine, an emulated
//! machine with a narrower significand, or a target precision produced by one
//! of the stability theorems (`budget_*` functions). Emulated machines round
//! the result of every scalar add, sub, mul, div and sqrt to nearest, ties to
//! even; fused operations never happen.
//!
//! All logarithms in the budget formulas are base 2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a precision value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionSource {
    Native,
    Emulated(u32),
    Theorem(String),
}

/// Unit roundoff `u` together with its bit count.
///
/// For `Emulated(b)` the bit count includes the sign bit: the significand
/// carries `b - 1` bits and `u = 2^(1-b)`. Theorem budgets whose `u` would
/// fall below 2^-1000 keep only `log2(1/u)`; [`PrecisionBudget::u`] then
/// reports 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionBudget {
    u: f64,
    bits: u64,
    log2_inv_u: f64,
    source: PrecisionSource,
}

/// Largest `log2(1/u)` for which `u` itself is stored.
const MAX_STORED_LOG2: f64 = 1000.0;

impl PrecisionBudget {
    pub fn native() -> Self {
        PrecisionBudget {
            u: f64::EPSILON / 2.0,
            bits: 53,
            log2_inv_u: 53.0,
            source: PrecisionSource::Native,
        }
    }

    /// Emulated machine; `bits` in `2..=54` (significand `bits - 1`).
    pub fn emulated(bits: u32) -> Result<Self> {
        if !(2..=54).contains(&bits) {
            return Err(Error::InvalidPrecision(format!(
                "emulated width must be in 2..=54 bits, got {bits}"
            )));
        }
        let log2_inv_u = f64::from(bits - 1);
        Ok(PrecisionBudget {
            u: (-log2_inv_u).exp2(),
            bits: u64::from(bits),
            log2_inv_u,
            source: PrecisionSource::Emulated(bits),
        })
    }

    /// Budget `u = 2^(-log2_inv_u)` demanded by a named theorem.
    pub fn theorem(name: &str, log2_inv_u: f64) -> Self {
        let u = if log2_inv_u <= MAX_STORED_LOG2 {
            (-log2_inv_u).exp2()
        } else {
            0.0
        };
        PrecisionBudget {
            u,
            bits: log2_inv_u.ceil().max(2.0) as u64,
            log2_inv_u,
            source: PrecisionSource::Theorem(name.to_string()),
        }
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn log2_inv_u(&self) -> f64 {
        self.log2_inv_u
    }

    pub fn source(&self) -> &PrecisionSource {
        &self.source
    }

    pub fn is_emulated(&self) -> bool {
        matches!(self.source, PrecisionSource::Emulated(_))
    }

    /// True when `u` itself is stored (not just the bit count).
    pub fn representable(&self) -> bool {
        self.log2_inv_u <= MAX_STORED_LOG2
    }

    /// Significand width used for rounding, `None` for native arithmetic.
    pub fn significand_bits(&self) -> Option<u32> {
        match self.source {
            PrecisionSource::Emulated(b) => Some(b - 1),
            _ => None,
        }
    }

    /// Whether this machine is at least as precise as `required`.
    pub fn meets(&self, required: &PrecisionBudget) -> bool {
        self.log2_inv_u >= required.log2_inv_u
    }

    /// Apply a theorem budget to this machine.
    ///
    /// Representable theorem budgets are always enforced. Budgets that only
    /// exist as bit counts are enforced on emulated machines; native
    /// execution proceeds.
    pub fn check(&self, op: &'static str, required: &PrecisionBudget) -> Result<()> {
        let enforce = required.representable() || self.is_emulated();
        if enforce && !self.meets(required) {
            return Err(Error::BudgetInfeasible {
                op,
                required_bits: required.log2_inv_u,
                available_bits: self.log2_inv_u,
            });
        }
        Ok(())
    }

    /// `fl(x)` for a real scalar.
    #[inline]
    pub fn fl(&self, x: f64) -> f64 {
        match self.significand_bits() {
            Some(p) => round_significand(x, p),
            None => x,
        }
    }

    #[inline]
    pub fn fl_c(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.fl(z.re), self.fl(z.im))
    }

    #[inline]
    pub fn add(&self, a: Complex64, b: Complex64) -> Complex64 {
        Complex64::new(self.fl(a.re + b.re), self.fl(a.im + b.im))
    }

    #[inline]
    pub fn sub(&self, a: Complex64, b: Complex64) -> Complex64 {
        Complex64::new(self.fl(a.re - b.re), self.fl(a.im - b.im))
    }

    #[inline]
    pub fn mul(&self, a: Complex64, b: Complex64) -> Complex64 {
        let f = |x| self.fl(x);
        Complex64::new(f(f(a.re * b.re) - f(a.im * b.im)), f(f(a.re * b.im) + f(a.im * b.re)))
    }

    #[inline]
    pub fn scale(&self, a: Complex64, s: f64) -> Complex64 {
        Complex64::new(self.fl(a.re * s), self.fl(a.im * s))
    }

    pub fn div(&self, a: Complex64, b: Complex64) -> Complex64 {
        let f = |x| self.fl(x);
        if b.im == 0.0 {
            return Complex64::new(f(a.re / b.re), f(a.im / b.re));
        }
        let den = f(f(b.re * b.re) + f(b.im * b.im));
        let re = f(f(a.re * b.re) + f(a.im * b.im));
        let im = f(f(a.im * b.re) - f(a.re * b.im));
        Complex64::new(f(re / den), f(im / den))
    }

    #[inline]
    pub fn sqrt(&self, x: f64) -> f64 {
        self.fl(x.sqrt())
    }
}

impl Default for PrecisionBudget {
    fn default() -> Self {
        PrecisionBudget::native()
    }
}

/// `floor(log2 |x|)` for finite nonzero `x`.
fn exponent_of(x: f64) -> i32 {
    let raw = ((x.to_bits() >> 52) & 0x7ff) as i32;
    if raw == 0 {
        // subnormal
        exponent_of(x * 2f64.powi(64)) - 64
    } else {
        raw - 1023
    }
}

/// Multiply by `2^k` without intermediate overflow of the scale factor.
fn ldexp(mut x: f64, mut k: i32) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

/// Round `x` to a `p`-bit significand, nearest with ties to even.
pub fn round_significand(x: f64, p: u32) -> f64 {
    if x == 0.0 || !x.is_finite() || p >= 53 {
        return x;
    }
    let shift = p as i32 - 1 - exponent_of(x);
    ldexp(ldexp(x, shift).round_ties_even(), -shift)
}

/// `fl(x)` for a complex scalar, with overflow reported.
pub fn round_to(x: Complex64, budget: &PrecisionBudget) -> Result<Complex64> {
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::Precondition("round_to needs a finite input".into()));
    }
    let r = budget.fl_c(x);
    if r.re.is_finite() && r.im.is_finite() {
        Ok(r)
    } else {
        Err(Error::PrecisionOverflow)
    }
}

/// Constants of the stability contracts. Every field can be overridden from a
/// configuration file; unknown keys are rejected.
///
/// `c1..c3` and `rho1..rho3` are placeholders for the unquantified constants
/// of the Cholesky and generalized-reduction budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConstants {
    pub c_n: f64,
    pub c_inv: f64,
    pub c_herm: f64,
    /// `mu_mm(n) = n^mm_exponent`.
    pub mm_exponent: f64,
    /// `mu_inv(n) = n^inv_exponent`.
    pub inv_exponent: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl Default for StabilityConstants {
    fn default() -> Self {
        StabilityConstants::with_mm_exponent(2.0)
    }
}

impl StabilityConstants {
    /// Defaults for a multiplication backend whose `mu_mm(n) = n^e`.
    pub fn with_mm_exponent(e: f64) -> Self {
        StabilityConstants {
            c_n: 1.0,
            c_inv: 8.0,
            c_herm: 2.0,
            mm_exponent: e,
            inv_exponent: e + 10f64.log2(),
            c1: 1e3,
            c2: 3.0,
            c3: 20.0,
            rho1: 1e3,
            rho2: 3.0,
            rho3: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("c_n", self.c_n),
            ("c_inv", self.c_inv),
            ("c_herm", self.c_herm),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("rho3", self.rho3),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 1.0) {
                return Err(Error::Precondition(format!("constant {name} = {v} must be >= 1")));
            }
        }
        if !(self.mm_exponent >= 0.0 && self.inv_exponent >= 0.0) {
            return Err(Error::Precondition("exponents must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn mu_mm(&self, n: usize) -> f64 {
        (n.max(1) as f64).powf(self.mm_exponent)
    }

    pub fn mu_inv(&self, n: usize) -> f64 {
        (n.max(1) as f64).powf(self.inv_exponent)
    }

    /// `max(1, c_herm log n)`, the symmetrization inflation factor.
    pub fn herm_factor(&self, n: usize) -> f64 {
        (self.c_herm * log2n(n)).max(1.0)
    }

    /// `max(1, c_inv log n)`.
    pub fn inv_log_exponent(&self, n: usize) -> f64 {
        (self.c_inv * log2n(n)).max(1.0)
    }

    /// Global bound dominating `mu_mm`, `c_herm log(n) mu_mm` and `mu_inv`.
    pub fn mu(&self, n: usize) -> f64 {
        let mm = self.mu_mm(n);
        mm.max(self.herm_factor(n) * mm).max(self.mu_inv(n))
    }
}

fn log2n(n: usize) -> f64 {
    (n.max(1) as f64).log2()
}

/// Precision under which Hermitian shattering keeps half the exact gap:
/// `u = gamma / (152 (2 c_N + 1) n^3.5)`.
pub fn budget_shatterh(n: usize, gamma: f64, consts: &StabilityConstants) -> Result<PrecisionBudget> {
    if n < 1 {
        return Err(Error::Precondition("shattering needs n >= 1".into()));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::Precondition(format!("gamma = {gamma} must lie in (0, 1/2)")));
    }
    let u = gamma / (152.0 * (2.0 * consts.c_n + 1.0) * (n as f64).powf(3.5));
    Ok(PrecisionBudget::theorem("shatterh", -u.log2()))
}

/// Newton iteration count of the sign function:
/// `N = ceil(log(1/(1-a)) + 3 log log(1/(1-a)) + log log(1/(delta eps)) + 7.79)`.
pub fn sgn_iterations(alpha: f64, delta: f64, eps: f64) -> Result<u32> {
    let gap = 1.0 - alpha;
    if !(gap > 0.0 && gap < 0.01) {
        return Err(Error::AlphaOutOfRange(gap));
    }
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, 1/12)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1)")));
    }
    let l = (1.0 / gap).log2();
    let n = l + 3.0 * l.log2() + (1.0 / (delta * eps)).log2().log2() + 7.79;
    Ok(n.ceil() as u32)
}

/// Sign-function budget
/// `u = alpha^(2^(N+1) (c_inv log n + 3)) / (mu_inv(n) sqrt(n) N)`, kept as
/// a bit count since it underflows doubles for every admissible `alpha`.
pub fn budget_sgn(
    n: usize,
    alpha: f64,
    delta: f64,
    eps: f64,
    consts: &StabilityConstants,
) -> Result<(PrecisionBudget, u32)> {
    let iters = sgn_iterations(alpha, delta, eps)?;
    let nf = n.max(1) as f64;
    let exponent = (f64::from(iters) + 1.0).exp2() * (consts.c_inv * nf.log2() + 3.0);
    let log2_inv_u = exponent * (1.0 / alpha).log2() + (consts.mu_inv(n) * nf.sqrt() * f64::from(iters)).log2();
    Ok((PrecisionBudget::theorem("sgn", log2_inv_u), iters))
}

fn log_stable_budget(
    name: &str,
    n: usize,
    kappa: f64,
    eps: f64,
    (k1, k2, k3): (f64, f64, f64),
) -> Result<PrecisionBudget> {
    if n < 1 {
        return Err(Error::Precondition(format!("{name} needs n >= 1")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::Precondition(format!("condition number {kappa} must be >= 1")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1)")));
    }
    let ln = log2n(n);
    let log2_inv_u = k1.log2() + k2 * ln + k3 * ln * kappa.log2() - eps.log2();
    Ok(PrecisionBudget::theorem(name, log2_inv_u))
}

/// Cholesky budget `u = eps / (c1 n^c2 kappa^(c3 log n))`.
pub fn budget_chol(n: usize, kappa: f64, eps: f64, consts: &StabilityConstants) -> Result<PrecisionBudget> {
    log_stable_budget("chol", n, kappa, eps, (consts.c1, consts.c2, consts.c3))
}

/// Generalized-reduction budget `u = eps / (rho1 n^rho2 kappa(S)^(rho3 log n))`.
pub fn budget_transh(n: usize, kappa_s: f64, eps: f64, consts: &StabilityConstants) -> Result<PrecisionBudget> {
    log_stable_budget("transh", n, kappa_s, eps, (consts.rho1, consts.rho2, consts.rho3))
}
