//! Matrix sign function by Newton's iteration `X <- (X + X^-1) / 2`, and the
//! spectral projectors it induces.

use crate::error::{Error, Result};
use crate::fparith::budget_sgn;
use crate::matcore::{herm, invert, Machine, Mat, C64};

/// The pair of Apollonius disks `|m(z)| <= alpha` and `1/|m(z)| <= alpha`
/// with `m(z) = (1 - z) / (1 + z)`. Newton's iteration contracts inside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApolloniusRegion {
    pub alpha: f64,
    /// Center of the right disk.
    pub center: f64,
    /// Radius of both disks.
    pub radius: f64,
}

impl ApolloniusRegion {
    pub fn new(alpha: f64) -> Result<ApolloniusRegion> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Precondition(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let d = 1.0 - alpha * alpha;
        Ok(ApolloniusRegion {
            alpha,
            center: (1.0 + alpha * alpha) / d,
            radius: 2.0 * alpha / d,
        })
    }

    /// Distance from the right disk to the imaginary axis, `(1-a)/(1+a)`.
    pub fn margin(&self) -> f64 {
        (1.0 - self.alpha) / (1.0 + self.alpha)
    }

    /// Membership without forming `m(z)`, so `z = -1` is handled.
    pub fn contains(&self, z: C64) -> bool {
        let num = (C64::new(1.0, 0.0) - z).norm();
        let den = (C64::new(1.0, 0.0) + z).norm();
        num <= self.alpha * den || den <= self.alpha * num
    }

    /// Real points of the region: `margin <= |x| <= 1 / margin`.
    pub fn real_extent(&self) -> (f64, f64) {
        (self.margin(), 1.0 / self.margin())
    }
}

/// `m(z) = (1 - z) / (1 + z)`.
pub fn mobius(z: C64) -> C64 {
    (C64::new(1.0, 0.0) - z) / (C64::new(1.0, 0.0) + z)
}

/// Largest admissible gap estimate, `17 / (6 * 199)`.
pub const MAX_GAP_FOR_ALPHA: f64 = 17.0 / 1194.0;

/// `alpha = (17 - 6g) / (17 + 6g)`: the region that holds the shifted
/// spectrum when the Fermi gap estimate is `g`.
pub fn alpha_for_gap(gap_estimate: f64) -> Result<f64> {
    if !(gap_estimate > 0.0) {
        return Err(Error::Precondition(format!(
            "gap estimate {gap_estimate} must be positive"
        )));
    }
    if gap_estimate >= MAX_GAP_FOR_ALPHA {
        return Err(Error::GapTooLarge(gap_estimate));
    }
    Ok((17.0 - 6.0 * gap_estimate) / (17.0 + 6.0 * gap_estimate))
}

/// Parameters of one sign computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgnParams {
    /// Target accuracy, in (0, 1/12).
    pub delta: f64,
    /// Pseudospectral radius certified to lie inside the Apollonius region.
    pub eps_pseudo: f64,
    pub alpha: f64,
    /// Stop once an update moves less than `delta / 4` in Frobenius norm.
    pub early_exit: bool,
}

impl SgnParams {
    pub fn new(delta: f64, eps_pseudo: f64, alpha: f64) -> SgnParams {
        SgnParams {
            delta,
            eps_pseudo,
            alpha,
            early_exit: false,
        }
    }

    /// Parameters derived from a spectral gap estimate around the origin:
    /// `alpha = alpha_for_gap(g)` and `eps_pseudo = g / 32`.
    pub fn from_gap(delta: f64, gap_estimate: f64) -> Result<SgnParams> {
        Ok(SgnParams::new(delta, gap_estimate / 32.0, alpha_for_gap(gap_estimate)?))
    }

    pub fn with_early_exit(mut self, on: bool) -> SgnParams {
        self.early_exit = on;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SgnResult {
    pub s: Mat,
    pub iterations_run: u32,
    /// Iteration count `N` prescribed for these parameters.
    pub iterations_budgeted: u32,
    pub delta: f64,
    pub eps_pseudo: f64,
    pub alpha: f64,
}

/// One Newton step. Hermitian iterates are re-symmetrized.
fn newton_step(x: &Mat, machine: &Machine) -> Result<Mat> {
    let b = &machine.budget;
    let xi = invert(x, machine).map_err(|e| match e {
        Error::Singular(s) => Error::Diverged(format!("iterate became singular: {s}")),
        other => other,
    })?;
    let next = x.add(&xi, b)?.scale(0.5, b);
    let next = if x.hermitian_certified() { herm(&next)? } else { next };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged("non-finite Newton iterate".into()))
    }
}

/// Sign function with the iteration count of the accuracy theorem for
/// `params`. The machine must meet the theorem's precision budget; on a
/// native machine that budget is a bit count only and is not enforced.
pub fn sgn(a: &Mat, params: &SgnParams, machine: &Machine) -> Result<SgnResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("sign of a non-square matrix".into()));
    }
    let n = a.rows();
    let (required, iters) = budget_sgn(n, params.alpha, params.delta, params.eps_pseudo, &machine.consts)?;
    machine.budget.check("sgn", &required)?;
    let mut x = a.clone();
    let mut run = 0;
    while run < iters {
        let next = newton_step(&x, machine)?;
        run += 1;
        let moved = if params.early_exit {
            next.sub(&x, &machine.budget)?.frobenius()
        } else {
            f64::INFINITY
        };
        x = next;
        if moved <= params.delta / 4.0 {
            break;
        }
    }
    Ok(SgnResult {
        s: x,
        iterations_run: run,
        iterations_budgeted: iters,
        delta: params.delta,
        eps_pseudo: params.eps_pseudo,
        alpha: params.alpha,
    })
}

/// Newton's iteration run to convergence, without a precision budget.
/// Returns the sign approximation and the number of steps taken.
pub(crate) fn sign_until_converged(a: &Mat, machine: &Machine, tol: f64, max_iter: usize) -> Result<(Mat, usize)> {
    let mut x = a.clone();
    for k in 1..=max_iter {
        let next = newton_step(&x, machine)?;
        let moved = next.sub(&x, &machine.budget)?.frobenius();
        x = next;
        if moved <= tol * x.frobenius().max(1.0) {
            return Ok((x, k));
        }
    }
    Err(Error::NoConvergence {
        attempts: max_iter,
        reason: "Newton sign iteration".into(),
    })
}

/// `P+ = herm((I + S) / 2)` and `P- = I - P+`. The sum `P+ + P-` is exactly
/// `I` whenever the diagonal of `S` lies in `[-1, 1]`.
pub fn projectors_from_sign(s: &Mat) -> Result<(Mat, Mat)> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch("projector of a non-square matrix".into()));
    }
    let n = s.rows();
    let plus = herm(&Mat::from_fn(n, n, |i, j| {
        let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        (d + s.get(i, j)) * 0.5
    }))?;
    let minus = herm(&Mat::from_fn(n, n, |i, j| {
        let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        d - plus.get(i, j)
    }))?;
    Ok((plus, minus))
}
