//! Hermitian eigenvalues without gap assumptions.
//!
//! [`evalsh`] shatters the input with a small GUE perturbation, so that the
//! perturbed matrix has a minimum gap with high probability, and then asks a
//! backward-stable diagonalization ([`eig_backward`]) for its spectrum.
//! [`evalsh_rel`] repeats this with shrinking accuracy until the error is
//! relative to the smallest eigenvalue; [`norm_rel`] and
//! [`singular_values`] are built on the same loop.

mod dnc;
mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fparith::{budget_shatterh, PrecisionBudget};
use crate::matcore::{herm_mm, matmul, Machine, Mat};
use crate::shatter::{derive_seed, shatterh};

pub(crate) use dnc::pow2_at_least;

/// Retries of the probabilistic diagonalization, each with a fresh seed.
pub const EIG_ATTEMPTS: usize = 3;

/// Scaling applied before shattering.
const PHI: f64 = 16.0;

/// Diagonalization backend used by the eigenvalue algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EigBackend {
    /// Spectral divide and conquer on the working machine.
    #[default]
    DivideAndConquer,
    /// Householder tridiagonalization and implicit QL, always native.
    Tridiagonal,
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Columns ordered like `eigenvalues`.
    pub eigenvectors: Option<Mat>,
    /// Bound on `||A - V D V^-1||` for the input `A`.
    pub backward_error: f64,
    pub precision_used: PrecisionBudget,
    /// Accuracy targets tried, in order, by the iterative algorithms.
    pub trials_log: Vec<f64>,
    /// Diagonalization attempts consumed.
    pub attempts: usize,
}

/// Backward-approximate diagonalization `A ~ V D V^-1` with
/// `||A - V D V^-1|| <= delta`, using the default backend.
pub fn eig_backward(a: &Mat, delta: f64, machine: &Machine, seed: u64) -> Result<SpectralResult> {
    eig_backward_with(a, delta, machine, seed, EigBackend::DivideAndConquer)
}

pub fn eig_backward_with(
    a: &Mat,
    delta: f64,
    machine: &Machine,
    seed: u64,
    backend: EigBackend,
) -> Result<SpectralResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    if !a.hermitian_certified() {
        return Err(Error::Precondition(
            "eig_backward needs a Hermitian-certified input".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta = {delta} must be positive")));
    }
    if !a.is_finite() {
        return Err(Error::PrecisionOverflow);
    }
    let n = a.rows();
    let mut last = String::new();
    for attempt in 0..EIG_ATTEMPTS {
        let (values, vectors) = match backend {
            EigBackend::Tridiagonal => tridiag::eigh(a)?,
            EigBackend::DivideAndConquer => {
                let mut solver = dnc::Solver::new(machine, derive_seed(seed, attempt as u64), delta, n);
                match solver.solve(a) {
                    Ok(d) => sort_pairs(d.values, &d.vectors),
                    Err(Error::NoConvergence { reason, .. }) => {
                        last = reason;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let backward_error = certify(a, &values, &vectors)?;
        if backward_error <= delta {
            return Ok(SpectralResult {
                eigenvalues: values,
                eigenvectors: Some(vectors),
                backward_error,
                precision_used: machine.budget.clone(),
                trials_log: Vec::new(),
                attempts: attempt + 1,
            });
        }
        last = format!("backward error {backward_error:e} exceeds {delta:e}");
        if backend == EigBackend::Tridiagonal {
            return Err(Error::NoConvergence {
                attempts: 1,
                reason: last,
            });
        }
    }
    Err(Error::NoConvergence {
        attempts: EIG_ATTEMPTS,
        reason: last,
    })
}

fn sort_pairs(values: Vec<f64>, vectors: &Mat) -> (Vec<f64>, Mat) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    (sorted, Mat::from_fn(n, n, |i, j| vectors.get(i, order[j])))
}

/// Upper bound on `||A - V D V^-1||_F` from the residual and the departure
/// of `V` from orthonormality, evaluated natively.
fn certify(a: &Mat, values: &[f64], v: &Mat) -> Result<f64> {
    let n = a.rows();
    let native = Machine::native();
    let av = matmul(a, v, &native)?;
    let residual = Mat::from_fn(n, n, |i, j| av.get(i, j) - v.get(i, j) * values[j]).frobenius();
    let vhv = matmul(&v.adjoint(), v, &native)?;
    let defect = vhv.sub(&Mat::identity(n), &PrecisionBudget::native())?.frobenius();
    if defect >= 0.5 {
        return Ok(f64::INFINITY);
    }
    // Rounding in the two products above.
    let u = f64::EPSILON / 2.0;
    let dmax = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let slack = 2.0 * (n as f64 + 2.0) * u * v.frobenius() * (a.frobenius() + dmax);
    Ok((residual + slack) / (1.0 - defect).sqrt())
}

/// Eigenvalues of a Hermitian `A` with `||A|| <= 1`, each within `eps` of
/// the truth with high probability, whatever the gaps of `A`.
pub fn evalsh(a: &Mat, eps: f64, machine: &Machine, seed: u64) -> Result<SpectralResult> {
    evalsh_with(a, eps, machine, seed, EigBackend::DivideAndConquer)
}

pub fn evalsh_with(a: &Mat, eps: f64, machine: &Machine, seed: u64, backend: EigBackend) -> Result<SpectralResult> {
    if !a.hermitian_certified() {
        return Err(Error::Precondition("evalsh needs a Hermitian-certified input".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/2]")));
    }
    let n = a.rows();
    let nf = n as f64;
    let b = &machine.budget;
    let eps_scaled = eps / PHI;
    let gamma = eps_scaled / 16.0;
    let delta_eig = 0.25 * gamma / (2.0 * nf * nf * nf);
    let scaled = a.scale(1.0 / PHI, b);
    let shattered = shatterh(&scaled, gamma, machine, derive_seed(seed, 0)).map_err(|e| e.in_stage("shatterh"))?;
    let drift = shattered.x.sub(&scaled, &PrecisionBudget::native())?.frobenius();
    let eig = eig_backward_with(&shattered.x, delta_eig, machine, derive_seed(seed, 1), backend)
        .map_err(|e| e.in_stage("eig"))?;
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&x| b.fl(x * PHI)).collect();
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: eig.eigenvectors,
        backward_error: PHI * (drift + eig.backward_error),
        precision_used: b.clone(),
        trials_log: vec![eps],
        attempts: eig.attempts,
    })
}

/// Eigenvalues with error at most `eps` times the smallest eigenvalue
/// magnitude. `A` must be invertible.
pub fn evalsh_rel(a: &Mat, eps: f64, machine: &Machine, seed: u64) -> Result<SpectralResult> {
    relative_loop(a, eps, machine, seed, |vals| {
        vals.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    })
}

/// Spectral norm of a Hermitian `A` to relative accuracy `eps`.
pub fn norm_rel(a: &Mat, eps: f64, machine: &Machine, seed: u64) -> Result<f64> {
    let r = relative_loop(a, eps, machine, seed, |vals| {
        vals.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    })?;
    Ok(r.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

fn relative_loop(
    a: &Mat,
    eps: f64,
    machine: &Machine,
    seed: u64,
    magnitude: impl Fn(&[f64]) -> f64,
) -> Result<SpectralResult> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    let n = a.rows();
    let mut delta = 0.5;
    let mut trials = Vec::new();
    let mut attempts = 0;
    loop {
        let required = budget_shatterh(n, delta / 256.0, &machine.consts)?;
        if !machine.budget.meets(&required) {
            return Err(Error::BitBudgetExhausted {
                required_bits: required.log2_inv_u(),
                available_bits: machine.budget.log2_inv_u(),
            });
        }
        let r = evalsh(a, delta, machine, derive_seed(seed, trials.len() as u64))?;
        trials.push(delta);
        attempts += r.attempts;
        if delta < eps / (1.0 + eps) * magnitude(&r.eigenvalues) {
            return Ok(SpectralResult {
                trials_log: trials,
                attempts,
                ..r
            });
        }
        delta /= 2.0;
    }
}

/// Singular values of a rectangular matrix, from the eigenvalues of `A^H A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValues {
    /// Nondecreasing.
    pub values: Vec<f64>,
    /// Power of two that brought `A^H A` into the unit ball.
    pub scale: f64,
    pub trials_log: Vec<f64>,
}

impl SingularValues {
    pub fn condition_number(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

pub fn singular_values(a: &Mat, eps: f64, machine: &Machine, seed: u64) -> Result<SingularValues> {
    if a.rows() < a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "singular values need rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let m = herm_mm(&a.adjoint(), a, machine)?;
    let scale = pow2_at_least(m.frobenius().max(1.0));
    let scaled = m.scale(1.0 / scale, &machine.budget);
    let r = evalsh_rel(&scaled, eps, machine, seed)?;
    let b = &machine.budget;
    Ok(SingularValues {
        values: r
            .eigenvalues
            .iter()
            .map(|&l| b.sqrt(b.fl(l.max(0.0) * scale)))
            .collect(),
        scale,
        trials_log: r.trials_log,
    })
}
