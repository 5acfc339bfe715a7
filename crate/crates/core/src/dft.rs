//! Fermi level, density matrix and electron density of a Hermitian
//! Hamiltonian, and the reduction of an overlap-matrix problem
//! `H C = S C E` to a Hermitian one.
//!
//! Occupied states are the `k` lowest eigenvalues.

use serde::Serialize;

use crate::chol::chol;
use crate::error::{Error, Result};
use crate::fparith::{budget_shatterh, budget_transh, PrecisionBudget};
use crate::matcore::{herm, herm_inv, matmul, Machine, Mat, OpReport, C64};
use crate::shatter::derive_seed;
use crate::signfn::{projectors_from_sign, sgn, SgnParams, MAX_GAP_FOR_ALPHA};
use crate::spectra::{evalsh, evalsh_rel, norm_rel, pow2_at_least};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FermiResult {
    /// Estimate of the midpoint between the `k`-th and `(k+1)`-st eigenvalue.
    pub mu: f64,
    /// Estimate of the Fermi gap `lambda_{k+1} - lambda_k`.
    pub gap: f64,
    pub k: usize,
    pub delta_final: f64,
    /// Accuracy of every eigenvalue call, in order.
    pub schedule: Vec<f64>,
    /// Eigenvalue estimates from the final call, nondecreasing.
    pub eigenvalues: Vec<f64>,
}

fn check_occupation(a: &Mat, k: usize) -> Result<()> {
    if !a.hermitian_certified() {
        return Err(Error::Precondition("needs a Hermitian-certified Hamiltonian".into()));
    }
    let n = a.rows();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Precondition(format!(
            "occupation k = {k} must lie in [1, {}]",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Fermi level and gap to relative accuracy `eps` of the gap, halving the
/// eigenvalue accuracy until it resolves the gap.
pub fn fermi(a: &Mat, eps: f64, k: usize, machine: &Machine, seed: u64) -> Result<FermiResult> {
    check_occupation(a, k)?;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    let n = a.rows();
    let mut delta = 0.5;
    let mut schedule = Vec::new();
    loop {
        let required = budget_shatterh(n, delta / 256.0, &machine.consts)?;
        if !machine.budget.meets(&required) {
            return Err(Error::NoFermiGap(format!(
                "resolving the gap needs log2(1/u) >= {:.1} at delta = {delta:e}",
                required.log2_inv_u()
            )));
        }
        let r =
            evalsh(a, delta, machine, derive_seed(seed, schedule.len() as u64)).map_err(|e| e.in_stage("evalsh"))?;
        schedule.push(delta);
        let vals = r.eigenvalues;
        let gap = (vals[k] - vals[k - 1]).abs();
        if !(delta > eps / (1.0 + 2.0 * eps) * gap) {
            return Ok(FermiResult {
                mu: (vals[k - 1] + vals[k]) / 2.0,
                gap,
                k,
                delta_final: delta,
                schedule,
                eigenvalues: vals,
            });
        }
        delta /= 2.0;
    }
}

#[derive(Debug, Clone)]
pub struct DensityOutput {
    /// Hermitian-certified approximate projector onto the occupied states.
    pub p: Mat,
    pub fermi: FermiResult,
    /// `||P^2 - P||_F`.
    pub idempotency_defect: f64,
    /// `|trace(P) - k|`.
    pub trace_defect: f64,
    pub sgn_iterations: u32,
    /// Times the shifted matrix was halved to bring the gap estimate into
    /// the range of the sign iteration.
    pub halvings: u32,
    pub precision_used: PrecisionBudget,
}

/// Density matrix `P = (I + sgn(mu - A)) / 2` to accuracy `delta`.
pub fn density(a: &Mat, delta: f64, k: usize, machine: &Machine, seed: u64) -> Result<DensityOutput> {
    check_occupation(a, k)?;
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, 1/12)")));
    }
    let f = fermi(a, 1.0 / 32.0, k, machine, seed).map_err(|e| e.in_stage("fermi"))?;
    let gap_lower = 16.0 / 17.0 * f.gap;
    let u_max = (gap_lower / 96.0).min(delta * 13.0 * gap_lower.powi(3) / 3072.0);
    machine
        .budget
        .check("density", &PrecisionBudget::theorem("density", -u_max.log2()))?;
    let b = &machine.budget;
    let mut shifted = a.shift_neg(f.mu, b)?;
    let mut g = f.gap;
    let mut halvings = 0;
    while g >= MAX_GAP_FOR_ALPHA {
        shifted = shifted.scale(0.5, b);
        g /= 2.0;
        halvings += 1;
    }
    let params = SgnParams::from_gap(delta, g)?;
    let s = sgn(&shifted, &params, machine).map_err(|e| e.in_stage("sgn"))?;
    let (p, _) = projectors_from_sign(&s.s)?;
    let p2 = matmul(&p, &p, machine)?;
    Ok(DensityOutput {
        idempotency_defect: p2.sub(&p, &PrecisionBudget::native())?.frobenius(),
        trace_defect: (p.trace().re - k as f64).abs(),
        p,
        fermi: f,
        sgn_iterations: s.iterations_run,
        halvings,
        precision_used: b.clone(),
    })
}

/// Electron density `Re(x^H P x)` at one query point.
pub fn electron_density(p: &Mat, x: &[C64], budget: &PrecisionBudget) -> Result<f64> {
    let n = p.rows();
    if !p.is_square() || x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "query of length {} against a {}x{} density",
            x.len(),
            p.rows(),
            p.cols()
        )));
    }
    let mut total = C64::new(0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let mut px = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            px = budget.add(px, budget.mul(p.get(i, j), *xj));
        }
        total = budget.add(total, budget.mul(xi.conj(), px));
    }
    Ok(total.re)
}

/// Electron density at every row of `x`, where row `i` holds the basis
/// functions evaluated at query point `i`: the diagonal of `conj(X) P X^T`.
pub fn electron_density_batch(p: &Mat, x: &Mat, machine: &Machine) -> Result<Vec<f64>> {
    if !p.is_square() || x.cols() != p.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} queries against a {}x{} density",
            x.rows(),
            x.cols(),
            p.rows(),
            p.cols()
        )));
    }
    let b = &machine.budget;
    let conj = Mat::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j).conj());
    let y = matmul(&conj, p, machine)?;
    Ok((0..x.rows())
        .map(|i| {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..x.cols() {
                s = b.add(s, b.mul(y.get(i, j), x.get(i, j)));
            }
            s.re
        })
        .collect())
}

/// Output of [`transh`].
#[derive(Debug, Clone)]
pub struct Transformed {
    /// `herm(L^H H L)`, whose eigenvalues approximate those of `S^-1 H`.
    pub h: Mat,
    /// Cholesky factor of `S^-1`.
    pub l: Mat,
}

/// Reduce `H C = S C E` with `||H|| <= 1`, `||S^-1|| <= 1` to a Hermitian
/// problem with the same eigenvalues.
pub fn transh(h: &Mat, s: &Mat, machine: &Machine) -> Result<Transformed> {
    if !h.hermitian_certified() || !s.hermitian_certified() {
        return Err(Error::Precondition("transh needs Hermitian-certified H and S".into()));
    }
    if h.rows() != s.rows() || !h.is_square() || !s.is_square() {
        return Err(Error::DimensionMismatch("H and S must be square of equal size".into()));
    }
    let sinv = herm_inv(s, machine).map_err(|e| e.in_stage("inv"))?;
    let l = chol(&sinv, machine).map_err(|e| e.in_stage("chol"))?.l;
    let lh = matmul(&l.adjoint(), h, machine)?;
    let ht = herm(&matmul(&lh, &l, machine)?)?;
    Ok(Transformed { h: ht, l })
}

/// [`transh`] after checking the machine against the precision needed for
/// accuracy `eps` when `kappa(S) <= kappa_s`.
pub fn transh_for(h: &Mat, s: &Mat, kappa_s: f64, eps: f64, machine: &Machine) -> Result<Transformed> {
    let required = budget_transh(h.rows().max(1), kappa_s, eps, &machine.consts)?;
    machine.budget.check("transh", &required)?;
    transh(h, s, machine)
}

/// Power-of-two factors with `||H / eta|| <= 1/2` and
/// `||(sigma S)^-1|| <= 1/2` (up to the estimates' accuracy), so that the
/// problem `(H / eta) C = (sigma S) C E'` has `E = eta sigma E'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rescaling {
    pub eta: f64,
    pub sigma: f64,
}

impl Rescaling {
    pub fn unscale(&self, scaled_energy: f64) -> f64 {
        scaled_energy * self.eta * self.sigma
    }
}

/// Scale factors from relative-accuracy estimates of `||H||` and
/// `lambda_min(S)`, with a factor 2 margin.
pub fn rescaling(h: &Mat, s: &Mat, machine: &Machine, seed: u64) -> Result<Rescaling> {
    const EST_EPS: f64 = 0.1;
    let b = &machine.budget;
    let phi_h = pow2_at_least(h.frobenius());
    let h_norm = norm_rel(&h.scale(1.0 / phi_h, b), EST_EPS, machine, derive_seed(seed, 0))? * phi_h;
    let phi_s = pow2_at_least(s.frobenius());
    let s_vals = evalsh_rel(&s.scale(1.0 / phi_s, b), EST_EPS, machine, derive_seed(seed, 1))?.eigenvalues;
    let s_min = s_vals.first().copied().unwrap_or(1.0) * phi_s;
    if !(s_min > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "overlap eigenvalue estimate {s_min:e}"
        )));
    }
    Ok(Rescaling {
        eta: if h_norm > 0.0 {
            pow2_at_least(2.0 * h_norm * (1.0 + EST_EPS))
        } else {
            1.0
        },
        sigma: pow2_at_least(2.0 * (1.0 + EST_EPS) / s_min),
    })
}

/// A Hamiltonian, an optional overlap, the number of occupied states and
/// optional basis-function evaluations (one row per query point).
#[derive(Debug, Clone)]
pub struct KsProblem {
    pub h: Mat,
    pub s: Option<Mat>,
    pub k: usize,
    pub basis_eval: Option<Mat>,
}

impl KsProblem {
    pub fn new(h: Mat, s: Option<Mat>, k: usize, basis_eval: Option<Mat>) -> Result<KsProblem> {
        let n = h.rows();
        if !h.is_square() || !h.hermitian_certified() {
            return Err(Error::Precondition("Hamiltonian must be square and Hermitian".into()));
        }
        if let Some(s) = &s {
            if s.rows() != n || !s.is_square() || !s.hermitian_certified() {
                return Err(Error::Precondition(
                    "overlap must be Hermitian with the Hamiltonian's size".into(),
                ));
            }
        }
        if k == 0 || k >= n {
            return Err(Error::Precondition(format!(
                "occupation k = {k} must lie in [1, {}]",
                n.saturating_sub(1)
            )));
        }
        if let Some(x) = &basis_eval {
            if x.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "basis evaluations have {} columns, need {n}",
                    x.cols()
                )));
            }
        }
        Ok(KsProblem { h, s, k, basis_eval })
    }

    /// True when there is no overlap or it is exactly the identity.
    pub fn orthogonal_basis(&self) -> bool {
        self.s.as_ref().is_none_or(|s| *s == Mat::identity(s.rows()))
    }
}

#[derive(Debug, Clone)]
pub struct KsSolution {
    /// Density in the orthonormalized basis the pipeline worked in.
    pub density: DensityOutput,
    /// Density in the original basis, `C_occ C_occ^H` with `C^H S C = I`.
    pub ao_density: Mat,
    pub scaling: Option<Rescaling>,
    /// Electron density at each basis-evaluation row, when supplied.
    pub electron_density: Option<Vec<f64>>,
    pub reports: Vec<OpReport>,
}

impl KsSolution {
    /// Fermi level in the problem's original energy units.
    pub fn fermi_level(&self) -> f64 {
        let mu = self.density.fermi.mu;
        self.scaling.map_or(mu, |s| s.unscale(mu))
    }

    pub fn fermi_gap(&self) -> f64 {
        let g = self.density.fermi.gap;
        self.scaling.map_or(g, |s| s.unscale(g))
    }
}

/// Fermi level, density matrix and electron density of a problem, reducing
/// a non-trivial overlap first.
pub fn solve_ks(problem: &KsProblem, delta: f64, machine: &Machine, seed: u64) -> Result<KsSolution> {
    let mut reports = Vec::new();
    let (density_out, ao, scaling) = if problem.orthogonal_basis() {
        let d = density(&problem.h, delta, problem.k, machine, seed).map_err(|e| e.in_stage("density"))?;
        let p = d.p.clone();
        (d, p, None)
    } else {
        let s = problem.s.as_ref().expect("non-orthogonal basis has an overlap");
        let sc = rescaling(&problem.h, s, machine, derive_seed(seed, 0)).map_err(|e| e.in_stage("rescale"))?;
        let b = &machine.budget;
        let hs = problem.h.scale(1.0 / sc.eta, b);
        let ss = s.scale(sc.sigma, b);
        let t = transh(&hs, &ss, machine).map_err(|e| e.in_stage("transh"))?;
        let d = density(&t.h, delta, problem.k, machine, derive_seed(seed, 1)).map_err(|e| e.in_stage("density"))?;
        let lp = matmul(&t.l, &d.p, machine)?;
        let ao = herm(&matmul(&lp, &t.l.adjoint(), machine)?)?.scale(sc.sigma, b);
        (d, ao, Some(sc))
    };
    reports.push(OpReport::new("density", delta, &density_out.precision_used));
    let electron_density = match &problem.basis_eval {
        Some(x) => Some(electron_density_batch(&ao, x, machine).map_err(|e| e.in_stage("electron_density"))?),
        None => None,
    };
    Ok(KsSolution {
        density: density_out,
        ao_density: ao,
        scaling,
        electron_density,
        reports,
    })
}
