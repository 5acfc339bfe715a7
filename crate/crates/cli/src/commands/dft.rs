use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use densmat::dft::{density, fermi, solve_ks, DensityOutput};
use densmat::oracle::{density_reference, diff_norm_reference, eigenvalues_reference, generalized_eig_reference};
use serde_json::{json, Value};

use crate::config::{load_hermitian, save_matrix, Context};
use crate::problem;
use crate::report::RunReport;

#[derive(Args)]
pub struct FermiOpts {
    #[arg(long)]
    pub input: PathBuf,
    /// Accuracy relative to the Fermi gap.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Number of occupied states.
    #[arg(long)]
    pub k: usize,
}

#[derive(Args)]
pub struct DensityOpts {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long)]
    pub k: usize,
    /// Write the density matrix here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct KsOpts {
    /// JSON problem container.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    /// Write the density matrix in the original basis here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Midpoint and width of the gap above the `k` lowest eigenvalues.
fn fermi_of(values: &[f64], k: usize) -> (f64, f64) {
    ((values[k - 1] + values[k]) / 2.0, values[k] - values[k - 1])
}

/// Every field of a density run except the matrix itself.
fn density_fields(d: &DensityOutput) -> Value {
    json!({
        "fermi": {
            "mu": d.fermi.mu,
            "gap": d.fermi.gap,
            "k": d.fermi.k,
            "delta_final": d.fermi.delta_final,
            "schedule": d.fermi.schedule,
        },
        "idempotency_defect": d.idempotency_defect,
        "trace_defect": d.trace_defect,
        "sgn_iterations": d.sgn_iterations,
        "halvings": d.halvings,
        "precision_used": d.precision_used,
    })
}

pub fn run_fermi(ctx: &Context, o: &FermiOpts) -> Result<RunReport> {
    let mut r = ctx.report("fermi");
    r.input("input", &o.input)?;
    r.input("eps", o.eps)?;
    r.input("k", o.k)?;
    let a = load_hermitian(&o.input)?;
    let f = fermi(&a, o.eps, o.k, &ctx.machine, ctx.seed)?;
    r.output("mu", f.mu)?;
    r.output("gap", f.gap)?;
    r.output("k", f.k)?;
    r.output("delta_final", f.delta_final)?;
    r.output("schedule", &f.schedule)?;
    r.certify("fermi", o.eps * f.gap, &ctx.machine.budget);
    if ctx.oracle {
        let (mu, gap) = fermi_of(&eigenvalues_reference(&a)?, o.k);
        r.output("oracle_mu", mu)?;
        r.output("oracle_gap", gap)?;
        r.output("oracle_mu_error_over_gap", (f.mu - mu).abs() / gap)?;
    }
    Ok(r)
}

pub fn run_density(ctx: &Context, o: &DensityOpts) -> Result<RunReport> {
    let mut r = ctx.report("density");
    r.input("input", &o.input)?;
    r.input("delta", o.delta)?;
    r.input("k", o.k)?;
    let a = load_hermitian(&o.input)?;
    let d = density(&a, o.delta, o.k, &ctx.machine, ctx.seed)?;
    for (key, v) in density_fields(&d).as_object().expect("object literal") {
        r.output(key, v)?;
    }
    r.certify("density", o.delta, &d.precision_used);
    if ctx.oracle {
        r.output("oracle_error", diff_norm_reference(&d.p, &density_reference(&a, o.k)?)?)?;
    }
    if let Some(p) = &o.output {
        save_matrix(&d.p, p)?;
    }
    Ok(r)
}

pub fn run_ks(ctx: &Context, o: &KsOpts) -> Result<RunReport> {
    let mut r = ctx.report("ks");
    r.input("input", &o.input)?;
    r.input("delta", o.delta)?;
    let p = problem::load(&o.input)?;
    r.input("n", p.h.rows())?;
    r.input("k", p.k)?;
    let sol = solve_ks(&p, o.delta, &ctx.machine, ctx.seed)?;
    r.output("fermi_level", sol.fermi_level())?;
    r.output("fermi_gap", sol.fermi_gap())?;
    r.output("density", density_fields(&sol.density))?;
    r.output("scaling", sol.scaling)?;
    r.output("electron_density", &sol.electron_density)?;
    r.certificates.extend(sol.reports.iter().cloned());
    if ctx.oracle {
        let values = match &p.s {
            Some(s) => generalized_eig_reference(&p.h, s)?,
            None => eigenvalues_reference(&p.h)?,
        };
        let (mu, gap) = fermi_of(&values, p.k);
        r.output("oracle_fermi_level", mu)?;
        r.output("oracle_fermi_gap", gap)?;
    }
    if let Some(path) = &o.output {
        save_matrix(&sol.ao_density, path)?;
    }
    Ok(r)
}
