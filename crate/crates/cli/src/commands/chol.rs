use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use densmat::chol::{chol, chol_for};
use densmat::oracle::{condition_number_reference, diff_norm_reference, matmul_reference, norm_reference};
use densmat::Error;

use crate::config::{load_hermitian, save_matrix, Context};
use crate::report::RunReport;

#[derive(Args)]
pub struct Opts {
    #[arg(long)]
    pub input: PathBuf,
    /// Target backward error relative to ||M||; checks the precision budget.
    #[arg(long, requires = "kappa")]
    pub eps: Option<f64>,
    /// Condition number bound used with --eps.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Write the factor here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    let mut r = ctx.report("chol");
    r.input("input", &o.input)?;
    r.input("eps", o.eps)?;
    r.input("kappa", o.kappa)?;
    let m = load_hermitian(&o.input)?;
    let res = match (o.eps, o.kappa) {
        (Some(eps), Some(kappa)) => chol_for(&m, kappa, eps, &ctx.machine),
        _ => chol(&m, &ctx.machine),
    };
    let norm = norm_reference(&m)?;
    match res {
        Ok(c) => {
            let llh = matmul_reference(&c.l, &c.l.adjoint())?;
            let residual = diff_norm_reference(&llh, &m)?;
            r.output("breakdown", false)?;
            r.output("n", m.rows())?;
            r.output("residual", residual)?;
            r.output("relative_residual", residual / norm)?;
            r.output("recursion_depth", c.recursion_depth)?;
            r.output("kappa_estimate", c.kappa_estimate)?;
            r.output("backward_bound", c.backward_bound)?;
            r.certify("chol", c.backward_bound, &ctx.machine.budget);
            if let Some(p) = &o.output {
                save_matrix(&c.l, p)?;
            }
        }
        Err(e) if matches!(e.root(), Error::NotPositiveDefinite(_)) => {
            r.output("breakdown", true)?;
            r.output("n", m.rows())?;
            r.output("reason", e.to_string())?;
        }
        Err(e) => return Err(e.into()),
    }
    if ctx.oracle {
        r.output("oracle_kappa", condition_number_reference(&m)?)?;
    }
    Ok(r)
}
