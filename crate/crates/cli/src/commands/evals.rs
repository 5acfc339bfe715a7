use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use densmat::oracle::singular_values_reference;
use densmat::spectra::{evalsh_rel, evalsh_with, singular_values, EigBackend};
use serde::Serialize;

use super::{max_abs_diff, oracle_eigen_error};
use crate::config::{load_hermitian, load_matrix, Context};
use crate::report::RunReport;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Backend {
    DivideAndConquer,
    Tridiagonal,
}

#[derive(Args)]
pub struct Opts {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Error relative to the smallest eigenvalue magnitude instead of additive.
    #[arg(long)]
    pub relative: bool,
    /// Singular values of a rectangular input, relative accuracy.
    #[arg(long, conflicts_with = "relative")]
    pub singular: bool,
    #[arg(long, value_enum, default_value_t = Backend::DivideAndConquer)]
    pub eig_backend: Backend,
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    let mut r = ctx.report("evals");
    r.input("input", &o.input)?;
    r.input("eps", o.eps)?;
    r.input("relative", o.relative)?;
    r.input("singular", o.singular)?;
    r.input("eig_backend", o.eig_backend)?;
    let m = &ctx.machine;
    if o.singular {
        let a = load_matrix(&o.input)?;
        let sv = singular_values(&a, o.eps, m, ctx.seed)?;
        r.output("singular_values", &sv.values)?;
        r.output("condition_number", sv.condition_number())?;
        r.output("scale", sv.scale)?;
        r.output("trials_log", &sv.trials_log)?;
        r.certify("singular_values", o.eps, &m.budget);
        if ctx.oracle {
            let want = singular_values_reference(&a)?;
            let rel = sv
                .values
                .iter()
                .zip(&want)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs() / y.abs()));
            r.output("oracle_singular_values", &want)?;
            r.output("oracle_max_relative_error", rel)?;
        }
        return Ok(r);
    }
    let a = load_hermitian(&o.input)?;
    if !o.relative {
        let est = a.norm_estimate();
        if est > 1.0 + 1e-12 {
            bail!(densmat::Error::Precondition(format!(
                "additive eigenvalues need ||A|| <= 1 (estimate {est:.4}); rescale or use --relative"
            )));
        }
    }
    let backend = match o.eig_backend {
        Backend::DivideAndConquer => EigBackend::DivideAndConquer,
        Backend::Tridiagonal => EigBackend::Tridiagonal,
    };
    let res = if o.relative {
        evalsh_rel(&a, o.eps, m, ctx.seed)?
    } else {
        evalsh_with(&a, o.eps, m, ctx.seed, backend)?
    };
    r.output("eigenvalues", &res.eigenvalues)?;
    r.output("backward_error", res.backward_error)?;
    r.output("attempts", res.attempts)?;
    r.output("trials_log", &res.trials_log)?;
    r.certify(
        if o.relative { "evalsh_rel" } else { "evalsh" },
        o.eps,
        &res.precision_used,
    );
    if ctx.oracle {
        let (want, err) = oracle_eigen_error(&a, &res.eigenvalues)?;
        r.output("oracle_eigenvalues", &want)?;
        r.output("oracle_max_abs_error", err)?;
        if o.relative {
            let lo = want.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
            r.output("oracle_max_relative_error", max_abs_diff(&res.eigenvalues, &want) / lo)?;
        }
    }
    Ok(r)
}
