use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use densmat::generate as gen;
use densmat::oracle::{condition_number_reference, gap_reference};
use serde::Serialize;

use crate::config::{save_matrix, Context};
use crate::problem;
use crate::report::RunReport;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    RandomHermitian,
    Shattered,
    Hpd,
    TightBindingChain,
    DegenerateSpectrum,
    KsProblem,
}

#[derive(Args)]
pub struct Opts {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    /// Matrix file, or the JSON container for `ks_problem`.
    #[arg(long)]
    pub output: PathBuf,
    /// Spectral norm of `random_hermitian`.
    #[arg(long, default_value_t = 0.5)]
    pub norm: f64,
    /// Perturbation size of `shattered`.
    #[arg(long, default_value_t = 1e-3)]
    pub gamma: f64,
    /// Condition number target of `hpd`.
    #[arg(long, default_value_t = 100.0)]
    pub kappa: f64,
    /// Hopping of `tight_binding_chain`.
    #[arg(long, default_value_t = 0.25)]
    pub hopping: f64,
    /// Comma-separated levels of `degenerate_spectrum`.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-0.5,0,0.5"
    )]
    pub levels: Vec<f64>,
    /// Occupied states of `ks_problem`; defaults to n/2.
    #[arg(long)]
    pub k: Option<usize>,
    /// Basis-evaluation rows of `ks_problem`.
    #[arg(long, default_value_t = 4)]
    pub queries: usize,
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    if o.n < 2 {
        bail!(densmat::Error::Precondition(format!(
            "generate needs n >= 2, got {}",
            o.n
        )));
    }
    let mut r = ctx.report("generate");
    r.input("kind", o.kind)?;
    r.input("n", o.n)?;
    r.input("output", &o.output)?;
    let seed = ctx.seed;
    let files = match o.kind {
        Kind::RandomHermitian => {
            r.input("norm", o.norm)?;
            save_matrix(&gen::random_hermitian(o.n, o.norm, seed)?, &o.output)?;
            vec![o.output.clone()]
        }
        Kind::Shattered => {
            r.input("gamma", o.gamma)?;
            let s = gen::shattered(o.n, o.gamma, seed)?;
            r.output("claimed_gap", s.claimed_gap)?;
            r.output("claimed_drift", s.claimed_drift)?;
            if ctx.oracle {
                r.output("oracle_gap", gap_reference(&s.x)?)?;
            }
            r.certify("shatterh", s.claimed_drift, &densmat::PrecisionBudget::native());
            save_matrix(&s.x, &o.output)?;
            vec![o.output.clone()]
        }
        Kind::Hpd => {
            r.input("kappa", o.kappa)?;
            let m = gen::hpd(o.n, o.kappa, seed)?;
            if ctx.oracle {
                r.output("oracle_kappa", condition_number_reference(&m)?)?;
            }
            save_matrix(&m, &o.output)?;
            vec![o.output.clone()]
        }
        Kind::TightBindingChain => {
            r.input("hopping", o.hopping)?;
            save_matrix(&gen::tight_binding_chain(o.n, o.hopping)?, &o.output)?;
            r.output("spectrum", gen::tight_binding_spectrum(o.n, o.hopping))?;
            vec![o.output.clone()]
        }
        Kind::DegenerateSpectrum => {
            r.input("levels", &o.levels)?;
            let (m, values) = gen::degenerate_spectrum(o.n, &o.levels, seed)?;
            r.output("spectrum", values)?;
            save_matrix(&m, &o.output)?;
            vec![o.output.clone()]
        }
        Kind::KsProblem => {
            let k = o.k.unwrap_or(o.n / 2);
            r.input("k", k)?;
            r.input("queries", o.queries)?;
            let p = gen::ks_problem(o.n, k, o.queries, seed)?;
            problem::save(&p, &o.output)?
        }
    };
    r.output("files", files)?;
    Ok(r)
}
