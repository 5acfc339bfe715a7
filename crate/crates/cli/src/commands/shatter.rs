use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::Args;
use densmat::generate::random_hermitian;
use densmat::oracle::{diff_norm_reference, gap_reference};
use densmat::shatter::{derive_seed, shatterh};

use crate::config::{load_hermitian, save_matrix, Context};
use crate::pool::run_trials;
use crate::report::RunReport;

#[derive(Args)]
pub struct Opts {
    /// Matrix to perturb; random Hermitian matrices of norm 1/2 otherwise.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Perturbed matrix of a single trial.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV with one row of oracle gap statistics per trial.
    #[arg(long)]
    pub emit_gap_stats: Option<PathBuf>,
}

struct Trial {
    seed: u64,
    gap: f64,
    drift: f64,
    x: Option<densmat::Mat>,
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    if o.trials == 0 {
        bail!(densmat::Error::Precondition("--trials must be at least 1".into()));
    }
    if o.output.is_some() && o.trials != 1 {
        bail!(densmat::Error::Precondition("--output needs --trials 1".into()));
    }
    let mut r = ctx.report("shatter");
    let fixed = o.input.as_deref().map(load_hermitian).transpose()?;
    let n = fixed.as_ref().map_or(o.n, |a| a.rows());
    r.input("input", &o.input)?;
    r.input("n", n)?;
    r.input("gamma", o.gamma)?;
    r.input("trials", o.trials)?;
    let keep = o.output.is_some();
    let results = run_trials(o.trials, ctx.threads, |t| -> Result<Trial> {
        let seed = derive_seed(ctx.seed, t as u64);
        let a = match &fixed {
            Some(a) => a.clone(),
            None => random_hermitian(n, 0.5, derive_seed(seed, 0))?,
        };
        let s = shatterh(&a, o.gamma, &ctx.machine, derive_seed(seed, 1))?;
        Ok(Trial {
            seed,
            gap: gap_reference(&s.x)?,
            drift: diff_norm_reference(&s.x, &a)?,
            x: keep.then_some(s.x),
        })
    });
    let trials: Vec<Trial> = results.into_iter().collect::<Result<_>>()?;
    let nf = n as f64;
    let claimed_gap = o.gamma / (2.0 * nf * nf * nf);
    let claimed_drift = 8.0 * o.gamma;
    let mut gaps: Vec<f64> = trials.iter().map(|t| t.gap).collect();
    gaps.sort_by(f64::total_cmp);
    let above = gaps.iter().filter(|&&g| g >= claimed_gap).count();
    let max_drift = trials.iter().fold(0.0f64, |m, t| m.max(t.drift));
    r.output("claimed_gap", claimed_gap)?;
    r.output("claimed_drift", claimed_drift)?;
    r.output("min_gap", gaps[0])?;
    r.output("median_gap", gaps[gaps.len() / 2])?;
    r.output("fraction_gap_above_claim", above as f64 / gaps.len() as f64)?;
    r.output("max_drift", max_drift)?;
    r.certify("shatterh", claimed_drift, &ctx.machine.budget);
    if let Some(path) = &o.emit_gap_stats {
        let mut csv = String::from("trial,seed,min_gap,claimed_gap,drift,claimed_drift\n");
        for (i, t) in trials.iter().enumerate() {
            writeln!(
                csv,
                "{i},{},{:e},{:e},{:e},{:e}",
                t.seed, t.gap, claimed_gap, t.drift, claimed_drift
            )?;
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        r.output("gap_stats", path)?;
    }
    if let (Some(path), Some(x)) = (&o.output, &trials[0].x) {
        save_matrix(x, path)?;
    }
    Ok(r)
}
