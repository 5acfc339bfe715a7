use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use densmat::chol::chol;
use densmat::dft::density;
use densmat::generate::{gapped_spectrum, hpd, random_hermitian};
use densmat::oracle::{density_reference, diff_norm_reference, gap_reference, matmul_reference, norm_reference};
use densmat::shatter::{derive_seed, shatterh};
use densmat::spectra::evalsh;
use densmat::{Error, PrecisionBudget};
use serde::Serialize;
use serde_json::json;

use super::oracle_eigen_error;
use crate::config::Context;
use crate::pool::run_trials;
use crate::report::RunReport;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Evalsh,
    Chol,
    Density,
    Shatter,
}

#[derive(Args)]
pub struct Opts {
    #[arg(long, value_enum, default_value_t = Op::Evalsh)]
    pub op: Op,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub min_bits: u32,
    #[arg(long, default_value_t = 48)]
    pub max_bits: u32,
    #[arg(long, default_value_t = 8)]
    pub step: u32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Accuracy target: eigenvalue error, relative Cholesky residual,
    /// density error, or the shattering size.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Success-rate CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Success,
    Inaccurate,
    Infeasible,
    Failed,
}

fn classify(e: &Error) -> Outcome {
    match e.root() {
        Error::BudgetInfeasible { .. } | Error::BitBudgetExhausted { .. } | Error::NoFermiGap(_) => Outcome::Infeasible,
        _ => Outcome::Failed,
    }
}

fn trial(o: &Opts, ctx: &Context, bits: u32, seed: u64) -> Result<Outcome> {
    let machine = ctx.machine_at(PrecisionBudget::emulated(bits)?);
    let n = o.n;
    let judge = |ok: bool| if ok { Outcome::Success } else { Outcome::Inaccurate };
    let run = || -> std::result::Result<Result<Outcome>, Error> {
        Ok(match o.op {
            Op::Evalsh => {
                let a = random_hermitian(n, 0.5, derive_seed(seed, 0))?;
                let res = evalsh(&a, o.eps, &machine, derive_seed(seed, 1))?;
                oracle_eigen_error(&a, &res.eigenvalues).map(|(_, err)| judge(err <= o.eps))
            }
            Op::Chol => {
                let a = hpd(n, 10.0, derive_seed(seed, 0))?;
                let l = chol(&a, &machine)?.l;
                let res = diff_norm_reference(&matmul_reference(&l, &l.adjoint())?, &a)? / norm_reference(&a)?;
                Ok(judge(res <= o.eps))
            }
            Op::Density => {
                let (a, _) = gapped_spectrum(n, n / 2, 0.2, derive_seed(seed, 0))?;
                let d = density(&a, o.eps, n / 2, &machine, derive_seed(seed, 1))?;
                let err = diff_norm_reference(&d.p, &density_reference(&a, n / 2)?)?;
                Ok(judge(err <= o.eps))
            }
            Op::Shatter => {
                let a = random_hermitian(n, 0.5, derive_seed(seed, 0))?;
                let s = shatterh(&a, o.eps, &machine, derive_seed(seed, 1))?;
                Ok(judge(gap_reference(&s.x)? >= s.claimed_gap))
            }
        })
    };
    match run() {
        Ok(r) => r,
        Err(Error::NotPositiveDefinite(_)) => Ok(Outcome::Failed),
        Err(e) => Ok(classify(&e)),
    }
}

struct Row {
    bits: u32,
    counts: [usize; 4],
}

impl Row {
    fn rate(&self) -> f64 {
        self.counts[0] as f64 / self.counts.iter().sum::<usize>() as f64
    }
}

/// True unless the rate `step` bits up is clearly below this one.
fn plausible(lo: f64, hi: f64, trials: usize) -> bool {
    let t = trials as f64;
    let margin = 2.0 * ((lo * (1.0 - lo) + hi * (1.0 - hi)) / t).sqrt() + 1.0 / t;
    hi >= lo - margin
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    if o.step == 0 || o.min_bits > o.max_bits || o.trials == 0 || o.n < 2 {
        bail!(Error::Precondition(
            "need step >= 1, min-bits <= max-bits, trials >= 1 and n >= 2".into()
        ));
    }
    let mut r = ctx.report("sweep-precision");
    r.input("op", o.op)?;
    r.input("n", o.n)?;
    r.input("min_bits", o.min_bits)?;
    r.input("max_bits", o.max_bits)?;
    r.input("step", o.step)?;
    r.input("trials", o.trials)?;
    r.input("eps", o.eps)?;
    let widths: Vec<u32> = (o.min_bits..=o.max_bits).step_by(o.step as usize).collect();
    let mut rows = Vec::new();
    for &bits in &widths {
        let outcomes = run_trials(o.trials, ctx.threads, |t| {
            trial(o, ctx, bits, derive_seed(ctx.seed, t as u64))
        });
        let mut counts = [0usize; 4];
        for out in outcomes {
            counts[out? as usize] += 1;
        }
        rows.push(Row { bits, counts });
    }
    let mut csv = String::from("bits,trials,successes,inaccurate,infeasible,failed,rate,monotone_plausible\n");
    let mut flagged = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let up = rows[i + 1..].iter().find(|h| h.bits >= row.bits + 8);
        let ok = up.is_none_or(|h| plausible(row.rate(), h.rate(), o.trials));
        if !ok {
            flagged.push(row.bits);
        }
        let [s, w, inf, f] = row.counts;
        writeln!(
            csv,
            "{},{},{s},{w},{inf},{f},{:.4},{ok}",
            row.bits,
            o.trials,
            row.rate()
        )?;
    }
    let summary: Vec<_> = rows
        .iter()
        .map(|row| json!({ "bits": row.bits, "rate": row.rate() }))
        .collect();
    r.output("rates", summary)?;
    r.output("flagged_bits", flagged)?;
    match &o.output {
        Some(p) => {
            std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            r.output("csv", p)?;
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
            r.stdout_free = false;
        }
    }
    Ok(r)
}
