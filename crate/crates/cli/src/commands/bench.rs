use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context as _, Result};
use clap::Args;
use densmat::chol::chol;
use densmat::dft::density;
use densmat::generate::{gapped_spectrum, hpd, random_hermitian};
use densmat::matcore::{invert, matmul};
use densmat::oracle::{diff_norm_reference, matmul_reference};
use densmat::shatter::derive_seed;
use densmat::spectra::evalsh;
use densmat::Mat;
use serde_json::json;

use crate::config::Context;
use crate::report::RunReport;

const OPS: [&str; 5] = ["mm", "inv", "chol", "evalsh", "density"];

#[derive(Args)]
pub struct Opts {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub sizes: Vec<usize>,
    /// Timed repetitions per case.
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    /// Timing CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Run one case and return a deterministic check value for the report.
fn case(op: &str, n: usize, ctx: &Context, seed: u64) -> Result<f64> {
    let m = &ctx.machine;
    Ok(match op {
        "mm" => {
            let a = random_hermitian(n, 0.5, seed)?;
            let b = random_hermitian(n, 0.5, derive_seed(seed, 1))?;
            diff_norm_reference(&matmul(&a, &b, m)?, &matmul_reference(&a, &b)?)?
        }
        "inv" => {
            let a = hpd(n, 10.0, seed)?;
            let ai = invert(&a, m)?;
            diff_norm_reference(&matmul_reference(&a, &ai)?, &Mat::identity(n))?
        }
        "chol" => {
            let a = hpd(n, 10.0, seed)?;
            let l = chol(&a, m)?.l;
            diff_norm_reference(&matmul_reference(&l, &l.adjoint())?, &a)?
        }
        "evalsh" => evalsh(&random_hermitian(n, 0.5, seed)?, 1e-3, m, seed)?.backward_error,
        _ => {
            let (a, _) = gapped_spectrum(n, n / 2, 0.2, seed)?;
            density(&a, 1e-6, n / 2, m, seed)?.idempotency_defect
        }
    })
}

pub fn run(ctx: &Context, o: &Opts) -> Result<RunReport> {
    let mut r = ctx.report("bench");
    r.input("sizes", &o.sizes)?;
    r.input("trials", o.trials)?;
    let mut csv = String::from("op,n,trials,median_ms,min_ms\n");
    let mut cases = Vec::new();
    for op in OPS {
        for &n in &o.sizes {
            let seed = derive_seed(ctx.seed, n as u64);
            let mut times = Vec::with_capacity(o.trials);
            let mut check = 0.0;
            for _ in 0..o.trials.max(1) {
                let t = Instant::now();
                check = case(op, n, ctx, seed).with_context(|| format!("bench {op} n={n}"))?;
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            times.sort_by(f64::total_cmp);
            writeln!(
                csv,
                "{op},{n},{},{:.3},{:.3}",
                times.len(),
                times[times.len() / 2],
                times[0]
            )?;
            cases.push(json!({ "op": op, "n": n, "check": check }));
        }
    }
    r.output("cases", cases)?;
    match &o.output {
        Some(p) => {
            std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            r.output("timings", p)?;
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
            r.stdout_free = false;
        }
    }
    Ok(r)
}
