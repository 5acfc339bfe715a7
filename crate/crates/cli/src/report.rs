use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use densmat::{Error, OpReport};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

/// JSON run report. Field order here is the serialized order.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub subcommand: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub certificates: Vec<OpReport>,
    pub timing_ms: f64,
    /// Set when a CSV already went to stdout; the report then needs `--json-out`.
    #[serde(skip)]
    pub stdout_free: bool,
}

impl RunReport {
    pub fn new(subcommand: &str, seed: u64, inputs: &BTreeMap<String, Value>) -> RunReport {
        RunReport {
            schema: SCHEMA,
            subcommand: subcommand.to_string(),
            seed,
            inputs: inputs.clone(),
            outputs: BTreeMap::new(),
            certificates: Vec::new(),
            timing_ms: 0.0,
            stdout_free: true,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.inputs.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.outputs.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn certify(&mut self, op: &str, bound: f64, budget: &densmat::PrecisionBudget) {
        self.certificates.push(OpReport::new(op, bound, budget));
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let json = self.to_json()?;
        match path {
            Some(p) => std::fs::write(p, json).with_context(|| format!("writing report {}", p.display()))?,
            None if self.stdout_free => std::io::stdout().write_all(json.as_bytes())?,
            None => {}
        }
        Ok(())
    }
}

/// The error chain on one line, skipping causes already spelled out by
/// their wrapper.
pub fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

/// Exit status for a failed run: 2 validation, 3 budget infeasible,
/// 4 probabilistic failure after retries, 5 I/O.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return core_code(err.root());
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 5;
        }
        if let Some(j) = cause.downcast_ref::<serde_json::Error>() {
            return if j.is_io() { 5 } else { 2 };
        }
    }
    2
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::BudgetInfeasible { .. }
        | Error::BitBudgetExhausted { .. }
        | Error::PrecisionOverflow
        | Error::NoFermiGap(_) => 3,
        Error::NoConvergence { .. } | Error::Diverged(_) => 4,
        Error::Io(_) => 5,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_root_cause() {
        let staged = Error::BudgetInfeasible {
            op: "x",
            required_bits: 60.0,
            available_bits: 52.0,
        }
        .in_stage("density");
        assert_eq!(exit_code(&anyhow::Error::new(staged)), 3);
        let e = anyhow::Error::new(Error::NoConvergence {
            attempts: 3,
            reason: "r".into(),
        })
        .context("evals");
        assert_eq!(exit_code(&e), 4);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&anyhow::Error::new(io).context("reading")), 5);
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), 2);
    }

    #[test]
    fn field_order_is_stable() {
        let r = RunReport::new("evals", 7, &BTreeMap::new());
        let json = r.to_json().unwrap();
        let keys = [
            "\"schema\"",
            "\"subcommand\"",
            "\"seed\"",
            "\"inputs\"",
            "\"outputs\"",
            "\"certificates\"",
            "\"timing_ms\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
    }
}
