use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use densmat::matcore::{read_matrix, write_matrix_binary, write_matrix_text};
use densmat::{Machine, Mat, MulBackend, PrecisionBudget, StabilityConstants};
use serde::Deserialize;
use serde_json::Value;

use crate::report::RunReport;
use crate::{BackendArg, GlobalArgs};

pub const THREADS_VAR: &str = "DENSMAT_THREADS";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    backend: Option<MulBackend>,
    emulate_bits: Option<u32>,
    constants: Option<toml::Table>,
}

/// Everything a subcommand needs besides its own flags.
pub struct Context {
    pub seed: u64,
    pub machine: Machine,
    pub oracle: bool,
    pub threads: usize,
    /// Resolved machine settings, copied into every report's inputs.
    pub base_inputs: BTreeMap<String, Value>,
}

impl Context {
    pub fn from_args(g: &GlobalArgs) -> Result<Context> {
        let file = match &g.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let backend = match g.backend {
            Some(BackendArg::Classical) => MulBackend::Classical,
            Some(BackendArg::Strassen) => MulBackend::Strassen,
            None => file.backend.unwrap_or_default(),
        };
        let bits = g.emulate_bits.or(file.emulate_bits);
        let budget = match bits {
            Some(b) => PrecisionBudget::emulated(b)?,
            None => PrecisionBudget::native(),
        };
        let mut table = file.constants.unwrap_or_default();
        for kv in &g.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects NAME=VALUE, got `{kv}`"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("--set {kv}: not a number"))?;
            table.insert(k.trim().to_string(), toml::Value::Float(v));
        }
        let consts = merge_constants(StabilityConstants::with_mm_exponent(backend.mm_exponent()), &table)?;
        consts.validate()?;
        let threads = threads_from_env()?;
        let mut base_inputs = BTreeMap::new();
        base_inputs.insert("backend".into(), serde_json::to_value(backend)?);
        base_inputs.insert("emulate_bits".into(), serde_json::to_value(bits)?);
        base_inputs.insert("constants".into(), serde_json::to_value(&consts)?);
        base_inputs.insert("oracle".into(), Value::Bool(g.oracle));
        Ok(Context {
            seed: g.seed,
            machine: Machine::new(budget, backend).with_consts(consts),
            oracle: g.oracle,
            threads,
            base_inputs,
        })
    }

    pub fn report(&self, subcommand: &str) -> RunReport {
        RunReport::new(subcommand, self.seed, &self.base_inputs)
    }

    /// Same machine settings at a different precision.
    pub fn machine_at(&self, budget: PrecisionBudget) -> Machine {
        Machine::new(budget, self.machine.backend).with_consts(self.machine.consts.clone())
    }
}

fn merge_constants(base: StabilityConstants, overrides: &toml::Table) -> Result<StabilityConstants> {
    let mut merged = toml::Table::try_from(&base)?;
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            bail!("unknown stability constant `{k}`");
        }
        let v = match v {
            toml::Value::Integer(i) => toml::Value::Float(*i as f64),
            other => other.clone(),
        };
        merged.insert(k.clone(), v);
    }
    Ok(toml::Value::Table(merged).try_into()?)
}

fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let t: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_VAR}={v} is not a count"))?;
            if t == 0 {
                bail!("{THREADS_VAR} must be at least 1");
            }
            Ok(t)
        }
        Err(_) => Ok(1),
    }
}

pub fn load_matrix(path: &Path) -> Result<Mat> {
    read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

/// Load a matrix that must be exactly Hermitian.
pub fn load_hermitian(path: &Path) -> Result<Mat> {
    let m = load_matrix(path)?;
    if m.hermitian_certified() {
        return Ok(m);
    }
    m.certify_hermitian()
        .with_context(|| format!("{} is not Hermitian", path.display()))
}

/// Binary when the extension is `.bin` or `.cmat`, text otherwise.
pub fn save_matrix(m: &Mat, path: &Path) -> Result<()> {
    let binary = matches!(path.extension().and_then(|e| e.to_str()), Some("bin" | "cmat"));
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let w = std::io::BufWriter::new(file);
    if binary {
        write_matrix_binary(m, w)
    } else {
        write_matrix_text(m, w)
    }
    .with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_single_constants() {
        let mut t = toml::Table::new();
        t.insert("c1".into(), toml::Value::Integer(100));
        let c = merge_constants(StabilityConstants::default(), &t).unwrap();
        assert_eq!(c.c1, 100.0);
        assert_eq!(c.c_inv, StabilityConstants::default().c_inv);
        t.insert("c9".into(), toml::Value::Float(1.0));
        assert!(merge_constants(StabilityConstants::default(), &t).is_err());
    }

    #[test]
    fn file_config_parses() {
        let f: FileConfig =
            toml::from_str("backend = \"strassen\"\nemulate_bits = 40\n[constants]\nc2 = 2.5\n").unwrap();
        assert_eq!(f.backend, Some(MulBackend::Strassen));
        assert_eq!(f.emulate_bits, Some(40));
        assert!(toml::from_str::<FileConfig>("threads = 3").is_err());
    }
}
