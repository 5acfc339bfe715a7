//! Kohn-Sham problem container: a JSON file naming the matrix files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use densmat::dft::KsProblem;
use serde::{Deserialize, Serialize};

use crate::config::{load_hermitian, load_matrix, save_matrix};
use crate::report::SCHEMA;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: u32,
    /// Paths are relative to the container's directory.
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<String>,
    pub occupied: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_eval: Option<String>,
}

fn sibling(container: &Path, name: &str) -> PathBuf {
    container.parent().unwrap_or(Path::new("")).join(name)
}

pub fn load(path: &Path) -> Result<KsProblem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let f: ProblemFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if f.schema != SCHEMA {
        bail!("{}: unsupported schema {}", path.display(), f.schema);
    }
    let h = load_hermitian(&sibling(path, &f.hamiltonian))?;
    let s = f
        .overlap
        .as_deref()
        .map(|p| load_hermitian(&sibling(path, p)))
        .transpose()?;
    let x = f
        .basis_eval
        .as_deref()
        .map(|p| load_matrix(&sibling(path, p)))
        .transpose()?;
    Ok(KsProblem::new(h, s, f.occupied, x)?)
}

/// Write the container and its matrices next to it as `<stem>.h.mtx` etc.
/// Returns every path written.
pub fn save(problem: &KsProblem, path: &Path) -> Result<Vec<PathBuf>> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("problem")
        .to_string();
    let mut written = Vec::new();
    let mut put = |tag: &str, m: &densmat::Mat| -> Result<String> {
        let name = format!("{stem}.{tag}.mtx");
        let p = sibling(path, &name);
        save_matrix(m, &p)?;
        written.push(p);
        Ok(name)
    };
    let f = ProblemFile {
        schema: SCHEMA,
        hamiltonian: put("h", &problem.h)?,
        overlap: problem.s.as_ref().map(|s| put("s", s)).transpose()?,
        occupied: problem.k,
        basis_eval: problem.basis_eval.as_ref().map(|x| put("x", x)).transpose()?,
    };
    let mut json = serde_json::to_string_pretty(&f)?;
    json.push('\n');
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    written.push(path.to_path_buf());
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let p = densmat::generate::ks_problem(6, 3, 2, 11).unwrap();
        let path = dir.path().join("sys.json");
        let written = save(&p, &path).unwrap();
        assert_eq!(written.len(), 4);
        let back = load(&path).unwrap();
        assert_eq!(back.h, p.h);
        assert_eq!(back.s, p.s);
        assert_eq!(back.k, 3);
        assert_eq!(back.basis_eval, p.basis_eval);
    }
}
