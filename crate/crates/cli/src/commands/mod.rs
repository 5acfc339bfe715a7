pub mod bench;
pub mod chol;
pub mod dft;
pub mod evals;
pub mod generate;
pub mod shatter;
pub mod sweep;

use anyhow::Result;
use densmat::oracle::eigenvalues_reference;
use densmat::Mat;

/// Largest entrywise gap between two equally long nondecreasing lists.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Oracle eigenvalues and the largest deviation of `got` from them.
pub fn oracle_eigen_error(a: &Mat, got: &[f64]) -> Result<(Vec<f64>, f64)> {
    let want = eigenvalues_reference(a)?;
    let err = max_abs_diff(got, &want);
    Ok((want, err))
}
