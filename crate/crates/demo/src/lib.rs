//! Browser demo: shattering gaps, eigenvalues against accuracy, and the
//! density of a tight-binding chain. The `#[wasm_bindgen]` wrappers only
//! convert errors; the plain functions below them are what the tests call.

use densmat::dft::density;
use densmat::generate::{random_hermitian, tight_binding_chain};
use densmat::oracle::{eigenvalues_reference, gap_reference};
use densmat::shatter::{derive_seed, shatterh};
use densmat::spectra::evalsh;
use densmat::{Machine, Result};
use wasm_bindgen::prelude::*;

/// Smallest eigenvalue spacing of `trials` shattered random matrices.
pub fn gap_samples(n: usize, gamma: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let m = Machine::native();
    (0..trials)
        .map(|t| {
            let s = derive_seed(seed, t as u64);
            let a = random_hermitian(n, 0.5, derive_seed(s, 0))?;
            gap_reference(&shatterh(&a, gamma, &m, derive_seed(s, 1))?.x)
        })
        .collect()
}

/// Gap every shattered sample should clear with high probability.
pub fn claimed_gap(n: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    gamma / (2.0 * nf * nf * nf)
}

/// Computed eigenvalues of a seeded random matrix at accuracy `eps`,
/// followed by the reference eigenvalues.
pub fn spectrum_pair(n: usize, eps: f64, seed: u64) -> Result<Vec<f64>> {
    let a = random_hermitian(n, 0.5, seed)?;
    let mut out = evalsh(&a, eps, &Machine::native(), derive_seed(seed, 1))?.eigenvalues;
    out.extend(eigenvalues_reference(&a)?);
    Ok(out)
}

/// Site occupations of a chain with `k` electrons.
pub fn chain_occupations(n: usize, k: usize, hopping: f64, delta: f64) -> Result<Vec<f64>> {
    let h = tight_binding_chain(n, hopping)?;
    let d = density(&h, delta, k, &Machine::native(), 0)?;
    Ok(d.p.diag_real())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = gapSamples)]
pub fn gap_samples_js(n: usize, gamma: f64, trials: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(gap_samples(n, gamma, trials, u64::from(seed)))
}

#[wasm_bindgen(js_name = claimedGap)]
pub fn claimed_gap_js(n: usize, gamma: f64) -> f64 {
    claimed_gap(n, gamma)
}

#[wasm_bindgen(js_name = spectrumPair)]
pub fn spectrum_pair_js(n: usize, eps: f64, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(spectrum_pair(n, eps, u64::from(seed)))
}

#[wasm_bindgen(js_name = chainOccupations)]
pub fn chain_occupations_js(n: usize, k: usize, hopping: f64, delta: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(chain_occupations(n, k, hopping, delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shattered_gaps_clear_the_claim() {
        let gaps = gap_samples(6, 1e-2, 10, 3).unwrap();
        assert_eq!(gaps.len(), 10);
        assert!(gaps.iter().all(|&g| g >= claimed_gap(6, 1e-2)));
    }

    #[test]
    fn spectrum_pair_is_within_eps() {
        let v = spectrum_pair(8, 1e-3, 2).unwrap();
        let (got, want) = v.split_at(8);
        for (x, y) in got.iter().zip(want) {
            assert!((x - y).abs() <= 1e-3);
        }
    }

    #[test]
    fn chain_occupations_sum_to_k() {
        let occ = chain_occupations(10, 5, 0.25, 1e-8).unwrap();
        let total: f64 = occ.iter().sum();
        assert!((total - 5.0).abs() <= 1e-6);
        // half filling of a bipartite chain is uniform
        assert!(occ.iter().all(|&o| (o - 0.5).abs() <= 1e-6));
    }
}
