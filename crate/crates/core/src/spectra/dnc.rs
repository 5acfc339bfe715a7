//! Spectral divide and conquer for Hermitian matrices.
//!
//! A node picks a split point `mu`, computes `sgn(mu I - X)` by Newton's
//! iteration, turns it into the projector onto eigenvalues below `mu`, and
//! extracts an orthonormal basis of its range with column-pivoted
//! Householder QR. The two compressed blocks are solved recursively; small
//! blocks go to a cyclic Jacobi solver. Every scalar operation is rounded on
//! the working machine.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fparith::PrecisionBudget;
use crate::matcore::{herm, matmul, Machine, Mat, C64};
use crate::signfn::{projectors_from_sign, sign_until_converged};

const BASE_CASE: usize = 4;
const NEWTON_CAP: usize = 60;
const SPLIT_CANDIDATES: usize = 12;
const JACOBI_SWEEPS: usize = 30;

pub(crate) struct Decomposition {
    pub values: Vec<f64>,
    pub vectors: Mat,
    /// Sum of the discarded off-diagonal block norms (Frobenius).
    pub discarded: f64,
}

pub(crate) struct Solver<'a> {
    machine: &'a Machine,
    rng: ChaCha8Rng,
    /// Off-block norm accepted at a node without trying another split.
    node_tol: f64,
    cluster_tol: f64,
}

impl<'a> Solver<'a> {
    pub fn new(machine: &'a Machine, seed: u64, delta: f64, n: usize) -> Solver<'a> {
        Solver {
            machine,
            rng: ChaCha8Rng::seed_from_u64(seed),
            node_tol: delta / (2.0 * n.max(1) as f64),
            cluster_tol: delta / 2.0,
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn solve(&mut self, x: &Mat) -> Result<Decomposition> {
        let n = x.rows();
        let b = &self.machine.budget;
        let mean = x.trace().re / n as f64;
        let centered = x.shift_neg(mean, &PrecisionBudget::native())?.frobenius();
        if centered <= self.cluster_tol {
            return Ok(Decomposition {
                values: vec![b.fl(mean); n],
                vectors: Mat::identity(n),
                discarded: centered,
            });
        }
        if n <= BASE_CASE {
            return jacobi(x, b);
        }
        let (lo, hi) = gershgorin(x);
        let spread = centered / (n as f64).sqrt();
        let (mut lo, mut hi) = (lo, hi);
        let mut best: Option<(f64, Mat, usize)> = None;
        for attempt in 0..SPLIT_CANDIDATES {
            let mu = if attempt == 0 {
                mean + (self.uniform() - 0.5) * 0.2 * spread
            } else if attempt < 4 && best.is_some() {
                mean + (self.uniform() - 0.5) * spread
            } else {
                lo + (0.25 + 0.5 * self.uniform()) * (hi - lo)
            };
            let Some((q, rank)) = self.split_basis(x, mu)? else {
                continue;
            };
            match rank {
                0 => {
                    lo = mu;
                    continue;
                }
                r if r == n => {
                    hi = mu;
                    continue;
                }
                _ => {}
            }
            let q1 = q.columns(0..rank);
            let q2 = q.columns(rank..n);
            let off = matmul(&matmul(&q2.adjoint(), x, self.machine)?, &q1, self.machine)?.frobenius();
            let better = best.as_ref().is_none_or(|(o, _, _)| off < *o);
            if better {
                best = Some((off, q, rank));
            }
            if off <= self.node_tol {
                break;
            }
        }
        let Some((off, q, rank)) = best else {
            return Err(Error::NoConvergence {
                attempts: SPLIT_CANDIDATES,
                reason: format!("no usable split point for a {n}x{n} block"),
            });
        };
        let q1 = q.columns(0..rank);
        let q2 = q.columns(rank..n);
        let x1 = herm(&matmul(&matmul(&q1.adjoint(), x, self.machine)?, &q1, self.machine)?)?;
        let x2 = herm(&matmul(&matmul(&q2.adjoint(), x, self.machine)?, &q2, self.machine)?)?;
        let d1 = self.solve(&x1)?;
        let d2 = self.solve(&x2)?;
        let v1 = matmul(&q1, &d1.vectors, self.machine)?;
        let v2 = matmul(&q2, &d2.vectors, self.machine)?;
        let mut values = d1.values;
        values.extend(d2.values);
        Ok(Decomposition {
            values,
            vectors: Mat::hstack(&v1, &v2)?,
            discarded: off + d1.discarded + d2.discarded,
        })
    }

    /// Unitary basis whose first `rank` columns span the eigenvectors below
    /// `mu`. `None` when the sign iteration or the rank estimate fails.
    fn split_basis(&mut self, x: &Mat, mu: f64) -> Result<Option<(Mat, usize)>> {
        let n = x.rows();
        let b = &self.machine.budget;
        let shifted = x.shift_neg(mu, b)?;
        let scale = pow2_at_least(shifted.frobenius());
        let y = shifted.scale(1.0 / scale, b);
        let tol = (1e3 * b.u()).max(1e-9);
        let s = match sign_until_converged(&y, self.machine, tol, NEWTON_CAP) {
            Ok((s, _)) => s,
            Err(Error::Diverged(_)) | Err(Error::NoConvergence { .. }) | Err(Error::Singular(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (p, _) = projectors_from_sign(&s)?;
        let tr = p.trace().re;
        let rank = tr.round();
        if !(rank >= 0.0 && rank <= n as f64) || (tr - rank).abs() > 0.25 {
            return Ok(None);
        }
        let rank = rank as usize;
        if rank == 0 || rank == n {
            return Ok(Some((Mat::identity(n), rank)));
        }
        Ok(Some((pivoted_qr_unitary(&p, b), rank)))
    }
}

/// Smallest power of two `>= max(x, tiny)`.
pub(crate) fn pow2_at_least(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let mut e = x.log2().ceil();
    if (e - 1.0).exp2() >= x {
        e -= 1.0;
    }
    if e.exp2() < x {
        e += 1.0;
    }
    e.exp2()
}

fn gershgorin(x: &Mat) -> (f64, f64) {
    let n = x.rows();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let c = x.get(i, i).re;
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| x.get(i, j).norm()).sum();
        lo = lo.min(c - r);
        hi = hi.max(c + r);
    }
    (lo, hi)
}

/// `Q` of a column-pivoted Householder QR of `p`, as an explicit unitary.
fn pivoted_qr_unitary(p: &Mat, b: &PrecisionBudget) -> Mat {
    let n = p.rows();
    let mut w = p.data().to_vec();
    let mut reflectors: Vec<(usize, Vec<C64>, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        // Pivot on the largest remaining column.
        let col_norm = |w: &[C64], j: usize| -> f64 { (k..n).map(|i| w[i * n + j].norm_sqr()).sum() };
        let piv = (k..n)
            .max_by(|&x, &y| col_norm(&w, x).total_cmp(&col_norm(&w, y)))
            .unwrap();
        if piv != k {
            for i in 0..n {
                w.swap(i * n + k, i * n + piv);
            }
        }
        let xs: Vec<C64> = (k..n).map(|i| w[i * n + k]).collect();
        let mut nrm2 = 0.0;
        for z in &xs {
            nrm2 = b.fl(nrm2 + b.fl(b.fl(z.re * z.re) + b.fl(z.im * z.im)));
        }
        let nrm = b.sqrt(nrm2);
        if nrm == 0.0 {
            continue;
        }
        let phase = if xs[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            xs[0] / xs[0].norm()
        };
        let alpha = b.fl_c(-phase * nrm);
        let mut v = xs;
        v[0] = b.sub(v[0], alpha);
        let mut vn2 = 0.0;
        for z in &v {
            vn2 = b.fl(vn2 + b.fl(b.fl(z.re * z.re) + b.fl(z.im * z.im)));
        }
        if vn2 == 0.0 {
            continue;
        }
        let beta = b.fl(2.0 / vn2);
        apply_reflector(&mut w, n, k, &v, beta, k, b);
        reflectors.push((k, v, beta));
    }
    let mut q: Vec<C64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    for (k, v, beta) in reflectors.iter().rev() {
        apply_reflector(&mut q, n, *k, v, *beta, 0, b);
    }
    Mat::from_fn(n, n, |i, j| q[i * n + j])
}

/// Rows `k..n` of columns `c0..n` of `w` <- `(I - beta v v^H)` times them.
fn apply_reflector(w: &mut [C64], n: usize, k: usize, v: &[C64], beta: f64, c0: usize, b: &PrecisionBudget) {
    for j in c0..n {
        let mut s = C64::new(0.0, 0.0);
        for i in k..n {
            s = b.add(s, b.mul(v[i - k].conj(), w[i * n + j]));
        }
        let s = b.scale(s, beta);
        for i in k..n {
            w[i * n + j] = b.sub(w[i * n + j], b.mul(v[i - k], s));
        }
    }
}

/// Cyclic Jacobi for small Hermitian blocks, rounded on the machine.
fn jacobi(x: &Mat, b: &PrecisionBudget) -> Result<Decomposition> {
    let n = x.rows();
    let mut a = x.data().to_vec();
    let mut v: Vec<C64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let scale = x.frobenius();
    let u = b.u().max(f64::EPSILON / 2.0);
    let off = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&a) > 4.0 * u * scale {
        if sweeps == JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                attempts: JACOBI_SWEEPS,
                reason: "base-case Jacobi".into(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p].re, a[q * n + q].re);
                let e = b.fl_c((apq / r).conj());
                let tau = b.fl((aqq - app) / (2.0 * r));
                let root = b.sqrt(b.fl(1.0 + b.fl(tau * tau)));
                let t = b.fl(tau.signum() / b.fl(tau.abs() + root));
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = b.fl(1.0 / b.sqrt(b.fl(1.0 + b.fl(t * t))));
                let s = b.fl(t * c);
                let es = b.scale(e, s);
                let ec = b.scale(e, c);
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = b.sub(b.scale(akp, c), b.mul(akq, es));
                    a[k * n + q] = b.add(b.scale(akp, s), b.mul(akq, ec));
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = b.sub(b.scale(vkp, c), b.mul(vkq, es));
                    v[k * n + q] = b.add(b.scale(vkp, s), b.mul(vkq, ec));
                }
                let (esc, ecc) = (es.conj(), ec.conj());
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = b.sub(b.scale(apk, c), b.mul(aqk, esc));
                    a[q * n + k] = b.add(b.scale(apk, s), b.mul(aqk, ecc));
                }
                a[p * n + q] = C64::new(0.0, 0.0);
                a[q * n + p] = C64::new(0.0, 0.0);
                a[p * n + p] = C64::new(b.fl(app - b.fl(t * r)), 0.0);
                a[q * n + q] = C64::new(b.fl(aqq + b.fl(t * r)), 0.0);
            }
        }
    }
    let discarded = off(&a);
    Ok(Decomposition {
        values: (0..n).map(|i| a[i * n + i].re).collect(),
        vectors: Mat::from_fn(n, n, |i, j| v[i * n + j]),
        discarded,
    })
}
