use super::{Mat, ZERO};
use crate::fparith::PrecisionBudget;

const STRASSEN_BASE: usize = 64;

/// Row-streaming triple loop. Each entry accumulates its inner products in
/// increasing `k`, so the result does not depend on tiling.
pub(super) fn classical(a: &Mat, b: &Mat, budget: &PrecisionBudget) -> Mat {
    let (m, p, q) = (a.rows, a.cols, b.cols);
    let mut out = vec![ZERO; m * q];
    let emulated = budget.significand_bits().is_some();
    for i in 0..m {
        let crow = &mut out[i * q..(i + 1) * q];
        for k in 0..p {
            let aik = a.data[i * p + k];
            let brow = &b.data[k * q..(k + 1) * q];
            if emulated {
                for (c, &bkj) in crow.iter_mut().zip(brow) {
                    *c = budget.add(*c, budget.mul(aik, bkj));
                }
            } else {
                for (c, &bkj) in crow.iter_mut().zip(brow) {
                    c.re += aik.re * bkj.re - aik.im * bkj.im;
                    c.im += aik.re * bkj.im + aik.im * bkj.re;
                }
            }
        }
    }
    Mat::raw(m, q, out)
}

fn padded(a: &Mat, rows: usize, cols: usize) -> Mat {
    if a.rows == rows && a.cols == cols {
        return a.clone();
    }
    Mat::from_fn(
        rows,
        cols,
        |i, j| if i < a.rows && j < a.cols { a.get(i, j) } else { ZERO },
    )
}

fn quadrants(a: &Mat) -> [Mat; 4] {
    let (r, c) = (a.rows / 2, a.cols / 2);
    [
        a.block(0..r, 0..c),
        a.block(0..r, c..a.cols),
        a.block(r..a.rows, 0..c),
        a.block(r..a.rows, c..a.cols),
    ]
}

fn plus(x: &Mat, y: &Mat, b: &PrecisionBudget) -> Mat {
    Mat::raw(
        x.rows,
        x.cols,
        x.data.iter().zip(&y.data).map(|(&u, &v)| b.add(u, v)).collect(),
    )
}

fn minus(x: &Mat, y: &Mat, b: &PrecisionBudget) -> Mat {
    Mat::raw(
        x.rows,
        x.cols,
        x.data.iter().zip(&y.data).map(|(&u, &v)| b.sub(u, v)).collect(),
    )
}

/// Strassen's seven-product recursion; operands are zero-padded to even
/// dimensions at each level.
pub(super) fn strassen(a: &Mat, b: &Mat, budget: &PrecisionBudget) -> Mat {
    let (m, p, q) = (a.rows, a.cols, b.cols);
    if m.max(p).max(q) <= STRASSEN_BASE || m.min(p).min(q) < 2 {
        return classical(a, b, budget);
    }
    let (m2, p2, q2) = (m + m % 2, p + p % 2, q + q % 2);
    let ap = padded(a, m2, p2);
    let bp = padded(b, p2, q2);
    let [a11, a12, a21, a22] = quadrants(&ap);
    let [b11, b12, b21, b22] = quadrants(&bp);
    let f = budget;

    let m1 = strassen(&plus(&a11, &a22, f), &plus(&b11, &b22, f), f);
    let m2m = strassen(&plus(&a21, &a22, f), &b11, f);
    let m3 = strassen(&a11, &minus(&b12, &b22, f), f);
    let m4 = strassen(&a22, &minus(&b21, &b11, f), f);
    let m5 = strassen(&plus(&a11, &a12, f), &b22, f);
    let m6 = strassen(&minus(&a21, &a11, f), &plus(&b11, &b12, f), f);
    let m7 = strassen(&minus(&a12, &a22, f), &plus(&b21, &b22, f), f);

    let c11 = plus(&minus(&plus(&m1, &m4, f), &m5, f), &m7, f);
    let c12 = plus(&m3, &m5, f);
    let c21 = plus(&m2m, &m4, f);
    let c22 = plus(&plus(&minus(&m1, &m2m, f), &m3, f), &m6, f);

    let (hr, hc) = (m2 / 2, q2 / 2);
    Mat::from_fn(m, q, |i, j| match (i < hr, j < hc) {
        (true, true) => c11.get(i, j),
        (true, false) => c12.get(i, j - hc),
        (false, true) => c21.get(i - hr, j),
        (false, false) => c22.get(i - hr, j - hc),
    })
}
