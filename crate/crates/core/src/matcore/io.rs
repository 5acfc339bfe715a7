//! Matrix file formats.
//!
//! Text: Matrix Market array format with `complex` entries written as
//! `re im`, column-major. `hermitian` files store the lower triangle only.
//! `real` fields and `general | symmetric | hermitian` symmetries are read.
//!
//! Binary: `b"CMAT"`, rows (u64 LE), cols (u64 LE), flags (u32 LE, bit 0 =
//! Hermitian certified), then rows*cols row-major `(re, im)` f64 LE pairs.

use std::io::{Read, Write};
use std::path::Path;

use super::{Mat, C64};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"CMAT";
const FLAG_HERMITIAN: u32 = 1;

pub fn write_matrix_text<W: Write>(m: &Mat, mut w: W) -> Result<()> {
    let sym = if m.hermitian_certified() {
        "hermitian"
    } else {
        "general"
    };
    writeln!(w, "%%MatrixMarket matrix array complex {sym}")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        let start = if m.hermitian_certified() { j } else { 0 };
        for i in start..m.rows() {
            let z = m.get(i, j);
            writeln!(w, "{:?} {:?}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_matrix_text<R: Read>(mut r: R) -> Result<Mat> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty matrix file".into()))?;
    let words: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "array" {
        return Err(Error::Format(format!("unsupported header `{header}`")));
    }
    let complex = match words[3].as_str() {
        "complex" => true,
        "real" => false,
        f => return Err(Error::Format(format!("unsupported field `{f}`"))),
    };
    let sym = words[4].clone();
    if !matches!(sym.as_str(), "general" | "symmetric" | "hermitian") {
        return Err(Error::Format(format!("unsupported symmetry `{sym}`")));
    }
    let mut body = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let dims = body.next().ok_or_else(|| Error::Format("missing dimensions".into()))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad dimension `{t}`"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Format("dimension line needs `rows cols`".into()));
    };
    let mut values = Vec::new();
    for line in body {
        for t in line.split_whitespace() {
            values.push(
                t.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number `{t}`")))?,
            );
        }
    }
    let per = if complex { 2 } else { 1 };
    let entry = |k: usize| {
        if complex {
            C64::new(values[2 * k], values[2 * k + 1])
        } else {
            C64::new(values[k], 0.0)
        }
    };
    let mut data = vec![C64::new(0.0, 0.0); rows * cols];
    if sym == "general" {
        if values.len() != rows * cols * per {
            return Err(Error::Format(format!(
                "expected {} values, found {}",
                rows * cols * per,
                values.len()
            )));
        }
        for j in 0..cols {
            for i in 0..rows {
                data[i * cols + j] = entry(j * rows + i);
            }
        }
        return Mat::new(rows, cols, data);
    }
    if rows != cols {
        return Err(Error::Format("symmetric storage needs a square matrix".into()));
    }
    let n = rows;
    if values.len() != n * (n + 1) / 2 * per {
        return Err(Error::Format("wrong number of lower-triangle values".into()));
    }
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            let z = entry(k);
            k += 1;
            data[i * n + j] = z;
            data[j * n + i] = if sym == "hermitian" { z.conj() } else { z };
        }
    }
    let m = Mat::new(n, n, data)?;
    if sym == "hermitian" {
        m.certify_hermitian()
            .map_err(|_| Error::Format("hermitian file has a non-real diagonal".into()))
    } else {
        Ok(m)
    }
}

pub fn write_matrix_binary<W: Write>(m: &Mat, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    let flags = if m.hermitian_certified() { FLAG_HERMITIAN } else { 0 };
    w.write_all(&flags.to_le_bytes())?;
    for z in m.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<Mat> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("bad binary magic".into()));
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf)?;
    let cols = u64::from_le_bytes(u64buf) as usize;
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let flags = u32::from_le_bytes(u32buf);
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        r.read_exact(&mut u64buf)?;
        let re = f64::from_le_bytes(u64buf);
        r.read_exact(&mut u64buf)?;
        let im = f64::from_le_bytes(u64buf);
        data.push(C64::new(re, im));
    }
    let m = Mat::new(rows, cols, data)?;
    if flags & FLAG_HERMITIAN != 0 {
        m.certify_hermitian()
            .map_err(|_| Error::Format("Hermitian flag set on a non-Hermitian matrix".into()))
    } else {
        Ok(m)
    }
}

/// Read either format, chosen by the leading magic bytes.
pub fn read_matrix(path: &Path) -> Result<Mat> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_matrix_binary(&bytes[..])
    } else {
        read_matrix_text(&bytes[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_real_general_column_major() {
        let src = "%%MatrixMarket matrix array real general\n% comment\n2 3\n1\n4\n2\n5\n3\n6\n";
        let m = read_matrix_text(src.as_bytes()).unwrap();
        assert_eq!(m, Mat::from_real(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap());
    }

    #[test]
    fn hermitian_storage_round_trip() {
        let h = Mat::new(
            2,
            2,
            vec![C64::new(1., 0.), C64::new(2., -1.), C64::new(2., 1.), C64::new(3., 0.)],
        )
        .unwrap()
        .certify_hermitian()
        .unwrap();
        let mut buf = Vec::new();
        write_matrix_text(&h, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix array complex hermitian\n2 2\n"));
        assert_eq!(text.lines().count(), 5);
        let back = read_matrix_text(&buf[..]).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_matrix_text("%%MatrixMarket matrix coordinate real general\n1 1 1\n".as_bytes()).is_err());
        assert!(read_matrix_text("%%MatrixMarket matrix array real general\n2 2\n1\n".as_bytes()).is_err());
        let mut bin = Vec::new();
        write_matrix_binary(&Mat::from_real(1, 2, &[1., 2.]).unwrap(), &mut bin).unwrap();
        bin[20] |= 1; // set the Hermitian flag on a non-square matrix
        assert!(read_matrix_binary(&bin[..]).is_err());
    }

    #[test]
    fn binary_layout() {
        let m = Mat::from_real(1, 1, &[0.5]).unwrap();
        let mut bin = Vec::new();
        write_matrix_binary(&m, &mut bin).unwrap();
        assert_eq!(&bin[..4], b"CMAT");
        assert_eq!(bin.len(), 4 + 8 + 8 + 4 + 16);
        assert_eq!(f64::from_le_bytes(bin[24..32].try_into().unwrap()), 0.5);
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let m = Mat::from_fn(rows, cols, |i, j| {
                let x = ((seed ^ (i * 31 + j) as u64).wrapping_mul(0x9e3779b97f4a7c15) >> 11) as f64;
                C64::new(x / 3e14 - 7.0, (x.sqrt() * 1e-3).sin() * 1e-200)
            });
            let mut t = Vec::new();
            write_matrix_text(&m, &mut t).unwrap();
            prop_assert_eq!(&read_matrix_text(&t[..]).unwrap(), &m);
            let mut b = Vec::new();
            write_matrix_binary(&m, &mut b).unwrap();
            prop_assert_eq!(&read_matrix_binary(&b[..]).unwrap(), &m);
        }
    }
}
