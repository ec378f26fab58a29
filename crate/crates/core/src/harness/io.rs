//! Binary field dumps.
//!
//! Dense: the header line `APTT1 <D> <m> <order>` followed by the entries as
//! little-endian `f64` in row-major order. TT: the header line
//! `APTT1 <D> <m> <order> tt`, then for every core three little-endian `u64`
//! dimensions `(r_prev, n, r_next)` and its entries in row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array3;

use crate::error::{AptError, Result};
use crate::tt::{DenseTensor, TtTensor};

const MAGIC: &str = "APTT1";

pub fn write_dense<W: Write>(mut w: W, dim: usize, m: usize, f: &DenseTensor) -> Result<()> {
    writeln!(w, "{MAGIC} {dim} {m} {}", f.order())?;
    for v in f.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_tt<W: Write>(mut w: W, dim: usize, m: usize, f: &TtTensor) -> Result<()> {
    writeln!(w, "{MAGIC} {dim} {m} {} tt", f.order())?;
    for c in f.cores() {
        let (a, n, b) = c.dim();
        for x in [a, n, b] {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_header<R: BufRead>(r: &mut R, tt: bool) -> Result<(usize, usize, usize)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let parts: Vec<&str> = line.trim_end_matches('\n').split(' ').collect();
    let expect = if tt { 5 } else { 4 };
    if parts.len() != expect || parts[0] != MAGIC || (tt && parts[4] != "tt") {
        return Err(AptError::Parse(format!("bad dump header `{}`", line.trim_end())));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| AptError::Parse(format!("bad header field `{s}`")))
    };
    Ok((num(parts[1])?, num(parts[2])?, num(parts[3])?))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect())
}

/// Returns `(D, m, field)`.
pub fn read_dense<R: Read>(r: R) -> Result<(usize, usize, DenseTensor)> {
    let mut r = BufReader::new(r);
    let (dim, m, order) = read_header(&mut r, false)?;
    let shape = vec![m; order];
    let data = read_f64s(&mut r, m.pow(order as u32))?;
    Ok((dim, m, DenseTensor::new(shape, data)?))
}

/// Returns `(D, m, field)`.
pub fn read_tt<R: Read>(r: R) -> Result<(usize, usize, TtTensor)> {
    let mut r = BufReader::new(r);
    let (dim, m, order) = read_header(&mut r, true)?;
    let mut cores = Vec::with_capacity(order);
    for _ in 0..order {
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *d = u64::from_le_bytes(b) as usize;
        }
        let data = read_f64s(&mut r, dims.iter().product())?;
        cores.push(Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)?);
    }
    Ok((dim, m, TtTensor::new(cores)?))
}

pub fn save_dense(path: &Path, dim: usize, m: usize, f: &DenseTensor) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(file, dim, m, f)
}

pub fn save_tt(path: &Path, dim: usize, m: usize, f: &TtTensor) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tt(file, dim, m, f)
}

pub fn load_dense(path: &Path) -> Result<(usize, usize, DenseTensor)> {
    read_dense(std::fs::File::open(path)?)
}

pub fn load_tt(path: &Path) -> Result<(usize, usize, TtTensor)> {
    read_tt(std::fs::File::open(path)?)
}
