//! Binary eigenvector files.
//!
//! Layout, little-endian: magic `MAGEVEC1`, then `u64` dim, count, n_x,
//! n_modes; then per vector one `f64` energy followed by `dim` pairs
//! `(re, im)` in mode-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::assembly::Basis;
use crate::error::{invariant, Result};

pub const MAGIC: &[u8; 8] = b"MAGEVEC1";

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub n_x: usize,
    pub n_modes: usize,
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub fn write_vectors(path: &Path, basis: &Basis, states: &[(f64, &[C64])]) -> Result<()> {
    let dim = basis.dim();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    for v in [dim, states.len(), basis.n_x(), basis.n_modes()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for (e, v) in states {
        if v.len() != dim {
            return invariant(format!("vector of length {} in a basis of dimension {dim}", v.len()));
        }
        w.write_all(&e.to_le_bytes())?;
        for z in v.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_vectors(path: &Path) -> Result<VectorFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return invariant(format!("{}: not an eigenvector file", path.display()));
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut BufReader<File>| -> Result<usize> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word) as usize)
    };
    let dim = next_u64(&mut r)?;
    let count = next_u64(&mut r)?;
    let n_x = next_u64(&mut r)?;
    let n_modes = next_u64(&mut r)?;
    if n_x * n_modes != dim {
        return invariant(format!("{}: header dim {dim} != n_x·n_modes", path.display()));
    }
    let mut f = [0u8; 8];
    let mut next_f64 = |r: &mut BufReader<File>| -> Result<f64> {
        r.read_exact(&mut f)?;
        Ok(f64::from_le_bytes(f))
    };
    let mut energies = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        energies.push(next_f64(&mut r)?);
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = next_f64(&mut r)?;
            let im = next_f64(&mut r)?;
            v.push(C64::new(re, im));
        }
        vectors.push(v);
    }
    Ok(VectorFile {
        n_x,
        n_modes,
        energies,
        vectors,
    })
}
