//! Binary operator blobs.
//!
//! Layout, all little endian: the 8-byte magic, then `u32` fields
//! `dim, n, dirs, cutoff, fiber, ordering, rows, cols`, then the matrix row-major
//! as `(re, im)` pairs of `f64`.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::GridOperator;
use crate::error::{Error, Result};
use crate::fiber::C64;
use crate::manifold::ModelManifold;

pub const OPERATOR_MAGIC: &[u8; 8] = b"PSDOOP01";

/// Version of the basis ordering: FFT-order frequencies, fiber index fastest.
const ORDERING: u32 = 1;

pub fn write_operator<W: Write>(op: &GridOperator, mut w: W) -> Result<()> {
    let m = op.manifold();
    w.write_all(OPERATOR_MAGIC)?;
    let header = [
        m.dim() as u32,
        m.n() as u32,
        m.dirs() as u32,
        op.cutoff() as u32,
        op.fiber() as u32,
        ORDERING,
        op.size() as u32,
        op.size() as u32,
    ];
    for h in header {
        w.write_all(&h.to_le_bytes())?;
    }
    let a = op.matrix();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            w.write_all(&a[(i, j)].re.to_le_bytes())?;
            w.write_all(&a[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_operator<R: Read>(mut r: R) -> Result<GridOperator> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != OPERATOR_MAGIC {
        return Err(Error::InvalidInput("not an operator blob (bad magic)".into()));
    }
    let mut header = [0u32; 8];
    for h in header.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *h = u32::from_le_bytes(b);
    }
    let [dim, n, dirs, cutoff, fiber, ordering, rows, cols] = header.map(|v| v as usize);
    if ordering != ORDERING as usize {
        return Err(Error::InvalidInput(format!("unknown basis ordering {ordering}")));
    }
    let manifold = ModelManifold::new(dim, n, dirs)?;
    if 2 * cutoff != n || rows != cols {
        return Err(Error::InvalidInput("inconsistent operator header".into()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut b = [0u8; 8];
    for _ in 0..rows * cols {
        r.read_exact(&mut b)?;
        let re = f64::from_le_bytes(b);
        r.read_exact(&mut b)?;
        data.push(C64::new(re, f64::from_le_bytes(b)));
    }
    GridOperator::new(manifold, fiber, DMatrix::from_row_slice(rows, cols, &data))
}
