//! Compressed sparse row matrices over complex scalars.
//!
//! The discretized operators are modest (at most a few million nonzeros), so a
//! self-contained CSR type with add/compose/adjoint is simpler than pulling in
//! a full sparse linear algebra stack.

use crate::scalar::{Cx, Scalar};
use std::io::Write;

#[derive(Clone, Debug)]
pub struct CsrMatrix<T: Scalar> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Cx<T>>,
}

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Clone, Debug)]
pub struct CooBuilder<T: Scalar> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, Cx<T>)>,
}

impl<T: Scalar> CooBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: Cx<T>) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value.re != T::zero() || value.im != T::zero() {
            self.entries.push((row, col, value));
        }
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; self.nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut values: Vec<Cx<T>> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_counts[r + 1] += row_counts[r];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr: row_counts, col_idx, values }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![Cx::new(T::one(), T::zero()); n],
        }
    }

    pub fn diagonal(diag: &[Cx<T>]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn apply(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in apply");
        let mut y = vec![Cx::new(T::zero(), T::zero()); self.nrows];
        for r in 0..self.nrows {
            let mut acc = Cx::new(T::zero(), T::zero());
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let nnz = self.nnz();
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            row_ptr[c + 1] += 1;
        }
        for c in 0..self.ncols {
            row_ptr[c + 1] += row_ptr[c];
        }
        let mut cursor = row_ptr.clone();
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![Cx::new(T::zero(), T::zero()); nnz];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let pos = cursor[c];
                cursor[c] += 1;
                col_idx[pos] = r;
                values[pos] = self.values[k].conj();
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    pub fn scale(&self, factor: Cx<T>) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = *v * factor;
        }
        out
    }

    /// `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: Cx<T>, other: &Self, beta: Cx<T>) -> Self {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut b = CooBuilder::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                b.push(r, self.col_idx[k], self.values[k] * alpha);
            }
            for k in other.row_ptr[r]..other.row_ptr[r + 1] {
                b.push(r, other.col_idx[k], other.values[k] * beta);
            }
        }
        b.build()
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in matmul");
        let n = other.ncols;
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx: Vec<usize> = Vec::new();
        let mut values: Vec<Cx<T>> = Vec::new();
        let zero = Cx::new(T::zero(), T::zero());
        let mut acc = vec![zero; n];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = self.values[k];
                let mid = self.col_idx[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.col_idx[k2];
                    if acc[c] == zero {
                        touched.push(c);
                    }
                    acc[c] += a * other.values[k2];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != zero {
                    col_idx.push(c);
                    values.push(acc[c]);
                }
                acc[c] = zero;
            }
            touched.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Self { nrows: self.nrows, ncols: n, row_ptr, col_idx, values }
    }

    /// Iterate over entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Cx<T>)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Coordinate-list text export: `row col re im` per line, row-major order.
    pub fn write_coo(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(out, "{} {} {} {}", r, c, v.re.to_f64_(), v.im.to_f64_())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn build_apply_roundtrip() {
        let mut b = CooBuilder::new(3, 3);
        b.push(0, 0, c(2.0, 0.0));
        b.push(0, 2, c(0.0, 1.0));
        b.push(2, 1, c(-1.0, 0.0));
        b.push(0, 2, c(0.0, 1.0)); // duplicate; summed
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        let y = m.apply(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(y[0], c(2.0, 6.0));
        assert_eq!(y[1], c(0.0, 0.0));
        assert_eq!(y[2], c(-2.0, 0.0));
    }

    #[test]
    fn adjoint_pairing() {
        let mut b = CooBuilder::new(2, 3);
        b.push(0, 1, c(1.0, 2.0));
        b.push(1, 0, c(-0.5, 0.25));
        b.push(1, 2, c(3.0, -1.0));
        let m = b.build();
        let ma = m.adjoint();
        let x = [c(0.3, -0.7), c(1.5, 0.2), c(-0.9, 0.4)];
        let y = [c(0.8, 0.1), c(-0.2, 0.6)];
        // <M x, y> == <x, M* y>
        let mx = m.apply(&x);
        let may = ma.apply(&y);
        let lhs: Cx<f64> = mx.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum();
        let rhs: Cx<f64> = x.iter().zip(may.iter()).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn matmul_against_dense() {
        let mut ba = CooBuilder::new(2, 2);
        ba.push(0, 0, c(1.0, 0.0));
        ba.push(0, 1, c(2.0, 0.0));
        ba.push(1, 1, c(0.0, 1.0));
        let a = ba.build();
        let mut bb = CooBuilder::new(2, 2);
        bb.push(0, 0, c(0.0, -1.0));
        bb.push(1, 0, c(1.0, 1.0));
        bb.push(1, 1, c(2.0, 0.0));
        let bm = bb.build();
        let p = a.matmul(&bm);
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let direct = a.apply(&bm.apply(&x));
        let composed = p.apply(&x);
        for (u, v) in direct.iter().zip(composed.iter()) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
