//! Compressed-row view of a dense operator, used to apply the mostly-zero
//! ladder and coupling operators to dense density matrices.

use super::{TensorOperator, C64};

#[derive(Clone, Debug)]
pub struct SparseRows {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseRows {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(op: &TensorOperator) -> Self {
        let n = op.side();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            for c in 0..n {
                let v = op.get(r, c);
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += alpha * A X` for row-major `X`.
    pub fn mul_left(&self, alpha: C64, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        for r in 0..n {
            let dst = &mut out[r * n..(r + 1) * n];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let a = alpha * self.vals[k];
                let src = &x[self.cols[k] * n..(self.cols[k] + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }

    /// `out += alpha * X A^dagger` for row-major `X`.
    pub fn mul_right_adjoint(&self, alpha: C64, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        for c in 0..n {
            for k in self.row_ptr[c]..self.row_ptr[c + 1] {
                let a = alpha * self.vals[k].conj();
                let col = self.cols[k];
                for r in 0..n {
                    out[r * n + c] += a * x[r * n + col];
                }
            }
        }
    }

    /// `out += alpha * A X A^dagger`; `scratch` must hold `n * n` entries.
    pub fn sandwich(&self, alpha: C64, x: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        scratch.fill(super::ZERO);
        self.mul_left(super::ONE, x, scratch);
        self.mul_right_adjoint(alpha, scratch, out);
    }
}
