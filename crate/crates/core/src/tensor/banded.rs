//! Real operators stored by diagonals, applied row by row to complex
//! row-major matrices viewed as interleaved `f64` pairs. Every update is a
//! real scalar times a contiguous run of `f64`, which vectorizes cleanly.

use super::TensorOperator;

#[derive(Clone, Debug)]
struct Band {
    offset: isize,
    /// `A[i][i + offset]`, zero where the index falls outside.
    values: Vec<f64>,
    /// `values` with each entry repeated for the real and imaginary slots.
    paired: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RealBands {
    n: usize,
    bands: Vec<Band>,
}

impl RealBands {
    /// `scale * op` by diagonals, or `None` if `op` has an imaginary part.
    pub fn new(op: &TensorOperator, scale: f64) -> Option<Self> {
        if op.data().iter().any(|z| z.im != 0.0) {
            return None;
        }
        let n = op.side();
        let mut bands = Vec::new();
        for offset in -(n as isize - 1)..n as isize {
            let values: Vec<f64> = (0..n)
                .map(|i| {
                    let j = i as isize + offset;
                    if j >= 0 && (j as usize) < n {
                        scale * op.get(i, j as usize).re
                    } else {
                        0.0
                    }
                })
                .collect();
            if values.iter().any(|v| *v != 0.0) {
                let paired = values.iter().flat_map(|v| [*v, *v]).collect();
                bands.push(Band { offset, values, paired });
            }
        }
        Some(Self { n, bands })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// `dst += (A X)[r]` where `x` is the whole matrix as interleaved pairs.
    #[inline(always)]
    pub fn left_row(&self, r: usize, x: &[f64], dst: &mut [f64]) {
        let w = 2 * self.n;
        for b in &self.bands {
            let a = b.values[r];
            if a == 0.0 {
                continue;
            }
            let s = (r as isize + b.offset) as usize;
            for (d, v) in dst.iter_mut().zip(&x[s * w..(s + 1) * w]) {
                *d += a * v;
            }
        }
    }

    /// `dst += (X A^T)[r]` given row `r` of `X` as interleaved pairs.
    #[inline(always)]
    pub fn right_row(&self, row: &[f64], dst: &mut [f64]) {
        let n = self.n;
        for b in &self.bands {
            let (lo, hi) = if b.offset >= 0 {
                (0, n - b.offset as usize)
            } else {
                (b.offset.unsigned_abs(), n)
            };
            let shift = 2 * b.offset;
            let src = &row[(2 * lo as isize + shift) as usize..(2 * hi as isize + shift) as usize];
            for ((d, v), a) in dst[2 * lo..2 * hi].iter_mut().zip(src).zip(&b.paired[2 * lo..2 * hi]) {
                *d += a * v;
            }
        }
    }
}
