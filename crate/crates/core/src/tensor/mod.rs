//! Dense complex operators carrying a tensor-product factor structure.
//!
//! A [`TensorOperator`] is a square row-major complex matrix whose side equals
//! the product of its factor dimensions. The leftmost factor is the outermost
//! index, so `kron(a, b)` has `a` as the slow-varying block index.

mod banded;
mod eig;
mod sparse;

pub use banded::RealBands;
pub use eig::{hermitian_eig, trace_distance, trace_norm, unitary_exp, Spectrum};
pub use sparse::SparseRows;

use std::ops::{Add, Mul, Sub};

use matrixmultiply::CGemmOption;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator {
    dims: Vec<usize>,
    data: Vec<C64>,
}

fn side_of(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::arg(format!(
            "factor dimensions must be a nonempty list of positive integers, got {dims:?}"
        )));
    }
    Ok(side_of(dims))
}

impl TensorOperator {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let side = check_dims(&dims)?;
        if data.len() != side * side {
            return Err(Error::arg(format!(
                "data length {} does not match a {side}x{side} matrix",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let side = side_of(dims);
        Self {
            dims: dims.to_vec(),
            data: vec![ZERO; side * side],
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let mut out = Self::zeros(dims);
        let side = out.side();
        for i in 0..side {
            out.data[i * side + i] = ONE;
        }
        out
    }

    pub fn from_fn(dims: &[usize], f: impl Fn(usize, usize) -> C64) -> Self {
        let side = side_of(dims);
        let data = (0..side * side).map(|k| f(k / side, k % side)).collect();
        Self {
            dims: dims.to_vec(),
            data,
        }
    }

    /// Real matrix from row-major entries.
    pub fn from_real(dims: &[usize], entries: &[f64]) -> Result<Self> {
        Self::new(dims.to_vec(), entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag_real(dims: &[usize], diag: &[f64]) -> Result<Self> {
        let side = check_dims(dims)?;
        if diag.len() != side {
            return Err(Error::arg(format!("diagonal of length {} for side {side}", diag.len())));
        }
        let mut out = Self::zeros(dims);
        for (i, &d) in diag.iter().enumerate() {
            out.data[i * side + i] = C64::new(d, 0.0);
        }
        Ok(out)
    }

    /// Projector |v><v| for a (not necessarily normalized) vector.
    pub fn projector(dims: &[usize], v: &[C64]) -> Result<Self> {
        let side = check_dims(dims)?;
        if v.len() != side {
            return Err(Error::arg("vector length does not match dims"));
        }
        Ok(Self::from_fn(dims, |r, c| v[r] * v[c].conj()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        side_of(&self.dims)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.side() + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        let side = self.side();
        self.data[r * side + c] = v;
    }

    /// Re-tag the factor structure without touching the entries.
    pub fn with_dims(mut self, dims: &[usize]) -> Result<Self> {
        let side = check_dims(dims)?;
        if side != self.side() {
            return Err(Error::arg(format!(
                "cannot re-tag side {} operator with dims {dims:?}",
                self.side()
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Matrix product. Panics when the sides differ.
    pub fn dot(&self, other: &TensorOperator) -> TensorOperator {
        let n = self.side();
        assert_eq!(n, other.side(), "operator side mismatch in product");
        let mut out = TensorOperator::zeros(&self.dims);
        gemm(&self.data, &other.data, &mut out.data, n, n, n);
        out
    }

    pub fn adjoint(&self) -> TensorOperator {
        let n = self.side();
        TensorOperator::from_fn(&self.dims, |r, c| self.data[c * n + r].conj())
    }

    pub fn transpose(&self) -> TensorOperator {
        let n = self.side();
        TensorOperator::from_fn(&self.dims, |r, c| self.data[c * n + r])
    }

    pub fn trace(&self) -> C64 {
        let n = self.side();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &TensorOperator) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.side();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                let d = self.data[r * n + c] - self.data[c * n + r].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitized(&self) -> TensorOperator {
        let n = self.side();
        TensorOperator::from_fn(&self.dims, |r, c| {
            (self.data[r * n + c] + self.data[c * n + r].conj()) * 0.5
        })
    }

    pub fn scaled(&self, s: C64) -> TensorOperator {
        TensorOperator {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: C64, x: &TensorOperator) {
        assert_eq!(self.data.len(), x.data.len());
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    /// `u * self * u^dagger`.
    pub fn conjugated_by(&self, u: &TensorOperator) -> TensorOperator {
        u.dot(self).dot(&u.adjoint())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().dot(self);
        p.max_abs_diff(&TensorOperator::identity(&self.dims)) <= tol
    }

    /// Checks Hermiticity, unit trace and positivity against the crate
    /// density-matrix tolerances.
    pub fn validate_density(&self) -> Result<()> {
        self.validate_density_with(tolerance::HERMITIAN, tolerance::UNIT_TRACE, tolerance::MIN_EIGENVALUE)
    }

    pub fn validate_density_with(&self, herm: f64, trace: f64, min_eig: f64) -> Result<()> {
        let h = self.hermiticity_residual();
        if h > herm {
            return Err(Error::arg(format!("density matrix not Hermitian (residual {h:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > trace {
            return Err(Error::arg(format!("density matrix trace {tr} is not 1")));
        }
        let spec = hermitian_eig(&self.hermitized())?;
        let lo = spec.eigenvalues[0];
        if lo < min_eig {
            return Err(Error::arg(format!("density matrix has negative eigenvalue {lo:e}")));
        }
        Ok(())
    }
}

impl Add for &TensorOperator {
    type Output = TensorOperator;
    fn add(self, rhs: &TensorOperator) -> TensorOperator {
        assert_eq!(self.data.len(), rhs.data.len(), "operator size mismatch in sum");
        TensorOperator {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &TensorOperator {
    type Output = TensorOperator;
    fn sub(self, rhs: &TensorOperator) -> TensorOperator {
        assert_eq!(self.data.len(), rhs.data.len(), "operator size mismatch in difference");
        TensorOperator {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &TensorOperator {
    type Output = TensorOperator;
    fn mul(self, rhs: &TensorOperator) -> TensorOperator {
        self.dot(rhs)
    }
}

/// Kronecker product with `a` as the outer factor.
pub fn kron(a: &TensorOperator, b: &TensorOperator) -> TensorOperator {
    let (na, nb) = (a.side(), b.side());
    let n = na * nb;
    let mut data = vec![ZERO; n * n];
    for ar in 0..na {
        for ac in 0..na {
            let x = a.data[ar * na + ac];
            if x == ZERO {
                continue;
            }
            for br in 0..nb {
                let row = (ar * nb + br) * n + ac * nb;
                let src = &b.data[br * nb..(br + 1) * nb];
                for (dst, y) in data[row..row + nb].iter_mut().zip(src) {
                    *dst = x * y;
                }
            }
        }
    }
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    TensorOperator { dims, data }
}

/// Mixed-radix digits of `index` for the given factor dimensions.
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Trace out every factor not listed in `keep` (0-based factor indices).
pub fn partial_trace(op: &TensorOperator, keep: &[usize]) -> Result<TensorOperator> {
    let dims = op.dims();
    if keep.is_empty() {
        return Err(Error::arg("partial trace needs at least one kept factor"));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || *kept.last().unwrap() >= dims.len() {
        return Err(Error::arg(format!(
            "invalid kept factors {keep:?} for {} factors",
            dims.len()
        )));
    }
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();

    let n = op.side();
    let mut kidx = vec![0usize; n];
    let mut tidx = vec![0usize; n];
    let mut dig = vec![0usize; dims.len()];
    for r in 0..n {
        digits(r, dims, &mut dig);
        kidx[r] = kept.iter().fold(0, |acc, &k| acc * dims[k] + dig[k]);
        tidx[r] = traced.iter().fold(0, |acc, &k| acc * dims[k] + dig[k]);
    }

    let mut out = TensorOperator::zeros(&kept_dims);
    let m = out.side();
    for r in 0..n {
        for c in 0..n {
            if tidx[r] == tidx[c] {
                out.data[kidx[r] * m + kidx[c]] += op.data[r * n + c];
            }
        }
    }
    Ok(out)
}

/// `I ⊗ … ⊗ local ⊗ … ⊗ I` with `local` on factor `factor` of `dims`.
pub fn embed(local: &TensorOperator, dims: &[usize], factor: usize) -> Result<TensorOperator> {
    check_dims(dims)?;
    if factor >= dims.len() || dims[factor] != local.side() {
        return Err(Error::arg(format!(
            "cannot place a side-{} operator on factor {factor} of {dims:?}",
            local.side()
        )));
    }
    let left = TensorOperator::identity(&[side_of(&dims[..factor])]);
    let right = TensorOperator::identity(&[side_of(&dims[factor + 1..])]);
    let out = kron(&kron(&left, local), &right);
    out.with_dims(dims)
}

/// Row-major complex product `c = a * b` with `a: m x k`, `b: k x n`.
pub(crate) fn gemm(a: &[C64], b: &[C64], c: &mut [C64], m: usize, k: usize, n: usize) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    gemm_strided(a, [k, 1], b, [n, 1], c, [n, 1], m, k, n);
}

/// `c = a * b` with explicit (row, column) strides for every operand.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_strided(
    a: &[C64],
    sa: [usize; 2],
    b: &[C64],
    sb: [usize; 2],
    c: &mut [C64],
    sc: [usize; 2],
    m: usize,
    k: usize,
    n: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |s: [usize; 2], r: usize, q: usize| (r - 1) * s[0] + (q - 1) * s[1];
    if k == 0 {
        for r in 0..m {
            for q in 0..n {
                c[r * sc[0] + q * sc[1]] = ZERO;
            }
        }
        return;
    }
    assert!(last(sa, m, k) < a.len() && last(sb, k, n) < b.len() && last(sc, m, n) < c.len());
    // SAFETY: Complex64 is repr(C) { re, im }, layout-identical to [f64; 2];
    // the asserts above bound every addressed element.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            sa[0] as isize,
            sa[1] as isize,
            b.as_ptr() as *const [f64; 2],
            sb[0] as isize,
            sb[1] as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            sc[0] as isize,
            sc[1] as isize,
        );
    }
}

/// Pauli and ladder operators on a single qubit (`|e>` is index 0, so that
/// `sigma_z = diag(1, -1)`).
pub mod qubit {
    use super::{TensorOperator, C64, I, ONE, ZERO};

    pub fn sigma_x() -> TensorOperator {
        TensorOperator::new(vec![2], vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    pub fn sigma_y() -> TensorOperator {
        TensorOperator::new(vec![2], vec![ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn sigma_z() -> TensorOperator {
        TensorOperator::new(vec![2], vec![ONE, ZERO, ZERO, -ONE]).unwrap()
    }

    /// Raising operator `|e><g|`.
    pub fn sigma_plus() -> TensorOperator {
        TensorOperator::new(vec![2], vec![ZERO, ONE, ZERO, ZERO]).unwrap()
    }

    /// Lowering operator `|g><e|`.
    pub fn sigma_minus() -> TensorOperator {
        TensorOperator::new(vec![2], vec![ZERO, ZERO, ONE, ZERO]).unwrap()
    }

    /// Density matrix of the pure state with Bloch vector `(x, y, z)`;
    /// shorter vectors give mixed states.
    pub fn bloch_state(x: f64, y: f64, z: f64) -> TensorOperator {
        let h = 0.5;
        TensorOperator::new(
            vec![2],
            vec![
                C64::new(h * (1.0 + z), 0.0),
                C64::new(h * x, -h * y),
                C64::new(h * x, h * y),
                C64::new(h * (1.0 - z), 0.0),
            ],
        )
        .unwrap()
    }
}
