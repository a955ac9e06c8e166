//! Cyclic Jacobi eigensolver for Hermitian matrices and the spectral
//! functions built on it.

use super::{TensorOperator, C64, ZERO};
use crate::error::{Error, Result};
use crate::tolerance;

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: TensorOperator,
}

impl Spectrum {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> TensorOperator {
        let v = &self.eigenvectors;
        let n = v.side();
        let w: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = v.clone();
        for r in 0..n {
            for c in 0..n {
                scaled.data[r * n + c] *= w[c];
            }
        }
        scaled.dot(&v.adjoint())
    }

    pub fn reconstruct(&self) -> TensorOperator {
        self.map(|l| C64::new(l, 0.0))
    }
}

fn ensure_hermitian(h: &TensorOperator) -> Result<()> {
    let res = h.hermiticity_residual();
    if res > tolerance::EIG_INPUT_HERMITIAN || res.is_nan() {
        return Err(Error::arg(format!("matrix is not Hermitian (residual {res:e})")));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eig(h: &TensorOperator) -> Result<Spectrum> {
    ensure_hermitian(h)?;
    let n = h.side();
    let mut a = h.hermitized().into_data();
    let mut v = TensorOperator::identity(h.dims()).into_data();

    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = tolerance::JACOBI_CONVERGENCE * total;
    let off = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[r * n + c].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > target {
        if sweeps == tolerance::JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence {
                knob: "jacobi_sweeps".into(),
                detail: format!("off-diagonal mass {:e} after {sweeps} sweeps", off(&a)),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = TensorOperator::from_fn(h.dims(), |r, c| v[r * n + order[c]]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Zero `a[p][q]` by `A <- J^dagger A J`, `V <- V J`.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta.is_infinite() {
        0.0
    } else {
        zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for r in 0..n {
        let x = a[r * n + p];
        let y = a[r * n + q];
        a[r * n + p] = x * jpp + y * jqp;
        a[r * n + q] = x * jpq + y * jqq;
    }
    for col in 0..n {
        let x = a[p * n + col];
        let y = a[q * n + col];
        a[p * n + col] = jpp.conj() * x + jqp.conj() * y;
        a[q * n + col] = jpq.conj() * x + jqq.conj() * y;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
    for r in 0..n {
        let x = v[r * n + p];
        let y = v[r * n + q];
        v[r * n + p] = x * jpp + y * jqp;
        v[r * n + q] = x * jpq + y * jqq;
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(h: &TensorOperator) -> Result<f64> {
    Ok(hermitian_eig(h)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// `D = ||r1 - r2||_1 / 2`.
pub fn trace_distance(r1: &TensorOperator, r2: &TensorOperator) -> Result<f64> {
    if r1.dims() != r2.dims() {
        return Err(Error::arg(format!(
            "trace distance between dims {:?} and {:?}",
            r1.dims(),
            r2.dims()
        )));
    }
    Ok(0.5 * trace_norm(&(r1 - r2))?)
}

/// `exp(-i h t)` through the spectral decomposition of `h`.
pub fn unitary_exp(h: &TensorOperator, t: f64) -> Result<TensorOperator> {
    let spec = hermitian_eig(h)?;
    Ok(spec.map(|l| C64::from_polar(1.0, -l * t)))
}
