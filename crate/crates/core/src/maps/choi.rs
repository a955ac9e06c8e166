//! Choi matrices and superoperators of qubit maps.
//!
//! Convention: `rho_L = (1/2) sum_ij |i><j| ⊗ L(|i><j|)` on `[ancilla, system]`,
//! so `Tr rho_L = 1` for trace-preserving `L`. The superoperator acts on
//! row-major vectorized qubit operators: `M[(a,b),(i,j)] = L(|i><j|)_ab`.

use crate::error::{Error, Result};
use crate::tensor::{hermitian_eig, kron, partial_trace, TensorOperator, C64, ONE, ZERO};
use crate::tolerance;

#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    data: TensorOperator,
    /// Time spanned by the map.
    pub span: f64,
    /// Free-form description of how the map was produced.
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChoiDiagnostics {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub trace_error: f64,
    /// `max |Tr_S rho_L - I/2|`.
    pub tp_residual: f64,
}

impl ChoiDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.hermiticity <= tolerance::CHOI_HERMITIAN
            && self.min_eigenvalue >= tolerance::CHOI_MIN_EIGENVALUE
            && self.trace_error <= tolerance::CHOI_TRACE
            && self.tp_residual <= tolerance::CHOI_TRACE
    }
}

impl ChoiMatrix {
    pub fn new(data: TensorOperator, span: f64, label: impl Into<String>) -> Result<Self> {
        if data.dims() != [2, 2] {
            return Err(Error::arg(format!(
                "qubit Choi matrix needs dims [2, 2], got {:?}",
                data.dims()
            )));
        }
        Ok(Self {
            data,
            span,
            label: label.into(),
        })
    }

    /// Choi matrix of the identity map.
    pub fn identity() -> Self {
        Self::from_unitary(&TensorOperator::identity(&[2]), 0.0, "identity")
    }

    /// Choi matrix of `rho -> u rho u^dagger`.
    pub fn from_unitary(u: &TensorOperator, span: f64, label: impl Into<String>) -> Self {
        Superoperator::conjugation(u).to_choi(span, label)
    }

    pub fn data(&self) -> &TensorOperator {
        &self.data
    }

    pub fn diagnostics(&self) -> Result<ChoiDiagnostics> {
        let spec = hermitian_eig(&self.data.hermitized())?;
        let marginal = partial_trace(&self.data, &[0])?;
        let half = TensorOperator::identity(&[2]).scaled(C64::new(0.5, 0.0));
        Ok(ChoiDiagnostics {
            hermiticity: self.data.hermiticity_residual(),
            min_eigenvalue: spec.eigenvalues[0],
            trace_error: (self.data.trace() - ONE).norm(),
            tp_residual: marginal.max_abs_diff(&half),
        })
    }

    /// Errors when any CPTP diagnostic is out of tolerance.
    pub fn check(&self) -> Result<ChoiDiagnostics> {
        let d = self.diagnostics()?;
        if !d.is_valid() {
            return Err(Error::Convergence {
                knob: "n_max".into(),
                detail: format!("Choi matrix `{}` is not CPTP within tolerance: {d:?}", self.label),
            });
        }
        Ok(d)
    }

    pub fn superoperator(&self) -> Superoperator {
        segment_superoperator(self)
    }

    pub fn distance(&self, other: &ChoiMatrix) -> Result<f64> {
        crate::tensor::trace_distance(&self.data, &other.data)
    }
}

/// Linear action of a qubit map on row-major vectorized operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superoperator {
    pub m: [[C64; 4]; 4],
}

impl Superoperator {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m }
    }

    /// `rho -> k rho k^dagger`.
    pub fn conjugation(k: &TensorOperator) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        m[a * 2 + b][i * 2 + j] = k.get(a, i) * k.get(b, j).conj();
                    }
                }
            }
        }
        Self { m }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[r][k] * other.m[k][c]).sum();
            }
        }
        Superoperator { m }
    }

    pub fn pow(&self, n: usize) -> Superoperator {
        (0..n).fold(Superoperator::identity(), |acc, _| self.compose(&acc))
    }

    pub fn apply(&self, rho: &TensorOperator) -> TensorOperator {
        let v = [rho.get(0, 0), rho.get(0, 1), rho.get(1, 0), rho.get(1, 1)];
        TensorOperator::from_fn(&[2], |a, b| (0..4).map(|k| self.m[a * 2 + b][k] * v[k]).sum())
    }

    pub fn to_choi(&self, span: f64, label: impl Into<String>) -> ChoiMatrix {
        let data = TensorOperator::from_fn(&[2, 2], |r, c| {
            let (i, a) = (r / 2, r % 2);
            let (j, b) = (c / 2, c % 2);
            self.m[a * 2 + b][i * 2 + j] * 0.5
        });
        ChoiMatrix {
            data,
            span,
            label: label.into(),
        }
    }
}

/// Superoperator of the map behind `choi`.
pub fn segment_superoperator(choi: &ChoiMatrix) -> Superoperator {
    let c = &choi.data;
    let mut m = [[ZERO; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    m[a * 2 + b][i * 2 + j] = c.get(i * 2 + a, j * 2 + b) * 2.0;
                }
            }
        }
    }
    Superoperator { m }
}

/// `L rho = d Tr_A[(rho^T ⊗ I) rho_L]` with `d = 2`.
pub fn apply_choi(choi: &ChoiMatrix, rho: &TensorOperator) -> Result<TensorOperator> {
    if rho.dims() != [2] {
        return Err(Error::arg(format!("qubit state expected, got dims {:?}", rho.dims())));
    }
    let lifted = kron(&rho.transpose(), &TensorOperator::identity(&[2]));
    let out = partial_trace(&lifted.dot(&choi.data), &[1])?;
    Ok(out.scaled(C64::new(2.0, 0.0)))
}

/// `segment` composed with itself `n` times, iterated through the
/// superoperator of its system output.
pub fn compose_erased(segment: &ChoiMatrix, n: usize) -> Result<ChoiMatrix> {
    if n == 0 {
        return Err(Error::arg("erased composition needs n >= 1"));
    }
    let s = segment.superoperator();
    Ok(s.pow(n)
        .to_choi(segment.span * n as f64, format!("erased {n} x ({})", segment.label)))
}
