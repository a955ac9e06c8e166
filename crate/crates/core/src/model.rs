//! Dissipative quantum Rabi model: a qubit coupled to a damped, thermally
//! driven oscillator truncated at `n_max` photons.
//!
//! Operators live on `[2, n_max + 1]` with the qubit as the outer factor.
//! The qubit basis is `(|e>, |g>)`, so `sigma_z = diag(1, -1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{embed, kron, qubit, RealBands, SparseRows, TensorOperator, C64, I, ZERO};
use crate::tolerance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `g (sigma+ + sigma-)(a + a^dagger)`.
    #[default]
    Rabi,
    /// Rotating-wave form `g (sigma+ a + sigma- a^dagger)`.
    JaynesCummings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RabiParams {
    pub omega_s: f64,
    pub omega_e: f64,
    pub g: f64,
    pub gamma: f64,
    pub nbar: f64,
    pub n_max: usize,
    pub coupling: Coupling,
    /// Accept an `n_max` below [`truncation_floor`].
    pub allow_below_floor: bool,
}

/// Smallest Fock cutoff accepted without an explicit override.
pub fn truncation_floor(nbar: f64) -> usize {
    (4.0 * nbar + 8.0).ceil() as usize
}

/// Thermal weight lost by truncating above `n_max`.
pub fn thermal_tail(nbar: f64, n_max: usize) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    (nbar / (1.0 + nbar)).powi(n_max as i32 + 1)
}

impl RabiParams {
    /// Parameters with `omega_s = 1` and `n_max` at the truncation floor.
    pub fn new(omega_e: f64, g: f64, gamma: f64, nbar: f64) -> Self {
        Self {
            omega_s: 1.0,
            omega_e,
            g,
            gamma,
            nbar,
            n_max: truncation_floor(nbar.max(0.0)),
            coupling: Coupling::Rabi,
            allow_below_floor: false,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn below_floor(mut self, allow: bool) -> Self {
        self.allow_below_floor = allow;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_s, self.omega_e, self.g, self.gamma, self.nbar]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::arg("model parameters must be finite"));
        }
        if self.omega_s <= 0.0 || self.omega_e <= 0.0 {
            return Err(Error::arg("omega_s and omega_e must be positive"));
        }
        if self.g < 0.0 || self.gamma < 0.0 || self.nbar < 0.0 {
            return Err(Error::arg("g, gamma and nbar must be nonnegative"));
        }
        if self.n_max < 1 {
            return Err(Error::arg("n_max must be at least 1"));
        }
        let floor = truncation_floor(self.nbar);
        if self.n_max < floor && !self.allow_below_floor {
            return Err(Error::arg(format!(
                "n_max = {} is below the truncation floor {floor} for nbar = {}",
                self.n_max, self.nbar
            )));
        }
        Ok(())
    }

    /// Fastest rate entering the step-size rule.
    pub fn omega_max(&self) -> f64 {
        self.omega_s + self.omega_e + self.gamma * (self.nbar + 1.0) * self.n_max as f64
    }

    pub fn dims(&self) -> [usize; 2] {
        [2, self.n_max + 1]
    }
}

/// Truncated annihilation operator on `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> TensorOperator {
    TensorOperator::from_fn(&[n_max + 1], |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// Precomputed pieces of the Lindblad right-hand side.
#[derive(Clone, Debug)]
enum Kernel {
    /// `-i (H_eff X - X H_eff^dagger) + sum_k r_k L_k X L_k^dagger` on sparse rows.
    General {
        h_eff: SparseRows,
        jumps: Vec<(f64, SparseRows)>,
    },
    /// Same form with real `H` and real jumps, split as
    /// `-i [H, X] - (G X + X G) / 2 + sum_k r_k L_k X L_k^T` with `G = sum_k r_k L_k^T L_k`.
    Real {
        h_left: RealBands,
        h_right: RealBands,
        g_half: RealBands,
        jumps: Vec<(RealBands, RealBands)>,
    },
}

impl Kernel {
    fn new(hamiltonian: &TensorOperator, jumps: &[(f64, TensorOperator)]) -> Self {
        let active: Vec<_> = jumps.iter().filter(|(rate, _)| *rate > 0.0).collect();
        let mut g = TensorOperator::zeros(hamiltonian.dims());
        for (rate, op) in &active {
            g.axpy(C64::new(*rate, 0.0), &op.adjoint().dot(op));
        }
        if hamiltonian.side() >= 2 {
            let real = (|| {
                let jumps = active
                    .iter()
                    .map(|(rate, op)| Some((RealBands::new(op, 1.0)?, RealBands::new(op, *rate)?)))
                    .collect::<Option<Vec<_>>>()?;
                Some(Kernel::Real {
                    h_left: RealBands::new(hamiltonian, 1.0)?,
                    h_right: RealBands::new(hamiltonian, -1.0)?,
                    g_half: RealBands::new(&g, -0.5)?,
                    jumps,
                })
            })();
            if let Some(k) = real {
                return k;
            }
        }
        let mut h_eff = hamiltonian.clone();
        h_eff.axpy(C64::new(0.0, -0.5), &g);
        Kernel::General {
            h_eff: SparseRows::from_dense(&h_eff),
            jumps: active
                .iter()
                .map(|(rate, op)| (*rate, SparseRows::from_dense(op)))
                .collect(),
        }
    }

    fn is_trivial(&self) -> bool {
        match self {
            Kernel::General { h_eff, jumps } => h_eff.nnz() == 0 && jumps.is_empty(),
            Kernel::Real { h_left, jumps, .. } => h_left.band_count() == 0 && jumps.is_empty(),
        }
    }
}

/// Row-fused real kernel; `rows` holds at least `4 * side` values.
#[inline(always)]
fn apply_real_body(
    h_left: &RealBands,
    h_right: &RealBands,
    g_half: &RealBands,
    jumps: &[(RealBands, RealBands)],
    x: &[f64],
    out: &mut [f64],
    rows: &mut [f64],
) {
    let w = 2 * h_left.side();
    let (buf, sbuf) = rows[..2 * w].split_at_mut(w);
    for (r, orow) in out.chunks_exact_mut(w).enumerate() {
        let xrow = &x[r * w..(r + 1) * w];
        buf.fill(0.0);
        h_left.left_row(r, x, buf);
        h_right.right_row(xrow, buf);
        for (o, b) in orow.chunks_exact_mut(2).zip(buf.chunks_exact(2)) {
            o[0] = b[1];
            o[1] = -b[0];
        }
        g_half.left_row(r, x, orow);
        g_half.right_row(xrow, orow);
        for (left, right) in jumps {
            sbuf.fill(0.0);
            left.left_row(r, x, sbuf);
            right.right_row(sbuf, orow);
        }
    }
}

// Same code compiled with wider vectors. No FMA, so results match the
// baseline build bit for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn apply_real_avx2(
    h_left: &RealBands,
    h_right: &RealBands,
    g_half: &RealBands,
    jumps: &[(RealBands, RealBands)],
    x: &[f64],
    out: &mut [f64],
    rows: &mut [f64],
) {
    apply_real_body(h_left, h_right, g_half, jumps, x, out, rows)
}

#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    hamiltonian: TensorOperator,
    jumps: Vec<(f64, TensorOperator)>,
    kernel: Kernel,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: TensorOperator, jumps: Vec<(f64, TensorOperator)>) -> Result<Self> {
        let res = hamiltonian.hermiticity_residual();
        if res > tolerance::HERMITIAN {
            return Err(Error::arg(format!("Hamiltonian not Hermitian (residual {res:e})")));
        }
        for (rate, op) in &jumps {
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(Error::arg(format!("jump rate {rate} must be finite and nonnegative")));
            }
            if op.dims() != hamiltonian.dims() {
                return Err(Error::arg("jump operator dims differ from the Hamiltonian"));
            }
        }
        let kernel = Kernel::new(&hamiltonian, &jumps);
        Ok(Self {
            hamiltonian,
            jumps,
            kernel,
        })
    }

    pub fn hamiltonian(&self) -> &TensorOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(f64, TensorOperator)] {
        &self.jumps
    }

    pub fn dims(&self) -> &[usize] {
        self.hamiltonian.dims()
    }

    pub fn side(&self) -> usize {
        self.hamiltonian.side()
    }

    /// Raw right-hand side on row-major data of any (not necessarily
    /// Hermitian) operator; `scratch` must hold `side^2` entries.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        match &self.kernel {
            Kernel::General { h_eff, jumps } => {
                out.fill(ZERO);
                h_eff.mul_left(-I, x, out);
                h_eff.mul_right_adjoint(I, x, out);
                for (rate, op) in jumps {
                    op.sandwich(C64::new(*rate, 0.0), x, scratch, out);
                }
            }
            Kernel::Real {
                h_left,
                h_right,
                g_half,
                jumps,
            } => {
                let x: &[f64] = bytemuck::cast_slice(x);
                let out: &mut [f64] = bytemuck::cast_slice_mut(out);
                let rows: &mut [f64] = bytemuck::cast_slice_mut(scratch);
                #[cfg(target_arch = "x86_64")]
                if std::arch::is_x86_feature_detected!("avx2") {
                    // SAFETY: the CPU supports AVX2, checked just above.
                    unsafe { apply_real_avx2(h_left, h_right, g_half, jumps, x, out, rows) };
                    return;
                }
                apply_real_body(h_left, h_right, g_half, jumps, x, out, rows);
            }
        }
    }

    /// `true` when there is no Hamiltonian and no active jump.
    pub fn is_trivial(&self) -> bool {
        self.kernel.is_trivial()
    }
}

/// `-i[H, rho] + sum_k r_k (L rho L^dagger - {L^dagger L, rho} / 2)`.
pub fn lindblad_rhs(gen: &LindbladGenerator, rho: &TensorOperator) -> Result<TensorOperator> {
    if rho.dims() != gen.dims() {
        return Err(Error::arg(format!(
            "state dims {:?} do not match generator dims {:?}",
            rho.dims(),
            gen.dims()
        )));
    }
    let n = gen.side();
    let mut out = TensorOperator::zeros(gen.dims());
    let mut scratch = vec![ZERO; n * n];
    gen.apply_into(rho.data(), out.data_mut(), &mut scratch);
    Ok(out)
}

/// Bose-Einstein populations truncated at `n_max` and renormalized.
pub fn thermal_state(nbar: f64, n_max: usize) -> Result<TensorOperator> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::arg(format!("nbar = {nbar} must be finite and nonnegative")));
    }
    let ratio = nbar / (1.0 + nbar);
    let mut weights: Vec<f64> = (0..=n_max).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    TensorOperator::diag_real(&[n_max + 1], &weights)
}

/// Oscillator-only generator: `omega_e a^dagger a` with thermal damping.
pub fn environment_generator(p: &RabiParams) -> Result<LindbladGenerator> {
    let a = annihilation(p.n_max);
    let ad = a.adjoint();
    let h = ad.dot(&a).scaled(C64::new(p.omega_e, 0.0));
    LindbladGenerator::new(h, vec![(p.gamma * (p.nbar + 1.0), a), (p.gamma * p.nbar, ad)])
}

#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub params: RabiParams,
    pub h_s: TensorOperator,
    pub h_e: TensorOperator,
    pub h_se: TensorOperator,
    pub h_0: TensorOperator,
    pub generator: LindbladGenerator,
    /// System-only unitary applied at each parity kick.
    pub kick: TensorOperator,
    /// Initial environment state.
    pub rho_e: TensorOperator,
}

impl ModelBundle {
    pub fn dims(&self) -> [usize; 2] {
        self.params.dims()
    }

    /// System Hamiltonian on the qubit alone.
    pub fn system_hamiltonian(&self) -> TensorOperator {
        qubit::sigma_z().scaled(C64::new(0.5 * self.params.omega_s, 0.0))
    }
}

pub fn build_model(p: &RabiParams) -> Result<ModelBundle> {
    p.validate()?;
    let dims = p.dims();
    let env = dims[1];
    let a = annihilation(p.n_max);
    let ad = a.adjoint();
    let id_e = TensorOperator::identity(&[env]);
    let id_s = TensorOperator::identity(&[2]);

    let h_s = kron(&qubit::sigma_z(), &id_e).scaled(C64::new(0.5 * p.omega_s, 0.0));
    let h_e = kron(&id_s, &ad.dot(&a)).scaled(C64::new(p.omega_e, 0.0));
    let gc = C64::new(p.g, 0.0);
    let h_se = match p.coupling {
        Coupling::Rabi => kron(&qubit::sigma_x(), &(&a + &ad)).scaled(gc),
        Coupling::JaynesCummings => {
            let rot = &kron(&qubit::sigma_plus(), &a) + &kron(&qubit::sigma_minus(), &ad);
            rot.scaled(gc)
        }
    };
    let h_0 = &(&h_s + &h_e) + &h_se;

    let jumps = vec![
        (p.gamma * (p.nbar + 1.0), embed(&a, &dims, 1)?),
        (p.gamma * p.nbar, embed(&ad, &dims, 1)?),
    ];
    let generator = LindbladGenerator::new(h_0.clone(), jumps)?;
    Ok(ModelBundle {
        params: p.clone(),
        h_s,
        h_e,
        h_se,
        h_0,
        generator,
        kick: qubit::sigma_z(),
        rho_e: thermal_state(p.nbar, p.n_max)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParityReport {
    /// `max |K H_S K^dagger - H_S|`.
    pub system_residual: f64,
    /// `max |K H_SE K^dagger + H_SE|`.
    pub coupling_residual: f64,
}

impl ParityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.system_residual <= tol && self.coupling_residual <= tol
    }
}

/// Residuals of the parity conditions for the bundle's own kick.
pub fn check_parity_conditions(bundle: &ModelBundle) -> ParityReport {
    parity_residuals(bundle, &bundle.kick).expect("bundle kick acts on the qubit")
}

/// Residuals of the parity conditions for an arbitrary qubit unitary.
pub fn parity_residuals(bundle: &ModelBundle, kick: &TensorOperator) -> Result<ParityReport> {
    let k = embed(kick, &bundle.dims(), 0)?;
    let sys = &bundle.h_s.conjugated_by(&k) - &bundle.h_s;
    let cpl = &bundle.h_se.conjugated_by(&k) + &bundle.h_se;
    Ok(ParityReport {
        system_residual: sys.max_abs(),
        coupling_residual: cpl.max_abs(),
    })
}
