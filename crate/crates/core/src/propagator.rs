//! Fixed-step RK4 integration of the Lindblad equation, instantaneous kicks,
//! and the two evolution backends used by the sweep engine.
//!
//! Maps on the qubit are obtained by evolving the four operators
//! `X_ij = |i><j| ⊗ rho_E` on system ⊗ environment. Because the generator
//! does not touch the ancilla of the Choi construction, these blocks carry
//! exactly the same information as the full ancilla ⊗ system ⊗ environment
//! state. `X_10 = X_01^dagger` holds throughout, so three blocks are stored.

use crate::error::{Error, Result};
use crate::model::LindbladGenerator;
use crate::schedule::KickSchedule;
use crate::tensor::{embed, gemm, gemm_strided, TensorOperator, C64, ONE, ZERO};
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentPlan {
    pub tau: f64,
    pub steps: usize,
    /// Fastest model rate; bounds the admissible step.
    pub omega_max: f64,
}

/// Largest admissible RK4 step for a segment of length `tau`.
pub fn max_step(omega_max: f64, tau: f64) -> f64 {
    (tolerance::STEP_SCALE / omega_max).min(tau)
}

/// Fewest steps satisfying the step rule over `tau`.
pub fn auto_steps(omega_max: f64, tau: f64) -> usize {
    if tau <= 0.0 {
        return 1;
    }
    let h = max_step(omega_max, tau);
    let mut steps = (tau / h).ceil().max(1.0) as usize;
    while tau / steps as f64 > h {
        steps += 1;
    }
    steps
}

impl SegmentPlan {
    pub fn new(tau: f64, steps: usize, omega_max: f64) -> Result<Self> {
        let plan = Self { tau, steps, omega_max };
        plan.check()?;
        Ok(plan)
    }

    pub fn auto(tau: f64, omega_max: f64) -> Result<Self> {
        Self::new(tau, auto_steps(omega_max, tau), omega_max)
    }

    pub fn step(&self) -> f64 {
        self.tau / self.steps as f64
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::config(format!("segment length {} is invalid", self.tau)));
        }
        if self.steps == 0 {
            return Err(Error::config("steps per segment must be at least 1"));
        }
        if !(self.omega_max > 0.0) {
            return Err(Error::config("omega_max must be positive"));
        }
        let h = self.step();
        let limit = max_step(self.omega_max, self.tau);
        if h > limit * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "step {h:e} exceeds the admissible step {limit:e} (tau = {}, steps = {})",
                self.tau, self.steps
            )));
        }
        Ok(())
    }

    /// Same step size over a different segment length.
    pub fn rescaled(&self, tau: f64) -> Result<Self> {
        Self::new(tau, auto_steps(self.omega_max, tau), self.omega_max)
    }
}

/// Scratch buffers for RK4 on one `side x side` operator.
pub struct Rk4Workspace {
    k: Vec<C64>,
    acc: Vec<C64>,
    stage: Vec<C64>,
    scratch: Vec<C64>,
}

impl Rk4Workspace {
    pub fn new(side: usize) -> Self {
        let n = side * side;
        Self {
            k: vec![ZERO; n],
            acc: vec![ZERO; n],
            stage: vec![ZERO; n],
            scratch: vec![ZERO; n],
        }
    }
}

/// `steps` classical RK4 steps of size `h` applied in place to `x`.
pub fn rk4_advance(gen: &LindbladGenerator, x: &mut [C64], h: f64, steps: usize, ws: &mut Rk4Workspace) {
    if gen.is_trivial() || h == 0.0 {
        return;
    }
    let Rk4Workspace { k, acc, stage, scratch } = ws;
    let half = h / 2.0;
    let sixth = h / 6.0;
    for _ in 0..steps {
        // k1
        gen.apply_into(x, k, scratch);
        for ((a, s), (&xi, &ki)) in acc.iter_mut().zip(stage.iter_mut()).zip(x.iter().zip(k.iter())) {
            *a = ki;
            *s = xi + ki * half;
        }
        // k2
        gen.apply_into(stage, k, scratch);
        for ((a, s), (&xi, &ki)) in acc.iter_mut().zip(stage.iter_mut()).zip(x.iter().zip(k.iter())) {
            *a += ki * 2.0;
            *s = xi + ki * half;
        }
        // k3
        gen.apply_into(stage, k, scratch);
        for ((a, s), (&xi, &ki)) in acc.iter_mut().zip(stage.iter_mut()).zip(x.iter().zip(k.iter())) {
            *a += ki * 2.0;
            *s = xi + ki * h;
        }
        // k4
        gen.apply_into(stage, k, scratch);
        for ((xi, &a), &ki) in x.iter_mut().zip(acc.iter()).zip(k.iter()) {
            *xi += (a + ki) * sixth;
        }
    }
}

fn hermitize_in_place(x: &mut [C64], n: usize) {
    for r in 0..n {
        x[r * n + r].im = 0.0;
        for c in r + 1..n {
            let v = (x[r * n + c] + x[c * n + r].conj()) * 0.5;
            x[r * n + c] = v;
            x[c * n + r] = v.conj();
        }
    }
}

/// Integrates one segment with fixed-step RK4 and Hermitizes the result.
pub fn propagate_segment(rho: &TensorOperator, gen: &LindbladGenerator, plan: &SegmentPlan) -> Result<TensorOperator> {
    plan.check()?;
    if rho.dims() != gen.dims() {
        return Err(Error::arg(format!(
            "state dims {:?} do not match generator dims {:?}",
            rho.dims(),
            gen.dims()
        )));
    }
    let n = rho.side();
    let mut out = rho.clone();
    let mut ws = Rk4Workspace::new(n);
    rk4_advance(gen, out.data_mut(), plan.step(), plan.steps, &mut ws);
    hermitize_in_place(out.data_mut(), n);
    let drift = (out.trace() - rho.trace()).norm();
    if drift > tolerance::SEGMENT_TRACE_DRIFT {
        return Err(Error::Convergence {
            knob: "steps_per_segment".into(),
            detail: format!("trace drift {drift:e} over one segment"),
        });
    }
    Ok(out)
}

/// `(I ⊗ .. ⊗ K ⊗ .. ⊗ I) rho (.. K^dagger ..)` with `K` on factor `factor`.
pub fn apply_kick(rho: &TensorOperator, kick: &TensorOperator, factor: usize) -> Result<TensorOperator> {
    let full = embed(kick, rho.dims(), factor)?;
    Ok(rho.conjugated_by(&full))
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// States at `times`, taken after the kick at that time.
    pub states: Vec<TensorOperator>,
}

impl Trajectory {
    pub fn final_state(&self) -> &TensorOperator {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Alternates free segments of length `schedule.tau()` with kicks on the
/// qubit factor. `plan.tau` must equal the schedule spacing.
pub fn run_schedule(
    rho0: &TensorOperator,
    gen: &LindbladGenerator,
    schedule: &KickSchedule,
    plan: &SegmentPlan,
) -> Result<Trajectory> {
    let tau = schedule.tau();
    if (plan.tau - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::config(format!(
            "segment plan length {} differs from the kick spacing {tau}",
            plan.tau
        )));
    }
    let times = schedule.times();
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("kick times must be strictly increasing"));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
    };
    let mut rho = rho0.clone();
    for j in 0..schedule.segments() {
        rho = propagate_segment(&rho, gen, plan)?;
        if let Some(k) = schedule.kicks().get(j) {
            rho = apply_kick(&rho, k, 0)?;
        }
        rho.validate_density_with(
            tolerance::HERMITIAN,
            tolerance::TRAJECTORY_TRACE,
            tolerance::TRAJECTORY_MIN_EIGENVALUE,
        )?;
        traj.times.push((j + 1) as f64 * tau);
        traj.states.push(rho.clone());
    }
    Ok(traj)
}

/// The operators `X_00, X_01, X_11` on system ⊗ environment, stored
/// contiguously, each `side^2` long with `side = 2 d_E`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSet {
    env: usize,
    data: Vec<C64>,
}

const BLOCK_INDEX: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

impl BlockSet {
    /// `X_ij = |i><j| ⊗ rho_e`.
    pub fn initial(rho_e: &TensorOperator) -> Self {
        let env = rho_e.side();
        let side = 2 * env;
        let mut data = vec![ZERO; 3 * side * side];
        for (b, &(i, j)) in BLOCK_INDEX.iter().enumerate() {
            let block = &mut data[b * side * side..(b + 1) * side * side];
            for r in 0..env {
                for c in 0..env {
                    block[(i * env + r) * side + j * env + c] = rho_e.get(r, c);
                }
            }
        }
        Self { env, data }
    }

    pub fn side(&self) -> usize {
        2 * self.env
    }

    pub fn block_len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn block(&self, b: usize) -> &[C64] {
        let n = self.block_len();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [C64] {
        let n = self.block_len();
        &mut self.data[b * n..(b + 1) * n]
    }

    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    /// Advance every block with RK4.
    pub fn rk4(&mut self, gen: &LindbladGenerator, h: f64, steps: usize, ws: &mut Rk4Workspace) {
        for b in 0..3 {
            let n = self.block_len();
            rk4_advance(gen, &mut self.data[b * n..(b + 1) * n], h, steps, ws);
        }
    }

    /// Restores `X_00`, `X_11` to exact Hermiticity.
    pub fn hermitize(&mut self) {
        let side = self.side();
        hermitize_in_place(self.block_mut(0), side);
        hermitize_in_place(self.block_mut(2), side);
    }

    /// Conjugates every block by `K ⊗ I` with `K` a qubit unitary.
    pub fn kick(&mut self, k: &TensorOperator) {
        let e = self.env;
        let side = self.side();
        let kk = [[k.get(0, 0), k.get(0, 1)], [k.get(1, 0), k.get(1, 1)]];
        let diagonal = kk[0][1] == ZERO && kk[1][0] == ZERO;
        let mut tmp = vec![ZERO; side * side];
        for b in 0..3 {
            let x = self.block_mut(b);
            if diagonal {
                for s in 0..2 {
                    for t in 0..2 {
                        let f = kk[s][s] * kk[t][t].conj();
                        if f == ONE {
                            continue;
                        }
                        for r in 0..e {
                            for c in 0..e {
                                x[(s * e + r) * side + t * e + c] *= f;
                            }
                        }
                    }
                }
                continue;
            }
            tmp.fill(ZERO);
            for s in 0..2 {
                for t in 0..2 {
                    for u in 0..2 {
                        for v in 0..2 {
                            let f = kk[s][u] * kk[t][v].conj();
                            if f == ZERO {
                                continue;
                            }
                            for r in 0..e {
                                for c in 0..e {
                                    tmp[(s * e + r) * side + t * e + c] += f * x[(u * e + r) * side + v * e + c];
                                }
                            }
                        }
                    }
                }
            }
            x.copy_from_slice(&tmp);
        }
    }

    /// `Tr X_00 - 1`, `Tr X_11 - 1`, `Tr X_01` as a single worst magnitude.
    pub fn trace_error(&self) -> f64 {
        let side = self.side();
        let tr = |b: usize| -> C64 { (0..side).map(|i| self.block(b)[i * side + i]).sum() };
        (tr(0) - ONE).norm().max((tr(2) - ONE).norm()).max(tr(1).norm())
    }

    /// `rho[(i,a),(j,b)] = Tr_E[X_ij]_{ab} / 2` on `[ancilla, system]`.
    pub fn choi_data(&self) -> TensorOperator {
        let e = self.env;
        let side = self.side();
        let mut reduced = [[[[ZERO; 2]; 2]; 2]; 2];
        for (b, &(i, j)) in BLOCK_INDEX.iter().enumerate() {
            let x = self.block(b);
            for a in 0..2 {
                for bb in 0..2 {
                    let s: C64 = (0..e).map(|k| x[(a * e + k) * side + bb * e + k]).sum();
                    reduced[i][j][a][bb] = s * 0.5;
                }
            }
        }
        for a in 0..2 {
            for bb in 0..2 {
                reduced[1][0][a][bb] = reduced[0][1][bb][a].conj();
            }
        }
        TensorOperator::from_fn(&[2, 2], |r, c| reduced[r / 2][c / 2][r % 2][c % 2])
    }

    /// Full operator `X_ij` (with `X_10 = X_01^dagger`).
    pub fn block_operator(&self, i: usize, j: usize, dims: &[usize]) -> TensorOperator {
        let side = self.side();
        let data = match (i, j) {
            (0, 0) => self.block(0).to_vec(),
            (0, 1) => self.block(1).to_vec(),
            (1, 1) => self.block(2).to_vec(),
            _ => {
                let x = self.block(1);
                (0..side * side)
                    .map(|k| x[(k % side) * side + k / side].conj())
                    .collect()
            }
        };
        TensorOperator::new(dims.to_vec(), data).expect("block dims match")
    }
}

/// Evolution of block sets over multiples of a fixed base interval.
pub trait Propagation: Sync {
    /// Representation of the evolution over some number of base intervals.
    type Span: Clone + Send + Sync;

    fn span(&self, units: usize) -> Self::Span;

    /// `span` followed by `units` more base intervals.
    fn extend(&self, span: &Self::Span, units: usize) -> Self::Span;

    /// Readies `span` for `uses` applications, possibly trading setup work
    /// for cheaper applications.
    fn prepare(&self, span: Self::Span, _uses: usize) -> Self::Span {
        span
    }

    fn apply(&self, span: &Self::Span, blocks: &mut BlockSet);
}

/// RK4 straight on the blocks; a span is just an interval count.
pub struct DirectPropagation<'a> {
    gen: &'a LindbladGenerator,
    h: f64,
    steps_per_unit: usize,
}

impl<'a> DirectPropagation<'a> {
    pub fn new(gen: &'a LindbladGenerator, unit: f64, steps_per_unit: usize) -> Self {
        Self {
            gen,
            h: unit / steps_per_unit as f64,
            steps_per_unit,
        }
    }
}

impl Propagation for DirectPropagation<'_> {
    type Span = usize;

    fn span(&self, units: usize) -> usize {
        units
    }

    fn extend(&self, span: &usize, units: usize) -> usize {
        span + units
    }

    fn apply(&self, span: &usize, blocks: &mut BlockSet) {
        let mut ws = Rk4Workspace::new(blocks.side());
        blocks.rk4(self.gen, self.h, span * self.steps_per_unit, &mut ws);
    }
}

/// Dense `side^2 x side^2` matrix of a linear map on row-major operators.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl TransferMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    /// Matrix of `steps` RK4 steps of size `h`; column `a * side + b` is
    /// the image of `|a><b|`.
    pub fn rk4(gen: &LindbladGenerator, h: f64, steps: usize) -> Self {
        let side = gen.side();
        let dim = side * side;
        let mut data = vec![ZERO; dim * dim];
        let mut ws = Rk4Workspace::new(side);
        let mut x = vec![ZERO; dim];
        for col in 0..dim {
            x.fill(ZERO);
            x[col] = ONE;
            rk4_advance(gen, &mut x, h, steps, &mut ws);
            for (r, v) in x.iter().enumerate() {
                data[r * dim + col] = *v;
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `self * other`.
    pub fn mul(&self, other: &TransferMatrix) -> TransferMatrix {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        gemm(&self.data, &other.data, &mut data, d, d, d);
        TransferMatrix { dim: d, data }
    }

    pub fn pow(&self, mut e: usize) -> TransferMatrix {
        let mut result: Option<TransferMatrix> = None;
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result.unwrap_or_else(|| TransferMatrix::identity(self.dim))
    }

    /// Applies the map to a row-major operator.
    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d];
        gemm(&self.data, x, &mut out, d, d, 1);
        out
    }
}

/// Products of a precomputed one-interval transfer matrix.
pub struct TransferPropagation {
    unit: TransferMatrix,
}

impl TransferPropagation {
    pub fn new(gen: &LindbladGenerator, unit: f64, steps_per_unit: usize) -> Self {
        let side = gen.side();
        let h = unit / steps_per_unit as f64;
        let dim = (side * side) as f64;
        // Column-by-column integration against one step squared up.
        let by_columns = dim * direct_cost(side, steps_per_unit as f64);
        let squarings = 2.0 * (steps_per_unit as f64).log2().ceil();
        let by_powers = dim * direct_cost(side, 1.0) + squarings * dim * dim * dim;
        let unit = if by_powers < by_columns {
            TransferMatrix::rk4(gen, h, 1).pow(steps_per_unit)
        } else {
            TransferMatrix::rk4(gen, h, steps_per_unit)
        };
        Self { unit }
    }

    pub fn unit(&self) -> &TransferMatrix {
        &self.unit
    }
}

/// Evolution over `units` base intervals, optionally with its matrix
/// formed.
#[derive(Clone, Debug)]
pub struct TransferSpan {
    units: usize,
    matrix: Option<TransferMatrix>,
}

impl TransferSpan {
    pub fn units(&self) -> usize {
        self.units
    }

    pub fn is_formed(&self) -> bool {
        self.matrix.is_some()
    }
}

/// Matrix products in [`TransferMatrix::pow`] for exponent `e`.
pub fn pow_products(e: usize) -> usize {
    if e <= 1 {
        return 0;
    }
    (usize::BITS - 1 - e.leading_zeros()) as usize + e.count_ones() as usize - 1
}

/// Whether forming the matrix of a `units`-interval span pays off over
/// `uses` applications, for transfer matrices of dimension `dim`.
pub fn worth_forming(dim: usize, units: usize, uses: usize) -> bool {
    let d = dim as f64;
    let stepping = (uses * units) as f64 * 3.0 * d * d;
    let forming = pow_products(units) as f64 * d * d * d + uses as f64 * 3.0 * d * d;
    units > 1 && forming < stepping
}

fn apply_matrix(m: &TransferMatrix, blocks: &mut BlockSet) {
    let d = m.dim;
    assert_eq!(d, blocks.block_len());
    let mut out = vec![ZERO; 3 * d];
    gemm_strided(&m.data, [d, 1], &blocks.data, [1, d], &mut out, [1, d], d, d, 3);
    blocks.data = out;
}

impl Propagation for TransferPropagation {
    type Span = TransferSpan;

    fn span(&self, units: usize) -> TransferSpan {
        TransferSpan { units, matrix: None }
    }

    fn extend(&self, span: &TransferSpan, units: usize) -> TransferSpan {
        TransferSpan {
            units: span.units + units,
            matrix: span.matrix.as_ref().map(|m| match units {
                0 => m.clone(),
                1 => self.unit.mul(m),
                _ => self.unit.pow(units).mul(m),
            }),
        }
    }

    fn prepare(&self, span: TransferSpan, uses: usize) -> TransferSpan {
        if span.matrix.is_none() && worth_forming(self.unit.dim, span.units, uses) {
            let m = self.unit.pow(span.units);
            return TransferSpan {
                units: span.units,
                matrix: Some(m),
            };
        }
        span
    }

    fn apply(&self, span: &TransferSpan, blocks: &mut BlockSet) {
        match &span.matrix {
            Some(m) => apply_matrix(m, blocks),
            None => {
                for _ in 0..span.units {
                    apply_matrix(&self.unit, blocks);
                }
            }
        }
    }
}

/// Cost of `steps` RK4 steps on a block set, in dense multiply-add
/// equivalents. The sparse kernel does about 120 multiply-adds per entry per
/// step but runs roughly fifteen times slower per operation than the blocked
/// dense products, hence the larger factor.
pub fn direct_cost(side: usize, steps: f64) -> f64 {
    1800.0 * (side * side) as f64 * steps
}

/// Products of `side^2`-dimensional transfer matrices plus applications of
/// one to a block set.
pub fn transfer_cost(side: usize, gemms: f64, matvecs: f64) -> f64 {
    let d2 = (side * side) as f64;
    gemms * d2 * d2 * d2 + matvecs * 3.0 * d2 * d2
}
