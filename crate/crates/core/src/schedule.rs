//! Instantaneous kick schedules for dynamical decoupling.
//!
//! A schedule of `n` kicks with spacing `tau` means: evolve for `tau`, apply
//! `K_1`, evolve for `tau`, apply `K_2`, and so on, ending with `K_n` at
//! `n tau`. A schedule with no kicks is a single free segment of length `tau`.

use crate::error::{Error, Result};
use crate::tensor::{embed, qubit, TensorOperator, C64};
use crate::tolerance;

#[derive(Clone, Debug)]
pub struct KickSchedule {
    tau: f64,
    kicks: Vec<TensorOperator>,
    cycles: usize,
    kicks_per_cycle: usize,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::arg(format!("kick spacing tau = {tau} must be positive")));
    }
    Ok(())
}

fn check_kick(k: &TensorOperator) -> Result<()> {
    if k.dims() != [2] {
        return Err(Error::arg(format!(
            "kick must act on the qubit, got dims {:?}",
            k.dims()
        )));
    }
    if !k.is_unitary(tolerance::KICK_UNITARY) {
        return Err(Error::arg("kick is not unitary"));
    }
    Ok(())
}

impl KickSchedule {
    /// `cycles` repetitions of `cycle`.
    pub fn periodic(tau: f64, cycle: &[TensorOperator], cycles: usize) -> Result<Self> {
        check_tau(tau)?;
        if cycles == 0 {
            return Err(Error::arg("number of cycles must be at least 1"));
        }
        for k in cycle {
            check_kick(k)?;
        }
        let kicks = (0..cycles).flat_map(|_| cycle.iter().cloned()).collect();
        Ok(Self {
            tau,
            kicks,
            cycles,
            kicks_per_cycle: cycle.len(),
        })
    }

    /// Arbitrary kick list treated as a single cycle.
    pub fn custom(tau: f64, kicks: Vec<TensorOperator>) -> Result<Self> {
        check_tau(tau)?;
        for k in &kicks {
            check_kick(k)?;
        }
        let n = kicks.len();
        Ok(Self {
            tau,
            kicks,
            cycles: 1,
            kicks_per_cycle: n,
        })
    }

    /// One free segment of length `tau`.
    pub fn free(tau: f64) -> Result<Self> {
        Self::custom(tau, Vec::new())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kicks(&self) -> &[TensorOperator] {
        &self.kicks
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn kicks_per_cycle(&self) -> usize {
        self.kicks_per_cycle
    }

    /// Number of free-evolution segments (at least one).
    pub fn segments(&self) -> usize {
        self.kicks.len().max(1)
    }

    /// Kick times `j tau` for `j = 1..=n`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.kicks.len()).map(|j| j as f64 * self.tau).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.segments() as f64 * self.tau
    }

    /// Duration of one cycle, `n_g tau`.
    pub fn cycle_time(&self) -> f64 {
        self.kicks_per_cycle.max(1) as f64 * self.tau
    }

    /// Same kicks with a new spacing.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau, ..self.clone() })
    }
}

#[derive(Clone, Debug)]
pub struct DecouplingGroup {
    elements: Vec<TensorOperator>,
}

impl DecouplingGroup {
    pub fn new(elements: Vec<TensorOperator>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::arg("decoupling group must be nonempty"))?;
        for g in &elements {
            check_kick(g)?;
        }
        if first.max_abs_diff(&TensorOperator::identity(first.dims())) > tolerance::KICK_UNITARY {
            return Err(Error::arg("first group element must be the identity"));
        }
        Ok(Self { elements })
    }

    /// `{I, sigma_z}`.
    pub fn parity() -> Self {
        Self::new(vec![TensorOperator::identity(&[2]), qubit::sigma_z()]).unwrap()
    }

    /// `{I, sigma_x, sigma_y, sigma_z}`.
    pub fn pauli() -> Self {
        Self::new(vec![
            TensorOperator::identity(&[2]),
            qubit::sigma_x(),
            qubit::sigma_y(),
            qubit::sigma_z(),
        ])
        .unwrap()
    }

    pub fn elements(&self) -> &[TensorOperator] {
        &self.elements
    }

    /// Kicks of one cycle: `K_j = g_{j+1} g_j^dagger`, and `K_{n_g} = g_{n_g}^dagger`.
    pub fn cycle_kicks(&self) -> Vec<TensorOperator> {
        let g = &self.elements;
        let n = g.len();
        let mut out: Vec<TensorOperator> = (0..n - 1).map(|j| g[j + 1].dot(&g[j].adjoint())).collect();
        out.push(g[n - 1].adjoint());
        out
    }
}

/// `k` cycles of two `sigma_z` kicks spaced by `tau`.
pub fn parity_cycle_schedule(tau: f64, k: usize) -> Result<KickSchedule> {
    KickSchedule::periodic(tau, &[qubit::sigma_z(), qubit::sigma_z()], k)
}

pub fn group_schedule(group: &DecouplingGroup, tau: f64, k: usize) -> Result<KickSchedule> {
    KickSchedule::periodic(tau, &group.cycle_kicks(), k)
}

/// `(1/n_g) sum_j (g_j^dagger ⊗ I) h0 (g_j ⊗ I)` with the group acting on factor 0.
pub fn average_hamiltonian(group: &DecouplingGroup, h0: &TensorOperator) -> Result<TensorOperator> {
    let dims = h0.dims().to_vec();
    let mut acc = TensorOperator::zeros(&dims);
    for g in group.elements() {
        let full = embed(g, &dims, 0)?;
        let term = full.adjoint().dot(h0).dot(&full);
        acc.axpy(C64::new(1.0, 0.0), &term);
    }
    Ok(acc.scaled(C64::new(1.0 / group.elements().len() as f64, 0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleReport {
    /// `max |K_n ... K_1 - e^{i phi} I|` with the best-fitting global phase.
    pub product_residual: f64,
    /// `max_j |K_{j + n_g} - K_j|`.
    pub periodicity_residual: f64,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.product_residual <= tolerance::SCHEDULE_PRODUCT && self.periodicity_residual <= tolerance::SCHEDULE_PRODUCT
    }
}

/// Distance of `u` from the identity up to a global phase.
pub fn identity_residual_up_to_phase(u: &TensorOperator) -> f64 {
    let tr = u.trace();
    let phase = if tr.norm() > 1e-12 {
        tr / tr.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    u.max_abs_diff(&TensorOperator::identity(u.dims()).scaled(phase))
}

pub fn validate_schedule(s: &KickSchedule) -> ScheduleReport {
    let mut product = TensorOperator::identity(&[2]);
    for k in s.kicks() {
        product = k.dot(&product);
    }
    let ng = s.kicks_per_cycle();
    let periodicity_residual = (ng..s.kicks().len())
        .map(|j| s.kicks()[j].max_abs_diff(&s.kicks()[j - ng]))
        .fold(0.0, f64::max);
    ScheduleReport {
        product_residual: identity_residual_up_to_phase(&product),
        periodicity_residual,
    }
}
