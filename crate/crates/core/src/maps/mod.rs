//! Dynamical maps of the controlled and uncontrolled qubit, memory-effect
//! strengths, effect of control, performance and the commutation check.
//!
//! All map-level quantities are trace distances between unit-trace Choi
//! matrices, so every measure lies in `[0, 1]`.

mod choi;

pub use choi::{apply_choi, compose_erased, segment_superoperator, ChoiDiagnostics, ChoiMatrix, Superoperator};

use crate::error::{Error, Result};
use crate::model::ModelBundle;
use crate::propagator::{BlockSet, Rk4Workspace, SegmentPlan};
use crate::schedule::{validate_schedule, KickSchedule};
use crate::tensor::{trace_distance, unitary_exp, TensorOperator};
use crate::tolerance;

/// `e^{-i H_S t_f}` on the qubit.
pub fn target_unitary(bundle: &ModelBundle, t_f: f64) -> Result<TensorOperator> {
    unitary_exp(&bundle.system_hamiltonian(), t_f)
}

pub fn target_choi(bundle: &ModelBundle, t_f: f64) -> Result<ChoiMatrix> {
    Ok(ChoiMatrix::from_unitary(&target_unitary(bundle, t_f)?, t_f, "target"))
}

pub fn target_state(bundle: &ModelBundle, t_f: f64, rho0: &TensorOperator) -> Result<TensorOperator> {
    Ok(rho0.conjugated_by(&target_unitary(bundle, t_f)?))
}

/// `1 - D[a, target]`, for Choi matrices or states alike.
pub fn performance(a: &TensorOperator, target: &TensorOperator) -> Result<f64> {
    Ok(1.0 - trace_distance(a, target)?)
}

/// RK4 steps covering `span` with a step no longer than the plan's.
fn steps_for(span: f64, plan: &SegmentPlan) -> usize {
    if span <= 0.0 {
        return 0;
    }
    let h = plan.step();
    let mut steps = (span / h - 1e-9).ceil().max(1.0) as usize;
    while span / steps as f64 > h * (1.0 + 1e-12) {
        steps += 1;
    }
    steps
}

fn evolve_blocks(bundle: &ModelBundle, blocks: &mut BlockSet, span: f64, plan: &SegmentPlan, ws: &mut Rk4Workspace) {
    let steps = steps_for(span, plan);
    if steps > 0 {
        blocks.rk4(&bundle.generator, span / steps as f64, steps, ws);
    }
    blocks.hermitize();
}

/// Choi matrix of the uncontrolled map over `span`.
pub fn choi_uncontrolled(bundle: &ModelBundle, span: f64, plan: &SegmentPlan) -> Result<ChoiMatrix> {
    plan.check()?;
    if !(span >= 0.0) {
        return Err(Error::arg(format!("span {span} must be nonnegative")));
    }
    let mut blocks = BlockSet::initial(&bundle.rho_e);
    let mut ws = Rk4Workspace::new(blocks.side());
    evolve_blocks(bundle, &mut blocks, span, plan, &mut ws);
    ChoiMatrix::new(blocks.choi_data(), span, "uncontrolled")
}

/// Maps needed by every measure at one final time.
#[derive(Clone, Debug)]
pub struct PointMaps {
    /// `T~(t_f, 0)` with the kicks interleaved.
    pub controlled: ChoiMatrix,
    /// `T(t_f, 0)` without kicks.
    pub uncontrolled: ChoiMatrix,
    /// `T(tau, 0)`.
    pub segment: ChoiMatrix,
}

fn check_plan_matches(schedule: &KickSchedule, plan: &SegmentPlan) -> Result<()> {
    plan.check()?;
    let tau = schedule.tau();
    if (plan.tau - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::config(format!(
            "segment plan length {} differs from the kick spacing {tau}",
            plan.tau
        )));
    }
    Ok(())
}

/// Controlled, uncontrolled and single-segment maps by direct RK4.
pub fn point_maps(bundle: &ModelBundle, schedule: &KickSchedule, plan: &SegmentPlan) -> Result<PointMaps> {
    check_plan_matches(schedule, plan)?;
    let tau = schedule.tau();
    let t_f = schedule.final_time();
    let b0 = BlockSet::initial(&bundle.rho_e);
    let mut ws = Rk4Workspace::new(b0.side());

    let mut ctrl = b0.clone();
    let mut segment = None;
    for j in 0..schedule.segments() {
        ctrl.rk4(&bundle.generator, plan.step(), plan.steps, &mut ws);
        ctrl.hermitize();
        if j == 0 {
            segment = Some(ChoiMatrix::new(ctrl.choi_data(), tau, "segment")?);
        }
        if let Some(k) = schedule.kicks().get(j) {
            ctrl.kick(k);
        }
    }
    let mut unc = b0;
    unc.rk4(
        &bundle.generator,
        plan.step(),
        plan.steps * schedule.segments(),
        &mut ws,
    );
    unc.hermitize();
    Ok(PointMaps {
        controlled: ChoiMatrix::new(ctrl.choi_data(), t_f, "controlled")?,
        uncontrolled: ChoiMatrix::new(unc.choi_data(), t_f, "uncontrolled")?,
        segment: segment.expect("at least one segment"),
    })
}

/// Choi matrix of the controlled map over the whole schedule.
pub fn choi_controlled(bundle: &ModelBundle, schedule: &KickSchedule, plan: &SegmentPlan) -> Result<ChoiMatrix> {
    Ok(point_maps(bundle, schedule, plan)?.controlled)
}

/// `K_n S ... K_1 S` for segment superoperator `S`.
pub fn erased_controlled(segment: &Superoperator, schedule: &KickSchedule) -> Superoperator {
    let mut acc = *segment;
    if let Some(k) = schedule.kicks().first() {
        acc = Superoperator::conjugation(k).compose(&acc);
    }
    for k in schedule.kicks().iter().skip(1) {
        acc = Superoperator::conjugation(k).compose(&segment.compose(&acc));
    }
    acc
}

/// `D[rho_{K T}, rho_{T K}]` for a qubit unitary `kick` and a segment map.
pub fn commutation_residual_of(kick: &TensorOperator, segment: &ChoiMatrix) -> Result<f64> {
    let k = Superoperator::conjugation(kick);
    let s = segment.superoperator();
    let a = k.compose(&s).to_choi(segment.span, "KT");
    let b = s.compose(&k).to_choi(segment.span, "TK");
    a.distance(&b)
}

/// Commutation residual of the bundle's kick with `T(span, 0)`.
pub fn commutation_residual(bundle: &ModelBundle, span: f64, plan: &SegmentPlan) -> Result<f64> {
    commutation_residual_of(&bundle.kick, &choi_uncontrolled(bundle, span, plan)?)
}

/// Values shared by the map-level and state-level reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measures {
    pub n_tilde: f64,
    pub n_bar: f64,
    pub effect: f64,
    pub e_ub: f64,
    pub e_lb: f64,
    pub p_bar: f64,
    pub p_tilde: f64,
}

impl Measures {
    pub fn delta_p(&self) -> f64 {
        self.p_tilde - self.p_bar
    }

    /// `E > e_ub + slack`.
    pub fn upper_violated(&self) -> bool {
        self.effect > self.e_ub + tolerance::BOUND_SLACK
    }

    /// `E < e_lb - slack`.
    pub fn lower_violated(&self) -> bool {
        self.effect < self.e_lb - tolerance::BOUND_SLACK
    }

    pub fn bounds_hold(&self) -> bool {
        !self.upper_violated() && !self.lower_violated()
    }
}

/// Fills in `e_lb = |n_tilde - n_bar|` and `e_ub = n_tilde + n_bar`.
pub fn bounds_report(n_tilde: f64, n_bar: f64, effect: f64, p_bar: f64, p_tilde: f64) -> Measures {
    Measures {
        n_tilde,
        n_bar,
        effect,
        e_ub: n_tilde + n_bar,
        e_lb: (n_tilde - n_bar).abs(),
        p_bar,
        p_tilde,
    }
}

#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub map: Measures,
    pub state_level: Option<Measures>,
    /// Largest commutation residual of any kick with the segment map.
    pub commutation_residual: f64,
    /// `D` between the controlled and uncontrolled erased compositions.
    pub erased_gap: f64,
    pub schedule_valid: bool,
    /// Worst CPTP diagnostics over the three computed maps.
    pub choi: ChoiDiagnostics,
}

impl MeasureReport {
    /// The bound theorem's commutation hypothesis holds.
    pub fn hypothesis_holds(&self) -> bool {
        self.commutation_residual <= tolerance::COMMUTATION
    }

    /// Both bound levels hold, or the hypothesis is not met.
    pub fn consistent(&self) -> bool {
        !self.hypothesis_holds() || (self.map.bounds_hold() && self.state_level.is_none_or(|s| s.bounds_hold()))
    }

    /// Erased compositions coincide wherever the schedule conforms and the
    /// kicks commute with the segment map.
    pub fn erased_coincidence_holds(&self) -> bool {
        !(self.schedule_valid && self.hypothesis_holds()) || self.erased_gap <= tolerance::ERASED_COINCIDENCE
    }
}

fn worst(a: ChoiDiagnostics, b: ChoiDiagnostics) -> ChoiDiagnostics {
    ChoiDiagnostics {
        hermiticity: a.hermiticity.max(b.hermiticity),
        min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue),
        trace_error: a.trace_error.max(b.trace_error),
        tp_residual: a.tp_residual.max(b.tp_residual),
    }
}

/// All measures from precomputed maps.
pub fn evaluate(
    maps: &PointMaps,
    schedule: &KickSchedule,
    target_u: &TensorOperator,
    rho0: Option<&TensorOperator>,
) -> Result<MeasureReport> {
    let n = schedule.segments();
    let t_f = maps.controlled.span;
    let s = maps.segment.superoperator();
    let erased_unc = s.pow(n).to_choi(t_f, "erased uncontrolled");
    let erased_ctrl = erased_controlled(&s, schedule).to_choi(t_f, "erased controlled");
    let target = ChoiMatrix::from_unitary(target_u, t_f, "target");

    let map = bounds_report(
        maps.controlled.distance(&erased_ctrl)?,
        maps.uncontrolled.distance(&erased_unc)?,
        maps.controlled.distance(&maps.uncontrolled)?,
        1.0 - maps.uncontrolled.distance(&target)?,
        1.0 - maps.controlled.distance(&target)?,
    );

    let state_level = match rho0 {
        None => None,
        Some(rho) => {
            let tilde = apply_choi(&maps.controlled, rho)?;
            let bar = apply_choi(&maps.uncontrolled, rho)?;
            let tilde_erased = apply_choi(&erased_ctrl, rho)?;
            let bar_erased = apply_choi(&erased_unc, rho)?;
            let tar = rho.conjugated_by(target_u);
            Some(bounds_report(
                trace_distance(&tilde, &tilde_erased)?,
                trace_distance(&bar, &bar_erased)?,
                trace_distance(&tilde, &bar)?,
                performance(&bar, &tar)?,
                performance(&tilde, &tar)?,
            ))
        }
    };

    let mut distinct: Vec<&TensorOperator> = Vec::new();
    for k in schedule.kicks() {
        if !distinct.iter().any(|d| d.max_abs_diff(k) == 0.0) {
            distinct.push(k);
        }
    }
    let mut commutation = 0.0f64;
    for k in distinct {
        commutation = commutation.max(commutation_residual_of(k, &maps.segment)?);
    }

    let choi = worst(
        worst(maps.controlled.diagnostics()?, maps.uncontrolled.diagnostics()?),
        maps.segment.diagnostics()?,
    );

    Ok(MeasureReport {
        map,
        state_level,
        commutation_residual: commutation,
        erased_gap: erased_ctrl.distance(&erased_unc)?,
        schedule_valid: validate_schedule(schedule).is_valid(),
        choi,
    })
}

/// Full report for one schedule, computed by direct RK4.
pub fn measure_schedule(
    bundle: &ModelBundle,
    schedule: &KickSchedule,
    plan: &SegmentPlan,
    rho0: Option<&TensorOperator>,
) -> Result<MeasureReport> {
    let maps = point_maps(bundle, schedule, plan)?;
    let target_u = target_unitary(bundle, schedule.final_time())?;
    evaluate(&maps, schedule, &target_u, rho0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryStrength {
    pub n_tilde: f64,
    pub n_bar: f64,
    /// `D` between the controlled and uncontrolled erased compositions.
    pub erased_gap: f64,
}

fn strength_from(report: &MeasureReport, m: &Measures) -> Result<MemoryStrength> {
    if report.schedule_valid && report.hypothesis_holds() && !report.erased_coincidence_holds() {
        return Err(Error::Convergence {
            knob: "steps_per_segment".into(),
            detail: format!(
                "erased compositions differ by {:e} although the schedule conforms",
                report.erased_gap
            ),
        });
    }
    Ok(MemoryStrength {
        n_tilde: m.n_tilde,
        n_bar: m.n_bar,
        erased_gap: report.erased_gap,
    })
}

/// Map-level controlled and uncontrolled memory strengths.
pub fn memory_strength_map(
    bundle: &ModelBundle,
    schedule: &KickSchedule,
    plan: &SegmentPlan,
) -> Result<MemoryStrength> {
    let r = measure_schedule(bundle, schedule, plan, None)?;
    strength_from(&r, &r.map)
}

/// Memory strengths conditioned on the initial qubit state `rho0`.
pub fn memory_strength_state(
    bundle: &ModelBundle,
    schedule: &KickSchedule,
    plan: &SegmentPlan,
    rho0: &TensorOperator,
) -> Result<MemoryStrength> {
    rho0.validate_density()?;
    let r = measure_schedule(bundle, schedule, plan, Some(rho0))?;
    let s = r.state_level.expect("state requested");
    strength_from(&r, &s)
}

/// Effect of control on the map and, when `rho0` is given, on that state.
pub fn effect_of_control(
    bundle: &ModelBundle,
    schedule: &KickSchedule,
    plan: &SegmentPlan,
    rho0: Option<&TensorOperator>,
) -> Result<(f64, Option<f64>)> {
    let r = measure_schedule(bundle, schedule, plan, rho0)?;
    Ok((r.map.effect, r.state_level.map(|s| s.effect)))
}

/// Two-time memory strength `D[rho_{T(t2)}, rho_{T(t2 - t1) T(t1)}]` for each
/// `(t1, t2)` pair, from one uncontrolled trajectory.
pub fn memory_over_grid(bundle: &ModelBundle, plan: &SegmentPlan, pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::arg("time grid is empty"));
    }
    plan.check()?;
    let mut times = vec![0.0];
    for &(t1, t2) in pairs {
        if !(t1 >= 0.0 && t2 >= t1 && t2.is_finite()) {
            return Err(Error::arg(format!("grid pair ({t1}, {t2}) must satisfy 0 <= t1 <= t2")));
        }
        times.extend([t1, t2, t2 - t1]);
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let mut maps: Vec<(f64, ChoiMatrix)> = Vec::with_capacity(times.len());
    let mut blocks = BlockSet::initial(&bundle.rho_e);
    let mut ws = Rk4Workspace::new(blocks.side());
    let mut now = 0.0;
    for &t in &times {
        evolve_blocks(bundle, &mut blocks, t - now, plan, &mut ws);
        now = t;
        maps.push((t, ChoiMatrix::new(blocks.choi_data(), t, "uncontrolled")?));
    }
    let lookup = |t: f64| -> &ChoiMatrix {
        let i = maps
            .iter()
            .position(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .expect("time was sampled");
        &maps[i].1
    };

    pairs
        .iter()
        .map(|&(t1, t2)| {
            let full = lookup(t2);
            let erased = lookup(t2 - t1).superoperator().compose(&lookup(t1).superoperator());
            full.distance(&erased.to_choi(t2, "erased"))
        })
        .collect()
}

/// Largest two-time memory strength over the grid.
pub fn max_memory_over_grid(bundle: &ModelBundle, plan: &SegmentPlan, pairs: &[(f64, f64)]) -> Result<f64> {
    Ok(memory_over_grid(bundle, plan, pairs)?.into_iter().fold(0.0, f64::max))
}
