//! Convergence audit and automatic choice of `n_max` and the step count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Knob};
use super::engine::{sweep_points, SweepSetup};
use super::record::ExperimentRecord;
use crate::error::{Error, Result};
use crate::maps::{commutation_residual_of, ChoiMatrix};
use crate::model::{parity_residuals, thermal_tail, truncation_floor};
use crate::propagator::{BlockSet, Rk4Workspace};
use crate::schedule::validate_schedule;
use crate::tolerance;

/// Cutoff increment between audit levels.
pub const N_MAX_INCREMENT: usize = 5;

/// Largest cutoff the automatic search will try.
pub const N_MAX_CAP: usize = 120;

/// Largest factor by which the automatic search will raise the step count.
pub const STEP_GROWTH_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub n_max: usize,
    pub steps_per_segment: usize,
    /// Grid indices that were re-run.
    pub points: Vec<usize>,
    /// Largest change of any reported distance at `n_max + 5`.
    pub delta_n_max: f64,
    /// Largest change at twice the step count.
    pub delta_step: f64,
    pub thermal_tail: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `count` indices spread evenly over `0..len`, ends included.
pub fn subsample(len: usize, count: usize) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    if count == 1 {
        return vec![len - 1];
    }
    let mut v: Vec<usize> = (0..count)
        .map(|j| ((j * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    v.dedup();
    v
}

/// Smallest cutoff at or above the floor whose thermal tail is below
/// tolerance.
pub fn initial_n_max(nbar: f64) -> usize {
    let mut n = truncation_floor(nbar);
    while thermal_tail(nbar, n) >= tolerance::THERMAL_TAIL {
        n += 1;
    }
    n
}

fn max_delta(a: &[ExperimentRecord], b: &[ExperimentRecord]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.distances().into_iter().zip(y.distances()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Sweeps at the audit points, cached by resolution.
struct Runs<'a> {
    cfg: &'a ExperimentConfig,
    points: Vec<usize>,
    cache: HashMap<(usize, usize), Vec<ExperimentRecord>>,
}

impl Runs<'_> {
    fn get(&mut self, n_max: usize, steps: usize) -> Result<&[ExperimentRecord]> {
        if !self.cache.contains_key(&(n_max, steps)) {
            let setup = SweepSetup::new(self.cfg, n_max)?;
            let r = sweep_points(&setup, steps, self.cfg.numerics.backend, &self.points)?;
            self.cache.insert((n_max, steps), r);
        }
        Ok(&self.cache[&(n_max, steps)])
    }

    fn report(&mut self, n_max: usize, steps: usize) -> Result<AuditReport> {
        let base = self.get(n_max, steps)?.to_vec();
        // The step rule tightens with the cutoff.
        let hi = n_max + N_MAX_INCREMENT;
        let hi_steps = steps.max(SweepSetup::new(self.cfg, hi)?.auto_steps());
        let delta_n_max = max_delta(&base, self.get(hi, hi_steps)?);
        let delta_step = max_delta(&base, self.get(n_max, 2 * steps)?);
        let tol = self.cfg.numerics.audit_tolerance;
        let tail = thermal_tail(self.cfg.model.nbar, n_max);
        Ok(AuditReport {
            n_max,
            steps_per_segment: steps,
            points: self.points.clone(),
            delta_n_max,
            delta_step,
            thermal_tail: tail,
            tolerance: tol,
            passed: delta_n_max <= tol && delta_step <= tol && tail < tolerance::THERMAL_TAIL,
        })
    }
}

/// Starting resolution: fixed knobs as given, automatic ones from the
/// thermal tail and the step rule.
fn starting_point(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    let n_max = match cfg.numerics.n_max {
        Knob::Fixed(n) => n,
        Knob::Auto => initial_n_max(cfg.model.nbar),
    };
    let steps = match cfg.numerics.steps_per_segment {
        Knob::Fixed(m) => m,
        Knob::Auto => SweepSetup::new(cfg, n_max)?.auto_steps(),
    };
    Ok((n_max, steps))
}

/// Audits the configured resolution, first raising any automatic knob until
/// the audit passes. Fixed knobs are never changed; a failing audit at fixed
/// knobs is reported, not raised.
pub fn convergence_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let (mut n_max, start_steps) = starting_point(cfg)?;
    let mut steps = start_steps;
    let mut runs = Runs {
        cfg,
        points: subsample(cfg.sweep.points, cfg.numerics.audit_points),
        cache: HashMap::new(),
    };
    let auto_n = cfg.numerics.n_max == Knob::Auto;
    let auto_m = cfg.numerics.steps_per_segment == Knob::Auto;
    loop {
        let report = runs.report(n_max, steps)?;
        if report.passed {
            return Ok(report);
        }
        let n_bad = report.delta_n_max > report.tolerance;
        let m_bad = report.delta_step > report.tolerance;
        let mut moved = false;
        if n_bad && auto_n {
            if n_max + N_MAX_INCREMENT > N_MAX_CAP {
                return Err(Error::Convergence {
                    knob: "n_max".into(),
                    detail: format!(
                        "results still change by {:e} at n_max = {n_max} (cap {N_MAX_CAP})",
                        report.delta_n_max
                    ),
                });
            }
            n_max += N_MAX_INCREMENT;
            if auto_m {
                steps = steps.max(SweepSetup::new(cfg, n_max)?.auto_steps());
            }
            moved = true;
        }
        if m_bad && auto_m {
            if steps * 2 > start_steps * STEP_GROWTH_CAP {
                return Err(Error::Convergence {
                    knob: "steps_per_segment".into(),
                    detail: format!(
                        "results still change by {:e} at {steps} steps per segment",
                        report.delta_step
                    ),
                });
            }
            steps *= 2;
            moved = true;
        }
        if !moved {
            return Ok(report);
        }
    }
}

/// Resolution a sweep will use: the configured one, or the one the audit
/// settles on when any knob is automatic.
pub fn resolve_numerics(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    if cfg.numerics.n_max != Knob::Auto && cfg.numerics.steps_per_segment != Knob::Auto {
        return starting_point(cfg);
    }
    let report = convergence_audit(cfg)?;
    if !report.passed {
        let knob = if report.delta_n_max > report.tolerance {
            "n_max"
        } else {
            "steps_per_segment"
        };
        return Err(Error::Convergence {
            knob: knob.into(),
            detail: format!(
                "audit failed with fixed {knob}: delta_n_max = {:e}, delta_step = {:e}",
                report.delta_n_max, report.delta_step
            ),
        });
    }
    Ok((report.n_max, report.steps_per_segment))
}

/// Sweep over the whole grid at the resolved resolution.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let (n_max, steps) = resolve_numerics(cfg)?;
    super::engine::sweep_at(cfg, n_max, steps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationReport {
    pub n_max: usize,
    /// Segment length at each grid point.
    pub spans: Vec<f64>,
    /// Largest residual over the distinct kicks, per span.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Commutation residual of every kick in the cycle with the segment map at
/// every grid point. One uncontrolled trajectory serves all spans.
pub fn commutation_check(cfg: &ExperimentConfig) -> Result<CommutationReport> {
    cfg.validate()?;
    let (n_max, steps) = match (cfg.numerics.n_max, cfg.numerics.steps_per_segment) {
        (Knob::Fixed(n), Knob::Fixed(m)) => (n, m),
        _ => starting_point(cfg)?,
    };
    let setup = SweepSetup::new(cfg, n_max)?;
    let n = setup.segments() as f64;
    let spans: Vec<f64> = setup.t_grid.iter().map(|t| t / n).collect();
    let h = setup.base_interval() / steps as f64;
    let gen = &setup.bundle.generator;

    let mut kicks = setup.cycle.clone();
    kicks.dedup_by(|a, b| a.max_abs_diff(b) == 0.0);

    let residuals = spans
        .par_iter()
        .map(|&tau| {
            let mut blocks = BlockSet::initial(&setup.bundle.rho_e);
            let mut ws = Rk4Workspace::new(blocks.side());
            let k = ((tau / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            blocks.rk4(gen, tau / k as f64, k, &mut ws);
            blocks.hermitize();
            let seg = ChoiMatrix::new(blocks.choi_data(), tau, "segment")?;
            kicks
                .iter()
                .map(|kick| commutation_residual_of(kick, &seg))
                .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(CommutationReport {
        n_max,
        spans,
        residuals,
        max_residual,
        tolerance: tolerance::COMMUTATION,
        passed: max_residual <= tolerance::COMMUTATION,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleCheck {
    /// Kick spacing at the first grid point.
    pub tau: f64,
    pub segments: usize,
    pub product_residual: f64,
    pub periodicity_residual: f64,
    /// Largest `|K H_S K^dagger - H_S|` over the distinct kicks.
    pub system_residual: f64,
    /// Largest `|K H_SE K^dagger + H_SE|` over the distinct kicks.
    pub coupling_residual: f64,
    pub valid: bool,
}

/// Structural checks of the configured schedule: the cycle multiplies to the
/// identity up to phase and repeats exactly. The parity residuals of the
/// kicks are reported alongside but do not affect validity.
pub fn schedule_check(cfg: &ExperimentConfig) -> Result<ScheduleCheck> {
    cfg.validate()?;
    let (n_max, _) = starting_point(cfg)?;
    let setup = SweepSetup::new(cfg, n_max)?;
    let schedule = setup.schedule(setup.t_grid[0])?;
    let report = validate_schedule(&schedule);
    let mut system_residual = 0.0f64;
    let mut coupling_residual = 0.0f64;
    for k in &setup.cycle {
        let p = parity_residuals(&setup.bundle, k)?;
        system_residual = system_residual.max(p.system_residual);
        coupling_residual = coupling_residual.max(p.coupling_residual);
    }
    Ok(ScheduleCheck {
        tau: schedule.tau(),
        segments: schedule.segments(),
        product_residual: report.product_residual,
        periodicity_residual: report.periodicity_residual,
        system_residual,
        coupling_residual,
        valid: report.is_valid(),
    })
}
