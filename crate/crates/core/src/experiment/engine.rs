//! Sweep over final times.
//!
//! When every `t_f` on the grid is an integer multiple `u_j` of a common
//! spacing, all segment lengths are multiples of one base interval
//! `delta = spacing / n` and the maps at successive grid points extend each
//! other. Points are then processed in fixed-size chunks: within a chunk the
//! single-segment and uncontrolled evolutions are carried forward from point
//! to point, and the controlled evolution reuses the segment evolution for
//! its remaining `n - 1` segments. Chunking does not depend on the thread
//! count, so output is reproducible under any pool size.

use rayon::prelude::*;

use super::config::{BackendChoice, ExperimentConfig};
use super::record::ExperimentRecord;
use crate::error::{Error, Result};
use crate::maps::{evaluate, point_maps, target_unitary, ChoiMatrix, PointMaps};
use crate::model::{build_model, ModelBundle};
use crate::propagator::{
    auto_steps, direct_cost, pow_products, worth_forming, BlockSet, DirectPropagation, Propagation, SegmentPlan,
    TransferPropagation,
};
use crate::schedule::KickSchedule;
use crate::tensor::TensorOperator;
use crate::tolerance;

/// Points per work unit.
const CHUNK: usize = 4;

/// Largest transfer matrix, in complex entries, the engine will allocate.
const TRANSFER_MAX_ENTRIES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Direct,
    Transfer,
}

/// Grid expressed in multiples of a common spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedGrid {
    pub spacing: f64,
    pub units: Vec<usize>,
}

/// Integer multiples of the first grid spacing, if every time is one.
pub fn aligned_units(t: &[f64]) -> Option<AlignedGrid> {
    let first = *t.first()?;
    let rough = if t.len() > 1 { t[1] - first } else { first };
    if !(rough > 0.0) {
        return None;
    }
    let units: Vec<usize> = t.iter().map(|x| (x / rough).round() as usize).collect();
    if units[0] == 0 || units.windows(2).any(|w| w[1] <= w[0]) {
        return None;
    }
    let spacing = t[t.len() - 1] / units[units.len() - 1] as f64;
    let aligned = t
        .iter()
        .zip(&units)
        .all(|(x, &u)| (u as f64 * spacing - x).abs() <= 1e-9 * x);
    aligned.then_some(AlignedGrid { spacing, units })
}

/// Everything fixed for one sweep at one numerical resolution.
pub struct SweepSetup {
    pub bundle: ModelBundle,
    pub cycle: Vec<TensorOperator>,
    pub cycles: usize,
    pub t_grid: Vec<f64>,
    pub rho0: TensorOperator,
    pub n_max: usize,
}

impl SweepSetup {
    pub fn new(cfg: &ExperimentConfig, n_max: usize) -> Result<Self> {
        let params = cfg.rabi_params(n_max);
        Ok(Self {
            bundle: build_model(&params)?,
            cycle: cfg.cycle_kicks()?,
            cycles: cfg.control.cycles,
            t_grid: cfg.t_grid(),
            rho0: cfg.initial_state()?,
            n_max,
        })
    }

    /// Segments per point.
    pub fn segments(&self) -> usize {
        self.cycle.len() * self.cycles
    }

    pub fn omega_max(&self) -> f64 {
        self.bundle.params.omega_max()
    }

    /// Shortest segment on the grid; `steps_per_segment` refers to it.
    pub fn base_interval(&self) -> f64 {
        let n = self.segments() as f64;
        match aligned_units(&self.t_grid) {
            Some(g) => g.spacing / n,
            None => self.t_grid[0] / n,
        }
    }

    /// Default RK4 steps over the base interval.
    pub fn auto_steps(&self) -> usize {
        auto_steps(self.omega_max(), self.base_interval())
    }

    pub(crate) fn schedule(&self, t_f: f64) -> Result<KickSchedule> {
        KickSchedule::periodic(t_f / self.segments() as f64, &self.cycle, self.cycles)
    }

    fn record(&self, maps: &PointMaps, schedule: &KickSchedule, steps: usize) -> Result<ExperimentRecord> {
        let t_f = schedule.final_time();
        let report = evaluate(maps, schedule, &target_unitary(&self.bundle, t_f)?, Some(&self.rho0))?;
        Ok(ExperimentRecord::from_report(
            t_f,
            schedule.cycle_time(),
            &report,
            self.n_max,
            steps,
        ))
    }
}

/// Multiply-add estimates `(direct, transfer)` for the given points,
/// mirroring the work done by the chunk runner.
pub fn backend_costs(side: usize, units: &[usize], segments: usize, steps: usize) -> (f64, f64) {
    let n = segments;
    let dim = side * side;
    let d = dim as f64;
    let mv = 3.0 * d * d;
    let gemm = d * d * d;
    // Applying an unformed span once, forming it first if that is cheaper.
    let once = |u: usize| {
        if worth_forming(dim, u, 1) {
            pow_products(u) as f64 * gemm + mv
        } else {
            u as f64 * mv
        }
    };

    let mut direct_steps = 0usize;
    let mut transfer =
        d * direct_cost(side, steps as f64).min(direct_cost(side, 1.0) + 2.0 * (steps as f64).log2().ceil() * gemm);
    for chunk in units.chunks(CHUNK) {
        let u0 = chunk[0];
        direct_steps += u0 * (n + 1) * steps;
        transfer += u0 as f64 * mv + once(n * u0);
        let mut formed = false;
        let mut prev = u0;
        for &u in chunk {
            let du = u - prev;
            direct_steps += ((n + 1) * du + (n - 1) * u) * steps;
            if du > 0 {
                transfer += du as f64 * mv + once(n * du);
                if formed {
                    transfer += (pow_products(du) + 1) as f64 * gemm;
                }
            }
            if !formed && worth_forming(dim, u, n - 1) {
                formed = true;
                transfer += pow_products(u) as f64 * gemm;
            }
            transfer += if formed {
                (n - 1) as f64 * mv
            } else {
                ((n - 1) * u) as f64 * mv
            };
            prev = u;
        }
    }
    (direct_cost(side, direct_steps as f64), transfer)
}

fn choose_backend(choice: BackendChoice, setup: &SweepSetup, units: &[usize], steps: usize) -> Result<Backend> {
    let side = setup.bundle.generator.side();
    let fits = side.pow(4) <= TRANSFER_MAX_ENTRIES;
    match choice {
        BackendChoice::Direct => Ok(Backend::Direct),
        BackendChoice::Transfer if fits => Ok(Backend::Transfer),
        BackendChoice::Transfer => Err(Error::config(format!(
            "transfer backend needs a {0}x{0} matrix; use numerics.backend = \"direct\"",
            side * side
        ))),
        BackendChoice::Auto => {
            let (direct, transfer) = backend_costs(side, units, setup.segments(), steps);
            Ok(if fits && transfer < direct {
                Backend::Transfer
            } else {
                Backend::Direct
            })
        }
    }
}

fn check_trace(blocks: &BlockSet) -> Result<()> {
    let err = blocks.trace_error();
    if err > tolerance::TRAJECTORY_TRACE {
        return Err(Error::Convergence {
            knob: "steps_per_segment".into(),
            detail: format!("block trace drifted by {err:e}"),
        });
    }
    Ok(())
}

fn choi(blocks: &BlockSet, span: f64, label: &str) -> Result<ChoiMatrix> {
    let mut b = blocks.clone();
    b.hermitize();
    ChoiMatrix::new(b.choi_data(), span, label)
}

/// Records for one chunk of ascending unit counts.
fn run_chunk<P: Propagation>(
    setup: &SweepSetup,
    prop: &P,
    delta: f64,
    steps: usize,
    chunk: &[usize],
) -> Result<Vec<ExperimentRecord>> {
    let n = setup.segments();
    let start = BlockSet::initial(&setup.bundle.rho_e);

    let mut seg_span = prop.span(chunk[0]);
    let mut seg = start.clone();
    prop.apply(&seg_span, &mut seg);
    let mut unc = start;
    prop.apply(&prop.prepare(prop.span(n * chunk[0]), 1), &mut unc);

    let mut out = Vec::with_capacity(chunk.len());
    let mut prev = chunk[0];
    let mut unc_step: Option<(usize, P::Span)> = None;
    for &u in chunk {
        let du = u - prev;
        if du > 0 {
            seg_span = prop.extend(&seg_span, du);
            prop.apply(&prop.span(du), &mut seg);
            if unc_step.as_ref().is_none_or(|(d, _)| *d != du) {
                unc_step = Some((du, prop.prepare(prop.span(n * du), 1)));
            }
            prop.apply(&unc_step.as_ref().expect("cached").1, &mut unc);
        }
        prev = u;
        seg_span = prop.prepare(seg_span, n - 1);

        let tau = u as f64 * delta;
        let schedule = KickSchedule::periodic(tau, &setup.cycle, setup.cycles)?;
        let t_f = schedule.final_time();
        let mut ctrl = seg.clone();
        ctrl.hermitize();
        let segment = ChoiMatrix::new(ctrl.choi_data(), tau, "segment")?;
        let kicks = schedule.kicks();
        ctrl.kick(&kicks[0]);
        for k in &kicks[1..] {
            prop.apply(&seg_span, &mut ctrl);
            ctrl.hermitize();
            ctrl.kick(k);
        }
        check_trace(&ctrl)?;
        check_trace(&unc)?;
        let maps = PointMaps {
            controlled: ChoiMatrix::new(ctrl.choi_data(), t_f, "controlled")?,
            uncontrolled: choi(&unc, t_f, "uncontrolled")?,
            segment,
        };
        out.push(setup.record(&maps, &schedule, u * steps)?);
    }
    Ok(out)
}

fn run_aligned<P: Propagation>(
    setup: &SweepSetup,
    prop: &P,
    delta: f64,
    steps: usize,
    units: &[usize],
) -> Result<Vec<ExperimentRecord>> {
    let chunks: Vec<Result<Vec<ExperimentRecord>>> = units
        .par_chunks(CHUNK)
        .map(|c| run_chunk(setup, prop, delta, steps, c))
        .collect();
    let mut out = Vec::with_capacity(units.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Records at the grid points `indices` (ascending) with `steps` RK4 steps
/// over the base interval.
pub fn sweep_points(
    setup: &SweepSetup,
    steps: usize,
    backend: BackendChoice,
    indices: &[usize],
) -> Result<Vec<ExperimentRecord>> {
    if indices.is_empty() {
        return Err(Error::arg("no grid points selected"));
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) || indices[indices.len() - 1] >= setup.t_grid.len() {
        return Err(Error::arg("grid indices must be ascending and in range"));
    }
    let omega_max = setup.omega_max();
    let delta = setup.base_interval();
    SegmentPlan::new(delta, steps, omega_max)?;

    if let Some(grid) = aligned_units(&setup.t_grid) {
        let units: Vec<usize> = indices.iter().map(|&i| grid.units[i]).collect();
        let gen = &setup.bundle.generator;
        return match choose_backend(backend, setup, &units, steps)? {
            Backend::Direct => run_aligned(setup, &DirectPropagation::new(gen, delta, steps), delta, steps, &units),
            Backend::Transfer => run_aligned(
                setup,
                &TransferPropagation::new(gen, delta, steps),
                delta,
                steps,
                &units,
            ),
        };
    }

    // Irregular grid: every point on its own, same step bound as the base.
    let h = delta / steps as f64;
    indices
        .par_iter()
        .map(|&i| {
            let schedule = setup.schedule(setup.t_grid[i])?;
            let tau = schedule.tau();
            let seg_steps = ((tau / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let plan = SegmentPlan::new(tau, seg_steps, omega_max)?;
            let maps = point_maps(&setup.bundle, &schedule, &plan)?;
            setup.record(&maps, &schedule, seg_steps)
        })
        .collect()
}

/// Every grid point at a fixed resolution.
pub fn sweep_at(cfg: &ExperimentConfig, n_max: usize, steps: usize) -> Result<Vec<ExperimentRecord>> {
    let setup = SweepSetup::new(cfg, n_max)?;
    let all: Vec<usize> = (0..setup.t_grid.len()).collect();
    sweep_points(&setup, steps, cfg.numerics.backend, &all)
}
