//! Named parameter sets for the one-cycle and many-cycle regime studies.

use std::f64::consts::PI;

use super::config::{
    ControlSection, ExperimentConfig, InitialStateSection, KickKind, ModelSection, NumericsSection, SweepSection,
    TimeUnit,
};
use crate::error::{Error, Result};
use crate::model::Coupling;

pub const PRESET_NAMES: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig_heat"];

fn config(omega_e: f64, g: f64, gamma_over_g: f64, nbar: f64, cycles: usize, sweep: SweepSection) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSection {
            omega_e_over_omega_s: omega_e,
            g_over_omega_s: g,
            gamma_over_g,
            nbar,
            coupling: Coupling::Rabi,
        },
        control: ControlSection {
            cycles,
            kind: KickKind::Parity,
            group: None,
            kicks: None,
        },
        sweep,
        initial_state: InitialStateSection::default(),
        numerics: NumericsSection::default(),
    }
}

/// `g t_f` from `0.05` to `6` in 120 equal steps.
fn one_cycle_grid() -> SweepSection {
    SweepSection {
        min: 0.05,
        max: 6.0,
        points: 120,
        unit: TimeUnit::InverseG,
    }
}

pub fn figure_preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "fig2" => config(1.0, 0.01, 0.1, 0.1, 1, one_cycle_grid()),
        "fig3" => config(1.0, 0.01, 100.0, 0.1, 1, one_cycle_grid()),
        "fig4" => config(1.0, 1.0, 0.01, 0.1, 1, one_cycle_grid()),
        "fig5" => config(10.0, 1.0, 0.01, 0.1, 1, one_cycle_grid()),
        "fig6" => config(
            1.0,
            0.01,
            0.1,
            0.1,
            500,
            SweepSection {
                min: 0.15,
                max: 6.0,
                points: 40,
                unit: TimeUnit::InverseG,
            },
        ),
        // Multiples of pi/40 so that t_c = t_f / 50 hits pi/(100 g) and its
        // odd multiples exactly.
        "fig7" => config(
            1.0,
            0.01,
            0.1,
            0.1,
            50,
            SweepSection {
                min: PI / 40.0,
                max: 3.0 * PI,
                points: 120,
                unit: TimeUnit::InverseG,
            },
        ),
        "fig_heat" => config(1.0, 0.01, 0.1, 5.0, 1, one_cycle_grid()),
        _ => {
            return Err(Error::arg(format!(
                "unknown figure preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
