//! Experiment configuration: a flat TOML document with dotted section
//! prefixes such as `model.g_over_omega_s = 0.01`. Unknown keys are errors.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Coupling, RabiParams};
use crate::schedule::DecouplingGroup;
use crate::tensor::{qubit, unitary_exp, TensorOperator};
use crate::tolerance;

/// A numeric knob that is either fixed or chosen automatically.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Knob {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for Knob {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Knob::Auto => s.serialize_str("auto"),
            Knob::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Knob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct KnobVisitor;
        impl Visitor<'_> for KnobVisitor {
            type Value = Knob;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Knob, E> {
                if v < 1 {
                    return Err(E::custom(format!("expected a positive integer, got {v}")));
                }
                Ok(Knob::Fixed(v as usize))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Knob, E> {
                self.visit_i64(v as i64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Knob, E> {
                if v == "auto" {
                    Ok(Knob::Auto)
                } else {
                    Err(E::custom(format!("expected \"auto\", got \"{v}\"")))
                }
            }
        }
        d.deserialize_any(KnobVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub omega_e_over_omega_s: f64,
    pub g_over_omega_s: f64,
    /// Dissipation rate in units of `g`.
    pub gamma_over_g: f64,
    pub nbar: f64,
    #[serde(default)]
    pub coupling: Coupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickKind {
    /// Two `sigma_z` kicks per cycle.
    Parity,
    /// Kicks built from a named decoupling group.
    Group,
    /// An explicit per-cycle kick list.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub cycles: usize,
    pub kind: KickKind,
    /// `parity` or `pauli`, for `kind = "group"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Kick names for `kind = "custom"`: `i`, `x`, `y`, `z`, or
    /// `x:theta` (likewise `y`, `z`) for `exp(-i theta sigma)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kicks: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Grid values are `g t_f`.
    #[default]
    InverseG,
    /// Grid values are `omega_s t_f`.
    InverseOmegaS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub unit: TimeUnit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<[f64; 3]>,
}

impl Default for InitialStateSection {
    fn default() -> Self {
        Self {
            preset: Some("plus".into()),
            bloch: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Pick the cheaper backend from an operation-count estimate.
    #[default]
    Auto,
    Direct,
    Transfer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default)]
    pub n_max: Knob,
    /// RK4 steps per base segment (the segment at the grid spacing).
    #[serde(default)]
    pub steps_per_segment: Knob,
    #[serde(default)]
    pub allow_below_floor: bool,
    #[serde(default = "default_audit_tolerance")]
    pub audit_tolerance: f64,
    #[serde(default = "default_audit_points")]
    pub audit_points: usize,
    #[serde(default)]
    pub backend: BackendChoice,
}

fn default_audit_tolerance() -> f64 {
    tolerance::AUDIT
}

fn default_audit_points() -> usize {
    5
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            n_max: Knob::Auto,
            steps_per_segment: Knob::Auto,
            allow_below_floor: false,
            audit_tolerance: tolerance::AUDIT,
            audit_points: 5,
            backend: BackendChoice::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub control: ControlSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub initial_state: InitialStateSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

/// `exp(-i theta sigma_axis)`, or a Pauli matrix for a bare axis name.
pub fn parse_kick(name: &str) -> Result<TensorOperator> {
    let name = name.trim();
    let (axis, angle) = match name.split_once(':') {
        Some((a, t)) => {
            let theta: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad kick angle in `{name}`")))?;
            (a.trim(), Some(theta))
        }
        None => (name, None),
    };
    let pauli = match axis {
        "i" => return Ok(TensorOperator::identity(&[2])),
        "x" => qubit::sigma_x(),
        "y" => qubit::sigma_y(),
        "z" => qubit::sigma_z(),
        _ => return Err(Error::config(format!("unknown kick `{name}`"))),
    };
    match angle {
        None => Ok(pauli),
        Some(theta) => unitary_exp(&pauli, theta),
    }
}

/// Bloch vector of a named initial state.
pub fn preset_bloch(name: &str) -> Result<[f64; 3]> {
    Ok(match name {
        "plus" => [1.0, 0.0, 0.0],
        "minus" => [-1.0, 0.0, 0.0],
        "plus_y" => [0.0, 1.0, 0.0],
        "excited" => [0.0, 0.0, 1.0],
        "ground" => [0.0, 0.0, -1.0],
        "mixed" => [0.0, 0.0, 0.0],
        _ => return Err(Error::config(format!("unknown initial state preset `{name}`"))),
    })
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Dotted-key rendering accepted by [`ExperimentConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = String::new();
        if let toml::Value::Table(sections) = value {
            for (section, body) in sections {
                if let toml::Value::Table(fields) = body {
                    for (key, v) in fields {
                        out.push_str(&format!("{section}.{key} = {v}\n"));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.g_over_omega_s >= 0.0) || !(m.omega_e_over_omega_s > 0.0) {
            return Err(Error::config(
                "model.g_over_omega_s must be >= 0 and model.omega_e_over_omega_s > 0",
            ));
        }
        if !(m.gamma_over_g >= 0.0) || !(m.nbar >= 0.0) {
            return Err(Error::config("model.gamma_over_g and model.nbar must be >= 0"));
        }
        if self.control.cycles == 0 {
            return Err(Error::config("control.cycles must be at least 1"));
        }
        if self.cycle_kicks()?.is_empty() {
            return Err(Error::config("a control cycle needs at least one kick"));
        }
        let s = &self.sweep;
        if s.points == 0 {
            return Err(Error::config("sweep.points must be at least 1"));
        }
        if !(s.min > 0.0) || !s.max.is_finite() {
            return Err(Error::config("sweep.min must be positive and sweep.max finite"));
        }
        if s.points > 1 && !(s.max > s.min) {
            return Err(Error::config("sweep grid must be strictly increasing (max > min)"));
        }
        if s.unit == TimeUnit::InverseG && m.g_over_omega_s == 0.0 {
            return Err(Error::config("sweep.unit = \"inverse_g\" needs g > 0"));
        }
        let r = self.bloch()?;
        if r.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::config("initial_state.bloch must have length <= 1"));
        }
        if !(self.numerics.audit_tolerance > 0.0) || self.numerics.audit_points == 0 {
            return Err(Error::config(
                "numerics.audit_tolerance and numerics.audit_points must be positive",
            ));
        }
        Ok(())
    }

    /// Model parameters with `omega_s = 1` and the given cutoff.
    pub fn rabi_params(&self, n_max: usize) -> RabiParams {
        let m = &self.model;
        let g = m.g_over_omega_s;
        RabiParams {
            omega_s: 1.0,
            omega_e: m.omega_e_over_omega_s,
            g,
            gamma: m.gamma_over_g * g,
            nbar: m.nbar,
            n_max,
            coupling: m.coupling,
            allow_below_floor: self.numerics.allow_below_floor,
        }
    }

    pub fn cycle_kicks(&self) -> Result<Vec<TensorOperator>> {
        let c = &self.control;
        match c.kind {
            KickKind::Parity => Ok(vec![qubit::sigma_z(), qubit::sigma_z()]),
            KickKind::Group => {
                let group = match c.group.as_deref() {
                    Some("parity") | None => DecouplingGroup::parity(),
                    Some("pauli") => DecouplingGroup::pauli(),
                    Some(other) => return Err(Error::config(format!("unknown group `{other}`"))),
                };
                Ok(group.cycle_kicks())
            }
            KickKind::Custom => c
                .kicks
                .as_ref()
                .ok_or_else(|| Error::config("control.kind = \"custom\" needs control.kicks"))?
                .iter()
                .map(|k| parse_kick(k))
                .collect(),
        }
    }

    pub fn bloch(&self) -> Result<[f64; 3]> {
        let s = &self.initial_state;
        match (&s.preset, s.bloch) {
            (Some(_), Some(_)) => Err(Error::config("give either initial_state.preset or initial_state.bloch")),
            (Some(name), None) => preset_bloch(name),
            (None, Some(r)) => Ok(r),
            (None, None) => preset_bloch("plus"),
        }
    }

    pub fn initial_state(&self) -> Result<TensorOperator> {
        let [x, y, z] = self.bloch()?;
        Ok(qubit::bloch_state(x, y, z))
    }

    /// Multiplier turning grid values into times.
    pub fn time_scale(&self) -> f64 {
        match self.sweep.unit {
            TimeUnit::InverseG => 1.0 / self.model.g_over_omega_s,
            TimeUnit::InverseOmegaS => 1.0,
        }
    }

    /// Grid values in the configured unit.
    pub fn grid_values(&self) -> Vec<f64> {
        let s = &self.sweep;
        if s.points == 1 {
            return vec![s.min];
        }
        let step = (s.max - s.min) / (s.points - 1) as f64;
        (0..s.points)
            .map(|j| {
                if j + 1 == s.points {
                    s.max
                } else {
                    s.min + j as f64 * step
                }
            })
            .collect()
    }

    /// Final times `t_f` of the sweep.
    pub fn t_grid(&self) -> Vec<f64> {
        let scale = self.time_scale();
        self.grid_values().iter().map(|v| v * scale).collect()
    }
}
