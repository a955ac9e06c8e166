//! Sweep records and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::MeasureReport;
use crate::tolerance;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub t_f: f64,
    pub t_c: f64,
    pub p_bar: f64,
    pub p_tilde: f64,
    pub delta_p: f64,
    pub e: f64,
    pub e_ub: f64,
    pub e_lb: f64,
    pub n_tilde: f64,
    pub n_bar: f64,
    pub p_bar_state: f64,
    pub p_tilde_state: f64,
    pub e_state: f64,
    pub n_tilde_state: f64,
    pub n_bar_state: f64,
    pub commutation_residual: f64,
    pub erased_gap: f64,
    pub choi_min_eigenvalue: f64,
    pub choi_tp_residual: f64,
    pub n_max_used: usize,
    pub steps_used: usize,
}

pub const CSV_COLUMNS: [&str; 21] = [
    "t_f",
    "t_c",
    "p_bar",
    "p_tilde",
    "delta_p",
    "e",
    "e_ub",
    "e_lb",
    "n_tilde",
    "n_bar",
    "p_bar_state",
    "p_tilde_state",
    "e_state",
    "n_tilde_state",
    "n_bar_state",
    "commutation_residual",
    "erased_gap",
    "choi_min_eigenvalue",
    "choi_tp_residual",
    "n_max_used",
    "steps_used",
];

impl ExperimentRecord {
    pub fn from_report(t_f: f64, t_c: f64, r: &MeasureReport, n_max_used: usize, steps_used: usize) -> Self {
        let m = &r.map;
        let s = r.state_level.unwrap_or(*m);
        Self {
            t_f,
            t_c,
            p_bar: m.p_bar,
            p_tilde: m.p_tilde,
            delta_p: m.delta_p(),
            e: m.effect,
            e_ub: m.e_ub,
            e_lb: m.e_lb,
            n_tilde: m.n_tilde,
            n_bar: m.n_bar,
            p_bar_state: s.p_bar,
            p_tilde_state: s.p_tilde,
            e_state: s.effect,
            n_tilde_state: s.n_tilde,
            n_bar_state: s.n_bar,
            commutation_residual: r.commutation_residual,
            erased_gap: r.erased_gap,
            choi_min_eigenvalue: r.choi.min_eigenvalue,
            choi_tp_residual: r.choi.tp_residual.max(r.choi.trace_error),
            n_max_used,
            steps_used,
        }
    }

    /// Map-level bounds within slack.
    pub fn map_bounds_hold(&self) -> bool {
        let s = tolerance::BOUND_SLACK;
        self.e_lb - s <= self.e && self.e <= self.e_ub + s
    }

    /// State-level bounds within slack.
    pub fn state_bounds_hold(&self) -> bool {
        let s = tolerance::BOUND_SLACK;
        let lb = (self.n_tilde_state - self.n_bar_state).abs();
        let ub = self.n_tilde_state + self.n_bar_state;
        lb - s <= self.e_state && self.e_state <= ub + s
    }

    /// Bounds hold, or the commutation hypothesis visibly fails.
    pub fn consistent(&self) -> bool {
        self.commutation_residual > tolerance::COMMUTATION || (self.map_bounds_hold() && self.state_bounds_hold())
    }

    /// The reported distances, in a fixed order, for convergence comparisons.
    pub fn distances(&self) -> [f64; 10] {
        [
            self.p_bar,
            self.p_tilde,
            self.e,
            self.n_tilde,
            self.n_bar,
            self.p_bar_state,
            self.p_tilde_state,
            self.e_state,
            self.n_tilde_state,
            self.n_bar_state,
        ]
    }

    fn fields(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.16e}");
        vec![
            f(self.t_f),
            f(self.t_c),
            f(self.p_bar),
            f(self.p_tilde),
            f(self.delta_p),
            f(self.e),
            f(self.e_ub),
            f(self.e_lb),
            f(self.n_tilde),
            f(self.n_bar),
            f(self.p_bar_state),
            f(self.p_tilde_state),
            f(self.e_state),
            f(self.n_tilde_state),
            f(self.n_bar_state),
            f(self.commutation_residual),
            f(self.erased_gap),
            f(self.choi_min_eigenvalue),
            f(self.choi_tp_residual),
            self.n_max_used.to_string(),
            self.steps_used.to_string(),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_COLUMNS.len() {
            return Err(Error::arg(format!(
                "expected {} columns, found {}",
                CSV_COLUMNS.len(),
                row.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::arg(format!("column {} is not a number: `{}`", CSV_COLUMNS[i], &row[i])))
        };
        let int = |i: usize| -> Result<usize> {
            row[i]
                .parse()
                .map_err(|_| Error::arg(format!("column {} is not an integer: `{}`", CSV_COLUMNS[i], &row[i])))
        };
        Ok(Self {
            t_f: num(0)?,
            t_c: num(1)?,
            p_bar: num(2)?,
            p_tilde: num(3)?,
            delta_p: num(4)?,
            e: num(5)?,
            e_ub: num(6)?,
            e_lb: num(7)?,
            n_tilde: num(8)?,
            n_bar: num(9)?,
            p_bar_state: num(10)?,
            p_tilde_state: num(11)?,
            e_state: num(12)?,
            n_tilde_state: num(13)?,
            n_bar_state: num(14)?,
            commutation_residual: num(15)?,
            erased_gap: num(16)?,
            choi_min_eigenvalue: num(17)?,
            choi_tp_residual: num(18)?,
            n_max_used: int(19)?,
            steps_used: int(20)?,
        })
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// CSV text for `records`: header plus one row each, newline-terminated.
pub fn to_csv_string(records: &[ExperimentRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::arg("no records to write"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::arg(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let text = to_csv_string(records)?;
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::arg(format!("unexpected CSV header in {}", path.display())));
    }
    r.records().map(|row| ExperimentRecord::from_fields(&row?)).collect()
}
