//! On-disk formats: curve snapshots as JSON and the CSV tables written by
//! the command-line tool. Floats are written in shortest round-trip form,
//! so reading a file back reproduces the values bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::curve::{ClosedCurve, DiffScheme};
use crate::dynamics::{ConvergenceRow, Diagnostics, FlowState};
use crate::error::{Error, Result};
use crate::lemma_lab::EstimateReport;
use crate::stability::{GronwallFit, StabilityReport};
use crate::vec2::Vec2;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const FIT_FILE: &str = "fit.json";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

fn io_err(path: &Path, reason: impl ToString) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// The curve interchange record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: usize,
    pub alpha: f64,
    pub time: f64,
    pub nodes: Vec<Vec2>,
    pub g: Vec<f64>,
    pub tangent: Vec<Vec2>,
    pub scheme: DiffScheme,
}

impl Snapshot {
    pub fn from_state(state: &FlowState, alpha: f64) -> Self {
        Snapshot {
            n: state.n(),
            alpha,
            time: state.time,
            nodes: state.curve.nodes().to_vec(),
            g: state.g.clone(),
            tangent: state.tangent.clone(),
            scheme: state.curve.scheme(),
        }
    }

    /// Rebuild the flow state, checking sizes and the curve itself.
    pub fn to_state(&self) -> Result<FlowState> {
        if self.nodes.len() != self.n || self.g.len() != self.n || self.tangent.len() != self.n {
            return Err(Error::Mismatch(format!(
                "snapshot declares n = {} but holds {} nodes, {} metric values, {} tangents",
                self.n,
                self.nodes.len(),
                self.g.len(),
                self.tangent.len()
            )));
        }
        let curve = ClosedCurve::new(self.nodes.clone(), self.scheme)?;
        FlowState::from_parts(curve, self.g.clone(), self.tangent.clone(), self.time)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| io_err(path, e))
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    write_json(path, snapshot)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    read_json(path)
}

/// File name of the `index`-th snapshot of a trajectory.
pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:05}.json")
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let found = r.headers().map_err(|e| io_err(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(io_err(path, format!("unexpected header {:?}", found.iter().collect::<Vec<_>>())));
    }
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

pub const DIAGNOSTICS_HEADER: [&str; 7] = [
    "time",
    "area",
    "length",
    "min_spacing",
    "consistency_residual",
    "tangent_norm_dev",
    "holder_beta_hat",
];

pub fn write_diagnostics(path: &Path, rows: &[Diagnostics]) -> Result<()> {
    write_rows(path, &DIAGNOSTICS_HEADER, rows)
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<Diagnostics>> {
    read_rows(path, &DIAGNOSTICS_HEADER)
}

pub const STABILITY_HEADER: [&str; 5] = ["time", "delta", "delta_gamma", "delta_g", "delta_T"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub time: f64,
    pub delta: f64,
    pub delta_gamma: f64,
    pub delta_g: f64,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
}

pub fn stability_rows(report: &StabilityReport) -> Vec<StabilityRow> {
    (0..report.times.len())
        .map(|i| StabilityRow {
            time: report.times[i],
            delta: report.delta[i],
            delta_gamma: report.delta_gamma[i],
            delta_g: report.delta_g[i],
            delta_t: report.delta_t[i],
        })
        .collect()
}

pub fn write_stability(path: &Path, report: &StabilityReport) -> Result<()> {
    write_rows(path, &STABILITY_HEADER, stability_rows(report))
}

pub fn read_stability(path: &Path) -> Result<Vec<StabilityRow>> {
    read_rows(path, &STABILITY_HEADER)
}

/// Fit summary; `C` and `residual` are null when no fit was possible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub residual: Option<f64>,
    pub holds_pointwise: bool,
}

impl From<Option<GronwallFit>> for FitSummary {
    fn from(fit: Option<GronwallFit>) -> Self {
        match fit {
            Some(f) => FitSummary {
                c: Some(f.c),
                residual: Some(f.residual),
                holds_pointwise: f.holds_pointwise,
            },
            None => FitSummary {
                c: None,
                residual: None,
                holds_pointwise: false,
            },
        }
    }
}

pub const ESTIMATES_HEADER: [&str; 7] = [
    "estimate_id",
    "alpha",
    "beta_or_p",
    "fitted_exponent",
    "predicted_exponent",
    "empirical_constant",
    "refinement_stability",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimate_id: String,
    pub alpha: f64,
    pub beta_or_p: f64,
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
    pub empirical_constant: f64,
    pub refinement_stability: f64,
}

impl From<&EstimateReport> for EstimateRow {
    fn from(r: &EstimateReport) -> Self {
        EstimateRow {
            estimate_id: r.estimate_id.clone(),
            alpha: r.alpha,
            beta_or_p: r.beta_or_p,
            fitted_exponent: r.fitted_exponent,
            predicted_exponent: r.predicted_exponent,
            empirical_constant: r.empirical_constant,
            refinement_stability: r.refinement_stability,
        }
    }
}

pub fn write_estimates(path: &Path, reports: &[EstimateReport]) -> Result<()> {
    write_rows(path, &ESTIMATES_HEADER, reports.iter().map(EstimateRow::from))
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimateRow>> {
    read_rows(path, &ESTIMATES_HEADER)
}

pub const CONVERGENCE_HEADER: [&str; 8] = [
    "n",
    "dt",
    "velocity_error",
    "area_drift",
    "consistency_residual",
    "velocity_order",
    "area_order",
    "consistency_order",
];

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    write_rows(path, &CONVERGENCE_HEADER, rows)
}

pub fn read_convergence(path: &Path) -> Result<Vec<ConvergenceRow>> {
    read_rows(path, &CONVERGENCE_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let c = ClosedCurve::ellipse(32, 2.0, 1.0).unwrap();
        let mut state = FlowState::new(c).unwrap();
        state.time = 0.1 + 0.2;
        let snap = Snapshot::from_state(&state, 0.25);
        write_snapshot(&path, &snap).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_state().unwrap().g, state.g);
    }

    #[test]
    fn snapshot_size_mismatch_is_rejected() {
        let c = ClosedCurve::circle(16, 1.0).unwrap();
        let mut snap = Snapshot::from_state(&FlowState::new(c).unwrap(), 0.25);
        snap.g.pop();
        assert!(matches!(snap.to_state(), Err(Error::Mismatch(_))));
    }

    #[test]
    fn diagnostics_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(DIAGNOSTICS_FILE);
        let d = Diagnostics {
            time: 1.0 / 3.0,
            area: std::f64::consts::PI,
            length: 1e-300,
            min_spacing: 0.1,
            consistency_residual: 2.5e-17,
            tangent_norm_dev: 0.0,
            holder_beta_hat: 0.999,
        };
        write_diagnostics(&path, &[d, d]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), DIAGNOSTICS_HEADER.join(","));
        assert_eq!(read_diagnostics(&path).unwrap(), vec![d, d]);
    }

    #[test]
    fn convergence_orders_may_be_blank() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CONVERGENCE_FILE);
        let row = ConvergenceRow {
            n: 64,
            dt: 1e-3,
            velocity_error: 1e-15,
            area_drift: 1e-9,
            consistency_residual: 1e-8,
            velocity_order: None,
            area_order: Some(4.0),
            consistency_order: Some(3.9),
        };
        write_convergence(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",,4.0,"));
        assert_eq!(read_convergence(&path).unwrap(), vec![row]);
    }

    #[test]
    fn wrong_header_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_estimates(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn fit_summary_uses_capital_c() {
        let s = FitSummary::from(Some(GronwallFit {
            c: 0.5,
            residual: 0.01,
            holds_pointwise: true,
        }));
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"C":0.5,"residual":0.01,"holds_pointwise":true}"#);
    }
}
