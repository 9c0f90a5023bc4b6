use serde::{Deserialize, Serialize};

use super::{run_from_state, FlowState, SimulationConfig, StepperConfig};
use crate::curve::ClosedCurve;
use crate::error::{invalid, Result};
use crate::lemma_lab::{generate_test_curve, CurveKind};
use crate::parametric::TrigCurve;
use crate::velocity::{oracle_velocity_at, velocity_on_boundary, KernelParams};

/// Nodes at which the velocity is compared with the oracle.
const PROBES: usize = 8;
const ORACLE_TOL: f64 = 1e-13;

/// A refinement study: level `i` runs with `N₀·2^i` nodes and step `dt₀/2^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub curve: CurveKind,
    pub n0: usize,
    pub dt0: f64,
    pub t_end: f64,
    pub levels: usize,
    pub stepper: StepperConfig,
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(invalid("levels", "a refinement study needs at least two resolutions"));
        }
        if self.n0 < PROBES || !self.n0.is_multiple_of(PROBES) {
            return Err(invalid("n_nodes", format!("must be a positive multiple of {PROBES}")));
        }
        if !(self.dt0 > 0.0) || !(self.t_end > 0.0) {
            return Err(invalid("dt", "step and end time must be positive"));
        }
        self.stepper.validate()
    }
}

/// One resolution of the study. Orders compare with the previous row and
/// are absent on the first row or when either error is at rounding level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dt: f64,
    pub velocity_error: f64,
    pub area_drift: f64,
    pub consistency_residual: f64,
    pub velocity_order: Option<f64>,
    pub area_order: Option<f64>,
    pub consistency_order: Option<f64>,
}

/// Errors below this are rounding noise and carry no order.
pub const ROUNDING_FLOOR: f64 = 1e-12;

fn order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > ROUNDING_FLOOR && fine > ROUNDING_FLOOR).then(|| (coarse / fine).log2())
}

/// Velocity error against the oracle at equally spaced probes, taking the
/// reference curve from the finest level.
fn velocity_error(level_curve: &ClosedCurve, reference: &TrigCurve, params: &KernelParams) -> Result<f64> {
    let v = velocity_on_boundary(level_curve, params)?;
    let n = level_curve.n();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..PROBES {
        let j = p * n / PROBES;
        let exact = oracle_velocity_at(reference, level_curve.label(j), params, ORACLE_TOL)?;
        err = err.max((v[j] - exact).hypot());
        scale = scale.max(exact.hypot());
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}

pub fn run_convergence(config: &ConvergenceConfig, params: &KernelParams) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let finest_n = config.n0 << (config.levels - 1);
    let reference = TrigCurve::interpolating(&generate_test_curve(config.curve, finest_n)?.curve);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        let n = config.n0 << level;
        let dt = config.dt0 / (1u64 << level) as f64;
        let tc = generate_test_curve(config.curve, n)?;
        let velocity_error = velocity_error(&tc.curve, &reference, params)?;
        let state = FlowState::from_parts(tc.curve.clone(), tc.geometry.g.clone(), tc.geometry.tangent.clone(), 0.0)?;
        let area0 = state.curve.area()?;
        let sim = SimulationConfig::new(StepperConfig { dt, ..config.stepper }, config.t_end, usize::MAX);
        let traj = run_from_state(&sim, state, params)?;
        if let Some(e) = traj.aborted {
            return Err(e);
        }
        let last = traj.last();
        let mut row = ConvergenceRow {
            n,
            dt,
            velocity_error,
            area_drift: (last.curve.area()? - area0).abs() / area0,
            consistency_residual: last.consistency_residual()?,
            velocity_order: None,
            area_order: None,
            consistency_order: None,
        };
        if let Some(prev) = rows.last() {
            row.velocity_order = order(prev.velocity_error, row.velocity_error);
            row.area_order = order(prev.area_drift, row.area_drift);
            row.consistency_order = order(prev.consistency_residual, row.consistency_residual);
        }
        rows.push(row);
    }
    Ok(rows)
}
