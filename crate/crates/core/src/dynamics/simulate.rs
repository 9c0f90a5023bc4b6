use serde::{Deserialize, Serialize};

use super::{step, FlowState, StepperConfig};
use crate::curve::{default_shifts, holder_exponent, ClosedCurve};
use crate::error::{invalid, Error, Result};
use crate::velocity::KernelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub stepper: StepperConfig,
    pub t_end: f64,
    /// Emit a snapshot every this many steps (the last step always emits).
    pub emit_every: usize,
    /// Run the O(N²) simplicity test at every emission.
    pub check_simple: bool,
}

impl SimulationConfig {
    pub fn new(stepper: StepperConfig, t_end: f64, emit_every: usize) -> Self {
        SimulationConfig {
            stepper,
            t_end,
            emit_every,
            check_simple: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stepper.validate()?;
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", "must be finite and nonnegative"));
        }
        if self.emit_every == 0 {
            return Err(invalid("emit_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps and the step size that lands exactly on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.stepper.dt);
        }
        let n = ((self.t_end / self.stepper.dt).round() as usize).max(1);
        (n, self.t_end / n as f64)
    }
}

/// Per-emission health of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub area: f64,
    pub length: f64,
    pub min_spacing: f64,
    pub consistency_residual: f64,
    pub tangent_norm_dev: f64,
    /// Fitted Hölder exponent of the evolved tangent.
    pub holder_beta_hat: f64,
}

impl Diagnostics {
    pub fn of(state: &FlowState) -> Result<Self> {
        let length = state.curve.total_length()?;
        let fit = holder_exponent(&state.tangent, length, &default_shifts(state.n()))?;
        Ok(Diagnostics {
            time: state.time,
            area: state.curve.area()?,
            length,
            min_spacing: state.curve.min_spacing(),
            consistency_residual: state.consistency_residual()?,
            tangent_norm_dev: state.tangent_norm_deviation(),
            holder_beta_hat: fit.exponent,
        })
    }
}

/// Emitted snapshots with their diagnostics. A run that stopped early keeps
/// everything emitted before the failure and records the cause.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    pub diagnostics: Vec<Diagnostics>,
    pub aborted: Option<Error>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn last(&self) -> &FlowState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }
}

/// Evolve `initial` to `t_end`.
pub fn run_simulation(config: &SimulationConfig, initial: &ClosedCurve, params: &KernelParams) -> Result<Trajectory> {
    run_from_state(config, FlowState::new(initial.clone())?, params)
}

/// Evolve a prepared state by `t_end` time units.
pub fn run_from_state(config: &SimulationConfig, initial: FlowState, params: &KernelParams) -> Result<Trajectory> {
    config.validate()?;
    let (steps, dt) = config.schedule();
    let stepper = StepperConfig { dt, ..config.stepper };
    let mut traj = Trajectory {
        diagnostics: vec![Diagnostics::of(&initial)?],
        snapshots: vec![initial],
        aborted: None,
    };
    let mut state = traj.snapshots[0].clone();
    for i in 0..steps {
        let next = match step(&state, &stepper, params, i) {
            Ok(s) => s,
            Err(e) => {
                traj.aborted = Some(e);
                return Ok(traj);
            }
        };
        state = next;
        if (i + 1) % config.emit_every == 0 || i + 1 == steps {
            if config.check_simple {
                if let Err(e) = state.curve.check_simple() {
                    traj.aborted = Some(e);
                    return Ok(traj);
                }
            }
            match Diagnostics::of(&state) {
                Ok(d) => traj.diagnostics.push(d),
                Err(e) => {
                    traj.aborted = Some(e);
                    return Ok(traj);
                }
            }
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_duration_gives_initial_snapshot() {
        let c = ClosedCurve::circle(32, 1.0).unwrap();
        let cfg = SimulationConfig::new(StepperConfig::with_dt(1e-3), 0.0, 1);
        let t = run_simulation(&cfg, &c, &KernelParams::new(0.25).unwrap()).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert!(t.is_complete());
    }

    #[test]
    fn schedule_lands_on_end_time() {
        let cfg = SimulationConfig::new(StepperConfig::with_dt(0.3), 1.0, 1);
        let (n, dt) = cfg.schedule();
        assert_eq!(n, 3);
        assert!((dt * 3.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn aborted_run_keeps_partial_trajectory() {
        let c = ClosedCurve::circle(64, 1.0).unwrap();
        let mut cfg = SimulationConfig::new(StepperConfig::with_dt(1e-3), 0.01, 2);
        cfg.stepper.consistency_tol = 1e-300;
        let t = run_simulation(&cfg, &c, &KernelParams::new(0.25).unwrap()).unwrap();
        assert!(matches!(t.aborted, Some(Error::ResidualBlowup { .. })));
        assert_eq!(t.snapshots.len(), 1);
    }
}
