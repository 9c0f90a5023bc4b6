//! Lagrangian evolution of a patch boundary.
//!
//! The state carries the node positions together with a metric `g` and a
//! unit tangent `T` that are integrated as fields of their own,
//!
//! ```text
//! ∂ₜγ = v,   ∂ₜg = g (∂ₛv·T),   ∂ₜT = (∂ₛv·N) N,
//! ```
//!
//! so that `g T = ∂ₓγ` is a genuine consistency check rather than an
//! identity. The velocity is re-evaluated at every Runge–Kutta stage.

mod convergence;
mod simulate;
mod weak;

use serde::{Deserialize, Serialize};

use crate::curve::{arc_length_reparameterize_with_labels, ClosedCurve, DiffScheme};
use crate::error::{invalid, Error, Result};
use crate::spectral::{exponential_filter, TrigSeries};
use crate::vec2::Vec2;
use crate::velocity::{evaluate, Boundary, Correction, KernelParams};

pub use convergence::{run_convergence, ConvergenceConfig, ConvergenceRow};
pub use simulate::{run_from_state, run_simulation, Diagnostics, SimulationConfig, Trajectory};
pub use weak::{weak_form_residual, BumpTestFunction, TestFunction, WeakFormOptions};

/// Boundary curve with independently evolved metric and tangent.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub curve: ClosedCurve,
    pub g: Vec<f64>,
    pub tangent: Vec<Vec2>,
    pub time: f64,
}

impl FlowState {
    /// Start from a curve, taking `g` and `T` from its own derivative.
    pub fn new(curve: ClosedCurve) -> Result<Self> {
        let geo = curve.geometry()?;
        Ok(FlowState {
            curve,
            g: geo.g,
            tangent: geo.tangent,
            time: 0.0,
        })
    }

    pub fn from_parts(curve: ClosedCurve, g: Vec<f64>, tangent: Vec<Vec2>, time: f64) -> Result<Self> {
        let n = curve.n();
        if g.len() != n || tangent.len() != n {
            return Err(Error::Mismatch(format!(
                "{} nodes, {} metric values, {} tangents",
                n,
                g.len(),
                tangent.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) || tangent.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("flow state fields"));
        }
        Ok(FlowState { curve, g, tangent, time })
    }

    pub fn n(&self) -> usize {
        self.curve.n()
    }

    pub fn boundary(&self) -> Result<Boundary<'_>> {
        Boundary::new(self.curve.nodes(), &self.g, &self.tangent)
    }

    /// `max_j |g_j T_j - ∂ₓγ(x_j)|`.
    pub fn consistency_residual(&self) -> Result<f64> {
        let d = self.curve.differentiate(1)?;
        Ok(d.iter()
            .zip(&self.g)
            .zip(&self.tangent)
            .map(|((d, g), t)| (*t * *g - *d).hypot())
            .fold(0.0, f64::max))
    }

    /// `max_j ||T_j| - 1|`.
    pub fn tangent_norm_deviation(&self) -> f64 {
        self.tangent.iter().map(|t| (t.hypot() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_metric(&self) -> f64 {
        self.g.iter().copied().fold(0.0, f64::max)
    }

    /// Rigidly rotate positions and tangents about the origin.
    pub fn rotated(&self, theta: f64) -> Self {
        FlowState {
            curve: self.curve.rotated(theta),
            g: self.g.clone(),
            tangent: self.tangent.iter().map(|t| t.rotate(theta)).collect(),
            time: self.time,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScheme {
    #[default]
    Rk4,
    /// Forward Euler, kept as a first-order baseline for convergence tests.
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: TimeScheme,
    /// Reparameterize by arc length every this many steps; 0 never does.
    pub reparam_every: usize,
    /// Renormalize `T` after each step.
    pub tangent_projection: bool,
    /// Courant factor in `dt ≤ cfl·h_min/max|v|`.
    pub cfl: f64,
    /// Consistency tolerance relative to `max g`; a step fails once the
    /// residual exceeds ten times this.
    pub consistency_tol: f64,
    pub correction: Correction,
    /// Order of the exponential Fourier filter applied to `γ`, `g` and `T`
    /// after each step; 0 disables it. Without it, grid-scale modes of the
    /// independently evolved fields grow exponentially.
    pub filter_order: u32,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            scheme: TimeScheme::Rk4,
            reparam_every: 0,
            tangent_projection: true,
            cfl: 0.5,
            consistency_tol: 1e-4,
            correction: Correction::HighOrder,
            filter_order: 36,
        }
    }
}

impl StepperConfig {
    pub fn with_dt(dt: f64) -> Self {
        StepperConfig { dt, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.cfl > 0.0) {
            return Err(invalid("cfl", "must be positive"));
        }
        if !(self.consistency_tol > 0.0) {
            return Err(invalid("consistency_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Time derivative of a flow state.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub dgamma: Vec<Vec2>,
    pub dg: Vec<f64>,
    pub dtangent: Vec<Vec2>,
}

/// Right-hand side of the coupled system, using the state's own `g` and
/// `T` to weight the kernels.
pub fn rhs(state: &FlowState, params: &KernelParams) -> Result<Derivative> {
    rhs_with(state, params, Correction::default())
}

pub fn rhs_with(state: &FlowState, params: &KernelParams, correction: Correction) -> Result<Derivative> {
    let (v, dsv) = evaluate(&state.boundary()?, params, correction)?;
    let mut dg = Vec::with_capacity(v.len());
    let mut dtangent = Vec::with_capacity(v.len());
    for ((d, g), t) in dsv.iter().zip(&state.g).zip(&state.tangent) {
        let nrm = -t.perp();
        dg.push(g * d.dot(*t));
        dtangent.push(nrm * d.dot(nrm));
    }
    Ok(Derivative { dgamma: v, dg, dtangent })
}

/// Largest stable step `cfl·h_min/max|v|` for a velocity field.
pub fn cfl_limit(curve: &ClosedCurve, v: &[Vec2], cfl: f64) -> f64 {
    let vmax = v.iter().map(|v| v.hypot()).fold(0.0, f64::max);
    if vmax == 0.0 {
        f64::INFINITY
    } else {
        cfl * curve.min_spacing() / vmax
    }
}

fn axpy(state: &FlowState, k: &Derivative, h: f64) -> Result<FlowState> {
    let nodes = state.curve.nodes().iter().zip(&k.dgamma).map(|(p, v)| *p + *v * h).collect();
    Ok(FlowState {
        curve: ClosedCurve::new_unchecked(nodes, state.curve.scheme())?,
        g: state.g.iter().zip(&k.dg).map(|(g, d)| g + d * h).collect(),
        tangent: state.tangent.iter().zip(&k.dtangent).map(|(t, d)| *t + *d * h).collect(),
        time: state.time + h,
    })
}

fn combine(state: &FlowState, ks: &[&Derivative], weights: &[f64], dt: f64) -> Result<FlowState> {
    let n = state.n();
    let mut nodes = state.curve.nodes().to_vec();
    let mut g = state.g.clone();
    let mut tangent = state.tangent.clone();
    for j in 0..n {
        let mut dp = Vec2::ZERO;
        let mut dg = 0.0;
        let mut dt_ = Vec2::ZERO;
        for (k, w) in ks.iter().zip(weights) {
            dp += k.dgamma[j] * *w;
            dg += k.dg[j] * *w;
            dt_ += k.dtangent[j] * *w;
        }
        nodes[j] += dp * dt;
        g[j] += dg * dt;
        tangent[j] += dt_ * dt;
    }
    Ok(FlowState {
        curve: ClosedCurve::new_unchecked(nodes, state.curve.scheme())?,
        g,
        tangent,
        time: state.time + dt,
    })
}

/// One step of signed size `dt` (negative steps run the flow backwards).
/// Fails when `|dt|` breaks the Courant limit at the start of the step.
pub fn advance(state: &FlowState, dt: f64, stepper: &StepperConfig, params: &KernelParams) -> Result<FlowState> {
    let k1 = rhs_with(state, params, stepper.correction)?;
    let limit = cfl_limit(&state.curve, &k1.dgamma, stepper.cfl);
    if dt.abs() > limit {
        return Err(Error::Cfl { dt: dt.abs(), limit });
    }
    let mut next = match stepper.scheme {
        TimeScheme::Euler => axpy(state, &k1, dt)?,
        TimeScheme::Rk4 => {
            let k2 = rhs_with(&axpy(state, &k1, 0.5 * dt)?, params, stepper.correction)?;
            let k3 = rhs_with(&axpy(state, &k2, 0.5 * dt)?, params, stepper.correction)?;
            let k4 = rhs_with(&axpy(state, &k3, dt)?, params, stepper.correction)?;
            combine(state, &[&k1, &k2, &k3, &k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0], dt)?
        }
    };
    if stepper.filter_order > 0 {
        next = filtered(next, stepper.filter_order)?;
    }
    if stepper.tangent_projection {
        for t in next.tangent.iter_mut() {
            *t = t.normalize();
        }
    }
    Ok(next)
}

fn filtered(state: FlowState, order: u32) -> Result<FlowState> {
    let split = |v: &[Vec2]| -> Vec<Vec2> {
        let x = exponential_filter(&v.iter().map(|p| p.x).collect::<Vec<_>>(), order);
        let y = exponential_filter(&v.iter().map(|p| p.y).collect::<Vec<_>>(), order);
        x.into_iter().zip(y).map(|(x, y)| Vec2::new(x, y)).collect()
    };
    Ok(FlowState {
        curve: ClosedCurve::new_unchecked(split(state.curve.nodes()), state.curve.scheme())?,
        g: exponential_filter(&state.g, order),
        tangent: split(&state.tangent),
        time: state.time,
    })
}

/// Advance by `stepper.dt`. `step_index` counts completed steps and drives
/// the optional periodic reparameterization. Fails once the consistency
/// residual passes ten times its tolerance.
pub fn step(state: &FlowState, stepper: &StepperConfig, params: &KernelParams, step_index: usize) -> Result<FlowState> {
    stepper.validate()?;
    let mut next = advance(state, stepper.dt, stepper, params)?;
    if stepper.reparam_every > 0 && (step_index + 1).is_multiple_of(stepper.reparam_every) {
        next = reparameterize_state(&next)?;
    }
    let residual = next.consistency_residual()?;
    let limit = 10.0 * stepper.consistency_tol * next.max_metric();
    if !(residual <= limit) {
        return Err(Error::ResidualBlowup {
            residual,
            limit,
            time: next.time,
        });
    }
    Ok(next)
}

/// Move the nodes to equal arc-length spacing and carry `g` and `T` along:
/// `T` is interpolated to the new labels and renormalized, `g` becomes the
/// uniform metric `L/2π` of the new parameterization.
pub fn reparameterize_state(state: &FlowState) -> Result<FlowState> {
    let (curve, labels) = arc_length_reparameterize_with_labels(&state.curve)?;
    let tx = TrigSeries::from_samples(&state.tangent.iter().map(|t| t.x).collect::<Vec<_>>());
    let ty = TrigSeries::from_samples(&state.tangent.iter().map(|t| t.y).collect::<Vec<_>>());
    let tangent = labels.iter().map(|&x| Vec2::new(tx.eval(x), ty.eval(x)).normalize()).collect();
    let length = curve.total_length()?;
    let g = vec![length / std::f64::consts::TAU; curve.n()];
    FlowState::from_parts(curve, g, tangent, state.time)
}

/// Start a flow from a sampled curve with a chosen differentiation scheme.
pub fn initial_state(curve: &ClosedCurve, scheme: DiffScheme) -> Result<FlowState> {
    FlowState::new(curve.clone().with_scheme(scheme))
}
