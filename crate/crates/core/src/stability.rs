//! Twin-flow experiments: the L² distance between two flows on a common
//! label torus, its exponential growth rate, and the kernel-difference
//! bound that drives it.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{arc_length_reparameterize, periodic_maximal_function, resample_at_labels, ClosedCurve, MIN_METRIC};
use crate::dynamics::{run_from_state, FlowState, SimulationConfig, StepperConfig, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::vec2::Vec2;
use crate::velocity::{kernel_value, KernelParams};

/// Relative slack on the fitted rate in the pointwise Gronwall check.
pub const GRONWALL_RATE_MARGIN: f64 = 0.1;

/// Squared L² distances between two flow states, trapezoid rule in the label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaComponents {
    pub gamma: f64,
    pub g: f64,
    pub tangent: f64,
}

impl DeltaComponents {
    pub fn total(&self) -> f64 {
        self.gamma + self.g + self.tangent
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// `δ = |γ₁−γ₂|² + |g₁−g₂|² + |T₁−T₂|²` in L² over `[0, 2π)`.
pub fn delta(s1: &FlowState, s2: &FlowState) -> Result<DeltaComponents> {
    let n = s1.n();
    if s2.n() != n {
        return Err(Error::Mismatch(format!("{} vs {} nodes", n, s2.n())));
    }
    if !same_time(s1.time, s2.time) {
        return Err(Error::Mismatch(format!("times {} and {}", s1.time, s2.time)));
    }
    let h = TAU / n as f64;
    let mut out = DeltaComponents::default();
    for j in 0..n {
        out.gamma += (s1.curve.nodes()[j] - s2.curve.nodes()[j]).hypot2();
        let dg = s1.g[j] - s2.g[j];
        out.g += dg * dg;
        out.tangent += (s1.tangent[j] - s2.tangent[j]).hypot2();
    }
    out.gamma *= h;
    out.g *= h;
    out.tangent *= h;
    Ok(out)
}

/// Keep every `factor`-th node. On the uniform label grid these are exactly
/// the nodes of the coarser grid, so no interpolation is involved.
pub fn subsample(state: &FlowState, factor: usize) -> Result<FlowState> {
    if factor == 0 || !state.n().is_multiple_of(factor) {
        return Err(invalid("factor", format!("must divide {}", state.n())));
    }
    let nodes = state.curve.nodes().iter().step_by(factor).copied().collect();
    FlowState::from_parts(
        ClosedCurve::new_unchecked(nodes, state.curve.scheme())?,
        state.g.iter().step_by(factor).copied().collect(),
        state.tangent.iter().step_by(factor).copied().collect(),
        state.time,
    )
}

/// δ between a flow and the same flow computed on a finer grid, compared on
/// the coarse nodes.
pub fn delta_across_resolutions(coarse: &FlowState, fine: &FlowState) -> Result<DeltaComponents> {
    if coarse.n() == 0 || !fine.n().is_multiple_of(coarse.n()) {
        return Err(Error::Mismatch(format!(
            "fine grid of {} nodes does not refine {}",
            fine.n(),
            coarse.n()
        )));
    }
    delta(coarse, &subsample(fine, fine.n() / coarse.n())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// `ε·exp((cos(x) − 1)/w²)` along the normal, `w = 0.3`.
    NormalBump,
    /// `ε·cos(3x)` along the normal.
    FourierMode,
    /// Same image, labels shifted by `ε`.
    LabelShift,
}

impl PerturbationKind {
    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::NormalBump => "normal-bump",
            PerturbationKind::FourierMode => "fourier-mode",
            PerturbationKind::LabelShift => "label-shift",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal-bump" => Some(PerturbationKind::NormalBump),
            "fourier-mode" => Some(PerturbationKind::FourierMode),
            "label-shift" => Some(PerturbationKind::LabelShift),
            _ => None,
        }
    }

    /// Whether twins of this kind share an initial parameterization class,
    /// which the Gronwall estimate assumes.
    pub fn within_hypothesis(self) -> bool {
        !matches!(self, PerturbationKind::LabelShift)
    }
}

const BUMP_WIDTH: f64 = 0.3;
const FOURIER_MODE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinConfig {
    pub perturbation_kind: PerturbationKind,
    pub perturbation_size: f64,
    pub stepper: StepperConfig,
    pub params: KernelParams,
    pub t_end: f64,
    pub emit_every: usize,
}

impl TwinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.perturbation_size >= 0.0) || !self.perturbation_size.is_finite() {
            return Err(invalid("perturbation_size", "must be finite and nonnegative"));
        }
        self.simulation().validate()
    }

    fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(self.stepper, self.t_end, self.emit_every)
    }
}

/// The two initial curves of a twin experiment. The base is first brought
/// to arc-length parameterization; normal perturbations are followed by a
/// second reparameterization so both twins start arc-length parameterized.
pub fn twin_initial_curves(base: &ClosedCurve, kind: PerturbationKind, eps: f64) -> Result<(ClosedCurve, ClosedCurve)> {
    let first = arc_length_reparameterize(base)?;
    if eps == 0.0 {
        return Ok((first.clone(), first));
    }
    let second = match kind {
        PerturbationKind::LabelShift => {
            let labels: Vec<f64> = (0..first.n()).map(|j| first.label(j) + eps).collect();
            ClosedCurve::new(resample_at_labels(&first, &labels), first.scheme())?
        }
        PerturbationKind::NormalBump | PerturbationKind::FourierMode => {
            let geo = first.geometry()?;
            let nodes = (0..first.n())
                .map(|j| {
                    let x = first.label(j);
                    let f = match kind {
                        PerturbationKind::NormalBump => ((x.cos() - 1.0) / (BUMP_WIDTH * BUMP_WIDTH)).exp(),
                        _ => (FOURIER_MODE * x).cos(),
                    };
                    first.nodes()[j] + geo.normal[j] * (eps * f)
                })
                .collect();
            arc_length_reparameterize(&ClosedCurve::new(nodes, first.scheme())?)?
        }
    };
    Ok((first, second))
}

/// Fitted exponential rate of δ(t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallFit {
    #[serde(rename = "C")]
    pub c: f64,
    pub residual: f64,
    pub holds_pointwise: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_gamma: Vec<f64>,
    pub delta_g: Vec<f64>,
    pub delta_t: Vec<f64>,
    /// Absent when δ vanishes somewhere (identical twins).
    pub fit: Option<GronwallFit>,
    pub within_hypothesis: bool,
    /// Why the report stops before `t_end`, if it does.
    pub truncated: Option<String>,
}

impl StabilityReport {
    pub fn from_components(times: Vec<f64>, comps: &[DeltaComponents]) -> Self {
        let mut r = StabilityReport {
            delta: comps.iter().map(DeltaComponents::total).collect(),
            delta_gamma: comps.iter().map(|c| c.gamma).collect(),
            delta_g: comps.iter().map(|c| c.g).collect(),
            delta_t: comps.iter().map(|c| c.tangent).collect(),
            times,
            fit: None,
            within_hypothesis: true,
            truncated: None,
        };
        if let Ok((c, residual)) = fit_gronwall_constant(&r) {
            r.fit = Some(GronwallFit {
                c,
                residual,
                holds_pointwise: gronwall_holds(&r, c),
            });
        }
        r
    }
}

/// Least-squares rate `C` in `log δ(t) ≈ log δ(0) + C t`, anchored at the
/// first sample. Returns `(C, rms residual in log units)`.
pub fn fit_gronwall_constant(report: &StabilityReport) -> Result<(f64, f64)> {
    let (t, d) = (&report.times, &report.delta);
    if t.len() != d.len() {
        return Err(Error::Mismatch(format!("{} times, {} samples", t.len(), d.len())));
    }
    if t.len() < 2 {
        return Err(Error::Underdetermined(format!("{} samples", t.len())));
    }
    if let Some(i) = d.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("delta", format!("sample {i} is {}", d[i])));
    }
    let (t0, l0) = (t[0], d[0].ln());
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (ti, di) in t.iter().zip(d).skip(1) {
        let dt = ti - t0;
        stt += dt * dt;
        sty += dt * (di.ln() - l0);
    }
    if !(stt > 0.0) {
        return Err(Error::Underdetermined("all samples at the initial time".into()));
    }
    let c = sty / stt;
    let ss: f64 = t
        .iter()
        .zip(d)
        .map(|(ti, di)| {
            let r = di.ln() - l0 - c * (ti - t0);
            r * r
        })
        .sum();
    Ok((c, (ss / t.len() as f64).sqrt()))
}

/// `δ(t) ≤ δ(0)·exp((C + 0.1|C|)(t − t₀))` at every sample.
pub fn gronwall_holds(report: &StabilityReport, c: f64) -> bool {
    let rate = c + GRONWALL_RATE_MARGIN * c.abs();
    let (t0, d0) = (report.times[0], report.delta[0]);
    report
        .times
        .iter()
        .zip(&report.delta)
        .all(|(t, d)| *d <= d0 * (rate * (t - t0)).exp() * (1.0 + 1e-12))
}

/// δ at the emissions both trajectories reached.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<StabilityReport> {
    let common = a.snapshots.len().min(b.snapshots.len());
    let mut times = Vec::with_capacity(common);
    let mut comps = Vec::with_capacity(common);
    for (s1, s2) in a.snapshots.iter().zip(&b.snapshots) {
        comps.push(delta(s1, s2)?);
        times.push(s1.time);
    }
    let mut r = StabilityReport::from_components(times, &comps);
    r.truncated = match (&a.aborted, &b.aborted) {
        (Some(e), _) => Some(format!("first twin: {e}")),
        (None, Some(e)) => Some(format!("second twin: {e}")),
        _ => None,
    };
    Ok(r)
}

/// Evolve both twins with identical settings and report δ(t).
pub fn run_twin(config: &TwinConfig, base: &ClosedCurve) -> Result<StabilityReport> {
    config.validate()?;
    let (c1, c2) = twin_initial_curves(base, config.perturbation_kind, config.perturbation_size)?;
    let sim = config.simulation();
    let (a, b) = rayon::join(
        || run_from_state(&sim, FlowState::new(c1)?, &config.params),
        || run_from_state(&sim, FlowState::new(c2)?, &config.params),
    );
    let mut report = compare_trajectories(&a?, &b?)?;
    report.within_hypothesis = config.perturbation_kind.within_hypothesis();
    Ok(report)
}

/// Largest ratio over node pairs of `|K₁(y,x) − K₂(y,x)|` to
/// `|x−y|^{-1-2α} (𝓜Δg(z) + 𝓜|ΔT|(z))`, with `z` the periodic midpoint
/// of `x` and `y` (rounded toward `x` on the grid). Kernels use each
/// state's own `g` and `T`.
pub fn kernel_difference_bound_check(s1: &FlowState, s2: &FlowState, params: &KernelParams) -> Result<f64> {
    let n = s1.n();
    if s2.n() != n {
        return Err(Error::Mismatch(format!("{} vs {} nodes", n, s2.n())));
    }
    for s in [s1, s2] {
        if let Some((node, &g)) = s.g.iter().enumerate().find(|(_, g)| !(**g >= MIN_METRIC)) {
            return Err(Error::DegenerateMetric { node, g });
        }
    }
    let dg: Vec<f64> = s1.g.iter().zip(&s2.g).map(|(a, b)| a - b).collect();
    let dt: Vec<f64> = s1.tangent.iter().zip(&s2.tangent).map(|(a, b)| (*a - *b).hypot()).collect();
    let mg = periodic_maximal_function(&dg, TAU)?;
    let mt = periodic_maximal_function(&dt, TAU)?;
    let h = TAU / n as f64;
    let alpha = params.alpha();
    let half = (n / 2) as isize;
    let kernel = |s: &FlowState, y: usize, x: usize| -> Result<f64> {
        let nodes: &[Vec2] = s.curve.nodes();
        kernel_value(s.g[y], nodes[x], nodes[y], s.tangent[x], alpha).ok_or(Error::CoincidentNodes(x.min(y), x.max(y)))
    };
    let per_target: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| -> Result<f64> {
            let mut best = 0.0f64;
            for y in 0..n {
                if y == x {
                    continue;
                }
                let mut d = y as isize - x as isize;
                if d > half {
                    d -= n as isize;
                } else if d <= -half {
                    d += n as isize;
                }
                let z = (x as isize + d / 2).rem_euclid(n as isize) as usize;
                let lhs = (kernel(s1, y, x)? - kernel(s2, y, x)?).abs();
                let rhs = (d.unsigned_abs() as f64 * h).powf(-1.0 - 2.0 * alpha) * (mg[z] + mt[z]);
                if rhs > 0.0 {
                    best = best.max(lhs / rhs);
                } else if lhs > 0.0 {
                    return Ok(f64::INFINITY);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(per_target.into_iter().fold(0.0, f64::max))
}
