//! Defect of the weak (distributional) transport identity along a computed
//! trajectory:
//!
//! ```text
//! ∫_{Ω₀} φ(·,0) dx + ∫₀^T ∫_{Ω_t} (∂ₜφ + v·∇φ) dx dt = 0.
//! ```
//!
//! Area integrals use a fan of triangles from the node centroid (so the
//! patch should be star-shaped about it), each with a collapsed
//! Gauss–Legendre rule graded toward the boundary. Interior velocities
//! are direct sums of the boundary integral over a trigonometrically
//! upsampled boundary. Time integrals use the trapezoid rule over the
//! snapshots.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{FlowState, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral::TrigSeries;
use crate::vec2::Vec2;
use crate::velocity::KernelParams;

/// Space-time test function that vanishes for `t ≥ time_cutoff()`.
pub trait TestFunction: Sync {
    fn value(&self, x: Vec2, t: f64) -> f64;
    fn time_derivative(&self, x: Vec2, t: f64) -> f64;
    fn gradient(&self, x: Vec2, t: f64) -> Vec2;
    fn time_cutoff(&self) -> f64;
    /// A disc containing the spatial support, if bounded.
    fn spatial_support(&self) -> Option<(Vec2, f64)> {
        None
    }
}

/// `φ(x,t) = (1 - |x-c|²/w²)⁴ · χ(t)` with the cutoff
/// `χ(t) = 1 - t/t_b + sin(2πt/t_b)/2π` on `[0, t_b]` and zero after. `χ'`
/// is a single cosine period, so uniform trapezoid sums integrate it
/// exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpTestFunction {
    pub center: Vec2,
    pub radius: f64,
    pub t_cut: f64,
}

impl BumpTestFunction {
    pub fn new(center: Vec2, radius: f64, t_cut: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        if !(t_cut > 0.0) {
            return Err(invalid("t_cut", "must be positive"));
        }
        Ok(BumpTestFunction { center, radius, t_cut })
    }

    fn chi(&self, t: f64) -> f64 {
        if t >= self.t_cut {
            return 0.0;
        }
        let u = t / self.t_cut;
        1.0 - u + (TAU * u).sin() / TAU
    }

    fn chi_dot(&self, t: f64) -> f64 {
        if t >= self.t_cut {
            return 0.0;
        }
        -(1.0 - (TAU * t / self.t_cut).cos()) / self.t_cut
    }

    fn base(&self, x: Vec2) -> f64 {
        let q = 1.0 - (x - self.center).hypot2() / (self.radius * self.radius);
        if q > 0.0 {
            q
        } else {
            0.0
        }
    }
}

impl TestFunction for BumpTestFunction {
    fn value(&self, x: Vec2, t: f64) -> f64 {
        self.base(x).powi(4) * self.chi(t)
    }

    fn time_derivative(&self, x: Vec2, t: f64) -> f64 {
        self.base(x).powi(4) * self.chi_dot(t)
    }

    fn gradient(&self, x: Vec2, t: f64) -> Vec2 {
        let q = self.base(x);
        (x - self.center) * (-8.0 * q.powi(3) / (self.radius * self.radius) * self.chi(t))
    }

    fn time_cutoff(&self) -> f64 {
        self.t_cut
    }

    fn spatial_support(&self) -> Option<(Vec2, f64)> {
        Some((self.center, self.radius))
    }
}

/// Quadrature resolution for [`weak_form_residual`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeakFormOptions {
    /// Boundary upsampling factor for interior velocity sums.
    pub upsample: usize,
    /// Radial panel breakpoints in `[0, 1]`, graded toward the boundary.
    pub radial_panels: Vec<f64>,
    pub radial_points: usize,
    pub tangential_points: usize,
}

impl Default for WeakFormOptions {
    fn default() -> Self {
        WeakFormOptions {
            upsample: 4,
            radial_panels: vec![0.0, 0.5, 0.8, 0.95, 1.0],
            radial_points: 4,
            tangential_points: 2,
        }
    }
}

struct FanRule {
    rho: Vec<(f64, f64)>,
    tau: Vec<(f64, f64)>,
}

impl FanRule {
    fn new(opts: &WeakFormOptions) -> Self {
        let (xr, wr) = gauss_legendre(opts.radial_points);
        let mut rho = Vec::new();
        for w in opts.radial_panels.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, wt) in xr.iter().zip(&wr) {
                rho.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * wt));
            }
        }
        let (xt, wt) = gauss_legendre(opts.tangential_points);
        let tau = xt.iter().zip(&wt).map(|(x, w)| (0.5 + 0.5 * x, 0.5 * w)).collect();
        FanRule { rho, tau }
    }

    /// `∫_Ω f` over the polygon, `f` evaluated only where `keep` holds.
    fn integrate(&self, nodes: &[Vec2], keep: impl Fn(Vec2) -> bool + Sync, f: impl Fn(Vec2) -> f64 + Sync) -> f64 {
        let n = nodes.len();
        let c = nodes.iter().fold(Vec2::ZERO, |a, p| a + *p) / n as f64;
        let parts: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let a = nodes[j] - c;
                let e = nodes[(j + 1) % n] - nodes[j];
                let jac = a.cross(e).abs();
                let mut s = 0.0;
                for &(r, wr) in &self.rho {
                    for &(t, wt) in &self.tau {
                        let x = c + (a + e * t) * r;
                        if keep(x) {
                            s += f(x) * wr * wt * r * jac;
                        }
                    }
                }
                s
            })
            .collect();
        parts.iter().sum()
    }
}

/// Boundary sampled densely enough for off-boundary velocity sums.
struct DenseBoundary {
    points: Vec<Vec2>,
    weighted_tangent: Vec<Vec2>,
}

impl DenseBoundary {
    fn new(state: &FlowState, upsample: usize) -> Self {
        let xs = TrigSeries::from_samples(&state.curve.nodes().iter().map(|p| p.x).collect::<Vec<_>>());
        let ys = TrigSeries::from_samples(&state.curve.nodes().iter().map(|p| p.y).collect::<Vec<_>>());
        let m = upsample.max(1) * state.n();
        let (points, weighted_tangent) = (0..m)
            .into_par_iter()
            .map(|i| {
                let t = TAU * i as f64 / m as f64;
                let (x, dx, _) = xs.eval3(t);
                let (y, dy, _) = ys.eval3(t);
                (Vec2::new(x, y), Vec2::new(dx, dy))
            })
            .unzip();
        DenseBoundary { points, weighted_tangent }
    }

    /// `-1/(2α) ∫ γ'(y) |x - γ(y)|^{-2α} dy` at an interior point.
    fn velocity(&self, x: Vec2, alpha: f64) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for (p, w) in self.points.iter().zip(&self.weighted_tangent) {
            acc += *w * (x - *p).hypot2().powf(-alpha);
        }
        acc * (-(TAU / self.points.len() as f64) * 0.5 / alpha)
    }
}

/// `|∫_{Ω₀} φ(·,t₀) + ∫∫ (∂ₜφ + v·∇φ)|` over the trajectory's snapshots.
pub fn weak_form_residual(trajectory: &Trajectory, phi: &impl TestFunction, params: &KernelParams, opts: &WeakFormOptions) -> Result<f64> {
    let snaps = &trajectory.snapshots;
    let first = snaps.first().ok_or(Error::Empty)?;
    let t0 = first.time;
    let t_cut = phi.time_cutoff();
    let t_last = snaps.last().map(|s| s.time).unwrap_or(t0);
    if t_cut > t_last + 1e-12 || t_cut <= t0 {
        return Err(Error::SupportOutsideWindow(t0, t_cut));
    }
    let rule = FanRule::new(opts);
    let support = phi.spatial_support();
    let keep = move |x: Vec2| match support {
        Some((c, r)) => (x - c).hypot2() < r * r,
        None => true,
    };
    let alpha = params.alpha();

    let initial = rule.integrate(first.curve.nodes(), keep, |x| phi.value(x, t0));
    let mut values = Vec::with_capacity(snaps.len());
    for s in snaps {
        if s.time >= t_cut {
            values.push(0.0);
            continue;
        }
        let dense = DenseBoundary::new(s, opts.upsample);
        let t = s.time;
        values.push(rule.integrate(s.curve.nodes(), keep, |x| {
            phi.time_derivative(x, t) + dense.velocity(x, alpha).dot(phi.gradient(x, t))
        }));
    }
    let mut flux = 0.0;
    for i in 1..snaps.len() {
        flux += 0.5 * (snaps[i].time - snaps[i - 1].time) * (values[i] + values[i - 1]);
    }
    Ok((initial + flux).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ClosedCurve;

    #[test]
    fn bump_cutoff_values() {
        let b = BumpTestFunction::new(Vec2::ZERO, 1.0, 2.0).unwrap();
        assert_eq!(b.chi(0.0), 1.0);
        assert!(b.chi(2.0 - 1e-12).abs() < 1e-11);
        assert_eq!(b.value(Vec2::new(1.5, 0.0), 0.0), 0.0);
        // gradient against a central difference
        let x = Vec2::new(0.3, -0.2);
        let hh = 1e-6;
        let fd = (b.value(x + Vec2::new(hh, 0.0), 0.5) - b.value(x - Vec2::new(hh, 0.0), 0.5)) / (2.0 * hh);
        assert!((b.gradient(x, 0.5).x - fd).abs() < 1e-8);
        let ft = (b.value(x, 0.5 + hh) - b.value(x, 0.5 - hh)) / (2.0 * hh);
        assert!((b.time_derivative(x, 0.5) - ft).abs() < 1e-8);
    }

    #[test]
    fn fan_rule_area() {
        let c = ClosedCurve::circle(64, 1.0).unwrap();
        let rule = FanRule::new(&WeakFormOptions::default());
        let a = rule.integrate(c.nodes(), |_| true, |_| 1.0);
        assert!((a - c.signed_area()).abs() < 1e-12);
    }
}
