//! Adaptive-quadrature reference values for the boundary integrals.
//!
//! The integrand is folded about the target, `F(u) + F(-u)` on `(0, π]`,
//! which cancels the odd principal-value part analytically. The remaining
//! `u^{-2α}` singularity is removed by the substitution `u = t^{1/(1-2α)}`
//! down to a cutoff `ε`. Below it the folded integrand, which is
//! `u^{-2α}` times an even smooth function, is replaced by the first two
//! terms `u^{-2α}(b₀ + b₁u²)` fitted at `ε` and `2ε` and integrated
//! exactly; the neglected part is `O(ε^{5-2α})`.

use std::f64::consts::PI;

use super::KernelParams;
use crate::curve::ClosedCurve;
use crate::error::Result;
use crate::parametric::{ParametricCurve, TrigCurve};
use crate::quadrature::integrate;
use crate::vec2::Vec2;

const CUTOFF: f64 = 1e-3;
const MAX_PANELS: usize = 200_000;

fn folded_integral(fold: impl Fn(f64) -> f64, alpha: f64, tol: f64) -> Result<f64> {
    let r = 1.0 / (1.0 - 2.0 * alpha);
    let e = CUTOFF;
    let y1 = fold(e) * e.powf(2.0 * alpha);
    let y2 = fold(2.0 * e) * (2.0 * e).powf(2.0 * alpha);
    let b1 = (y2 - y1) / (3.0 * e * e);
    let b0 = y1 - b1 * e * e;
    let tail = b0 * e.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha) + b1 * e.powf(3.0 - 2.0 * alpha) / (3.0 - 2.0 * alpha);
    let (t0, t1) = (CUTOFF.powf(1.0 / r), PI.powf(1.0 / r));
    let main = integrate(|t| fold(t.powf(r)) * r * t.powf(r - 1.0), t0, t1, tol, MAX_PANELS)?;
    Ok(main.value + tail)
}

fn vector_integral(f: impl Fn(f64) -> Vec2, alpha: f64, tol: f64) -> Result<Vec2> {
    let x = folded_integral(|u| f(u).x + f(-u).x, alpha, tol)?;
    let y = folded_integral(|u| f(u).y + f(-u).y, alpha, tol)?;
    Ok(Vec2::new(x, y))
}

/// Reference `v` at label `x` of a continuous curve, to absolute
/// tolerance about `tol` per component.
pub fn oracle_velocity_at<C: ParametricCurve + ?Sized>(curve: &C, x: f64, params: &KernelParams, tol: f64) -> Result<Vec2> {
    let alpha = params.alpha();
    let f = |u: f64| curve.deriv(x + u) * curve.chord(x, u).hypot2().powf(-alpha);
    Ok(vector_integral(f, alpha, tol)? * (-0.5 / alpha))
}

/// Reference `∂ₛv` at label `x`, the principal value taken symmetrically
/// in the label.
pub fn oracle_ds_velocity_at<C: ParametricCurve + ?Sized>(curve: &C, x: f64, params: &KernelParams, tol: f64) -> Result<Vec2> {
    let alpha = params.alpha();
    let tx = curve.tangent(x);
    let f = |u: f64| {
        let d = -curve.chord(x, u);
        curve.deriv(x + u) * (d.dot(tx) * d.hypot2().powf(-1.0 - alpha))
    };
    vector_integral(f, alpha, tol)
}

/// Reference `v` at a node of a sampled curve, integrating its
/// trigonometric interpolant.
pub fn oracle_velocity(curve: &ClosedCurve, params: &KernelParams, node: usize, tol: f64) -> Result<Vec2> {
    oracle_velocity_at(&TrigCurve::interpolating(curve), curve.label(node), params, tol)
}

/// Reference `∂ₛv` at a node of a sampled curve.
pub fn oracle_ds_velocity(curve: &ClosedCurve, params: &KernelParams, node: usize, tol: f64) -> Result<Vec2> {
    oracle_ds_velocity_at(&TrigCurve::interpolating(curve), curve.label(node), params, tol)
}
