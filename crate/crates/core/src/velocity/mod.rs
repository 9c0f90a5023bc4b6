//! Boundary Biot–Savart velocity of an α-patch and its arc-length
//! derivative.
//!
//! On a counterclockwise boundary `γ` with metric `g` and unit tangent `T`
//!
//! ```text
//! v(x)   = -1/(2α) ∫ T(y) g(y) |γ(x) - γ(y)|^{-2α} dy
//! ∂ₛv(x) = P.V. ∫ T(y) g(y) (γ(x) - γ(y))·T(x) |γ(x) - γ(y)|^{-2-2α} dy
//! ```
//!
//! Both are evaluated by a direct `O(N²)` sum over all node pairs: the
//! symmetric punctured trapezoid rule plus analytic corrections for the
//! singularity (see [`rule`]). One `powf` per pair serves both integrals.

mod kernel;
mod oracle;
pub mod rule;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{holder_exponent, ClosedCurve, GeometryFields};
use crate::error::{invalid, Error, Result};
use crate::vec2::Vec2;

pub use kernel::{antisymmetric_defect_profile, kernel_k, kernel_symmetry_check, kernel_value};
pub use oracle::{oracle_ds_velocity, oracle_ds_velocity_at, oracle_velocity, oracle_velocity_at};

/// Squared distance below which two nodes count as coincident.
pub(crate) const COINCIDENT_R2: f64 = 1e-24;
/// Tolerated relative metric deviation for arc-length input.
const ARC_LENGTH_TOL: f64 = 1e-6;

/// Biot–Savart exponent; the normalizing constant `c_α` is fixed to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct KernelParams {
    alpha: f64,
}

impl KernelParams {
    /// Accepts `0 < α < 1/2` only; the endpoints change the kernel's type.
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 0.5 {
            Ok(KernelParams { alpha })
        } else {
            Err(invalid("alpha", format!("{alpha} is outside (0, 1/2)")))
        }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `W^{2,p}` threshold `1/(1-2α)` above which the tangential derivative
    /// is `C^{1-1/p}`.
    pub fn critical_p(&self) -> f64 {
        1.0 / (1.0 - 2.0 * self.alpha)
    }
}

impl TryFrom<f64> for KernelParams {
    type Error = Error;
    fn try_from(a: f64) -> Result<Self> {
        KernelParams::new(a)
    }
}

impl From<KernelParams> for f64 {
    fn from(p: KernelParams) -> f64 {
        p.alpha
    }
}

/// How much of the local singular expansion the quadrature corrects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// Leading frozen-coefficient term only; error `O(h^{3-2α})`.
    FrozenCoefficient,
    /// Three terms of the even expansion; error about `O(h^{5-2α})` on
    /// smooth curves.
    #[default]
    HighOrder,
}

/// Borrowed boundary data: positions plus the metric and tangent to weight
/// the kernels with. These may come from differentiating the nodes or from
/// independently evolved fields.
#[derive(Clone, Copy, Debug)]
pub struct Boundary<'a> {
    pub nodes: &'a [Vec2],
    pub g: &'a [f64],
    pub tangent: &'a [Vec2],
}

impl<'a> Boundary<'a> {
    pub fn new(nodes: &'a [Vec2], g: &'a [f64], tangent: &'a [Vec2]) -> Result<Self> {
        let n = nodes.len();
        if g.len() != n || tangent.len() != n {
            return Err(Error::Mismatch(format!(
                "{} nodes, {} metric values, {} tangents",
                n,
                g.len(),
                tangent.len()
            )));
        }
        if n < 5 {
            return Err(Error::TooFewNodes { min: 5, got: n });
        }
        Ok(Boundary { nodes, g, tangent })
    }

    pub fn from_geometry(curve: &'a ClosedCurve, geo: &'a GeometryFields) -> Result<Self> {
        Boundary::new(curve.nodes(), &geo.g, &geo.tangent)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Velocity, its arc-length derivative and the derivative's frame
/// components at every node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVelocity {
    pub v: Vec<Vec2>,
    pub dsv: Vec<Vec2>,
    pub dsv_t: Vec<f64>,
    pub dsv_n: Vec<f64>,
}

impl BoundaryVelocity {
    fn assemble(v: Vec<Vec2>, dsv: Vec<Vec2>, tangent: &[Vec2]) -> Self {
        let dsv_t = dsv.iter().zip(tangent).map(|(d, t)| d.dot(*t)).collect();
        let dsv_n = dsv.iter().zip(tangent).map(|(d, t)| d.dot(-t.perp())).collect();
        BoundaryVelocity { v, dsv, dsv_t, dsv_n }
    }
}

/// Per-target evaluation of the corrected sums for one boundary.
struct Evaluator<'a, 'b> {
    b: &'a Boundary<'b>,
    alpha: f64,
    h: f64,
    rule: rule::Defects,
    // |σ|^{2α} and |σ|^{2+2α} at k = 1, 2 turn sampled integrands into the
    // smooth factors of the expansion
    sv: [f64; 2],
    sd: [f64; 2],
    correction: Correction,
}

impl<'a, 'b> Evaluator<'a, 'b> {
    fn new(b: &'a Boundary<'b>, params: &KernelParams, correction: Correction) -> Self {
        let n = b.len();
        let alpha = params.alpha;
        let rule = rule::Defects::new(n, alpha);
        let sv = [rule.sigma[0].powf(2.0 * alpha), rule.sigma[1].powf(2.0 * alpha)];
        Evaluator {
            b,
            alpha,
            h: std::f64::consts::TAU / n as f64,
            sd: [sv[0] * rule.c[0], sv[1] * rule.c[1]],
            sv,
            rule,
            correction,
        }
    }

    fn at(&self, i: usize) -> Result<(Vec2, Vec2)> {
        let b = self.b;
        let n = b.len();
        let neg_alpha = -self.alpha;
        let pi = b.nodes[i];
        let ti = b.tangent[i];
        let term = |j: usize| -> Result<(Vec2, Vec2)> {
            let d = pi - b.nodes[j];
            let r2 = d.hypot2();
            if !(r2 >= COINCIDENT_R2) {
                return Err(Error::CoincidentNodes(i.min(j), i.max(j)));
            }
            let p = r2.powf(neg_alpha);
            let w = b.tangent[j] * b.g[j];
            Ok((w * p, w * (d.dot(ti) * p / r2)))
        };
        let mut acc_v = Vec2::ZERO;
        let mut acc_d = Vec2::ZERO;
        let mut near_v = [Vec2::ZERO; 2];
        let mut near_d = [Vec2::ZERO; 2];
        for k in 1..=n / 2 {
            let jp = (i + k) % n;
            let jm = (i + n - k) % n;
            let (mut tv, mut td) = term(jp)?;
            if jm != jp {
                let (v2, d2) = term(jm)?;
                tv += v2;
                td += d2;
            }
            acc_v += tv;
            acc_d += td;
            if k <= 2 {
                near_v[k - 1] = tv;
                near_d[k - 1] = td;
            }
        }
        // even parts at ±h, ±2h of the smooth factors
        let (sv, sd) = (self.sv, self.sd);
        let a0 = ti * b.g[i].powf(1.0 - 2.0 * self.alpha);
        let ev = [near_v[0] * (0.5 * sv[0]) - a0, near_v[1] * (0.5 * sv[1]) - a0];
        let ed = [near_d[0] * (0.5 * sd[0]), near_d[1] * (0.5 * sd[1])];
        let [e0, e1, e2] = self.rule.e;
        let (cv, cd) = match self.correction {
            Correction::HighOrder => {
                let (a1, a2) = self.rule.fit(ev[0], ev[1]);
                let (b1, b2) = self.rule.fit(ed[0], ed[1]);
                (a0 * e0 + a1 * e1 + a2 * e2, b1 * e0 + b2 * e1)
            }
            Correction::FrozenCoefficient => (a0 * e0, ed[0] * (e0 / self.rule.c[0])),
        };
        let v = (acc_v * self.h + cv) * (-0.5 / self.alpha);
        let dsv = acc_d * self.h + cd;
        Ok((v, dsv))
    }
}

/// Evaluate `v` and `∂ₛv` at every node. Cost `O(N²)`, parallel over target
/// nodes; each target's sum runs in a fixed order, so results do not depend
/// on the thread count.
pub fn evaluate(b: &Boundary, params: &KernelParams, correction: Correction) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let ev = Evaluator::new(b, params, correction);
    let rows: Vec<Result<(Vec2, Vec2)>> = (0..b.len()).into_par_iter().with_min_len(16).map(|i| ev.at(i)).collect();
    let mut v = Vec::with_capacity(b.len());
    let mut dsv = Vec::with_capacity(b.len());
    for r in rows {
        let (a, b) = r?;
        v.push(a);
        dsv.push(b);
    }
    Ok((v, dsv))
}

/// `v` and `∂ₛv` at selected nodes only, identical to the corresponding
/// entries of [`evaluate`].
pub fn evaluate_at(b: &Boundary, params: &KernelParams, correction: Correction, targets: &[usize]) -> Result<Vec<(Vec2, Vec2)>> {
    if let Some(&t) = targets.iter().find(|&&t| t >= b.len()) {
        return Err(invalid("target", format!("node {t} out of range")));
    }
    let ev = Evaluator::new(b, params, correction);
    targets.iter().map(|&i| ev.at(i)).collect()
}

/// Boundary velocity of a curve in its own parameterization.
pub fn velocity_on_boundary(curve: &ClosedCurve, params: &KernelParams) -> Result<Vec<Vec2>> {
    Ok(boundary_velocity(curve, params)?.v)
}

/// `∂ₛv` on an arc-length parameterized curve.
pub fn ds_velocity_arclength(curve: &ClosedCurve, params: &KernelParams) -> Result<Vec<Vec2>> {
    let geo = curve.geometry()?;
    let dev = geo.metric_deviation();
    if dev > ARC_LENGTH_TOL {
        return Err(Error::NotArcLength(dev));
    }
    let b = Boundary::from_geometry(curve, &geo)?;
    Ok(evaluate(&b, params, Correction::default())?.1)
}

/// `∂ₛv` in an arbitrary regular parameterization, weighting the kernel
/// with the metric `g(y)`.
pub fn ds_velocity_lagrangian(curve: &ClosedCurve, params: &KernelParams) -> Result<Vec<Vec2>> {
    Ok(boundary_velocity(curve, params)?.dsv)
}

/// `v`, `∂ₛv` and the frame components of `∂ₛv` in one pass.
pub fn boundary_velocity(curve: &ClosedCurve, params: &KernelParams) -> Result<BoundaryVelocity> {
    let geo = curve.geometry()?;
    boundary_velocity_with(&Boundary::from_geometry(curve, &geo)?, params, Correction::default())
}

pub fn boundary_velocity_with(b: &Boundary, params: &KernelParams, correction: Correction) -> Result<BoundaryVelocity> {
    let (v, dsv) = evaluate(b, params, correction)?;
    Ok(BoundaryVelocity::assemble(v, dsv, b.tangent))
}

/// Empirical Hölder exponent of the unit tangent compared with `2α`. The
/// principal value for `∂ₛv` is only controlled when the exponent exceeds
/// `2α`; returns a warning message otherwise.
pub fn regularity_warning(curve: &ClosedCurve, params: &KernelParams) -> Result<Option<String>> {
    let geo = curve.geometry()?;
    let length = curve.total_length()?;
    let shifts = crate::curve::default_shifts(curve.n());
    let fit = holder_exponent(&geo.tangent, length, &shifts)?;
    if fit.exponent <= 2.0 * params.alpha {
        Ok(Some(format!(
            "tangent Hölder exponent {:.3} does not exceed 2α = {:.3}; ∂ₛv is not reliably resolved",
            fit.exponent,
            2.0 * params.alpha
        )))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DiffScheme;

    fn p(a: f64) -> KernelParams {
        KernelParams::new(a).unwrap()
    }

    #[test]
    fn alpha_range() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(0.5).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
        assert!((p(0.2).critical_p() - 1.0 / 0.6).abs() < 1e-15);
    }

    #[test]
    fn circle_velocity_is_tangential_and_uniform() {
        let c = ClosedCurve::circle(256, 1.0).unwrap();
        let bv = boundary_velocity(&c, &p(0.25)).unwrap();
        let geo = c.geometry().unwrap();
        let vt0 = bv.v[0].dot(geo.tangent[0]);
        for j in 0..256 {
            assert!(bv.v[j].dot(geo.normal[j]).abs() < 1e-8);
            assert!((bv.v[j].dot(geo.tangent[j]) - vt0).abs() < 1e-8);
            assert!((bv.dsv_t[j] - bv.dsv_t[0]).abs() < 1e-7);
            assert!((bv.dsv_n[j] - bv.dsv_n[0]).abs() < 1e-7);
            let back = geo.tangent[j] * bv.dsv_t[j] + geo.normal[j] * bv.dsv_n[j];
            assert!((back - bv.dsv[j]).hypot() < 1e-10);
        }
    }

    #[test]
    fn translation_invariance() {
        let c = ClosedCurve::ellipse(128, 1.5, 1.0).unwrap();
        let v0 = velocity_on_boundary(&c, &p(0.3)).unwrap();
        let v1 = velocity_on_boundary(&c.translated(Vec2::new(5.0, 7.0)), &p(0.3)).unwrap();
        for (a, b) in v0.iter().zip(&v1) {
            assert!((*a - *b).hypot() < 1e-12);
        }
    }

    #[test]
    fn coincident_nodes_rejected() {
        let mut nodes: Vec<Vec2> = (0..32).map(|j| Vec2::from_angle(j as f64 * std::f64::consts::TAU / 32.0)).collect();
        nodes[5] = nodes[4];
        let c = ClosedCurve::new_unchecked(nodes, DiffScheme::Spectral).unwrap();
        let geo = c.geometry().unwrap();
        let b = Boundary::from_geometry(&c, &geo).unwrap();
        assert_eq!(
            evaluate(&b, &p(0.2), Correction::HighOrder).unwrap_err(),
            Error::CoincidentNodes(4, 5)
        );
    }

    #[test]
    fn arclength_variant_checks_parameterization() {
        let e = ClosedCurve::ellipse(64, 2.0, 1.0).unwrap();
        assert!(matches!(ds_velocity_arclength(&e, &p(0.2)), Err(Error::NotArcLength(_))));
        let c = ClosedCurve::circle(64, 1.0).unwrap();
        let a = ds_velocity_arclength(&c, &p(0.2)).unwrap();
        let b = ds_velocity_lagrangian(&c, &p(0.2)).unwrap();
        assert_eq!(a, b);
    }
}
