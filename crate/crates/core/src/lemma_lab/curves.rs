//! Test curves of prescribed smoothness, sampled at equal arc length with
//! their geometry known in closed form.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{ClosedCurve, DiffScheme, GeometryFields};
use crate::error::{invalid, Error, Result};
use crate::parametric::{ParametricCurve, TrigCurve};
use crate::quadrature::{gk21, integrate};
use crate::vec2::Vec2;

/// Amplitude of the radial roughness in `rough_c1beta`.
pub const ROUGH_AMPLITUDE: f64 = 0.3;
/// Angular offset of the first curvature spike in `w2p_spike`.
const SPIKE_OFFSET: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `r(θ) = 1 + amp·cos(kθ)`.
    Star {
        k: u32,
        amp: f64,
    },
    /// `r(θ) = 1 + A Σ m^{-(1+β₀)} cos(mθ + φ_m)` over `m = 2, 4, 8, …, N/8`
    /// with seeded phases; the tangent is Hölder of order `β₀`.
    RoughC1Beta {
        beta0: f64,
        seed: u64,
    },
    /// Three curvature spikes `|s|^{-a}`, `a = 1/p₀ - 0.01`, so the
    /// curvature lies in `L^{p₀}` but is unbounded. Convex for
    /// `strength` below about 0.25.
    W2pSpike {
        p0: f64,
        strength: f64,
    },
}

impl CurveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::Circle { .. } => "circle",
            CurveKind::Ellipse { .. } => "ellipse",
            CurveKind::Star { .. } => "star",
            CurveKind::RoughC1Beta { .. } => "rough_c1beta",
            CurveKind::W2pSpike { .. } => "w2p_spike",
        }
    }

    /// Hölder exponent of the tangent by construction.
    pub fn nominal_beta(&self) -> f64 {
        match *self {
            CurveKind::RoughC1Beta { beta0, .. } => beta0,
            CurveKind::W2pSpike { p0, .. } => 1.0 - spike_exponent(p0),
            _ => 1.0,
        }
    }

    /// Integrability of the curvature by construction: infinite for smooth
    /// curves, absent when the curvature is not a function.
    pub fn nominal_p(&self) -> Option<f64> {
        match *self {
            CurveKind::RoughC1Beta { .. } => None,
            CurveKind::W2pSpike { p0, .. } => Some(p0),
            _ => Some(f64::INFINITY),
        }
    }
}

fn spike_exponent(p0: f64) -> f64 {
    1.0 / p0 - 0.01
}

/// A sampled curve with equally spaced arc-length labels and geometry taken
/// from the continuous description rather than from differentiating nodes.
#[derive(Clone, Debug)]
pub struct TestCurve {
    /// `None` for curves supplied as bare samples.
    pub kind: Option<CurveKind>,
    pub curve: ClosedCurve,
    pub geometry: GeometryFields,
    pub length: f64,
}

impl TestCurve {
    /// Wrap an arbitrary arc-length sampled curve, differentiating it.
    pub fn from_curve(curve: ClosedCurve) -> Result<Self> {
        let geometry = curve.geometry()?;
        let length = curve.total_length()?;
        Ok(TestCurve {
            kind: None,
            curve,
            geometry,
            length,
        })
    }

    pub fn n(&self) -> usize {
        self.curve.n()
    }

    /// Node spacing in arc length.
    pub fn spacing(&self) -> f64 {
        self.length / self.n() as f64
    }

    /// Tangent Hölder exponent: nominal when known, otherwise fitted.
    pub fn beta(&self) -> Result<f64> {
        match self.kind {
            Some(k) => Ok(k.nominal_beta()),
            None => {
                let shifts = crate::curve::default_shifts(self.n());
                Ok(crate::curve::holder_exponent(&self.geometry.tangent, self.length, &shifts)?
                    .exponent
                    .min(1.0))
            }
        }
    }

    /// The same curve on twice as many nodes: regenerated when the
    /// construction is known, trigonometric interpolation otherwise.
    pub fn refined(&self) -> Result<TestCurve> {
        let n = 2 * self.n();
        match self.kind {
            Some(k) => generate_test_curve(k, n),
            None => {
                let tc = TrigCurve::interpolating(&self.curve);
                TestCurve::from_curve(tc.sample(n, self.curve.scheme())?)
            }
        }
    }
}

/// `r(θ)·(cos θ, sin θ)` with `r = R(1 + Σ c cos(mθ + φ))`.
#[derive(Clone, Debug)]
struct PolarCurve {
    radius: f64,
    modes: Vec<(f64, f64, f64)>,
}

impl PolarCurve {
    fn radial(&self, t: f64) -> (f64, f64, f64) {
        let mut r = 1.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &(m, c, phi) in &self.modes {
            let (s, co) = (m * t + phi).sin_cos();
            r += c * co;
            d1 -= c * m * s;
            d2 -= c * m * m * co;
        }
        (self.radius * r, self.radius * d1, self.radius * d2)
    }
}

impl ParametricCurve for PolarCurve {
    fn point(&self, t: f64) -> Vec2 {
        Vec2::from_angle(t) * self.radial(t).0
    }

    fn deriv(&self, t: f64) -> Vec2 {
        let (r, d1, _) = self.radial(t);
        let e = Vec2::from_angle(t);
        e * d1 + e.perp() * r
    }

    fn deriv2(&self, t: f64) -> Vec2 {
        let (r, d1, d2) = self.radial(t);
        let e = Vec2::from_angle(t);
        e * (d2 - r) + e.perp() * (2.0 * d1)
    }
}

/// Parameter values at `n` equally spaced arc lengths, and the length.
fn arc_length_parameters<P: ParametricCurve>(p: &P, n: usize) -> Result<(Vec<f64>, f64)> {
    let panels = (4 * n).max(256);
    let w = TAU / panels as f64;
    let speed = |t: f64| p.metric(t);
    let mut cum = Vec::with_capacity(panels + 1);
    cum.push(0.0);
    for k in 0..panels {
        let (v, _) = gk21(&mut |t| speed(t), k as f64 * w, (k + 1) as f64 * w);
        cum.push(cum[k] + v);
    }
    let length = cum[panels];
    let mut params = Vec::with_capacity(n);
    for j in 0..n {
        let s = length * j as f64 / n as f64;
        let k = cum.partition_point(|&c| c <= s).saturating_sub(1).min(panels - 1);
        let (a, b) = (k as f64 * w, (k + 1) as f64 * w);
        let mut t = a + (s - cum[k]) / speed(a);
        for _ in 0..50 {
            t = t.clamp(a, b);
            let f = cum[k] + gk21(&mut |u| speed(u), a, t).0 - s;
            let step = f / speed(t);
            t -= step;
            if step.abs() <= 1e-15 * TAU {
                break;
            }
        }
        params.push(t);
    }
    Ok((params, length))
}

fn sample_parametric<P: ParametricCurve>(p: &P, n: usize, kind: CurveKind) -> Result<TestCurve> {
    let (ts, length) = arc_length_parameters(p, n)?;
    let nodes = ts.iter().map(|&t| p.point(t)).collect();
    let tangent = ts.iter().map(|&t| p.tangent(t)).collect();
    let kappa = ts.iter().map(|&t| p.curvature(t)).collect();
    let geometry = GeometryFields::from_frame(vec![length / TAU; n], tangent, kappa)?;
    let curve = ClosedCurve::new(nodes, DiffScheme::Spectral)?;
    curve.check_simple()?;
    Ok(TestCurve {
        kind: Some(kind),
        curve,
        geometry,
        length,
    })
}

/// Tangent angle `θ(s) = s + φ(s)` of the spike curve on `[0, 2π)`, with
/// `φ` of period `2π/3`, so the curve closes and turns once. Within a
/// period, `φ' = b(|t|^{-a} - K w)` where `w` is a smooth bump around the
/// period boundary that cancels the mean; for `|t| < π/3 - ρ` the angle is
/// an exact power `b·sign(t)|t|^{1-a}/(1-a)`.
#[derive(Clone, Copy, Debug)]
struct SpikeAngle {
    a: f64,
    strength: f64,
    /// Weight `K` of the compensating bump.
    weight: f64,
}

const THIRD: f64 = PI / 3.0;
/// Half-width of the compensating bump.
const BUMP_RHO: f64 = PI / 6.0;

impl SpikeAngle {
    fn new(p0: f64, strength: f64) -> Self {
        let a = spike_exponent(p0);
        // ∫_{-π/3}^{π/3} |t|^{-a} against ∫ w = 16ρ/15
        let total = 2.0 * THIRD.powf(1.0 - a) / (1.0 - a);
        SpikeAngle {
            a,
            strength,
            weight: total * 15.0 / (16.0 * BUMP_RHO),
        }
    }

    /// Offset from the nearest spike, in `[-π/3, π/3)`.
    fn local(s: f64) -> f64 {
        (s - SPIKE_OFFSET + THIRD).rem_euclid(2.0 * THIRD) - THIRD
    }

    /// Bump `(1 - (r/ρ)²)²` in the distance `r` to the period boundary, and
    /// its integral from `t = 0`.
    fn bump(t: f64) -> (f64, f64) {
        let r = THIRD - t.abs();
        if r >= BUMP_RHO {
            return (0.0, 0.0);
        }
        let q = r / BUMP_RHO;
        let antideriv = |r: f64| r - 2.0 * r.powi(3) / (3.0 * BUMP_RHO * BUMP_RHO) + r.powi(5) / (5.0 * BUMP_RHO.powi(4));
        let w = (1.0 - q * q).powi(2);
        (w, t.signum() * (8.0 * BUMP_RHO / 15.0 - antideriv(r)))
    }

    fn angle(&self, s: f64) -> f64 {
        let t = Self::local(s);
        let e = 1.0 - self.a;
        s + self.strength * (t.signum() * t.abs().powf(e) / e - self.weight * Self::bump(t).1)
    }

    fn curvature(&self, s: f64) -> f64 {
        let t = Self::local(s);
        1.0 + self.strength * (t.abs().powf(-self.a) - self.weight * Self::bump(t).0)
    }
}

fn spike_curve(p0: f64, strength: f64, n: usize, kind: CurveKind) -> Result<TestCurve> {
    if !(p0 > 1.0) || !(strength >= 0.0) {
        return Err(invalid("w2p_spike", "needs p₀ > 1 and strength ≥ 0"));
    }
    let ang = SpikeAngle::new(p0, strength);
    let h = TAU / n as f64;
    let spikes: Vec<f64> = (-3..6).map(|k| SPIKE_OFFSET + k as f64 * TAU / 3.0).collect();
    let mut nodes = Vec::with_capacity(n);
    let mut p = Vec2::ZERO;
    for j in 0..n {
        nodes.push(p);
        let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
        let mut cuts = vec![a];
        cuts.extend(spikes.iter().copied().filter(|&s| s > a && s < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let tol = 1e-14 * h;
            let x = integrate(|s| ang.angle(s).cos(), w[0], w[1], tol, 400)?;
            let y = integrate(|s| ang.angle(s).sin(), w[0], w[1], tol, 400)?;
            p += Vec2::new(x.value, y.value);
        }
    }
    if p.hypot() > 1e-10 {
        return Err(Error::Mismatch(format!("spike curve fails to close by {:e}", p.hypot())));
    }
    let centre = nodes.iter().fold(Vec2::ZERO, |acc, q| acc + *q) / n as f64;
    let nodes: Vec<Vec2> = nodes.into_iter().map(|q| q - centre).collect();
    let ss: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let tangent = ss.iter().map(|&s| Vec2::from_angle(ang.angle(s))).collect();
    let kappa = ss.iter().map(|&s| ang.curvature(s)).collect();
    let curve = ClosedCurve::new(nodes, DiffScheme::Spectral)?;
    curve.check_simple()?;
    Ok(TestCurve {
        kind: Some(kind),
        curve,
        geometry: GeometryFields::from_frame(vec![1.0; n], tangent, kappa)?,
        length: TAU,
    })
}

/// Lacunary modes `m = 2, 4, …, ≤ n/8` with seeded phases.
fn rough_modes(beta0: f64, seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    let mut m = 2usize;
    while m <= n / 8 {
        let phase = rng.gen_range(0.0..TAU);
        let mf = m as f64;
        modes.push((mf, ROUGH_AMPLITUDE * mf.powf(-1.0 - beta0), phase));
        m *= 2;
    }
    modes
}

/// Build a test curve on `n` nodes equally spaced in arc length.
pub fn generate_test_curve(kind: CurveKind, n: usize) -> Result<TestCurve> {
    match kind {
        CurveKind::Circle { radius } => {
            if !(radius > 0.0) {
                return Err(invalid("radius", "must be positive"));
            }
            let polar = PolarCurve { radius, modes: vec![] };
            sample_parametric(&polar, n, kind)
        }
        CurveKind::Ellipse { a, b } => {
            if !(a > 0.0 && b > 0.0) {
                return Err(invalid("ellipse", "semi-axes must be positive"));
            }
            sample_parametric(&TrigCurve::ellipse(a, b), n, kind)
        }
        CurveKind::Star { k, amp } => {
            if !(amp.abs() < 1.0) || k == 0 {
                return Err(invalid("star", "needs k ≥ 1 and |amp| < 1"));
            }
            let polar = PolarCurve {
                radius: 1.0,
                modes: vec![(k as f64, amp, 0.0)],
            };
            sample_parametric(&polar, n, kind)
        }
        CurveKind::RoughC1Beta { beta0, seed } => {
            if !(beta0 > 0.0 && beta0 < 1.0) {
                return Err(invalid("beta0", "must lie in (0, 1)"));
            }
            let polar = PolarCurve {
                radius: 1.0,
                modes: rough_modes(beta0, seed, n),
            };
            sample_parametric(&polar, n, kind)
        }
        CurveKind::W2pSpike { p0, strength } => spike_curve(p0, strength, n, kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_exact() {
        let tc = generate_test_curve(CurveKind::Circle { radius: 1.0 }, 64).unwrap();
        assert!((tc.length - TAU).abs() < 1e-13);
        for (j, p) in tc.curve.nodes().iter().enumerate() {
            let x = TAU * j as f64 / 64.0;
            assert!((*p - Vec2::from_angle(x)).hypot() < 1e-13);
        }
    }

    #[test]
    fn ellipse_samples_are_equally_spaced() {
        let tc = generate_test_curve(CurveKind::Ellipse { a: 2.0, b: 1.0 }, 256).unwrap();
        let geo = tc.curve.geometry().unwrap();
        assert!(geo.metric_deviation() < 1e-9, "{}", geo.metric_deviation());
        for (t, u) in geo.tangent.iter().zip(&tc.geometry.tangent) {
            assert!((*t - *u).hypot() < 1e-9);
        }
    }

    #[test]
    fn spike_curve_closes_and_is_convex() {
        let tc = generate_test_curve(CurveKind::W2pSpike { p0: 4.0, strength: 0.25 }, 512).unwrap();
        assert!(tc.geometry.kappa.iter().all(|&k| k > 0.0));
        let area = tc.curve.signed_area();
        assert!(area > 1.0 && area < PI, "{area}");
    }

    #[test]
    fn rough_curve_is_seeded() {
        let k = CurveKind::RoughC1Beta { beta0: 0.5, seed: 7 };
        let a = generate_test_curve(k, 256).unwrap();
        let b = generate_test_curve(k, 256).unwrap();
        assert_eq!(a.curve, b.curve);
        let c = generate_test_curve(CurveKind::RoughC1Beta { beta0: 0.5, seed: 8 }, 256).unwrap();
        assert_ne!(a.curve, c.curve);
    }
}
