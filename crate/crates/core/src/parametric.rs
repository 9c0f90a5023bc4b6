//! Continuous periodic parameterizations `γ: [0, 2π) → ℝ²`, used by the
//! reference oracles and the test-curve builders.

use std::f64::consts::TAU;

use crate::curve::{ClosedCurve, DiffScheme};
use crate::error::Result;
use crate::spectral::TrigSeries;
use crate::vec2::Vec2;

pub trait ParametricCurve: Sync {
    fn point(&self, x: f64) -> Vec2;
    fn deriv(&self, x: f64) -> Vec2;
    fn deriv2(&self, x: f64) -> Vec2;

    /// `γ(x + u) - γ(x)`. Implementations should avoid cancellation for
    /// small `u`.
    fn chord(&self, x: f64, u: f64) -> Vec2 {
        self.point(x + u) - self.point(x)
    }

    fn metric(&self, x: f64) -> f64 {
        self.deriv(x).hypot()
    }

    fn tangent(&self, x: f64) -> Vec2 {
        self.deriv(x).normalize()
    }

    fn curvature(&self, x: f64) -> f64 {
        let d = self.deriv(x);
        let g = d.hypot();
        d.cross(self.deriv2(x)) / (g * g * g)
    }

    /// Sample at the labels `2πj/n`.
    fn sample(&self, n: usize, scheme: DiffScheme) -> Result<ClosedCurve> {
        ClosedCurve::from_fn(n, scheme, |x| self.point(x))
    }
}

/// Curve whose coordinates are trigonometric polynomials.
#[derive(Clone, Debug)]
pub struct TrigCurve {
    xs: TrigSeries,
    ys: TrigSeries,
}

impl TrigCurve {
    pub fn new(xs: TrigSeries, ys: TrigSeries) -> Self {
        TrigCurve { xs, ys }
    }

    /// Trigonometric interpolant of a sampled curve.
    pub fn interpolating(curve: &ClosedCurve) -> Self {
        let x: Vec<f64> = curve.nodes().iter().map(|p| p.x).collect();
        let y: Vec<f64> = curve.nodes().iter().map(|p| p.y).collect();
        TrigCurve {
            xs: TrigSeries::from_samples(&x),
            ys: TrigSeries::from_samples(&y),
        }
    }

    /// `(a cos x, b sin x)`.
    pub fn ellipse(a: f64, b: f64) -> Self {
        TrigCurve {
            xs: TrigSeries::from_coefficients(vec![0.0, a], vec![0.0, 0.0]),
            ys: TrigSeries::from_coefficients(vec![0.0, 0.0], vec![0.0, b]),
        }
    }
}

impl ParametricCurve for TrigCurve {
    fn point(&self, x: f64) -> Vec2 {
        Vec2::new(self.xs.eval(x), self.ys.eval(x))
    }

    fn deriv(&self, x: f64) -> Vec2 {
        Vec2::new(self.xs.eval3(x).1, self.ys.eval3(x).1)
    }

    fn deriv2(&self, x: f64) -> Vec2 {
        Vec2::new(self.xs.eval3(x).2, self.ys.eval3(x).2)
    }

    fn chord(&self, x: f64, u: f64) -> Vec2 {
        Vec2::new(self.xs.chord(x, u), self.ys.chord(x, u))
    }
}

/// Another curve traced through the label warp `x ↦ x + amp·sin x`, which is
/// a diffeomorphism of the circle for `|amp| < 1`.
#[derive(Clone, Debug)]
pub struct SineWarped<C> {
    pub inner: C,
    pub amp: f64,
}

impl<C> SineWarped<C> {
    pub fn new(inner: C, amp: f64) -> Self {
        SineWarped { inner, amp }
    }

    #[inline]
    pub fn warp(&self, x: f64) -> f64 {
        x + self.amp * x.sin()
    }

    #[inline]
    fn warp_increment(&self, x: f64, u: f64) -> f64 {
        u + 2.0 * self.amp * (x + 0.5 * u).cos() * (0.5 * u).sin()
    }
}

impl<C: ParametricCurve> ParametricCurve for SineWarped<C> {
    fn point(&self, x: f64) -> Vec2 {
        self.inner.point(self.warp(x))
    }

    fn deriv(&self, x: f64) -> Vec2 {
        self.inner.deriv(self.warp(x)) * (1.0 + self.amp * x.cos())
    }

    fn deriv2(&self, x: f64) -> Vec2 {
        let w1 = 1.0 + self.amp * x.cos();
        let w2 = -self.amp * x.sin();
        let y = self.warp(x);
        self.inner.deriv2(y) * (w1 * w1) + self.inner.deriv(y) * w2
    }

    fn chord(&self, x: f64, u: f64) -> Vec2 {
        self.inner.chord(self.warp(x), self.warp_increment(x, u))
    }
}

/// Wrap a label into `[0, 2π)`.
#[inline]
pub fn wrap_label(x: f64) -> f64 {
    x.rem_euclid(TAU)
}
