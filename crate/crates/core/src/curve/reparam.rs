use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{ClosedCurve, MIN_METRIC};
use crate::error::{Error, Result};
use crate::spectral::TrigSeries;
use crate::vec2::Vec2;

/// Arc length as a function of the label, built from the trigonometric
/// interpolant of the nodes. The speed `|γ'|` is resampled on a grid twice
/// as fine as the curve before being integrated, which keeps the map
/// spectrally accurate for smooth curves.
#[derive(Clone, Debug)]
pub struct ArcLengthMap {
    xs: TrigSeries,
    ys: TrigSeries,
    speed: TrigSeries,
    fine: Vec<f64>,
    cumulative: Vec<f64>,
}

pub fn arc_length_map(curve: &ClosedCurve) -> Result<ArcLengthMap> {
    ArcLengthMap::new(curve)
}

impl ArcLengthMap {
    pub fn new(curve: &ClosedCurve) -> Result<Self> {
        let xs = TrigSeries::from_samples(&curve.nodes().iter().map(|p| p.x).collect::<Vec<_>>());
        let ys = TrigSeries::from_samples(&curve.nodes().iter().map(|p| p.y).collect::<Vec<_>>());
        let m = 2 * curve.n();
        let fine: Vec<f64> = (0..m).map(|i| TAU * i as f64 / m as f64).collect();
        let speeds: Vec<f64> = fine.par_iter().map(|&t| Vec2::new(xs.eval3(t).1, ys.eval3(t).1).hypot()).collect();
        if speeds.iter().any(|s| !(*s >= MIN_METRIC)) {
            return Err(Error::NonMonotoneArcLength);
        }
        let speed = TrigSeries::from_samples(&speeds);
        let cumulative: Vec<f64> = fine.par_iter().map(|&t| speed.integral(t)).collect();
        if cumulative.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneArcLength);
        }
        Ok(ArcLengthMap {
            xs,
            ys,
            speed,
            fine,
            cumulative,
        })
    }

    pub fn length(&self) -> f64 {
        TAU * self.speed.mean()
    }

    /// `ℓ(x) = ∫₀ˣ |γ'|`.
    pub fn arc_length(&self, x: f64) -> f64 {
        self.speed.integral(x)
    }

    pub fn speed(&self, x: f64) -> f64 {
        self.speed.eval(x)
    }

    pub fn point(&self, x: f64) -> Vec2 {
        Vec2::new(self.xs.eval(x), self.ys.eval(x))
    }

    /// Label `x` in `[0, 2π)` with `ℓ(x) = s`, for `s` in `[0, L)`.
    pub fn label_at(&self, s: f64) -> f64 {
        let m = self.fine.len();
        let i = self.cumulative.partition_point(|&c| c <= s).max(1) - 1;
        let (mut lo, mut hi) = (self.fine[i], if i + 1 < m { self.fine[i + 1] } else { TAU });
        let (c0, c1) = (self.cumulative[i], if i + 1 < m { self.cumulative[i + 1] } else { self.length() });
        let mut x = lo + (hi - lo) * (s - c0) / (c1 - c0);
        for _ in 0..60 {
            let f = self.arc_length(x) - s;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - f / self.speed(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step < 1e-15 * TAU {
                break;
            }
        }
        x
    }
}

/// Evaluate the trigonometric interpolant of the curve at arbitrary labels.
pub fn resample_at_labels(curve: &ClosedCurve, labels: &[f64]) -> Vec<Vec2> {
    let xs = TrigSeries::from_samples(&curve.nodes().iter().map(|p| p.x).collect::<Vec<_>>());
    let ys = TrigSeries::from_samples(&curve.nodes().iter().map(|p| p.y).collect::<Vec<_>>());
    labels.par_iter().map(|&t| Vec2::new(xs.eval(t), ys.eval(t))).collect()
}

/// Resample the curve at `N` nodes equally spaced in arc length, keeping
/// node 0 in place. The image is unchanged, so validation is not repeated.
pub fn arc_length_reparameterize(curve: &ClosedCurve) -> Result<ClosedCurve> {
    Ok(arc_length_reparameterize_with_labels(curve)?.0)
}

/// As [`arc_length_reparameterize`], also returning the old labels of the
/// new nodes.
pub fn arc_length_reparameterize_with_labels(curve: &ClosedCurve) -> Result<(ClosedCurve, Vec<f64>)> {
    let map = ArcLengthMap::new(curve)?;
    let n = curve.n();
    let length = map.length();
    let labels: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| if k == 0 { 0.0 } else { map.label_at(length * k as f64 / n as f64) })
        .collect();
    let mut nodes: Vec<Vec2> = labels.par_iter().map(|&t| map.point(t)).collect();
    nodes[0] = curve.nodes()[0];
    Ok((ClosedCurve::new_unchecked(nodes, curve.scheme())?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_fixed_point() {
        let c = ClosedCurve::circle(64, 1.0).unwrap();
        let r = arc_length_reparameterize(&c).unwrap();
        for (a, b) in c.nodes().iter().zip(r.nodes()) {
            assert!((*a - *b).hypot() < 1e-13);
        }
    }

    #[test]
    fn ellipse_metric_becomes_uniform() {
        let c = ClosedCurve::ellipse(256, 2.0, 1.0).unwrap();
        let r = arc_length_reparameterize(&c).unwrap();
        let geo = r.geometry().unwrap();
        assert!(geo.metric_deviation() < 1e-8, "{}", geo.metric_deviation());
        assert!((r.total_length().unwrap() - c.total_length().unwrap()).abs() < 1e-10);
        assert!((r.area().unwrap() - c.area().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn label_inverts_arc_length() {
        let c = ClosedCurve::ellipse(64, 1.5, 1.0).unwrap();
        let map = ArcLengthMap::new(&c).unwrap();
        for &s in &[0.0, 0.3, 2.0, 7.0] {
            let x = map.label_at(s);
            assert!((map.arc_length(x) - s).abs() < 1e-12);
        }
    }
}
