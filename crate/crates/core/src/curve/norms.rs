use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{periodic_maximal_function, ClosedCurve, GeometryFields};
use crate::error::{invalid, Error, Result};
use crate::vec2::{FieldValue, Vec2};

/// Index distance on a periodic grid of `n` nodes.
#[inline]
pub fn periodic_offset(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// Empirical Hölder seminorm `sup |f_i - f_j| / d_ij^β`, with `d_ij` the
/// periodic arc-length distance on a uniform grid over one period of length
/// `length`. Exhaustive over pairs, hence a lower bound for the continuum
/// seminorm.
pub fn holder_seminorm<F: FieldValue>(samples: &[F], length: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", "must lie in (0, 1]"));
    }
    if !(length > 0.0) {
        return Err(invalid("length", "must be positive"));
    }
    let n = samples.len();
    let h = length / n as f64;
    // quotients only depend on the offset, so sweep offsets
    let sup = (1..=n / 2)
        .into_par_iter()
        .map(|k| increment_sup(samples, k) / (k as f64 * h).powf(beta))
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// `max_j |f_{j+k} - f_j|` over the periodic grid.
pub fn increment_sup<F: FieldValue>(samples: &[F], k: usize) -> f64 {
    let n = samples.len();
    (0..n).map(|j| samples[(j + k) % n].distance(samples[j])).fold(0.0, f64::max)
}

/// Least-squares power law `y ≈ C·x^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub log_constant: f64,
    /// RMS deviation of the fit in natural-log units.
    pub residual: f64,
    /// The data were at rounding level; the exponent is reported as 1.
    pub saturated: bool,
}

impl ExponentFit {
    pub fn constant(&self) -> f64 {
        self.log_constant.exp()
    }
}

/// Fit `log y = c + e·log x` by least squares.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::Mismatch(format!("{} abscissae, {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Underdetermined(format!("{} points", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("samples", "power-law fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&lx, &ly)?;
    Ok(ExponentFit {
        exponent: slope,
        log_constant: intercept,
        residual,
        saturated: false,
    })
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(b, a, rms residual)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Underdetermined("abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

/// Empirical Hölder exponent of a periodic field: power-law fit of the
/// increment sup `max_j |f(s_j + k h) - f(s_j)|` against `k h` over the
/// supplied shifts. A field whose increments sit at rounding level is
/// reported with exponent 1 and `saturated` set.
pub fn holder_exponent<F: FieldValue>(samples: &[F], length: f64, shifts: &[usize]) -> Result<ExponentFit> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let h = length / n as f64;
    let scale = samples.iter().map(|v| v.magnitude()).fold(0.0, f64::max).max(1.0);
    let incs: Vec<f64> = shifts.iter().map(|&k| increment_sup(samples, k)).collect();
    if incs.iter().all(|&v| v <= 1e-12 * scale) {
        return Ok(ExponentFit {
            exponent: 1.0,
            log_constant: f64::NEG_INFINITY,
            residual: 0.0,
            saturated: true,
        });
    }
    let xs: Vec<f64> = shifts.iter().map(|&k| k as f64 * h).collect();
    fit_power_law(&xs, &incs)
}

/// Default shift set: 12 log-spaced offsets from `8h` to `L/16`.
pub fn default_shifts(n: usize) -> Vec<usize> {
    log_spaced_offsets(8, (n / 16).max(9), 12)
}

/// Distinct integers log-spaced between `lo` and `hi`.
pub fn log_spaced_offsets(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            (a + t * (b - a)).exp().round() as usize
        })
        .collect();
    out.dedup();
    out
}

/// Discrete `L^p` norm of a field along arc length, `(Σ |f|^p g h)^{1/p}`;
/// `p = ∞` gives the max.
pub fn sobolev_seminorm(values: &[f64], g: &[f64], p: f64) -> Result<f64> {
    if values.len() != g.len() {
        return Err(Error::Mismatch("field and metric lengths differ".into()));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", "must be at least 1"));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let h = std::f64::consts::TAU / values.len() as f64;
    let s: f64 = values.iter().zip(g).map(|(v, g)| v.abs().powf(p) * g * h).sum();
    Ok(s.powf(1.0 / p))
}

/// Regularity summary of a curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub holder_exponent: f64,
    pub holder_seminorm: f64,
    pub sobolev_p: f64,
    pub sobolev_seminorm: f64,
}

/// Hölder exponent and seminorm of the unit tangent and `L^p` norm of the
/// curvature.
pub fn norm_report(curve: &ClosedCurve, p: f64) -> Result<NormReport> {
    let geo = curve.geometry()?;
    let length = curve.total_length()?;
    let fit = holder_exponent(&geo.tangent, length, &default_shifts(curve.n()))?;
    let beta = fit.exponent.clamp(1e-3, 1.0);
    Ok(NormReport {
        holder_exponent: beta,
        holder_seminorm: holder_seminorm(&geo.tangent, length, beta)?,
        sobolev_p: p,
        sobolev_seminorm: sobolev_seminorm(&geo.kappa, &geo.g, p)?,
    })
}

/// Labels of the nine arc-length estimates, first the five plain bounds then
/// the four maximal-function bounds.
pub const ARC_LENGTH_ESTIMATE_IDS: [&str; 9] = ["2.2a", "2.2b", "2.2c", "2.2d", "2.2e", "2.3a", "2.3b", "2.3c", "2.3d"];

/// Empirical constants `sup LHS/RHS` of the arc-length estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcLengthEstimates {
    pub beta: f64,
    /// Same order as [`ARC_LENGTH_ESTIMATE_IDS`].
    pub constants: [f64; 9],
}

impl ArcLengthEstimates {
    pub fn get(&self, id: &str) -> Option<f64> {
        ARC_LENGTH_ESTIMATE_IDS.iter().position(|k| *k == id).map(|i| self.constants[i])
    }
}

/// Tolerated relative metric deviation for "arc-length parameterized".
const ARC_LENGTH_TOL: f64 = 1e-6;

/// Check the arc-length estimates on a curve of class `W^{2,p}`, with
/// `β = 1 - 1/p`, using geometry from the curve's differentiation scheme.
pub fn verify_arc_length_estimates(curve: &ClosedCurve, p: f64) -> Result<ArcLengthEstimates> {
    let geo = curve.geometry()?;
    verify_arc_length_estimates_with(curve, &geo, p)
}

/// As [`verify_arc_length_estimates`] with externally supplied geometry.
pub fn verify_arc_length_estimates_with(curve: &ClosedCurve, geo: &GeometryFields, p: f64) -> Result<ArcLengthEstimates> {
    if !(p > 1.0) {
        return Err(invalid("p", "must exceed 1"));
    }
    let dev = geo.metric_deviation();
    if dev > ARC_LENGTH_TOL {
        return Err(Error::NotArcLength(dev));
    }
    let beta = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let n = curve.n();
    let length = geo.g.iter().sum::<f64>() * curve.label_step();
    let h = length / n as f64;
    let mk = periodic_maximal_function(&geo.kappa, length)?;
    let nodes = curve.nodes();
    let (t, nr) = (&geo.tangent, &geo.normal);

    let constants = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut c = [0.0f64; 9];
            for j in 0..n {
                if i == j {
                    continue;
                }
                // signed s - s' wrapped into (-L/2, L/2]
                let mut k = i as isize - j as isize;
                let half = (n / 2) as isize;
                if k > half {
                    k -= n as isize;
                } else if k <= -half {
                    k += n as isize;
                }
                let ds = k as f64 * h;
                let d = ds.abs();
                let chord: Vec2 = nodes[i] - nodes[j];
                let dt = t[i] - t[j];
                let m = mk[i];
                let vals = [
                    (t[i].dot(t[j]) - 1.0).abs() / d.powf(2.0 * beta),
                    chord.dot(nr[i]).abs() / d.powf(1.0 + beta),
                    dt.dot(t[i]).abs() / d.powf(2.0 * beta),
                    (d / chord.hypot() - 1.0).abs() / d.powf(2.0 * beta),
                    (chord.dot(t[i]) - ds).abs() / d.powf(1.0 + 2.0 * beta),
                    t[j].dot(nr[i]).abs() / (m * d),
                    chord.dot(nr[i]).abs() / (m * d * d),
                    t[i].dot(dt).abs() / (m * d.powf(1.0 + beta)),
                    chord.dot(dt).abs() / (m * d.powf(2.0 + beta)),
                ];
                for (a, b) in c.iter_mut().zip(vals) {
                    *a = a.max(b);
                }
            }
            c
        })
        .reduce(
            || [0.0; 9],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        );
    Ok(ArcLengthEstimates { beta, constants })
}
