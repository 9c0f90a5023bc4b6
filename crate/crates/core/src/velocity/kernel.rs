use rayon::prelude::*;

use super::{KernelParams, COINCIDENT_R2};
use crate::curve::{ClosedCurve, GeometryFields};
use crate::error::{invalid, Error, Result};
use crate::vec2::Vec2;

/// `K(y, x) = g(y) (γ(x) - γ(y))·T(x) / |γ(x) - γ(y)|^{2+2α}`.
#[inline]
pub fn kernel_value(g_y: f64, gamma_x: Vec2, gamma_y: Vec2, tangent_x: Vec2, alpha: f64) -> Option<f64> {
    let d = gamma_x - gamma_y;
    let r2 = d.hypot2();
    if !(r2 >= COINCIDENT_R2) {
        return None;
    }
    Some(g_y * d.dot(tangent_x) * r2.powf(-1.0 - alpha))
}

/// Kernel between nodes `y` and `x` of a curve with the given geometry.
pub fn kernel_k(nodes: &[Vec2], geo: &GeometryFields, y: usize, x: usize, params: &KernelParams) -> Result<f64> {
    if x == y {
        return Err(Error::CoincidentNodes(x, y));
    }
    kernel_value(geo.g[y], nodes[x], nodes[y], geo.tangent[x], params.alpha()).ok_or(Error::CoincidentNodes(x.min(y), x.max(y)))
}

/// For each index offset `k = 1, …, N/2`: the arc distance `k·L/N` and
/// `max_i |K(i+k, i) + K(i, i+k)|`.
pub fn antisymmetric_defect_profile(curve: &ClosedCurve, params: &KernelParams) -> Result<Vec<(f64, f64)>> {
    let geo = curve.geometry()?;
    let n = curve.n();
    let length = curve.total_length()?;
    let h = length / n as f64;
    let nodes = curve.nodes();
    (1..=n / 2)
        .into_par_iter()
        .map(|k| {
            let mut sup = 0.0f64;
            for i in 0..n {
                let j = (i + k) % n;
                let a = kernel_k(nodes, &geo, j, i, params)?;
                let b = kernel_k(nodes, &geo, i, j, params)?;
                sup = sup.max((a + b).abs());
            }
            Ok((k as f64 * h, sup))
        })
        .collect()
}

/// `sup |K(y,x) + K(x,y)| · d(x,y)^{1-β+2α}` over distinct node pairs,
/// with `d` the periodic arc distance. Finite and stable under refinement
/// when the curve is `C^{1,β}`.
pub fn kernel_symmetry_check(curve: &ClosedCurve, params: &KernelParams, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", "must be positive"));
    }
    let expo = 1.0 - beta + 2.0 * params.alpha();
    let profile = antisymmetric_defect_profile(curve, params)?;
    Ok(profile.iter().map(|(d, s)| s * d.powf(expo)).fold(0.0, f64::max))
}
