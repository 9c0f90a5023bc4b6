use serde::{Deserialize, Serialize};

use super::{ClosedCurve, MIN_METRIC};
use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Per-node metric, frame and curvature of a parameterized curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryFields {
    pub g: Vec<f64>,
    pub tangent: Vec<Vec2>,
    /// Outer unit normal, always `-tangent⊥`.
    pub normal: Vec<Vec2>,
    /// Signed curvature, positive on a counterclockwise circle.
    pub kappa: Vec<f64>,
}

impl GeometryFields {
    pub fn from_curve(curve: &ClosedCurve) -> Result<Self> {
        let d1 = curve.differentiate(1)?;
        let d2 = curve.differentiate(2)?;
        let mut g = Vec::with_capacity(d1.len());
        let mut tangent = Vec::with_capacity(d1.len());
        let mut kappa = Vec::with_capacity(d1.len());
        for (j, (a, b)) in d1.iter().zip(&d2).enumerate() {
            let gj = a.hypot();
            if !(gj >= MIN_METRIC) {
                return Err(Error::DegenerateMetric { node: j, g: gj });
            }
            g.push(gj);
            tangent.push(*a / gj);
            kappa.push(a.cross(*b) / (gj * gj * gj));
        }
        let normal = tangent.iter().map(|t| -t.perp()).collect();
        Ok(GeometryFields { g, tangent, normal, kappa })
    }

    /// Assemble from externally known metric, tangent and curvature.
    pub fn from_frame(g: Vec<f64>, tangent: Vec<Vec2>, kappa: Vec<f64>) -> Result<Self> {
        if g.len() != tangent.len() || g.len() != kappa.len() {
            return Err(Error::Mismatch(format!(
                "g {} tangent {} kappa {}",
                g.len(),
                tangent.len(),
                kappa.len()
            )));
        }
        let normal = tangent.iter().map(|t| -t.perp()).collect();
        Ok(GeometryFields { g, tangent, normal, kappa })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// `max_j |g_j - mean(g)| / mean(g)`.
    pub fn metric_deviation(&self) -> f64 {
        let mean = self.g.iter().sum::<f64>() / self.g.len() as f64;
        self.g.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max) / mean
    }
}
