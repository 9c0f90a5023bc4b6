//! Sampled closed planar curves.
//!
//! Node `j` of a curve with `N` nodes sits at Lagrangian label
//! `x_j = 2πj/N`, whatever the curve's length. Arc-length quantities always
//! go through the metric `g = |∂ₓγ|`.

mod geometry;
mod maximal;
mod norms;
mod reparam;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{fd4_derivative, spectral_derivative};
use crate::vec2::Vec2;

pub use geometry::GeometryFields;
pub use maximal::periodic_maximal_function;
pub use norms::{
    default_shifts, fit_power_law, holder_exponent, holder_seminorm, increment_sup, log_spaced_offsets, norm_report, periodic_offset,
    sobolev_seminorm, verify_arc_length_estimates, verify_arc_length_estimates_with, ArcLengthEstimates, ExponentFit, NormReport,
    ARC_LENGTH_ESTIMATE_IDS,
};
pub use reparam::{arc_length_map, arc_length_reparameterize, arc_length_reparameterize_with_labels, resample_at_labels, ArcLengthMap};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;
/// Metric values below this are treated as a degenerate parameterization.
pub const MIN_METRIC: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DiffScheme {
    /// Trigonometric interpolation of each coordinate.
    #[default]
    #[serde(rename = "spectral")]
    Spectral,
    /// Periodic centered fourth-order finite differences.
    #[serde(rename = "fd4")]
    Fd4,
}

impl DiffScheme {
    pub fn name(self) -> &'static str {
        match self {
            DiffScheme::Spectral => "spectral",
            DiffScheme::Fd4 => "fd4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spectral" => Some(DiffScheme::Spectral),
            "fd4" => Some(DiffScheme::Fd4),
            _ => None,
        }
    }
}

/// Differentiate a periodic scalar field sampled on the label grid.
pub fn differentiate_field(values: &[f64], order: u32, scheme: DiffScheme) -> Result<Vec<f64>> {
    if !(1..=2).contains(&order) {
        return Err(crate::error::invalid("order", "must be 1 or 2"));
    }
    match scheme {
        DiffScheme::Spectral => {
            if values.is_empty() {
                return Err(Error::Empty);
            }
            Ok(spectral_derivative(values, order))
        }
        DiffScheme::Fd4 => fd4_derivative(values, order),
    }
}

/// Differentiate a periodic vector field sampled on the label grid.
pub fn differentiate_vectors(values: &[Vec2], order: u32, scheme: DiffScheme) -> Result<Vec<Vec2>> {
    let xs: Vec<f64> = values.iter().map(|v| v.x).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.y).collect();
    let dx = differentiate_field(&xs, order, scheme)?;
    let dy = differentiate_field(&ys, order, scheme)?;
    Ok(dx.into_iter().zip(dy).map(|(x, y)| Vec2::new(x, y)).collect())
}

/// A simple, counterclockwise, regularly parameterized closed curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    nodes: Vec<Vec2>,
    scheme: DiffScheme,
}

impl ClosedCurve {
    /// Validate and wrap a node list: at least [`MIN_NODES`] nodes, finite,
    /// positive signed area, no self-intersection, nonvanishing metric.
    pub fn new(nodes: Vec<Vec2>, scheme: DiffScheme) -> Result<Self> {
        let curve = Self::new_unchecked(nodes, scheme)?;
        let area = curve.signed_area();
        if !(area > 0.0) {
            return Err(Error::NotCounterclockwise(area));
        }
        curve.check_simple()?;
        let d = curve.differentiate(1)?;
        for (j, v) in d.iter().enumerate() {
            let g = v.hypot();
            if !(g >= MIN_METRIC) {
                return Err(Error::DegenerateMetric { node: j, g });
            }
        }
        Ok(curve)
    }

    /// Only checks node count and finiteness. Used on intermediate stages of
    /// time stepping, where the full O(N²) validation would dominate cost.
    pub fn new_unchecked(nodes: Vec<Vec2>, scheme: DiffScheme) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::TooFewNodes {
                min: MIN_NODES,
                got: nodes.len(),
            });
        }
        if nodes.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("nodes"));
        }
        Ok(ClosedCurve { nodes, scheme })
    }

    /// Sample `f` at the labels `x_j = 2πj/n`.
    pub fn from_fn(n: usize, scheme: DiffScheme, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        let nodes = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        Self::new(nodes, scheme)
    }

    pub fn circle(n: usize, radius: f64) -> Result<Self> {
        Self::from_fn(n, DiffScheme::Spectral, |x| Vec2::from_angle(x) * radius)
    }

    pub fn ellipse(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::from_fn(n, DiffScheme::Spectral, |x| Vec2::new(a * x.cos(), b * x.sin()))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Vec2> {
        self.nodes
    }

    #[inline]
    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn with_scheme(mut self, scheme: DiffScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Label spacing `2π/N`.
    #[inline]
    pub fn label_step(&self) -> f64 {
        TAU / self.n() as f64
    }

    #[inline]
    pub fn label(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n() as f64
    }

    /// `∂ₓγ` (order 1) or `∂ₓ²γ` (order 2) at the nodes.
    pub fn differentiate(&self, order: u32) -> Result<Vec<Vec2>> {
        differentiate_vectors(&self.nodes, order, self.scheme)
    }

    pub fn geometry(&self) -> Result<GeometryFields> {
        GeometryFields::from_curve(self)
    }

    /// Metric `g_j = |∂ₓγ(x_j)|`.
    pub fn metric(&self) -> Result<Vec<f64>> {
        Ok(self.differentiate(1)?.iter().map(|d| d.hypot()).collect())
    }

    /// `L = ∫ g dx` by the trapezoid rule.
    pub fn total_length(&self) -> Result<f64> {
        let g = self.metric()?;
        Ok(self.label_step() * g.iter().sum::<f64>())
    }

    /// Shoelace area of the node polygon.
    pub fn signed_area(&self) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.nodes[j].cross(self.nodes[(j + 1) % n]);
        }
        0.5 * acc
    }

    /// Area enclosed by the interpolated curve, `½∮ γ × ∂ₓγ dx`, with the
    /// curve's differentiation scheme. Spectrally accurate for smooth curves.
    pub fn area(&self) -> Result<f64> {
        let d = self.differentiate(1)?;
        let s: f64 = self.nodes.iter().zip(&d).map(|(p, dp)| p.cross(*dp)).sum();
        Ok(0.5 * self.label_step() * s)
    }

    /// Shortest polygon edge.
    pub fn min_spacing(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|j| (self.nodes[(j + 1) % n] - self.nodes[j]).hypot())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.nodes.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
        sum / self.n() as f64
    }

    pub fn translated(&self, by: Vec2) -> Self {
        ClosedCurve {
            nodes: self.nodes.iter().map(|p| *p + by).collect(),
            scheme: self.scheme,
        }
    }

    pub fn rotated(&self, theta: f64) -> Self {
        ClosedCurve {
            nodes: self.nodes.iter().map(|p| p.rotate(theta)).collect(),
            scheme: self.scheme,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ClosedCurve {
            nodes: self.nodes.iter().map(|p| *p * factor).collect(),
            scheme: self.scheme,
        }
    }

    /// Exhaustive O(N²) segment intersection test over non-adjacent polygon
    /// edges.
    pub fn check_simple(&self) -> Result<()> {
        let n = self.n();
        let p = &self.nodes;
        for i in 0..n {
            let (a, b) = (p[i], p[(i + 1) % n]);
            let (lo_x, hi_x) = (a.x.min(b.x), a.x.max(b.x));
            let (lo_y, hi_y) = (a.y.min(b.y), a.y.max(b.y));
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (p[j], p[(j + 1) % n]);
                if c.x.max(d.x) < lo_x || c.x.min(d.x) > hi_x || c.y.max(d.y) < lo_y || c.y.min(d.y) > hi_y {
                    continue;
                }
                if segments_intersect(a, b, c, d) {
                    return Err(Error::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
