//! Corrected trapezoid rule for periodic integrands with an algebraic
//! singularity at the target node.
//!
//! With `σ(u) = 2 sin(u/2)` every integrand is written as `|σ|^q · A(u)`
//! with `A` smooth. The odd part of `A` drops out of the symmetric punctured
//! sum and of the principal value alike. The even part expands in powers of
//! `σ²`, and each power contributes a known defect
//! `E(q) = ∫|σ|^q − h Σ_{k≠0} |σ(kh)|^q`, which is added back.

use std::f64::consts::TAU;

use statrs::function::gamma::gamma;

/// `∫₀^{2π} |2 sin(u/2)|^q du` for `q > -1`.
pub fn sine_power_integral(q: f64) -> f64 {
    TAU * gamma(q + 1.0) / gamma(0.5 * q + 1.0).powi(2)
}

/// Defect of the punctured trapezoid rule on `|σ|^q` with `n` nodes.
pub fn punctured_defect(q: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    // Neumaier summation; the terms vary over orders of magnitude
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in 1..n {
        let t = (2.0 * (0.5 * k as f64 * h).sin()).abs().powf(q);
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sine_power_integral(q) - h * (sum + comp)
}

/// Precomputed defects for one node count and exponent.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Defects {
    /// `E(-2α)`, `E(2-2α)`, `E(4-2α)`.
    pub e: [f64; 3],
    /// `σ(kh)²` for `k = 1, 2`.
    pub c: [f64; 2],
    /// `|σ(kh)|` for `k = 1, 2`.
    pub sigma: [f64; 2],
}

impl Defects {
    pub fn new(n: usize, alpha: f64) -> Self {
        let h = TAU / n as f64;
        let q = -2.0 * alpha;
        let sigma = [2.0 * (0.5 * h).sin(), 2.0 * h.sin()];
        Defects {
            e: [punctured_defect(q, n), punctured_defect(q + 2.0, n), punctured_defect(q + 4.0, n)],
            c: [sigma[0] * sigma[0], sigma[1] * sigma[1]],
            sigma,
        }
    }

    /// Coefficients `(a1, a2)` of `e(u) ≈ a1 σ² + a2 σ⁴` from its values at
    /// `h` and `2h`.
    #[inline]
    pub fn fit<T>(&self, e1: T, e2: T) -> (T, T)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
    {
        let [c1, c2] = self.c;
        let det = c1 * c2 * (c2 - c1);
        let a1 = (e1 * (c2 * c2) - e2 * (c1 * c1)) * (1.0 / det);
        let a2 = (e2 * c1 - e1 * c2) * (1.0 / det);
        (a1, a2)
    }
}

/// Corrected punctured trapezoid rule for scalar principal values
/// `PV ∫ f(u) du` whose integrand behaves like `|σ|^{-2-2α}` times a smooth
/// factor with vanishing even part at the target.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PvRule {
    defects: Defects,
    weights: [f64; 2],
    n: usize,
}

/// Pair sums `f(kh) + f(-kh)` for `k = 1, …, N/2` around one target, and
/// the singular correction.
#[derive(Clone, Debug)]
pub(crate) struct PvRow {
    pub pairs: Vec<f64>,
    pub correction: f64,
    pub h: f64,
}

impl PvRow {
    /// Trapezoid part over offsets `lo ≤ k ≤ hi`.
    pub fn partial(&self, lo: usize, hi: usize) -> f64 {
        let (lo, hi) = (lo.max(1), hi.min(self.pairs.len()));
        if lo > hi {
            return 0.0;
        }
        self.pairs[lo - 1..hi].iter().sum::<f64>() * self.h
    }

    pub fn value(&self) -> f64 {
        self.partial(1, self.pairs.len()) + self.correction
    }
}

impl PvRule {
    pub fn new(n: usize, alpha: f64) -> Self {
        let defects = Defects::new(n, alpha);
        let q = 2.0 + 2.0 * alpha;
        PvRule {
            weights: [defects.sigma[0].powf(q), defects.sigma[1].powf(q)],
            defects,
            n,
        }
    }

    pub fn row<E>(&self, target: usize, mut f: impl FnMut(usize) -> std::result::Result<f64, E>) -> std::result::Result<PvRow, E> {
        let n = self.n;
        let mut pairs = Vec::with_capacity(n / 2);
        for k in 1..=n / 2 {
            let jp = (target + k) % n;
            let jm = (target + n - k) % n;
            let mut t = f(jp)?;
            if jm != jp {
                t += f(jm)?;
            }
            pairs.push(t);
        }
        let ed = [0.5 * pairs[0] * self.weights[0], 0.5 * pairs[1] * self.weights[1]];
        let (b1, b2) = self.defects.fit(ed[0], ed[1]);
        Ok(PvRow {
            pairs,
            correction: b1 * self.defects.e[0] + b2 * self.defects.e[1],
            h: TAU / n as f64,
        })
    }
}
