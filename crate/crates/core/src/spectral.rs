//! Periodic differentiation and trigonometric interpolation on the uniform
//! label grid `x_j = 2πj/N`.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Signed wavenumber of FFT bin `i`.
#[inline]
fn wavenumber(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Derivative of a periodic real field on `[0, 2π)` through the discrete
/// Fourier transform. The Nyquist mode is dropped for odd orders.
pub fn spectral_derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    let (fwd, inv) = plans(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let k = wavenumber(i, n);
        if n.is_multiple_of(2) && i == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let factor = Complex64::new(0.0, k).powu(order);
        *c *= factor;
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Exponential low-pass filter `exp(-36 (|k|/k_max)^order)` applied to the
/// Fourier coefficients of a periodic field. Smooth modes are untouched to
/// rounding; the top of the spectrum is damped to about `e^-36`.
pub fn exponential_filter(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    if n < 4 || order == 0 {
        return values.to_vec();
    }
    let (fwd, inv) = plans(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let kmax = (n / 2) as f64;
    for (i, c) in buf.iter_mut().enumerate() {
        let r = wavenumber(i, n).abs() / kmax;
        *c *= (-36.0 * r.powi(order as i32)).exp();
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Periodic centered fourth-order finite differences with spacing `2π/N`.
pub fn fd4_derivative(values: &[f64], order: u32) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::TooFewNodes { min: 5, got: n });
    }
    let h = TAU / n as f64;
    let at = |j: isize| values[j.rem_euclid(n as isize) as usize];
    let out = (0..n as isize)
        .map(|j| {
            let (m2, m1, p1, p2) = (at(j - 2), at(j - 1), at(j + 1), at(j + 2));
            match order {
                1 => (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
                _ => (-m2 + 16.0 * m1 - 30.0 * at(j) + 16.0 * p1 - p2) / (12.0 * h * h),
            }
        })
        .collect();
    Ok(out)
}

/// Walks `(cos kθ, sin kθ)` for `k = 0, 1, 2, …` by complex rotation,
/// re-anchoring on the exact values every few steps to bound drift.
struct Phasor {
    theta: f64,
    step: Complex64,
    cur: Complex64,
    k: usize,
}

const RESYNC: usize = 64;

impl Phasor {
    fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Phasor {
            theta,
            step: Complex64::new(c, s),
            cur: Complex64::new(1.0, 0.0),
            k: 0,
        }
    }

    #[inline]
    fn advance(&mut self) -> Complex64 {
        self.k += 1;
        if self.k.is_multiple_of(RESYNC) {
            let (s, c) = (self.k as f64 * self.theta).sin_cos();
            self.cur = Complex64::new(c, s);
        } else {
            self.cur *= self.step;
        }
        self.cur
    }
}

/// Real trigonometric interpolant
/// `f(x) = a₀ + Σ_k (a_k cos kx + b_k sin kx)` of samples on the uniform grid.
#[derive(Clone, Debug)]
pub struct TrigSeries {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigSeries {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let (fwd, _) = plans(n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        let kmax = n / 2;
        let mut a = vec![0.0; kmax + 1];
        let mut b = vec![0.0; kmax + 1];
        let inv_n = 1.0 / n as f64;
        a[0] = buf[0].re * inv_n;
        for k in 1..=kmax {
            let c = buf[k] * inv_n;
            if n.is_multiple_of(2) && k == kmax {
                a[k] = c.re;
            } else {
                a[k] = 2.0 * c.re;
                b[k] = -2.0 * c.im;
            }
        }
        TrigSeries { a, b }
    }

    /// Build directly from cosine/sine coefficients (index = wavenumber).
    pub fn from_coefficients(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), b.len());
        TrigSeries { a, b }
    }

    pub fn mean(&self) -> f64 {
        self.a[0]
    }

    pub fn max_wavenumber(&self) -> usize {
        self.a.len() - 1
    }

    /// Value and first two derivatives at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let mut f = self.a[0];
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut ph = Phasor::new(x);
        for k in 1..self.a.len() {
            let e = ph.advance();
            let (c, s) = (e.re, e.im);
            let kf = k as f64;
            let (ak, bk) = (self.a[k], self.b[k]);
            f += ak * c + bk * s;
            d1 += kf * (bk * c - ak * s);
            d2 -= kf * kf * (ak * c + bk * s);
        }
        (f, d1, d2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut f = self.a[0];
        let mut ph = Phasor::new(x);
        for k in 1..self.a.len() {
            let e = ph.advance();
            f += self.a[k] * e.re + self.b[k] * e.im;
        }
        f
    }

    /// `f(x + u) - f(x)` without cancellation for small `u`.
    pub fn chord(&self, x: f64, u: f64) -> f64 {
        let mut acc = 0.0;
        let mut mid = Phasor::new(x + 0.5 * u);
        let mut half = Phasor::new(0.5 * u);
        for k in 1..self.a.len() {
            let m = mid.advance();
            let sh = half.advance().im;
            acc += 2.0 * sh * (self.b[k] * m.re - self.a[k] * m.im);
        }
        acc
    }

    /// `∫₀ˣ f` for a series; the mean contributes the linear part.
    pub fn integral(&self, x: f64) -> f64 {
        let mut acc = self.a[0] * x;
        let mut ph = Phasor::new(x);
        for k in 1..self.a.len() {
            let e = ph.advance();
            let kf = k as f64;
            acc += (self.a[k] * e.im + self.b[k] * (1.0 - e.re)) / kf;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial_is_exact() {
        let xs = grid(32);
        let f: Vec<f64> = xs.iter().map(|&x| (3.0 * x).sin() + 0.5 * x.cos()).collect();
        let d = spectral_derivative(&f, 1);
        let d2 = spectral_derivative(&f, 2);
        for (j, &x) in xs.iter().enumerate() {
            assert!((d[j] - (3.0 * (3.0 * x).cos() - 0.5 * x.sin())).abs() < 1e-12);
            assert!((d2[j] - (-9.0 * (3.0 * x).sin() - 0.5 * x.cos())).abs() < 1e-11);
        }
    }

    #[test]
    fn filter_keeps_low_modes_and_damps_nyquist() {
        let xs = grid(64);
        let smooth: Vec<f64> = xs.iter().map(|&x| (3.0 * x).cos() + 0.1).collect();
        let f = exponential_filter(&smooth, 36);
        for (a, b) in smooth.iter().zip(&f) {
            assert!((a - b).abs() < 1e-14);
        }
        let zigzag: Vec<f64> = (0..64).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let z = exponential_filter(&zigzag, 36);
        assert!(z.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn fd4_rejects_short_input() {
        assert!(fd4_derivative(&[1.0, 2.0, 3.0, 4.0], 1).is_err());
    }

    #[test]
    fn trig_series_interpolates_and_differentiates() {
        let xs = grid(16);
        let f: Vec<f64> = xs.iter().map(|&x| 1.5 + (2.0 * x).cos() - 0.25 * (5.0 * x).sin()).collect();
        let s = TrigSeries::from_samples(&f);
        for &x in &[0.1, 1.3, 4.0] {
            let (v, d, dd) = s.eval3(x);
            assert!((v - (1.5 + (2.0 * x).cos() - 0.25 * (5.0 * x).sin())).abs() < 1e-13);
            assert!((d - (-2.0 * (2.0 * x).sin() - 1.25 * (5.0 * x).cos())).abs() < 1e-12);
            assert!((dd - (-4.0 * (2.0 * x).cos() + 6.25 * (5.0 * x).sin())).abs() < 1e-12);
            let u = 1e-7;
            // second-order Taylor expansion is exact to ~1e-20 at this step
            let exact = d * u + 0.5 * dd * u * u;
            assert!((s.chord(x, u) - exact).abs() < 1e-13 * exact.abs());
            let int_exact = 1.5 * x + (2.0 * x).sin() / 2.0 + 0.25 * ((5.0 * x).cos() - 1.0) / 5.0;
            assert!((s.integral(x) - int_exact).abs() < 1e-13);
        }
    }
}
