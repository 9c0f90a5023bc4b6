use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Discrete periodic maximal function of `|f|`.
///
/// For each node the centered averages over half-widths `m·h`,
/// `m = 1, …, 2N` (so up to twice the period `L`), are evaluated with the
/// trapezoid rule on the grid, and the result is the largest of them and
/// `|f_j|` itself. Window sums grow outward from the centre by two samples
/// per step, so the cost is `O(N·W)` with `W = 2N` windows per node.
pub fn periodic_maximal_function(samples: &[f64], length: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if !(length > 0.0) {
        return Err(invalid("length", "must be positive"));
    }
    let abs: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    let out = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut best = abs[j];
            let mut interior = abs[j];
            for m in 1..=2 * n {
                let lo = abs[(j + 2 * n * n - m) % n];
                let hi = abs[(j + m) % n];
                let avg = (interior + 0.5 * (lo + hi)) / (2 * m) as f64;
                if avg > best {
                    best = avg;
                }
                interior += lo;
                interior += hi;
            }
            best
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let m = periodic_maximal_function(&[-2.5; 32], 1.0).unwrap();
        assert!(m.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(periodic_maximal_function(&[], 1.0).unwrap_err(), Error::Empty);
    }

    #[test]
    fn spike_average_decays_with_distance() {
        let mut f = vec![0.0; 16];
        f[0] = 1.0;
        let m = periodic_maximal_function(&f, 16.0).unwrap();
        assert_eq!(m[0], 1.0);
        // node 1: best window is half-width 1 with the spike at an endpoint
        assert_eq!(m[1], 0.25);
        assert_eq!(m[15], 0.25);
        assert!(m[8] < m[2]);
    }
}
