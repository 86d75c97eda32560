//! Monotone-safe piecewise-cubic interpolation (Fritsch-Carlson slopes).

use crate::error::{Error, Result};

/// Piecewise cubic Hermite interpolant that preserves monotonicity of the
/// data between knots.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

/// Three-point one-sided slope estimate at a boundary, shape-limited.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

impl MonotoneCubic {
    /// Build from strictly increasing knots.
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidParameter(
                "interpolation needs at least two matching knots".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "interpolation knots must be strictly increasing".into(),
            ));
        }
        let n = xs.len();
        let mut deltas = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            deltas.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = deltas[0];
            slopes[1] = deltas[0];
        } else {
            slopes[0] = edge_slope(xs[1] - xs[0], xs[2] - xs[1], deltas[0], deltas[1]);
            slopes[n - 1] = edge_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                deltas[n - 2],
                deltas[n - 3],
            );
        }
        for i in 1..n - 1 {
            if deltas[i - 1] * deltas[i] <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // harmonic mean keeps the interpolant monotone
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                slopes[i] = (w1 + w2) / (w1 / deltas[i - 1] + w2 / deltas[i]);
            }
        }
        // clamp endpoint slopes per Fritsch-Carlson
        for (i, &d) in deltas.iter().enumerate() {
            if d == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
            } else {
                let a = slopes[i] / d;
                let b = slopes[i + 1] / d;
                let s = a * a + b * b;
                if s > 9.0 {
                    let tau = 3.0 / s.sqrt();
                    slopes[i] = tau * a * d;
                    slopes[i + 1] = tau * b * d;
                }
            }
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
        })
    }

    /// Domain of the interpolant.
    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluate; errors outside the knot range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(Error::Domain(format!(
                "interpolation argument {x} outside [{lo}, {hi}]"
            )));
        }
        let x = x.clamp(lo, hi);
        let i = match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => return Ok(self.ys[i.min(self.ys.len() - 1)]),
            Err(i) => i.clamp(1, self.xs.len() - 1) - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok(h00 * self.ys[i]
            + h10 * h * self.slopes[i]
            + h01 * self.ys[i + 1]
            + h11 * h * self.slopes[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_stays_monotone() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x * x).collect();
        let interp = MonotoneCubic::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((interp.eval(*x).unwrap() - y).abs() < 1e-14);
        }
        let mut prev = -1.0;
        for i in 0..=200 {
            let v = interp.eval(i as f64 / 200.0).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn accuracy_on_smooth_data() {
        let xs: Vec<f64> = (0..101).map(|i| -1.0 + i as f64 / 50.0).collect();
        let f = |x: f64| (1.0 - x * x) / (2.0 * (2.0 - x * x));
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let interp = MonotoneCubic::new(&xs, &ys).unwrap();
        for i in 0..=500 {
            let x = -1.0 + 2.0 * i as f64 / 500.0;
            assert!((interp.eval(x).unwrap() - f(x)).abs() < 2e-5);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let interp = MonotoneCubic::new(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!(interp.eval(1.5).is_err());
        assert!(interp.eval(-0.5).is_err());
    }
}
