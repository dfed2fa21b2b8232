//! Fluxes given on a `(u, s)` knot table.
//!
//! Rows are interpolated in `s` with the Fritsch-Carlson monotone cubic, then
//! combined across `u` with a cubic Hermite (finite-difference slopes). Beyond the
//! last `s` knot the row is held constant, so the last column is `a_+(u)`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFlux {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    /// `a[i][j] = a(u[i], s[j])`.
    pub a: Vec<Vec<f64>>,
    #[serde(skip)]
    slopes: Vec<Vec<f64>>,
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (v, dv)
}

impl TabulatedFlux {
    pub fn new(u: Vec<f64>, s: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self, String> {
        if u.len() < 2 || s.len() < 2 {
            return Err("tabulated flux needs at least two knots per axis".into());
        }
        if u.windows(2).any(|w| w[1] <= w[0]) || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err("tabulated knots must be strictly increasing".into());
        }
        if u[0] < 0.0 || *u.last().unwrap() > 1.0 {
            return Err("u knots must lie in [0, 1]".into());
        }
        if u[0] != 0.0 || *u.last().unwrap() != 1.0 {
            return Err("u knots must include 0 and 1".into());
        }
        if s[0] != 0.0 {
            return Err("first s knot must be 0".into());
        }
        if a.len() != u.len() || a.iter().any(|row| row.len() != s.len()) {
            return Err("value table shape does not match the knots".into());
        }
        for row in &a {
            if row[0] != 0.0 {
                return Err("a(u, 0) must be 0".into());
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err("rows must be nondecreasing in s".into());
            }
        }
        let slopes = a.iter().map(|row| pchip_slopes(&s, row)).collect();
        Ok(Self { u, s, a, slopes })
    }

    fn row(&self, i: usize, s: f64) -> (f64, f64) {
        let row = &self.a[i];
        let n = self.s.len();
        if s >= self.s[n - 1] {
            return (row[n - 1], 0.0);
        }
        let j = self.s.partition_point(|&x| x <= s).saturating_sub(1).min(n - 2);
        let d = &self.slopes[i];
        hermite(self.s[j], self.s[j + 1], row[j], row[j + 1], d[j], d[j + 1], s)
    }

    /// Cubic Hermite across rows of per-row values `vals(i)`.
    fn across_u<F: Fn(usize) -> f64>(&self, u: f64, vals: F) -> f64 {
        let n = self.u.len();
        let u = u.clamp(0.0, 1.0);
        let i = self.u.partition_point(|&x| x <= u).saturating_sub(1).min(n - 2);
        let slope = |k: usize| -> f64 {
            if k == 0 {
                (vals(1) - vals(0)) / (self.u[1] - self.u[0])
            } else if k == n - 1 {
                (vals(n - 1) - vals(n - 2)) / (self.u[n - 1] - self.u[n - 2])
            } else {
                (vals(k + 1) - vals(k - 1)) / (self.u[k + 1] - self.u[k - 1])
            }
        };
        hermite(self.u[i], self.u[i + 1], vals(i), vals(i + 1), slope(i), slope(i + 1), u).0
    }

    pub fn a(&self, u: f64, s: f64) -> f64 {
        let x = s.abs();
        self.across_u(u, |i| self.row(i, x).0).copysign(s)
    }

    pub fn da_ds(&self, u: f64, s: f64) -> f64 {
        let x = s.abs();
        self.across_u(u, |i| self.row(i, x).1)
    }

    pub fn a_plus(&self, u: f64) -> f64 {
        let last = self.s.len() - 1;
        self.across_u(u, |i| self.a[i][last]).max(0.0)
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn knots_u(&self) -> &[f64] {
        &self.u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TabulatedFlux {
        let u = vec![0.0, 0.5, 1.0];
        let s = vec![0.0, 0.5, 1.0, 2.0, 4.0];
        let a = u
            .iter()
            .map(|&uu| s.iter().map(|&ss: &f64| (1.0 + uu) * ss.atan()).collect())
            .collect();
        TabulatedFlux::new(u, s, a).unwrap()
    }

    #[test]
    fn reproduces_knot_values() {
        let t = table();
        assert!((t.a(0.5, 1.0) - 1.5 * 1f64.atan()).abs() < 1e-14);
        assert!((t.a(0.5, -1.0) + 1.5 * 1f64.atan()).abs() < 1e-14);
        assert!((t.a_plus(1.0) - 2.0 * 4f64.atan()).abs() < 1e-14);
    }

    #[test]
    fn rows_stay_monotone_between_knots() {
        let t = table();
        for k in 0..200 {
            let s0 = k as f64 * 0.025;
            for &u in &[0.0, 0.2, 0.5, 0.9] {
                assert!(t.a(u, s0 + 0.025) >= t.a(u, s0) - 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TabulatedFlux::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![0.0, -1.0]]).is_err());
        assert!(TabulatedFlux::new(vec![0.0, 0.8], vec![0.0, 1.0], vec![vec![0.0, 1.0], vec![0.0, 1.0]]).is_err());
    }
}
