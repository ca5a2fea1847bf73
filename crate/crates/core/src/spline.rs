//! Periodic cubic spline interpolation of planar points over a cyclic knot
//! sequence. Used by mesh redistribution to reposition nodes along the
//! interpolated image with C² regularity.

use crate::error::{Error, Result};
use crate::linalg::CyclicBanded;
use crate::vec2::Vec2;

pub struct PeriodicSpline {
    knots: Vec<f64>,
    period: f64,
    points: Vec<Vec2>,
    second: Vec<Vec2>,
}

impl PeriodicSpline {
    /// Fits a periodic C² cubic through `points[i]` at parameter `knots[i]`.
    /// Knots must be strictly increasing with `knots[n-1] - knots[0] < period`.
    pub fn fit(knots: Vec<f64>, points: Vec<Vec2>, period: f64) -> Result<Self> {
        let n = knots.len();
        if n < 4 || points.len() != n {
            return Err(Error::InvalidParameter(format!(
                "spline needs >= 4 matching knots/points, got {n}/{}",
                points.len()
            )));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidParameter("spline period must be positive".into()));
        }
        let mut h = vec![0.0; n];
        for i in 0..n {
            let next = if i + 1 < n {
                knots[i + 1]
            } else {
                knots[0] + period
            };
            h[i] = next - knots[i];
            if !(h[i] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "knots must be strictly increasing within one period (interval {i})"
                )));
            }
        }

        let mut m = CyclicBanded::new(n, 1);
        let mut rhs_x = vec![0.0; n];
        let mut rhs_y = vec![0.0; n];
        for i in 0..n {
            let im1 = (i + n - 1) % n;
            let ip1 = (i + 1) % n;
            m.set(i, -1, h[im1] / 6.0);
            m.set(i, 0, (h[im1] + h[i]) / 3.0);
            m.set(i, 1, h[i] / 6.0);
            let d_next = (points[ip1] - points[i]) / h[i];
            let d_prev = (points[i] - points[im1]) / h[im1];
            rhs_x[i] = d_next.x - d_prev.x;
            rhs_y[i] = d_next.y - d_prev.y;
        }
        let lu = m.factor()?;
        lu.solve(&mut rhs_x);
        lu.solve(&mut rhs_y);
        let second = rhs_x
            .iter()
            .zip(&rhs_y)
            .map(|(&x, &y)| Vec2::new(x, y))
            .collect();

        Ok(PeriodicSpline {
            knots,
            period,
            points,
            second,
        })
    }

    /// Evaluates the spline at parameter `t` (wrapped into one period).
    pub fn eval(&self, t: f64) -> Vec2 {
        let n = self.knots.len();
        let t0 = self.knots[0];
        let mut u = (t - t0) % self.period;
        if u < 0.0 {
            u += self.period;
        }
        let u = u + t0;
        // Interval index: last knot <= u.
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(0) => n - 1,
            Err(i) => i - 1,
        };
        let ip1 = (i + 1) % n;
        let h = if i + 1 < n {
            self.knots[i + 1] - self.knots[i]
        } else {
            self.knots[0] + self.period - self.knots[i]
        };
        let a = (self.knots[i] + h - u) / h;
        let b = (u - self.knots[i]) / h;
        self.points[i] * a
            + self.points[ip1] * b
            + (self.second[i] * (a * a * a - a) + self.second[ip1] * (b * b * b - b)) * (h * h / 6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interpolates_knots_exactly() {
        let n = 32;
        let knots: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let pts: Vec<Vec2> = knots
            .iter()
            .map(|&u| Vec2::new((2.0 * PI * u).cos(), (2.0 * PI * u).sin()))
            .collect();
        let sp = PeriodicSpline::fit(knots.clone(), pts.clone(), 1.0).unwrap();
        for (k, p) in knots.iter().zip(&pts) {
            let q = sp.eval(*k);
            assert!((q - *p).norm() < 1e-13);
        }
    }

    #[test]
    fn fourth_order_between_knots() {
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let knots: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let pts: Vec<Vec2> = knots
                .iter()
                .map(|&u| Vec2::new((2.0 * PI * u).cos(), (4.0 * PI * u).sin()))
                .collect();
            let sp = PeriodicSpline::fit(knots, pts, 1.0).unwrap();
            let mut err = 0.0f64;
            for j in 0..(4 * n) {
                let u = (j as f64 + 0.5) / (4 * n) as f64;
                let exact = Vec2::new((2.0 * PI * u).cos(), (4.0 * PI * u).sin());
                err = err.max((sp.eval(u) - exact).norm());
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!(w[0] / w[1] > 10.0, "errors {errs:?}");
        }
    }

    #[test]
    fn periodic_wrap_evaluation() {
        let n = 24;
        let knots: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let pts: Vec<Vec2> = knots
            .iter()
            .map(|&u| Vec2::new((2.0 * PI * u).sin(), (2.0 * PI * u).cos()))
            .collect();
        let sp = PeriodicSpline::fit(knots, pts, 1.0).unwrap();
        for t in [0.13, 0.77, 0.5] {
            let a = sp.eval(t);
            let b = sp.eval(t + 1.0);
            let c = sp.eval(t - 1.0);
            assert!((a - b).norm() < 1e-12);
            assert!((a - c).norm() < 1e-12);
        }
    }
}
