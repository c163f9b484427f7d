//! Natural cubic spline interpolation over scattered knots.
//!
//! This is the interpolant used for sifting envelopes: second derivatives
//! are zero at both end knots, and two knots degenerate to the straight
//! line through them.

use crate::error::{Error, Result};

/// A natural cubic spline through a fixed set of knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative of the spline at each knot; zero at both ends.
    second: Vec<f64>,
}

impl CubicSpline {
    /// Fits a natural spline through `knots`, which must be at least two
    /// points with strictly increasing, finite x.
    pub fn natural(knots: &[(f64, f64)]) -> Result<Self> {
        let n = knots.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "spline: need at least 2 knots, got {n}"
            )));
        }
        for pair in knots.windows(2) {
            // partial_cmp keeps NaN knots on the error path.
            let ascending = matches!(
                pair[1].0.partial_cmp(&pair[0].0),
                Some(std::cmp::Ordering::Greater)
            );
            if !ascending {
                return Err(Error::invalid(format!(
                    "spline: knot positions not strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives; natural
            // boundary conditions pin the first and last to zero.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = (h0 + h1) / 3.0;
                upper[i] = h1 / 6.0;
                rhs[i] = (ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0;
            }
            // Thomas algorithm. The lower diagonal mirrors the upper one.
            for i in 1..m {
                let lower = upper[i - 1];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (1..m).rev() {
                second[i] = (rhs[i - 1] - upper[i - 1] * second[i + 1]) / diag[i - 1];
            }
        }
        Ok(CubicSpline { xs, ys, second })
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Evaluates the spline at `x`. Knot positions reproduce the knot value
    /// exactly; positions beyond the ends continue the boundary segment's
    /// cubic.
    pub fn evaluate(&self, x: f64) -> f64 {
        let seg = match self.xs.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= self.xs.len() => self.xs.len() - 2,
            Err(i) => i - 1,
        };
        self.eval_segment(seg, x)
    }

    /// Evaluates at many positions, which must be non-decreasing. Walks the
    /// segments once, so this is linear in knots plus positions.
    pub fn evaluate_many(&self, positions: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(positions.len());
        let mut seg = 0;
        let last_seg = self.xs.len() - 2;
        for &x in positions {
            while seg < last_seg && x >= self.xs[seg + 1] {
                seg += 1;
            }
            if x == self.xs[seg] {
                out.push(self.ys[seg]);
            } else if x == self.xs[seg + 1] {
                out.push(self.ys[seg + 1]);
            } else {
                out.push(self.eval_segment(seg, x));
            }
        }
        out
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * (h * h)
                / 6.0
    }
}
