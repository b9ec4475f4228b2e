use crate::error::{Error, Result};

/// Natural cubic spline through `(xs, ys)` with strictly increasing `xs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Input(format!(
                "spline needs at least two knots with matching values, got {} knots and {} values",
                n,
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            let mut upper = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[k] = 2.0 * (h0 + h1);
                upper[k] = h1;
                rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = xs[k + 1] - xs[k];
                let w = lower / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                second[k + 1] = (rhs[k] - upper[k] * second[k + 2]) / diag[k];
            }
        }
        Ok(Self { xs, ys, second })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Evaluates the spline; outside the knot range the end cubic is
    /// continued.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let hi = self.xs.partition_point(|&k| k <= x).clamp(1, n - 1);
        let lo = hi - 1;
        let h = self.xs[hi] - self.xs[lo];
        let a = (self.xs[hi] - x) / h;
        let b = (x - self.xs[lo]) / h;
        a * self.ys[lo]
            + b * self.ys[hi]
            + ((a * a * a - a) * self.second[lo] + (b * b * b - b) * self.second[hi]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::linspace;

    #[test]
    fn interpolates_knots_exactly() {
        let xs = linspace(0.0, 1.0, 21);
        let ys: Vec<f64> = xs.iter().map(|&x| (7.0 * x).sin()).collect();
        let s = CubicSpline::natural(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(s.eval(*x), *y);
        }
    }

    #[test]
    fn reproduces_linear_functions() {
        let xs = vec![0.0, 0.1, 0.35, 0.6, 1.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 * x - 1.0).collect();
        let s = CubicSpline::natural(xs, ys).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn accurate_on_smooth_functions() {
        let xs = linspace(0.0, 1.0, 201);
        let ys: Vec<f64> = xs.iter().map(|&x| (3.0 * x).cos()).collect();
        let s = CubicSpline::natural(xs, ys).unwrap();
        // away from the natural end conditions the error is O(h⁴)
        for i in 100..=900 {
            let x = i as f64 / 1000.0;
            assert!((s.eval(x) - (3.0 * x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::natural(vec![0.0], vec![1.0]).is_err());
        assert!(CubicSpline::natural(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
