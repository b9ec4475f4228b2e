//! Stationary kernels (Gaussian, Matérn) and Gram-matrix assembly.

mod bessel;

pub use bessel::{bessel_k, bessel_k_general, bessel_k_half_integer, gamma};

use crate::data::Points;
use crate::error::{Error, Result};
use faer::Mat;

/// A stationary kernel `k(x, y) = ψ(‖x − y‖)` with `k(x, x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(−‖x−y‖² / 2h²)`.
    Gaussian { bandwidth: f64 },
    /// `2^{1−ν}/Γ(ν) · (√(2ν) r/h)^ν · K_ν(√(2ν) r/h)`.
    Matern { nu: f64, bandwidth: f64 },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_positive("bandwidth", bandwidth)?;
        Ok(Self::Gaussian { bandwidth })
    }

    pub fn matern(nu: f64, bandwidth: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        check_positive("bandwidth", bandwidth)?;
        Ok(Self::Matern { nu, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        match *self {
            Self::Gaussian { bandwidth } | Self::Matern { bandwidth, .. } => bandwidth,
        }
    }

    /// Kernel value as a function of the Euclidean distance `r ≥ 0`.
    pub fn eval_distance(&self, r: f64) -> f64 {
        match *self {
            Self::Gaussian { bandwidth } => gaussian_profile(r * r, bandwidth),
            Self::Matern { nu, bandwidth } => matern_profile(r, nu, bandwidth),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.eval_distance(squared_distance(x, y)?.sqrt()))
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match *self {
            Self::Gaussian { bandwidth } => gaussian_profile(d2, bandwidth),
            Self::Matern { nu, bandwidth } => matern_profile(d2.sqrt(), nu, bandwidth),
        }
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

fn squared_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

#[inline]
fn gaussian_profile(d2: f64, h: f64) -> f64 {
    (-d2 / (2.0 * h * h)).exp()
}

fn matern_profile(r: f64, nu: f64, h: f64) -> f64 {
    // 0·∞ at the origin; the continuous limit is 1.
    if r < 1e-14 * h {
        return 1.0;
    }
    let z = (2.0 * nu).sqrt() * r / h;
    let k = bessel_k(nu, z).unwrap_or(0.0);
    if k == 0.0 {
        return 0.0;
    }
    // 2^{1−ν} z^ν / Γ(ν) in log space keeps large z and ν finite.
    let log_pref = (1.0 - nu) * std::f64::consts::LN_2 + nu * z.ln() - gamma(nu).ln();
    (log_pref + k.ln()).exp()
}

/// `exp(−‖x−y‖² / 2h²)`.
pub fn gaussian_eval(x: &[f64], y: &[f64], h: f64) -> Result<f64> {
    check_positive("bandwidth", h)?;
    Ok(gaussian_profile(squared_distance(x, y)?, h))
}

/// Matérn correlation with smoothness `nu` and bandwidth `h`.
pub fn matern_eval(x: &[f64], y: &[f64], nu: f64, h: f64) -> Result<f64> {
    check_positive("nu", nu)?;
    check_positive("bandwidth", h)?;
    Ok(matern_profile(squared_distance(x, y)?.sqrt(), nu, h))
}

/// Symmetric kernel matrix `G[i][j] = k(x_i, x_j)`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    values: Mat<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_mat(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.values
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.values
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| {
                crate::linalg::numerical_error(
                    "Gram eigenvalue solve did not converge",
                    &self.values,
                )
            })
    }
}

/// Assembles the Gram matrix: each upper-triangle entry is computed once and
/// mirrored, so the result is exactly symmetric.
pub fn gram(points: &Points, kernel: &KernelSpec) -> GramMatrix {
    let n = points.len();
    let mut values = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
        let xi = points.row(i);
        for j in i + 1..n {
            let v = kernel.eval_unchecked(xi, points.row(j));
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    GramMatrix { values }
}

/// Rectangular kernel matrix `K[a][b] = k(queries_a, centers_b)`.
pub fn cross_kernel(queries: &Points, centers: &Points, kernel: &KernelSpec) -> Result<Mat<f64>> {
    if queries.dim() != centers.dim() {
        return Err(Error::Input(format!(
            "query dimension {} does not match training dimension {}",
            queries.dim(),
            centers.dim()
        )));
    }
    let (m, n) = (queries.len(), centers.len());
    let mut out = Mat::<f64>::zeros(m, n);
    if let (KernelSpec::Gaussian { bandwidth }, 1) = (kernel, queries.dim()) {
        let scale = -1.0 / (2.0 * bandwidth * bandwidth);
        let c = centers.as_slice();
        for (a, &q) in queries.as_slice().iter().enumerate() {
            for (b, &x) in c.iter().enumerate() {
                let d = q - x;
                out[(a, b)] = (scale * d * d).exp();
            }
        }
        return Ok(out);
    }
    for a in 0..m {
        let q = queries.row(a);
        for b in 0..n {
            out[(a, b)] = kernel.eval_unchecked(q, centers.row(b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_eval(&[0.3], &[0.3], 0.7).unwrap(), 1.0);
        for h in [0.1, 0.2, 1.3] {
            assert_relative_eq!(
                gaussian_eval(&[0.0], &[h], h).unwrap(),
                0.606_530_659_7,
                max_relative = 1e-10
            );
        }
        assert_relative_eq!(
            gaussian_eval(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap(),
            0.367_879_441_2,
            max_relative = 1e-10
        );
        assert!(matches!(
            gaussian_eval(&[0.0], &[1.0, 1.0], 1.0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn matern_examples() {
        assert_eq!(matern_eval(&[0.4], &[0.4], 2.01, 0.2).unwrap(), 1.0);
        // ν = 1/2 is the exponential kernel
        let v = matern_eval(&[0.0], &[0.3], 0.5, 0.3).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-12);
        // reference from 40-digit arithmetic
        let v = matern_eval(&[0.0], &[0.1], 2.01, 0.2).unwrap();
        assert_relative_eq!(v, 0.812_828_205_440_666_1, max_relative = 1e-12);
    }

    #[test]
    fn matern_half_integer_closed_forms() {
        let h = 0.25;
        for i in 1..200 {
            let r = i as f64 * 0.01;
            let s = r / h;
            let want_32 = (1.0 + 3f64.sqrt() * s) * (-(3f64.sqrt()) * s).exp();
            let want_52 = (1.0 + 5f64.sqrt() * s + 5.0 * s * s / 3.0) * (-(5f64.sqrt()) * s).exp();
            assert_relative_eq!(
                matern_eval(&[0.0], &[r], 1.5, h).unwrap(),
                want_32,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                matern_eval(&[0.0], &[r], 2.5, h).unwrap(),
                want_52,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn monotone_in_distance() {
        let kernels = [
            KernelSpec::gaussian(0.2).unwrap(),
            KernelSpec::matern(2.01, 0.2).unwrap(),
            KernelSpec::matern(1.01, 0.1).unwrap(),
        ];
        for k in kernels {
            let mut prev = k.eval_distance(0.0);
            assert_eq!(prev, 1.0);
            for i in 1..=500 {
                let v = k.eval_distance(i as f64 * 0.004);
                assert!(v <= prev && v > 0.0, "{k:?} at step {i}");
                prev = v;
            }
        }
    }

    #[test]
    fn gram_small_cases() {
        let k = KernelSpec::gaussian(0.3).unwrap();
        let g = gram(&Points::from_scalars(vec![0.5]), &k);
        assert_eq!(g.n(), 1);
        assert_eq!(g.get(0, 0), 1.0);
        let g = gram(&Points::from_scalars(vec![0.5, 0.5]), &k);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.get(i, j), 1.0);
            }
        }
        let pts = Points::from_scalars(vec![0.1, 0.77, 0.3, 0.95, 0.42]);
        let g = gram(&pts, &k);
        for i in 0..5 {
            for j in 0..5 {
                let want = gaussian_eval(pts.row(i), pts.row(j), 0.3).unwrap();
                assert_relative_eq!(g.get(i, j), want, max_relative = 1e-15);
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::matern(-1.0, 0.2).is_err());
        assert!(matern_eval(&[0.0], &[0.1], 2.0, -0.2).is_err());
    }
}
