//! Spectral algorithms: filter functions applied to the spectrum of the
//! empirical kernel operator, plus a direct-solve ridge oracle.
//!
//! With `G` the Gram matrix on `n` training points and `G/n = U Λ Uᵀ`, the
//! estimator `φ_λ(T_{K,n}) g_n` reduces to the dual representation
//! `f̂(x) = Σ_i α_i k(x, x_i)` with `α = (1/n) U φ_λ(Λ) Uᵀ y`.

use crate::data::{Dataset, Points};
use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, gram, KernelSpec};
use crate::linalg;
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Below this ratio `z/λ` the gradient-flow filter switches to its Taylor
/// expansion around the removable singularity.
const GF_TAYLOR_CUTOFF: f64 = 1e-8;

/// Floor for the exponential regularization schedule.
pub const LAMBDA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// Tikhonov, `1/(z+λ)` (kernel ridge regression).
    Krr,
    /// `(1 − e^{−z/λ})/z` (gradient flow).
    #[serde(rename = "gf")]
    GradientFlow,
    /// Spectral cut-off, `z^{−1} 1{z ≥ λ}` (kernel principal component regression).
    Kpcr,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Krr, FilterKind::GradientFlow, FilterKind::Kpcr];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Krr => "krr",
            Self::GradientFlow => "gf",
            Self::Kpcr => "kpcr",
        }
    }

    /// Qualification constants `(τ_max, E)` and the residual constant `F_τ`.
    pub fn qualification(&self) -> Qualification {
        match self {
            Self::Krr => Qualification {
                max_tau: 1.0,
                e: 1.0,
            },
            Self::GradientFlow | Self::Kpcr => Qualification {
                max_tau: f64::INFINITY,
                e: 1.0,
            },
        }
    }

    /// `F_τ` in `sup_z |1 − zφ_λ(z)| z^β ≤ F_τ λ^β` for `β ≤ τ`.
    pub fn residual_constant(&self, tau: f64) -> f64 {
        match self {
            Self::Krr | Self::Kpcr => 1.0,
            Self::GradientFlow => (tau / std::f64::consts::E).powf(tau),
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "krr" => Ok(Self::Krr),
            "gf" | "gradient-flow" => Ok(Self::GradientFlow),
            "kpcr" => Ok(Self::Kpcr),
            other => Err(Error::Config(format!("unknown filter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qualification {
    pub max_tau: f64,
    pub e: f64,
}

/// A filter kind together with its regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub lambda: f64,
}

impl FilterSpec {
    pub fn new(kind: FilterKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!(
                "regularization parameter must be positive, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn apply(&self, z: f64) -> f64 {
        filter_apply(self.kind, self.lambda, z)
    }
}

/// Evaluates `φ_λ(z)` for `z ≥ 0`.
pub fn filter_apply(kind: FilterKind, lambda: f64, z: f64) -> f64 {
    match kind {
        FilterKind::Krr => 1.0 / (z + lambda),
        FilterKind::GradientFlow => {
            let t = z / lambda;
            if t < GF_TAYLOR_CUTOFF {
                (1.0 - 0.5 * t) / lambda
            } else {
                -(-t).exp_m1() / z
            }
        }
        FilterKind::Kpcr => {
            if z >= lambda {
                1.0 / z
            } else {
                0.0
            }
        }
    }
}

/// `λ = exp(−C n^{2/(2m+d)})`, floored at [`LAMBDA_FLOOR`].
pub fn lambda_schedule(n: usize, m: f64, d: usize, c: f64) -> f64 {
    let exponent = 2.0 / (2.0 * m + d as f64);
    (-c * (n as f64).powf(exponent)).exp().max(LAMBDA_FLOOR)
}

/// Anything that maps query points to predictions.
pub trait Predictor {
    fn predict(&self, points: &Points) -> Result<Vec<f64>>;
}

/// A kernel expansion `f̂(x) = Σ_i α_i k(x, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub train_points: Points,
    pub dual_coeffs: Vec<f64>,
    pub kernel: KernelSpec,
}

impl FittedModel {
    pub fn new(train_points: Points, dual_coeffs: Vec<f64>, kernel: KernelSpec) -> Result<Self> {
        if train_points.len() != dual_coeffs.len() {
            return Err(Error::Input(format!(
                "{} training points but {} coefficients",
                train_points.len(),
                dual_coeffs.len()
            )));
        }
        Ok(Self {
            train_points,
            dual_coeffs,
            kernel,
        })
    }

    /// Predictions from a precomputed `k(queries, train_points)` matrix.
    pub fn predict_from_cross(&self, cross: &Mat<f64>) -> Vec<f64> {
        linalg::mat_vec(cross, &self.dual_coeffs)
    }
}

impl Predictor for FittedModel {
    fn predict(&self, points: &Points) -> Result<Vec<f64>> {
        let cross = cross_kernel(points, &self.train_points, &self.kernel)?;
        Ok(self.predict_from_cross(&cross))
    }
}

pub fn predict(model: &FittedModel, points: &Points) -> Result<Vec<f64>> {
    model.predict(points)
}

/// Eigendecomposition of `G/n` for one training set, reusable across filters
/// and regularization parameters.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    points: Points,
    kernel: KernelSpec,
    /// Eigenvalues of `G/n`, clamped to `[0, ∞)`, ascending.
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    /// Size of eigenvalue round-off, `n · ε · λ_max`.
    roundoff_floor: f64,
}

impl SpectralDecomposition {
    pub fn new(points: &Points, kernel: &KernelSpec) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Input("cannot fit on an empty dataset".into()));
        }
        let mut g = gram(points, kernel).into_mat();
        let inv_n = 1.0 / n as f64;
        for j in 0..n {
            for v in g.col_mut(j).iter_mut() {
                *v *= inv_n;
            }
        }
        let (mut eigenvalues, eigenvectors) = linalg::symmetric_eigen(&g)?;
        for v in &mut eigenvalues {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
        Ok(Self {
            points: points.clone(),
            kernel: *kernel,
            eigenvalues,
            eigenvectors,
            roundoff_floor: n as f64 * f64::EPSILON * lambda_max,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    /// Eigenvalues below this are indistinguishable from round-off.
    pub fn roundoff_floor(&self) -> f64 {
        self.roundoff_floor
    }

    /// `filter` with λ raised to the round-off floor: spectral content
    /// below it is noise, and filtering finer only amplifies that noise.
    pub fn effective_filter(&self, filter: &FilterSpec) -> FilterSpec {
        FilterSpec {
            kind: filter.kind,
            lambda: filter.lambda.max(self.roundoff_floor),
        }
    }

    /// `α = (1/n) U φ_λ(Λ) Uᵀ y`, with λ no smaller than the round-off floor.
    pub fn dual_coefficients(&self, y: &[f64], filter: &FilterSpec) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(Error::Input(format!(
                "{} labels for {} training points",
                y.len(),
                self.n()
            )));
        }
        let filter = self.effective_filter(filter);
        let inv_n = 1.0 / self.n() as f64;
        let mut proj = linalg::mat_t_vec(&self.eigenvectors, y);
        for (p, &z) in proj.iter_mut().zip(&self.eigenvalues) {
            *p *= filter.apply(z) * inv_n;
        }
        Ok(linalg::mat_vec(&self.eigenvectors, &proj))
    }

    pub fn fit(&self, y: &[f64], filter: &FilterSpec) -> Result<FittedModel> {
        let alpha = self.dual_coefficients(y, filter)?;
        FittedModel::new(self.points.clone(), alpha, self.kernel)
    }
}

/// The spectral estimator `φ_λ(T_{K,n}) g_n` in dual form.
pub fn spectral_fit(
    data: &Dataset,
    kernel: &KernelSpec,
    filter: &FilterSpec,
) -> Result<FittedModel> {
    SpectralDecomposition::new(&data.x, kernel)?.fit(&data.y, filter)
}

/// Kernel ridge regression by solving `(G + nλI) α = y` with Cholesky.
pub fn krr_direct_solve(data: &Dataset, kernel: &KernelSpec, lambda: f64) -> Result<FittedModel> {
    FilterSpec::new(FilterKind::Krr, lambda)?;
    let n = data.len();
    if n == 0 {
        return Err(Error::Input("cannot fit on an empty dataset".into()));
    }
    let mut g = gram(&data.x, kernel).into_mat();
    let ridge = n as f64 * lambda;
    for i in 0..n {
        g[(i, i)] += ridge;
    }
    let alpha = linalg::spd_solve(&g, &data.y)?;
    FittedModel::new(data.x.clone(), alpha, *kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gaussian_eval;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = x
            .iter()
            .map(|&t| (6.0 * t).sin() + 0.3 * (rng.random::<f64>() - 0.5))
            .collect();
        Dataset::new(Points::from_scalars(x), y).unwrap()
    }

    #[test]
    fn filter_examples() {
        assert_relative_eq!(
            filter_apply(FilterKind::Krr, 0.1, 0.1),
            5.0,
            max_relative = 1e-15
        );
        assert_eq!(filter_apply(FilterKind::GradientFlow, 0.5, 0.0), 2.0);
        assert_eq!(filter_apply(FilterKind::Kpcr, 0.2, 0.19), 0.0);
        assert_eq!(filter_apply(FilterKind::Kpcr, 0.2, 0.2), 5.0);
    }

    #[test]
    fn gf_continuous_at_zero() {
        for lambda in [1e-6, 1e-3, 0.5] {
            let v = filter_apply(FilterKind::GradientFlow, lambda, 1e-12);
            assert!((v - 1.0 / lambda).abs() <= 1e-6 / lambda);
            // both sides of the Taylor switch agree
            let below = filter_apply(FilterKind::GradientFlow, lambda, 0.99e-8 * lambda);
            let above = filter_apply(FilterKind::GradientFlow, lambda, 1.01e-8 * lambda);
            assert_relative_eq!(below, above, max_relative = 1e-7);
        }
    }

    #[test]
    fn kpcr_residual_is_indicator() {
        let lambda = 0.05;
        for i in 0..=1000 {
            let z = i as f64 / 1000.0;
            let r = 1.0 - z * filter_apply(FilterKind::Kpcr, lambda, z);
            let want = if z >= lambda { 0.0 } else { 1.0 };
            assert!((r - want).abs() < 1e-15, "z = {z}");
        }
    }

    #[test]
    fn schedule_examples() {
        for m in [1.0, 2.0, 4.5] {
            assert_relative_eq!(
                lambda_schedule(1, m, 1, 1.0),
                0.367_879_441_2,
                max_relative = 1e-10
            );
        }
        // exp(−0.5 · 100^0.4), 40-digit reference
        assert_relative_eq!(
            lambda_schedule(100, 2.0, 1, 0.5),
            0.042_647_495_778_265_9,
            max_relative = 1e-13
        );
        let mut prev = lambda_schedule(1, 2.0, 1, 0.5);
        for n in 2..2000 {
            let next = lambda_schedule(n, 2.0, 1, 0.5);
            assert!(next < prev);
            prev = next;
        }
        assert_eq!(lambda_schedule(1_000_000, 1.0, 1, 4.0), LAMBDA_FLOOR);
    }

    #[test]
    fn single_point_fit() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let data = Dataset::new(Points::from_scalars(vec![0.3]), vec![2.0]).unwrap();
        let lambda = 0.25;
        let model = spectral_fit(
            &data,
            &k,
            &FilterSpec::new(FilterKind::Krr, lambda).unwrap(),
        )
        .unwrap();
        let direct = krr_direct_solve(&data, &k, lambda).unwrap();
        assert_relative_eq!(direct.dual_coeffs[0], 2.0 / 1.25, max_relative = 1e-15);
        for x in [0.0, 0.3, 0.9] {
            let want = gaussian_eval(&[x], &[0.3], 0.2).unwrap() * 2.0 / (1.0 + lambda);
            let got = model.predict(&Points::from_scalars(vec![x])).unwrap()[0];
            assert_relative_eq!(got, want, max_relative = 1e-14);
        }
        // query at the training point returns α₁
        let at = direct.predict(&Points::from_scalars(vec![0.3])).unwrap()[0];
        assert_eq!(at, direct.dual_coeffs[0]);
    }

    #[test]
    fn spectral_krr_matches_direct_solve() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let test = Points::linspace(0.0, 1.0, 100);
        for (n, seed) in [(30, 1), (50, 2)] {
            let data = random_data(n, seed);
            let lambda = 1e-3;
            let a = spectral_fit(
                &data,
                &k,
                &FilterSpec::new(FilterKind::Krr, lambda).unwrap(),
            )
            .unwrap();
            let b = krr_direct_solve(&data, &k, lambda).unwrap();
            let pa = a.predict(&test).unwrap();
            let pb = b.predict(&test).unwrap();
            let diff = pa
                .iter()
                .zip(&pb)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-8, "n = {n}: {diff}");
        }
    }

    #[test]
    fn kpcr_with_huge_lambda_is_zero() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let data = random_data(20, 3);
        let model =
            spectral_fit(&data, &k, &FilterSpec::new(FilterKind::Kpcr, 2.0).unwrap()).unwrap();
        assert!(model.dual_coeffs.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn zero_labels_give_zero_model() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let data = random_data(10, 4).with_labels(vec![0.0; 10]).unwrap();
        let model = krr_direct_solve(&data, &k, 0.01).unwrap();
        assert!(model.dual_coeffs.iter().all(|&a| a == 0.0));
        let p = model.predict(&Points::linspace(0.0, 1.0, 7)).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn predict_matches_scalar_recomputation() {
        let k = KernelSpec::gaussian(0.3).unwrap();
        let model = FittedModel::new(
            Points::from_scalars(vec![0.1, 0.5, 0.8]),
            vec![1.5, -0.7, 0.2],
            k,
        )
        .unwrap();
        let q = Points::from_scalars(vec![0.0, 0.45, 0.99]);
        let got = model.predict(&q).unwrap();
        for (j, &x) in q.as_slice().iter().enumerate() {
            let want: f64 = model
                .train_points
                .as_slice()
                .iter()
                .zip(&model.dual_coeffs)
                .map(|(&t, &a)| a * gaussian_eval(&[x], &[t], 0.3).unwrap())
                .sum();
            assert_relative_eq!(got[j], want, max_relative = 1e-14);
        }
        let bad = Points::new(vec![0.0, 0.0], 2).unwrap();
        assert!(model.predict(&bad).is_err());
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(FilterSpec::new(FilterKind::Krr, 0.0).is_err());
        assert!(FilterSpec::new(FilterKind::Krr, f64::NAN).is_err());
    }
}
