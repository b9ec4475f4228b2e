//! Synthetic truths drawn as Gaussian-process sample paths with Matérn
//! covariance, regression data generation, and concept-shift scenarios.

mod spline;

pub use spline::CubicSpline;

use crate::data::{linspace, Dataset, Points};
use crate::error::{Error, Result};
use crate::evaluate::simpson_integral;
use crate::kernels::KernelSpec;
use crate::linalg;
use crate::seed::{self, derive_seed};
use crate::spectral::Predictor;
use crate::transfer::TransformPair;
use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const DEFAULT_N_GRID: usize = 2001;
pub const DEFAULT_TRUTH_BANDWIDTH: f64 = 0.2;
pub const DEFAULT_NOISE_SD: f64 = 0.5;
/// Offset added to the Sobolev order to get the Matérn smoothness of a truth.
pub const NU_OFFSET: f64 = 0.01;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// A function on `[0, 1]` given by a natural cubic spline through values on
/// an equispaced anchor grid, times `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthFunction {
    spline: CubicSpline,
    pub nominal_m: f64,
    pub scale: f64,
}

impl TruthFunction {
    pub fn from_anchors(grid: Vec<f64>, values: Vec<f64>, nominal_m: f64) -> Result<Self> {
        Ok(Self {
            spline: CubicSpline::natural(grid, values)?,
            nominal_m,
            scale: 1.0,
        })
    }

    pub fn anchor_grid(&self) -> &[f64] {
        self.spline.knots()
    }

    /// Unscaled anchor values.
    pub fn anchor_values(&self) -> &[f64] {
        self.spline.values()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale * self.spline.eval(x)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// `∫₀¹ f²` by composite Simpson on the anchor grid.
    pub fn squared_norm(&self) -> Result<f64> {
        let grid = self.anchor_grid();
        let sq: Vec<f64> = self
            .anchor_values()
            .iter()
            .map(|&v| {
                let s = self.scale * v;
                s * s
            })
            .collect();
        simpson_integral(&sq, grid[0], grid[grid.len() - 1])
    }
}

impl Predictor for TruthFunction {
    fn predict(&self, points: &Points) -> Result<Vec<f64>> {
        if points.dim() != 1 {
            return Err(Error::Input(format!(
                "truth functions are one-dimensional, got dimension {}",
                points.dim()
            )));
        }
        Ok(points.as_slice().iter().map(|&x| self.eval(x)).collect())
    }
}

type FactorKey = (u64, u64, usize);

fn factor_cache() -> &'static Mutex<HashMap<FactorKey, Arc<Mat<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<FactorKey, Arc<Mat<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Lower Cholesky factor of the Matérn Gram matrix on `n_grid` equispaced
/// points of `[0, 1]` plus jitter. Factors are cached per `(ν, h, n_grid)`
/// since they do not depend on the seed.
fn matern_grid_factor(nu: f64, h: f64, n_grid: usize) -> Result<Arc<Mat<f64>>> {
    let key = (nu.to_bits(), h.to_bits(), n_grid);
    if let Some(f) = factor_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(Arc::clone(f));
    }
    let kernel = KernelSpec::matern(nu, h)?;
    let spacing = 1.0 / (n_grid - 1) as f64;
    // stationary kernel on an equispaced grid: the Gram is Toeplitz
    let lags: Vec<f64> = (0..n_grid)
        .map(|k| kernel.eval_distance(k as f64 * spacing))
        .collect();
    let mut jitter = JITTER_START;
    let factor = loop {
        let m = Mat::from_fn(n_grid, n_grid, |i, j| {
            let v = lags[i.abs_diff(j)];
            if i == j {
                v + jitter
            } else {
                v
            }
        });
        match linalg::cholesky_lower(&m) {
            Ok(l) => break l,
            Err(e) if jitter >= JITTER_MAX => return Err(e),
            Err(_) => jitter *= 10.0,
        }
    };
    let factor = Arc::new(factor);
    factor_cache()
        .lock()
        .expect("cache poisoned")
        .insert(key, Arc::clone(&factor));
    Ok(factor)
}

/// Draws a Matérn(ν, h) Gaussian-process path on `n_grid` equispaced anchors
/// of `[0, 1]`: `values = L z`, `z ~ N(0, I)`, `L Lᵀ = M + jitter·I`.
pub fn gp_sample_path(nu: f64, h: f64, n_grid: usize, seed: u64) -> Result<TruthFunction> {
    if n_grid < 16 {
        return Err(Error::Input(format!(
            "anchor grid needs at least 16 points, got {n_grid}"
        )));
    }
    let l = matern_grid_factor(nu, h, n_grid)?;
    let mut rng = seed::rng(seed);
    let z: Vec<f64> = (0..n_grid).map(|_| rng.sample(StandardNormal)).collect();
    let values: Vec<f64> = (0..n_grid)
        .map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum())
        .collect();
    TruthFunction::from_anchors(linspace(0.0, 1.0, n_grid), values, nu)
}

/// Truth generation settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthOptions {
    pub bandwidth: f64,
    pub n_grid: usize,
}

impl Default for TruthOptions {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_TRUTH_BANDWIDTH,
            n_grid: DEFAULT_N_GRID,
        }
    }
}

/// A GP path intended to lie in `H^m`: Matérn smoothness `ν = m + 0.01`.
pub fn sobolev_truth(m: f64, options: &TruthOptions, seed: u64) -> Result<TruthFunction> {
    let mut f = gp_sample_path(m + NU_OFFSET, options.bandwidth, options.n_grid, seed)?;
    f.nominal_m = m;
    Ok(f)
}

/// `x_i ~ U[0,1]`, `y_i = truth(x_i) + noise_sd · ε_i`. All `x` are drawn
/// before the `ε`.
pub fn make_regression_data(
    truth: &TruthFunction,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Input("regression data needs n >= 1".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Config(format!(
            "noise_sd must be nonnegative, got {noise_sd}"
        )));
    }
    let mut rng = seed::rng(seed);
    let (x, y) = draw_labelled(&mut rng, n, noise_sd, |t| truth.eval(t));
    Dataset::new(Points::from_scalars(x), y)
}

fn draw_labelled(
    rng: &mut seed::SimRng,
    n: usize,
    noise_sd: f64,
    f: impl Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|&t| {
            let eps: f64 = rng.sample(StandardNormal);
            f(t) + noise_sd * eps
        })
        .collect();
    (x, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftScenario {
    pub f_source: TruthFunction,
    pub f_shift: TruthFunction,
    pub xi_target: f64,
    pub noise_sd: f64,
    pub n_source: usize,
    pub n_target: usize,
}

impl ShiftScenario {
    /// `‖f^δ‖² / ‖f^P‖²` with Simpson norms on the anchor grid.
    pub fn realized_xi(&self) -> Result<f64> {
        Ok(self.f_shift.squared_norm()? / self.f_source.squared_norm()?)
    }

    /// Target regression function `f^P + f^δ`.
    pub fn target_eval(&self, x: f64) -> f64 {
        self.f_source.eval(x) + self.f_shift.eval(x)
    }
}

/// Draws `f^P` (order `m_source`) and `f^δ` (order `m_shift`) and rescales
/// `f^δ` so that `‖f^δ‖² / ‖f^P‖² = xi_target`.
#[allow(clippy::too_many_arguments)]
pub fn make_shift_scenario(
    m_source: f64,
    m_shift: f64,
    xi_target: f64,
    n_source: usize,
    n_target: usize,
    seeds: (u64, u64),
    options: &TruthOptions,
    noise_sd: f64,
) -> Result<ShiftScenario> {
    if !(xi_target > 0.0) || !xi_target.is_finite() {
        return Err(Error::Config(format!(
            "xi must be positive, got {xi_target}"
        )));
    }
    if options.n_grid.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "anchor grid size must be odd for Simpson norms, got {}",
            options.n_grid
        )));
    }
    let draw_nonzero = |m: f64, seed: u64| -> Result<(TruthFunction, f64)> {
        for attempt in 0..16u64 {
            let f = sobolev_truth(m, options, derive_seed(seed, &[attempt]))?;
            let norm = f.squared_norm()?;
            if norm > 0.0 && norm.is_finite() {
                return Ok((f, norm));
            }
        }
        Err(Error::Numerical {
            message: "sample paths kept coming out identically zero".into(),
            dim: options.n_grid,
            min_diag: 0.0,
            max_diag: 0.0,
        })
    };
    let (f_source, norm_source) = draw_nonzero(m_source, seeds.0)?;
    let (raw_shift, norm_shift) = draw_nonzero(m_shift, seeds.1)?;
    let factor = (xi_target * norm_source / norm_shift).sqrt();
    Ok(ShiftScenario {
        f_source,
        f_shift: raw_shift.scaled(factor),
        xi_target,
        noise_sd,
        n_source,
        n_target,
    })
}

/// Offset-transfer data: `y^P = f^P(x^P) + σε^P` and
/// `y^Q = f^P(x^Q) + f^δ(x^Q) + σε^Q`, with independent inputs and noise.
pub fn make_transfer_datasets(
    scenario: &ShiftScenario,
    pair: &TransformPair,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if *pair != TransformPair::Offset {
        return Err(Error::Config(
            "transfer datasets are generated for offset transfer only".into(),
        ));
    }
    if scenario.n_source == 0 || scenario.n_target == 0 {
        return Err(Error::Input(
            "transfer datasets need positive sample sizes".into(),
        ));
    }
    let mut rng = seed::rng(derive_seed(seed, &[0]));
    let (xp, yp) = draw_labelled(&mut rng, scenario.n_source, scenario.noise_sd, |t| {
        scenario.f_source.eval(t)
    });
    let mut rng = seed::rng(derive_seed(seed, &[1]));
    let (xq, yq) = draw_labelled(&mut rng, scenario.n_target, scenario.noise_sd, |t| {
        scenario.target_eval(t)
    });
    Ok((
        Dataset::new(Points::from_scalars(xp), yp)?,
        Dataset::new(Points::from_scalars(xq), yq)?,
    ))
}
