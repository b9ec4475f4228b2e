//! Training/validation selection of the smoothness-driven regularization
//! parameter when the target smoothness is unknown.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, KernelSpec};
use crate::seed;
use crate::spectral::{
    lambda_schedule, FilterKind, FilterSpec, FittedModel, SpectralDecomposition,
};
use rand::seq::SliceRandom;

/// Smallest spacing used by [`candidate_grid`].
pub const MIN_GRID_SPACING: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Candidate smoothness values, nondecreasing, each `> d/2`.
    pub candidates: Vec<f64>,
    /// Schedule constant `C` in `λ_m = exp(−C n^{2/(2m+d)})`.
    pub c: f64,
    /// Share of the data used for training; the rest validates.
    pub split_fraction: f64,
    pub filter: FilterKind,
}

impl AdaptiveConfig {
    pub fn new(candidates: Vec<f64>, c: f64, filter: FilterKind) -> Self {
        Self {
            candidates,
            c,
            split_fraction: 0.5,
            filter,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::Config("candidate smoothness list is empty".into()));
        }
        let half_d = d as f64 / 2.0;
        for (i, &m) in self.candidates.iter().enumerate() {
            if !(m > half_d) || !m.is_finite() {
                return Err(Error::Config(format!(
                    "candidate smoothness {m} must exceed d/2 = {half_d}"
                )));
            }
            if i > 0 && m < self.candidates[i - 1] {
                return Err(Error::Config(
                    "candidate smoothness list must be sorted".into(),
                ));
            }
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!(
                "schedule constant C must be positive, got {}",
                self.c
            )));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }
}

/// Arithmetic grid from `m_min` to `m_max` (inclusive) with spacing
/// `max(1/ln n, 0.25)`; the final step may be shorter.
pub fn candidate_grid(n: usize, d: usize, m_min: f64, m_max: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::Input(format!(
            "candidate grid needs n >= 3, got {n}"
        )));
    }
    if !(m_min > d as f64 / 2.0) || !(m_max >= m_min) {
        return Err(Error::Config(format!(
            "need d/2 < m_min <= m_max, got m_min = {m_min}, m_max = {m_max}"
        )));
    }
    let step = (1.0 / (n as f64).ln()).max(MIN_GRID_SPACING);
    let tol = 1e-12 * m_max.abs().max(1.0);
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let m = m_min + step * k as f64;
        if m >= m_max - tol {
            break;
        }
        grid.push(m);
        k += 1;
    }
    grid.push(m_max);
    Ok(grid)
}

/// Outcome of [`adaptive_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveFit {
    /// Estimator trained on the training split with the selected λ.
    pub model: FittedModel,
    pub chosen_m: f64,
    pub chosen_lambda: f64,
    pub chosen_index: usize,
    /// Validation mean squared error per candidate, in candidate order.
    pub validation_errors: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

/// Seeded shuffle of `0..n` split into a training prefix of
/// `⌊n · fraction⌋ + 1` indices and the validation remainder.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = (n as f64 * fraction).floor() as usize + 1;
    if n_train >= n {
        return Err(Error::Input(format!(
            "cannot split {n} samples with training fraction {fraction}: validation split would be empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let validation = idx.split_off(n_train);
    Ok((idx, validation))
}

pub fn mean_squared_error(pred: &[f64], y: &[f64]) -> f64 {
    let sum: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    sum / y.len() as f64
}

/// Fits one estimator per candidate smoothness on the training split with
/// `λ_m = lambda_schedule(|D₁|, m, d, C)` and keeps the one with the
/// smallest validation error (ties go to the earliest candidate).
pub fn adaptive_fit(
    data: &Dataset,
    kernel: &KernelSpec,
    config: &AdaptiveConfig,
    seed: u64,
) -> Result<AdaptiveFit> {
    config.validate(data.dim())?;
    SplitFit::new(data, kernel, config.split_fraction, seed)?.select(config)
}

/// A training/validation split with the training Gram already decomposed,
/// so several configurations (schedule constants, filters) can be selected
/// on the same split without refactoring.
#[derive(Debug, Clone)]
pub struct SplitFit {
    decomposition: SpectralDecomposition,
    cross: faer::Mat<f64>,
    train_y: Vec<f64>,
    valid_y: Vec<f64>,
    kernel: KernelSpec,
    split_fraction: f64,
    train_indices: Vec<usize>,
    validation_indices: Vec<usize>,
}

impl SplitFit {
    pub fn new(
        data: &Dataset,
        kernel: &KernelSpec,
        split_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if data.len() < 4 {
            return Err(Error::Input(format!(
                "adaptive fit needs at least 4 samples, got {}",
                data.len()
            )));
        }
        if !(split_fraction > 0.0 && split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {split_fraction}"
            )));
        }
        let (train_indices, validation_indices) = split_indices(data.len(), split_fraction, seed)?;
        let train = data.select(&train_indices);
        let valid = data.select(&validation_indices);
        Ok(Self {
            decomposition: SpectralDecomposition::new(&train.x, kernel)?,
            cross: cross_kernel(&valid.x, &train.x, kernel)?,
            train_y: train.y,
            valid_y: valid.y,
            kernel: *kernel,
            split_fraction,
            train_indices,
            validation_indices,
        })
    }

    pub fn train_points(&self) -> &crate::data::Points {
        self.decomposition.points()
    }

    pub fn select(&self, config: &AdaptiveConfig) -> Result<AdaptiveFit> {
        let points = self.decomposition.points();
        let d = points.dim();
        config.validate(d)?;
        if config.split_fraction != self.split_fraction {
            return Err(Error::Config(format!(
                "config split fraction {} differs from the prepared split {}",
                config.split_fraction, self.split_fraction
            )));
        }
        let n_train = points.len();
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        let mut validation_errors = Vec::with_capacity(config.candidates.len());
        for (i, &m) in config.candidates.iter().enumerate() {
            let lambda = lambda_schedule(n_train, m, d, config.c);
            let filter = FilterSpec::new(config.filter, lambda)?;
            let alpha = self
                .decomposition
                .dual_coefficients(&self.train_y, &filter)?;
            let pred = crate::linalg::mat_vec(&self.cross, &alpha);
            let err = mean_squared_error(&pred, &self.valid_y);
            validation_errors.push(err);
            let better = match &best {
                None => true,
                Some((_, best_err, _)) => err < *best_err,
            };
            if better {
                best = Some((i, err, alpha));
            }
        }
        let (chosen_index, _, alpha) = best.expect("candidate list is nonempty");
        let chosen_m = config.candidates[chosen_index];
        Ok(AdaptiveFit {
            model: FittedModel::new(points.clone(), alpha, self.kernel)?,
            chosen_m,
            chosen_lambda: lambda_schedule(n_train, chosen_m, d, config.c),
            chosen_index,
            validation_errors,
            train_indices: self.train_indices.clone(),
            validation_indices: self.validation_indices.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Points;
    use crate::spectral::{spectral_fit, Predictor};
    use rand::{Rng, SeedableRng};

    fn data(n: usize, seed: u64) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = x
            .iter()
            .map(|&t| (5.0 * t).cos() + 0.5 * (rng.random::<f64>() - 0.5))
            .collect();
        Dataset::new(Points::from_scalars(x), y).unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(candidate_grid(100, 1, 2.0, 2.0).unwrap(), vec![2.0]);
        assert_eq!(
            candidate_grid(55, 1, 1.0, 2.0).unwrap(),
            vec![1.0, 1.25, 1.5, 1.75, 2.0]
        );
        // spacing 1/ln(1e6) < 0.25 is floored; last step shorter
        let g = candidate_grid(1_000_000, 1, 1.0, 1.6).unwrap();
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.6]);
        // small n gives spacing 1/ln 3 ≈ 0.91
        let g = candidate_grid(3, 1, 1.0, 3.0).unwrap();
        assert_eq!(g.len(), 4);
        assert!(candidate_grid(10, 2, 1.0, 2.0).is_err());
    }

    #[test]
    fn split_is_partition() {
        for n in [4, 5, 17, 200] {
            let (a, b) = split_indices(n, 0.5, 9).unwrap();
            assert_eq!(a.len(), n / 2 + 1);
            let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        assert!(split_indices(2, 0.5, 0).is_err());
    }

    #[test]
    fn single_and_duplicate_candidates() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let d = data(40, 1);
        let fit = adaptive_fit(
            &d,
            &k,
            &AdaptiveConfig::new(vec![3.0], 1.0, FilterKind::Krr),
            5,
        )
        .unwrap();
        assert_eq!(fit.chosen_m, 3.0);
        let fit = adaptive_fit(
            &d,
            &k,
            &AdaptiveConfig::new(vec![2.0, 2.0], 1.0, FilterKind::Krr),
            5,
        )
        .unwrap();
        assert_eq!(fit.chosen_index, 0);
        assert_eq!(fit.validation_errors[0], fit.validation_errors[1]);
    }

    #[test]
    fn selection_matches_exhaustive_refit() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let d = data(200, 2);
        let cfg = AdaptiveConfig::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], 0.5, FilterKind::Krr);
        let fit = adaptive_fit(&d, &k, &cfg, 11).unwrap();
        let train = d.select(&fit.train_indices);
        let valid = d.select(&fit.validation_indices);
        let errs: Vec<f64> = cfg
            .candidates
            .iter()
            .map(|&m| {
                let lambda = lambda_schedule(train.len(), m, 1, cfg.c);
                let model = spectral_fit(
                    &train,
                    &k,
                    &FilterSpec::new(FilterKind::Krr, lambda).unwrap(),
                )
                .unwrap();
                mean_squared_error(&model.predict(&valid.x).unwrap(), &valid.y)
            })
            .collect();
        let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
        let chosen_err = mean_squared_error(&fit.model.predict(&valid.x).unwrap(), &valid.y);
        assert!(
            (chosen_err - min).abs() <= 1e-10 * min.max(1.0),
            "{chosen_err} vs {min}"
        );
        assert_eq!(
            fit.chosen_lambda,
            lambda_schedule(train.len(), fit.chosen_m, 1, cfg.c)
        );
    }

    #[test]
    fn shared_split_matches_individual_fits() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let d = data(50, 6);
        let split = SplitFit::new(&d, &k, 0.5, 8).unwrap();
        for c in [0.5, 2.0] {
            for f in FilterKind::ALL {
                let cfg = AdaptiveConfig::new(vec![1.0, 2.0, 4.0], c, f);
                assert_eq!(
                    split.select(&cfg).unwrap(),
                    adaptive_fit(&d, &k, &cfg, 8).unwrap()
                );
            }
        }
        let mut cfg = AdaptiveConfig::new(vec![1.0], 1.0, FilterKind::Krr);
        cfg.split_fraction = 0.6;
        assert!(split.select(&cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let d = data(60, 3);
        let cfg = AdaptiveConfig::new(vec![1.0, 2.0, 3.0], 1.0, FilterKind::GradientFlow);
        let a = adaptive_fit(&d, &k, &cfg, 4).unwrap();
        let b = adaptive_fit(&d, &k, &cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let d = data(10, 3);
        assert!(adaptive_fit(
            &d,
            &k,
            &AdaptiveConfig::new(vec![0.4], 1.0, FilterKind::Krr),
            0
        )
        .is_err());
        assert!(adaptive_fit(
            &d,
            &k,
            &AdaptiveConfig::new(vec![2.0, 1.0], 1.0, FilterKind::Krr),
            0
        )
        .is_err());
        assert!(adaptive_fit(
            &d.select(&[0, 1, 2]),
            &k,
            &AdaptiveConfig::new(vec![2.0], 1.0, FilterKind::Krr),
            0
        )
        .is_err());
    }
}
