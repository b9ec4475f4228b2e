//! Hypothesis transfer: pre-train on the source domain, fit the shift on
//! transformed target labels, and compose the two estimators.

use crate::adaptive::{adaptive_fit, AdaptiveConfig, AdaptiveFit};
use crate::data::{Dataset, Points};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::seed::derive_seed;
use crate::spectral::{FittedModel, Predictor};

/// Data transformation `g(y, p)` and model transformation `G(δ, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformPair {
    /// `g = y − p`, `G = p + δ`.
    Offset,
    /// `g = (y − τp)/(1 − τ)`, `G = (1 − ρ)p + ρδ`.
    Affine { tau: f64, rho: f64 },
}

impl TransformPair {
    pub fn affine(tau: f64, rho: f64) -> Result<Self> {
        let pair = Self::Affine { tau, rho };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Affine { tau, rho } = *self {
            if !(0.0..1.0).contains(&tau) {
                return Err(Error::Config(format!(
                    "affine transform needs tau in [0, 1), got {tau}"
                )));
            }
            if !rho.is_finite() {
                return Err(Error::Config(format!(
                    "affine transform needs finite rho, got {rho}"
                )));
            }
        }
        Ok(())
    }

    /// Lipschitz constant `L₁` of `G` jointly in both arguments.
    pub fn lipschitz_model(&self) -> f64 {
        match *self {
            Self::Offset => std::f64::consts::SQRT_2,
            Self::Affine { rho, .. } => std::f64::consts::SQRT_2 * (1.0 - rho).abs().max(rho.abs()),
        }
    }

    /// Lipschitz constant `L₂` of `g` in its second argument.
    pub fn lipschitz_data(&self) -> f64 {
        match *self {
            Self::Offset => 1.0,
            Self::Affine { tau, .. } => (tau / (1.0 - tau)).abs(),
        }
    }

    pub fn g(&self, y: f64, p: f64) -> Result<f64> {
        transform_g(self, y, p)
    }

    #[allow(non_snake_case)]
    pub fn G(&self, delta: f64, p: f64) -> f64 {
        transform_model(self, delta, p)
    }
}

/// Intermediate label `g(y, p)`.
pub fn transform_g(pair: &TransformPair, y: f64, p: f64) -> Result<f64> {
    match *pair {
        TransformPair::Offset => Ok(y - p),
        TransformPair::Affine { tau, .. } => {
            if tau == 1.0 {
                return Err(Error::Config(
                    "affine transform with tau = 1 is singular".into(),
                ));
            }
            Ok((y - tau * p) / (1.0 - tau))
        }
    }
}

/// Composed prediction `G(δ, p)`.
pub fn transform_model(pair: &TransformPair, delta: f64, p: f64) -> f64 {
    match *pair {
        TransformPair::Offset => p + delta,
        TransformPair::Affine { rho, .. } => (1.0 - rho) * p + rho * delta,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtlResult {
    pub source_model: FittedModel,
    pub shift_model: FittedModel,
    pub transform: TransformPair,
    pub chosen_m_source: f64,
    pub chosen_m_shift: f64,
    pub chosen_lambda_source: f64,
    pub chosen_lambda_shift: f64,
    /// Step-2 labels `g(y_i^Q, f̂^P(x_i^Q))` at the target inputs.
    pub intermediate_labels: Vec<f64>,
}

impl Predictor for HtlResult {
    fn predict(&self, points: &Points) -> Result<Vec<f64>> {
        htl_predict(self, points)
    }
}

/// `f̂^Q(x) = G(f̂^δ(x), f̂^P(x))`.
pub fn htl_predict(result: &HtlResult, points: &Points) -> Result<Vec<f64>> {
    let shift = result.shift_model.predict(points)?;
    let source = result.source_model.predict(points)?;
    Ok(shift
        .iter()
        .zip(&source)
        .map(|(&d, &p)| transform_model(&result.transform, d, p))
        .collect())
}

/// Robust adaptive hypothesis transfer: adaptive spectral fits on the source
/// data and on the intermediate (shift) data, composed through `G`.
#[allow(clippy::too_many_arguments)]
pub fn rahtl_fit(
    source: &Dataset,
    target: &Dataset,
    kernel: &KernelSpec,
    pair: &TransformPair,
    cfg_source: &AdaptiveConfig,
    cfg_shift: &AdaptiveConfig,
    seed: u64,
) -> Result<HtlResult> {
    pair.validate()?;
    check_sizes(source, target)?;
    let pre = pretrain(source, kernel, cfg_source, seed)?;
    finetune(&pre, target, kernel, pair, cfg_shift, seed)
}

fn check_sizes(source: &Dataset, target: &Dataset) -> Result<()> {
    if source.len() < 4 || target.len() < 4 {
        return Err(Error::Input(format!(
            "transfer needs at least 4 source and 4 target samples, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    if source.dim() != target.dim() {
        return Err(Error::Input(
            "source and target inputs differ in dimension".into(),
        ));
    }
    Ok(())
}

/// Step 1: adaptive fit on the source domain. `seed` is the same base seed
/// later passed to [`finetune`].
pub fn pretrain(
    source: &Dataset,
    kernel: &KernelSpec,
    cfg_source: &AdaptiveConfig,
    seed: u64,
) -> Result<AdaptiveFit> {
    adaptive_fit(source, kernel, cfg_source, derive_seed(seed, &[1]))
}

/// Steps 2 and 3 on top of a pre-trained source fit; step 4 happens at
/// prediction time through `G`.
pub fn finetune(
    pre: &AdaptiveFit,
    target: &Dataset,
    kernel: &KernelSpec,
    pair: &TransformPair,
    cfg_shift: &AdaptiveConfig,
    seed: u64,
) -> Result<HtlResult> {
    pair.validate()?;
    if target.len() < 4 {
        return Err(Error::Input(format!(
            "transfer needs at least 4 target samples, got {}",
            target.len()
        )));
    }
    if pre.model.train_points.dim() != target.dim() {
        return Err(Error::Input(
            "source and target inputs differ in dimension".into(),
        ));
    }
    let p_at_target = pre.model.predict(&target.x)?;
    let intermediate_labels = target
        .y
        .iter()
        .zip(&p_at_target)
        .map(|(&y, &p)| transform_g(pair, y, p))
        .collect::<Result<Vec<_>>>()?;
    let shift_data = target.with_labels(intermediate_labels.clone())?;
    let shift = adaptive_fit(&shift_data, kernel, cfg_shift, derive_seed(seed, &[2]))?;
    Ok(HtlResult {
        source_model: pre.model.clone(),
        shift_model: shift.model,
        transform: *pair,
        chosen_m_source: pre.chosen_m,
        chosen_m_shift: shift.chosen_m,
        chosen_lambda_source: pre.chosen_lambda,
        chosen_lambda_shift: shift.chosen_lambda,
        intermediate_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FilterKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn transform_examples() {
        assert_eq!(transform_g(&TransformPair::Offset, 3.0, 1.0).unwrap(), 2.0);
        let a0 = TransformPair::affine(0.0, 0.5).unwrap();
        assert_eq!(transform_g(&a0, 3.0, 1.0).unwrap(), 3.0);
        let a5 = TransformPair::affine(0.5, 0.5).unwrap();
        assert_eq!(transform_g(&a5, 3.0, 1.0).unwrap(), 5.0);
        assert_eq!(transform_model(&TransformPair::Offset, 0.0, 4.2), 4.2);
        assert_eq!(
            transform_model(&TransformPair::Affine { tau: 0.3, rho: 1.0 }, 1.7, 4.2),
            1.7
        );
        assert!(TransformPair::affine(1.0, 0.0).is_err());
        assert!(transform_g(&TransformPair::Affine { tau: 1.0, rho: 0.0 }, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(y in -10.0f64..10.0, p in -10.0f64..10.0, tau in 0.0f64..0.95) {
            let off = TransformPair::Offset;
            prop_assert!((off.G(off.g(y, p).unwrap(), p) - y).abs() <= 1e-12);
            let aff = TransformPair::affine(tau, 1.0 - tau).unwrap();
            prop_assert!((aff.G(aff.g(y, p).unwrap(), p) - y).abs() <= 1e-12);
        }

        #[test]
        fn model_transform_is_lipschitz(
            a in -10.0f64..10.0, b in -10.0f64..10.0,
            a2 in -10.0f64..10.0, b2 in -10.0f64..10.0,
            rho in -2.0f64..3.0,
        ) {
            for pair in [TransformPair::Offset, TransformPair::Affine { tau: 0.2, rho }] {
                let lhs = (pair.G(a, b) - pair.G(a2, b2)).abs();
                let rhs = pair.lipschitz_model() * ((a - a2).powi(2) + (b - b2).powi(2)).sqrt();
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    fn toy(n: usize, seed: u64, f: impl Fn(f64) -> f64, noise: f64) -> Dataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = x
            .iter()
            .map(|&t| f(t) + noise * (rng.random::<f64>() - 0.5))
            .collect();
        Dataset::new(Points::from_scalars(x), y).unwrap()
    }

    #[test]
    fn step_two_labels_match_recomputation() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let source = toy(50, 1, |t| (4.0 * t).sin(), 0.2);
        let target = toy(20, 2, |t| (4.0 * t).sin() + 0.3 * t, 0.2);
        let cfg = AdaptiveConfig::new(vec![1.0, 2.0, 3.0], 0.5, FilterKind::Krr);
        let res = rahtl_fit(&source, &target, &k, &TransformPair::Offset, &cfg, &cfg, 3).unwrap();
        let p = res.source_model.predict(&target.x).unwrap();
        for ((label, y), p) in res.intermediate_labels.iter().zip(&target.y).zip(&p) {
            assert_eq!(*label, y - p);
        }
        // composed prediction equals manual composition
        let q = Points::linspace(0.0, 1.0, 11);
        let got = htl_predict(&res, &q).unwrap();
        let s = res.shift_model.predict(&q).unwrap();
        let ps = res.source_model.predict(&q).unwrap();
        for j in 0..11 {
            assert_eq!(got[j], ps[j] + s[j]);
        }
        // determinism
        assert_eq!(
            res,
            rahtl_fit(&source, &target, &k, &TransformPair::Offset, &cfg, &cfg, 3).unwrap()
        );
    }

    #[test]
    fn affine_rho_zero_ignores_shift() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let source = toy(30, 4, |t| t * t, 0.1);
        let target = toy(12, 5, |t| t * t + 1.0, 0.1);
        let cfg = AdaptiveConfig::new(vec![1.0, 2.0], 0.5, FilterKind::Krr);
        let pair = TransformPair::affine(0.3, 0.0).unwrap();
        let res = rahtl_fit(&source, &target, &k, &pair, &cfg, &cfg, 0).unwrap();
        let q = Points::linspace(0.0, 1.0, 9);
        assert_eq!(
            htl_predict(&res, &q).unwrap(),
            res.source_model.predict(&q).unwrap()
        );
    }

    #[test]
    fn tiny_target_rejected() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let source = toy(30, 4, |t| t, 0.1);
        let target = toy(1, 5, |t| t, 0.1);
        let cfg = AdaptiveConfig::new(vec![2.0], 0.5, FilterKind::Krr);
        assert!(rahtl_fit(&source, &target, &k, &TransformPair::Offset, &cfg, &cfg, 0).is_err());
    }
}
