//! Excess-risk quadrature, rate regression and the simulation studies.

mod quadrature;
mod rate;
mod report;
mod studies;
mod svg;

pub use quadrature::simpson_integral;
pub use rate::{fit_rate, theoretical_slope, RateFit};
pub use report::{ResultRow, StudyTable, CSV_COLUMNS};
pub use studies::{
    run_phase_study, run_rate_study, run_transfer_study, xi_star, PhaseStudyConfig,
    RateStudyConfig, SimulationSettings, StudyKind, TransferEstimators, TransferStudyConfig,
};
pub use svg::{render_chart, render_line_chart, Scale, Series};

use crate::data::{linspace, Points};
use crate::error::{Error, Result};
use crate::simulate::TruthFunction;
use crate::spectral::Predictor;

/// Default number of Simpson nodes on `[0, 1]`.
pub const DEFAULT_N_TEST: usize = 5001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub n_test: usize,
    pub repeats: usize,
}

impl RiskEstimate {
    /// Averages per-repeat estimates in index order.
    pub fn average(estimates: &[RiskEstimate]) -> Result<Self> {
        let first = estimates
            .first()
            .ok_or_else(|| Error::Input("cannot average an empty list of risks".into()))?;
        let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
        Ok(Self {
            value: kahan_mean(&values),
            n_test: first.n_test,
            repeats: estimates.iter().map(|e| e.repeats).sum(),
        })
    }
}

/// Compensated sum in slice order.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn kahan_mean(values: &[f64]) -> f64 {
    kahan_sum(values) / values.len() as f64
}

/// Equispaced Simpson nodes on `[0, 1]`.
pub fn test_grid(n_test: usize) -> Result<Points> {
    check_n_test(n_test)?;
    Ok(Points::from_scalars(linspace(0.0, 1.0, n_test)))
}

fn check_n_test(n_test: usize) -> Result<()> {
    if n_test < 3 || n_test.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "n_test must be odd and at least 3, got {n_test}"
        )));
    }
    Ok(())
}

/// `∫₀¹ (f̂ − f₀)²` by composite Simpson on `n_test` nodes.
pub fn excess_risk(
    model: &dyn Predictor,
    truth: &TruthFunction,
    n_test: usize,
) -> Result<RiskEstimate> {
    let grid = test_grid(n_test)?;
    let pred = model.predict(&grid)?;
    let truth_vals: Vec<f64> = grid.as_slice().iter().map(|&x| truth.eval(x)).collect();
    Ok(RiskEstimate {
        value: risk_from_values(&pred, &truth_vals)?,
        n_test,
        repeats: 1,
    })
}

/// Simpson estimate of the squared `L₂[0,1]` distance from values on an
/// equispaced grid.
pub(crate) fn risk_from_values(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let sq: Vec<f64> = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .collect();
    // Simpson weights are positive, so only round-off could push this below 0
    Ok(simpson_integral(&sq, 0.0, 1.0)?.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::gp_sample_path;

    struct Constant(f64);

    impl Predictor for Constant {
        fn predict(&self, points: &Points) -> Result<Vec<f64>> {
            Ok(vec![self.0; points.len()])
        }
    }

    #[test]
    fn risk_examples() {
        let truth = gp_sample_path(2.01, 0.2, 101, 3).unwrap();
        let r = excess_risk(&truth, &truth, 5001).unwrap();
        assert!(r.value <= 1e-20);
        assert_eq!((r.n_test, r.repeats), (5001, 1));

        let r = excess_risk(&Constant(0.0), &truth, 1001).unwrap();
        let grid = linspace(0.0, 1.0, 1001);
        let sq: Vec<f64> = grid.iter().map(|&x| truth.eval(x).powi(2)).collect();
        let h = 1.0 / 1000.0;
        let mut direct = sq[0] + sq[1000];
        for (i, v) in sq.iter().enumerate().take(1000).skip(1) {
            direct += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        direct *= h / 3.0;
        assert!((r.value - direct).abs() <= 1e-13 * direct.max(1.0));

        let flat = TruthFunction::from_anchors(vec![0.0, 1.0], vec![0.25, 0.25], 1.0).unwrap();
        let r = excess_risk(&Constant(1.75), &flat, 5001).unwrap();
        assert!((r.value - 2.25).abs() <= 1e-12);
        assert!(excess_risk(&Constant(0.0), &flat, 5000).is_err());
    }

    #[test]
    fn compensated_average() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 1000));
        assert!((kahan_sum(&v) - (1.0 + 1e-13)).abs() < 1e-16);
        let est: Vec<RiskEstimate> = [0.5, 1.5, 1.0]
            .iter()
            .map(|&value| RiskEstimate {
                value,
                n_test: 5001,
                repeats: 1,
            })
            .collect();
        let avg = RiskEstimate::average(&est).unwrap();
        assert_eq!(avg.value, 1.0);
        assert_eq!(avg.repeats, 3);
        assert!(RiskEstimate::average(&[]).is_err());
    }
}
