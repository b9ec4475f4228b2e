//! Monte Carlo runners. Every repeat draws from seeds derived from
//! `(seed_base, cell, repeat)`, and cell averages are reduced in repeat order,
//! so results do not depend on the worker count.

use super::rate::{fit_rate, theoretical_slope};
use super::report::{CurveSummary, ResultRow, StudyTable};
use super::{check_n_test, kahan_mean, risk_from_values, test_grid};
use crate::adaptive::{adaptive_fit, AdaptiveConfig, SplitFit};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::kernels::{cross_kernel, KernelSpec};
use crate::seed::{derive_seed, float_key, str_key};
use crate::simulate::{
    make_regression_data, make_shift_scenario, make_transfer_datasets, sobolev_truth,
    ShiftScenario, TruthOptions, DEFAULT_NOISE_SD,
};
use crate::spectral::{
    lambda_schedule, FilterKind, FilterSpec, FittedModel, SpectralDecomposition,
};
use crate::transfer::{finetune, htl_predict, pretrain, TransformPair};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Rates,
    AdaptiveRates,
    Transfer,
    Phase,
}

impl StudyKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Rates => "rates",
            Self::AdaptiveRates => "adaptive-rates",
            Self::Transfer => "transfer",
            Self::Phase => "phase",
        }
    }
}

/// Settings shared by all studies.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub noise_sd: f64,
    /// Simpson nodes for the excess risk (odd).
    pub n_test: usize,
    pub truth: TruthOptions,
    /// Bandwidth of the Gaussian estimation kernel.
    pub kernel_bandwidth: f64,
    pub split_fraction: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            noise_sd: DEFAULT_NOISE_SD,
            n_test: super::DEFAULT_N_TEST,
            truth: TruthOptions::default(),
            kernel_bandwidth: 0.2,
            split_fraction: 0.5,
        }
    }
}

impl SimulationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::Config(format!(
                "noise_sd must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        check_n_test(self.n_test)?;
        if self.truth.n_grid < 16 || self.truth.n_grid.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_grid must be odd and at least 17, got {}",
                self.truth.n_grid
            )));
        }
        positive("bandwidth", self.truth.bandwidth)?;
        positive("kernel_bandwidth", self.kernel_bandwidth)?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }

    fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::gaussian(self.kernel_bandwidth)
    }

    fn adaptive(&self, candidates: &[f64], c: f64, filter: FilterKind) -> AdaptiveConfig {
        AdaptiveConfig {
            candidates: candidates.to_vec(),
            c,
            split_fraction: self.split_fraction,
            filter,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Config(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

fn config_hash<T: std::fmt::Debug>(cfg: &T) -> u64 {
    str_key(&format!("{cfg:?}"))
}

/// Runs `task` over `items` on a pool of `threads` workers, preserving input
/// order in the output.
fn run_tasks<I, O, F>(items: &[I], threads: usize, task: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    if threads <= 1 {
        return items.iter().map(&task).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| items.par_iter().map(&task).collect())
}

/// ξ* = (n_Q / ln n_Q)^{2m_δ/(2m_δ+d)} / (n_P / ln n_P)^{2m_P/(2m_P+d)}.
pub fn xi_star(n_q: usize, n_p: usize, m_source: f64, m_delta: f64, d: usize) -> f64 {
    let d = d as f64;
    let eff = |n: usize| n as f64 / (n as f64).ln();
    eff(n_q).powf(2.0 * m_delta / (2.0 * m_delta + d))
        / eff(n_p).powf(2.0 * m_source / (2.0 * m_source + d))
}

// ---------------------------------------------------------------- rates

#[derive(Debug, Clone, PartialEq)]
pub struct RateStudyConfig {
    /// Sobolev order of the truths.
    pub m: f64,
    pub d: usize,
    pub filters: Vec<FilterKind>,
    pub ns: Vec<usize>,
    pub repeats: usize,
    pub c_grid: Vec<f64>,
    /// Use the training/validation procedure instead of the oracle schedule.
    pub adaptive: bool,
    /// Candidate smoothness values for the adaptive procedure.
    pub candidates: Vec<f64>,
    /// Keep one truth for all repeats instead of redrawing it.
    pub fixed_truth: bool,
    pub seed_base: u64,
    pub settings: SimulationSettings,
}

impl RateStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d != 1 {
            return Err(Error::Config(format!(
                "simulated truths are one-dimensional, got d = {}",
                self.d
            )));
        }
        if !(self.m > self.d as f64 / 2.0) || !self.m.is_finite() {
            return Err(Error::Config(format!("m must exceed d/2, got {}", self.m)));
        }
        nonempty("filters", &self.filters)?;
        nonempty("ns", &self.ns)?;
        nonempty("c_grid", &self.c_grid)?;
        let min_n = if self.adaptive { 4 } else { 1 };
        if let Some(n) = self.ns.iter().find(|&&n| n < min_n) {
            return Err(Error::Config(format!(
                "ns entries must be at least {min_n}, got {n}"
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        for &c in &self.c_grid {
            positive("c_grid entry", c)?;
        }
        if self.adaptive {
            self.settings
                .adaptive(&self.candidates, 1.0, FilterKind::Krr)
                .validate(self.d)?;
        }
        self.settings.validate()
    }

    pub fn kind(&self) -> StudyKind {
        if self.adaptive {
            StudyKind::AdaptiveRates
        } else {
            StudyKind::Rates
        }
    }
}

/// Risk and slope for every `(filter, C, n)` cell. Within a repeat the truth
/// is shared across `n`, and each dataset is shared across filters and `C`.
pub fn run_rate_study(cfg: &RateStudyConfig, threads: usize) -> Result<StudyTable> {
    cfg.validate()?;
    let kernel = cfg.settings.kernel()?;
    let grid = test_grid(cfg.settings.n_test)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| cfg.ns.iter().map(move |&n| (r, n)))
        .collect();
    let n_fc = cfg.filters.len() * cfg.c_grid.len();

    let per_task = run_tasks(&tasks, threads, |&(r, n)| -> Result<Vec<f64>> {
        let truth_seed = if cfg.fixed_truth {
            derive_seed(cfg.seed_base, &[str_key("truth")])
        } else {
            derive_seed(cfg.seed_base, &[str_key("truth"), r as u64])
        };
        let truth = sobolev_truth(cfg.m, &cfg.settings.truth, truth_seed)?;
        let truth_vals: Vec<f64> = grid.as_slice().iter().map(|&x| truth.eval(x)).collect();
        let data_seed = derive_seed(cfg.seed_base, &[str_key("data"), r as u64, n as u64]);
        let data = make_regression_data(&truth, n, cfg.settings.noise_sd, data_seed)?;

        let mut risks = Vec::with_capacity(n_fc);
        if cfg.adaptive {
            let split_seed = derive_seed(cfg.seed_base, &[str_key("split"), r as u64, n as u64]);
            let split = SplitFit::new(&data, &kernel, cfg.settings.split_fraction, split_seed)?;
            let cross = cross_kernel(&grid, split.train_points(), &kernel)?;
            for &filter in &cfg.filters {
                for &c in &cfg.c_grid {
                    let fit = split.select(&cfg.settings.adaptive(&cfg.candidates, c, filter))?;
                    risks.push(risk_from_values(
                        &fit.model.predict_from_cross(&cross),
                        &truth_vals,
                    )?);
                }
            }
        } else {
            let decomposition = SpectralDecomposition::new(&data.x, &kernel)?;
            let cross = cross_kernel(&grid, &data.x, &kernel)?;
            for &filter in &cfg.filters {
                for &c in &cfg.c_grid {
                    let lambda = lambda_schedule(n, cfg.m, cfg.d, c);
                    let alpha = decomposition
                        .dual_coefficients(&data.y, &FilterSpec::new(filter, lambda)?)?;
                    let model = FittedModel::new(data.x.clone(), alpha, kernel)?;
                    risks.push(risk_from_values(
                        &model.predict_from_cross(&cross),
                        &truth_vals,
                    )?);
                }
            }
        }
        Ok(risks)
    })?;

    let hash = config_hash(cfg);
    let study = cfg.kind().label();
    let theory = theoretical_slope(cfg.m, cfg.d);
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (fi, filter) in cfg.filters.iter().enumerate() {
        let mut filter_curves: Vec<CurveSummary> = Vec::new();
        for (ci, &c) in cfg.c_grid.iter().enumerate() {
            let k = fi * cfg.c_grid.len() + ci;
            let means: Vec<f64> = cfg
                .ns
                .iter()
                .enumerate()
                .map(|(ni, _)| {
                    let vals: Vec<f64> = (0..cfg.repeats)
                        .map(|r| per_task[r * cfg.ns.len() + ni][k])
                        .collect();
                    kahan_mean(&vals)
                })
                .collect();
            let fit = fit_rate(&cfg.ns, &means, cfg.m, cfg.d).ok();
            for (&n, &mean_risk) in cfg.ns.iter().zip(&means) {
                rows.push(ResultRow {
                    study: study.into(),
                    filter: filter.label().into(),
                    m: Some(cfg.m),
                    c: Some(c),
                    n: Some(n),
                    repeat_count: cfg.repeats,
                    mean_risk,
                    slope: fit.map(|f| f.slope),
                    theoretical_slope: Some(theory),
                    r_squared: fit.map(|f| f.r_squared),
                    seed_base: cfg.seed_base,
                    config_hash: hash,
                    ..Default::default()
                });
            }
            filter_curves.push(CurveSummary {
                filter: filter.label().into(),
                c: Some(c),
                slope: fit.map(|f| f.slope),
                theoretical_slope: Some(theory),
                r_squared: fit.map(|f| f.r_squared),
                last_over_first: means[means.len() - 1] / means[0],
                ..Default::default()
            });
        }
        mark_best(&mut filter_curves);
        curves.extend(filter_curves);
    }
    Ok(StudyTable {
        study: study.into(),
        x_axis: "n",
        rows,
        curves,
    })
}

/// Flags the curve whose slope is closest to its theoretical value; the
/// first one wins ties.
fn mark_best(curves: &mut [CurveSummary]) {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in curves.iter().enumerate() {
        if let (Some(s), Some(t)) = (c.slope, c.theoretical_slope) {
            let gap = (s - t).abs();
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((i, gap));
            }
        }
    }
    if let Some((i, _)) = best {
        curves[i].best = true;
    }
}

// ---------------------------------------------------------------- transfer

/// Settings of the two-phase estimator shared by the transfer and phase
/// studies.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferEstimators {
    pub candidates: Vec<f64>,
    /// Schedule constants of the pre-training, fine-tuning and baseline fits.
    pub c_source: f64,
    pub c_shift: f64,
    pub c_baseline: f64,
    pub source_filter: FilterKind,
    pub shift_filter: FilterKind,
    /// Filter of the target-only adaptive baseline.
    pub baseline_filter: FilterKind,
}

impl Default for TransferEstimators {
    fn default() -> Self {
        Self {
            candidates: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            c_source: 0.25,
            c_shift: 1.0,
            c_baseline: 0.25,
            source_filter: FilterKind::GradientFlow,
            shift_filter: FilterKind::Krr,
            baseline_filter: FilterKind::Krr,
        }
    }
}

impl TransferEstimators {
    fn validate(&self, settings: &SimulationSettings) -> Result<()> {
        for c in [self.c_source, self.c_shift, self.c_baseline] {
            settings
                .adaptive(&self.candidates, c, self.source_filter)
                .validate(1)?;
        }
        Ok(())
    }

    fn rahtl_label(&self) -> String {
        format!(
            "rahtl-{}-{}",
            self.source_filter.label(),
            self.shift_filter.label()
        )
    }

    fn baseline_label(&self) -> String {
        format!("target-only-{}", self.baseline_filter.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferStudyConfig {
    pub m_source: f64,
    pub m_deltas: Vec<f64>,
    pub xis: Vec<f64>,
    pub n_targets: Vec<usize>,
    /// `n_P = round(n_Q^source_exponent)`.
    pub source_exponent: f64,
    pub repeats: usize,
    pub estimators: TransferEstimators,
    pub seed_base: u64,
    pub settings: SimulationSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStudyConfig {
    pub m_source: f64,
    pub m_delta: f64,
    pub n_target: usize,
    pub n_sources: Vec<usize>,
    pub xis: Vec<f64>,
    pub repeats: usize,
    pub estimators: TransferEstimators,
    pub seed_base: u64,
    pub settings: SimulationSettings,
}

fn check_orders(m_source: f64, m_deltas: &[f64]) -> Result<()> {
    if !(m_source > 0.5) || !m_source.is_finite() {
        return Err(Error::Config(format!(
            "m_P must exceed d/2, got {m_source}"
        )));
    }
    for &m in m_deltas {
        if !(m > 0.5) || !m.is_finite() {
            return Err(Error::Config(format!("m_delta must exceed d/2, got {m}")));
        }
    }
    Ok(())
}

fn check_xis(xis: &[f64]) -> Result<()> {
    nonempty("xi", xis)?;
    for &xi in xis {
        if !(xi > 0.0) || !xi.is_finite() {
            return Err(Error::Config(format!("xi must be positive, got {xi}")));
        }
    }
    Ok(())
}

impl TransferStudyConfig {
    pub fn validate(&self) -> Result<()> {
        check_orders(self.m_source, &self.m_deltas)?;
        nonempty("m_delta", &self.m_deltas)?;
        check_xis(&self.xis)?;
        nonempty("n_Q", &self.n_targets)?;
        if let Some(n) = self.n_targets.iter().find(|&&n| n < 4) {
            return Err(Error::Config(format!(
                "n_Q entries must be at least 4, got {n}"
            )));
        }
        if !(self.source_exponent > 0.0) || !self.source_exponent.is_finite() {
            return Err(Error::Config(format!(
                "source exponent must be positive, got {}",
                self.source_exponent
            )));
        }
        if self.n_targets.iter().any(|&n| self.source_size(n) < 4) {
            return Err(Error::Config("every n_P must be at least 4".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        self.estimators.validate(&self.settings)?;
        self.settings.validate()
    }

    pub fn source_size(&self, n_q: usize) -> usize {
        (n_q as f64).powf(self.source_exponent).round() as usize
    }
}

impl PhaseStudyConfig {
    pub fn validate(&self) -> Result<()> {
        check_orders(self.m_source, &[self.m_delta])?;
        check_xis(&self.xis)?;
        nonempty("n_P", &self.n_sources)?;
        if self.n_target < 4 || self.n_sources.iter().any(|&n| n < 4) {
            return Err(Error::Config("n_Q and every n_P must be at least 4".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        self.estimators.validate(&self.settings)?;
        self.settings.validate()
    }
}

struct TransferCellRisks {
    /// One entry per ξ.
    rahtl: Vec<f64>,
    baseline: Option<Vec<f64>>,
}

/// One repeat of one `(m_δ, n_Q, n_P)` cell, for every ξ. The source and
/// shift functions depend only on the repeat (and m_δ), and the inputs and
/// noise only on `(repeat, n_Q, n_P)`, so the source data and the
/// pre-trained model are shared across ξ.
#[allow(clippy::too_many_arguments)]
fn transfer_repeat(
    m_source: f64,
    m_delta: f64,
    xis: &[f64],
    n_p: usize,
    n_q: usize,
    repeat: usize,
    with_baseline: bool,
    est: &TransferEstimators,
    settings: &SimulationSettings,
    seed_base: u64,
    grid: &Points,
) -> Result<TransferCellRisks> {
    let kernel = settings.kernel()?;
    let r = repeat as u64;
    let truth_seeds = (
        derive_seed(
            seed_base,
            &[str_key("source-truth"), float_key(m_source), r],
        ),
        derive_seed(seed_base, &[str_key("shift-truth"), float_key(m_delta), r]),
    );
    let data_seed = derive_seed(seed_base, &[str_key("data"), r, n_q as u64, n_p as u64]);
    let fit_seed = derive_seed(seed_base, &[str_key("fit"), r, n_q as u64, n_p as u64]);
    let baseline_seed = derive_seed(seed_base, &[str_key("baseline"), r, n_q as u64]);
    let cfg_source = settings.adaptive(&est.candidates, est.c_source, est.source_filter);
    let cfg_shift = settings.adaptive(&est.candidates, est.c_shift, est.shift_filter);
    let cfg_base = settings.adaptive(&est.candidates, est.c_baseline, est.baseline_filter);

    let mut pre = None;
    let mut rahtl = Vec::with_capacity(xis.len());
    let mut baseline = Vec::with_capacity(xis.len());
    for &xi in xis {
        let scenario: ShiftScenario = make_shift_scenario(
            m_source,
            m_delta,
            xi,
            n_p,
            n_q,
            truth_seeds,
            &settings.truth,
            settings.noise_sd,
        )?;
        let (source, target) =
            make_transfer_datasets(&scenario, &TransformPair::Offset, data_seed)?;
        let truth_vals: Vec<f64> = grid
            .as_slice()
            .iter()
            .map(|&x| scenario.target_eval(x))
            .collect();
        if pre.is_none() {
            pre = Some(pretrain(&source, &kernel, &cfg_source, fit_seed)?);
        }
        let pre_fit = pre.as_ref().expect("set above");
        let htl = finetune(
            pre_fit,
            &target,
            &kernel,
            &TransformPair::Offset,
            &cfg_shift,
            fit_seed,
        )?;
        rahtl.push(risk_from_values(&htl_predict(&htl, grid)?, &truth_vals)?);
        if with_baseline {
            let fit = adaptive_fit(&target, &kernel, &cfg_base, baseline_seed)?;
            let cross = cross_kernel(grid, &fit.model.train_points, &kernel)?;
            baseline.push(risk_from_values(
                &fit.model.predict_from_cross(&cross),
                &truth_vals,
            )?);
        }
    }
    Ok(TransferCellRisks {
        rahtl,
        baseline: with_baseline.then_some(baseline),
    })
}

/// RAHTL against the target-only adaptive baseline over `n_Q`, with
/// `n_P = round(n_Q^exponent)`.
pub fn run_transfer_study(cfg: &TransferStudyConfig, threads: usize) -> Result<StudyTable> {
    cfg.validate()?;
    let grid = test_grid(cfg.settings.n_test)?;
    let tasks: Vec<(usize, usize, usize)> = (0..cfg.m_deltas.len())
        .flat_map(|mi| {
            (0..cfg.repeats).flat_map(move |r| cfg.n_targets.iter().map(move |&n| (mi, r, n)))
        })
        .collect();
    let results = run_tasks(&tasks, threads, |&(mi, r, n_q)| {
        transfer_repeat(
            cfg.m_source,
            cfg.m_deltas[mi],
            &cfg.xis,
            cfg.source_size(n_q),
            n_q,
            r,
            true,
            &cfg.estimators,
            &cfg.settings,
            cfg.seed_base,
            &grid,
        )
    })?;

    let hash = config_hash(cfg);
    let study = StudyKind::Transfer.label();
    let labels = [
        cfg.estimators.rahtl_label(),
        cfg.estimators.baseline_label(),
    ];
    let nq = cfg.n_targets.len();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (mi, &m_delta) in cfg.m_deltas.iter().enumerate() {
        for (xi_i, &xi) in cfg.xis.iter().enumerate() {
            for (est_i, label) in labels.iter().enumerate() {
                let means: Vec<f64> = (0..nq)
                    .map(|ni| {
                        let vals: Vec<f64> = (0..cfg.repeats)
                            .map(|r| {
                                let cell = &results[(mi * cfg.repeats + r) * nq + ni];
                                if est_i == 0 {
                                    cell.rahtl[xi_i]
                                } else {
                                    cell.baseline.as_ref().expect("baseline requested")[xi_i]
                                }
                            })
                            .collect();
                        kahan_mean(&vals)
                    })
                    .collect();
                // the baseline only sees the target function, whose
                // smoothness is the smaller of the two orders
                let m_rate = if est_i == 0 {
                    m_delta
                } else {
                    m_delta.min(cfg.m_source)
                };
                let fit = fit_rate(&cfg.n_targets, &means, m_rate, 1).ok();
                let curve_c = if est_i == 0 {
                    cfg.estimators.c_shift
                } else {
                    cfg.estimators.c_baseline
                };
                let theory = theoretical_slope(m_rate, 1);
                for (&n_q, &mean_risk) in cfg.n_targets.iter().zip(&means) {
                    let n_p = cfg.source_size(n_q);
                    rows.push(ResultRow {
                        study: study.into(),
                        filter: label.clone(),
                        m: Some(m_rate),
                        m_p: Some(cfg.m_source),
                        m_delta: Some(m_delta),
                        xi: Some(xi),
                        c: Some(curve_c),
                        n: Some(n_q),
                        n_p: Some(n_p),
                        n_q: Some(n_q),
                        repeat_count: cfg.repeats,
                        mean_risk,
                        slope: fit.map(|f| f.slope),
                        theoretical_slope: Some(theory),
                        r_squared: fit.map(|f| f.r_squared),
                        seed_base: cfg.seed_base,
                        xi_star: Some(xi_star(n_q, n_p, cfg.m_source, m_delta, 1)),
                        config_hash: hash,
                    });
                }
                curves.push(CurveSummary {
                    filter: label.clone(),
                    c: Some(curve_c),
                    xi: Some(xi),
                    m_delta: Some(m_delta),
                    slope: fit.map(|f| f.slope),
                    theoretical_slope: Some(theory),
                    r_squared: fit.map(|f| f.r_squared),
                    best: false,
                    last_over_first: means[nq - 1] / means[0],
                });
            }
        }
    }
    Ok(StudyTable {
        study: study.into(),
        x_axis: "n_Q",
        rows,
        curves,
    })
}

/// RAHTL risk against `n_P` at fixed `n_Q`, one curve per ξ.
pub fn run_phase_study(cfg: &PhaseStudyConfig, threads: usize) -> Result<StudyTable> {
    cfg.validate()?;
    let grid = test_grid(cfg.settings.n_test)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| cfg.n_sources.iter().map(move |&n| (r, n)))
        .collect();
    let results = run_tasks(&tasks, threads, |&(r, n_p)| {
        transfer_repeat(
            cfg.m_source,
            cfg.m_delta,
            &cfg.xis,
            n_p,
            cfg.n_target,
            r,
            false,
            &cfg.estimators,
            &cfg.settings,
            cfg.seed_base,
            &grid,
        )
    })?;

    let hash = config_hash(cfg);
    let study = StudyKind::Phase.label();
    let label = cfg.estimators.rahtl_label();
    let np = cfg.n_sources.len();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (xi_i, &xi) in cfg.xis.iter().enumerate() {
        let means: Vec<f64> = (0..np)
            .map(|pi| {
                let vals: Vec<f64> = (0..cfg.repeats)
                    .map(|r| results[r * np + pi].rahtl[xi_i])
                    .collect();
                kahan_mean(&vals)
            })
            .collect();
        for (&n_p, &mean_risk) in cfg.n_sources.iter().zip(&means) {
            rows.push(ResultRow {
                study: study.into(),
                filter: label.clone(),
                m: Some(cfg.m_delta),
                m_p: Some(cfg.m_source),
                m_delta: Some(cfg.m_delta),
                xi: Some(xi),
                c: Some(cfg.estimators.c_shift),
                n: Some(n_p),
                n_p: Some(n_p),
                n_q: Some(cfg.n_target),
                repeat_count: cfg.repeats,
                mean_risk,
                seed_base: cfg.seed_base,
                xi_star: Some(xi_star(cfg.n_target, n_p, cfg.m_source, cfg.m_delta, 1)),
                config_hash: hash,
                ..Default::default()
            });
        }
        curves.push(CurveSummary {
            filter: label.clone(),
            c: Some(cfg.estimators.c_shift),
            xi: Some(xi),
            m_delta: Some(cfg.m_delta),
            last_over_first: means[np - 1] / means[0],
            ..Default::default()
        });
    }
    Ok(StudyTable {
        study: study.into(),
        x_axis: "n_P",
        rows,
        curves,
    })
}
