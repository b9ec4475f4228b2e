//! JSON study configuration: strict schema, documented defaults, and
//! validation errors that carry the offending field path.

use htl_core::evaluate::{
    PhaseStudyConfig, RateStudyConfig, SimulationSettings, StudyKind, TransferEstimators,
    TransferStudyConfig,
};
use htl_core::{AdaptiveConfig, FilterKind, TruthOptions};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyName {
    Rates,
    AdaptiveRates,
    Transfer,
    Phase,
    Fit,
    Selfcheck,
}

impl StudyName {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Rates => "rates",
            Self::AdaptiveRates => "adaptive-rates",
            Self::Transfer => "transfer",
            Self::Phase => "phase",
            Self::Fit => "fit",
            Self::Selfcheck => "selfcheck",
        }
    }

    /// Name of the study-specific section, if the study has one.
    fn section(&self) -> Option<&'static str> {
        match self {
            Self::Rates | Self::AdaptiveRates => Some("rates"),
            Self::Transfer => Some("transfer"),
            Self::Phase => Some("phase"),
            Self::Fit => Some("fit"),
            Self::Selfcheck => None,
        }
    }
}

impl std::str::FromStr for StudyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            format!("unknown study `{s}`, expected one of rates, adaptive-rates, transfer, phase, fit, selfcheck")
        })
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyName,
    #[serde(default = "default_seed")]
    pub seed_base: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
}

fn default_seed() -> u64 {
    1
}

fn default_threads() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("htl-out")
}

fn default_candidates() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub noise_sd: f64,
    /// Simpson nodes for the excess risk (odd).
    pub n_test: usize,
    /// Spline anchors of the simulated truths (odd).
    pub n_grid: usize,
    /// Matérn bandwidth of the simulated truths.
    pub truth_bandwidth: f64,
    /// Gaussian bandwidth of the estimators.
    pub bandwidth: f64,
    pub split_fraction: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = SimulationSettings::default();
        Self {
            noise_sd: s.noise_sd,
            n_test: s.n_test,
            n_grid: s.truth.n_grid,
            truth_bandwidth: s.truth.bandwidth,
            bandwidth: s.kernel_bandwidth,
            split_fraction: s.split_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub m: f64,
    pub d: usize,
    pub filters: Vec<FilterKind>,
    pub ns: Vec<usize>,
    pub repeats: usize,
    pub c_grid: Vec<f64>,
    pub candidates: Vec<f64>,
    pub fixed_truth: bool,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            m: 2.0,
            d: 1,
            filters: FilterKind::ALL.to_vec(),
            ns: (1..=10).map(|k| 100 * k).collect(),
            repeats: 20,
            c_grid: vec![0.25, 0.5, 1.0, 2.0],
            candidates: default_candidates(),
            fixed_truth: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub candidates: Vec<f64>,
    pub c_source: f64,
    pub c_shift: f64,
    pub c_baseline: f64,
    pub source_filter: FilterKind,
    pub shift_filter: FilterKind,
    pub baseline_filter: FilterKind,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let e = TransferEstimators::default();
        Self {
            candidates: e.candidates,
            c_source: e.c_source,
            c_shift: e.c_shift,
            c_baseline: e.c_baseline,
            source_filter: e.source_filter,
            shift_filter: e.shift_filter,
            baseline_filter: e.baseline_filter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferSection {
    pub m_source: f64,
    pub m_deltas: Vec<f64>,
    pub xis: Vec<f64>,
    pub n_targets: Vec<usize>,
    /// `n_P = round(n_Q^source_exponent)`.
    pub source_exponent: f64,
    pub repeats: usize,
    pub estimators: EstimatorSection,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self {
            m_source: 1.0,
            m_deltas: vec![3.0],
            xis: vec![0.25],
            n_targets: (4..=15).map(|k| 10 * k).collect(),
            source_exponent: 1.5,
            repeats: 30,
            estimators: EstimatorSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub m_source: f64,
    pub m_delta: f64,
    pub n_target: usize,
    pub n_sources: Vec<usize>,
    pub xis: Vec<f64>,
    pub repeats: usize,
    pub estimators: EstimatorSection,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            m_source: 1.0,
            m_delta: 3.0,
            n_target: 200,
            n_sources: vec![200, 600, 1000, 1500],
            xis: vec![4.0, 0.25],
            repeats: 30,
            estimators: EstimatorSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Two-column `x,y` CSV file.
    pub data: Option<PathBuf>,
    pub filter: FilterKind,
    pub c: f64,
    pub candidates: Vec<f64>,
    /// Number of equispaced prediction points spanning the observed inputs.
    pub grid_points: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            data: None,
            filter: FilterKind::Krr,
            c: 1.0,
            candidates: default_candidates(),
            grid_points: 1001,
        }
    }
}

/// Why a configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Invalid {
        path: String,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse {
                line,
                column,
                message,
            } => {
                write!(
                    f,
                    "config parse error at line {line}, column {column}: {message}"
                )
            }
            Self::Invalid { path, message } => {
                write!(f, "invalid config field `{path}`: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses, fills defaults and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<StudyConfig, ConfigError> {
    parse_document(text)?.finalize()
}

/// Parses a document against the schema without validating values, so
/// command-line overrides can be applied first.
pub fn parse_document(text: &str) -> Result<StudyConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl StudyConfig {
    /// A configuration of all defaults for `study`.
    pub fn defaults(study: StudyName) -> Self {
        Self {
            study,
            seed_base: default_seed(),
            threads: default_threads(),
            out_dir: default_out_dir(),
            simulation: SimulationSection::default(),
            rates: None,
            transfer: None,
            phase: None,
            fit: None,
        }
    }

    /// Rejects sections the study does not use, fills the one it does, and
    /// validates every field.
    pub fn finalize(mut self) -> Result<Self, ConfigError> {
        let wanted = self.study.section();
        let present = [
            ("rates", self.rates.is_some()),
            ("transfer", self.transfer.is_some()),
            ("phase", self.phase.is_some()),
            ("fit", self.fit.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && Some(name) != wanted {
                return Err(invalid(
                    name,
                    format!("section is not used by study `{}`", self.study.label()),
                ));
            }
        }
        match self.study {
            StudyName::Rates | StudyName::AdaptiveRates => {
                self.rates.get_or_insert_with(Default::default);
            }
            StudyName::Transfer => {
                self.transfer.get_or_insert_with(Default::default);
            }
            StudyName::Phase => {
                self.phase.get_or_insert_with(Default::default);
            }
            StudyName::Fit => {
                self.fit.get_or_insert_with(Default::default);
            }
            StudyName::Selfcheck => {}
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks every field against the preconditions of the dispatched runner.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return Err(invalid("threads", "must be at least 1"));
        }
        self.simulation.validate()?;
        if let Some(r) = &self.rates {
            r.validate(self.study == StudyName::AdaptiveRates)?;
        }
        if let Some(t) = &self.transfer {
            t.validate()?;
        }
        if let Some(p) = &self.phase {
            p.validate()?;
        }
        if let Some(f) = &self.fit {
            f.validate()?;
        }
        // The runners re-check their own preconditions; surface any rule
        // not mirrored above as a config error before any work starts.
        let core = match self.study {
            StudyName::Rates | StudyName::AdaptiveRates => self.rate_study().validate(),
            StudyName::Transfer => self.transfer_study().validate(),
            StudyName::Phase => self.phase_study().validate(),
            StudyName::Fit => self.fit_adaptive().validate(1),
            StudyName::Selfcheck => Ok(()),
        };
        core.map_err(|e| invalid(self.study.section().unwrap_or("study"), e.to_string()))
    }

    pub fn settings(&self) -> SimulationSettings {
        let s = &self.simulation;
        SimulationSettings {
            noise_sd: s.noise_sd,
            n_test: s.n_test,
            truth: TruthOptions {
                bandwidth: s.truth_bandwidth,
                n_grid: s.n_grid,
            },
            kernel_bandwidth: s.bandwidth,
            split_fraction: s.split_fraction,
        }
    }

    /// Core configuration of a rates or adaptive-rates study.
    pub fn rate_study(&self) -> RateStudyConfig {
        let r = self.rates.clone().unwrap_or_default();
        RateStudyConfig {
            m: r.m,
            d: r.d,
            filters: r.filters,
            ns: r.ns,
            repeats: r.repeats,
            c_grid: r.c_grid,
            adaptive: self.study == StudyName::AdaptiveRates,
            candidates: r.candidates,
            fixed_truth: r.fixed_truth,
            seed_base: self.seed_base,
            settings: self.settings(),
        }
    }

    pub fn transfer_study(&self) -> TransferStudyConfig {
        let t = self.transfer.clone().unwrap_or_default();
        TransferStudyConfig {
            m_source: t.m_source,
            m_deltas: t.m_deltas,
            xis: t.xis,
            n_targets: t.n_targets,
            source_exponent: t.source_exponent,
            repeats: t.repeats,
            estimators: t.estimators.to_core(),
            seed_base: self.seed_base,
            settings: self.settings(),
        }
    }

    pub fn phase_study(&self) -> PhaseStudyConfig {
        let p = self.phase.clone().unwrap_or_default();
        PhaseStudyConfig {
            m_source: p.m_source,
            m_delta: p.m_delta,
            n_target: p.n_target,
            n_sources: p.n_sources,
            xis: p.xis,
            repeats: p.repeats,
            estimators: p.estimators.to_core(),
            seed_base: self.seed_base,
            settings: self.settings(),
        }
    }

    /// Adaptive configuration of the `fit` command.
    pub fn fit_adaptive(&self) -> AdaptiveConfig {
        let f = self.fit.clone().unwrap_or_default();
        AdaptiveConfig {
            candidates: f.candidates,
            c: f.c,
            split_fraction: self.simulation.split_fraction,
            filter: f.filter,
        }
    }

    /// Core study kind, for the studies backed by a Monte Carlo runner.
    pub fn study_kind(&self) -> Option<StudyKind> {
        match self.study {
            StudyName::Rates => Some(StudyKind::Rates),
            StudyName::AdaptiveRates => Some(StudyKind::AdaptiveRates),
            StudyName::Transfer => Some(StudyKind::Transfer),
            StudyName::Phase => Some(StudyKind::Phase),
            StudyName::Fit | StudyName::Selfcheck => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

impl EstimatorSection {
    fn to_core(&self) -> TransferEstimators {
        TransferEstimators {
            candidates: self.candidates.clone(),
            c_source: self.c_source,
            c_shift: self.c_shift,
            c_baseline: self.c_baseline,
            source_filter: self.source_filter,
            shift_filter: self.shift_filter,
            baseline_filter: self.baseline_filter,
        }
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        candidates(&format!("{path}.candidates"), &self.candidates)?;
        positive(&format!("{path}.c_source"), self.c_source)?;
        positive(&format!("{path}.c_shift"), self.c_shift)?;
        positive(&format!("{path}.c_baseline"), self.c_baseline)
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {v}")))
    }
}

fn order(path: &str, m: f64) -> Result<(), ConfigError> {
    if m > 0.5 && m.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            path,
            format!("smoothness must exceed d/2 = 0.5, got {m}"),
        ))
    }
}

fn nonempty<T>(path: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(invalid(path, "must not be empty"))
    } else {
        Ok(())
    }
}

fn each_positive(path: &str, v: &[f64]) -> Result<(), ConfigError> {
    nonempty(path, v)?;
    for (i, &x) in v.iter().enumerate() {
        positive(&format!("{path}[{i}]"), x)?;
    }
    Ok(())
}

fn sizes_at_least(path: &str, v: &[usize], min: usize) -> Result<(), ConfigError> {
    nonempty(path, v)?;
    for (i, &n) in v.iter().enumerate() {
        if n < min {
            return Err(invalid(
                format!("{path}[{i}]"),
                format!("must be at least {min}, got {n}"),
            ));
        }
    }
    Ok(())
}

fn candidates(path: &str, v: &[f64]) -> Result<(), ConfigError> {
    nonempty(path, v)?;
    for (i, &m) in v.iter().enumerate() {
        order(&format!("{path}[{i}]"), m)?;
        if i > 0 && m < v[i - 1] {
            return Err(invalid(
                format!("{path}[{i}]"),
                "candidates must be nondecreasing",
            ));
        }
    }
    Ok(())
}

fn repeats(path: &str, r: usize) -> Result<(), ConfigError> {
    if r == 0 {
        Err(invalid(path, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl SimulationSection {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid(
                "simulation.noise_sd",
                format!("must be nonnegative, got {}", self.noise_sd),
            ));
        }
        if self.n_test < 3 || self.n_test.is_multiple_of(2) {
            return Err(invalid(
                "simulation.n_test",
                format!("must be odd and at least 3, got {}", self.n_test),
            ));
        }
        if self.n_grid < 17 || self.n_grid.is_multiple_of(2) {
            return Err(invalid(
                "simulation.n_grid",
                format!("must be odd and at least 17, got {}", self.n_grid),
            ));
        }
        positive("simulation.truth_bandwidth", self.truth_bandwidth)?;
        positive("simulation.bandwidth", self.bandwidth)?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(invalid(
                "simulation.split_fraction",
                format!("must lie in (0, 1), got {}", self.split_fraction),
            ));
        }
        Ok(())
    }
}

impl RatesSection {
    fn validate(&self, adaptive: bool) -> Result<(), ConfigError> {
        if self.d != 1 {
            return Err(invalid(
                "rates.d",
                format!("simulated truths are one-dimensional, got {}", self.d),
            ));
        }
        order("rates.m", self.m)?;
        nonempty("rates.filters", &self.filters)?;
        sizes_at_least("rates.ns", &self.ns, if adaptive { 4 } else { 1 })?;
        repeats("rates.repeats", self.repeats)?;
        each_positive("rates.c_grid", &self.c_grid)?;
        if adaptive {
            candidates("rates.candidates", &self.candidates)?;
        }
        Ok(())
    }
}

impl TransferSection {
    fn validate(&self) -> Result<(), ConfigError> {
        order("transfer.m_source", self.m_source)?;
        nonempty("transfer.m_deltas", &self.m_deltas)?;
        for (i, &m) in self.m_deltas.iter().enumerate() {
            order(&format!("transfer.m_deltas[{i}]"), m)?;
        }
        each_positive("transfer.xis", &self.xis)?;
        sizes_at_least("transfer.n_targets", &self.n_targets, 4)?;
        positive("transfer.source_exponent", self.source_exponent)?;
        for (i, &n) in self.n_targets.iter().enumerate() {
            if (n as f64).powf(self.source_exponent).round() < 4.0 {
                return Err(invalid(
                    format!("transfer.n_targets[{i}]"),
                    format!(
                        "implied source size n_P = round({n}^{}) is below 4",
                        self.source_exponent
                    ),
                ));
            }
        }
        repeats("transfer.repeats", self.repeats)?;
        self.estimators.validate("transfer.estimators")
    }
}

impl PhaseSection {
    fn validate(&self) -> Result<(), ConfigError> {
        order("phase.m_source", self.m_source)?;
        order("phase.m_delta", self.m_delta)?;
        if self.n_target < 4 {
            return Err(invalid(
                "phase.n_target",
                format!("must be at least 4, got {}", self.n_target),
            ));
        }
        sizes_at_least("phase.n_sources", &self.n_sources, 4)?;
        each_positive("phase.xis", &self.xis)?;
        repeats("phase.repeats", self.repeats)?;
        self.estimators.validate("phase.estimators")
    }
}

impl FitSection {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.data.is_none() {
            return Err(invalid(
                "fit.data",
                "a data file is required (set it here or pass --data)",
            ));
        }
        positive("fit.c", self.c)?;
        candidates("fit.candidates", &self.candidates)?;
        if self.grid_points < 2 {
            return Err(invalid(
                "fit.grid_points",
                format!("must be at least 2, got {}", self.grid_points),
            ));
        }
        Ok(())
    }
}
