//! Dispatch of a validated configuration to the study runners, the one-off
//! `fit` command and the self-check suite.

use crate::config::{parse_document, ConfigError, StudyConfig, StudyName};
use htl_core::evaluate::{
    render_chart, run_phase_study, run_rate_study, run_transfer_study, Scale, Series,
};
use htl_core::seed::str_key;
use htl_core::selfcheck::run_selfcheck;
use htl_core::{adaptive_fit, io, Error, KernelSpec, Points, StudyTable};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub study: Option<StudyName>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

/// Builds the effective configuration from an optional document and the
/// command-line overrides, then validates it.
pub fn resolve(document: Option<&str>, overrides: &Overrides) -> Result<StudyConfig, ConfigError> {
    let mut cfg = match (document, overrides.study) {
        (Some(text), _) => parse_document(text)?,
        (None, Some(study)) => StudyConfig::defaults(study),
        (None, None) => {
            return Err(ConfigError::Invalid {
                path: "study".into(),
                message: "no study given; pass one on the command line or in --config".into(),
            })
        }
    };
    if let Some(study) = overrides.study {
        cfg.study = study;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed_base = seed;
    }
    if let Some(threads) = overrides.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &overrides.out_dir {
        cfg.out_dir = out.clone();
    }
    if let Some(data) = &overrides.data {
        if cfg.study != StudyName::Fit {
            return Err(ConfigError::Invalid {
                path: "data".into(),
                message: format!("--data only applies to `fit`, not `{}`", cfg.study.label()),
            });
        }
        cfg.fit.get_or_insert_with(Default::default).data = Some(data.clone());
    }
    cfg.finalize()
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Human-readable result lines.
    pub report: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Why a run stopped. Configuration problems exit with 2, everything else
/// with 1.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) | Self::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

fn io_failure(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

/// Runs a validated configuration and writes its artifacts to `out_dir`.
pub fn run(cfg: &StudyConfig) -> Result<Outcome, Failure> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io_failure(&cfg.out_dir, e))?;
    let mut outcome = match cfg.study {
        StudyName::Rates | StudyName::AdaptiveRates => {
            study_outcome(cfg, run_rate_study(&cfg.rate_study(), cfg.threads)?)?
        }
        StudyName::Transfer => {
            study_outcome(cfg, run_transfer_study(&cfg.transfer_study(), cfg.threads)?)?
        }
        StudyName::Phase => study_outcome(cfg, run_phase_study(&cfg.phase_study(), cfg.threads)?)?,
        StudyName::Fit => run_fit(cfg)?,
        StudyName::Selfcheck => run_checks(cfg)?,
    };
    let config_path = cfg
        .out_dir
        .join(format!("{}_config.json", cfg.study.label()));
    std::fs::write(&config_path, cfg.to_json() + "\n").map_err(|e| io_failure(&config_path, e))?;
    outcome.files.push(config_path);
    Ok(outcome)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn study_outcome(cfg: &StudyConfig, table: StudyTable) -> Result<Outcome, Failure> {
    let files = table.write_artifacts(&cfg.out_dir)?;
    let mut report = Vec::new();
    for c in &table.curves {
        let mut line = format!("{} {}", table.study, c.filter);
        if let Some(v) = c.c {
            line += &format!(" C={v}");
        }
        if let Some(v) = c.xi {
            line += &format!(" xi={v}");
        }
        if let Some(v) = c.m_delta {
            line += &format!(" m_delta={v}");
        }
        line += &format!(
            ": slope {} (theory {}), r^2 {}",
            fmt_opt(c.slope, 4),
            fmt_opt(c.theoretical_slope, 4),
            fmt_opt(c.r_squared, 3)
        );
        if c.last_over_first.is_finite() {
            line += &format!(", last/first risk {:.3}", c.last_over_first);
        }
        if c.best {
            line += " [best]";
        }
        report.push(line);
    }
    Ok(Outcome { report, files })
}

fn run_checks(cfg: &StudyConfig) -> Result<Outcome, Failure> {
    let outcomes = run_selfcheck();
    let path = cfg.out_dir.join("selfcheck.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_failure(&path, e))?;
    w.write_record(["check", "passed", "detail"])
        .map_err(|e| io_failure(&path, e))?;
    for o in &outcomes {
        w.write_record([
            o.name,
            if o.passed { "true" } else { "false" },
            o.detail.as_str(),
        ])
        .map_err(|e| io_failure(&path, e))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;
    let report: Vec<String> = outcomes.iter().map(|o| o.to_string()).collect();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!(
            "{failed} self-check(s) failed:\n{}",
            report.join("\n")
        )));
    }
    Ok(Outcome {
        report,
        files: vec![path],
    })
}

fn run_fit(cfg: &StudyConfig) -> Result<Outcome, Failure> {
    let section = cfg.fit.clone().unwrap_or_default();
    let data_path = section
        .data
        .clone()
        .ok_or_else(|| Failure::Config("fit.data: a data file is required".into()))?;
    let file = File::open(&data_path)
        .map_err(|e| Failure::Numerical(format!("cannot read {}: {e}", data_path.display())))?;
    let data = io::dataset_from_reader(file)?;
    if data.dim() != 1 {
        return Err(Failure::Numerical(format!(
            "fit expects two columns (x, y), got {} input columns",
            data.dim()
        )));
    }
    let kernel = KernelSpec::gaussian(cfg.simulation.bandwidth)?;
    let adaptive = cfg.fit_adaptive();
    let fit = adaptive_fit(&data, &kernel, &adaptive, cfg.seed_base)?;

    let xs = data.x.as_slice();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let grid = Points::linspace(lo, hi, section.grid_points);
    let predictions = htl_core::Predictor::predict(&fit.model, &grid)?;

    let hash = str_key(&format!(
        "{:?}",
        (
            &section,
            cfg.simulation.bandwidth,
            cfg.simulation.split_fraction,
            cfg.seed_base
        )
    ));
    let pred_path = cfg.out_dir.join("fit_predictions.csv");
    let summary_path = cfg.out_dir.join("fit_summary.csv");
    let svg_path = cfg.out_dir.join("fit.svg");
    let mut w = csv::Writer::from_path(&pred_path).map_err(|e| io_failure(&pred_path, e))?;
    w.write_record(["x", "prediction"])
        .map_err(|e| io_failure(&pred_path, e))?;
    for (x, p) in grid.as_slice().iter().zip(&predictions) {
        w.write_record([x.to_string(), p.to_string()])
            .map_err(|e| io_failure(&pred_path, e))?;
    }
    w.flush().map_err(|e| io_failure(&pred_path, e))?;

    let validation_mse = fit.validation_errors[fit.chosen_index];
    let mut w = csv::Writer::from_path(&summary_path).map_err(|e| io_failure(&summary_path, e))?;
    w.write_record([
        "n",
        "filter",
        "C",
        "chosen_m",
        "chosen_lambda",
        "validation_mse",
        "seed_base",
        "config_hash",
    ])
    .map_err(|e| io_failure(&summary_path, e))?;
    w.write_record([
        data.len().to_string(),
        adaptive.filter.label().to_string(),
        adaptive.c.to_string(),
        fit.chosen_m.to_string(),
        fit.chosen_lambda.to_string(),
        validation_mse.to_string(),
        cfg.seed_base.to_string(),
        format!("{hash:016x}"),
    ])
    .map_err(|e| io_failure(&summary_path, e))?;
    w.flush().map_err(|e| io_failure(&summary_path, e))?;

    let series = [Series {
        label: format!("{} fit", adaptive.filter.label()),
        points: grid
            .as_slice()
            .iter()
            .copied()
            .zip(predictions.iter().copied())
            .collect(),
    }];
    let svg = render_chart(
        &format!(
            "Adaptive {} fit, n = {}",
            adaptive.filter.label(),
            data.len()
        ),
        "x",
        "prediction",
        &series,
        Scale::Linear,
        Scale::Linear,
    );
    std::fs::write(&svg_path, svg).map_err(|e| io_failure(&svg_path, e))?;

    Ok(Outcome {
        report: vec![format!(
            "fit {} on {} points: chosen m = {}, chosen lambda = {:.6e}, validation mse = {:.6e}",
            adaptive.filter.label(),
            data.len(),
            fit.chosen_m,
            fit.chosen_lambda,
            validation_mse
        )],
        files: vec![pred_path, summary_path, svg_path],
    })
}
