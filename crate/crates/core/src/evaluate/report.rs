use super::svg::{render_line_chart, Series};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_COLUMNS: [&str; 18] = [
    "study",
    "filter",
    "m",
    "m_P",
    "m_delta",
    "xi",
    "C",
    "n",
    "n_P",
    "n_Q",
    "repeat_count",
    "mean_risk",
    "slope",
    "theoretical_slope",
    "r_squared",
    "seed_base",
    "xi_star",
    "config_hash",
];

/// One averaged study cell. Absent coordinates serialize as empty fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub study: String,
    /// Filter label, or estimator label for transfer studies.
    pub filter: String,
    pub m: Option<f64>,
    pub m_p: Option<f64>,
    pub m_delta: Option<f64>,
    pub xi: Option<f64>,
    pub c: Option<f64>,
    pub n: Option<usize>,
    pub n_p: Option<usize>,
    pub n_q: Option<usize>,
    pub repeat_count: usize,
    pub mean_risk: f64,
    pub slope: Option<f64>,
    pub theoretical_slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub seed_base: u64,
    pub xi_star: Option<f64>,
    pub config_hash: u64,
}

/// Per-curve summary: fitted slope (when defined) and whether the curve is
/// the best-C choice of its filter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveSummary {
    pub filter: String,
    pub c: Option<f64>,
    pub xi: Option<f64>,
    pub m_delta: Option<f64>,
    pub slope: Option<f64>,
    pub theoretical_slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub best: bool,
    /// Mean risk at the last x over mean risk at the first x.
    pub last_over_first: f64,
}

/// Output of a study runner.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub study: String,
    /// Horizontal axis of the curves: `n`, `n_Q` or `n_P`.
    pub x_axis: &'static str,
    pub rows: Vec<ResultRow>,
    pub curves: Vec<CurveSummary>,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    fn x_value(&self, axis: &str) -> Option<usize> {
        match axis {
            "n_P" => self.n_p,
            "n_Q" => self.n_q,
            _ => self.n,
        }
    }

    fn curve_key(&self) -> (String, Option<u64>, Option<u64>, Option<u64>) {
        (
            self.filter.clone(),
            self.c.map(f64::to_bits),
            self.xi.map(f64::to_bits),
            self.m_delta.map(f64::to_bits),
        )
    }
}

impl StudyTable {
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.study.clone(),
                r.filter.clone(),
                opt(r.m),
                opt(r.m_p),
                opt(r.m_delta),
                opt(r.xi),
                opt(r.c),
                opt(r.n),
                opt(r.n_p),
                opt(r.n_q),
                r.repeat_count.to_string(),
                r.mean_risk.to_string(),
                opt(r.slope),
                opt(r.theoretical_slope),
                opt(r.r_squared),
                r.seed_base.to_string(),
                opt(r.xi_star),
                format!("{:016x}", r.config_hash),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "study,filter,C,xi,m_delta,slope,theoretical_slope,r_squared,best,last_over_first\n",
        );
        for c in &self.curves {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.study,
                c.filter,
                opt(c.c),
                opt(c.xi),
                opt(c.m_delta),
                opt(c.slope),
                opt(c.theoretical_slope),
                opt(c.r_squared),
                c.best,
                c.last_over_first
            );
        }
        out
    }

    /// Log-log chart of mean risk against the study's sample-size axis, one
    /// line per curve.
    pub fn to_svg(&self) -> String {
        let mut series: Vec<Series> = Vec::new();
        let mut keys = Vec::new();
        for r in &self.rows {
            let Some(x) = r.x_value(self.x_axis) else {
                continue;
            };
            let key = r.curve_key();
            let idx = match keys.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    keys.push(key);
                    let mut label = r.filter.clone();
                    if let Some(c) = r.c {
                        let _ = write!(label, " C={c}");
                    }
                    if let Some(m) = r.m_delta {
                        let _ = write!(label, " m_delta={m}");
                    }
                    if let Some(xi) = r.xi {
                        let _ = write!(label, " xi={xi}");
                    }
                    series.push(Series {
                        label,
                        points: Vec::new(),
                    });
                    series.len() - 1
                }
            };
            series[idx].points.push((x as f64, r.mean_risk));
        }
        render_line_chart(
            &format!("{} study", self.study),
            self.x_axis,
            "mean excess risk",
            &series,
        )
    }

    /// Summary of the best-C curve for `filter`, if slopes were fitted.
    pub fn best_curve(&self, filter: &str) -> Option<&CurveSummary> {
        self.curves.iter().find(|c| c.best && c.filter == filter)
    }

    /// Rows of one curve in x order.
    pub fn curve_rows<'a>(
        &'a self,
        filter: &'a str,
        c: Option<f64>,
        xi: Option<f64>,
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.filter == filter && r.c == c && (xi.is_none() || r.xi == xi))
    }

    /// Writes `<study>.csv`, `<study>_summary.csv` and `<study>.svg` into
    /// `dir` and returns their paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = [
            (format!("{}.csv", self.study), self.to_csv()),
            (format!("{}_summary.csv", self.study), self.summary_csv()),
            (format!("{}.svg", self.study), self.to_svg()),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            paths.push(path);
        }
        Ok(paths)
    }
}
