//! Invariant suites run by the `selfcheck` command: each check recomputes a
//! property of the library against an independent formula or oracle.

use crate::adaptive::{adaptive_fit, candidate_grid, mean_squared_error, AdaptiveConfig};
use crate::data::{linspace, Dataset, Points};
use crate::evaluate::{fit_rate, simpson_integral};
use crate::kernels::{bessel_k, bessel_k_general, gram, KernelSpec};
use crate::seed;
use crate::spectral::{
    filter_apply, krr_direct_solve, lambda_schedule, spectral_fit, FilterKind, FilterSpec,
    Predictor,
};
use crate::transfer::TransformPair;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Log-spaced λ grid `1e−6, …, 1e−1`.
pub fn lambda_grid() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).rev().collect()
}

/// `sup |u^β φ_λ(u)| λ^{1−β}` over β ∈ {0, 0.1, …, 1}, the λ grid, and
/// 1000 points of `u ∈ [0, 1]`.
pub fn filter_condition_e(kind: FilterKind) -> f64 {
    let us = linspace(0.0, 1.0, 1000);
    let mut sup: f64 = 0.0;
    for b in 0..=10 {
        let beta = b as f64 / 10.0;
        for &lambda in &lambda_grid() {
            for &u in &us {
                let v =
                    (u.powf(beta) * filter_apply(kind, lambda, u)).abs() * lambda.powf(1.0 - beta);
                sup = sup.max(v);
            }
        }
    }
    sup
}

/// `sup |1 − φ_λ(u) u| u^β λ^{−β}` over the same grids.
pub fn filter_condition_f(kind: FilterKind) -> f64 {
    let us = linspace(0.0, 1.0, 1000);
    let mut sup: f64 = 0.0;
    for b in 0..=10 {
        let beta = b as f64 / 10.0;
        for &lambda in &lambda_grid() {
            for &u in &us {
                let v = (1.0 - filter_apply(kind, lambda, u) * u).abs()
                    * u.powf(beta)
                    * lambda.powf(-beta);
                sup = sup.max(v);
            }
        }
    }
    sup
}

/// `K_{n+1/2}` by upward recurrence from `K_{±1/2}(x) = √(π/2x) e^{−x}`.
pub fn half_integer_by_recurrence(n: u32, x: f64) -> f64 {
    let k_half = (PI / (2.0 * x)).sqrt() * (-x).exp();
    let (mut prev, mut cur) = (k_half, k_half);
    for j in 0..n {
        let nu = j as f64 + 0.5;
        let next = prev + 2.0 * nu / x * cur;
        prev = cur;
        cur = next;
    }
    cur
}

fn random_dataset(n: usize, seed_value: u64) -> Dataset {
    let mut rng = seed::rng(seed_value);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = x
        .iter()
        .map(|&t| (6.0 * t).sin() + 0.3 * (rng.random::<f64>() - 0.5))
        .collect();
    Dataset::new(Points::from_scalars(x), y).expect("finite data")
}

fn check_kernels() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 0..6u32 {
        for &x in &[0.05, 0.3, 1.0, 2.5, 7.0, 20.0] {
            let oracle = half_integer_by_recurrence(n, x);
            let got = bessel_k_general(n as f64 + 0.5, x).unwrap_or(f64::NAN);
            worst = worst.max(((got - oracle) / oracle).abs());
        }
    }
    out.push(outcome(
        "kernels/bessel-half-integer",
        worst <= 1e-10,
        format!("max relative error {worst:.2e} (tolerance 1e-10)"),
    ));

    let mut worst: f64 = 0.0;
    for &nu in &[0.3, 1.01, 2.01, 3.7] {
        for &x in &[0.1, 1.0, 3.0, 12.0] {
            let r = (|| -> crate::Result<f64> {
                let lhs = bessel_k(nu + 1.0, x)?;
                let rhs = bessel_k(nu - 1.0, x)? + 2.0 * nu / x * bessel_k(nu, x)?;
                Ok(((lhs - rhs) / lhs).abs())
            })()
            .unwrap_or(f64::NAN);
            worst = worst.max(r);
        }
    }
    out.push(outcome(
        "kernels/bessel-recurrence",
        worst <= 1e-8,
        format!("max relative residual {worst:.2e} (tolerance 1e-8)"),
    ));

    let pts = Points::from_scalars(random_dataset(60, 1).x.as_slice().to_vec());
    let mut ok = true;
    let mut detail = String::new();
    for kernel in [
        KernelSpec::gaussian(0.2).expect("valid"),
        KernelSpec::matern(2.01, 0.2).expect("valid"),
    ] {
        let g = gram(&pts, &kernel);
        let symmetric = (0..g.n()).all(|i| (0..g.n()).all(|j| g.get(i, j) == g.get(j, i)));
        let unit_diag = (0..g.n()).all(|i| g.get(i, i) == 1.0);
        let ev = g.eigenvalues().unwrap_or_default();
        let (lo, hi) = (
            ev.first().copied().unwrap_or(f64::NAN),
            ev.last().copied().unwrap_or(f64::NAN),
        );
        let psd = lo >= -1e-8 * hi;
        ok &= symmetric && unit_diag && psd;
        detail.push_str(&format!(
            "{kernel:?}: min/max eigenvalue {lo:.2e}/{hi:.2e}; "
        ));
    }
    out.push(outcome(
        "kernels/gram-psd",
        ok,
        detail.trim_end_matches("; ").to_string(),
    ));
    out
}

fn check_spectral() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for kind in FilterKind::ALL {
        let e = filter_condition_e(kind);
        let f = filter_condition_f(kind);
        out.push(outcome(
            "spectral/filter-conditions",
            e <= 1.0 + 1e-9 && f <= 1.0 + 1e-9,
            format!(
                "{}: sup |u^β φ(u)| λ^(1−β) = {e:.12}, sup |1 − uφ(u)| (u/λ)^β = {f:.12} (bound 1)",
                kind.label()
            ),
        ));
    }

    let grid = Points::linspace(0.0, 1.0, 101);
    let mut worst: f64 = 0.0;
    for (i, &lambda) in [1e-1, 1e-3, 1e-6].iter().enumerate() {
        let data = random_dataset(40 + 30 * i, 10 + i as u64);
        let kernel = KernelSpec::gaussian(0.2).expect("valid");
        let run = || -> crate::Result<f64> {
            let a = spectral_fit(&data, &kernel, &FilterSpec::new(FilterKind::Krr, lambda)?)?
                .predict(&grid)?;
            let b = krr_direct_solve(&data, &kernel, lambda)?.predict(&grid)?;
            Ok(a.iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max))
        };
        worst = worst.max(run().unwrap_or(f64::NAN));
    }
    out.push(outcome(
        "spectral/krr-equivalence",
        worst <= 1e-8,
        format!("max prediction gap {worst:.2e} (tolerance 1e-8)"),
    ));

    let kpcr_ok = [0.0, 0.05, 0.1, 0.2, 0.7].iter().all(|&z| {
        let r = 1.0 - z * filter_apply(FilterKind::Kpcr, 0.1, z);
        r == 0.0 || r == 1.0
    });
    let gf_gap = (filter_apply(FilterKind::GradientFlow, 0.3, 1e-12) - 1.0 / 0.3).abs() * 0.3;
    out.push(outcome(
        "spectral/filter-edges",
        kpcr_ok && gf_gap <= 1e-6,
        format!("KPCR residual in {{0,1}}: {kpcr_ok}; GF continuity gap at 0: {gf_gap:.1e}"),
    ));
    out
}

fn check_adaptive() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let grid_ok = candidate_grid(55, 1, 1.0, 2.0).ok() == Some(vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    out.push(outcome(
        "adaptive/candidate-grid",
        grid_ok,
        "grid for n=55 on [1, 2]".into(),
    ));

    let run = || -> crate::Result<(f64, f64)> {
        let data = random_dataset(120, 21);
        let kernel = KernelSpec::gaussian(0.2)?;
        let cfg = AdaptiveConfig::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], 0.5, FilterKind::Krr);
        let fit = adaptive_fit(&data, &kernel, &cfg, 4)?;
        let train = data.select(&fit.train_indices);
        let valid = data.select(&fit.validation_indices);
        let mut best = f64::INFINITY;
        for &m in &cfg.candidates {
            let lambda = lambda_schedule(train.len(), m, 1, cfg.c);
            let model = spectral_fit(&train, &kernel, &FilterSpec::new(FilterKind::Krr, lambda)?)?;
            best = best.min(mean_squared_error(&model.predict(&valid.x)?, &valid.y));
        }
        let chosen = mean_squared_error(&fit.model.predict(&valid.x)?, &valid.y);
        Ok((chosen, best))
    };
    let (passed, detail) = match run() {
        Ok((chosen, best)) => (
            (chosen - best).abs() <= 1e-10 * best.max(1.0),
            format!("selected validation error {chosen:.6e}, exhaustive minimum {best:.6e}"),
        ),
        Err(e) => (false, e.to_string()),
    };
    out.push(outcome("adaptive/selection-optimal", passed, detail));
    out
}

fn check_transfer() -> Vec<CheckOutcome> {
    let mut rng = seed::rng(5);
    let mut worst_rt: f64 = 0.0;
    let mut lipschitz_ok = true;
    for _ in 0..2000 {
        let y = 20.0 * rng.random::<f64>() - 10.0;
        let p = 20.0 * rng.random::<f64>() - 10.0;
        let tau = 0.95 * rng.random::<f64>();
        for pair in [
            TransformPair::Offset,
            TransformPair::Affine {
                tau,
                rho: 1.0 - tau,
            },
        ] {
            let back = pair.G(pair.g(y, p).unwrap_or(f64::NAN), p);
            worst_rt = worst_rt.max((back - y).abs());
            let (a, b) = (
                20.0 * rng.random::<f64>() - 10.0,
                20.0 * rng.random::<f64>() - 10.0,
            );
            let lhs = (pair.G(a, b) - pair.G(y, p)).abs();
            let rhs = pair.lipschitz_model() * ((a - y).powi(2) + (b - p).powi(2)).sqrt();
            lipschitz_ok &= lhs <= rhs * (1.0 + 1e-12) + 1e-12;
        }
    }
    vec![
        outcome(
            "transfer/round-trip",
            worst_rt <= 1e-12,
            format!("max |G(g(y,p),p) − y| = {worst_rt:.2e} (tolerance 1e-12)"),
        ),
        outcome(
            "transfer/lipschitz",
            lipschitz_ok,
            "model transform within declared L1".into(),
        ),
    ]
}

fn check_evaluate() -> Vec<CheckOutcome> {
    let xs = linspace(0.0, 1.0, 5);
    let cubic: Vec<f64> = xs
        .iter()
        .map(|&x| 2.0 * x * x * x - x * x + 0.5 * x - 3.0)
        .collect();
    let exact = 0.5 - 1.0 / 3.0 + 0.25 - 3.0;
    let simpson_gap = (simpson_integral(&cubic, 0.0, 1.0).unwrap_or(f64::NAN) - exact).abs();
    let ns: Vec<usize> = (1..=10).map(|k| 100 * k).collect();
    let risks: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-0.8)).collect();
    let slope_gap = fit_rate(&ns, &risks, 2.0, 1)
        .map(|f| (f.slope + 0.8).abs())
        .unwrap_or(f64::NAN);
    vec![
        outcome(
            "evaluate/simpson-cubic",
            simpson_gap <= 1e-14,
            format!("error {simpson_gap:.1e} (tolerance 1e-14)"),
        ),
        outcome(
            "evaluate/power-law-slope",
            slope_gap <= 1e-12,
            format!("slope error {slope_gap:.1e} (tolerance 1e-12)"),
        ),
    ]
}

/// Runs every suite; the build is healthy when all outcomes pass.
pub fn run_selfcheck() -> Vec<CheckOutcome> {
    let mut out = check_kernels();
    out.extend(check_spectral());
    out.extend(check_adaptive());
    out.extend(check_transfer());
    out.extend(check_evaluate());
    out
}
