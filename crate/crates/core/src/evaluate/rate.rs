use crate::error::{Error, Result};

/// Least-squares fit of `ln(risk)` on `ln(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Minimax exponent `−2m/(2m+d)`.
    pub theoretical_slope: f64,
}

pub fn theoretical_slope(m: f64, d: usize) -> f64 {
    -2.0 * m / (2.0 * m + d as f64)
}

pub fn fit_rate(ns: &[usize], risks: &[f64], m: f64, d: usize) -> Result<RateFit> {
    if ns.len() != risks.len() {
        return Err(Error::Input(format!(
            "{} sample sizes but {} risks",
            ns.len(),
            risks.len()
        )));
    }
    if let Some(r) = risks.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Input(format!(
            "risks must be positive and finite, got {r}"
        )));
    }
    let mut distinct: Vec<usize> = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Input(
            "rate fit needs at least two distinct sample sizes".into(),
        ));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = risks.iter().map(|r| r.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - intercept - slope * x;
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        theoretical_slope: theoretical_slope(m, d),
    })
}
