use crate::error::{Error, Result};

/// Composite Simpson rule on `N` equispaced samples of `[a, b]` (`N` odd).
pub fn simpson_integral(values: &[f64], a: f64, b: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Input(format!(
            "Simpson's rule needs an odd number (>= 3) of nodes, got {n}"
        )));
    }
    if !(b > a) {
        return Err(Error::Input(format!(
            "integration bounds must satisfy b > a, got [{a}, {b}]"
        )));
    }
    let h = (b - a) / (n - 1) as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    Ok(h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::linspace;

    fn sample(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
        linspace(0.0, 1.0, n).into_iter().map(f).collect()
    }

    #[test]
    fn examples() {
        let v = simpson_integral(&sample(|x| x * x, 5), 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() <= 1e-15);
        let v = simpson_integral(&[2.5; 7], -1.0, 3.0).unwrap();
        assert!((v - 10.0).abs() <= 1e-14);
        let v = simpson_integral(&sample(|x| x.powi(4), 101), 0.0, 1.0).unwrap();
        assert!((v - 0.2).abs() <= 1e-8);
    }

    #[test]
    fn rejects_even_node_count() {
        assert!(simpson_integral(&[1.0; 4], 0.0, 1.0).is_err());
        assert!(simpson_integral(&[1.0; 1], 0.0, 1.0).is_err());
        assert!(simpson_integral(&[1.0; 3], 1.0, 1.0).is_err());
    }
}
