//! Point sets and labelled datasets.

use crate::error::{Error, Result};

/// A row-major `n × d` matrix of input points.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    values: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("point dimension must be at least 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Input(format!(
                "{} coordinates do not form rows of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { values, dim })
    }

    /// One-dimensional points.
    pub fn from_scalars(xs: Vec<f64>) -> Self {
        Self { values: xs, dim: 1 }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Input("rows have differing dimensions".into()));
        }
        Self::new(rows.concat(), dim)
    }

    /// `n` equispaced points on `[a, b]`, endpoints included.
    pub fn linspace(a: f64, b: f64, n: usize) -> Self {
        Self::from_scalars(linspace(a, b, n))
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            values,
            dim: self.dim,
        }
    }
}

/// Paired inputs and scalar labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Points,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Input(format!(
                "{} points but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("label {i} is not finite")));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn with_labels(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Points::new(vec![1.0, 2.0, 3.0], 2).is_err());
        let p = Points::new(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.row(1), &[3.0, 4.0]);
        assert!(Dataset::new(p.clone(), vec![1.0]).is_err());
        assert!(Dataset::new(p, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(0.0, 1.0, 5001);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[5000], 1.0);
        assert_eq!(v[2500], 0.5);
    }
}
