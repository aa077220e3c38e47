//! Reduced-cubic response surface: the last objective regressed on the
//! others.
//!
//! The basis holds every monomial of total degree at most two plus the pure
//! cubes `x_i^3`; mixed monomials of degree three are left out. Objectives are
//! min-max scaled to `[0, 1]` before fitting, and grid samples are taken in
//! the scaled space and mapped back.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSurface {
    #[serde(rename = "M")]
    pub dim: usize,
    /// Exponent vector over the first `M - 1` objectives, one per term.
    pub basis: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
    /// Per-objective scaling used at fit time.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Basis exponents for `vars` explanatory variables: `1`, `x_i`, `x_i x_j`
/// (`i <= j`), `x_i^3`.
pub fn reduced_cubic_basis(vars: usize) -> Vec<Vec<u32>> {
    let unit = |i: usize, p: u32| {
        let mut e = vec![0; vars];
        e[i] = p;
        e
    };
    let mut basis = vec![vec![0; vars]];
    basis.extend((0..vars).map(|i| unit(i, 1)));
    for i in 0..vars {
        for j in i..vars {
            let mut e = unit(i, 1);
            e[j] += 1;
            basis.push(e);
        }
    }
    basis.extend((0..vars).map(|i| unit(i, 3)));
    basis
}

fn monomial(exponents: &[u32], x: &[f64]) -> f64 {
    exponents
        .iter()
        .zip(x)
        .map(|(&e, v)| v.powi(e as i32))
        .product()
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        v - lo
    }
}

fn unscale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        lo + v * (hi - lo)
    } else {
        v + lo
    }
}

/// Least-squares fit over `objectives` (each of length `M`); minimum-norm
/// when the system is underdetermined.
pub fn fit_response_surface(objectives: &[Vec<f64>]) -> Result<ResponseSurface> {
    let dim = objectives.first().map(Vec::len).unwrap_or(0);
    if dim < 2 {
        return Err(Error::InvalidDimension(
            "response surface needs at least two objectives".into(),
        ));
    }
    if objectives.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidDimension("objective vectors differ in length".into()));
    }
    let lower: Vec<f64> = (0..dim)
        .map(|m| objectives.iter().map(|p| p[m]).fold(f64::INFINITY, f64::min))
        .collect();
    let upper: Vec<f64> = (0..dim)
        .map(|m| objectives.iter().map(|p| p[m]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let vars = dim - 1;
    let basis = reduced_cubic_basis(vars);
    let n = objectives.len();
    let mut design = DMatrix::zeros(n, basis.len());
    let mut rhs = DVector::zeros(n);
    for (row, p) in objectives.iter().enumerate() {
        let x: Vec<f64> = (0..vars).map(|m| scale(p[m], lower[m], upper[m])).collect();
        for (col, e) in basis.iter().enumerate() {
            design[(row, col)] = monomial(e, &x);
        }
        rhs[row] = scale(p[vars], lower[vars], upper[vars]);
    }
    let svd = design.svd(true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = largest * (n.max(basis.len()) as f64) * f64::EPSILON;
    let coeffs = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))?;
    Ok(ResponseSurface {
        dim,
        basis,
        coefficients: coeffs.iter().cloned().collect(),
        lower,
        upper,
    })
}

impl ResponseSurface {
    /// Predicted last objective for the first `M - 1` objectives (original units).
    pub fn predict(&self, inputs: &[f64]) -> f64 {
        let vars = self.dim - 1;
        let x: Vec<f64> = (0..vars)
            .map(|m| scale(inputs[m], self.lower[m], self.upper[m]))
            .collect();
        let y: f64 = self
            .basis
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * monomial(e, &x))
            .sum();
        unscale(y, self.lower[vars], self.upper[vars])
    }

    /// Grid with spacing `1/resolution` over the scaled box of the first
    /// `M - 1` objectives, with the predicted last objective appended.
    pub fn sample(&self, resolution: u32) -> Result<Vec<Vec<f64>>> {
        if resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
        }
        let vars = self.dim - 1;
        let steps = resolution as usize + 1;
        let total = steps.pow(vars as u32);
        let r = resolution as f64;
        let mut out = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut point = Vec::with_capacity(self.dim);
            let mut scaled = Vec::with_capacity(vars);
            for m in 0..vars {
                let u = (k % steps) as f64 / r;
                k /= steps;
                scaled.push(u);
                point.push(unscale(u, self.lower[m], self.upper[m]));
            }
            let y: f64 = self
                .basis
                .iter()
                .zip(&self.coefficients)
                .map(|(e, c)| c * monomial(e, &scaled))
                .sum();
            point.push(unscale(y, self.lower[vars], self.upper[vars]));
            out.push(point);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rs: ResponseSurface = serde_json::from_str(text)?;
        if rs.dim < 2
            || rs.basis.len() != rs.coefficients.len()
            || rs.lower.len() != rs.dim
            || rs.upper.len() != rs.dim
            || rs.basis.iter().any(|e| e.len() != rs.dim - 1)
        {
            return Err(Error::InvalidInput("malformed response surface file".into()));
        }
        Ok(rs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(reduced_cubic_basis(1), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(reduced_cubic_basis(3).len(), 13);
        for vars in 1..6 {
            let expected = 1 + vars + vars * (vars - 1) / 2 + vars + vars;
            assert_eq!(reduced_cubic_basis(vars).len(), expected);
        }
    }

    #[test]
    fn exact_quadratic_is_recovered() {
        let f = |a: f64, b: f64| 0.3 + a - 2.0 * b + 0.5 * a * b + b * b;
        let mut pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (i as f64 / 5.0, j as f64 / 5.0);
                pts.push(vec![a, b, f(a, b)]);
            }
        }
        let rs = fit_response_surface(&pts).unwrap();
        for p in &pts {
            assert!((rs.predict(&p[..2]) - p[2]).abs() <= 1e-8);
        }
    }

    #[test]
    fn grid_sizes_and_constant_surface() {
        let pts = vec![vec![0.0, 2.0], vec![1.0, 2.0], vec![0.5, 2.0]];
        let rs = fit_response_surface(&pts).unwrap();
        assert_eq!(rs.coefficients.len(), 4);
        let grid = rs.sample(20).unwrap();
        assert_eq!(grid.len(), 21);
        assert!(grid.iter().all(|p| (p[1] - 2.0).abs() < 1e-12));
        let pts3 = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(fit_response_surface(&pts3).unwrap().sample(20).unwrap().len(), 441);
        assert!(fit_response_surface(&[vec![1.0]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let pts = vec![vec![0.0, 1.0, 0.2], vec![1.0, 0.0, 0.1], vec![0.3, 0.3, 0.9]];
        let rs = fit_response_surface(&pts).unwrap();
        assert_eq!(ResponseSurface::from_json(&rs.to_json().unwrap()).unwrap(), rs);
    }
}
