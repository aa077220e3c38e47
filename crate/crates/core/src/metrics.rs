//! Generational distance (GD) and inverted generational distance (IGD).
//!
//! `gd(X, Y)` averages, over the model sample `X`, the distance to the nearest
//! validation point in `Y`; it grows with false-positive regions of the model.
//! `igd(X, Y)` averages over `Y` instead and grows with regions of the true
//! front the model misses. Distances are computed exhaustively.

use crate::bezier::{Barycentric, BezierSimplex};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};

/// Evaluates `model` at every barycentric grid point with denominator
/// `resolution`.
pub fn grid_sample(model: &BezierSimplex, resolution: u32) -> Result<Vec<Vec<f64>>> {
    grid_sample_with(model, resolution, Execution::default())
}

pub fn grid_sample_with(model: &BezierSimplex, resolution: u32, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let grid = Barycentric::grid(model.dim(), resolution)?;
    Ok(map_range(exec, grid.len(), |k| model.evaluate_unchecked(grid[k].coords())))
}

fn check(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("GD/IGD need two nonempty point sets".into()));
    }
    let dim = x[0].len();
    if x.iter().chain(y).any(|p| p.len() != dim) {
        return Err(Error::InvalidDimension("GD/IGD point sets must share one dimension".into()));
    }
    Ok(())
}

/// Mean over `from` of the distance to the nearest point of `to`.
fn mean_nearest(from: &[Vec<f64>], to: &[Vec<f64>], exec: Execution) -> f64 {
    let nearest: Vec<f64> = map_range(exec, from.len(), |i| {
        let p = &from[i];
        to.iter()
            .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    });
    nearest.iter().sum::<f64>() / from.len() as f64
}

pub fn gd(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    gd_with(x, y, Execution::default())
}

pub fn gd_with(x: &[Vec<f64>], y: &[Vec<f64>], exec: Execution) -> Result<f64> {
    check(x, y)?;
    Ok(mean_nearest(x, y, exec))
}

pub fn igd(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    igd_with(x, y, Execution::default())
}

pub fn igd_with(x: &[Vec<f64>], y: &[Vec<f64>], exec: Execution) -> Result<f64> {
    check(x, y)?;
    Ok(mean_nearest(y, x, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(gd(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), 5.0);
        let s = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        assert_eq!(gd(&s, &s).unwrap(), 0.0);
        assert_eq!(igd(&s, &s[..1]).unwrap(), 0.0);
        assert!(gd(&[], &s).is_err());
        assert!(igd(&s, &[vec![1.0]]).is_err());
    }

    #[test]
    fn grid_counts() {
        let line = BezierSimplex::from_fn(2, 3, 2, |_| vec![0.0, 0.0]).unwrap();
        assert_eq!(grid_sample(&line, 20).unwrap().len(), 21);
        let tri = BezierSimplex::from_fn(3, 3, 3, |_| vec![0.0; 3]).unwrap();
        assert_eq!(grid_sample(&tri, 20).unwrap().len(), 231);
        assert!(grid_sample(&tri, 0).is_err());
    }
}
