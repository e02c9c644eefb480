//! The largest discrete subharmonic function below 0 on U and below -1 on
//! A, with Dirichlet data 0 outside U.

use crate::cvec::C64;
use crate::error::{Error, Result};
use crate::grid::{GridField, SliceSpec};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ObstacleSpec {
    slice: SliceSpec,
    a_mask: Vec<bool>,
    u_mask: Vec<bool>,
}

impl ObstacleSpec {
    pub fn new(slice: SliceSpec, a_mask: Vec<bool>, u_mask: Vec<bool>) -> Result<Self> {
        let cells = slice.cells();
        for m in [&a_mask, &u_mask] {
            if m.len() != cells {
                return Err(Error::Dimension { expected: cells, got: m.len() });
            }
        }
        if a_mask.iter().zip(&u_mask).any(|(a, u)| *a && !*u) {
            return Err(Error::InvalidArgument("obstacle set A must lie inside U".into()));
        }
        Ok(ObstacleSpec { slice, a_mask, u_mask })
    }

    /// Masks from predicates on the cell-center parameters.
    pub fn from_predicates(slice: SliceSpec, in_a: impl Fn(C64) -> bool, in_u: impl Fn(C64) -> bool) -> Result<Self> {
        let params: Vec<C64> = (0..slice.cells()).map(|k| slice.param_of_index(k)).collect();
        let a = params.iter().map(|w| in_a(*w)).collect();
        let u = params.iter().map(|w| in_u(*w)).collect();
        Self::new(slice, a, u)
    }

    /// U = {|w| < r_u} and A = {|w - a_center| <= r_a} on a plane grid just
    /// covering U.
    pub fn disk_in_disk(resolution: usize, a_center: C64, r_a: f64, r_u: f64) -> Result<Self> {
        let slice = SliceSpec::plane(r_u, resolution)?;
        Self::from_predicates(slice, |w| (w - a_center).norm() <= r_a, |w| w.norm() < r_u)
    }

    pub fn slice(&self) -> &SliceSpec {
        &self.slice
    }

    pub fn a_mask(&self) -> &[bool] {
        &self.a_mask
    }

    pub fn u_mask(&self) -> &[bool] {
        &self.u_mask
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleSolution {
    pub field: GridField,
    pub sweeps: usize,
    /// Largest update in the last sweep.
    pub residual: f64,
    pub omega: f64,
}

/// Default sweep cap, ten times the number of cells per side squared.
pub fn default_max_sweeps(resolution: usize) -> usize {
    10 * resolution * resolution
}

/// Projected SOR on v <- min(0, mean of the four neighbors) in row-major
/// order, with v = -1 on A and 0 outside U or beyond the grid. The
/// relaxation factor is the optimal one for the Laplacian on the grid,
/// which changes the speed but not the fixed point of plain Gauss-Seidel.
pub fn relative_extremal_obstacle(ob: &ObstacleSpec, tol: f64, max_sweeps: usize) -> Result<ObstacleSolution> {
    let res = ob.slice.resolution();
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / res as f64).sin());
    let mut v: Vec<f64> = ob.a_mask.iter().map(|a| if *a { -1.0 } else { 0.0 }).collect();
    let free: Vec<bool> = ob.a_mask.iter().zip(&ob.u_mask).map(|(a, u)| *u && !*a).collect();
    let at = |v: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= res as isize || j >= res as isize {
            0.0
        } else {
            v[j as usize * res + i as usize]
        }
    };
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        residual = 0.0;
        for j in 0..res {
            for i in 0..res {
                let k = j * res + i;
                if !free[k] {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let avg = 0.25 * (at(&v, ii - 1, jj) + at(&v, ii + 1, jj) + at(&v, ii, jj - 1) + at(&v, ii, jj + 1));
                let new = (v[k] + omega * (avg - v[k])).min(0.0);
                residual = residual.max((new - v[k]).abs());
                v[k] = new;
            }
        }
        if residual < tol {
            let field = GridField::new(ob.slice.clone(), v)?;
            return Ok(ObstacleSolution { field, sweeps: sweep, residual, omega });
        }
    }
    Err(Error::NonConvergence { sweeps: max_sweeps, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_obstacle_gives_zero() {
        let ob = ObstacleSpec::disk_in_disk(32, C64::new(0.0, 0.0), -1.0, 1.0).unwrap();
        let s = relative_extremal_obstacle(&ob, DEFAULT_TOL, default_max_sweeps(32)).unwrap();
        assert!(s.field.values().iter().all(|v| *v == 0.0));
    }
}
