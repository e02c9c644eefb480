//! Escape-rate Green functions, filled Julia sets and degree growth.

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{norm, CVec, C64};
use crate::error::{Error, Result};
use crate::grid::{GridField, SliceSpec};
use crate::poly::{Direction, PolyMap, SymbolicBudget};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EscapeParams {
    pub max_iter: usize,
    pub escape_radius: f64,
    pub lambda1: f64,
    /// G at or below this counts as zero.
    pub zero_threshold: f64,
}

impl EscapeParams {
    pub fn new(max_iter: usize, escape_radius: f64, lambda1: f64, zero_threshold: f64) -> Result<Self> {
        if max_iter < 1 || !(escape_radius > 1.0) || !(zero_threshold > 0.0) || !(lambda1 >= 1.0) {
            return Err(Error::InvalidArgument(
                "escape params need max_iter >= 1, R > 1, tau > 0, lambda1 >= 1".into(),
            ));
        }
        Ok(EscapeParams { max_iter, escape_radius, lambda1, zero_threshold })
    }

    /// 80 iterations, R = 1e8, tau = 1e-6, and the map's lambda1.
    pub fn for_map(m: &PolyMap) -> Self {
        EscapeParams { max_iter: 80, escape_radius: 1e8, lambda1: m.lambda1(), zero_threshold: 1e-6 }
    }

    pub fn with_budget(self, max_iter: usize, escape_radius: f64) -> Self {
        EscapeParams { max_iter, escape_radius, ..self }
    }

    /// The degree used to normalize G in direction `dir`.
    pub fn lambda_for(&self, m: &PolyMap, dir: Direction) -> f64 {
        // an explicit backward degree on the map wins over the copied one
        if dir == Direction::Backward && m.lambda(Direction::Backward) != m.lambda1() {
            m.lambda(Direction::Backward)
        } else {
            self.lambda1
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub points: Vec<CVec>,
    pub escaped_at: Option<usize>,
    pub green_estimate: f64,
}

/// Iterates until the norm exceeds R or max_iter steps were taken. An
/// orbit that overflows counts as escaped at the last finite index.
pub fn orbit(m: &PolyMap, z: &[C64], dir: Direction, p: &EscapeParams) -> Result<OrbitRecord> {
    check(m, z)?;
    let lam = p.lambda_for(m, dir);
    let mut points = vec![CVec::from_slice(z)];
    let mut next = vec![C64::new(0.0, 0.0); z.len()];
    for k in 0..=p.max_iter {
        let r = points[k].norm();
        if !r.is_finite() {
            if k == 0 {
                return Err(Error::InvalidArgument("starting point is not finite".into()));
            }
            points.pop();
            let prev = points[k - 1].norm();
            let g = prev.ln_1p() / lam.powi(k as i32 - 1);
            return Ok(OrbitRecord { points, escaped_at: Some(k - 1), green_estimate: g });
        }
        if r > p.escape_radius {
            let g = r.ln_1p() / lam.powi(k as i32);
            return Ok(OrbitRecord { points, escaped_at: Some(k), green_estimate: g });
        }
        if k == p.max_iter {
            break;
        }
        m.eval_into(&points[k], dir, &mut next);
        points.push(CVec::from_slice(&next));
    }
    Ok(OrbitRecord { points, escaped_at: None, green_estimate: 0.0 })
}

/// lambda^-m log(1 + |f^m z|) at the first m with |f^m z| > R, else 0.
pub fn eval_green(m: &PolyMap, z: &[C64], dir: Direction, p: &EscapeParams) -> Result<f64> {
    check(m, z)?;
    Ok(green(m, z, dir, p))
}

/// Unchecked version of `eval_green` for hot loops.
pub fn green(m: &PolyMap, z: &[C64], dir: Direction, p: &EscapeParams) -> f64 {
    let lam = p.lambda_for(m, dir);
    let n = z.len();
    let mut a = [C64::new(0.0, 0.0); 8];
    let mut b = [C64::new(0.0, 0.0); 8];
    if n > 8 {
        return orbit(m, z, dir, p).map(|o| o.green_estimate).unwrap_or(0.0);
    }
    a[..n].copy_from_slice(z);
    let mut prev: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 0..=p.max_iter {
        let r = norm(&a[..n]);
        if !r.is_finite() {
            return if k == 0 { f64::INFINITY } else { prev.ln_1p() * scale * lam };
        }
        if r > p.escape_radius {
            return r.ln_1p() * scale;
        }
        if k == p.max_iter {
            break;
        }
        m.eval_into(&a[..n], dir, &mut b[..n]);
        std::mem::swap(&mut a, &mut b);
        prev = r;
        scale /= lam;
    }
    0.0
}

/// |G(f z) - lambda1 G(z)|.
pub fn green_invariance_residual(m: &PolyMap, z: &[C64], p: &EscapeParams) -> Result<f64> {
    check(m, z)?;
    let fz = m.eval(z, Direction::Forward)?;
    let lam = p.lambda_for(m, Direction::Forward);
    Ok((green(m, &fz, Direction::Forward, p) - lam * green(m, z, Direction::Forward, p)).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JuliaClass {
    InteriorKplus,
    Exterior,
    BoundaryBand,
}

impl JuliaClass {
    pub fn label(self) -> &'static str {
        match self {
            JuliaClass::InteriorKplus => "interior",
            JuliaClass::Exterior => "exterior",
            JuliaClass::BoundaryBand => "band",
        }
    }
}

/// Point classification: no neighbors, so only interior or exterior.
pub fn julia_indicator(m: &PolyMap, z: &[C64], p: &EscapeParams) -> Result<JuliaClass> {
    let g = eval_green(m, z, Direction::Forward, p)?;
    Ok(if g > p.zero_threshold { JuliaClass::Exterior } else { JuliaClass::InteriorKplus })
}

/// G over a slice and the resulting cell classes; a zero cell with an
/// exterior cell among its 8 neighbors is a band cell.
pub fn julia_grid(
    m: &PolyMap,
    slice: &SliceSpec,
    dir: Direction,
    p: &EscapeParams,
) -> Result<(GridField, Vec<JuliaClass>)> {
    if slice.dim() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: slice.dim() });
    }
    let field = GridField::from_fn(slice.clone(), |z| green(m, z, dir, p));
    let classes = classify_cells(&field, p.zero_threshold);
    Ok((field, classes))
}

pub fn classify_cells(field: &GridField, tau: f64) -> Vec<JuliaClass> {
    let res = field.resolution();
    let vals = field.values();
    let zero: Vec<bool> = vals.iter().map(|v| *v <= tau).collect();
    (0..res * res)
        .into_par_iter()
        .map(|idx| {
            if !zero[idx] {
                return JuliaClass::Exterior;
            }
            let (i, j) = ((idx % res) as isize, (idx / res) as isize);
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= res as isize || b >= res as isize {
                        continue;
                    }
                    if !zero[b as usize * res + a as usize] {
                        return JuliaClass::BoundaryBand;
                    }
                }
            }
            JuliaClass::InteriorKplus
        })
        .collect()
}

/// (k, deg(f^k)^(1/k)) for k = 1..=k_max.
pub fn dynamical_degree_estimate(m: &PolyMap, k_max: usize, budget: SymbolicBudget) -> Result<Vec<(usize, f64)>> {
    (1..=k_max)
        .map(|k| {
            let comps = m.compose(k, budget)?;
            let d = comps.iter().map(|p| p.degree()).max().unwrap_or(0).max(0);
            Ok((k, (d as f64).powf(1.0 / k as f64)))
        })
        .collect()
}

fn check(m: &PolyMap, z: &[C64]) -> Result<()> {
    if z.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: z.len() });
    }
    Ok(())
}
