//! Chern-Levine-Nirenberg ratios for T = dd^c G on 4D grids in C^2.
//!
//! For a ball B(z, r) the numerator is the mass of T ^ dd^c u on B(z, r),
//! the denominator the trace mass of T on B(z, 2r) times the sup of |u|
//! there, and the implied constant is c(r) = r^2 num / den. Both masses
//! come from the mixed complex Hessian density
//! (4 / pi^2) (G_11 u_22 + G_22 u_11 - 2 Re(G_12 conj(u_12))),
//! G_jk = d^2 G / dz_j dzbar_k, with central differences on a node grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::dynamics::{green, EscapeParams};
use crate::error::{Error, Result};
use crate::poly::{Direction, PolyMap};

#[derive(Clone, Debug, Serialize)]
pub struct ClnParams {
    /// Grid cells across the diameter 4r of the doubled ball.
    pub cells: usize,
    /// Below this trace mass the doubled ball counts as free of T.
    pub mass_floor: f64,
}

impl Default for ClnParams {
    fn default() -> Self {
        ClnParams { cells: 16, mass_floor: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClnEntry {
    pub r: f64,
    pub numerator: f64,
    pub denominator_mass: f64,
    pub sup_u: f64,
    /// None when the ball is inconclusive.
    pub c: Option<f64>,
    /// Clipped negative density in the numerator (<= 0).
    pub clipped: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClnReport {
    pub point: Vec<[f64; 2]>,
    pub cells: usize,
    pub entries: Vec<ClnEntry>,
    pub inconclusive: bool,
    pub median: f64,
    pub max: f64,
    /// max c / median c over the conclusive radii.
    pub spread: f64,
}

/// Complex Hessian entries (d11, d22, d12) at node k of a 4D grid with
/// coordinate order (x1, y1, x2, y2).
fn complex_hessian(v: &[f64], k: usize, stride: &[usize; 4], h: f64) -> (f64, f64, C64) {
    let d2 = |a: usize| (v[k + stride[a]] - 2.0 * v[k] + v[k - stride[a]]) / (h * h);
    let dab = |a: usize, b: usize| {
        let (sa, sb) = (stride[a], stride[b]);
        (v[k + sa + sb] - v[k + sa - sb] - v[k - sa + sb] + v[k - sa - sb]) / (4.0 * h * h)
    };
    let d11 = 0.25 * (d2(0) + d2(1));
    let d22 = 0.25 * (d2(2) + d2(3));
    let d12 = C64::new(dab(0, 2) + dab(1, 3), dab(0, 3) - dab(1, 2)) * 0.25;
    (d11, d22, d12)
}

fn mixed_density(g: (f64, f64, C64), u: (f64, f64, C64)) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    4.0 / pi2 * (g.0 * u.1 + g.1 * u.0 - 2.0 * (g.2 * u.2.conj()).re)
}

/// Implied CLN constants at z for each radius. `u` should be a continuous
/// psh function.
pub fn cln_ratio<U>(
    m: &PolyMap,
    p: &EscapeParams,
    u: U,
    z: &CVec,
    radii: &[f64],
    params: &ClnParams,
) -> Result<ClnReport>
where
    U: Fn(&[C64]) -> f64 + Sync,
{
    if m.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: m.dim() });
    }
    z.check_dim(2)?;
    if params.cells < 4 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("cln needs at least 4 cells and positive radii".into()));
    }
    let mut entries = Vec::with_capacity(radii.len());
    for &r in radii {
        entries.push(cln_entry(m, p, &u, z, r, params));
    }
    let mut cs: Vec<f64> = entries.iter().filter_map(|e| e.c).collect();
    cs.sort_by(f64::total_cmp);
    let inconclusive = cs.is_empty();
    let median = if inconclusive {
        0.0
    } else if cs.len() % 2 == 1 {
        cs[cs.len() / 2]
    } else {
        0.5 * (cs[cs.len() / 2 - 1] + cs[cs.len() / 2])
    };
    let max = cs.last().copied().unwrap_or(0.0);
    let spread = if median > 0.0 {
        max / median
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(ClnReport {
        point: z.iter().map(|c| [c.re, c.im]).collect(),
        cells: params.cells,
        entries,
        inconclusive,
        median,
        max,
        spread,
    })
}

fn cln_entry<U>(m: &PolyMap, p: &EscapeParams, u: &U, z: &CVec, r: f64, params: &ClnParams) -> ClnEntry
where
    U: Fn(&[C64]) -> f64 + Sync,
{
    let h = 4.0 * r / params.cells as f64;
    let nodes = params.cells + 5;
    let half = (nodes / 2) as f64;
    let stride = [1, nodes, nodes * nodes, nodes * nodes * nodes];
    let total = nodes.pow(4);
    let coord = |k: usize| -> [f64; 4] {
        let mut x = [0.0; 4];
        for (a, s) in stride.iter().enumerate() {
            x[a] = ((k / s) % nodes) as f64 - half;
        }
        x
    };
    let point = |k: usize| -> [C64; 2] {
        let x = coord(k);
        [z[0] + C64::new(x[0], x[1]) * h, z[1] + C64::new(x[2], x[3]) * h]
    };
    let (gv, uv): (Vec<f64>, Vec<f64>) = (0..total)
        .into_par_iter()
        .map(|k| {
            let w = point(k);
            (green(m, &w, Direction::Forward, p), u(&w))
        })
        .unzip();

    let (mut num, mut clipped, mut den, mut sup_u) = (0.0, 0.0, 0.0, 0.0f64);
    let vol = h.powi(4);
    for k in 0..total {
        let x = coord(k);
        if x.iter().any(|c| c.abs() > half - 1.0) {
            continue;
        }
        let d = x.iter().map(|c| c * c).sum::<f64>().sqrt() * h;
        if d > 2.0 * r {
            continue;
        }
        sup_u = sup_u.max(uv[k].abs());
        let gh = complex_hessian(&gv, k, &stride, h);
        // trace measure of T: the density against u = |z|^2, whose complex Hessian is the identity
        den += mixed_density(gh, (1.0, 1.0, C64::new(0.0, 0.0))).max(0.0) * vol;
        if d <= r {
            let dens = mixed_density(gh, complex_hessian(&uv, k, &stride, h)) * vol;
            if dens >= 0.0 {
                num += dens;
            } else {
                clipped += dens;
            }
        }
    }
    let c = if den < params.mass_floor {
        None
    } else if num == 0.0 {
        Some(0.0)
    } else {
        Some(r * r * num / (den * sup_u))
    };
    ClnEntry { r, numerator: num, denominator_mass: den, sup_u, c, clipped }
}
