//! Birkhoff averages (1/k) sum_{i=1..k} rho(f^-i z) of a bump over a slice.

use rayon::prelude::*;
use serde::Serialize;

use super::henon::{HenonForm, ShadowParams};
use crate::cvec::C64;
use crate::dynamics::{classify_cells, green, EscapeParams, JuliaClass};
use crate::error::{Error, Result};
use crate::grid::{GridField, SliceSpec};
use crate::poly::{Direction, PolyMap};

/// height * exp(1 - 1 / (1 - t^2)) with t = |z - center| / radius, zero for t >= 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: Vec<C64>,
    pub radius: f64,
    pub height: f64,
}

impl Bump {
    pub fn new(center: &[C64], radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0) || !height.is_finite() {
            return Err(Error::InvalidArgument("bump needs radius > 0 and a finite height".into()));
        }
        Ok(Bump { center: center.to_vec(), radius, height })
    }

    pub fn zero(n: usize) -> Self {
        Bump { center: vec![C64::new(0.0, 0.0); n], radius: 1.0, height: 0.0 }
    }

    pub fn eval(&self, z: &[C64]) -> f64 {
        if self.height == 0.0 {
            return 0.0;
        }
        let d2: f64 = z.iter().zip(&self.center).map(|(a, b)| (a - b).norm_sqr()).sum();
        let t2 = d2 / (self.radius * self.radius);
        if !(t2 < 1.0) {
            return 0.0;
        }
        self.height * (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Where the orbit of a cell comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitSource {
    /// The cell point itself, iterated by the inverse map.
    Literal,
    /// The first coordinate of the cell point, lifted to the bounded
    /// backward orbit that follows one fixed itinerary of inverse branches.
    /// The lifted points form a holomorphic leaf inside K-.
    Leaf,
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffParams {
    pub source: OrbitSource,
    pub shadow: ShadowParams,
    pub escape: EscapeParams,
    pub seed: u64,
    /// Averaging lengths to record; None gives m/4, m/2, m.
    pub snapshots: Option<Vec<usize>>,
}

impl BirkhoffParams {
    pub fn for_map(m: &PolyMap) -> Self {
        BirkhoffParams {
            source: if HenonForm::detect(m).is_some() { OrbitSource::Leaf } else { OrbitSource::Literal },
            shadow: ShadowParams::default(),
            escape: EscapeParams::for_map(m),
            seed: 0,
            snapshots: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BirkhoffFields {
    /// (k, field of k-step averages), k ascending.
    pub snapshots: Vec<(usize, GridField)>,
    /// Cells whose orbit point lies in the boundary band of K+.
    pub band: Vec<bool>,
    /// Cells with a usable orbit; leaf cells whose relaxation failed are not.
    pub valid: Vec<bool>,
    /// G+ at each cell's orbit point.
    pub green_plus: GridField,
    /// Second coordinate of the lifted leaf points.
    pub leaf: Option<Vec<C64>>,
}

impl BirkhoffFields {
    pub fn last(&self) -> &GridField {
        &self.snapshots.last().expect("at least one snapshot").1
    }

    pub fn band_cells(&self) -> usize {
        self.band.iter().filter(|b| **b).count()
    }
}

fn snapshot_list(m_steps: usize, requested: &Option<Vec<usize>>) -> Vec<usize> {
    let mut ks = requested.clone().unwrap_or_else(|| vec![m_steps / 4, m_steps / 2, m_steps]);
    ks.retain(|k| *k <= m_steps);
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Sums rho over stages 1..=max and records the running means.
fn accumulate(stages: impl Iterator<Item = f64>, ks: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; ks.len()];
    let mut sum = 0.0;
    let mut next = 0;
    while next < ks.len() && ks[next] == 0 {
        next += 1;
    }
    for (i, v) in stages.enumerate() {
        let k = i + 1;
        sum += v;
        while next < ks.len() && ks[next] == k {
            out[next] = sum / k as f64;
            next += 1;
        }
        if next == ks.len() {
            break;
        }
    }
    out
}

struct Cell {
    means: Vec<f64>,
    g_plus: f64,
    lifted: C64,
    valid: bool,
}

pub fn birkhoff_field(
    m: &PolyMap,
    rho: &Bump,
    slice: &SliceSpec,
    m_steps: usize,
    params: &BirkhoffParams,
) -> Result<BirkhoffFields> {
    if slice.dim() != m.dim() || rho.center.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: slice.dim() });
    }
    let ks = snapshot_list(m_steps, &params.snapshots);
    if ks.is_empty() {
        return Err(Error::InvalidArgument("no snapshot within m".into()));
    }
    let depth = *ks.last().expect("nonempty");
    let cells: Vec<Cell> = match params.source {
        OrbitSource::Literal => literal_cells(m, rho, slice, depth, &ks, &params.escape),
        OrbitSource::Leaf => leaf_cells(m, rho, slice, depth, &ks, params)?,
    };
    let valid: Vec<bool> = cells.iter().map(|c| c.valid).collect();
    let green_plus = GridField::new(slice.clone(), cells.iter().map(|c| c.g_plus).collect())?;
    let classes = classify_cells(&green_plus, params.escape.zero_threshold);
    let band = classes.iter().zip(&valid).map(|(c, v)| *v && *c == JuliaClass::BoundaryBand).collect();
    let snapshots = ks
        .iter()
        .enumerate()
        .map(|(s, k)| Ok((*k, GridField::new(slice.clone(), cells.iter().map(|c| c.means[s]).collect())?)))
        .collect::<Result<Vec<_>>>()?;
    let leaf = (params.source == OrbitSource::Leaf).then(|| cells.iter().map(|c| c.lifted).collect());
    Ok(BirkhoffFields { snapshots, band, valid, green_plus, leaf })
}

fn literal_cells(
    m: &PolyMap,
    rho: &Bump,
    slice: &SliceSpec,
    depth: usize,
    ks: &[usize],
    escape: &EscapeParams,
) -> Vec<Cell> {
    (0..slice.cells())
        .into_par_iter()
        .map(|idx| {
            let z = slice.point_at(slice.param_of_index(idx));
            let mut cur = z.clone().into_inner();
            let mut next = cur.clone();
            let mut gone = false;
            let values = (0..depth).map(|_| {
                if gone {
                    return 0.0;
                }
                m.eval_into(&cur, Direction::Backward, &mut next);
                std::mem::swap(&mut cur, &mut next);
                if !cur.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                    // the bump has compact support, so escaped points add nothing
                    gone = true;
                    return 0.0;
                }
                rho.eval(&cur)
            });
            let means = accumulate(values, ks);
            Cell { means, g_plus: green(m, &z, Direction::Forward, escape), lifted: z[1.min(z.dim() - 1)], valid: true }
        })
        .collect()
}

fn leaf_cells(
    m: &PolyMap,
    rho: &Bump,
    slice: &SliceSpec,
    depth: usize,
    ks: &[usize],
    params: &BirkhoffParams,
) -> Result<Vec<Cell>> {
    let h = HenonForm::detect(m)
        .ok_or_else(|| Error::Precondition("leaf orbits need a map of the form (p(x) + a y, x)".into()))?;
    if slice.direction()[0].norm() < 1e-12 {
        return Err(Error::Precondition("leaf slices must move the first coordinate".into()));
    }
    let len = depth + params.shadow.margin + 2;
    // Random branches from the first step on, so the leaf is not the
    // unstable manifold of a periodic point. The guess starts off-center:
    // from a critical value such as 0 the chain of roots stays at 0, and
    // relaxing that chain lands on a fixed point's orbit.
    let start = slice.point_at(C64::new(0.37, 0.21) * slice.extent())[0];
    let mut reference = h.branch_orbit(start, len, params.seed);
    h.relax(&mut reference, params.shadow.tol, params.shadow.max_sweeps.max(200));
    let cells = (0..slice.cells())
        .into_par_iter()
        .map(|idx| {
            let x0 = slice.point_at(slice.param_of_index(idx))[0];
            let o = h.shadow_from(x0, &reference, depth, &params.shadow);
            let ok = o.residual <= 1e-8 && o.xs.iter().all(|x| x.re.is_finite() && x.im.is_finite());
            if !ok {
                return Cell { means: vec![0.0; ks.len()], g_plus: 0.0, lifted: o.xs[1], valid: false };
            }
            let values = (1..=depth).map(|k| rho.eval(&o.point(k)));
            let means = accumulate(values, ks);
            let z = o.point(0);
            Cell { means, g_plus: green(m, &z, Direction::Forward, &params.escape), lifted: z[1], valid: true }
        })
        .collect();
    Ok(cells)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constancy {
    pub cells: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// q3 - q1
    pub iqr: f64,
    /// Fraction of cells within `tol` of the median.
    pub within: f64,
    pub tol: f64,
}

/// Quartiles of a field over the masked cells.
pub fn band_constancy(field: &GridField, mask: &[bool], tol: f64) -> Result<Constancy> {
    if mask.len() != field.values().len() {
        return Err(Error::Dimension { expected: field.values().len(), got: mask.len() });
    }
    let mut v: Vec<f64> = field.values().iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| *x).collect();
    if v.is_empty() {
        return Err(Error::Precondition("no cells in the mask".into()));
    }
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
    let within = v.iter().filter(|x| (*x - median).abs() <= tol).count() as f64 / v.len() as f64;
    Ok(Constancy { cells: v.len(), median, q1, q3, iqr: q3 - q1, within, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile() {
        let b = Bump::new(&[C64::new(1.0, 0.0)], 0.5, 2.0).unwrap();
        assert_eq!(b.eval(&[C64::new(1.0, 0.0)]), 2.0);
        assert_eq!(b.eval(&[C64::new(1.5, 0.0)]), 0.0);
        assert!(b.eval(&[C64::new(1.25, 0.0)]) < 2.0);
    }

    #[test]
    fn running_means_hit_each_snapshot() {
        let means = accumulate([1.0, 3.0, 2.0, 2.0].into_iter(), &[0, 2, 4]);
        assert_eq!(means, vec![0.0, 2.0, 2.0]);
    }
}
