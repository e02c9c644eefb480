//! Compact sets A, E and domains U described in closed form or by samples.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cvec::{dist, CVec, C64};
use crate::error::{Error, Result};

/// Compact obstacle sets. `depth` is positive on the interior and
/// negative outside; for balls, boxes and slabs it is the exact signed
/// distance, for the others a Lipschitz stand-in with the right sign.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    Empty,
    Ball {
        center: CVec,
        radius: f64,
    },
    /// Axis-aligned box in the real coordinates (Re z1, Im z1, ...).
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// {|z_k - center| <= half_width}, the k-th coordinate zero-based.
    Slab {
        coord: usize,
        center: C64,
        half_width: f64,
    },
    /// {| |z_k| - radii_k | <= half_width for every k}.
    TorusBand {
        radii: Vec<f64>,
        half_width: f64,
    },
    Union {
        parts: Vec<SetDescriptor>,
    },
    /// Union of closed balls of a common radius around sample points.
    Cloud {
        cloud: PointSet,
    },
}

impl SetDescriptor {
    pub fn ball(center: CVec, radius: f64) -> Self {
        SetDescriptor::Ball { center, radius }
    }

    pub fn depth(&self, z: &[C64]) -> f64 {
        match self {
            SetDescriptor::Empty => f64::NEG_INFINITY,
            SetDescriptor::Ball { center, radius } => radius - dist(z, center),
            SetDescriptor::Box { lo, hi } => box_depth(lo, hi, z),
            SetDescriptor::Slab { coord, center, half_width } => half_width - (z[*coord] - center).norm(),
            SetDescriptor::TorusBand { radii, half_width } => {
                z.iter().zip(radii).map(|(c, r)| half_width - (c.norm() - r).abs()).fold(f64::INFINITY, f64::min)
            }
            SetDescriptor::Union { parts } => parts.iter().map(|p| p.depth(z)).fold(f64::NEG_INFINITY, f64::max),
            SetDescriptor::Cloud { cloud } => cloud.radius - cloud.nearest_distance(z),
        }
    }

    /// Membership in the interior, the set whose mass disk measures count.
    pub fn in_interior(&self, z: &[C64]) -> bool {
        self.depth(z) > 0.0
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        self.depth(z) >= 0.0
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SetDescriptor::Empty => true,
            SetDescriptor::Union { parts } => parts.iter().all(|p| p.is_empty()),
            SetDescriptor::Cloud { cloud } => cloud.is_empty(),
            _ => false,
        }
    }

    /// Balls contained in the set, used to aim disks at it.
    pub fn anchors(&self) -> Vec<(CVec, f64)> {
        match self {
            SetDescriptor::Ball { center, radius } => vec![(center.clone(), *radius)],
            SetDescriptor::Box { lo, hi } => {
                let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let r = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min);
                CVec::from_reals(&mid).map(|c| vec![(c, r)]).unwrap_or_default()
            }
            SetDescriptor::Union { parts } => parts.iter().flat_map(|p| p.anchors()).collect(),
            _ => Vec::new(),
        }
    }
}

fn box_depth(lo: &[f64], hi: &[f64], z: &[C64]) -> f64 {
    let x: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
    let mut inside = f64::INFINITY;
    let mut outside = 0.0;
    for ((v, a), b) in x.iter().zip(lo).zip(hi) {
        inside = inside.min(v - a).min(b - v);
        let gap = (a - v).max(v - b).max(0.0);
        outside += gap * gap;
    }
    if outside > 0.0 {
        -outside.sqrt()
    } else {
        inside
    }
}

/// The domain U of the disks. Violation is the Euclidean distance to U.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Whole,
    Ball { center: CVec, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn violation(&self, z: &[C64]) -> f64 {
        match self {
            Domain::Whole => 0.0,
            Domain::Ball { center, radius } => (dist(z, center) - radius).max(0.0),
            Domain::Box { lo, hi } => (-box_depth(lo, hi, z)).max(0.0),
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, z: &[C64]) -> bool {
        match self {
            Domain::Whole => true,
            Domain::Ball { center, radius } => dist(z, center) < *radius,
            Domain::Box { lo, hi } => box_depth(lo, hi, z) > 0.0,
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        let got = match self {
            Domain::Whole => return Ok(()),
            Domain::Ball { center, .. } => center.dim(),
            Domain::Box { lo, .. } => lo.len() / 2,
        };
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
        Ok(())
    }

    /// Rough size of U, used to scale search steps.
    pub fn scale(&self) -> f64 {
        match self {
            Domain::Whole => 1.0,
            Domain::Ball { radius, .. } => *radius,
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).fold(0.0, f64::max),
        }
    }
}

/// Points of C^n with a spatial hash for nearest-neighbor queries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<CVec>,
    pub radius: f64,
    #[serde(skip)]
    index: Option<Arc<HashGrid>>,
}

impl PointSet {
    /// `cell` is the hash cell size; queries are cheapest when it is close
    /// to the typical nearest-neighbor distance.
    pub fn new(points: Vec<CVec>, radius: f64, cell: f64) -> Result<Self> {
        if let Some(p) = points.first() {
            let n = p.dim();
            if let Some(q) = points.iter().find(|q| q.dim() != n) {
                return Err(Error::Dimension { expected: n, got: q.dim() });
            }
        }
        if !(cell > 0.0) {
            return Err(Error::InvalidArgument("hash cell size must be positive".into()));
        }
        let index = Some(Arc::new(HashGrid::build(&points, cell)));
        Ok(PointSet { points, radius, index })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance to the nearest point; +inf for an empty set. Exact within
    /// four hash cells, a lower bound of that size beyond.
    pub fn nearest_distance(&self, z: &[C64]) -> f64 {
        match (self.nearest(z), &self.index) {
            (Some((_, d)), _) => d,
            (None, Some(grid)) if !self.points.is_empty() => MAX_RINGS as f64 * grid.cell,
            (None, _) => f64::INFINITY,
        }
    }

    /// Nearest sample and its distance; None when the set is empty or no
    /// sample lies within four hash cells.
    pub fn nearest(&self, z: &[C64]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        match &self.index {
            Some(grid) => grid.nearest(&self.points, z),
            None => self.points.iter().enumerate().map(|(k, p)| (k, dist(p, z))).min_by(|a, b| a.1.total_cmp(&b.1)),
        }
    }
}

#[derive(Debug)]
struct HashGrid {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

const MAX_RINGS: i64 = 4;

impl HashGrid {
    fn build(points: &[CVec], cell: f64) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (k, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(k as u32);
        }
        HashGrid { cell, buckets }
    }

    fn nearest(&self, points: &[CVec], z: &[C64]) -> Option<(usize, f64)> {
        let center = key(z, self.cell);
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=MAX_RINGS {
            visit_shell(&center, ring, &mut |k: &[i64]| {
                if let Some(ids) = self.buckets.get(k) {
                    for &id in ids {
                        let d = dist(&points[id as usize], z);
                        if d < best.1 || (d == best.1 && (id as usize) < best.0) {
                            best = (id as usize, d);
                        }
                    }
                }
            });
            // every unvisited point is at least ring * cell away
            if best.1 <= ring as f64 * self.cell {
                return Some(best);
            }
        }
        (best.0 != usize::MAX).then_some(best)
    }
}

fn key(z: &[C64], cell: f64) -> Vec<i64> {
    z.iter().flat_map(|c| [(c.re / cell).floor() as i64, (c.im / cell).floor() as i64]).collect()
}

/// Calls f on every integer vector at Chebyshev distance exactly `ring`
/// from `center`.
fn visit_shell(center: &[i64], ring: i64, f: &mut dyn FnMut(&[i64])) {
    let d = center.len();
    let mut off = vec![-ring; d];
    let mut k = center.to_vec();
    loop {
        if off.iter().any(|o| o.abs() == ring) {
            for i in 0..d {
                k[i] = center[i] + off[i];
            }
            f(&k);
        }
        let mut i = 0;
        while i < d {
            off[i] += 1;
            if off[i] <= ring {
                break;
            }
            off[i] = -ring;
            i += 1;
        }
        if i == d {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hash_nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<CVec> = (0..500)
            .map(|_| CVec::from_reals(&(0..4).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap())
            .collect();
        let set = PointSet::new(pts.clone(), 0.1, 0.2).unwrap();
        for _ in 0..200 {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.2..1.2)).collect();
            let q = CVec::from_reals(&q).unwrap();
            let brute = pts.iter().map(|p| dist(p, &q)).fold(f64::INFINITY, f64::min);
            assert!((set.nearest_distance(&q) - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn box_depth_signs() {
        let d = SetDescriptor::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        assert!((d.depth(&[C64::new(0.5, 0.0)]) - 0.5).abs() < 1e-15);
        assert!((d.depth(&[C64::new(2.0, 2.0)]) + 2f64.sqrt()).abs() < 1e-15);
    }
}
