//! Weighted point clouds standing in for probability measures on C^n.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cvec::C64;
use crate::error::{Error, Result};
use crate::grid::fmt_f64;

pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    n: usize,
    coords: Vec<C64>,
    weights: Vec<f64>,
    pub provenance: String,
}

impl PointCloud {
    /// `coords` holds the points back to back, n entries each.
    pub fn new(n: usize, coords: Vec<C64>, weights: Vec<f64>, provenance: &str) -> Result<Self> {
        if n == 0 || coords.len() != n * weights.len() {
            return Err(Error::Dimension { expected: n * weights.len(), got: coords.len() });
        }
        if coords.iter().any(|c| c.re.is_nan() || c.im.is_nan()) {
            return Err(Error::InvalidArgument("cloud coordinates must not be NaN".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("cloud weights must be nonnegative".into()));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidArgument(format!("cloud weights sum to {total}, not 1")));
        }
        Ok(PointCloud { n, coords, weights, provenance: provenance.to_string() })
    }

    pub fn uniform(n: usize, coords: Vec<C64>, provenance: &str) -> Result<Self> {
        let count = coords.len() / n.max(1);
        if count == 0 {
            return Err(Error::InvalidArgument("empty cloud".into()));
        }
        Self::new(n, coords, vec![1.0 / count as f64; count], provenance)
    }

    pub fn dirac(z: &[C64]) -> Self {
        PointCloud { n: z.len(), coords: z.to_vec(), weights: vec![1.0], provenance: "dirac".into() }
    }

    /// Uniform samples of the real box [lo, hi] in (Re z1, Im z1, ...).
    pub fn sample_box(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || !lo.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument("box bounds need matching even lengths".into()));
        }
        let n = lo.len() / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(count * n);
        for _ in 0..count {
            for k in 0..n {
                let re = rng.random_range(lo[2 * k]..=hi[2 * k]);
                let im = rng.random_range(lo[2 * k + 1]..=hi[2 * k + 1]);
                coords.push(C64::new(re, im));
            }
        }
        Self::uniform(n, coords, &format!("box sample seed={seed} count={count}"))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[C64]> + '_ {
        self.coords.chunks(self.n)
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted mean of f, summed pairwise for a fixed reduction order.
    pub fn integrate(&self, f: impl Fn(&[C64]) -> f64) -> f64 {
        let terms: Vec<f64> = self.points().zip(&self.weights).map(|(z, w)| w * f(z)).collect();
        pairwise_sum(&terms)
    }

    /// One row per point: Re/Im of each coordinate, then the weight.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let cols: Vec<String> = (1..=self.n).flat_map(|k| [format!("re{k}"), format!("im{k}")]).collect();
        let _ = writeln!(out, "# {}", self.provenance);
        let _ = writeln!(out, "{},weight", cols.join(","));
        for (z, w) in self.points().zip(&self.weights) {
            let row: Vec<String> = z.iter().flat_map(|c| [fmt_f64(c.re), fmt_f64(c.im)]).collect();
            let _ = writeln!(out, "{},{}", row.join(","), fmt_f64(*w));
        }
        out
    }
}

/// Sum with a fixed binary-tree order, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
