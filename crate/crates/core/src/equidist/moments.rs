//! Mixed real moments of point clouds, the weak-convergence proxy.

use serde::Serialize;

use crate::cloud::{pairwise_sum, PointCloud};
use crate::cvec::C64;
use crate::error::{Error, Result};

/// Exponent vectors over `dims` real coordinates with total degree <= d,
/// by degree and then lexicographically descending.
pub fn moment_exponents(dims: usize, d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=d as u32 {
        let mut e = vec![0u32; dims];
        fill(&mut e, 0, total, &mut out);
    }
    out
}

fn fill(e: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == e.len() {
        e[pos] = left;
        out.push(e.clone());
        return;
    }
    for k in (0..=left).rev() {
        e[pos] = k;
        fill(e, pos + 1, left - k, out);
    }
    e[pos] = 0;
}

/// Evaluates monomials at one point of C^n, taken as
/// (Re z1, Im z1, ..., Re zn, Im zn).
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    pub degree: usize,
    pub exponents: Vec<Vec<u32>>,
    dims: usize,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: usize) -> Self {
        MonomialBasis { degree, exponents: moment_exponents(2 * n, degree), dims: 2 * n }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// out[k] += w * monomial_k(z)
    pub fn accumulate(&self, z: &[C64], w: f64, out: &mut [f64]) {
        let d = self.degree + 1;
        let mut powers = [1.0f64; 64];
        let mut table = if self.dims * d <= 64 { None } else { Some(vec![1.0; self.dims * d]) };
        let pw: &mut [f64] = match table.as_mut() {
            Some(t) => t,
            None => &mut powers[..self.dims * d],
        };
        for (k, c) in z.iter().enumerate() {
            for (r, v) in [(2 * k, c.re), (2 * k + 1, c.im)] {
                pw[r * d] = 1.0;
                for j in 1..d {
                    pw[r * d + j] = pw[r * d + j - 1] * v;
                }
            }
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            let mut m = w;
            for (r, &p) in e.iter().enumerate() {
                if p > 0 {
                    m *= pw[r * d + p as usize];
                }
            }
            *o += m;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentVector {
    pub degree: usize,
    pub exponents: Vec<Vec<u32>>,
    pub values: Vec<f64>,
}

impl MomentVector {
    /// max over entries of |a - b| / (1 + |a| + |b|).
    pub fn distance(&self, other: &MomentVector) -> Result<f64> {
        if self.exponents != other.exponents {
            return Err(Error::Dimension { expected: self.values.len(), got: other.values.len() });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs() + b.abs()))
            .fold(0.0, f64::max))
    }
}

/// Weighted power sums of the cloud's real coordinates up to total degree D.
pub fn moment_vector(c: &PointCloud, degree: usize) -> Result<MomentVector> {
    if degree < 1 {
        return Err(Error::InvalidArgument("moment degree must be >= 1".into()));
    }
    let basis = MonomialBasis::new(c.dim(), degree);
    // per-entry terms, then a pairwise sum per entry
    let mut columns = vec![Vec::with_capacity(c.len()); basis.len()];
    let mut row = vec![0.0; basis.len()];
    for (z, w) in c.points().zip(c.weights()) {
        row.iter_mut().for_each(|v| *v = 0.0);
        basis.accumulate(z, *w, &mut row);
        for (col, v) in columns.iter_mut().zip(&row) {
            col.push(*v);
        }
    }
    let values = columns.iter().map(|col| pairwise_sum(col)).collect();
    Ok(MomentVector { degree, exponents: basis.exponents, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_count_is_binomial() {
        assert_eq!(moment_exponents(4, 4).len(), 70);
        assert_eq!(moment_exponents(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }
}
