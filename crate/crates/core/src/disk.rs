//! Polynomial analytic disks and their boundary measures.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::FftPlanner;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

// Above this degree boundary samples come from an inverse FFT.
const FFT_DEGREE: usize = 32;

/// Uniform trapezoidal rule on the unit circle.
#[derive(Clone, Debug)]
pub struct CircleQuadrature {
    nodes: Arc<Vec<C64>>,
}

impl CircleQuadrature {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        let nodes = (0..n).map(|j| C64::cis(TAU * j as f64 / n as f64)).collect();
        Ok(CircleQuadrature { nodes: Arc::new(nodes) })
    }

    /// max(64, 8 (d + 1)) nodes.
    pub fn for_degree(d: usize) -> Self {
        Self::new(default_nodes(d)).expect("positive node count")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.nodes.len() as f64
    }
}

pub fn default_nodes(d: usize) -> usize {
    64.max(8 * (d + 1))
}

/// t -> center + sum_j c_j t^j on the closed unit disk, one coefficient
/// list per coordinate, all of the same length d.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticDisk {
    center: CVec,
    coeffs: Vec<Vec<C64>>,
}

impl AnalyticDisk {
    pub fn new(center: CVec, coeffs: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.len() != center.dim() {
            return Err(Error::Dimension { expected: center.dim(), got: coeffs.len() });
        }
        let d = coeffs.iter().map(Vec::len).max().unwrap_or(0);
        let coeffs = coeffs
            .into_iter()
            .map(|mut c| {
                c.resize(d, ZERO);
                c
            })
            .collect();
        Ok(AnalyticDisk { center, coeffs })
    }

    pub fn constant(center: CVec) -> Self {
        let n = center.dim();
        AnalyticDisk { center, coeffs: vec![Vec::new(); n] }
    }

    /// t -> center + r t v.
    pub fn flat(center: CVec, v: &[C64], r: f64) -> Result<Self> {
        center.check_dim(v.len())?;
        let coeffs = v.iter().map(|c| vec![c * r]).collect();
        Self::new(center, coeffs)
    }

    /// Rebuilds a disk from the flat parameter layout of `params`.
    pub fn from_params(center: CVec, d: usize, params: &[f64]) -> Result<Self> {
        let n = center.dim();
        if params.len() != 2 * n * d {
            return Err(Error::Dimension { expected: 2 * n * d, got: params.len() });
        }
        let coeffs = (0..n)
            .map(|k| (0..d).map(|j| C64::new(params[2 * (k * d + j)], params[2 * (k * d + j) + 1])).collect())
            .collect();
        Ok(AnalyticDisk { center, coeffs })
    }

    /// Coefficients as (re, im) pairs, coordinate-major.
    pub fn params(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| c.iter().flat_map(|z| [z.re, z.im])).collect()
    }

    pub fn center(&self) -> &CVec {
        &self.center
    }

    pub fn coeffs(&self) -> &[Vec<C64>] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// Pads with zeros or truncates to degree d.
    pub fn with_degree(&self, d: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.resize(d, ZERO);
                c
            })
            .collect();
        AnalyticDisk { center: self.center.clone(), coeffs }
    }

    pub fn eval(&self, t: C64) -> CVec {
        let mut out = self.center.clone();
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            let mut acc = ZERO;
            for cj in c.iter().rev() {
                acc = (acc + cj) * t;
            }
            *o += acc;
        }
        out
    }

    /// Values at every node, sample-major (N rows of n entries).
    pub fn eval_nodes(&self, q: &CircleQuadrature) -> Vec<C64> {
        let n = self.dim();
        let nn = q.len();
        let mut out = vec![ZERO; nn * n];
        if self.degree() > FFT_DEGREE && self.degree() < nn {
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_inverse(nn);
            let mut buf = vec![ZERO; nn];
            for k in 0..n {
                buf.iter_mut().for_each(|b| *b = ZERO);
                buf[1..=self.degree()].copy_from_slice(&self.coeffs[k]);
                fft.process(&mut buf);
                for j in 0..nn {
                    out[j * n + k] = self.center[k] + buf[j];
                }
            }
        } else {
            for (j, t) in q.nodes().iter().enumerate() {
                for k in 0..n {
                    let mut acc = ZERO;
                    for cj in self.coeffs[k].iter().rev() {
                        acc = (acc + cj) * t;
                    }
                    out[j * n + k] = self.center[k] + acc;
                }
            }
        }
        out
    }
}

/// The discrete disk measure: N points h(t_j) with weight 1/N each.
pub fn disk_boundary_samples(h: &AnalyticDisk, q: &CircleQuadrature) -> Vec<(CVec, f64)> {
    let n = h.dim();
    let w = q.weight();
    h.eval_nodes(q).chunks(n).map(|z| (CVec::from_slice(z), w)).collect()
}

/// An analytic disk with its quadrature and cached boundary samples.
#[derive(Clone, Debug)]
pub struct DiskMeasure {
    disk: AnalyticDisk,
    quad: CircleQuadrature,
    samples: Vec<C64>,
}

impl DiskMeasure {
    pub fn new(disk: AnalyticDisk, quad: CircleQuadrature) -> Self {
        let samples = disk.eval_nodes(&quad);
        DiskMeasure { disk, quad, samples }
    }

    /// Uses the default node count for the disk's degree.
    pub fn with_default_quadrature(disk: AnalyticDisk) -> Self {
        let q = CircleQuadrature::for_degree(disk.degree());
        Self::new(disk, q)
    }

    pub fn disk(&self) -> &AnalyticDisk {
        &self.disk
    }

    pub fn quadrature(&self) -> &CircleQuadrature {
        &self.quad
    }

    pub fn center(&self) -> &CVec {
        self.disk.center()
    }

    pub fn weight(&self) -> f64 {
        self.quad.weight()
    }

    pub fn len(&self) -> usize {
        self.quad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad.is_empty()
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[C64]> + '_ {
        self.samples.chunks(self.disk.dim())
    }

    pub fn into_disk(self) -> AnalyticDisk {
        self.disk
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_and_horner_agree() {
        let center = CVec::new(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0)]).unwrap();
        let coeffs: Vec<Vec<C64>> = (0..2)
            .map(|k| (0..40).map(|j| C64::new(((j + k) as f64).sin(), (j as f64).cos()) / (1.0 + j as f64)).collect())
            .collect();
        let h = AnalyticDisk::new(center, coeffs).unwrap();
        let q = CircleQuadrature::for_degree(h.degree());
        let fast = h.eval_nodes(&q);
        for (j, t) in q.nodes().iter().enumerate().step_by(37) {
            let slow = h.eval(*t);
            for k in 0..2 {
                assert!((fast[j * 2 + k] - slow[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn params_round_trip() {
        let center = CVec::new(vec![C64::new(1.0, 0.0)]).unwrap();
        let h = AnalyticDisk::new(center.clone(), vec![vec![C64::new(0.5, -0.25), C64::new(0.0, 2.0)]]).unwrap();
        let back = AnalyticDisk::from_params(center, 2, &h.params()).unwrap();
        assert_eq!(h, back);
    }
}
