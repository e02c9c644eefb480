use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// A point of C^n. Length is fixed at construction.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CVec(Vec<C64>);

impl CVec {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        Ok(CVec(entries))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "CVec needs at least one coordinate");
        CVec(vec![C64::new(0.0, 0.0); n])
    }

    /// Builds from interleaved (re, im) pairs.
    pub fn from_reals(xs: &[f64]) -> Result<Self> {
        if !xs.len().is_multiple_of(2) {
            return Err(Error::Dimension { expected: xs.len() + 1, got: xs.len() });
        }
        CVec::new(xs.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
    }

    pub fn from_slice(z: &[C64]) -> Self {
        assert!(!z.is_empty(), "CVec needs at least one coordinate");
        CVec(z.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::Dimension { expected: n, got: self.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &CVec) -> Result<CVec> {
        other.check_dim(self.dim())?;
        Ok(CVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &CVec) -> Result<CVec> {
        other.check_dim(self.dim())?;
        Ok(CVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, s: C64) -> CVec {
        CVec(self.0.iter().map(|a| a * s).collect())
    }

    /// Interleaved real coordinates (Re z1, Im z1, Re z2, ...).
    pub fn to_reals(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }
}

impl Deref for CVec {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for CVec {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

pub fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

pub fn norm(z: &[C64]) -> f64 {
    norm_sqr(z).sqrt()
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
