//! Scalar fields on C^n used as integrands of disk functionals.

use rand::Rng;
use serde::Serialize;

use crate::cvec::{norm_sqr, C64};
use crate::jensen::sets::SetDescriptor;
use crate::poly::Poly;

pub trait Field: Sync {
    fn eval(&self, z: &[C64]) -> f64;

    /// Continuous stand-in that only steers the disk search; reported
    /// values always come from `eval`.
    fn surrogate(&self, z: &[C64]) -> f64 {
        self.eval(z)
    }
}

/// Wraps a closure as a field.
pub struct FnField<F>(pub F);

impl<F: Fn(&[C64]) -> f64 + Sync> Field for FnField<F> {
    fn eval(&self, z: &[C64]) -> f64 {
        (self.0)(z)
    }
}

/// u = -1 on the interior of a set, 0 elsewhere. The surrogate ramps
/// linearly across a band of the given width around the boundary.
#[derive(Clone, Debug)]
pub struct InteriorIndicator {
    pub set: SetDescriptor,
    pub ramp: f64,
}

impl InteriorIndicator {
    pub fn new(set: SetDescriptor) -> Self {
        InteriorIndicator { set, ramp: 0.05 }
    }
}

impl Field for InteriorIndicator {
    fn eval(&self, z: &[C64]) -> f64 {
        if self.set.in_interior(z) {
            -1.0
        } else {
            0.0
        }
    }

    fn surrogate(&self, z: &[C64]) -> f64 {
        let d = self.set.depth(z);
        -(0.5 + d / self.ramp).clamp(0.0, 1.0)
    }
}

/// Building blocks of plurisubharmonic test functions. Every term is psh
/// for nonnegative weight, except `Pluriharmonic`, which is psh for any
/// sign.
#[derive(Clone, Debug, Serialize)]
pub enum PshTerm {
    /// w |z - c|^2
    NormSq { w: f64, c: Vec<C64> },
    /// w |P|^2
    AbsSq { w: f64, p: PolyRepr },
    /// w log(1 + |P|^2)
    LogOnePlus { w: f64, p: PolyRepr },
    /// w exp(Re P)
    ExpRe { w: f64, p: PolyRepr },
    /// w log(exp(Re P) + exp(Re Q))
    LogSumExp { w: f64, p: PolyRepr, q: PolyRepr },
    /// Re P
    Pluriharmonic { p: PolyRepr },
    /// w max(Re P, Re Q): psh but only Lipschitz
    MaxRe { w: f64, p: PolyRepr, q: PolyRepr },
}

/// Serializable copy of a polynomial.
#[derive(Clone, Debug, Serialize)]
pub struct PolyRepr {
    #[serde(skip)]
    poly: Option<Poly>,
    pub terms: Vec<(Vec<u32>, [f64; 2])>,
}

impl PolyRepr {
    pub fn new(p: Poly) -> Self {
        let terms = p.terms().iter().map(|(e, c)| (e.clone(), [c.re, c.im])).collect();
        PolyRepr { poly: Some(p), terms }
    }

    fn eval(&self, z: &[C64]) -> C64 {
        self.poly.as_ref().expect("constructed with a polynomial").eval(z)
    }
}

impl PshTerm {
    fn eval(&self, z: &[C64]) -> f64 {
        match self {
            PshTerm::NormSq { w, c } => w * z.iter().zip(c).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>(),
            PshTerm::AbsSq { w, p } => w * p.eval(z).norm_sqr(),
            PshTerm::LogOnePlus { w, p } => w * p.eval(z).norm_sqr().ln_1p(),
            PshTerm::ExpRe { w, p } => w * p.eval(z).re.exp(),
            PshTerm::LogSumExp { w, p, q } => {
                let (a, b) = (p.eval(z).re, q.eval(z).re);
                let m = a.max(b);
                w * (m + ((a - m).exp() + (b - m).exp()).ln())
            }
            PshTerm::Pluriharmonic { p } => p.eval(z).re,
            PshTerm::MaxRe { w, p, q } => w * p.eval(z).re.max(q.eval(z).re),
        }
    }
}

/// Nonnegative combination of psh terms plus a constant.
#[derive(Clone, Debug, Serialize)]
pub struct PshField {
    pub terms: Vec<PshTerm>,
    pub constant: f64,
}

impl Field for PshField {
    fn eval(&self, z: &[C64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.eval(z)).sum::<f64>()
    }
}

impl PshField {
    pub fn norm_sq(n: usize) -> Self {
        PshField { terms: vec![PshTerm::NormSq { w: 1.0, c: vec![C64::new(0.0, 0.0); n] }], constant: 0.0 }
    }

    /// Random smooth psh function of C^n built from 1 to 3 terms with
    /// degree <= 2 polynomials. Kinked terms are left out so that circle
    /// quadrature stays spectrally accurate.
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let count = rng.random_range(1..=3);
        let terms = (0..count)
            .map(|_| {
                let w = rng.random_range(0.1..1.0);
                match rng.random_range(0..6) {
                    0 => PshTerm::NormSq { w, c: random_point(rng, n, 1.0) },
                    1 => PshTerm::AbsSq { w, p: random_poly(rng, n, 2, 0.7) },
                    2 => PshTerm::LogOnePlus { w, p: random_poly(rng, n, 2, 1.0) },
                    3 => PshTerm::ExpRe { w, p: random_poly(rng, n, 2, 0.5) },
                    4 => PshTerm::LogSumExp { w, p: random_poly(rng, n, 2, 0.7), q: random_poly(rng, n, 2, 0.7) },
                    _ => PshTerm::Pluriharmonic { p: random_poly(rng, n, 2, 1.0) },
                }
            })
            .collect();
        PshField { terms, constant: rng.random_range(-1.0..1.0) }
    }
}

/// -|z - c|^2: a strict local maximum at c, so not psh.
pub struct NegNormSq(pub Vec<C64>);

impl Field for NegNormSq {
    fn eval(&self, z: &[C64]) -> f64 {
        -z.iter().zip(&self.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
    }
}

/// |z|^2.
pub struct NormSq;

impl Field for NormSq {
    fn eval(&self, z: &[C64]) -> f64 {
        norm_sqr(z)
    }
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect()
}

/// Random polynomial of degree <= d with coefficients bounded by `scale`.
pub fn random_poly<R: Rng>(rng: &mut R, n: usize, d: u32, scale: f64) -> PolyRepr {
    let mut terms = Vec::new();
    let mut e = vec![0u32; n];
    loop {
        if e.iter().sum::<u32>() <= d {
            let c = C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            terms.push((e.clone(), c));
        }
        // odometer over exponent vectors with entries <= d
        let mut k = 0;
        while k < n {
            e[k] += 1;
            if e[k] <= d {
                break;
            }
            e[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    PolyRepr::new(Poly::new(n, terms).expect("consistent dimension"))
}
