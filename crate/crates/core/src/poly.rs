//! Multivariate complex polynomials and polynomial automorphisms with a
//! user-supplied inverse.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cvec::{dist, CVec, C64};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Round-trip tolerance for the inverse check.
pub const INVERSE_TOL: f64 = 1e-10;
const INVERSE_SAMPLES: usize = 100;
const INVERSE_RADIUS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    // sorted by exponent vector, descending; no duplicates, no zero coefficients
    terms: Vec<(Vec<u32>, C64)>,
}

impl Poly {
    pub fn new(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, C64)>) -> Result<Self> {
        let mut acc: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Dimension { expected: n, got: e.len() });
            }
            *acc.entry(e).or_insert(ZERO) += c;
        }
        Ok(Self::from_map(n, acc))
    }

    fn from_map(n: usize, acc: BTreeMap<Vec<u32>, C64>) -> Self {
        let terms = acc.into_iter().rev().filter(|(_, c)| *c != ZERO).collect();
        Poly { n, terms }
    }

    pub fn zero(n: usize) -> Self {
        Poly { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        Self::from_map(n, BTreeMap::from([(vec![0; n], c)]))
    }

    /// The coordinate function z_k.
    pub fn var(n: usize, k: usize) -> Self {
        let mut e = vec![0; n];
        e[k] = 1;
        Poly { n, terms: vec![(e, ONE)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Vec<u32>, C64)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, -1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms.iter().map(|(e, _)| e.iter().map(|&p| p as i64).sum::<i64>()).max().unwrap_or(-1)
    }

    /// Evaluation grouped by the exponent of the first variable, with
    /// Horner accumulation across groups.
    pub fn eval(&self, z: &[C64]) -> C64 {
        debug_assert_eq!(z.len(), self.n);
        let mut acc = ZERO;
        let mut group = ZERO;
        let mut cur = match self.terms.first() {
            Some((e, _)) => e[0],
            None => return ZERO,
        };
        for (e, c) in &self.terms {
            if e[0] != cur {
                acc = (acc + group) * powu(z[0], cur - e[0]);
                group = ZERO;
                cur = e[0];
            }
            let mut m = *c;
            for (k, &p) in e.iter().enumerate().skip(1) {
                if p > 0 {
                    m *= powu(z[k], p);
                }
            }
            group += m;
        }
        (acc + group) * powu(z[0], cur)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut acc = self.to_map();
        for (e, c) in &other.terms {
            *acc.entry(e.clone()).or_insert(ZERO) += c;
        }
        Self::from_map(self.n, acc)
    }

    pub fn scale(&self, s: C64) -> Poly {
        let acc = self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect();
        Self::from_map(self.n, acc)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut acc: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(ZERO) += ca * cb;
            }
        }
        Self::from_map(self.n, acc)
    }

    /// P(q_1, ..., q_n), failing once any intermediate exceeds `cap` terms.
    pub fn substitute(&self, subs: &[Poly], cap: usize) -> Result<Poly> {
        if subs.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: subs.len() });
        }
        let m = subs[0].n;
        // powers[k][p] = subs[k]^p, built lazily up to the needed exponent
        let mut powers: Vec<Vec<Poly>> = subs.iter().map(|_| vec![Poly::constant(m, ONE)]).collect();
        for (e, _) in &self.terms {
            for (k, &p) in e.iter().enumerate() {
                while powers[k].len() <= p as usize {
                    let next = powers[k].last().unwrap().mul(&subs[k]);
                    check_cap(&next, cap)?;
                    powers[k].push(next);
                }
            }
        }
        let mut out = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(m, *c);
            for (k, &p) in e.iter().enumerate() {
                if p > 0 {
                    t = t.mul(&powers[k][p as usize]);
                    check_cap(&t, cap)?;
                }
            }
            out = out.add(&t);
            check_cap(&out, cap)?;
        }
        Ok(out)
    }

    fn to_map(&self) -> BTreeMap<Vec<u32>, C64> {
        self.terms.iter().cloned().collect()
    }
}

fn check_cap(p: &Poly, cap: usize) -> Result<()> {
    if p.term_count() > cap {
        Err(Error::TermCap { cap })
    } else {
        Ok(())
    }
}

#[inline]
pub fn powu(z: C64, p: u32) -> C64 {
    match p {
        0 => ONE,
        1 => z,
        2 => z * z,
        _ => z.powu(p),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Limits on symbolic composition.
#[derive(Clone, Copy, Debug)]
pub struct SymbolicBudget {
    pub max_k: usize,
    pub term_cap: usize,
}

impl Default for SymbolicBudget {
    fn default() -> Self {
        SymbolicBudget { max_k: 6, term_cap: 200_000 }
    }
}

/// Polynomial automorphism of C^n with its inverse supplied explicitly.
#[derive(Clone, Debug)]
pub struct PolyMap {
    n: usize,
    forward: Vec<Poly>,
    backward: Vec<Poly>,
    lambda1: f64,
    lambda1_backward: f64,
    label: String,
}

impl PolyMap {
    /// Checks the inverse in both orders on random points of the ball of
    /// radius 10 before accepting the map.
    pub fn new(forward: Vec<Poly>, backward: Vec<Poly>, lambda1: f64, label: &str) -> Result<Self> {
        let n = forward.len();
        if n == 0 || backward.len() != n {
            return Err(Error::Dimension { expected: n.max(1), got: backward.len() });
        }
        if let Some(p) = forward.iter().chain(&backward).find(|p| p.dim() != n) {
            return Err(Error::Dimension { expected: n, got: p.dim() });
        }
        if !(lambda1 >= 1.0) {
            return Err(Error::InvalidArgument(format!("lambda1 must be >= 1, got {lambda1}")));
        }
        let map = PolyMap { n, forward, backward, lambda1, lambda1_backward: lambda1, label: label.to_string() };
        map.check_inverse()?;
        Ok(map)
    }

    /// Overrides the degree used for backward escape rates; by default it
    /// equals the forward one.
    pub fn with_lambda1_backward(mut self, l: f64) -> Result<Self> {
        if !(l >= 1.0) {
            return Err(Error::InvalidArgument(format!("backward lambda1 must be >= 1, got {l}")));
        }
        self.lambda1_backward = l;
        Ok(self)
    }

    /// f(x, y) = (x^2 + a y, x) with inverse (u, v) -> (v, (u - v^2) / a).
    pub fn henon(a: f64) -> Result<Self> {
        Self::generalized_henon(&[C64::new(0.0, 0.0), C64::new(0.0, 0.0), ONE], C64::new(a, 0.0))
    }

    /// f(x, y) = (p(x) + a y, x) for a polynomial p given by ascending
    /// coefficients; requires deg p >= 2 and a != 0.
    pub fn generalized_henon(p: &[C64], a: C64) -> Result<Self> {
        let d = p.iter().rposition(|c| *c != ZERO).unwrap_or(0);
        if d < 2 || a == ZERO {
            return Err(Error::InvalidArgument("need deg p >= 2 and a != 0".into()));
        }
        let px = |var: usize| -> Vec<(Vec<u32>, C64)> {
            p.iter()
                .enumerate()
                .filter(|(_, c)| **c != ZERO)
                .map(|(k, c)| {
                    let mut e = vec![0; 2];
                    e[var] = k as u32;
                    (e, *c)
                })
                .collect()
        };
        let mut f0 = px(0);
        f0.push((vec![0, 1], a));
        let forward = vec![Poly::new(2, f0)?, Poly::var(2, 0)];
        // backward: (u, v) -> (v, (u - p(v)) / a)
        let inv = ONE / a;
        let mut b1: Vec<(Vec<u32>, C64)> = px(1).into_iter().map(|(e, c)| (e, -c * inv)).collect();
        b1.push((vec![1, 0], inv));
        let backward = vec![Poly::var(2, 1), Poly::new(2, b1)?];
        let label = if d == 2 && p[0] == ZERO && p[1] == ZERO && p[2] == ONE {
            format!("henon a={}", fmt_c(a))
        } else {
            format!("henon-like deg={} a={}", d, fmt_c(a))
        };
        PolyMap::new(forward, backward, d as f64, &label)
    }

    pub fn identity(n: usize) -> Self {
        let id: Vec<Poly> = (0..n).map(|k| Poly::var(n, k)).collect();
        PolyMap::new(id.clone(), id, 1.0, "identity").expect("identity is invertible")
    }

    /// z -> z + shift.
    pub fn translation(shift: &[C64]) -> Self {
        let n = shift.len();
        let comp = |sign: f64| -> Vec<Poly> {
            (0..n).map(|k| Poly::var(n, k).add(&Poly::constant(n, shift[k] * sign))).collect()
        };
        PolyMap::new(comp(1.0), comp(-1.0), 1.0, "translation").expect("translation is invertible")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Forward => self.lambda1,
            Direction::Backward => self.lambda1_backward,
        }
    }

    pub fn components(&self, dir: Direction) -> &[Poly] {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// The same automorphism with directions swapped.
    pub fn inverse(&self) -> PolyMap {
        PolyMap {
            n: self.n,
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            lambda1: self.lambda1_backward,
            lambda1_backward: self.lambda1,
            label: format!("inverse of {}", self.label),
        }
    }

    pub fn eval(&self, z: &[C64], dir: Direction) -> Result<CVec> {
        if z.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: z.len() });
        }
        let mut out = CVec::zeros(self.n);
        self.eval_into(z, dir, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation for hot loops; `out` must not alias `z`.
    #[inline]
    pub fn eval_into(&self, z: &[C64], dir: Direction, out: &mut [C64]) {
        for (o, p) in out.iter_mut().zip(self.components(dir)) {
            *o = p.eval(z);
        }
    }

    /// Symbolic k-fold composition.
    pub fn compose(&self, k: usize, budget: SymbolicBudget) -> Result<Vec<Poly>> {
        if k > budget.max_k {
            return Err(Error::SymbolicBudget { k, budget: budget.max_k });
        }
        let mut cur: Vec<Poly> = (0..self.n).map(|j| Poly::var(self.n, j)).collect();
        for _ in 0..k {
            cur = self.forward.iter().map(|p| p.substitute(&cur, budget.term_cap)).collect::<Result<_>>()?;
        }
        Ok(cur)
    }

    fn check_inverse(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1f0_5eed);
        let mut worst: f64 = 0.0;
        let mut w = vec![ZERO; self.n];
        let mut back = vec![ZERO; self.n];
        for _ in 0..INVERSE_SAMPLES {
            let z = random_in_ball(&mut rng, self.n, INVERSE_RADIUS);
            for (first, second) in
                [(Direction::Forward, Direction::Backward), (Direction::Backward, Direction::Forward)]
            {
                self.eval_into(&z, first, &mut w);
                self.eval_into(&w, second, &mut back);
                let r = dist(&back, &z);
                worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
            }
        }
        if worst > INVERSE_TOL {
            return Err(Error::InverseCheck { residual: worst, tol: INVERSE_TOL });
        }
        Ok(())
    }
}

/// Uniform sample from the Euclidean ball of C^n = R^{2n}.
pub fn random_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<C64> {
    loop {
        let z: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let r = crate::cvec::norm(&z);
        if r <= 1.0 {
            return z.into_iter().map(|c| c * radius).collect();
        }
    }
}

fn fmt_c(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn horner_grouping_matches_naive() {
        let p = Poly::new(
            2,
            vec![(vec![3, 1], c(2.0)), (vec![3, 0], c(-1.0)), (vec![1, 2], C64::new(0.5, 1.0)), (vec![0, 0], c(4.0))],
        )
        .unwrap();
        let z = [C64::new(0.3, -1.1), C64::new(-0.7, 0.2)];
        let naive: C64 = p.terms().iter().map(|(e, k)| k * z[0].powu(e[0]) * z[1].powu(e[1])).sum();
        assert!((p.eval(&z) - naive).norm() < 1e-14);
    }

    #[test]
    fn duplicate_terms_merge_and_cancel() {
        let p = Poly::new(1, vec![(vec![2], c(1.0)), (vec![2], c(-1.0)), (vec![0], c(3.0))]).unwrap();
        assert_eq!(p.term_count(), 1);
        assert_eq!(p.degree(), 0);
        assert_eq!(Poly::zero(2).degree(), -1);
    }

    #[test]
    fn rejects_wrong_inverse() {
        let f = vec![Poly::var(1, 0).scale(c(2.0))];
        let b = vec![Poly::var(1, 0)];
        assert!(matches!(PolyMap::new(f, b, 1.0, "bad"), Err(Error::InverseCheck { .. })));
    }

    #[test]
    fn composition_term_cap_is_reported() {
        let m = PolyMap::henon(0.3).unwrap();
        let err = m.compose(4, SymbolicBudget { max_k: 6, term_cap: 10 }).unwrap_err();
        assert!(err.to_string().contains("10"));
    }
}
