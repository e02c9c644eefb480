//! Maps of the form f(x, y) = (p(x) + a y, x) and bounded backward orbits.
//!
//! Writing z_0 = (x_0, x_1) and f^-k(z_0) = (x_k, x_{k+1}), a backward orbit
//! is a sequence with x_{k-1} = p(x_k) + a x_{k+1}. Solving that relation
//! for x_k picks a branch of p^-1 at every step, and a bounded sequence
//! exists for each itinerary of branches. Gauss-Seidel sweeps with the
//! nearest root converge to it because p^-1 contracts where orbits are
//! bounded; the free end x_M only affects the first few sweeps' worth of
//! indices near M.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cvec::C64;
use crate::poly::{Direction, Poly, PolyMap};

#[derive(Clone, Debug, PartialEq)]
pub struct HenonForm {
    /// Ascending coefficients of p.
    p: Vec<C64>,
    a: C64,
}

impl HenonForm {
    /// Recognizes forward = (p(x) + a y, x) with deg p >= 2 and a != 0.
    pub fn detect(m: &PolyMap) -> Option<Self> {
        if m.dim() != 2 {
            return None;
        }
        let f = m.components(Direction::Forward);
        if f[1] != Poly::var(2, 0) {
            return None;
        }
        let mut p = vec![C64::new(0.0, 0.0); f[0].degree().max(0) as usize + 1];
        let mut a = None;
        for (e, c) in f[0].terms() {
            match (e[0], e[1]) {
                (k, 0) => p[k as usize] = *c,
                (0, 1) => a = Some(*c),
                _ => return None,
            }
        }
        let a = a?;
        while p.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            p.pop();
        }
        (p.len() >= 3).then_some(HenonForm { p, a })
    }

    pub fn degree(&self) -> usize {
        self.p.len() - 1
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn p(&self, x: C64) -> C64 {
        self.p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn forward(&self, z: [C64; 2]) -> [C64; 2] {
        [self.p(z[0]) + self.a * z[1], z[0]]
    }

    pub fn backward(&self, z: [C64; 2]) -> [C64; 2] {
        [z[1], (z[0] - self.p(z[1])) / self.a]
    }

    /// All solutions of p(x) = w.
    pub fn preimages(&self, w: C64) -> Vec<C64> {
        roots_of(&self.p, w)
    }

    /// Solution of p(x) = w closest to `guess`.
    pub fn nearest_preimage(&self, w: C64, guess: C64) -> C64 {
        if self.degree() == 2 {
            let (c0, c1, c2) = (self.p[0] - w, self.p[1], self.p[2]);
            let s = (c1 * c1 - c0 * c2 * 4.0).sqrt();
            let (r1, r2) = ((-c1 + s) / (c2 * 2.0), (-c1 - s) / (c2 * 2.0));
            return if (r1 - guess).norm_sqr() <= (r2 - guess).norm_sqr() { r1 } else { r2 };
        }
        self.preimages(w)
            .into_iter()
            .min_by(|a, b| (a - guess).norm_sqr().total_cmp(&(b - guess).norm_sqr()))
            .expect("degree >= 2")
    }
}

/// Roots of q(x) = w for ascending coefficients q of degree >= 2.
fn roots_of(q: &[C64], w: C64) -> Vec<C64> {
    if q.len() == 3 {
        let (c0, c1, c2) = (q[0] - w, q[1], q[2]);
        let s = (c1 * c1 - c0 * c2 * 4.0).sqrt();
        return vec![(-c1 + s) / (c2 * 2.0), (-c1 - s) / (c2 * 2.0)];
    }
    durand_kerner(q, w)
}

/// Roots of p(x) - w by simultaneous Weierstrass iteration.
fn durand_kerner(p: &[C64], w: C64) -> Vec<C64> {
    let d = p.len() - 1;
    let lead = p[d];
    let monic: Vec<C64> = p.iter().enumerate().map(|(k, c)| if k == 0 { (c - w) / lead } else { c / lead }).collect();
    let eval = |x: C64| monic.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
    let radius = 1.0 + monic[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> =
        (0..d).map(|k| C64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for i in 0..d {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 * radius {
            break;
        }
    }
    roots
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShadowParams {
    /// Extra depth solved beyond the deepest index used.
    pub margin: usize,
    /// The literal backward orbit is followed while it stays this small.
    pub escape_bound: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ShadowParams {
    fn default() -> Self {
        ShadowParams { margin: 60, escape_bound: 3.0, tol: 1e-12, max_sweeps: 60 }
    }
}

/// x_0, x_1, ..., so that f^-k of the shadow point is (x_k, x_{k+1}).
/// The solved stretch runs past `depth` by the margin.
#[derive(Clone, Debug)]
pub struct ShadowOrbit {
    pub xs: Vec<C64>,
    pub depth: usize,
    pub sweeps: usize,
    /// max |x_{k-1} - p(x_k) - a x_{k+1}| over the interior indices.
    pub residual: f64,
}

impl ShadowOrbit {
    pub fn point(&self, k: usize) -> [C64; 2] {
        [self.xs[k], self.xs[k + 1]]
    }

    /// Stages f^-0 .. f^-depth.
    pub fn stages(&self) -> usize {
        self.depth + 1
    }

    /// Deepest stage that was solved, margin included.
    pub fn last(&self) -> usize {
        self.xs.len() - 2
    }
}

impl HenonForm {
    /// Start of a backward orbit of z. Each x_k solves p(x) + a x = x_{k-1},
    /// the recurrence with x_{k+1} replaced by x_k, so fixed points give
    /// themselves. While the literal inverse orbit stays below the bound the
    /// root closest to it is taken, later a random one.
    pub fn initial_orbit(&self, z: [C64; 2], len: usize, bound: f64, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shifted = self.p.clone();
        shifted[1] += self.a;
        let mut xs = Vec::with_capacity(len);
        xs.push(z[0]);
        // (u_{k-1}, u_k) of the literal orbit u_0 = z_0, u_1 = z_1,
        // u_{k+1} = (u_{k-1} - p(u_k)) / a
        let mut literal = (z[1].norm() <= bound).then_some((z[0], z[1]));
        while xs.len() < len {
            let roots = roots_of(&shifted, *xs.last().expect("nonempty"));
            let next = match literal {
                Some((_, u)) => *roots
                    .iter()
                    .min_by(|a, b| (*a - u).norm_sqr().total_cmp(&(*b - u).norm_sqr()))
                    .expect("degree >= 2"),
                None => roots[rng.random_range(0..roots.len())],
            };
            xs.push(next);
            literal = literal.and_then(|(prev, u)| {
                let v = (prev - self.p(u)) / self.a;
                (v.norm() <= bound).then_some((u, v))
            });
        }
        xs
    }

    /// Gauss-Seidel sweeps with the nearest root until updates fall below
    /// 1e-2, which settles the branch choices, then Newton steps on the
    /// whole system; plain sweeps resume if Newton does not converge. The
    /// returned count adds sweeps and Newton steps.
    pub fn relax(&self, xs: &mut [C64], tol: f64, max_sweeps: usize) -> (usize, f64) {
        let mut sweeps = 0;
        let mut polished = false;
        while sweeps < max_sweeps {
            sweeps += 1;
            let change = self.sweep(xs);
            if change < tol {
                break;
            }
            if change < 1e-2 && !polished {
                polished = true;
                let (steps, ok) = self.newton(xs, tol);
                sweeps += steps;
                if ok {
                    break;
                }
            }
        }
        (sweeps, self.residual(xs))
    }

    fn sweep(&self, xs: &mut [C64]) -> f64 {
        let mut change: f64 = 0.0;
        for k in 1..xs.len() - 1 {
            let target = xs[k - 1] - self.a * xs[k + 1];
            let next = self.nearest_preimage(target, xs[k]);
            change = change.max((next - xs[k]).norm());
            xs[k] = next;
        }
        change
    }

    fn dp(&self, x: C64) -> C64 {
        self.p.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |acc, (k, c)| acc * x + c * k as f64)
    }

    /// Newton on F_k = x_{k-1} - p(x_k) - a x_{k+1}, k = 1..len-2, whose
    /// Jacobian is tridiagonal. Keeps the iterate only if it ends below tol.
    fn newton(&self, xs: &mut [C64], tol: f64) -> (usize, bool) {
        let n = xs.len();
        if n < 3 {
            return (0, true);
        }
        let zero = C64::new(0.0, 0.0);
        let backup = xs.to_vec();
        let mut c = vec![zero; n];
        let mut r = vec![zero; n];
        for step in 1..=8 {
            // forward elimination with sub-diagonal 1, diagonal -p', super-diagonal -a
            for k in 1..n - 1 {
                let f = xs[k - 1] - self.p(xs[k]) - self.a * xs[k + 1];
                let diag = -self.dp(xs[k]);
                let (pivot, rhs) = if k == 1 { (diag, -f) } else { (diag - c[k - 1], -f - r[k - 1]) };
                if !(pivot.norm() > 1e-300) {
                    xs.copy_from_slice(&backup);
                    return (step, false);
                }
                c[k] = -self.a / pivot;
                r[k] = rhs / pivot;
            }
            let mut delta = zero;
            let mut biggest: f64 = 0.0;
            for k in (1..n - 1).rev() {
                delta = r[k] - c[k] * delta;
                xs[k] += delta;
                biggest = biggest.max(delta.norm());
            }
            if !biggest.is_finite() {
                break;
            }
            if biggest < tol {
                return (step, true);
            }
        }
        xs.copy_from_slice(&backup);
        (8, false)
    }

    pub fn residual(&self, xs: &[C64]) -> f64 {
        (1..xs.len() - 1).map(|k| (xs[k - 1] - self.p(xs[k]) - self.a * xs[k + 1]).norm()).fold(0.0, f64::max)
    }

    /// x_0 followed by random roots of p(x) = x_{k-1}, a starting guess
    /// that follows no particular periodic itinerary.
    pub fn branch_orbit(&self, x0: C64, len: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = vec![x0];
        while xs.len() < len.max(2) {
            let roots = self.preimages(*xs.last().expect("nonempty"));
            xs.push(roots[rng.random_range(0..roots.len())]);
        }
        xs
    }

    /// Bounded backward orbit through the vertical line {x = z_0} chosen by
    /// z's own itinerary, solved `depth` stages deep plus the margin.
    pub fn shadow(&self, z: [C64; 2], depth: usize, params: &ShadowParams, seed: u64) -> ShadowOrbit {
        let len = depth + params.margin + 2;
        let mut xs = self.initial_orbit(z, len, params.escape_bound, seed);
        let (sweeps, residual) = self.relax(&mut xs, params.tol, params.max_sweeps);
        ShadowOrbit { xs, depth, sweeps, residual }
    }

    /// Like `shadow`, but from a given starting orbit whose first entry is
    /// replaced by x0; used to follow one itinerary across a leaf. The
    /// reference must reach past `depth`.
    pub fn shadow_from(&self, x0: C64, reference: &[C64], depth: usize, params: &ShadowParams) -> ShadowOrbit {
        let mut xs = reference.to_vec();
        xs[0] = x0;
        let (sweeps, residual) = self.relax(&mut xs, params.tol, params.max_sweeps);
        ShadowOrbit { xs, depth, sweeps, residual }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_henon_and_rejects_others() {
        let h = HenonForm::detect(&PolyMap::henon(0.3).unwrap()).unwrap();
        assert_eq!(h.degree(), 2);
        assert_eq!(h.a(), C64::new(0.3, 0.0));
        assert!(HenonForm::detect(&PolyMap::identity(2)).is_none());
    }

    #[test]
    fn cubic_preimages_solve_the_equation() {
        let p = [C64::new(0.1, 0.0), C64::new(0.0, 0.0), C64::new(-0.5, 0.2), C64::new(1.0, 0.0)];
        let h = HenonForm::detect(&PolyMap::generalized_henon(&p, C64::new(0.4, 0.0)).unwrap()).unwrap();
        let w = C64::new(0.3, -1.2);
        for r in h.preimages(w) {
            assert!((h.p(r) - w).norm() < 1e-12);
        }
    }

    #[test]
    fn shadow_orbits_satisfy_the_recurrence() {
        let h = HenonForm::detect(&PolyMap::henon(0.3).unwrap()).unwrap();
        let o = h.shadow([C64::new(0.72, 0.01), C64::new(0.69, -0.02)], 100, &ShadowParams::default(), 7);
        assert!(o.residual < 1e-9, "{}", o.residual);
        let back = h.backward(o.point(0));
        assert!((back[0] - o.xs[1]).norm() < 1e-9 && (back[1] - o.xs[2]).norm() < 1e-6);
        assert!(o.xs.iter().all(|x| x.norm() < 3.0));
    }
}
