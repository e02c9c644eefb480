//! Disk functionals and their minimization over polynomial disks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::disk::{AnalyticDisk, CircleQuadrature, DiskMeasure};
use crate::error::{Error, Result};
use crate::jensen::field::Field;
use crate::jensen::sets::Domain;

/// Integral of u against the disk measure. A sample where u = -inf makes
/// the whole value -inf.
pub fn disk_functional(u: &dyn Field, mu: &DiskMeasure) -> f64 {
    let w = mu.weight();
    let mut acc = 0.0;
    for z in mu.samples() {
        let v = u.eval(z);
        if v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        acc += v;
    }
    acc * w
}

#[derive(Clone, Debug, Serialize)]
pub struct JensenReport {
    pub slack: f64,
    pub tol: f64,
    pub passed: bool,
    #[serde(skip)]
    pub measure: DiskMeasure,
}

/// Slack of the sub-mean-value inequality u(x) <= integral of u.
pub fn jensen_slack(u: &dyn Field, x: &[C64], mu: &DiskMeasure, tol: f64) -> Result<JensenReport> {
    if mu.center().len() != x.len() || mu.center().iter().zip(x).any(|(a, b)| a != b) {
        return Err(Error::CenterMismatch);
    }
    let slack = disk_functional(u, mu) - u.eval(x);
    Ok(JensenReport { slack, tol, passed: slack >= -tol, measure: mu.clone() })
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub sweeps: usize,
    /// First step, as a fraction of the coefficient bound.
    pub initial_step: f64,
    /// Steps shrink until below this fraction of the coefficient bound.
    pub min_step: f64,
    /// Largest boundary excursion out of U a reported disk may have.
    pub feasibility_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 32,
            sweeps: 8,
            initial_step: 0.25,
            min_step: 1e-4,
            feasibility_tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

/// The finite-dimensional family of disks searched: polynomial disks of
/// the given degree with every coefficient of modulus at most the bound.
/// Constructed seed disks may go up to `max_seed_degree`.
#[derive(Clone, Debug, Serialize)]
pub struct DiskSpace {
    pub degree: usize,
    pub coeff_bound: f64,
    pub domain: Domain,
    /// Quadratic penalty weight; None means 100 times the oscillation of u
    /// seen on the starting disks.
    pub penalty: Option<f64>,
    pub lift_order: usize,
    pub max_seed_degree: usize,
}

impl DiskSpace {
    pub fn new(degree: usize, coeff_bound: f64, domain: Domain) -> Result<Self> {
        if degree < 1 || !(coeff_bound > 0.0) {
            return Err(Error::InvalidArgument("disk space needs degree >= 1 and a positive bound".into()));
        }
        Ok(DiskSpace { degree, coeff_bound, domain, penalty: None, lift_order: 64, max_seed_degree: 1024 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Origin {
    Constant,
    Warm,
    Restart(usize),
    Seed(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct PoletskyResult {
    pub value: f64,
    /// Exact functional value of the constant disk, u(x).
    pub constant_value: f64,
    /// Set when no searched disk stayed inside U; the constant disk is returned.
    pub infeasible: bool,
    /// Set when the winning value is -inf.
    pub hit_pole: bool,
    pub origin: Origin,
    pub max_violation: f64,
    #[serde(skip)]
    pub measure: DiskMeasure,
}

impl PoletskyResult {
    pub fn disk(&self) -> &AnalyticDisk {
        self.measure.disk()
    }
}

/// Seed for restart k, derived from the master seed only.
pub fn restart_seed(master: u64, k: usize) -> u64 {
    let mut z = master ^ (k as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Approximate infimum of the disk functional over the space; an upper
/// bound on the true infimum and never above u(x).
pub fn poletsky_infimum(u: &dyn Field, x: &CVec, space: &DiskSpace, opt: &OptimizerConfig) -> Result<PoletskyResult> {
    poletsky_infimum_seeded(u, x, space, opt, &[], None)
}

/// As `poletsky_infimum`, also scoring the given seed disks and starting
/// one extra local search from `warm` (raised to the space's degree).
pub fn poletsky_infimum_seeded(
    u: &dyn Field,
    x: &CVec,
    space: &DiskSpace,
    opt: &OptimizerConfig,
    seeds: &[AnalyticDisk],
    warm: Option<&AnalyticDisk>,
) -> Result<PoletskyResult> {
    space.domain.check_dim(x.dim())?;
    if !space.domain.contains(x) {
        return Err(Error::OutsideDomain);
    }
    let n = x.dim();
    let d = space.degree;
    let rho = space.coeff_bound;
    let constant = DiskMeasure::with_default_quadrature(AnalyticDisk::constant(x.clone()));
    let quad = CircleQuadrature::for_degree(d);
    let constant_value = u.eval(x);

    let starts: Vec<(Origin, Vec<f64>)> = {
        let mut s = Vec::with_capacity(opt.restarts + 1);
        if let Some(w) = warm {
            s.push((Origin::Warm, clamp_params(w.with_degree(d).params(), rho)));
        }
        for k in 0..opt.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opt.seed, k));
            s.push((Origin::Restart(k), random_params(&mut rng, n, d, rho)));
        }
        s
    };

    let kappa = match space.penalty {
        Some(k) => k,
        None => {
            let mut lo = constant_value;
            let mut hi = constant_value;
            for (_, p) in starts.iter().take(4) {
                let mu = DiskMeasure::with_default_quadrature(AnalyticDisk::from_params(x.clone(), d, p)?);
                for z in mu.samples() {
                    let v = u.surrogate(z);
                    if v.is_finite() {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            100.0 * (hi - lo).max(1e-3)
        }
    };

    let searched: Vec<(Origin, AnalyticDisk)> = starts
        .into_par_iter()
        .map(|(origin, p0)| {
            let objective = |p: &[f64]| -> f64 {
                let disk = AnalyticDisk::from_params(x.clone(), d, p).expect("layout fixed by degree");
                let mu = DiskMeasure::new(disk, quad.clone());
                let w = mu.weight();
                let mut acc = 0.0;
                for z in mu.samples() {
                    let v = space.domain.violation(z);
                    acc += u.surrogate(z).max(-1e12) + kappa * v * v;
                }
                acc * w
            };
            let p = coordinate_search(&objective, p0, rho, opt);
            let disk = AnalyticDisk::from_params(x.clone(), d, &p).expect("layout fixed by degree");
            (origin, disk)
        })
        .collect();

    // the warm disk itself competes too, so a larger space never does worse
    let candidates = warm
        .map(|w| (Origin::Warm, w.clone()))
        .into_iter()
        .chain(searched)
        .chain(seeds.iter().enumerate().map(|(k, s)| (Origin::Seed(k), s.clone())));

    let mut best: Option<(f64, Origin, DiskMeasure, f64)> = None;
    let mut any_feasible = false;
    for (origin, disk) in candidates {
        if disk.dim() != n || disk.center() != x || disk.degree() > space.max_seed_degree.max(d) {
            continue;
        }
        let Some((mu, viol)) = make_feasible(disk, &space.domain, opt.feasibility_tol) else {
            continue;
        };
        any_feasible = true;
        let v = disk_functional(u, &mu);
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, origin, mu, viol));
        }
    }
    let (value, origin, measure, max_violation) = match best {
        Some(b) if b.0 < constant_value => b,
        _ => (constant_value, Origin::Constant, constant, 0.0),
    };
    Ok(PoletskyResult {
        value,
        constant_value,
        infeasible: !any_feasible && (opt.restarts > 0 || !seeds.is_empty()),
        hit_pole: value == f64::NEG_INFINITY,
        origin,
        max_violation,
        measure,
    })
}

/// Measures the boundary excursion out of U and, if it is above the
/// tolerance, pulls the disk toward its center (h -> x + s (h - x)) by
/// bisection on s. For convex U this always yields a feasible disk.
pub fn make_feasible(disk: AnalyticDisk, domain: &Domain, tol: f64) -> Option<(DiskMeasure, f64)> {
    let mu = DiskMeasure::with_default_quadrature(disk);
    let viol = max_violation(&mu, domain);
    if viol <= tol {
        return Some((mu, viol));
    }
    let disk = mu.into_disk();
    let scaled = |s: f64| -> DiskMeasure {
        let coeffs = disk.coeffs().iter().map(|c| c.iter().map(|v| v * s).collect()).collect();
        DiskMeasure::with_default_quadrature(AnalyticDisk::new(disk.center().clone(), coeffs).expect("same shape"))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if max_violation(&scaled(mid), domain) <= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return None;
    }
    let mu = scaled(lo);
    let viol = max_violation(&mu, domain);
    (viol <= tol).then_some((mu, viol))
}

pub fn max_violation(mu: &DiskMeasure, domain: &Domain) -> f64 {
    mu.samples().map(|z| domain.violation(z)).fold(0.0, f64::max)
}

fn random_params<R: Rng>(rng: &mut R, n: usize, d: usize, rho: f64) -> Vec<f64> {
    // overall size uniform in (0, rho], spread over coefficients with
    // decaying weights so low-degree terms dominate
    let size = rho * rng.random_range(0.05..1.0);
    let mut p = Vec::with_capacity(2 * n * d);
    for _ in 0..n {
        for j in 0..d {
            let w = size / (j as f64 + 1.0);
            let (r, th): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..std::f64::consts::TAU));
            p.push(w * r * th.cos());
            p.push(w * r * th.sin());
        }
    }
    clamp_params(p, rho)
}

/// Projects every complex coefficient onto the disk of radius rho.
fn clamp_params(mut p: Vec<f64>, rho: f64) -> Vec<f64> {
    for c in p.chunks_mut(2) {
        let m = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if m > rho {
            c[0] *= rho / m;
            c[1] *= rho / m;
        }
    }
    p
}

/// Derivative-free coordinate search: probe +-step along each coordinate,
/// jump to the vertex of the parabola through the three values when it is
/// better, and halve a coordinate's step when neither probe improves.
pub fn coordinate_search(obj: &dyn Fn(&[f64]) -> f64, mut p: Vec<f64>, rho: f64, opt: &OptimizerConfig) -> Vec<f64> {
    let dim = p.len();
    let mut steps = vec![opt.initial_step * rho; dim];
    let min_step = opt.min_step * rho;
    let mut f0 = obj(&p);
    for _ in 0..opt.sweeps {
        if steps.iter().all(|s| *s < min_step) {
            break;
        }
        for i in 0..dim {
            let s = steps[i];
            if s < min_step {
                continue;
            }
            let base = p[i];
            let try_at = |v: f64, p: &mut Vec<f64>| -> f64 {
                p[i] = v;
                let q = clamp_params(p.clone(), rho);
                let f = obj(&q);
                p[i] = base;
                f
            };
            let fp = try_at(base + s, &mut p);
            let fm = try_at(base - s, &mut p);
            let mut best = (f0, base);
            if fp < best.0 {
                best = (fp, base + s);
            }
            if fm < best.0 {
                best = (fm, base - s);
            }
            let curv = fp - 2.0 * f0 + fm;
            if curv > 0.0 {
                let t = (0.5 * (fm - fp) / curv * s).clamp(-2.0 * s, 2.0 * s);
                if t != 0.0 && t != s && t != -s {
                    let ft = try_at(base + t, &mut p);
                    if ft < best.0 {
                        best = (ft, base + t);
                    }
                }
            }
            if best.0 < f0 {
                p[i] = best.1;
                p = clamp_params(p, rho);
                f0 = best.0;
            } else {
                steps[i] *= 0.5;
            }
        }
    }
    p
}
