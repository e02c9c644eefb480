//! Relative Green functions, hull and pluripolarity probes, the maximum
//! principle on sampled supports, and disks with constrained boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::PointCloud;
use crate::cvec::{dist, CVec, C64};
use crate::disk::{AnalyticDisk, CircleQuadrature, DiskMeasure};
use crate::error::{Error, Result};
use crate::jensen::field::{Field, InteriorIndicator};
use crate::jensen::lift::{lift_disk, LiftSpec};
use crate::jensen::optimize::{
    coordinate_search, disk_functional, poletsky_infimum_seeded, restart_seed, DiskSpace, OptimizerConfig,
    PoletskyResult,
};
use crate::jensen::sets::{Domain, PointSet, SetDescriptor};
use crate::poly::{Direction, PolyMap};

const FLAT_RADII: usize = 24;
const LIFT_MARGIN: f64 = 2e-3;

/// Unit directions to try for flat disks: coordinate axes, the four
/// diagonals of each coordinate pair, and the directions toward `targets`.
pub fn probe_directions(n: usize, x: &[C64], targets: &[CVec]) -> Vec<Vec<C64>> {
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::new();
    for k in 0..n {
        let mut v = vec![zero; n];
        v[k] = C64::new(1.0, 0.0);
        out.push(v);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in j + 1..n {
            for w in [C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, s), C64::new(0.0, -s)] {
                let mut v = vec![zero; n];
                v[j] = C64::new(s, 0.0);
                v[k] = w;
                out.push(v);
            }
        }
    }
    for a in targets {
        let d = dist(a, x);
        if d > 0.0 {
            out.push(a.iter().zip(x).map(|(p, q)| (p - q) / d).collect());
        }
    }
    out
}

/// Largest s with the circle {c + s e^{i theta} v} inside the closed domain,
/// found by bisection on 64 circle points.
pub fn circle_reach(c: &[C64], v: &[C64], domain: &Domain) -> f64 {
    let fits = |s: f64| -> bool {
        (0..64).all(|j| {
            let t = C64::cis(std::f64::consts::TAU * j as f64 / 64.0) * s;
            let z: Vec<C64> = c.iter().zip(v).map(|(a, b)| a + b * t).collect();
            domain.violation(&z) == 0.0
        })
    };
    if !fits(0.0) {
        return 0.0;
    }
    let mut hi = 4.0 * domain.scale() + crate::cvec::norm(c) + 1.0;
    if fits(hi) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Candidate disks aimed at a set: flat disks of many radii in the probe
/// directions, and exponential lifts wrapping into each anchor ball.
pub fn aiming_seeds(target: &SetDescriptor, x: &CVec, space: &DiskSpace) -> Vec<AnalyticDisk> {
    let anchors = target.anchors();
    let centers: Vec<CVec> = anchors.iter().map(|(a, _)| a.clone()).collect();
    let mut seeds = Vec::new();
    for v in probe_directions(x.dim(), x, &centers) {
        let reach = circle_reach(x, &v, &space.domain);
        for m in 1..=FLAT_RADII {
            let s = reach * m as f64 / FLAT_RADII as f64;
            if s > 0.0 {
                if let Ok(h) = AnalyticDisk::flat(x.clone(), &v, s) {
                    seeds.push(h);
                }
            }
        }
    }
    for (a, r_in) in &anchors {
        let s = dist(x, a);
        if s <= *r_in || s == 0.0 {
            continue;
        }
        let v: Vec<C64> = x.iter().zip(a.iter()).map(|(p, q)| (p - q) / s).collect();
        let r_out = circle_reach(a, &v, &space.domain);
        let mut order = space.lift_order.max(4);
        let mut orders = Vec::new();
        while order >= 4 && orders.len() < 3 {
            orders.push(order);
            order /= 2;
        }
        for k in orders {
            let spec = LiftSpec { order: k, margin: LIFT_MARGIN, max_degree: space.max_seed_degree };
            if let Some(h) = lift_disk(x, a, *r_in, r_out, spec) {
                seeds.push(h);
            }
        }
    }
    seeds
}

#[derive(Clone, Debug, Serialize)]
pub struct MassReport {
    /// Largest fraction of quadrature mass found in the interior of the set.
    pub mass: f64,
    pub result: PoletskyResult,
}

/// Best mass any searched disk centered at x and contained in U puts on
/// the interior of `target`.
pub fn max_disk_mass(target: &SetDescriptor, x: &CVec, space: &DiskSpace, opt: &OptimizerConfig) -> Result<MassReport> {
    let u = InteriorIndicator::new(target.clone());
    let seeds = if target.is_empty() { Vec::new() } else { aiming_seeds(target, x, space) };
    let result = poletsky_infimum_seeded(&u, x, space, opt, &seeds, None)?;
    Ok(MassReport { mass: -result.value, result })
}

/// Disk estimate of the relative extremal function: minus the best mass
/// a disk in U centered at x puts on the interior of A. Since every found
/// disk is a witness, the value is >= the true G_{A,U}(x).
pub fn relative_green_disks(
    a: &SetDescriptor,
    x: &CVec,
    space: &DiskSpace,
    opt: &OptimizerConfig,
) -> Result<MassReport> {
    space.domain.check_dim(x.dim())?;
    if !space.domain.contains(x) {
        return Err(Error::OutsideDomain);
    }
    max_disk_mass(a, x, space, opt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HullVerdict {
    InsideHullCandidate,
    OutsideHullEvidence,
}

#[derive(Clone, Debug, Serialize)]
pub struct HullReport {
    pub verdict: HullVerdict,
    pub mass: f64,
    pub epsilon: f64,
    pub result: PoletskyResult,
}

/// Looks for a disk at x with mass >= 1 - eps on the interior of A.
pub fn hull_membership_probe(
    a: &SetDescriptor,
    x: &CVec,
    space: &DiskSpace,
    opt: &OptimizerConfig,
    eps: f64,
) -> Result<HullReport> {
    let MassReport { mass, result } = relative_green_disks(a, x, space, opt)?;
    let verdict = if mass >= 1.0 - eps { HullVerdict::InsideHullCandidate } else { HullVerdict::OutsideHullEvidence };
    Ok(HullReport { verdict, mass, epsilon: eps, result })
}

/// Node multiplier used to re-measure the winning disk on thin sets.
pub const THIN_SET_REFINEMENT: usize = 64;

/// Largest disk mass found on E; values near zero at many points are
/// evidence that E is pluripolar. A thin E can catch a few quadrature
/// nodes of a disk that barely crosses it, so the winner is re-measured
/// on a much finer quadrature and that mass is reported.
pub fn pluripolar_probe(e: &SetDescriptor, x: &CVec, space: &DiskSpace, opt: &OptimizerConfig) -> Result<MassReport> {
    if e.contains(x) {
        return Err(Error::Precondition("x must lie outside the closure of E".into()));
    }
    let mut report = relative_green_disks(e, x, space, opt)?;
    let nodes = report.result.measure.len() * THIN_SET_REFINEMENT;
    let fine = DiskMeasure::new(report.result.disk().clone(), CircleQuadrature::new(nodes)?);
    report.mass = -disk_functional(&InteriorIndicator::new(e.clone()), &fine);
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxPrincipleReport {
    pub sup_inner: f64,
    pub sup_shell: f64,
    /// sup over E minus sup over the shell; positive means a violation.
    pub margin: f64,
    pub tol: f64,
    pub violation: bool,
    pub inconclusive: bool,
    pub inner_count: usize,
    pub shell_count: usize,
}

/// Compares the sampled sup of u over E against its sampled sup over
/// S within delta of the sphere of radius r around x.
pub fn maximum_principle_check(
    u: &dyn Field,
    support: &[CVec],
    x: &[C64],
    r: f64,
    e: &[CVec],
    delta: f64,
    tol: f64,
) -> Result<MaxPrincipleReport> {
    if e.iter().any(|p| dist(p, x) >= r) {
        return Err(Error::Precondition("E must lie inside B(x, r)".into()));
    }
    let sup = |pts: &mut dyn Iterator<Item = &CVec>| -> (f64, usize) {
        pts.fold((f64::NEG_INFINITY, 0), |(m, c), p| (m.max(u.eval(p)), c + 1))
    };
    let (sup_inner, inner_count) = sup(&mut e.iter());
    let (sup_shell, shell_count) = sup(&mut support.iter().filter(|p| (dist(p, x) - r).abs() <= delta));
    let inconclusive = shell_count == 0 || inner_count == 0;
    let margin = if inconclusive { 0.0 } else { sup_inner - sup_shell };
    Ok(MaxPrincipleReport {
        sup_inner,
        sup_shell,
        margin,
        tol,
        violation: !inconclusive && margin > tol,
        inconclusive,
        inner_count,
        shell_count,
    })
}

/// Samples of S inside B(x, radius).
pub fn samples_within(support: &[CVec], x: &[C64], radius: f64) -> Vec<CVec> {
    support.iter().filter(|p| dist(p, x) < radius).cloned().collect()
}

/// Boundary samples of a disk mapped through Q; the result is a disk
/// measure centered at Q(x).
pub fn pushforward_disk_measure(q: &PolyMap, mu: &DiskMeasure) -> Result<PointCloud> {
    let n = q.dim();
    mu.center().check_dim(n)?;
    let mut coords = Vec::with_capacity(mu.len() * n);
    let mut out = vec![C64::new(0.0, 0.0); n];
    for z in mu.samples() {
        q.eval_into(z, Direction::Forward, &mut out);
        coords.extend_from_slice(&out);
    }
    PointCloud::uniform(n, coords, "disk pushforward")
}

/// Where the boundary of the disk should lie besides the sphere.
#[derive(Clone, Debug)]
pub enum SupportSet {
    Everything,
    /// {z_coord = value}
    Hyperplane {
        coord: usize,
        value: C64,
    },
    Samples(PointSet),
}

impl SupportSet {
    pub fn distance(&self, z: &[C64]) -> f64 {
        match self {
            SupportSet::Everything => 0.0,
            SupportSet::Hyperplane { coord, value } => (z[*coord] - value).norm(),
            SupportSet::Samples(s) => s.nearest_distance(z),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportedDisk {
    /// Largest distance from a boundary sample to S.
    pub residual_support: f64,
    /// Largest | |h - x| - r | over boundary samples.
    pub residual_sphere: f64,
    pub residual: f64,
    #[serde(skip)]
    pub measure: DiskMeasure,
}

/// Searches for a disk centered at x whose boundary lies on S and on the
/// sphere of radius r around x. Starts from flat disks x + r t v, the
/// warm disk if given, and random perturbations of the best of these.
pub fn support_constrained_disk(
    s: &SupportSet,
    x: &CVec,
    r: f64,
    space: &DiskSpace,
    opt: &OptimizerConfig,
    warm: Option<&AnalyticDisk>,
) -> Result<SupportedDisk> {
    let n = x.dim();
    let d = space.degree;
    let quad = CircleQuadrature::for_degree(d);
    let score = |h: &AnalyticDisk| -> (f64, f64, f64) {
        let mu = DiskMeasure::new(h.clone(), quad.clone());
        let (mut acc, mut rs, mut rp) = (0.0, 0.0f64, 0.0f64);
        for z in mu.samples() {
            let ds = s.distance(z);
            let dp = (dist(z, x) - r).abs();
            acc += ds * ds + dp * dp;
            rs = rs.max(ds);
            rp = rp.max(dp);
        }
        (acc * mu.weight(), rs, rp)
    };

    let mut starts: Vec<AnalyticDisk> = Vec::new();
    if let Some(w) = warm {
        starts.push(w.with_degree(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opt.seed, usize::MAX));
    let mut dirs = probe_directions(n, x, &[]);
    for _ in 0..8 {
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let nv = crate::cvec::norm(&v);
        dirs.push(v.iter().map(|c| c / nv).collect());
    }
    for v in &dirs {
        starts.push(AnalyticDisk::flat(x.clone(), v, r)?.with_degree(d));
    }
    starts.sort_by(|a, b| score(a).0.total_cmp(&score(b).0));
    let base = starts[0].clone();
    let mut inits: Vec<Vec<f64>> = starts.iter().take(4).map(|h| h.params()).collect();
    for k in 0..opt.restarts.saturating_sub(inits.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opt.seed, k));
        let mut p = base.params();
        for v in p.iter_mut() {
            *v += 0.1 * r * rng.random_range(-1.0..1.0);
        }
        inits.push(p);
    }
    let rho = space.coeff_bound.max(r);
    let results: Vec<AnalyticDisk> = inits
        .into_par_iter()
        .map(|p0| {
            let obj = |p: &[f64]| score(&AnalyticDisk::from_params(x.clone(), d, p).expect("fixed layout")).0;
            let p = coordinate_search(&obj, p0, rho, opt);
            AnalyticDisk::from_params(x.clone(), d, &p).expect("fixed layout")
        })
        .collect();
    let mut best: Option<(f64, AnalyticDisk)> = None;
    for h in starts.into_iter().chain(results) {
        let (_, rs, rp) = score(&h);
        let res = rs.max(rp);
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, h));
        }
    }
    let (_, h) = best.expect("at least one start");
    let (_, rs, rp) = score(&h);
    Ok(SupportedDisk {
        residual_support: rs,
        residual_sphere: rp,
        residual: rs.max(rp),
        measure: DiskMeasure::new(h, quad),
    })
}
