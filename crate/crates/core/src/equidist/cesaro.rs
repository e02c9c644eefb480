//! Pullbacks of point clouds and their Cesaro averages.
//!
//! The pullback of a measure acts on points by the inverse map. Stage i of
//! a cloud is its i-fold pullback; the Cesaro cloud for (m, b) is the union
//! of stages b..=m, each scaled by 1 / (m - b + 1).

use rayon::prelude::*;
use serde::Serialize;

use super::henon::{HenonForm, ShadowParams};
use super::moments::{moment_vector, MomentVector, MonomialBasis};
use crate::cloud::PointCloud;
use crate::cvec::C64;
use crate::dynamics::{green, EscapeParams};
use crate::error::{Error, Result};
use crate::jensen::optimize::restart_seed;
use crate::poly::{Direction, PolyMap};

pub const DROPPED_MASS_LIMIT: f64 = 0.05;
pub const SUPPORT_THRESHOLD: f64 = 5e-2;
/// Points per parallel work unit; partial sums are combined in chunk order.
const CHUNK: usize = 256;
/// Orbits whose recurrence residual exceeds this are dropped.
const SHADOW_ACCEPT: f64 = 1e-8;

/// How stage i of a point is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PullbackScheme {
    /// Literal iteration of the inverse map; points that overflow are dropped.
    Direct,
    /// Each point is first moved along its vertical line onto the set of
    /// bounded backward orbits, then followed along that orbit. Only for
    /// maps of the form (p(x) + a y, x).
    Shadowed,
}

impl PullbackScheme {
    pub fn default_for(m: &PolyMap) -> Self {
        if HenonForm::detect(m).is_some() {
            PullbackScheme::Shadowed
        } else {
            PullbackScheme::Direct
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CesaroParams {
    pub scheme: PullbackScheme,
    pub shadow: ShadowParams,
    pub escape: EscapeParams,
    pub seed: u64,
    /// Points per stage whose max(G+, G-) is evaluated for support statistics.
    pub support_per_stage: usize,
}

impl CesaroParams {
    pub fn for_map(m: &PolyMap) -> Self {
        CesaroParams {
            scheme: PullbackScheme::default_for(m),
            shadow: ShadowParams::default(),
            escape: EscapeParams::for_map(m),
            seed: 0,
            support_per_stage: 256,
        }
    }
}

pub fn default_burn_in(m_steps: usize) -> usize {
    m_steps / 4
}

#[derive(Clone, Debug)]
pub struct Pullback {
    pub cloud: PointCloud,
    pub dropped: f64,
}

/// One application of the inverse map to every point. Points that leave the
/// floating range are dropped and the rest renormalized.
pub fn pullback_cloud(m: &PolyMap, c: &PointCloud) -> Result<Pullback> {
    check_dim(m, c)?;
    let n = c.dim();
    let mut coords = Vec::with_capacity(c.coords().len());
    let mut weights = Vec::with_capacity(c.len());
    let mut next = vec![C64::new(0.0, 0.0); n];
    for (z, w) in c.points().zip(c.weights()) {
        m.eval_into(z, Direction::Backward, &mut next);
        if finite(&next) {
            coords.extend_from_slice(&next);
            weights.push(*w);
        }
    }
    let kept: f64 = crate::cloud::pairwise_sum(&weights);
    if weights.is_empty() || !(kept > 0.0) {
        return Err(Error::DroppedMass { fraction: 1.0 });
    }
    weights.iter_mut().for_each(|w| *w /= kept);
    let cloud = PointCloud::new(n, coords, weights, &format!("pullback of [{}]", c.provenance))?;
    Ok(Pullback { cloud, dropped: (1.0 - kept).max(0.0) })
}

fn finite(z: &[C64]) -> bool {
    z.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

fn check_dim(m: &PolyMap, c: &PointCloud) -> Result<()> {
    if m.dim() != c.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: c.dim() });
    }
    Ok(())
}

/// Produces stages 0..=depth of single points.
struct StageGen<'a> {
    m: &'a PolyMap,
    henon: Option<HenonForm>,
    params: &'a CesaroParams,
    seed: u64,
}

impl<'a> StageGen<'a> {
    fn new(m: &'a PolyMap, params: &'a CesaroParams, seed: u64) -> Result<Self> {
        let henon = match params.scheme {
            PullbackScheme::Direct => None,
            PullbackScheme::Shadowed => Some(HenonForm::detect(m).ok_or_else(|| {
                Error::Precondition("shadowed pullbacks need a map of the form (p(x) + a y, x)".into())
            })?),
        };
        Ok(StageGen { m, henon, params, seed })
    }

    /// Writes the alive stages back to back into `out` and returns how many
    /// there are; stages past the first overflow are dropped. With `support`
    /// set, also writes max(G+, G-) of every alive stage.
    fn stages(&self, idx: usize, z: &[C64], depth: usize, out: &mut Vec<C64>, support: Option<&mut Vec<f64>>) -> usize {
        out.clear();
        let n = z.len();
        let esc = &self.params.escape;
        match &self.henon {
            None => {
                out.extend_from_slice(z);
                let mut next = vec![C64::new(0.0, 0.0); n];
                let mut alive = depth + 1;
                for k in 0..depth {
                    self.m.eval_into(&out[k * n..(k + 1) * n], Direction::Backward, &mut next);
                    if !finite(&next) {
                        alive = k + 1;
                        break;
                    }
                    out.extend_from_slice(&next);
                }
                if let Some(sup) = support {
                    sup.clear();
                    sup.extend(out.chunks(n).map(|p| {
                        green(self.m, p, Direction::Forward, esc).max(green(self.m, p, Direction::Backward, esc))
                    }));
                }
                alive
            }
            Some(h) => {
                let o = h.shadow([z[0], z[1]], depth, &self.params.shadow, restart_seed(self.seed, idx));
                if !(o.residual <= SHADOW_ACCEPT) || !o.xs.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
                    return 0;
                }
                for k in 0..=depth {
                    out.extend_from_slice(&o.point(k));
                }
                if let Some(sup) = support {
                    // Literal iteration cannot follow a bounded backward orbit:
                    // roundoff grows until the orbit escapes. G+ and G- are
                    // carried along the solved orbit by G(f^-1 z) = G(z) / lambda+
                    // and G-(f^-1 z) = lambda- G-(z) instead.
                    let lp = esc.lambda_for(self.m, Direction::Forward);
                    let lm = esc.lambda_for(self.m, Direction::Backward);
                    let last = o.last();
                    let g_plus = green(self.m, &o.point(0), Direction::Forward, esc);
                    let g_minus = green(self.m, &o.point(last), Direction::Backward, esc);
                    sup.clear();
                    sup.extend(
                        (0..=depth).map(|k| (g_plus / lp.powi(k as i32)).max(g_minus / lm.powi((last - k) as i32))),
                    );
                }
                depth + 1
            }
        }
    }
}

/// m_steps = burn_in gives the single stage m_steps.
pub fn cesaro_cloud(
    m: &PolyMap,
    c0: &PointCloud,
    m_steps: usize,
    burn_in: usize,
    params: &CesaroParams,
) -> Result<Pullback> {
    check_dim(m, c0)?;
    if burn_in > m_steps {
        return Err(Error::InvalidArgument(format!("burn-in {burn_in} exceeds m = {m_steps}")));
    }
    let n = c0.dim();
    let gen = StageGen::new(m, params, params.seed)?;
    let per_point: Vec<(usize, Vec<C64>)> = (0..c0.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let alive = gen.stages(i, c0.point(i), m_steps, &mut out, None);
            (alive, out)
        })
        .collect();
    let stage_weight = |s: usize| -> f64 {
        let w: Vec<f64> = per_point.iter().zip(c0.weights()).filter(|((a, _), _)| *a > s).map(|(_, w)| *w).collect();
        crate::cloud::pairwise_sum(&w)
    };
    let last = stage_weight(m_steps);
    let dropped = (1.0 - last).max(0.0);
    if dropped > DROPPED_MASS_LIMIT {
        return Err(Error::DroppedMass { fraction: dropped });
    }
    let count = (m_steps - burn_in + 1) as f64;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for s in burn_in..=m_steps {
        // untouched weights when the stage lost nothing
        let total = if per_point.iter().all(|(a, _)| *a > s) { 1.0 } else { stage_weight(s) };
        for ((alive, pts), w) in per_point.iter().zip(c0.weights()) {
            if *alive > s {
                coords.extend_from_slice(&pts[s * n..(s + 1) * n]);
                weights.push(w / (total * count));
            }
        }
    }
    // renormalize away the rounding of the per-stage scaling
    let sum = crate::cloud::pairwise_sum(&weights);
    if (sum - 1.0).abs() > 1e-13 {
        weights.iter_mut().for_each(|w| *w /= sum);
    }
    let prov = format!(
        "cesaro m={m_steps} burn={burn_in} scheme={:?} seed={} of [{}]",
        params.scheme, params.seed, c0.provenance
    );
    Ok(Pullback { cloud: PointCloud::new(n, coords, weights, &prov)?, dropped })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportStats {
    /// (quantile level, value) of max(G+, G-) over the cloud.
    pub quantiles: Vec<(f64, f64)>,
    /// Mass fraction with max(G+, G-) <= threshold.
    pub within: f64,
    pub threshold: f64,
    pub samples: usize,
}

pub const SUPPORT_LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 1.0];

impl SupportStats {
    fn from_samples(mut s: Vec<(f64, f64)>) -> Self {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = s.iter().map(|x| x.1).sum();
        let within = s.iter().filter(|x| x.0 <= SUPPORT_THRESHOLD).map(|x| x.1).sum::<f64>() / total;
        let mut quantiles = Vec::new();
        for q in SUPPORT_LEVELS {
            let mut acc = 0.0;
            let mut v = s.last().map_or(0.0, |x| x.0);
            for (val, w) in &s {
                acc += w / total;
                if acc >= q - 1e-12 {
                    v = *val;
                    break;
                }
            }
            quantiles.push((q, v));
        }
        SupportStats { quantiles, within, threshold: SUPPORT_THRESHOLD, samples: s.len() }
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        self.quantiles.iter().find(|x| x.0 == q).map(|x| x.1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CesaroRow {
    pub m_steps: usize,
    pub burn_in: usize,
    pub moments: MomentVector,
    pub support: SupportStats,
    /// Mass lost by the deepest stage used.
    pub dropped: f64,
}

struct Partial {
    sums: Vec<f64>,
    weights: Vec<f64>,
    support: Vec<Vec<(f64, f64)>>,
}

impl Partial {
    fn zeros(stages: usize, k: usize) -> Self {
        Partial { sums: vec![0.0; stages * k], weights: vec![0.0; stages], support: vec![Vec::new(); stages] }
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.sums.iter_mut().zip(&other.sums).for_each(|(a, b)| *a += b);
        self.weights.iter_mut().zip(&other.weights).for_each(|(a, b)| *a += b);
        for (a, b) in self.support.iter_mut().zip(other.support) {
            a.extend(b);
        }
        self
    }
}

fn tree_merge(mut parts: Vec<Partial>) -> Partial {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

/// Moments and support statistics of the Cesaro clouds for several m at
/// once, without materializing them. Burn-in defaults to m / 4 per row.
pub fn cesaro_study(
    m: &PolyMap,
    c0: &PointCloud,
    m_values: &[usize],
    burn_in: Option<usize>,
    degree: usize,
    params: &CesaroParams,
) -> Result<Vec<CesaroRow>> {
    check_dim(m, c0)?;
    if degree < 1 {
        return Err(Error::InvalidArgument("moment degree must be >= 1".into()));
    }
    let Some(&max_m) = m_values.iter().max() else {
        return Ok(Vec::new());
    };
    for &mv in m_values {
        let b = burn_in.unwrap_or(default_burn_in(mv));
        if b > mv {
            return Err(Error::InvalidArgument(format!("burn-in {b} exceeds m = {mv}")));
        }
    }
    let n = c0.dim();
    let basis = MonomialBasis::new(n, degree);
    let k = basis.len();
    let stages = max_m + 1;
    let stride = (c0.len() / params.support_per_stage.max(1)).max(1);
    let gen = StageGen::new(m, params, params.seed)?;
    let chunks: Vec<usize> = (0..c0.len()).step_by(CHUNK).collect();
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&start| {
            let mut part = Partial::zeros(stages, k);
            let mut out = Vec::new();
            let mut sup = Vec::new();
            for i in start..(start + CHUNK).min(c0.len()) {
                let w = c0.weights()[i];
                let sampled = i % stride == 0;
                let alive = gen.stages(i, c0.point(i), max_m, &mut out, sampled.then_some(&mut sup));
                for s in 0..alive {
                    let z = &out[s * n..(s + 1) * n];
                    basis.accumulate(z, w, &mut part.sums[s * k..(s + 1) * k]);
                    part.weights[s] += w;
                    if sampled {
                        part.support[s].push((sup[s], w));
                    }
                }
            }
            part
        })
        .collect();
    let total = tree_merge(partials);

    let mut rows = Vec::with_capacity(m_values.len());
    for &mv in m_values {
        let b = burn_in.unwrap_or(default_burn_in(mv));
        let dropped = (1.0 - total.weights[mv]).max(0.0);
        if dropped > DROPPED_MASS_LIMIT {
            return Err(Error::DroppedMass { fraction: dropped });
        }
        let count = (mv - b + 1) as f64;
        let mut values = vec![0.0; k];
        let mut samples = Vec::new();
        for s in b..=mv {
            let ws = total.weights[s];
            for (v, acc) in values.iter_mut().zip(&total.sums[s * k..(s + 1) * k]) {
                *v += acc / ws / count;
            }
            let sw: f64 = total.support[s].iter().map(|x| x.1).sum();
            samples.extend(total.support[s].iter().map(|(g, w)| (*g, w / sw / count)));
        }
        rows.push(CesaroRow {
            m_steps: mv,
            burn_in: b,
            moments: MomentVector { degree, exponents: basis.exponents.clone(), values },
            support: SupportStats::from_samples(samples),
            dropped,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquidistReport {
    pub m_steps: usize,
    pub burn_in: usize,
    pub degree: usize,
    /// max over entries of |a - b| / (1 + |a| + |b|)
    pub distance: f64,
    pub support_a: SupportStats,
    pub support_b: SupportStats,
    pub dropped_a: f64,
    pub dropped_b: f64,
    pub birkhoff_spread: Option<f64>,
    pub moments_a: MomentVector,
    pub moments_b: MomentVector,
}

/// Fraction of the cloud's mass with G- at or below `level`.
pub fn backward_green_fraction(m: &PolyMap, c: &PointCloud, escape: &EscapeParams, level: f64) -> f64 {
    c.integrate(|z| if green(m, z, Direction::Backward, escape) <= level { 1.0 } else { 0.0 })
}

/// Runs both clouds through `cesaro_study` for every m in `m_values`.
pub fn compare_study(
    m: &PolyMap,
    c_a: &PointCloud,
    c_b: &PointCloud,
    m_values: &[usize],
    burn_in: Option<usize>,
    degree: usize,
    params: &CesaroParams,
) -> Result<Vec<EquidistReport>> {
    for (name, c) in [("first", c_a), ("second", c_b)] {
        check_dim(m, c)?;
        let f = backward_green_fraction(m, c, &params.escape, 0.5);
        if f < 0.9 {
            return Err(Error::Precondition(format!(
                "{name} cloud is not near K-: only {f:.3} of its mass has G- <= 0.5"
            )));
        }
    }
    let rows_a = cesaro_study(m, c_a, m_values, burn_in, degree, params)?;
    let params_b = CesaroParams { seed: restart_seed(params.seed, usize::MAX), ..params.clone() };
    let rows_b = cesaro_study(m, c_b, m_values, burn_in, degree, &params_b)?;
    rows_a
        .into_iter()
        .zip(rows_b)
        .map(|(a, b)| {
            Ok(EquidistReport {
                m_steps: a.m_steps,
                burn_in: a.burn_in,
                degree,
                distance: a.moments.distance(&b.moments)?,
                support_a: a.support,
                support_b: b.support,
                dropped_a: a.dropped,
                dropped_b: b.dropped,
                birkhoff_spread: None,
                moments_a: a.moments,
                moments_b: b.moments,
            })
        })
        .collect()
}

pub fn equidist_compare(
    m: &PolyMap,
    c_a: &PointCloud,
    c_b: &PointCloud,
    m_steps: usize,
    burn_in: Option<usize>,
    degree: usize,
    params: &CesaroParams,
) -> Result<EquidistReport> {
    let mut rows = compare_study(m, c_a, c_b, &[m_steps], burn_in, degree, params)?;
    Ok(rows.remove(0))
}

/// Moment distance between a cloud and its one-step pullback.
pub fn invariance_residual_measure(m: &PolyMap, c: &PointCloud, degree: usize) -> Result<f64> {
    let pulled = pullback_cloud(m, c)?;
    moment_vector(c, degree)?.distance(&moment_vector(&pulled.cloud, degree)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_quantiles_are_weighted() {
        let s = SupportStats::from_samples(vec![(0.0, 0.5), (1.0, 0.25), (0.01, 0.25)]);
        assert_eq!(s.quantile(0.5), Some(0.0));
        assert_eq!(s.quantile(0.9), Some(1.0));
        assert!((s.within - 0.75).abs() < 1e-15);
    }
}
