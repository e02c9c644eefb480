//! The subcommands. Each writes its files into the output directory and
//! finishes with a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use pluri::cloud::PointCloud;
use pluri::disk::DiskMeasure;
use pluri::dynamics::{green_invariance_residual, julia_grid, JuliaClass};
use pluri::envelope::obstacle::default_max_sweeps;
use pluri::envelope::{relative_extremal_obstacle, ObstacleSpec};
use pluri::equidist::{
    band_constancy, birkhoff_field, compare_study, moment_vector, BirkhoffParams, Bump, CesaroParams, OrbitSource,
    PullbackScheme,
};
use pluri::grid::{field_csv, linear_pgm, log_scaled_pgm, mask_pgm};
use pluri::jensen::field::{InteriorIndicator, NormSq};
use pluri::jensen::optimize::restart_seed;
use pluri::jensen::probes::{hull_membership_probe, pluripolar_probe, relative_green_disks};
use pluri::jensen::{
    poletsky_infimum, DiskSpace, Domain, Field, OptimizerConfig, PoletskyResult, PshField, SetDescriptor,
};
use pluri::poly::{Direction, PolyMap};
use pluri::{CVec, C64};

use crate::config::{FieldKind, GreenDirection, Probe, SchemeChoice, SourceChoice};
use crate::criteria::{self, quantile, CriterionResult};
use crate::output::{num, FileEntry, OutDir, MANIFEST};
use crate::{Failure, Loaded};

/// What every command needs: the configuration, where to write, and the
/// worker count recorded in the manifest.
pub struct Context {
    pub loaded: Loaded,
    pub out: PathBuf,
    pub threads: usize,
}

impl Context {
    fn seed(&self) -> u64 {
        self.loaded.config.seed
    }

    fn finish(&self, dir: OutDir, command: &str) -> Result<Vec<FileEntry>, Failure> {
        dir.finish(command, &self.loaded.config.canonical(), self.seed(), self.threads)
    }
}

fn class_counts(classes: &[JuliaClass]) -> Value {
    let count = |c: JuliaClass| classes.iter().filter(|x| **x == c).count();
    json!({
        "interior": count(JuliaClass::InteriorKplus),
        "band": count(JuliaClass::BoundaryBand),
        "exterior": count(JuliaClass::Exterior),
    })
}

fn summary(values: &[f64]) -> Value {
    if values.is_empty() {
        return Value::Null;
    }
    json!({
        "count": values.len(),
        "p50": quantile(values, 0.5),
        "p95": quantile(values, 0.95),
        "p99": quantile(values, 0.99),
        "max": quantile(values, 1.0),
    })
}

pub fn green(ctx: &Context) -> Result<Value, Failure> {
    let cfg = &ctx.loaded.config;
    let m = ctx.loaded.map()?;
    let p = ctx.loaded.escape(&m)?;
    let slice = cfg.slice.build()?;
    slice.base().check_dim(m.dim()).map_err(Failure::config)?;
    let mut dir = OutDir::create(&ctx.out)?;
    let dirs: &[(Direction, &str)] = match cfg.green.direction {
        GreenDirection::Forward => &[(Direction::Forward, "forward")],
        GreenDirection::Backward => &[(Direction::Backward, "backward")],
        GreenDirection::Both => &[(Direction::Forward, "forward"), (Direction::Backward, "backward")],
    };
    let mut fields = serde_json::Map::new();
    for (d, name) in dirs {
        let (field, classes) = julia_grid(&m, &slice, *d, &p)?;
        let labels: Vec<String> = classes.iter().map(|c| c.label().to_string()).collect();
        dir.write(&format!("green_{name}.csv"), field_csv(&field, Some(("class", &labels))))?;
        dir.write(&format!("green_{name}.pgm"), log_scaled_pgm(&field))?;
        let band: Vec<bool> = classes.iter().map(|c| *c == JuliaClass::BoundaryBand).collect();
        dir.write(&format!("band_{name}.pgm"), mask_pgm(&band, slice.resolution()))?;
        let vals = field.values();
        fields.insert(
            name.to_string(),
            json!({
                "min": vals.iter().copied().fold(f64::INFINITY, f64::min),
                "max": vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "classes": class_counts(&classes),
            }),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(ctx.seed(), 1));
    let b = cfg.green.residual_box;
    if !(b > 0.0) {
        return Err(Failure::Config(anyhow::anyhow!("green.residual_box must be positive")));
    }
    let pts: Vec<Vec<C64>> = (0..cfg.green.residual_samples)
        .map(|_| (0..m.dim()).map(|_| C64::new(rng.random_range(-b..b), rng.random_range(-b..b))).collect())
        .collect();
    let res = pts.par_iter().map(|z| green_invariance_residual(&m, z, &p)).collect::<pluri::Result<Vec<f64>>>()?;

    let report = json!({
        "map": m.label(),
        "lambda1": m.lambda1(),
        "escape": p,
        "resolution": slice.resolution(),
        "extent": slice.extent(),
        "fields": fields,
        "invariance_residual": summary(&res),
    });
    dir.write_json("green.json", &report)?;
    ctx.finish(dir, "green")?;
    Ok(report)
}

fn field_for(kind: FieldKind, set: &SetDescriptor, n: usize, seed: u64) -> Box<dyn Field> {
    match kind {
        FieldKind::NormSq => Box::new(NormSq),
        FieldKind::RandomPsh => Box::new(PshField::random(&mut ChaCha8Rng::seed_from_u64(restart_seed(seed, 0)), n)),
        FieldKind::Obstacle => Box::new(InteriorIndicator::new(set.clone())),
    }
}

/// Relative extremal function of a ball inside a concentric ball, when the
/// configuration is of that shape.
fn concentric_closed_form(set: &SetDescriptor, domain: &Domain, x: &[C64]) -> Option<f64> {
    match (set, domain) {
        (SetDescriptor::Ball { center: a, radius: r }, Domain::Ball { center: u, radius: big })
            if a.to_vec() == u.to_vec() && r < big =>
        {
            let d = pluri::cvec::dist(x, a);
            Some(((d / big).ln() / (big / r).ln()).max(-1.0))
        }
        _ => None,
    }
}

fn disk_samples_csv(u: &dyn Field, mu: &DiskMeasure) -> String {
    let n = mu.center().dim();
    let mut t = String::from("node");
    for k in 1..=n {
        let _ = write!(t, ",re{k},im{k}");
    }
    t.push_str(",weight,u\n");
    for (i, z) in mu.samples().enumerate() {
        let _ = write!(t, "{i}");
        for c in z {
            let _ = write!(t, ",{},{}", num(c.re), num(c.im));
        }
        let _ = writeln!(t, ",{},{}", num(mu.weight()), num(u.eval(z)));
    }
    t
}

fn disk_json(r: &PoletskyResult) -> Value {
    json!({
        "degree": r.disk().degree(),
        "origin": r.origin,
        "infeasible": r.infeasible,
        "max_violation": r.max_violation,
        "constant_value": r.constant_value,
    })
}

pub fn disk(ctx: &Context) -> Result<Value, Failure> {
    let cfg = &ctx.loaded.config.disk;
    if cfg.points.is_empty() {
        return Err(Failure::Config(anyhow::anyhow!("disk.points is empty")));
    }
    let space = DiskSpace::new(cfg.degree, cfg.coeff_bound, cfg.domain.clone())?;
    let mut dir = OutDir::create(&ctx.out)?;
    let mut rows = Vec::new();
    for (k, p) in cfg.points.iter().enumerate() {
        let x = CVec::new(p.clone()).map_err(Failure::config)?;
        space.domain.check_dim(x.dim())?;
        let opt =
            OptimizerConfig { restarts: cfg.restarts, seed: restart_seed(ctx.seed(), k), ..OptimizerConfig::default() };
        let (row, result, u): (Value, PoletskyResult, Box<dyn Field>) = match cfg.probe {
            Probe::Poletsky => {
                let u = field_for(cfg.field, &cfg.set, x.dim(), ctx.seed());
                let r = poletsky_infimum(u.as_ref(), &x, &space, &opt)?;
                (json!({ "value": r.value, "u_at_point": r.constant_value }), r, u)
            }
            Probe::RelativeGreen => {
                let r = relative_green_disks(&cfg.set, &x, &space, &opt)?;
                let exact = concentric_closed_form(&cfg.set, &cfg.domain, &x);
                let err = exact.map(|e| (-r.mass - e).abs());
                (
                    json!({ "value": -r.mass, "closed_form": exact, "error": err }),
                    r.result,
                    Box::new(InteriorIndicator::new(cfg.set.clone())),
                )
            }
            Probe::Hull => {
                let r = hull_membership_probe(&cfg.set, &x, &space, &opt, cfg.epsilon)?;
                (
                    json!({ "mass": r.mass, "epsilon": r.epsilon, "verdict": r.verdict }),
                    r.result,
                    Box::new(InteriorIndicator::new(cfg.set.clone())),
                )
            }
            Probe::Pluripolar => {
                let r = pluripolar_probe(&cfg.set, &x, &space, &opt)?;
                (json!({ "mass": r.mass }), r.result, Box::new(InteriorIndicator::new(cfg.set.clone())))
            }
        };
        let file = format!("disk_{k}.csv");
        dir.write(&file, disk_samples_csv(u.as_ref(), &result.measure))?;
        let mut row = row;
        let obj = row.as_object_mut().expect("object");
        obj.insert("point".into(), json!(x.to_reals()));
        obj.insert("disk".into(), disk_json(&result));
        obj.insert("samples".into(), json!(file));
        rows.push(row);
    }
    let report =
        json!({ "probe": cfg.probe, "field": cfg.field, "set": cfg.set, "domain": cfg.domain, "points": rows });
    dir.write_json("disk.json", &report)?;
    ctx.finish(dir, "disk")?;
    Ok(report)
}

pub fn envelope(ctx: &Context) -> Result<Value, Failure> {
    let cfg = &ctx.loaded.config.envelope;
    let ob = ObstacleSpec::disk_in_disk(cfg.resolution, cfg.a_center, cfg.r, cfg.r_u)?;
    let sweeps = cfg.max_sweeps.unwrap_or_else(|| default_max_sweeps(cfg.resolution));
    let sol = relative_extremal_obstacle(&ob, cfg.tol, sweeps)?;
    let slice = sol.field.slice();

    let exact: Option<Vec<f64>> = (cfg.a_center == C64::new(0.0, 0.0)).then(|| {
        (0..slice.cells())
            .map(|k| {
                let w = slice.param_of_index(k);
                if w.norm() < cfg.r_u {
                    ((w.norm() / cfg.r_u).ln() / (cfg.r_u / cfg.r).ln()).max(-1.0)
                } else {
                    0.0
                }
            })
            .collect()
    });
    let errors = exact.as_ref().map(|e| {
        let errs: Vec<f64> = (0..slice.cells())
            .filter(|k| ob.u_mask()[*k])
            .map(|k| (sol.field.values()[k] - e[k]).abs())
            .collect();
        json!({ "sup": errs.iter().copied().fold(0.0, f64::max), "mean": errs.iter().sum::<f64>() / errs.len().max(1) as f64 })
    });

    let mut dir = OutDir::create(&ctx.out)?;
    let extra: Option<Vec<String>> = exact.as_ref().map(|e| e.iter().map(|v| num(*v)).collect());
    dir.write("envelope.csv", field_csv(&sol.field, extra.as_ref().map(|e| ("closed_form", e.as_slice()))))?;
    dir.write("envelope.pgm", linear_pgm(&sol.field))?;
    let report = json!({
        "resolution": cfg.resolution,
        "r": cfg.r,
        "a_center": cfg.a_center,
        "r_u": cfg.r_u,
        "sweeps": sol.sweeps,
        "residual": sol.residual,
        "omega": sol.omega,
        "closed_form_error": errors,
    });
    dir.write_json("envelope.json", &report)?;
    ctx.finish(dir, "envelope")?;
    Ok(report)
}

fn cloud_from_box(m: &PolyMap, b: &crate::config::BoxConfig, count: usize, seed: u64) -> Result<PointCloud, Failure> {
    if b.center.len() != m.dim() {
        return Err(Failure::Config(anyhow::anyhow!(
            "box center has {} coordinates, map has {}",
            b.center.len(),
            m.dim()
        )));
    }
    let (lo, hi) = b.bounds();
    PointCloud::sample_box(&lo, &hi, count, seed).map_err(Failure::config)
}

pub fn equidist(ctx: &Context) -> Result<Value, Failure> {
    let cfg = &ctx.loaded.config;
    let e = &cfg.equidist;
    let m = ctx.loaded.map()?;
    let escape = ctx.loaded.escape(&m)?;
    let scheme = match e.scheme {
        SchemeChoice::Auto => PullbackScheme::default_for(&m),
        SchemeChoice::Direct => PullbackScheme::Direct,
        SchemeChoice::Shadowed => PullbackScheme::Shadowed,
    };
    let params = CesaroParams { scheme, escape, seed: ctx.seed(), ..CesaroParams::for_map(&m) };
    let a = cloud_from_box(&m, &e.box_a, e.points, restart_seed(ctx.seed(), 71))?;
    let b = cloud_from_box(&m, &e.box_b, e.points, restart_seed(ctx.seed(), 72))?;
    let rows = compare_study(&m, &a, &b, &e.m, e.burn_in, e.degree, &params)?;

    let mut dir = OutDir::create(&ctx.out)?;
    let mut table = String::from("m,burn_in,distance,within_a,within_b,q99_a,q99_b,dropped_a,dropped_b\n");
    let mut moments = String::from("m,exponent,a,b\n");
    for r in &rows {
        let q = |s: &pluri::equidist::SupportStats| s.quantile(0.99).unwrap_or(f64::NAN);
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{}",
            r.m_steps,
            r.burn_in,
            num(r.distance),
            num(r.support_a.within),
            num(r.support_b.within),
            num(q(&r.support_a)),
            num(q(&r.support_b)),
            num(r.dropped_a),
            num(r.dropped_b)
        );
        for ((ex, va), vb) in r.moments_a.exponents.iter().zip(&r.moments_a.values).zip(&r.moments_b.values) {
            let ex: Vec<String> = ex.iter().map(u32::to_string).collect();
            let _ = writeln!(moments, "{},{},{},{}", r.m_steps, ex.join(" "), num(*va), num(*vb));
        }
    }
    dir.write("equidist.csv", table)?;
    dir.write("moments.csv", moments)?;

    let birkhoff = if cfg.birkhoff.enabled { Some(run_birkhoff(ctx, &m, &escape, &mut dir)?) } else { None };
    let report = json!({
        "map": m.label(),
        "scheme": scheme,
        "points": e.points,
        "degree": e.degree,
        "initial_moments_a": moment_vector(&a, e.degree)?.values,
        "initial_moments_b": moment_vector(&b, e.degree)?.values,
        "rows": rows.iter().map(|r| json!({
            "m": r.m_steps,
            "burn_in": r.burn_in,
            "distance": r.distance,
            "support_a": r.support_a,
            "support_b": r.support_b,
            "dropped_a": r.dropped_a,
            "dropped_b": r.dropped_b,
            "moments_a": r.moments_a.values,
            "moments_b": r.moments_b.values,
        })).collect::<Vec<_>>(),
        "birkhoff": birkhoff,
    });
    dir.write_json("equidist.json", &report)?;
    ctx.finish(dir, "equidist")?;
    Ok(report)
}

fn run_birkhoff(
    ctx: &Context,
    m: &PolyMap,
    escape: &pluri::dynamics::EscapeParams,
    dir: &mut OutDir,
) -> Result<Value, Failure> {
    let b = &ctx.loaded.config.birkhoff;
    let bump = Bump::new(&b.center, b.radius, b.height)?;
    let slice = b.slice.build()?;
    let mut params = BirkhoffParams {
        escape: *escape,
        seed: ctx.seed(),
        snapshots: b.snapshots.clone(),
        ..BirkhoffParams::for_map(m)
    };
    match b.source {
        SourceChoice::Auto => {}
        SourceChoice::Literal => params.source = OrbitSource::Literal,
        SourceChoice::Leaf => params.source = OrbitSource::Leaf,
    }
    let f = birkhoff_field(m, &bump, &slice, b.m, &params)?;
    let band: Vec<String> = f.band.iter().map(|x| u8::from(*x).to_string()).collect();
    dir.write("birkhoff.csv", field_csv(f.last(), Some(("band", &band))))?;
    dir.write("birkhoff.pgm", linear_pgm(f.last()))?;
    let mut table = String::from("m,median,q1,q3,iqr,within\n");
    let mut stats = Vec::new();
    for (k, g) in &f.snapshots {
        let s = band_constancy(g, &f.band, criteria::BIRKHOFF_IQR)?;
        let _ = writeln!(table, "{k},{},{},{},{},{}", num(s.median), num(s.q1), num(s.q3), num(s.iqr), num(s.within));
        stats.push(json!({ "m": k, "constancy": s }));
    }
    dir.write("birkhoff_constancy.csv", table)?;
    Ok(json!({ "source": params.source, "band_cells": f.band_cells(), "snapshots": stats }))
}

#[derive(Clone, Debug, Serialize)]
pub struct Determinism {
    pub threads: [usize; 2],
    pub files_compared: usize,
    pub mismatched: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub results: Vec<CriterionResult>,
    pub determinism: Option<Determinism>,
}

impl VerifyOutcome {
    pub fn failed(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
        if self.determinism.as_ref().is_some_and(|d| !d.passed) {
            ids.push(12);
        }
        ids
    }
}

fn selected(ctx: &Context) -> Result<Vec<u32>, Failure> {
    let ids = &ctx.loaded.config.verify.criteria;
    if ids.is_empty() {
        return Ok(criteria::ALL.to_vec());
    }
    if let Some(bad) = ids.iter().find(|i| !(1..=12).contains(*i)) {
        return Err(Failure::Config(anyhow::anyhow!("no criterion {bad}")));
    }
    Ok(ids.iter().copied().filter(|i| *i != 12).collect())
}

fn write_suite(dir: &mut OutDir, results: &[CriterionResult]) -> Result<(), Failure> {
    dir.write_json("criteria.json", &results)?;
    let mut t = String::from("id,name,passed,tolerance\n");
    for r in results {
        let _ = writeln!(t, "{},{},{},\"{}\"", r.id, r.name, r.passed, r.tolerance);
    }
    dir.write("criteria.csv", t)?;
    for r in results {
        for (name, text) in &r.tables {
            dir.write(&format!("tables/{name}"), text)?;
        }
    }
    Ok(())
}

fn compare_trees(a: &Path, b: &Path, files: &[FileEntry]) -> (usize, Vec<String>) {
    let mut mismatched = Vec::new();
    for f in files.iter().filter(|f| f.path != MANIFEST) {
        let same = matches!((fs::read(a.join(&f.path)), fs::read(b.join(&f.path))), (Ok(x), Ok(y)) if x == y);
        if !same {
            mismatched.push(f.path.clone());
        }
    }
    (files.len(), mismatched)
}

/// Runs the criteria; with determinism on, runs them again on a pool of a
/// different size and compares every output file byte for byte.
pub fn verify(ctx: &Context) -> Result<VerifyOutcome, Failure> {
    let ids = selected(ctx)?;
    let want_determinism = ctx.loaded.config.verify.determinism
        && (ctx.loaded.config.verify.criteria.is_empty() || ctx.loaded.config.verify.criteria.contains(&12));
    let mut dir = OutDir::create(&ctx.out)?;
    dir.write("config.toml", ctx.loaded.config.canonical())?;
    let results = criteria::run_suite(ctx.seed(), &ids);
    write_suite(&mut dir, &results)?;

    let determinism = if want_determinism {
        let other = if ctx.threads == 1 { 2 } else { 1 };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(other)
            .build()
            .map_err(|e| Failure::Io(anyhow::anyhow!("thread pool: {e}")))?;
        let rerun_root = ctx.out.join("rerun");
        let mut rerun = OutDir::create(&rerun_root)?;
        rerun.write("config.toml", ctx.loaded.config.canonical())?;
        let again = pool.install(|| criteria::run_suite(ctx.seed(), &ids));
        write_suite(&mut rerun, &again)?;
        let files = rerun.finish("verify-rerun", &ctx.loaded.config.canonical(), ctx.seed(), other)?;
        let (n, mismatched) = compare_trees(&ctx.out, &rerun_root, &files);
        dir.adopt("rerun", files);
        Some(Determinism {
            threads: [ctx.threads, other],
            files_compared: n,
            passed: mismatched.is_empty(),
            mismatched,
        })
    } else {
        None
    };

    let outcome = VerifyOutcome { results, determinism };
    let report = json!({
        "criteria": outcome.results,
        "determinism": outcome.determinism,
        "failed": outcome.failed(),
        "passed": outcome.failed().is_empty(),
    });
    dir.write_json("verify.json", &report)?;
    ctx.finish(dir, "verify")?;
    Ok(outcome)
}
