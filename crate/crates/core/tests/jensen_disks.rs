use pluri::disk::{AnalyticDisk, CircleQuadrature, DiskMeasure};
use pluri::jensen::field::{NegNormSq, NormSq, PolyRepr, PshTerm};
use pluri::jensen::probes::{
    hull_membership_probe, maximum_principle_check, pluripolar_probe, pushforward_disk_measure, relative_green_disks,
    support_constrained_disk, HullVerdict, SupportSet,
};
use pluri::jensen::{
    disk_functional, jensen_slack, poletsky_infimum, poletsky_infimum_seeded, DiskSpace, Domain, FnField,
    InteriorIndicator, OptimizerConfig, PshField, SetDescriptor,
};
use pluri::poly::{Direction, Poly, PolyMap};
use pluri::{CVec, Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cv(z: &[C64]) -> CVec {
    CVec::from_slice(z)
}

fn unit_disk() -> Domain {
    Domain::Ball { center: cv(&[c(0.0, 0.0)]), radius: 1.0 }
}

fn ball_in_ball(r: f64) -> SetDescriptor {
    SetDescriptor::ball(cv(&[c(0.0, 0.0)]), r)
}

fn closed_form(x: f64, r: f64) -> f64 {
    (x.ln() / (1.0 / r).ln()).max(-1.0)
}

fn sample_disk() -> AnalyticDisk {
    let x = cv(&[c(0.3, -0.1), c(-0.2, 0.4)]);
    AnalyticDisk::new(
        x,
        vec![vec![c(0.5, 0.1), c(0.0, -0.2), c(0.1, 0.1)], vec![c(-0.3, 0.2), c(0.2, 0.0), c(0.0, 0.05)]],
    )
    .unwrap()
}

#[test]
fn constant_disk_returns_the_value_at_the_center() {
    let x = cv(&[c(0.4, 0.2), c(-1.0, 0.5)]);
    let mu = DiskMeasure::with_default_quadrature(AnalyticDisk::constant(x.clone()));
    assert!((disk_functional(&NormSq, &mu) - NormSq.eval_at(&x)).abs() < 1e-14);
}

trait EvalAt {
    fn eval_at(&self, z: &[C64]) -> f64;
}

impl<T: pluri::jensen::Field> EvalAt for T {
    fn eval_at(&self, z: &[C64]) -> f64 {
        self.eval(z)
    }
}

#[test]
fn harmonic_mean_value_on_a_disk() {
    let mu = DiskMeasure::with_default_quadrature(sample_disk());
    let u = FnField(|z: &[C64]| z[0].re);
    assert!((disk_functional(&u, &mu) - 0.3).abs() < 1e-12);
}

#[test]
fn jensen_formula_for_log_modulus() {
    // the flat disk x1 + rho t has mean log|z1 - x1| = log rho
    let x = cv(&[c(0.2, 0.1), c(1.0, 0.0)]);
    let rho = 0.37;
    let mu = DiskMeasure::new(
        AnalyticDisk::flat(x.clone(), &[c(1.0, 0.0), c(0.0, 0.0)], rho).unwrap(),
        CircleQuadrature::new(64).unwrap(),
    );
    let u = FnField(move |z: &[C64]| (z[0] - c(0.2, 0.1)).norm().ln());
    assert!((disk_functional(&u, &mu) - rho.ln()).abs() < 1e-10);
}

#[test]
fn pole_on_the_boundary_gives_minus_infinity() {
    let x = cv(&[c(0.0, 0.0)]);
    let mu = DiskMeasure::new(AnalyticDisk::flat(x, &[c(1.0, 0.0)], 1.0).unwrap(), CircleQuadrature::new(64).unwrap());
    let u = FnField(|z: &[C64]| (z[0] - c(1.0, 0.0)).norm().ln());
    assert_eq!(disk_functional(&u, &mu), f64::NEG_INFINITY);
}

#[test]
fn slack_signs() {
    let mu = DiskMeasure::with_default_quadrature(sample_disk());
    let x = mu.center().clone();
    assert!(jensen_slack(&NormSq, &x, &mu, 0.0).unwrap().slack >= 0.0);

    let p =
        Poly::new(2, vec![(vec![2, 0], c(0.3, 1.0)), (vec![1, 1], c(-1.0, 0.2)), (vec![0, 1], c(2.0, 0.0))]).unwrap();
    let ph = PshField { terms: vec![PshTerm::Pluriharmonic { p: PolyRepr::new(p) }], constant: 0.4 };
    assert!(jensen_slack(&ph, &x, &mu, 1e-10).unwrap().slack.abs() < 1e-10);

    // the disk image stays within |z1 - 0.3| < 1, so log|z1 - 3| is harmonic there
    let far = FnField(|z: &[C64]| (z[0] - c(3.0, 0.0)).norm().ln());
    assert!(jensen_slack(&far, &x, &mu, 1e-10).unwrap().slack.abs() < 1e-10);
}

#[test]
fn slack_rejects_a_foreign_center() {
    let mu = DiskMeasure::with_default_quadrature(sample_disk());
    let err = jensen_slack(&NormSq, &[c(0.0, 0.0), c(0.0, 0.0)], &mu, 0.0).unwrap_err();
    assert!(matches!(err, Error::CenterMismatch));
}

#[test]
fn psh_input_is_its_own_envelope() {
    let u = PshField {
        terms: vec![
            PshTerm::NormSq { w: 0.7, c: vec![c(0.1, 0.0), c(0.0, -0.3)] },
            PshTerm::LogOnePlus { w: 0.5, p: PolyRepr::new(Poly::var(2, 0).mul(&Poly::var(2, 1))) },
        ],
        constant: -0.2,
    };
    let x = cv(&[c(0.2, 0.3), c(-0.1, 0.1)]);
    let space = DiskSpace::new(4, 1.0, Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 2.0 }).unwrap();
    let r = poletsky_infimum(&u, &x, &space, &OptimizerConfig::default()).unwrap();
    assert!(r.value <= r.constant_value);
    assert!((r.value - u.eval_at(&x)).abs() < 5e-3);
}

#[test]
fn obstacle_envelope_in_the_plane() {
    let x = cv(&[c(0.3, 0.4)]);
    let space = DiskSpace::new(4, 1.0, unit_disk()).unwrap();
    let r = relative_green_disks(&ball_in_ball(0.25), &x, &space, &OptimizerConfig::default()).unwrap();
    assert!((-r.mass - closed_form(0.5, 0.25)).abs() < 3e-2, "value {}", -r.mass);
    assert_eq!(r.result.max_violation, 0.0);
}

#[test]
fn bounded_below_fields_stay_bounded_below() {
    let u = InteriorIndicator::new(ball_in_ball(0.25));
    let x = cv(&[c(-0.6, 0.0)]);
    let space = DiskSpace::new(4, 1.0, unit_disk()).unwrap();
    let r = poletsky_infimum(&u, &x, &space, &OptimizerConfig::default()).unwrap();
    assert!(r.value >= -1.0 && r.value <= 0.0);
}

#[test]
fn relative_green_basic_cases() {
    let space = DiskSpace::new(4, 1.0, unit_disk()).unwrap();
    let opt = OptimizerConfig::default();
    let a = ball_in_ball(0.25);
    let inside = relative_green_disks(&a, &cv(&[c(0.1, 0.0)]), &space, &opt).unwrap();
    assert_eq!(-inside.mass, -1.0);

    let near_edge = relative_green_disks(&a, &cv(&[c(0.0, 0.92)]), &space, &opt).unwrap();
    assert!(-near_edge.mass >= -0.2);
    assert!(-near_edge.mass >= closed_form(0.92, 0.25) - 3e-2);

    let outside = relative_green_disks(&a, &cv(&[c(1.2, 0.0)]), &space, &opt);
    assert!(matches!(outside, Err(Error::OutsideDomain)));
}

#[test]
fn hull_probe_finds_the_torus_disk() {
    let a = SetDescriptor::TorusBand { radii: vec![1.0, 1.0], half_width: 0.05 };
    let space = DiskSpace::new(4, 2.0, Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 2.0 }).unwrap();
    let r =
        hull_membership_probe(&a, &cv(&[c(0.0, 0.0), c(0.0, 0.0)]), &space, &OptimizerConfig::default(), 0.01).unwrap();
    assert_eq!(r.verdict, HullVerdict::InsideHullCandidate);
    assert!(r.mass >= 0.99);
}

#[test]
fn hull_probe_respects_convexity_of_balls() {
    let a = SetDescriptor::ball(cv(&[c(0.0, 0.0), c(0.0, 0.0)]), 1.0);
    let space = DiskSpace::new(4, 3.0, Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 3.0 }).unwrap();
    let x = cv(&[c(1.1, 0.3), c(-0.2, 0.4)]);
    let r = hull_membership_probe(&a, &x, &space, &OptimizerConfig::default(), 0.1).unwrap();
    assert_eq!(r.verdict, HullVerdict::OutsideHullEvidence);
}

#[test]
fn points_next_to_a_fat_set_carry_almost_full_mass() {
    let a = SetDescriptor::ball(cv(&[c(0.0, 0.0), c(0.0, 0.0)]), 0.5);
    let space = DiskSpace::new(4, 2.0, Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 2.0 }).unwrap();
    let x = cv(&[c(0.53, 0.0), c(0.0, 0.0)]);
    let eps = 0.15;
    let r = hull_membership_probe(&a, &x, &space, &OptimizerConfig::default(), eps).unwrap();
    assert!(-r.mass < -1.0 + eps / 2.0, "mass {}", r.mass);
    assert_eq!(r.verdict, HullVerdict::InsideHullCandidate);
}

#[test]
fn pluripolar_probe_cases() {
    let opt = OptimizerConfig::default();
    let domain = Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 2.0 };
    let space = DiskSpace::new(4, 1.0, domain).unwrap();
    let x = cv(&[c(0.5, 0.0), c(0.0, 0.0)]);
    let empty = pluripolar_probe(&SetDescriptor::Empty, &x, &space, &opt).unwrap();
    assert_eq!(empty.mass, 0.0);

    let mut masses = Vec::new();
    for hw in [4e-3, 2e-3, 1e-3] {
        let slab = SetDescriptor::Slab { coord: 0, center: c(0.0, 0.0), half_width: hw };
        masses.push(pluripolar_probe(&slab, &x, &space, &opt).unwrap().mass);
    }
    println!("slab masses {masses:?}");
    assert!(masses[2] <= 2e-2, "{masses:?}");
    assert!(masses.windows(2).all(|w| w[1] <= w[0]), "{masses:?}");

    let solid = SetDescriptor::ball(cv(&[c(0.0, 0.0), c(0.0, 0.0)]), 0.3);
    assert!(pluripolar_probe(&solid, &x, &space, &opt).unwrap().mass >= 0.5);
}

#[test]
fn maximum_principle_controls() {
    let x = [c(0.0, 0.0), c(0.0, 0.0)];
    let support: Vec<CVec> = (0..400)
        .map(|k| {
            let t = k as f64 * 0.0157;
            let s = 0.05 + 0.9 * (k % 20) as f64 / 20.0;
            cv(&[c(s * t.cos(), s * t.sin()), c(0.1 * t.sin(), 0.0)])
        })
        .collect();
    let e = pluri::jensen::probes::samples_within(&support, &x, 0.25);
    let constant = FnField(|_: &[C64]| 2.0);
    let r = maximum_principle_check(&constant, &support, &x, 0.5, &e, 0.05, 1e-3).unwrap();
    assert!(!r.inconclusive && r.margin == 0.0 && !r.violation);

    let bump = NegNormSq(x.to_vec());
    let r = maximum_principle_check(&bump, &support, &x, 0.5, &e, 0.05, 1e-3).unwrap();
    assert!(r.violation);

    let r = maximum_principle_check(&constant, &support, &x, 5.0, &e, 0.05, 1e-3).unwrap();
    assert!(r.inconclusive && !r.violation);
}

#[test]
fn pushforward_cases() {
    let mu = DiskMeasure::with_default_quadrature(sample_disk());
    let id = PolyMap::identity(2);
    let pushed = pushforward_disk_measure(&id, &mu).unwrap();
    for (p, q) in pushed.points().zip(mu.samples()) {
        assert_eq!(p, q);
    }

    // change of variables: integrals of u o f^-1 against f_* mu equal integrals of u against mu
    let f = PolyMap::henon(0.3).unwrap();
    let pushed = pushforward_disk_measure(&f, &mu).unwrap();
    let u = |z: &[C64]| (1.0 + z[0].norm_sqr() + 2.0 * z[1].norm_sqr()).ln();
    let back = |z: &[C64]| u(&f.eval(z, Direction::Backward).unwrap());
    let x = mu.center();
    let fx = f.eval(x, Direction::Forward).unwrap();
    let slack_pushed = pushed.integrate(back) - back(&fx);
    let slack = jensen_slack(&FnField(u), x, &mu, 0.0).unwrap().slack;
    assert!((slack_pushed - slack).abs() < 1e-10);

    let point = cv(&[c(0.4, 0.1), c(-0.2, 0.3)]);
    let constant = DiskMeasure::with_default_quadrature(AnalyticDisk::constant(point.clone()));
    let fp = f.eval(&point, Direction::Forward).unwrap();
    let pushed = pushforward_disk_measure(&f, &constant).unwrap();
    assert!(pushed.points().all(|z| z == &fp[..]));
}

#[test]
fn argmin_disk_transports_under_automorphisms() {
    let f = PolyMap::translation(&[c(0.1, -0.2)]);
    let a = ball_in_ball(0.25);
    let x = cv(&[c(0.45, 0.1)]);
    let space = DiskSpace::new(3, 1.0, unit_disk()).unwrap();
    let r = relative_green_disks(&a, &x, &space, &OptimizerConfig::default()).unwrap();
    let pushed = pushforward_disk_measure(&f, &r.result.measure).unwrap();
    let u = InteriorIndicator::new(a);
    let moved = |z: &[C64]| u.eval_at(&f.eval(z, Direction::Backward).unwrap());
    for (p, q) in pushed.points().zip(r.result.measure.samples()) {
        assert_eq!(moved(p), u.eval_at(q));
    }
    assert!((pushed.integrate(moved) - r.result.value).abs() < 1e-12);
}

#[test]
fn larger_spaces_never_do_worse() {
    let a = SetDescriptor::ball(cv(&[c(0.0, 0.0), c(0.0, 0.0)]), 0.4);
    let u = InteriorIndicator::new(a);
    let x = cv(&[c(0.6, 0.2), c(0.1, 0.0)]);
    let opt = OptimizerConfig { restarts: 8, ..OptimizerConfig::default() };
    let domain = Domain::Ball { center: cv(&[c(0.0, 0.0), c(0.0, 0.0)]), radius: 1.5 };
    let mut warm: Option<AnalyticDisk> = None;
    let mut last = 0.0;
    for d in [1, 2, 4] {
        let space = DiskSpace::new(d, 1.0, domain.clone()).unwrap();
        let r = poletsky_infimum_seeded(&u, &x, &space, &opt, &[], warm.as_ref()).unwrap();
        assert!(r.value <= last);
        last = r.value;
        warm = Some(r.disk().clone());
    }
}

#[test]
fn sphere_supported_disks() {
    let x = cv(&[c(0.2, 0.1), c(0.0, 0.0)]);
    let space = DiskSpace::new(2, 1.0, Domain::Whole).unwrap();
    let opt = OptimizerConfig { restarts: 4, ..OptimizerConfig::default() };
    let r = support_constrained_disk(&SupportSet::Everything, &x, 0.3, &space, &opt, None).unwrap();
    assert!(r.residual <= 1e-3);

    let plane = SupportSet::Hyperplane { coord: 1, value: c(0.0, 0.0) };
    let r = support_constrained_disk(&plane, &x, 0.3, &space, &opt, None).unwrap();
    assert_eq!(r.residual_support, 0.0);
    assert!(r.residual_sphere <= 1e-3);
}
