use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pluri::cloud::PointCloud;
use pluri::disk::{disk_boundary_samples, AnalyticDisk, CircleQuadrature, DiskMeasure};
use pluri::dynamics::{green, EscapeParams};
use pluri::envelope::{sup_star_family, usc_regularize};
use pluri::equidist::{moment_vector, pullback_cloud, HenonForm, ShadowParams};
use pluri::grid::{GridField, SliceSpec};
use pluri::jensen::{jensen_slack, PshField};
use pluri::poly::{Direction, PolyMap, SymbolicBudget};
use pluri::{CVec, C64};

fn complex(scale: f64) -> impl Strategy<Value = C64> {
    (-scale..scale, -scale..scale).prop_map(|(a, b)| C64::new(a, b))
}

fn point(n: usize, scale: f64) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(scale), n)
}

/// (p(x) + a y, x) with deg p in 2..=3 and 0.2 <= |a| <= 1.
fn henon_like() -> impl Strategy<Value = PolyMap> {
    (prop::collection::vec(complex(0.5), 3), 2usize..=3, 0.2f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(
        |(low, d, r, arg)| {
            let mut p = vec![low[0], low[1], low[2]];
            p.truncate(d);
            p.push(C64::new(1.0, 0.0));
            PolyMap::generalized_henon(&p, C64::from_polar(r, arg)).unwrap()
        },
    )
}

fn rel_close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_round_trip(m in henon_like(), z in point(2, 10.0)) {
        let z: Vec<C64> = if CVec::from_slice(&z).norm() > 10.0 { z.iter().map(|c| c * 0.5).collect() } else { z };
        let fz = m.eval(&z, Direction::Forward).unwrap();
        let back = m.eval(&fz, Direction::Backward).unwrap();
        prop_assert!(CVec::from_slice(&z).sub(&back).unwrap().norm() <= 1e-10);
        let bz = m.eval(&z, Direction::Backward).unwrap();
        let fwd = m.eval(&bz, Direction::Forward).unwrap();
        prop_assert!(rel_close(&z, &fwd, 1e-10));
    }

    #[test]
    fn quadrature_weights_sum_to_one(n in 1usize..4096, center in point(2, 3.0), deg in 0usize..6) {
        let q = CircleQuadrature::new(n).unwrap();
        let coeffs = vec![vec![C64::new(0.3, 0.1); deg], vec![C64::new(-0.2, 0.4); deg]];
        let disk = AnalyticDisk::new(CVec::from_slice(&center), coeffs).unwrap();
        let samples = disk_boundary_samples(&disk, &q);
        prop_assert_eq!(samples.len(), n);
        // compensated sum, so only the rounding of the weights themselves shows
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for (_, w) in &samples {
            let t = sum + w;
            comp += if sum.abs() >= w.abs() { (sum - t) + w } else { (w - t) + sum };
            sum = t;
        }
        prop_assert!((sum + comp - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn composition_agrees_with_iteration(m in henon_like(), k in 1usize..=3, pts in prop::collection::vec(point(2, 1.0), 20)) {
        let comps = m.compose(k, SymbolicBudget::default()).unwrap();
        for z in pts {
            let mut it = z.clone();
            for _ in 0..k {
                it = m.eval(&it, Direction::Forward).unwrap().into_inner();
            }
            let sym: Vec<C64> = comps.iter().map(|p| p.eval(&z)).collect();
            prop_assert!(rel_close(&sym, &it, 1e-9), "{sym:?} vs {it:?}");
        }
    }

    #[test]
    fn green_is_nonnegative(z in point(2, 50.0), backward in any::<bool>()) {
        let m = PolyMap::henon(0.3).unwrap();
        let p = EscapeParams::for_map(&m);
        let dir = if backward { Direction::Backward } else { Direction::Forward };
        prop_assert!(green(&m, &z, dir, &p) >= 0.0);
    }

    #[test]
    fn jensen_slack_is_nonnegative_for_psh_fields(seed in any::<u64>(), center in point(2, 1.0), coeffs in prop::collection::vec(point(2, 0.5), 0..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = PshField::random(&mut rng, 2);
        let per_coord: Vec<Vec<C64>> = (0..2).map(|k| coeffs.iter().map(|c| c[k]).collect()).collect();
        let disk = AnalyticDisk::new(CVec::from_slice(&center), per_coord).unwrap();
        let mu = DiskMeasure::with_default_quadrature(disk);
        let report = jensen_slack(&u, &center, &mu, 1e-9).unwrap();
        prop_assert!(report.passed, "slack {}", report.slack);
    }

    #[test]
    fn usc_is_inflationary_and_monotone(values in prop::collection::vec(-5.0f64..5.0, 256), w in 1usize..3) {
        let g = GridField::new(SliceSpec::plane(1.0, 16).unwrap(), values).unwrap();
        let small = usc_regularize(&g, w);
        let big = usc_regularize(&g, w + 1);
        prop_assert!(small.values().iter().zip(g.values()).all(|(a, b)| a >= b));
        prop_assert!(big.values().iter().zip(small.values()).all(|(a, b)| a >= b));
        let sup = sup_star_family(&[g.clone(), g.map(|v| -v)], w).unwrap();
        prop_assert!(sup.values().iter().zip(g.values()).all(|(a, b)| *a >= b.abs() - 1e-15));
    }

    #[test]
    fn moments_ignore_point_order(coords in prop::collection::vec(complex(1.0), 2..80), rot in any::<prop::sample::Index>()) {
        let n = coords.len() / 2;
        let coords = coords[..2 * n].to_vec();
        let raw: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let a = PointCloud::new(2, coords.clone(), weights.clone(), "a").unwrap();
        let shift = rot.index(n);
        let mut c2 = coords.clone();
        c2.rotate_left(2 * shift);
        let mut w2 = weights.clone();
        w2.rotate_left(shift);
        let b = PointCloud::new(2, c2, w2, "b").unwrap();
        let (ma, mb) = (moment_vector(&a, 4).unwrap(), moment_vector(&b, 4).unwrap());
        prop_assert!(ma.distance(&mb).unwrap() <= 1e-13);
    }

    #[test]
    fn pullback_conserves_weight(coords in prop::collection::vec(complex(3.0), 2..64)) {
        let n = coords.len() / 2;
        let m = PolyMap::henon(0.3).unwrap();
        let c = PointCloud::uniform(2, coords[..2 * n].to_vec(), "random").unwrap();
        let p = pullback_cloud(&m, &c).unwrap();
        let total: f64 = p.cloud.weights().iter().sum();
        prop_assert!((0.0..1.0).contains(&p.dropped));
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn shadowed_orbits_are_genuine_orbits(z in point(2, 1.0), seed in any::<u64>()) {
        let m = PolyMap::henon(0.3).unwrap();
        let h = HenonForm::detect(&m).unwrap();
        let o = h.shadow([z[0], z[1]], 30, &ShadowParams::default(), seed);
        prop_assume!(o.residual <= 1e-8);
        prop_assert_eq!(o.point(0)[0], z[0]);
        for k in 0..30 {
            let f = h.forward(o.point(k + 1));
            let target = o.point(k);
            prop_assert!((f[0] - target[0]).norm() <= 1e-7 && (f[1] - target[1]).norm() <= 1e-12);
        }
    }
}
