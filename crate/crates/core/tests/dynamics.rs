use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pluri::dynamics::{
    dynamical_degree_estimate, eval_green, green_invariance_residual, julia_grid, julia_indicator, orbit, EscapeParams,
    JuliaClass,
};
use pluri::grid::SliceSpec;
use pluri::poly::{Direction, PolyMap, SymbolicBudget};
use pluri::{CVec, C64};

fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Plain escape-rate loop for x^2 + a y, written independently of the library.
fn henon_green_oracle(a: f64, z: [C64; 2], max_iter: usize, radius: f64) -> f64 {
    let (mut x, mut y) = (z[0], z[1]);
    let mut scale = 1.0;
    for _ in 0..=max_iter {
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if n > radius {
            return scale * n.ln_1p();
        }
        (x, y) = (x * x + y * a, x);
        scale /= 2.0;
    }
    0.0
}

fn random_box(rng: &mut ChaCha8Rng, half: f64) -> [C64; 2] {
    let mut v = || rng.random_range(-half..half);
    [C64::new(v(), v()), C64::new(v(), v())]
}

fn quantile(mut v: Vec<f64>, p: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * p).round() as usize]
}

#[test]
fn green_vanishes_at_the_fixed_points() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    // x = x^2 + a x gives x = 0 or x = 1 - a
    for x in [0.0, 1.0 - 0.3] {
        let z = [r(x), r(x)];
        assert_eq!(m.eval(&z, Direction::Forward).unwrap().into_inner(), z.to_vec());
        assert_eq!(eval_green(&m, &z, Direction::Forward, &p).unwrap(), 0.0);
    }
}

#[test]
fn green_matches_a_high_budget_oracle() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    let z = [r(10.0), r(0.0)];
    let oracle = henon_green_oracle(0.3, z, 200, 1e12);
    let library_fine = eval_green(&m, &z, Direction::Forward, &p.with_budget(200, 1e12)).unwrap();
    let g = eval_green(&m, &z, Direction::Forward, &p).unwrap();
    println!("G+(10, 0) = {g:.12} oracle {oracle:.12}");
    assert!((g - oracle).abs() <= 1e-6);
    assert!((library_fine - oracle).abs() <= 1e-12);
    // the limit is close to log 10 since x^2 dominates from the start
    assert!((oracle - 10f64.ln()).abs() < 1e-2);

    let rec = orbit(&m, &z, Direction::Forward, &p).unwrap();
    assert_eq!(rec.green_estimate, g);
}

#[test]
fn invariance_residuals() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    assert_eq!(green_invariance_residual(&m, &[r(0.0), r(0.0)], &p).unwrap(), 0.0);

    let z = [r(5.0), r(5.0)];
    let res = green_invariance_residual(&m, &z, &p).unwrap();
    let fz = m.eval(&z, Direction::Forward).unwrap();
    let oracle =
        (henon_green_oracle(0.3, [fz[0], fz[1]], 200, 1e12) - 2.0 * henon_green_oracle(0.3, z, 200, 1e12)).abs();
    println!("residual at (5, 5): {res:.3e}, oracle {oracle:.3e}");
    assert!(res <= 1e-6 && oracle <= 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fine = p.with_budget(160, 1e16);
    let mut coarse = Vec::new();
    let mut doubled = Vec::new();
    for _ in 0..1000 {
        let z = random_box(&mut rng, 3.0);
        coarse.push(green_invariance_residual(&m, &z, &p).unwrap());
        doubled.push(green_invariance_residual(&m, &z, &fine).unwrap());
    }
    let (q, qf) = (quantile(coarse, 0.95), quantile(doubled, 0.95));
    println!("95th percentile residual {q:.3e}, doubled budget {qf:.3e}");
    assert!(q <= 1e-5 && qf <= 1e-5);
}

#[test]
fn point_classification() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    assert_ne!(julia_indicator(&m, &[r(0.0), r(0.0)], &p).unwrap(), JuliaClass::Exterior);
    assert_eq!(julia_indicator(&m, &[r(100.0), r(100.0)], &p).unwrap(), JuliaClass::Exterior);
    assert!(julia_indicator(&m, &[r(0.0)], &p).is_err());
}

#[test]
fn band_cells_sit_on_the_boundary_of_the_filled_set() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    let res = 512;
    let slice =
        SliceSpec::new(CVec::from_slice(&[r(0.0), r(0.0)]), CVec::from_slice(&[r(1.0), r(0.0)]), 2.0, res).unwrap();
    let (field, classes) = julia_grid(&m, &slice, Direction::Forward, &p).unwrap();
    let inside: Vec<bool> = field.values().iter().map(|g| *g <= p.zero_threshold).collect();
    let at = |i: isize, j: isize| -> Option<usize> {
        (i >= 0 && j >= 0 && i < res as isize && j < res as isize).then(|| j as usize * res + i as usize)
    };
    // cells where the indicator differs from some 4-neighbor
    let change: Vec<bool> = (0..res * res)
        .map(|k| {
            let (i, j) = ((k % res) as isize, (k / res) as isize);
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(di, dj)| at(i + di, j + dj).is_some_and(|n| inside[n] != inside[k]))
        })
        .collect();
    let near = |k: usize, radius: isize, pred: &dyn Fn(usize) -> bool| {
        let (i, j) = ((k % res) as isize, (k / res) as isize);
        (-radius..=radius).any(|dj| (-radius..=radius).any(|di| at(i + di, j + dj).is_some_and(pred)))
    };
    let band: Vec<usize> = (0..res * res).filter(|k| classes[*k] == JuliaClass::BoundaryBand).collect();
    let interior = classes.iter().filter(|c| **c == JuliaClass::InteriorKplus).count();
    println!("band {} interior {interior}", band.len());
    assert!(!band.is_empty() && interior > 0);
    assert!(band.iter().all(|k| near(*k, 1, &|n| change[n])));
    assert!(band.iter().all(|k| near(*k, 2, &|n| classes[n] == JuliaClass::InteriorKplus)));
    // and every change cell inside K+ is a band cell
    assert!((0..res * res).filter(|k| change[*k] && inside[*k]).all(|k| classes[k] == JuliaClass::BoundaryBand));
}

#[test]
fn degree_growth() {
    let b = SymbolicBudget::default();
    let h = dynamical_degree_estimate(&PolyMap::henon(0.3).unwrap(), 3, b).unwrap();
    assert_eq!(h, vec![(1, 2.0), (2, 2.0), (3, 2.0)]);
    let id = dynamical_degree_estimate(&PolyMap::identity(2), 3, b).unwrap();
    assert_eq!(id, vec![(1, 1.0), (2, 1.0), (3, 1.0)]);
    let shift = dynamical_degree_estimate(&PolyMap::translation(&[r(1.0), r(0.0)]), 3, b).unwrap();
    assert_eq!(shift, vec![(1, 1.0), (2, 1.0), (3, 1.0)]);
    assert!(dynamical_degree_estimate(&PolyMap::henon(0.3).unwrap(), 7, b).is_err());
}

#[test]
fn larger_budgets_keep_exterior_points_exterior() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..2000 {
        let z = random_box(&mut rng, 2.0);
        let g = eval_green(&m, &z, Direction::Forward, &p).unwrap();
        if g <= 2.0 * p.zero_threshold {
            continue;
        }
        checked += 1;
        for (iters, radius) in [(120, 1e8), (80, 1e12), (200, 1e14)] {
            let big = p.with_budget(iters, radius);
            assert_eq!(julia_indicator(&m, &z, &big).unwrap(), JuliaClass::Exterior);
        }
    }
    assert!(checked > 500);
}
