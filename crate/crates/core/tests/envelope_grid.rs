use std::time::Instant;

use pluri::dynamics::{julia_grid, EscapeParams, JuliaClass};
use pluri::envelope::obstacle::{default_max_sweeps, DEFAULT_TOL};
use pluri::envelope::{
    cln_ratio, discrete_ddc_mass, hartogs_bound_check, limsup_defect, relative_extremal_obstacle, sup_star_family,
    usc_regularize, ClnParams, ObstacleSpec,
};
use pluri::grid::{GridField, SliceSpec};
use pluri::poly::{Direction, PolyMap};
use pluri::{CVec, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn closed_form(x: f64, r: f64) -> f64 {
    (x.ln() / (1.0 / r).ln()).max(-1.0)
}

#[test]
fn obstacle_matches_the_disk_in_disk_formula() {
    for r in [0.1, 0.25, 0.5] {
        let t = Instant::now();
        let ob = ObstacleSpec::disk_in_disk(256, c(0.0, 0.0), r, 1.0).unwrap();
        let s = relative_extremal_obstacle(&ob, DEFAULT_TOL, default_max_sweeps(256)).unwrap();
        let slice = s.field.slice().clone();
        let mut worst: f64 = 0.0;
        for k in 0..slice.cells() {
            if ob.u_mask()[k] {
                let w = slice.param_of_index(k);
                worst = worst.max((s.field.values()[k] - closed_form(w.norm(), r)).abs());
            }
        }
        println!("r {r}: sweeps {} sup error {worst:.4} ({:?})", s.sweeps, t.elapsed());
        assert!(worst <= 2e-2);
    }
}

#[test]
fn obstacle_solution_is_discretely_subharmonic_and_monotone() {
    let small = ObstacleSpec::disk_in_disk(64, c(0.0, 0.0), 0.2, 1.0).unwrap();
    let big = ObstacleSpec::disk_in_disk(64, c(0.0, 0.0), 0.35, 1.0).unwrap();
    let v1 = relative_extremal_obstacle(&small, DEFAULT_TOL, default_max_sweeps(64)).unwrap().field;
    let v2 = relative_extremal_obstacle(&big, DEFAULT_TOL, default_max_sweeps(64)).unwrap().field;
    assert!(v2.values().iter().zip(v1.values()).all(|(a, b)| *a <= b + 1e-7));

    let res = 64;
    let free: Vec<bool> = small.u_mask().iter().zip(small.a_mask()).map(|(u, a)| *u && !*a).collect();
    for j in 1..res - 1 {
        for i in 1..res - 1 {
            if free[j * res + i] {
                let avg = 0.25 * (v1.get(i - 1, j) + v1.get(i + 1, j) + v1.get(i, j - 1) + v1.get(i, j + 1));
                assert!(v1.get(i, j) <= avg + 1e-6);
            }
        }
    }

    // a larger U gives a smaller envelope
    let slice = SliceSpec::plane(1.0, 64).unwrap();
    let a = |w: C64| w.norm() <= 0.2;
    let u_small = ObstacleSpec::from_predicates(slice.clone(), a, |w| w.norm() < 0.8).unwrap();
    let u_big = ObstacleSpec::from_predicates(slice, a, |w| w.norm() < 1.0).unwrap();
    let f_small = relative_extremal_obstacle(&u_small, DEFAULT_TOL, default_max_sweeps(64)).unwrap().field;
    let f_big = relative_extremal_obstacle(&u_big, DEFAULT_TOL, default_max_sweeps(64)).unwrap().field;
    assert!(f_big.values().iter().zip(f_small.values()).all(|(a, b)| *a <= b + 1e-7));
}

#[test]
fn obstacle_reports_non_convergence() {
    let ob = ObstacleSpec::disk_in_disk(64, c(0.0, 0.0), 0.25, 1.0).unwrap();
    assert!(relative_extremal_obstacle(&ob, DEFAULT_TOL, 3).is_err());
}

#[test]
fn riesz_mass_of_log_modulus_is_one() {
    for res in [128, 256] {
        let g = GridField::from_param_fn(SliceSpec::plane(1.0, res).unwrap(), |w| w.norm().ln());
        for r in [0.2, 0.3, 0.4, 0.5, 0.6] {
            let m = discrete_ddc_mass(&g, c(0.0, 0.0), r).unwrap();
            assert!((m.mass - 1.0).abs() <= 5e-2, "res {res} r {r}: {m:?}");
        }
    }
    // poles off the cell corners
    for pole in [c(0.13, -0.21), c(0.005, 0.003), c(0.0041, 0.0), c(0.31, 0.17)] {
        for res in [128, 256] {
            let g = GridField::from_param_fn(SliceSpec::plane(1.0, res).unwrap(), |w| (w - pole).norm().ln());
            for r in [0.2, 0.4, 0.6] {
                if pole.re.abs().max(pole.im.abs()) + r > 0.95 {
                    continue;
                }
                let m = discrete_ddc_mass(&g, pole, r).unwrap();
                assert!((m.mass - 1.0).abs() <= 5e-2, "pole {pole} res {res} r {r}: {m:?}");
                assert!((m.signed() - 1.0).abs() <= 1e-2, "signed {}", m.signed());
            }
        }
    }
}

#[test]
fn riesz_mass_of_squared_modulus_scales_with_area() {
    // Laplacian of |w|^2 is 4, so the mass of a disk of radius r is 2 r^2
    let g = GridField::from_param_fn(SliceSpec::plane(1.0, 256).unwrap(), |w| w.norm_sqr());
    let a = discrete_ddc_mass(&g, c(0.0, 0.0), 0.25).unwrap().mass;
    let b = discrete_ddc_mass(&g, c(0.0, 0.0), 0.5).unwrap().mass;
    assert!((a / (2.0 * 0.0625) - 1.0).abs() < 5e-2);
    assert!((b / a / 4.0 - 1.0).abs() < 5e-2);

    let harmonic = GridField::from_param_fn(SliceSpec::plane(1.0, 128).unwrap(), |w| w.re);
    assert!(discrete_ddc_mass(&harmonic, c(0.0, 0.0), 0.5).unwrap().mass <= 1e-6);
}

#[test]
fn usc_and_sup_star() {
    let slice = SliceSpec::plane(1.0, 64).unwrap();
    let h = slice.cell_size();
    let smooth = GridField::from_param_fn(slice.clone(), |w| (3.0 * w.re).sin() + w.im);
    let reg = usc_regularize(&smooth, 1);
    let lip = 4.0;
    for (a, b) in reg.values().iter().zip(smooth.values()) {
        assert!(a >= b && a - b <= lip * h * 2f64.sqrt());
    }
    let twice = usc_regularize(&reg, 1);
    assert!(twice.values().iter().zip(reg.values()).all(|(a, b)| a >= b));
    let wide = usc_regularize(&smooth, 2);
    assert!(wide.values().iter().zip(reg.values()).all(|(a, b)| a >= b));

    let single = sup_star_family(std::slice::from_ref(&smooth), 1).unwrap();
    assert_eq!(single, reg);
    let pair = sup_star_family(&[smooth.clone(), smooth.clone()], 1).unwrap();
    assert_eq!(pair, reg);

    let family: Vec<GridField> = (0..6)
        .map(|k| {
            let ck = C64::from_polar(0.4, k as f64);
            GridField::from_param_fn(slice.clone(), move |w| (w - ck).norm().ln())
        })
        .collect();
    let sup = sup_star_family(&family, 1).unwrap();
    for f in &family {
        assert!(sup.values().iter().zip(f.values()).all(|(a, b)| a >= b));
    }

    let other = GridField::constant(SliceSpec::plane(2.0, 64).unwrap(), 0.0);
    assert!(sup_star_family(&[smooth, other], 1).is_err());
}

#[test]
fn limsup_defect_of_tame_sequences_is_empty() {
    let slice = SliceSpec::plane(1.0, 32).unwrap();
    let constant: Vec<GridField> = (0..10).map(|_| GridField::constant(slice.clone(), 0.3)).collect();
    assert_eq!(limsup_defect(&constant, 1, 1e-2, None).unwrap().fraction, 0.0);
    let converging: Vec<GridField> = (1..=10)
        .map(|m| GridField::from_param_fn(slice.clone(), move |w| 0.5 + w.re.sin() * 1e-3 / m as f64))
        .collect();
    assert_eq!(limsup_defect(&converging, 1, 1e-2, None).unwrap().fraction, 0.0);
    assert!(limsup_defect(&converging[..5], 1, 1e-2, None).is_err());
}

#[test]
fn hartogs_bound_cases() {
    let slice = SliceSpec::plane(1.0, 32).unwrap();
    let cells = slice.cells();
    let band: Vec<bool> = (0..cells).map(|k| slice.param_of_index(k).norm() < 0.6).collect();
    let none = vec![false; cells];
    let f = vec![0.0; cells];
    let decreasing: Vec<GridField> = (0..6).map(|m| GridField::constant(slice.clone(), -1.0 - m as f64)).collect();
    let r = hartogs_bound_check(&decreasing, &band, &band, &none, &f, 0.1, 1).unwrap();
    assert_eq!(r.n0, Some(0));

    let mut spiky = decreasing.clone();
    spiky[2] = GridField::constant(slice.clone(), 5.0);
    let r = hartogs_bound_check(&spiky, &band, &band, &none, &f, 0.1, 1).unwrap();
    assert_eq!(r.n0, Some(3));

    // E covering all of K is not nowhere dense
    assert!(hartogs_bound_check(&decreasing, &band, &band, &band, &f, 0.1, 1).is_err());
}

fn julia_points(count: usize) -> Vec<CVec> {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    let slice = SliceSpec::new(
        CVec::from_slice(&[c(0.0, 0.0), c(0.3, 0.1)]),
        CVec::from_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
        2.0,
        128,
    )
    .unwrap();
    let (_, classes) = julia_grid(&m, &slice, Direction::Forward, &p).unwrap();
    let band: Vec<usize> = (0..slice.cells()).filter(|k| classes[*k] == JuliaClass::BoundaryBand).collect();
    (0..count).map(|i| slice.point_at(slice.param_of_index(band[i * band.len() / count]))).collect()
}

#[test]
fn cln_constants_on_the_julia_set() {
    let m = PolyMap::henon(0.3).unwrap();
    let p = EscapeParams::for_map(&m);
    let norm_sq = |z: &[C64]| z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    for z in julia_points(3) {
        let t = Instant::now();
        let coarse = cln_ratio(&m, &p, norm_sq, &z, &[0.4, 0.2, 0.1], &ClnParams::default()).unwrap();
        let fine =
            cln_ratio(&m, &p, norm_sq, &z, &[0.4, 0.2, 0.1], &ClnParams { cells: 32, ..ClnParams::default() }).unwrap();
        let cs = |r: &pluri::envelope::ClnReport| r.entries.iter().map(|e| e.c).collect::<Vec<_>>();
        println!(
            "{:?}: {:?} / {:?} spreads {:.2} {:.2} ({:?})",
            z.to_reals(),
            cs(&coarse),
            cs(&fine),
            coarse.spread,
            fine.spread,
            t.elapsed()
        );
        assert!(!coarse.inconclusive && coarse.spread < 10.0);
        assert!(!fine.inconclusive && fine.spread < 10.0 && fine.max <= 2.0 * coarse.max);
    }

    let constant = cln_ratio(&m, &p, |_: &[C64]| 2.0, &julia_points(1)[0], &[0.2], &ClnParams::default()).unwrap();
    assert_eq!(constant.entries[0].numerator, 0.0);
    assert_eq!(constant.entries[0].c, Some(0.0));

    let far = CVec::from_slice(&[c(30.0, 0.0), c(20.0, 5.0)]);
    let exterior = cln_ratio(&m, &p, norm_sq, &far, &[0.4, 0.2], &ClnParams::default()).unwrap();
    assert!(exterior.inconclusive, "{exterior:?}");
}
