use std::f64::consts::PI;

use equipart_core::grid::{eigensolve, Grid, ZERO_THRESHOLD_C0};
use equipart_core::separable::ModeIndex;
use equipart_core::strip::{
    direction_quad_form, emit_deformation, hessian_check, mode_direction, random_direction, strip_lambda1,
    surrogate_energy, Curve, Profile, StripFamily, DEFAULT_SPACING, DEFAULT_STEP,
};
use equipart_core::Error;

fn sq31() -> ModeIndex {
    ModeIndex::square(3, 1)
}

fn family(k: usize, h: f64) -> StripFamily {
    StripFamily::for_mode(sq31(), mode_direction(sq31(), k).unwrap(), h).unwrap()
}

#[test]
fn curved_strip_is_bracketed_by_straight_strips() {
    let n = 200;
    let left = Curve::straight(0.0, n);
    let right = Curve::from_fn(n, 1.0, |y| {
        (1.0 / 3.0 + 0.02 * (PI * y).sin(), 0.02 * PI * (PI * y).cos())
    });
    let curved = strip_lambda1(&left, &right, 1.0, 67).unwrap();
    let straight = |w: f64| PI * PI * (1.0 / (w * w) + 1.0);
    assert!(curved < straight(0.3133));
    assert!(curved > straight(0.3533));
}

#[test]
fn straight_strip_agrees_with_the_grid() {
    let h = 1.0 / 60.0;
    let n = 60;
    let mapped = strip_lambda1(&Curve::straight(0.0, n), &Curve::straight(1.0 / 3.0, n), 1.0, 20).unwrap();
    let g = Grid::rectangle(1.0 / 3.0, 1.0, h).unwrap();
    let grid = eigensolve(&g, 1).unwrap()[0].value;
    assert!(((mapped - grid) / grid).abs() <= 2.0 * h * h);
}

#[test]
fn nonpositive_width_is_rejected() {
    let n = 20;
    let right = Curve::from_fn(n, 1.0, |y| (0.1 - 0.2 * y, -0.2));
    assert!(strip_lambda1(&Curve::straight(0.0, n), &right, 1.0, 10).is_err());
}

#[test]
fn energy_at_zero_is_the_eigenvalue() {
    let l0 = surrogate_energy(&family(1, DEFAULT_SPACING), 0.0).unwrap();
    assert!(((l0 - 10.0 * PI * PI) / (10.0 * PI * PI)).abs() <= 1e-3);
}

#[test]
fn first_direction_descends_and_matches_the_hessian() {
    let h = DEFAULT_SPACING;
    let fam = family(1, h);
    let q = direction_quad_form(sq31(), &fam.directions).unwrap();
    let check = hessian_check(&fam, q, DEFAULT_STEP, ZERO_THRESHOLD_C0 * h).unwrap();
    assert!(check.discrepancy <= 0.02, "{check:?}");
    assert!(check.first_derivative.abs() <= 10.0 * DEFAULT_STEP.powi(2) + 10.0 * h * h);
    // Reflection y -> 1 - y maps the family at t to the family at -t.
    assert!((check.values[3] - check.values[1]).abs() <= 1e-10 * check.values[2]);
    assert!(surrogate_energy(&fam, 0.02).unwrap() < check.values[2]);
}

#[test]
fn third_direction_is_flat() {
    let h = DEFAULT_SPACING;
    let tau = ZERO_THRESHOLD_C0 * h;
    let fam = family(3, h);
    let q = direction_quad_form(sq31(), &fam.directions).unwrap();
    let check = hessian_check(&fam, q, DEFAULT_STEP, tau).unwrap();
    assert!(q.abs() <= tau);
    assert!(check.second_5pt.abs() <= tau, "{check:?}");
    let t: f64 = 0.02;
    let l = surrogate_energy(&fam, t).unwrap();
    assert!((l - check.values[2]).abs() <= 5.0 * t.powi(3) + 0.5 * tau * t * t);
}

#[test]
fn random_direction_matches_the_hessian() {
    let h = DEFAULT_SPACING;
    let dirs = random_direction(sq31(), 2024, 2..=4).unwrap();
    let fam = StripFamily::for_mode(sq31(), dirs.clone(), h).unwrap();
    let q = direction_quad_form(sq31(), &dirs).unwrap();
    let check = hessian_check(&fam, q, DEFAULT_STEP, ZERO_THRESHOLD_C0 * h).unwrap();
    assert!(check.discrepancy <= 0.05, "{check:?}");
}

#[test]
fn oversized_step_is_detected() {
    // Along an amplified flat direction the quartic term dominates a large step.
    let dirs = mode_direction(sq31(), 3)
        .unwrap()
        .into_iter()
        .map(|p| match p {
            Profile::SineRatio(c) => Profile::SineRatio(c.iter().map(|x| 3.0 * x).collect()),
            other => other,
        })
        .collect();
    let fam = StripFamily::for_mode(sq31(), dirs, 1.0 / 40.0).unwrap();
    assert!(matches!(
        hessian_check(&fam, 1.0, 0.08, 1e-3),
        Err(Error::StepSize { .. })
    ));
    assert!(hessian_check(&fam, 1.0, 0.01, 1e-3).is_ok());
}

#[test]
fn deformation_geometry() {
    let fam = family(1, 1.0 / 40.0);
    let snaps = emit_deformation(&fam, &[0.0, 0.1]).unwrap();
    for (i, line) in snaps[0].interfaces.iter().enumerate() {
        let x = (i + 1) as f64 / 3.0;
        assert!(line.iter().all(|&(px, _)| (px - x).abs() < 1e-15));
    }
    assert!(snaps[1].gap(0, 0.75) > 1.0 / 3.0);
    assert!(snaps[1].gap(0, 0.25) < 1.0 / 3.0);

    // The second direction translates both interfaces the same way.
    let fam = family(2, 1.0 / 40.0);
    let snap = &emit_deformation(&fam, &[0.1]).unwrap()[0];
    for k in 1..40 {
        let d0 = snap.interfaces[0][k].0 - 1.0 / 3.0;
        let d1 = snap.interfaces[1][k].0 - 2.0 / 3.0;
        assert!((d0 - d1).abs() < 1e-12);
    }
    assert!(matches!(
        emit_deformation(&fam, &[10.0]),
        Err(Error::OrderingViolation { .. })
    ));
}
