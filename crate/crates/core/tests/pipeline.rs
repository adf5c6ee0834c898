//! Checks that chain several modules together.

use std::f64::consts::PI;

use fracscrew::helicoid3d::{minimize_cyl, reconstruct3d, CylGrid, ReducedField};
use fracscrew::nmc::{classify, screw_motion, symmetry_map, RegionLabel, ScrewSurface};
use fracscrew::optimize::LbfgsOptions;
use fracscrew::potential::{lambda_star, DoubleWellPotential};
use fracscrew::spectral1d::{extend, SineExpansion};
use fracscrew::strip1d::{threshold_scan, StripConfig, StripField, StripGrid};
use proptest::prelude::*;

fn cylinder_solution(lambda: f64) -> (CylGrid, ReducedField) {
    let f = DoubleWellPotential::standard();
    let grid = CylGrid::new(lambda, 0.5, 8.0, 12.0 * lambda / PI, 16, 16, 16).unwrap();
    let init = ReducedField::initial_guess(&grid, 0.1).unwrap();
    let sol = minimize_cyl(&grid, &f, &init, &LbfgsOptions::default()).unwrap();
    assert!(sol.field.sup_norm() > 0.1);
    (grid, sol.field)
}

#[test]
fn strip_first_mode_is_the_spectral_extension_of_one_sine() {
    for alpha in [0.25, 0.5, 0.75] {
        let lambda = 3.0;
        let grid = StripGrid::new(lambda, alpha, 24, 24, 6.0).unwrap();
        let field = StripField::first_mode(&grid, 1.0).unwrap();
        // coefficient of the orthonormal mode sqrt(2/lambda) sin(pi s/lambda)
        let exp = SineExpansion::new(lambda, vec![(lambda / 2.0).sqrt()]).unwrap();
        let s: Vec<f64> = (0..grid.ns).map(|i| grid.s(i)).collect();
        for j in 0..grid.ny {
            let ext = extend(&exp, alpha, grid.y[j], &s).unwrap();
            for (i, v) in ext.iter().enumerate() {
                assert!((field.get(i, j) - v).abs() < 1e-12, "alpha={alpha} i={i} j={j}");
            }
        }
    }
}

#[test]
fn threshold_follows_the_potential_curvature() {
    // c (1 - t^2)^2 has F''(0) = -4c, so the critical pitch is pi / (4c) at alpha = 1/2
    let f = DoubleWellPotential::quartic(1.0);
    let star = lambda_star(&f, 0.5).unwrap();
    assert!((star - PI / 4.0).abs() < 1e-14);
    let cfg = StripConfig { ns: 32, ny: 32, ..StripConfig::default() };
    let lambdas: Vec<f64> = (0..6).map(|i| 0.5 + 0.1 * i as f64).collect();
    let scan = threshold_scan(&f, 0.5, &lambdas, &cfg, 1e-2).unwrap();
    let crossing = scan.crossing.unwrap();
    assert!((crossing - star).abs() < 0.05 * star, "{crossing} vs {star}");
}

#[test]
fn reconstructed_solution_has_the_sign_of_the_helicoid_regions() {
    let lambda = 6.0;
    let (grid, field) = cylinder_solution(lambda);
    let h = ScrewSurface::new(lambda).unwrap();
    let mut signs = Vec::new();
    for i in 0..20 {
        for k in 0..20 {
            let r = 0.5 + 6.0 * i as f64 / 19.0;
            let x3 = -lambda + 2.0 * lambda * (k as f64 + 0.37) / 20.0;
            let x = [r * 0.6, r * 0.8, x3];
            let label = classify(x, &h);
            let u = reconstruct3d(&grid, &field, x, 0.0).unwrap();
            if label != RegionLabel::Boundary && u.abs() > 1e-3 {
                signs.push(u.signum() * label.sign());
            }
        }
    }
    assert!(signs.len() > 200);
    assert!(signs.iter().all(|&s| s == signs[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_is_screw_invariant_and_odd_under_the_reflection(
        r in 0.3f64..7.0, phi in -PI..PI, x3 in -10.0f64..10.0, beta in -3.0f64..3.0,
    ) {
        thread_local! {
            static SOLVED: (CylGrid, ReducedField) = cylinder_solution(6.0);
        }
        SOLVED.with(|(grid, field)| {
            let x = [r * phi.cos(), r * phi.sin(), x3];
            let u = reconstruct3d(grid, field, x, 0.0).unwrap();
            let moved = reconstruct3d(grid, field, screw_motion(6.0, beta, x), 0.0).unwrap();
            prop_assert!((u - moved).abs() < 1e-9, "{u} vs {moved}");
            let reflected = reconstruct3d(grid, field, symmetry_map(x), 0.0).unwrap();
            prop_assert!((u + reflected).abs() < 1e-9, "{u} vs {reflected}");
            Ok(())
        })?;
    }
}
