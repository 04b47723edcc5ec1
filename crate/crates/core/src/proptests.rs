//! Randomized invariants over the public API.

use proptest::prelude::*;

use crate::inverse::{centerline_mask, reconstruct_from_eigenpair, reconstruct_from_poisson, select_branch, Sign};
use crate::operator::{apply, discrete_dirichlet_eigenvalue};
use crate::solve::ground_eigenpair;
use crate::{assemble, CurvatureProfile, Field, Grid, GuideSpec, SolveOptions, TorsionSpec};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    // Poisson reconstruction inverts the centerline rows exactly: with
    // f = A·φ the formula returns the assembled γ² for any φ whose
    // centerline stays away from zero, smooth or not.
    #[test]
    fn poisson_reconstruction_is_exact_for_arbitrary_fields(
        a in 0.05f64..0.6,
        sigma in 0.5f64..2.0,
        values in proptest::collection::vec(-1.0f64..1.0, 41 * 7),
        center in proptest::collection::vec(0.5f64..1.0, 41),
    ) {
        let spec = GuideSpec::strip(1.0, 6.0).unwrap();
        let p = CurvatureProfile::gaussian(a, sigma).unwrap();
        let grid = Grid::new(&spec, 41, 7).unwrap();
        let op = assemble(&grid, &spec, &p).unwrap();
        let mut phi = Field::new(grid, values).unwrap();
        for (i, c) in center.iter().enumerate() {
            phi.values[grid.center_index(i)] = *c;
        }
        let f = apply(&op, &phi).unwrap();
        let r = reconstruct_from_poisson(&phi, &f, 1e-3).unwrap();
        prop_assert_eq!(r.diagnostics.masked_nodes, 39);
        for (s, g2) in r.masked() {
            let truth = p.eval(s, 0).unwrap().powi(2);
            prop_assert!((g2 - truth).abs() < 1e-9, "s = {s}: {g2} vs {truth}");
        }
    }

    #[test]
    fn mask_shrinks_as_threshold_grows(
        center in proptest::collection::vec(-1.0f64..1.0, 4..60),
        e1 in 0.0f64..1.0,
        e2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let wide = centerline_mask(&center, lo);
        let narrow = centerline_mask(&center, hi);
        for (w, n) in wide.iter().zip(&narrow) {
            prop_assert!(!n || *w);
        }
        prop_assert!(!wide[0] && !wide[center.len() - 1]);
    }

    #[test]
    fn branch_squares_back(
        a in -0.6f64..0.6,
        perturb in proptest::collection::vec(-1e-3f64..1e-3, 31),
        nonpositive in any::<bool>(),
    ) {
        prop_assume!(a.abs() > 1e-3);
        let spec = GuideSpec::strip(1.0, 5.0).unwrap();
        let p = CurvatureProfile::gaussian(a, 1.0).unwrap();
        let grid = Grid::new(&spec, 31, 5).unwrap();
        let op = assemble(&grid, &spec, &p).unwrap();
        let phi = Field::from_fn(grid, |s, u| (-s * s / 4.0).exp() * (std::f64::consts::PI * u[0]).cos());
        let mut f = apply(&op, &phi).unwrap();
        for (i, d) in perturb.iter().enumerate() {
            f.values[grid.center_index(i)] += d;
        }
        let sign = if nonpositive { Sign::Nonpositive } else { Sign::Nonnegative };
        let r = select_branch(reconstruct_from_poisson(&phi, &f, 1e-3).unwrap(), sign);
        let signed = r.gamma_signed.as_ref().unwrap();
        for (g2, g) in r.gamma_sq.iter().zip(signed) {
            match (g2, g) {
                (Some(g2), Some(g)) => {
                    prop_assert!((g * g - g2.max(0.0)).abs() <= 1e-12 * (1.0 + g2.abs()));
                    let on_branch = if nonpositive { *g <= 0.0 } else { *g >= 0.0 };
                    prop_assert!(on_branch);
                }
                (None, None) => {}
                _ => prop_assert!(false, "mask and branch disagree"),
            }
        }
        for &i in &r.diagnostics.negative_nodes {
            prop_assert!(r.gamma_sq[i].unwrap() < 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    // Without torsion the tube separates: the second cross-section
    // direction only adds its own discrete Dirichlet eigenvalue.
    #[test]
    fn untwisted_tube_separates_into_strip(a in 0.05f64..0.5, d3 in 0.6f64..1.5) {
        let (n_s, n_u, half) = (41, 7, 6.0);
        let p = CurvatureProfile::gaussian(a, 1.0).unwrap();
        let strip = GuideSpec::strip(1.0, half).unwrap();
        let tube = GuideSpec::tube(1.0, d3, half, TorsionSpec::constant(0.0)).unwrap();
        let opts = SolveOptions { eig_tol: 1e-11, ..SolveOptions::default() };
        let g2 = Grid::new(&strip, n_s, n_u).unwrap();
        let g3 = Grid::new(&tube, n_s, n_u).unwrap();
        let e2 = ground_eigenpair(&assemble(&g2, &strip, &p).unwrap(), &opts).unwrap();
        let e3 = ground_eigenpair(&assemble(&g3, &tube, &p).unwrap(), &opts).unwrap();
        let expected = e2.lambda + discrete_dirichlet_eigenvalue(d3, n_u);
        prop_assert!((e3.lambda - expected).abs() < 1e-8 * expected, "{} vs {expected}", e3.lambda);

        let r2 = reconstruct_from_eigenpair(&e2, 1e-3).unwrap();
        let r3 = reconstruct_from_eigenpair(&e3, 1e-3).unwrap();
        let peak = p.sup_abs().powi(2);
        for ((m2, m3), (g2, g3)) in r2.mask.iter().zip(&r3.mask).zip(r2.gamma_sq.iter().zip(&r3.gamma_sq)) {
            if let (true, true, Some(g2), Some(g3)) = (m2, m3, g2, g3) {
                prop_assert!((g2 - g3).abs() <= 1e-5 * peak, "{g2} vs {g3}");
            }
        }
    }
}
