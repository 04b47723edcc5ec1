//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line with the
//! measured quantities; the process exits non-zero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 1 5`.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use waveguide::inverse::{
    discrimination_residual, reconstruct_from_eigenpair, reconstruct_from_poisson, DEFAULT_MASK_EPS,
};
use waveguide::operator::{apply, coeff_c, coeff_h, potential_v2, potential_v3, straighten_inverse};
use waveguide::profiles::TorsionShape;
use waveguide::solve::{correlation, dense_oracle, essential_spectrum_threshold, ground_eigenpair, poisson_solve};
use waveguide::{assemble, manufactured, CurvatureProfile, Field, Grid, GuideSpec, SolveOptions, TorsionSpec};

const L: f64 = 15.0;
/// Nested resolutions: each step halves both Δs and Δu.
const LEVELS: [(usize, usize); 3] = [(149, 9), (299, 19), (599, 39)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn strip() -> GuideSpec {
    GuideSpec::strip(1.0, L).unwrap()
}

fn gaussian(a: f64) -> CurvatureProfile {
    CurvatureProfile::gaussian(a, 1.0).unwrap()
}

fn ramp() -> TorsionSpec {
    TorsionSpec::new(
        TorsionShape::RampSmoothed {
            theta_start: 0.0,
            theta_end: FRAC_PI_2,
            center: 0.0,
            width: 4.0,
        },
        true,
    )
    .unwrap()
}

fn lambda_on(spec: &GuideSpec, p: &CurvatureProfile, n_s: usize, n_u: usize) -> f64 {
    let grid = Grid::new(spec, n_s, n_u).unwrap();
    let a = assemble(&grid, spec, p).unwrap();
    ground_eigenpair(&a, &SolveOptions::default()).unwrap().lambda
}

/// Observed order and extrapolated limit from three values on grids with
/// spacing ratio 2.
fn richardson(v: [f64; 3]) -> (f64, f64) {
    let p = ((v[0] - v[1]) / (v[1] - v[2])).log2();
    let limit = v[2] + (v[2] - v[1]) / (2f64.powf(p) - 1.0);
    (p, limit)
}

fn criterion_1() -> Outcome {
    let spec = strip();
    let p = gaussian(0.3);
    let grid = Grid::new(&spec, 299, 19).unwrap();
    let a = assemble(&grid, &spec, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..grid.n_s {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            values[grid.center_index(i)] = sign * rng.gen_range(0.5..1.5);
        }
        let phi = Field::new(grid, values).unwrap();
        let f = apply(&a, &phi).unwrap();
        let r = reconstruct_from_poisson(&phi, &f, DEFAULT_MASK_EPS)
            .unwrap()
            .with_truth(|s| p.eval(s, 0).unwrap());
        worst = worst.max(r.diagnostics.max_rel_error.unwrap());
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("worst masked relative error over 20 fields {worst:.2e} (limit 1e-10)"),
    }
}

fn criterion_2() -> Outcome {
    let spec = strip();
    let p = gaussian(0.3);
    let grid = Grid::new(&spec, 299, 19).unwrap();
    let a = assemble(&grid, &spec, &p).unwrap();
    let opts = SolveOptions {
        eig_tol: 1e-10,
        ..Default::default()
    };
    let e = ground_eigenpair(&a, &opts).unwrap();
    let r = reconstruct_from_eigenpair(&e, DEFAULT_MASK_EPS)
        .unwrap()
        .with_truth(|s| p.eval(s, 0).unwrap());
    let err = r.diagnostics.max_rel_error.unwrap();
    Outcome {
        pass: err <= 1e-6 && e.residual_norm <= opts.eig_tol,
        detail: format!(
            "lambda {:.10}, residual {:.2e}, masked relative error {err:.2e} (limit 1e-6)",
            e.lambda, e.residual_norm
        ),
    }
}

fn criterion_3() -> Outcome {
    let spec = GuideSpec::tube(1.0, 1.0, L, ramp()).unwrap();
    let k = gaussian(0.3);
    let grid = Grid::new(&spec, 199, 11).unwrap();
    let a = assemble(&grid, &spec, &k).unwrap();
    let opts = SolveOptions {
        eig_tol: 1e-9,
        ..Default::default()
    };
    let e = ground_eigenpair(&a, &opts).unwrap();
    let r = reconstruct_from_eigenpair(&e, DEFAULT_MASK_EPS)
        .unwrap()
        .with_truth(|s| k.eval(s, 0).unwrap());
    let err = r.diagnostics.max_rel_error.unwrap();
    Outcome {
        pass: err <= 1e-5 && e.residual_norm <= opts.eig_tol,
        detail: format!(
            "lambda {:.8} (threshold {:.8}), residual {:.2e}, masked relative error of k^2 {err:.2e} (limit 1e-5)",
            e.lambda,
            essential_spectrum_threshold(&spec),
            e.residual_norm
        ),
    }
}

fn criterion_4(levels: &[f64; 3]) -> Outcome {
    let spec = strip();
    let threshold = essential_spectrum_threshold(&spec);
    let (_, converged) = richardson(*levels);
    let binding = threshold - converged;
    let bound = binding > 1e-3;

    let (n_s, n_u) = LEVELS[1];
    let small: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&a| lambda_on(&spec, &gaussian(a), n_s, n_u))
        .collect();
    let straight = lambda_on(&spec, &CurvatureProfile::zero(), n_s, n_u);
    let monotone = small[0] > small[1] && small[1] > small[2] && straight > small[0];
    Outcome {
        pass: bound && monotone,
        detail: format!(
            "extrapolated lambda {converged:.8}, threshold - lambda = {binding:.3e} (need > 1e-3: {}); \
             a = 0.05, 0.1, 0.2 on {n_s}x{n_u}: {:.8} > {:.8} > {:.8}, straight {straight:.8} (monotone: {monotone})",
            if bound { "yes" } else { "no" },
            small[0],
            small[1],
            small[2]
        ),
    }
}

fn criterion_5() -> Outcome {
    let spec = strip();
    let grid = Grid::new(&spec, 149, 9).unwrap();
    let a = assemble(&grid, &spec, &gaussian(0.3)).unwrap();
    let e = ground_eigenpair(&a, &SolveOptions::default()).unwrap();
    let d = dense_oracle(&a).unwrap();
    let dl = (e.lambda - d[0].lambda).abs();
    let corr = correlation(&e.phi, &d[0].phi);
    Outcome {
        pass: dl <= 1e-8 && corr >= 1.0 - 1e-8,
        detail: format!("|lambda - oracle| = {dl:.2e} (limit 1e-8), |1 - correlation| = {:.2e} (limit 1e-8)", (1.0 - corr).abs()),
    }
}

/// Reconstruction from the sampled manufactured field and its analytic
/// source; the only error left is the discrete centerline Laplacian.
fn continuum_error(spec: &GuideSpec, p: &CurvatureProfile, n_s: usize, n_u: usize) -> f64 {
    let grid = Grid::new(spec, n_s, n_u).unwrap();
    let phi = manufactured::sample_phi(grid, spec);
    let f = manufactured::sample_source(grid, spec, p).unwrap();
    reconstruct_from_poisson(&phi, &f, DEFAULT_MASK_EPS)
        .unwrap()
        .with_truth(|s| p.eval(s, 0).unwrap())
        .diagnostics
        .max_rel_error
        .unwrap()
}

fn criterion_6(levels: &[f64; 3]) -> Outcome {
    let spec = strip();
    let p = gaussian(0.3);
    let (p_lambda, _) = richardson(*levels);
    let errors: Vec<f64> = LEVELS.iter().map(|&(n_s, n_u)| continuum_error(&spec, &p, n_s, n_u)).collect();
    let p_err = [(errors[0] / errors[1]).log2(), (errors[1] / errors[2]).log2()];
    let ok = |p: f64| (1.7..=2.3).contains(&p);
    Outcome {
        pass: ok(p_lambda) && p_err.iter().all(|&p| ok(p)),
        detail: format!(
            "lambda {:.8} / {:.8} / {:.8}: order {p_lambda:.3}; reconstruction error {:.3e} / {:.3e} / {:.3e}: orders {:.3}, {:.3}",
            levels[0], levels[1], levels[2], errors[0], errors[1], errors[2], p_err[0], p_err[1]
        ),
    }
}

fn criterion_7() -> Outcome {
    let spec = strip();
    let p = gaussian(0.3);
    let (coarse, fine) = (LEVELS[0], LEVELS[2]);
    let e_coarse = continuum_error(&spec, &p, coarse.0, coarse.1);
    let e_fine = continuum_error(&spec, &p, fine.0, fine.1);
    let ratio = e_coarse / e_fine;

    // the full solve path: the discrete identity makes this exact up to the solver
    let solved: Vec<f64> = [coarse, fine]
        .iter()
        .map(|&(n_s, n_u)| {
            let grid = Grid::new(&spec, n_s, n_u).unwrap();
            let a = assemble(&grid, &spec, &p).unwrap();
            let f = manufactured::sample_source(grid, &spec, &p).unwrap();
            let phi = poisson_solve(&a, &f, &SolveOptions::default()).unwrap();
            reconstruct_from_poisson(&phi, &f, DEFAULT_MASK_EPS)
                .unwrap()
                .with_truth(|s| p.eval(s, 0).unwrap())
                .diagnostics
                .max_rel_error
                .unwrap()
        })
        .collect();
    let solved_ok = solved.iter().all(|&e| e <= 1e-8);
    Outcome {
        pass: ratio >= 3.0 && solved_ok,
        detail: format!(
            "sampled-field error {e_coarse:.3e} -> {e_fine:.3e} (reduction {ratio:.2}x, need >= 3); \
             after poisson_solve {:.2e} / {:.2e} (solver level, need <= 1e-8)",
            solved[0], solved[1]
        ),
    }
}

fn discrimination(spec: &GuideSpec, n_s: usize, n_u: usize) -> (f64, f64) {
    let p1 = gaussian(0.3);
    let p2 = gaussian(0.4);
    let grid = Grid::new(spec, n_s, n_u).unwrap();
    let a = assemble(&grid, spec, &p1).unwrap();
    let f = manufactured::sample_source(grid, spec, &p1).unwrap();
    let phi = poisson_solve(&a, &f, &SolveOptions::default()).unwrap();
    let r = discrimination_residual(spec, &p1, &p2, &phi, &f, 1e3).unwrap();
    (r.residual_matched, r.ratio)
}

fn criterion_8() -> Outcome {
    let (m2, r2) = discrimination(&strip(), 299, 19);
    let tube = GuideSpec::tube(1.0, 1.0, L, ramp()).unwrap();
    let (m3, r3) = discrimination(&tube, 199, 11);
    Outcome {
        pass: m2 <= 1e-10 && r2 >= 100.0 && m3 <= 1e-10 && r3 >= 100.0,
        detail: format!(
            "2D matched {m2:.2e}, ratio {r2:.3e}; 3D matched {m3:.2e}, ratio {r3:.3e} (limits 1e-10, 100)"
        ),
    }
}

fn criterion_9() -> Outcome {
    let p = gaussian(0.3);
    let spec2 = strip();
    let spec3 = GuideSpec::tube(1.0, 1.0, L, ramp()).unwrap();
    let g2 = Grid::new(&spec2, 299, 19).unwrap();
    let g3 = Grid::new(&spec3, 99, 9).unwrap();
    let a2 = assemble(&g2, &spec2, &p).unwrap();
    let a3 = assemble(&g3, &spec3, &p).unwrap();
    let symmetric = a2.is_symmetric_exact() && a3.is_symmetric_exact();

    let opts = SolveOptions::default();
    let mut positivity: f64 = f64::INFINITY;
    for a in [&a2, &a3] {
        let e = ground_eigenpair(a, &opts).unwrap();
        let min = e.phi.values.iter().cloned().fold(f64::INFINITY, f64::min);
        positivity = positivity.min(min / (10.0 * opts.eig_tol * e.phi.max_abs()));
    }
    let positive = positivity >= -1.0;

    let t = ramp();
    let flat = TorsionSpec::constant(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut centerline: f64 = 0.0;
    let mut special: f64 = 0.0;
    for _ in 0..1000 {
        let s = rng.gen_range(-6.0..6.0);
        let k = p.eval(s, 0).unwrap();
        centerline = centerline.max((potential_v3(&p, &t, s, 0.0, 0.0).unwrap() + k * k / 4.0).abs());
        let u = rng.gen_range(-0.5..0.5);
        let v2 = potential_v2(&p, s, u).unwrap();
        let v3 = potential_v3(&p, &flat, s, u, 0.0).unwrap();
        let c = (coeff_c(&p, s, u).unwrap() - coeff_h(&p, &flat, s, u, 0.0).unwrap()).abs();
        special = special.max((v2 - v3).abs()).max(c);
    }
    let potentials = centerline <= 1e-12 && special <= 1e-12;

    let mut norm_err: f64 = 0.0;
    for (spec, grid) in [(&spec2, g2), (&spec3, g3)] {
        let phi = Field::from_fn(grid, |s, u| (-s * s / 4.0).exp() * (1.0 + u[0] - u[1]));
        let back = straighten_inverse(spec, &p, &phi).unwrap();
        let weighted: f64 = back
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (s, u) = grid.coords(k);
                let m = waveguide::geometry::metric_factor(spec, &p, s, &u[..spec.dim() - 1]).unwrap();
                v * v * m.jacobian
            })
            .sum();
        let plain: f64 = phi.values.iter().map(|v| v * v).sum();
        norm_err = norm_err.max((weighted - plain).abs() / plain);
    }
    let norm_ok = norm_err <= 1e-10;

    Outcome {
        pass: symmetric && positive && potentials && norm_ok,
        detail: format!(
            "exact symmetry {symmetric}; min(phi)/(10 eig_tol max phi) = {positivity:.2e} (need >= -1); \
             |V_k(s,0,0) + k^2/4| <= {centerline:.1e}, 2D/3D specialization {special:.1e} (limit 1e-12); \
             weighted norm error {norm_err:.1e} (limit 1e-10)"
        ),
    }
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |n: usize| selected.is_empty() || selected.contains(&n);

    let mut levels = None;
    let mut lambda_levels = || {
        *levels.get_or_insert_with(|| {
            let spec = strip();
            let p = gaussian(0.3);
            let v: Vec<f64> = LEVELS.iter().map(|&(n_s, n_u)| lambda_on(&spec, &p, n_s, n_u)).collect();
            [v[0], v[1], v[2]]
        })
    };

    let names = [
        "discrete Poisson-reconstruction exactness",
        "eigenpair roundtrip",
        "3D roundtrip with torsion",
        "bound state below the threshold",
        "oracle equivalence",
        "convergence order",
        "manufactured-solution continuum test",
        "discrimination",
        "structural invariants",
    ];
    let mut failed = Vec::new();
    for n in 1..=9 {
        if !want(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(&lambda_levels()),
            5 => criterion_5(),
            6 => criterion_6(&lambda_levels()),
            7 => criterion_7(),
            8 => criterion_8(),
            _ => criterion_9(),
        };
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {n} [{}] {verdict} ({:.1} s): {}",
            names[n - 1],
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
