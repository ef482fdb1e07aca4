//! Elliptic solver checks: exact constant solutions, self-convergence under
//! grid refinement, the max principle, the gradient-bound sweep with its
//! pinned threshold, the diffeomorphism proxies, and the Lipschitz repair
//! of the Hölder drift.

mod common;

use hamswitch_core::model::*;
use hamswitch_core::rng;
use hamswitch_core::zvonkin::*;

fn signed_power_model() -> ModelSpec {
    let regimes = vec![RegimeCoefficients {
        b1: B1Family::Zero,
        b2: B2Family::SignedPower {
            beta: 1.0,
            alpha: 0.5,
            clip_radius: 1000.0,
        },
        sigma: SigmaFamily::Constant { value: 1.0 },
    }];
    let coeff = CoefficientSet::new(0.25, 1.0, 1, regimes, None, None).unwrap();
    ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap()
}

fn constant_model(values: &[f64]) -> ModelSpec {
    let regimes: Vec<RegimeCoefficients> = values
        .iter()
        .map(|&c| RegimeCoefficients {
            b1: B1Family::Zero,
            b2: B2Family::Constant(vec![c]),
            sigma: SigmaFamily::Constant { value: 1.0 },
        })
        .collect();
    let n = regimes.len();
    let coeff = CoefficientSet::new(0.25, 1.0, 1, regimes, None, None).unwrap();
    let rates = if n == 1 {
        RateSpec::frozen(1)
    } else {
        RateSpec::new(
            vec![vec![0.0, 0.4], vec![0.6, 0.0]],
            vec![vec![0.0; 2]; 2],
            RateShape::One,
            None,
            None,
            None,
        )
        .unwrap()
    };
    ModelSpec::new(coeff, rates, 1.0).unwrap()
}

fn grid(ny: usize) -> GridSpec {
    GridSpec {
        x_max: 4.0,
        y_max: 4.0,
        nx: 21,
        ny,
    }
}

/// Max |b2| over the solve grid.
fn b2_sup_on_grid(model: &ModelSpec, regime: usize, g: GridSpec) -> f64 {
    let mut sup = 0.0f64;
    let mut out = [0.0];
    for i in 0..g.nx {
        for j in 0..g.ny {
            model.eval_b2(&[g.x(i), g.y(j)], regime, &mut out);
            sup = sup.max(out[0].abs());
        }
    }
    sup
}

#[test]
fn constant_drift_has_exact_solution() {
    let model = constant_model(&[0.8]);
    for lambda in [1.0, 10.0] {
        let sol = solve_elliptic(&model, 0, lambda, grid(201)).unwrap();
        let expect = 0.8 / lambda;
        for &v in &sol.values {
            assert!((v - expect).abs() < 1e-10, "value {v}, expected {expect}");
        }
        assert!(sol.residual < 1e-10);
        assert!(gradient_bound(&sol) < 1e-8);
    }
}

#[test]
fn zero_drift_gives_zero_solution() {
    let model = common::linear_model(0.25, 1.0);
    let sol = solve_elliptic(&model, 0, 5.0, grid(201)).unwrap();
    assert!(sol.sup_abs() < 1e-12);
}

#[test]
fn self_convergence_is_second_order() {
    // Successive halvings of the velocity step; the coarse-to-fine max-norm
    // differences shrink by about four.
    let model = signed_power_model();
    let sols: Vec<EllipticSolution> = [321usize, 641, 1281]
        .iter()
        .map(|&ny| solve_elliptic(&model, 0, 10.0, grid(ny)).unwrap())
        .collect();
    let diff = |a: &EllipticSolution, b: &EllipticSolution| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.grid.nx {
            for j in 0..a.grid.ny {
                worst = worst.max((a.value(i, j) - b.value(i, 2 * j)).abs());
            }
        }
        worst
    };
    let e1 = diff(&sols[0], &sols[1]);
    let e2 = diff(&sols[1], &sols[2]);
    let ratio = e1 / e2;
    assert!(
        (3.3..4.7).contains(&ratio),
        "refinement ratio {ratio} (e1 {e1}, e2 {e2})"
    );
}

#[test]
fn gradient_bound_decreases_with_lambda_and_pins_threshold() {
    let model = signed_power_model();
    let rows = scan_lambda(&model, 0, &[1.0, 10.0, 100.0], grid(321)).unwrap();
    assert!(rows[0].gradient_bound > rows[1].gradient_bound);
    assert!(rows[1].gradient_bound > rows[2].gradient_bound);
    // Pinned regression values for the default scan (x_max = y_max = 4,
    // 21 x 321 nodes): bounds near 3.44, 0.54, 0.19, so the scan settles on
    // lambda* = 100.
    assert_eq!(lambda_star(&rows), Some(100.0));
    assert!((rows[1].gradient_bound - 0.5386).abs() < 0.01);
    assert!((rows[2].gradient_bound - 0.1931).abs() < 0.01);
    assert!(rows[2].gradient_bound < 0.5);
}

#[test]
fn max_principle_on_every_solve() {
    let models = [signed_power_model(), constant_model(&[0.8])];
    for model in &models {
        for lambda in [1.0, 5.0, 50.0] {
            let g = grid(201);
            let sol = solve_elliptic(model, 0, lambda, g).unwrap();
            let bound = b2_sup_on_grid(model, 0, g) / lambda;
            assert!(
                sol.sup_abs() <= bound * (1.0 + 1e-12),
                "sup |f| = {} exceeds {bound} at lambda {lambda}",
                sol.sup_abs()
            );
        }
    }
}

#[test]
fn transform_monotone_and_contractive_when_bound_small() {
    let model = signed_power_model();
    let sol = solve_elliptic(&model, 0, 100.0, grid(321)).unwrap();
    assert!(gradient_bound(&sol) < 0.5);
    assert!(transform_strictly_increasing(&sol));
    // Two-point contraction |f(z) - f(z')| <= |z - z'| / 2 over node pairs.
    let g = sol.grid;
    let mut stream = rng::rng_stream(17, 0);
    for _ in 0..20_000 {
        let i1 = (stream.next_u64() % g.nx as u64) as usize;
        let j1 = (stream.next_u64() % g.ny as u64) as usize;
        let i2 = (stream.next_u64() % g.nx as u64) as usize;
        let j2 = (stream.next_u64() % g.ny as u64) as usize;
        let dz = ((g.x(i1) - g.x(i2)).powi(2) + (g.y(j1) - g.y(j2)).powi(2)).sqrt();
        let df = (sol.value(i1, j1) - sol.value(i2, j2)).abs();
        assert!(
            df <= 0.5 * dz + 1e-12,
            "contraction violated: |df| = {df} over |dz| = {dz}"
        );
    }
}

#[test]
fn transformed_drift_trivial_case() {
    // Zero drifts and frozen switching: everything vanishes.
    let model = common::linear_model(0.25, 1.0);
    let sol = solve_elliptic(&model, 0, 10.0, grid(101)).unwrap();
    let v = transformed_drift(&[0.3, -0.2], 0, &[sol], &model).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn transformed_drift_constant_case_hand_value() {
    // Two regimes with constant drifts c0, c1: f_i = c_i / lambda exactly,
    // all derivatives vanish, so the drift at regime 0 is
    // c0 + q_hat_01 (c1 - c0) / lambda.
    let model = constant_model(&[0.4, -0.2]);
    let lambda = 10.0;
    let sols = vec![
        solve_elliptic(&model, 0, lambda, grid(101)).unwrap(),
        solve_elliptic(&model, 1, lambda, grid(101)).unwrap(),
    ];
    let z = [0.5, 1.0];
    let got = transformed_drift(&z, 0, &sols, &model).unwrap();
    let expect = 0.4 + 0.4 * (-0.2 - 0.4) / lambda;
    assert!(
        (got - expect).abs() < 1e-9,
        "drift {got}, expected {expect}"
    );
    // Outside the grid: extrapolation error.
    assert!(transformed_drift(&[10.0, 0.0], 0, &sols, &model).is_err());
}

#[test]
fn transformed_drift_is_lipschitz_where_raw_drift_is_not() {
    let model = signed_power_model();
    let lambda = 100.0;
    let sols = vec![solve_elliptic(&model, 0, lambda, grid(641)).unwrap()];
    let mut stream = rng::rng_stream(19, 0);
    let mut raw_max = 0.0f64;
    let mut transformed_max = 0.0f64;
    let mut b2a = [0.0];
    let mut b2b = [0.0];
    for i in 0..10_000 {
        // Antisymmetric pairs collapsing onto the singular line y = 0.
        let scale = if i % 2 == 0 { 1e-8 } else { 1e-4 };
        let x = 2.0 * stream.uniform() - 1.0;
        let y = scale * (stream.uniform() + 0.05);
        let za = [x, y];
        let zb = [x, -y];
        let dz = 2.0 * y;
        model.eval_b2(&za, 0, &mut b2a);
        model.eval_b2(&zb, 0, &mut b2b);
        raw_max = raw_max.max((b2a[0] - b2b[0]).abs() / dz);
        let ta = transformed_drift(&za, 0, &sols, &model).unwrap();
        let tb = transformed_drift(&zb, 0, &sols, &model).unwrap();
        transformed_max = transformed_max.max((ta - tb).abs() / dz);
    }
    assert!(
        raw_max > 1e3,
        "raw Hölder quotient should diverge, got {raw_max}"
    );
    assert!(
        transformed_max < 50.0,
        "transformed drift quotient {transformed_max} is not Lipschitz-bounded"
    );
    assert!(raw_max > 20.0 * transformed_max);
}
