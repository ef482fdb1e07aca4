//! Path-level behavior: stepping arithmetic, the degenerate noise
//! structure, the integrated-Brownian covariance oracle, coupling, history
//! consistency, and the exit-time diagnostic.

mod common;

use hamswitch_core::model::*;
use hamswitch_core::rng::PathRng;
use hamswitch_core::sde::*;
use hamswitch_core::segment::Segment;
use hamswitch_core::stats::{covariance, summarize};

#[test]
fn step_arithmetic_examples() {
    // x' = x + (a x + b y) h with a = 0.5, b = 1, h = 0.01 at (1, 2).
    let model = {
        let regimes = vec![RegimeCoefficients {
            b1: B1Family::Zero,
            b2: B2Family::Zero,
            sigma: SigmaFamily::Constant { value: 1.0 },
        }];
        let coeff = CoefficientSet::new(0.5, 1.0, 1, regimes, None, None).unwrap();
        ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap()
    };
    let phi = Segment::constant(1.0, 1, vec![1.0, 2.0]).unwrap();
    let (x, y) = step_hamiltonian(&[1.0], &[2.0], &phi, 0, 0.01, &[0.0], &model, true).unwrap();
    assert!((x[0] - 1.025).abs() < 1e-15);
    assert_eq!(y[0], 2.0);

    // Unit diffusion moves only the velocity.
    let (x, y) = step_hamiltonian(&[1.0], &[2.0], &phi, 0, 0.01, &[0.1], &model, true).unwrap();
    assert!((x[0] - 1.025).abs() < 1e-15);
    assert!((y[0] - 2.1).abs() < 1e-15);

    // Signed-power drift at y = 4: y' = 4 + 2 * 0.01.
    let model2 = {
        let regimes = vec![RegimeCoefficients {
            b1: B1Family::Zero,
            b2: B2Family::SignedPower {
                beta: 1.0,
                alpha: 0.5,
                clip_radius: 1000.0,
            },
            sigma: SigmaFamily::Constant { value: 1.0 },
        }];
        let coeff = CoefficientSet::new(0.0, 1.0, 1, regimes, None, None).unwrap();
        ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap()
    };
    let phi4 = Segment::constant(1.0, 1, vec![0.0, 4.0]).unwrap();
    let (_, y) = step_hamiltonian(&[0.0], &[4.0], &phi4, 0, 0.01, &[0.0], &model2, true).unwrap();
    assert!((y[0] - 4.02).abs() < 1e-15);
    // Reference flag drops b2.
    let (_, y) = step_hamiltonian(&[0.0], &[4.0], &phi4, 0, 0.01, &[0.0], &model2, false).unwrap();
    assert_eq!(y[0], 4.0);
}

#[test]
fn zero_dynamics_give_constant_path() {
    let regimes = vec![RegimeCoefficients {
        b1: B1Family::Zero,
        b2: B2Family::Zero,
        sigma: SigmaFamily::Constant { value: 1e-300 },
    }];
    let coeff = CoefficientSet::new(0.0, 1.0, 1, regimes, None, None).unwrap();
    let model = ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap();
    let phi = Segment::constant(1.0, 1, vec![0.0, 0.7]).unwrap();
    let mut rng = PathRng::new(1, 0);
    let path = simulate_hybrid(
        &model,
        &phi,
        0,
        1.0,
        0.125,
        &mut rng,
        SwitchingMode::Markovian,
        true,
    )
    .unwrap();
    // x feels b y: with x0 = 0, y constant 0.7 => x grows linearly.
    for i in 0..=path.n_steps() {
        assert!((path.velocity(i)[0] - 0.7).abs() < 1e-10);
        assert!((path.position(i)[0] - 0.7 * (i as f64 * 0.125)).abs() < 1e-10);
    }
    assert!(path.jumps.is_empty());
}

#[test]
fn integrated_brownian_covariance_oracle() {
    // a = 0, b = 1, zero drifts, unit diffusion: X(1) = int_0^1 B,
    // Var X = 1/3, Var Y = 1, Cov = 1/2.
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let n = 20_000u64;
    let mut xs = Vec::with_capacity(n as usize);
    let mut ys = Vec::with_capacity(n as usize);
    for idx in 0..n {
        let mut rng = PathRng::new(42, idx);
        let path = simulate_hybrid(
            &model,
            &phi,
            0,
            1.0,
            1e-3,
            &mut rng,
            SwitchingMode::Markovian,
            true,
        )
        .unwrap();
        xs.push(path.position(path.n_steps())[0]);
        ys.push(path.velocity(path.n_steps())[0]);
    }
    let mx = summarize(&xs);
    let my = summarize(&ys);
    let cov = covariance(&xs, &ys);
    let nn = n as f64;
    // Standard errors of sample variances/covariance of Gaussians.
    let se_vx = mx.variance * (2.0 / (nn - 1.0)).sqrt();
    let se_vy = my.variance * (2.0 / (nn - 1.0)).sqrt();
    let se_c = ((mx.variance * my.variance + cov * cov) / (nn - 1.0)).sqrt();
    assert!((mx.variance - 1.0 / 3.0).abs() <= 3.0 * se_vx, "Var X = {}", mx.variance);
    assert!((my.variance - 1.0).abs() <= 3.0 * se_vy, "Var Y = {}", my.variance);
    assert!((cov - 0.5).abs() <= 3.0 * se_c, "Cov = {cov}");
}

#[test]
fn position_is_deterministic_given_velocity() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let mut rng = PathRng::new(7, 3);
    let path = simulate_hybrid(
        &model,
        &phi,
        0,
        1.0,
        1e-3,
        &mut rng,
        SwitchingMode::StateDependent,
        true,
    )
    .unwrap();
    // Re-integrate x from the recorded velocities with identical arithmetic.
    let a = model.coefficients.drift_a;
    let b = model.coefficients.drift_b;
    let mut x = path.position(0)[0];
    for i in 0..path.n_steps() {
        x += (a * x + b * path.velocity(i)[0]) * path.step;
        let gap = (x - path.position(i + 1)[0]).abs();
        assert!(gap <= 1e-12, "reconstruction gap {gap} at step {i}");
    }
}

#[test]
fn regime_constant_between_logged_jumps() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    for idx in 0..64 {
        let mut rng = PathRng::new(8, idx);
        let path = simulate_hybrid(
            &model,
            &phi,
            0,
            1.0,
            0.01,
            &mut rng,
            SwitchingMode::StateDependent,
            true,
        )
        .unwrap();
        let mut boundaries = vec![0usize];
        boundaries.extend(path.jumps.iter().map(|j| j.effective_step));
        boundaries.push(path.n_steps() + 1);
        let mut expected = vec![path.regimes[0]];
        expected.extend(path.jumps.iter().map(|j| j.to));
        for w in 0..boundaries.len() - 1 {
            for i in boundaries[w]..boundaries[w + 1].min(path.n_steps() + 1) {
                if i <= path.n_steps() {
                    assert_eq!(path.regimes[i], expected[w.min(expected.len() - 1)]);
                }
            }
        }
    }
}

#[test]
fn coupled_pair_with_equal_histories_is_bitwise_identical() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let mut rng = PathRng::new(9, 0);
    let (a, b) = simulate_coupled_pair(&model, &phi, &phi, 0, 1.0, 0.01, &mut rng).unwrap();
    assert_eq!(a.xs, b.xs);
    assert_eq!(a.ys, b.ys);
    assert_eq!(a.regimes, b.regimes);
    assert_eq!(a.increments, b.increments);
    assert_eq!(coupled_rnorm_distance(&a, &b).unwrap(), 0.0);
}

#[test]
fn coupled_pair_shares_the_chain() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let psi = phi
        .linear_combination(&common::unit_bump(), 0.5)
        .unwrap();
    for idx in 0..32 {
        let mut rng = PathRng::new(10, idx);
        let (a, b) = simulate_coupled_pair(&model, &phi, &psi, 0, 1.0, 0.01, &mut rng).unwrap();
        assert_eq!(a.regimes, b.regimes);
        assert_eq!(a.increments, b.increments);
        assert_eq!(a.jumps.len(), b.jumps.len());
    }
}

#[test]
fn recorded_norms_match_reconstructed_segments() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let mut rng = PathRng::new(11, 2);
    let path = simulate_hybrid(
        &model,
        &phi,
        0,
        1.0,
        0.0625,
        &mut rng,
        SwitchingMode::StateDependent,
        true,
    )
    .unwrap();
    for i in 0..=path.n_steps() {
        let seg = path.segment_at(i).unwrap();
        let direct = seg.r_norm();
        let recorded = path.norms[i];
        assert!(
            (direct - recorded).abs() <= 1e-9 * (1.0 + direct),
            "step {i}: recorded {recorded}, reconstructed {direct}"
        );
    }
}

#[test]
fn segment_process_matches_recorded_trajectory() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let mut rng = PathRng::new(12, 5);
    let h = 0.0625;
    let path = simulate_hybrid(
        &model,
        &phi,
        0,
        1.0,
        h,
        &mut rng,
        SwitchingMode::Markovian,
        true,
    )
    .unwrap();
    let t_steps = path.n_steps();
    let seg = path.segment_at(t_steps).unwrap();
    for j in 0..=t_steps {
        let theta = (j as f64 - t_steps as f64) * h;
        let got = seg.evaluate(theta).unwrap();
        assert_eq!(got[0], path.position(j)[0]);
        assert_eq!(got[1], path.velocity(j)[0]);
    }
    // Below the recorded window the initial history answers.
    let deep = seg.evaluate(-(t_steps as f64) * h - 0.5).unwrap();
    let expect = phi.evaluate(-0.5).unwrap();
    assert_eq!(deep, expect);
}

#[test]
fn exit_probabilities_zero_without_noise() {
    let regimes = vec![RegimeCoefficients {
        b1: B1Family::Zero,
        b2: B2Family::Zero,
        sigma: SigmaFamily::Constant { value: 1e-12 },
    }];
    let coeff = CoefficientSet::new(0.0, 1.0, 1, regimes, None, None).unwrap();
    let model = ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap();
    let phi = Segment::constant(1.0, 1, vec![0.0, 0.5]).unwrap();
    let report =
        exit_time_diagnostic(&model, &phi, 0, &[2.0, 4.0], 1.0, 2.0, 500, 1e-2, 13).unwrap();
    assert!(report.exit_probs.iter().all(|&p| p == 0.0));
    assert!(report.within_envelope);
}

#[test]
fn exit_probabilities_decay_with_radius() {
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let report = exit_time_diagnostic(
        &model,
        &phi,
        0,
        &[2.0, 4.0, 8.0],
        1.0,
        2.0,
        10_000,
        1e-3,
        14,
    )
    .unwrap();
    // Unit Brownian velocity: P(sup |B| >= 2) is about 0.09, and halves
    // many times over by R = 4.
    assert!(report.exit_probs[0] > 0.05 && report.exit_probs[0] < 0.14);
    assert!(report.monotone_within_ci);
    assert!(report.halving_observed);
    assert!(report.within_envelope);
}

#[test]
fn exit_diagnostic_rejects_bad_kappa() {
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    // kappa below 2a + |b| + 1 = 2.
    assert!(exit_time_diagnostic(&model, &phi, 0, &[2.0], 1.0, 1.5, 10, 0.1, 1).is_err());
}

#[test]
fn horizon_must_be_step_multiple() {
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let mut rng = PathRng::new(1, 0);
    let err = simulate_hybrid(
        &model,
        &phi,
        0,
        1.0,
        0.3,
        &mut rng,
        SwitchingMode::Markovian,
        true,
    );
    assert!(err.is_err());
}
