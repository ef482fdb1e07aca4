//! Change-of-measure weights: exact hand-evaluated cases, the lognormal
//! oracle for the drift-removal weight, the exponential-moment diagnostic,
//! and the martingale identities of the switching weight.

mod common;

use hamswitch_core::model::*;
use hamswitch_core::rng::PathRng;
use hamswitch_core::sde::*;
use hamswitch_core::segment::Segment;
use hamswitch_core::stats::{summarize, z_score};
use hamswitch_core::weights::*;

fn constant_b2_model(c: f64) -> ModelSpec {
    let regimes = vec![RegimeCoefficients {
        b1: B1Family::Zero,
        b2: B2Family::Constant(vec![c]),
        sigma: SigmaFamily::Constant { value: 1.0 },
    }];
    let coeff = CoefficientSet::new(0.0, 1.0, 1, regimes, None, None).unwrap();
    ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap()
}

#[test]
fn girsanov_weight_is_one_without_drift() {
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let mut rng = PathRng::new(3, 0);
    let path = simulate_hybrid(
        &model,
        &phi,
        0,
        0.5,
        1e-2,
        &mut rng,
        SwitchingMode::Markovian,
        false,
    )
    .unwrap();
    assert_eq!(girsanov_weight(&path, &model, 0.5).unwrap(), 1.0);
}

#[test]
fn girsanov_single_step_hand_value() {
    // One step, sigma = 1, b2 = 2, dB = 0.1, h = 0.01:
    // log R = 0.2 - 0.02 = 0.18.
    let model = constant_b2_model(2.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let path = HybridPath {
        step: 0.01,
        horizon: 0.01,
        dimension: 1,
        initial: phi,
        xs: vec![0.0, 0.0],
        ys: vec![0.0, 0.1],
        regimes: vec![0, 0],
        increments: vec![0.1],
        norms: vec![0.0, 0.1],
        jumps: vec![],
    };
    let r = girsanov_weight(&path, &model, 0.01).unwrap();
    assert!((r - 0.18f64.exp()).abs() < 1e-15);
    assert!((r - 1.1972173631218102).abs() < 1e-12);
}

#[test]
fn girsanov_constant_drift_lognormal_mean_one() {
    // b2 = c, sigma = 1: R(T) = exp(c B(T) - c^2 T / 2), mean one.
    let model = constant_b2_model(0.5);
    let phi = Segment::zero(1.0, 1).unwrap();
    let n = 20_000u64;
    let mut weights = Vec::with_capacity(n as usize);
    for idx in 0..n {
        let mut rng = PathRng::new(31, idx);
        let path = simulate_hybrid(
            &model,
            &phi,
            0,
            1.0,
            1e-3,
            &mut rng,
            SwitchingMode::Markovian,
            false,
        )
        .unwrap();
        weights.push(girsanov_weight(&path, &model, 1.0).unwrap());
    }
    let m = summarize(&weights);
    assert!(
        (m.mean - 1.0).abs() <= 3.0 * m.stderr,
        "E R = {} +- {}",
        m.mean,
        m.stderr
    );
    // Lognormal second moment e^{c^2 T} = e^{0.25}.
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    let m2 = summarize(&sq);
    assert!((m2.mean - 0.25f64.exp()).abs() <= 4.0 * m2.stderr);
}

#[test]
fn novikov_trivial_and_deterministic_cases() {
    // b2 = 0: the integrand vanishes, the estimate is exactly one.
    let model = common::linear_model(0.0, 1.0);
    let phi = Segment::zero(1.0, 1).unwrap();
    let rep = novikov_estimate(&model, 0, &phi, 1.0, 0.5, 200, 1e-2, 5).unwrap();
    assert_eq!(rep.estimate, 1.0);
    assert_eq!(rep.stderr, 0.0);
    assert!(!rep.infinity_suspected);

    // b2 = c, sigma = 1: the integrand is deterministic, so the estimate is
    // exactly e^{lambda c^2 T}.
    let model = constant_b2_model(0.7);
    let lambda = 1.3;
    let rep = novikov_estimate(&model, 0, &phi, lambda, 0.5, 200, 1e-3, 5).unwrap();
    let expect = (lambda * 0.49 * 0.5f64).exp();
    assert!(
        (rep.estimate - expect).abs() <= 1e-12 * expect,
        "estimate {} expected {expect}",
        rep.estimate
    );
    assert!(!rep.tail_heavy);
}

#[test]
fn novikov_monotone_in_lambda_for_holder_drift() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let mut last = 0.0;
    for &lambda in &[0.5, 1.0, 2.0] {
        let rep = novikov_estimate(&model, 0, &phi, lambda, 0.5, 2_000, 1e-3, 6).unwrap();
        assert!(rep.estimate.is_finite());
        assert!(
            rep.estimate > last,
            "estimate not increasing at lambda {lambda}"
        );
        last = rep.estimate;
    }
}

#[test]
fn switch_weight_is_one_when_rates_equal_dominating() {
    // beta = 0 makes q identically q_hat: every factor is one and the
    // integrand vanishes exactly.
    let mut model = common::reference_model();
    model.rates = RateSpec::new(
        vec![vec![0.0, 0.25], vec![0.25, 0.0]],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        RateShape::InvQuadratic,
        None,
        None,
        None,
    )
    .unwrap();
    let phi = common::initial_segment();
    for idx in 0..64 {
        let mut rng = PathRng::new(61, idx);
        let path = simulate_hybrid(
            &model,
            &phi,
            0,
            1.0,
            1e-2,
            &mut rng,
            SwitchingMode::Markovian,
            true,
        )
        .unwrap();
        assert_eq!(switch_weight(&path, &model.rates, 1.0).unwrap(), 1.0);
    }
}

#[test]
fn switch_weight_single_jump_hand_value() {
    // One jump 0 -> 1 at tau = 0.7 with q_01 = 1 against q_hat_01 = 2,
    // q_0 = 1 vs q_hat_0 = 2, and matched rates in state 1:
    // M_1 = (1/2) exp(0.7).
    let rates = RateSpec::new(
        vec![vec![0.0, 1.0], vec![0.8, 0.0]],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        RateShape::One,
        None,
        None,
        Some(vec![vec![0.0, 2.0], vec![0.8, 0.0]]),
    )
    .unwrap();
    let h = 0.01;
    let n = 100usize;
    let phi = Segment::zero(1.0, 1).unwrap();
    // The jump takes effect at boundary 70, so step 70 already runs in the
    // new regime.
    let mut regimes = vec![0usize; 70];
    regimes.extend(vec![1usize; n + 1 - 70]);
    let path = HybridPath {
        step: h,
        horizon: 1.0,
        dimension: 1,
        initial: phi,
        xs: vec![0.0; n + 1],
        ys: vec![0.0; n + 1],
        regimes,
        increments: vec![0.0; n],
        norms: vec![0.0; n + 1],
        jumps: vec![JumpRecord {
            time: 0.7,
            from: 0,
            to: 1,
            effective_step: 70,
        }],
    };
    let m = switch_weight(&path, &rates, 1.0).unwrap();
    let expect = 0.5 * 0.7f64.exp();
    assert!(
        (m - expect).abs() < 1e-12 * expect,
        "M = {m}, expected {expect} (~1.00688)"
    );
    assert!((expect - 1.0068763537352383).abs() < 1e-10);
}

#[test]
fn switch_weight_mean_one_and_second_moment_bound() {
    let model = common::reference_model();
    let phi = common::initial_segment();
    let n = 20_000u64;
    let mut ms = Vec::with_capacity(n as usize);
    for idx in 0..n {
        let mut rng = PathRng::new(62, idx);
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
        ms.push(switch_weight(&path, &model.rates, 1.0).unwrap());
    }
    let m = summarize(&ms);
    assert!(
        (m.mean - 1.0).abs() <= 3.0 * m.stderr,
        "E M = {} +- {}",
        m.mean,
        m.stderr
    );
    assert!(ms.iter().all(|&x| x > 0.0));
    let sq: Vec<f64> = ms.iter().map(|x| x * x).collect();
    let m2 = summarize(&sq);
    let bound = 2.0 * (8.0f64 * model.rates.bound_h * 1.0).exp();
    assert!(
        m2.mean <= bound + 3.0 * m2.stderr,
        "E M^2 = {} exceeds {bound}",
        m2.mean
    );
}

#[test]
fn switch_weight_martingale_increments() {
    // E[(M_t - M_s) g_s] = 0 for F_s-measurable probes.
    let model = common::reference_model();
    let phi = common::initial_segment();
    let n = 20_000u64;
    let (s, t) = (0.5, 1.0);
    let mut plain = Vec::new();
    let mut regime_probe = Vec::new();
    let mut velocity_probe = Vec::new();
    for idx in 0..n {
        let mut rng = PathRng::new(63, idx);
        let path = simulate_hybrid(
            &model,
            &phi,
            0,
            t,
            1e-3,
            &mut rng,
            SwitchingMode::Markovian,
            true,
        )
        .unwrap();
        let ms = switch_weight(&path, &model.rates, s).unwrap();
        let mt = switch_weight(&path, &model.rates, t).unwrap();
        let diff = mt - ms;
        let half = path.n_steps() / 2;
        let indicator = if path.regimes[half] == 0 { 1.0 } else { 0.0 };
        let clipped = path.velocity(half)[0].abs().min(2.0);
        plain.push(diff);
        regime_probe.push(diff * indicator);
        velocity_probe.push(diff * clipped);
    }
    for (name, sample) in [
        ("unit probe", &plain),
        ("regime indicator", &regime_probe),
        ("clipped velocity", &velocity_probe),
    ] {
        let m = summarize(sample);
        let z = z_score(m.mean, m.stderr, 0.0, 0.0);
        assert!(z.abs() <= 3.0, "{name}: z = {z}");
    }
}

#[test]
fn reweighted_expectation_of_one_is_plain_mean() {
    let weights = [0.5, 1.25, 0.75, 1.5, 1.0];
    let pairs: Vec<(f64, f64)> = weights.iter().map(|&m| (1.0, m)).collect();
    let rew = reweighted_expectation(&pairs).unwrap();
    let plain = summarize(&weights);
    assert_eq!(rew.mean.to_bits(), plain.mean.to_bits());
    assert_eq!(rew.stderr.to_bits(), plain.stderr.to_bits());
    assert!(reweighted_expectation(&[]).is_err());
}

#[test]
fn switch_weight_rejects_undominated_jump() {
    let rates = RateSpec::frozen(2);
    let phi = Segment::zero(1.0, 1).unwrap();
    let path = HybridPath {
        step: 0.5,
        horizon: 1.0,
        dimension: 1,
        initial: phi,
        xs: vec![0.0; 3],
        ys: vec![0.0; 3],
        regimes: vec![0, 1, 1],
        increments: vec![0.0; 2],
        norms: vec![0.0; 3],
        jumps: vec![JumpRecord {
            time: 0.4,
            from: 0,
            to: 1,
            effective_step: 1,
        }],
    };
    assert!(switch_weight(&path, &rates, 1.0).is_err());
}
