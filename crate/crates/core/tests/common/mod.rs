//! Shared fixtures for the integration tests.
#![allow(dead_code)] // each test target uses a subset

use hamswitch_core::model::*;
use hamswitch_core::segment::{HistoryMap, Segment, TailSpec};

/// Two-regime model exercising every coefficient family: one signed-power
/// regime with constant diffusion and a lag drift, one constant-drift
/// regime with modulated diffusion and an integral drift. Dominating rows
/// sum to 0.5 exactly.
pub fn reference_model() -> ModelSpec {
    let regimes = vec![
        RegimeCoefficients {
            b1: B1Family::DiscreteLag {
                scale: 0.4,
                lag: 0.5,
            },
            b2: B2Family::SignedPower {
                beta: 1.0,
                alpha: 0.5,
                clip_radius: 1000.0,
            },
            sigma: SigmaFamily::Constant { value: 1.0 },
        },
        RegimeCoefficients {
            b1: B1Family::WeightedIntegral {
                scale: 0.3,
                weight_rate: 2.0,
                map: HistoryMap::Tanh,
            },
            b2: B2Family::Constant(vec![0.4]),
            sigma: SigmaFamily::Cosine {
                base: 1.0,
                modulation: 0.3,
            },
        },
    ];
    let coeff = CoefficientSet::new(0.25, 1.0, 1, regimes, None, None).unwrap();
    let third = 1.0 / 3.0;
    let rates = RateSpec::new(
        vec![vec![0.0, third], vec![third, 0.0]],
        vec![vec![0.0, 0.5], vec![0.5, 0.0]],
        RateShape::InvQuadratic,
        Some(0.5),
        None,
        None,
    )
    .unwrap();
    ModelSpec::new(coeff, rates, 1.0).unwrap()
}

/// Initial history with a short recorded grid over a constant tail.
pub fn initial_segment() -> Segment {
    Segment::new(
        1.0,
        1,
        TailSpec::Constant(vec![0.1, 0.2]),
        vec![
            (-1.0, vec![0.1, 0.2]),
            (-0.5, vec![0.05, 0.25]),
            (0.0, vec![0.0, 0.3]),
        ],
    )
    .unwrap()
}

/// Unit-norm perturbation direction with a zero tail; adding `delta` times
/// this to any segment moves it by exactly `delta` in the r-norm.
pub fn unit_bump() -> Segment {
    Segment::new(
        1.0,
        1,
        TailSpec::Zero,
        vec![(-1.0, vec![0.0, 0.0]), (0.0, vec![0.0, 1.0])],
    )
    .unwrap()
}

/// Single-regime linear model: zero drifts, unit diffusion, no switching.
pub fn linear_model(drift_a: f64, drift_b: f64) -> ModelSpec {
    let regimes = vec![RegimeCoefficients {
        b1: B1Family::Zero,
        b2: B2Family::Zero,
        sigma: SigmaFamily::Constant { value: 1.0 },
    }];
    let coeff = CoefficientSet::new(drift_a, drift_b, 1, regimes, None, None).unwrap();
    ModelSpec::new(coeff, RateSpec::frozen(1), 1.0).unwrap()
}
