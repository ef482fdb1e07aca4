//! Stochastic change-of-measure weights along recorded paths.
//!
//! `girsanov_weight` removes the Hölder drift from the reference system:
//! `exp( sum <sigma^{-1} b2, dB> - 1/2 sum |sigma^{-1} b2|^2 h )` evaluated
//! at left endpoints with the recorded increments. `switch_weight` converts
//! Markovian-switching path laws into state-dependent ones: a product of
//! acceptance ratios at the jump boundaries times the exponential of the
//! negated rate-gap integral. Both accumulate in log space.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::model::{ModelSpec, RateSpec};
use crate::rng::PathRng;
use crate::sde::{simulate_hybrid, HybridPath, SwitchingMode};
use crate::segment::Segment;
use crate::stats::{summarize, Moments};
use crate::Regime;

fn steps_until(path: &HybridPath, t: f64) -> Result<usize> {
    if t < 0.0 || t > path.horizon * (1.0 + 1e-12) {
        return Err(CoreError::Contract(format!(
            "time {t} outside the recorded horizon {}",
            path.horizon
        )));
    }
    let m = libm::round(t / path.step) as usize;
    if math::abs(m as f64 * path.step - t) > 1e-9 * t.max(1.0) {
        return Err(CoreError::Contract(format!(
            "time {t} is not on the recorded grid (step {})",
            path.step
        )));
    }
    Ok(m.min(path.n_steps()))
}

/// Log of the drift-removal weight along a reference path (generated with
/// `b2` excluded) up to time `t`.
pub fn girsanov_log_weight(path: &HybridPath, model: &ModelSpec, t: f64) -> Result<f64> {
    let m = steps_until(path, t)?;
    let d = path.dimension;
    let mut log_w = 0.0;
    let mut z = alloc::vec![0.0; 2 * d];
    let mut b2 = alloc::vec![0.0; d];
    let mut sigma = alloc::vec![0.0; d];
    for i in 0..m {
        let k = path.regimes[i];
        z[..d].copy_from_slice(path.position(i));
        z[d..].copy_from_slice(path.velocity(i));
        model.eval_b2(&z, k, &mut b2);
        model.eval_sigma(&z, k, &mut sigma);
        let dw = path.increment(i);
        for j in 0..d {
            if sigma[j] <= 0.0 {
                return Err(CoreError::Numeric(String::from(
                    "singular diffusion entry in Girsanov weight",
                )));
            }
            let g = b2[j] / sigma[j];
            log_w += g * dw[j] - 0.5 * g * g * path.step;
        }
    }
    Ok(log_w)
}

/// Drift-removal weight `R(t) = exp(log weight)`.
pub fn girsanov_weight(path: &HybridPath, model: &ModelSpec, t: f64) -> Result<f64> {
    Ok(math::exp(girsanov_log_weight(path, model, t)?))
}

/// Monte Carlo estimate of the exponential moment
/// `E exp( lambda int_0^T |sigma^{-1} b2|^2 dt )` along reference paths.
#[derive(Debug, Clone, PartialEq)]
pub struct NovikovReport {
    pub lambda: f64,
    pub horizon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub paths: u64,
    /// Top 1% of samples carries more than half the mass: the estimate is
    /// tail-dominated and unreliable.
    pub tail_heavy: bool,
    /// Some exponent overflowed; reported as infinity, not a crash.
    pub infinity_suspected: bool,
}

pub fn novikov_estimate(
    model: &ModelSpec,
    k: Regime,
    phi0: &Segment,
    lambda: f64,
    horizon: f64,
    n_paths: u64,
    h: f64,
    seed: u64,
) -> Result<NovikovReport> {
    if !(lambda > 0.0) || !(horizon > 0.0) {
        return Err(CoreError::Contract(String::from(
            "lambda and horizon must be positive",
        )));
    }
    let pinned = model.pinned_regime(k)?;
    let d = model.dimension();
    let mut samples = Vec::with_capacity(n_paths as usize);
    let mut infinity_suspected = false;
    let mut z = alloc::vec![0.0; 2 * d];
    let mut b2 = alloc::vec![0.0; d];
    let mut sigma = alloc::vec![0.0; d];
    for path_index in 0..n_paths {
        let mut rng = PathRng::new(seed, path_index);
        let path = simulate_hybrid(
            &pinned,
            phi0,
            0,
            horizon,
            h,
            &mut rng,
            SwitchingMode::Markovian,
            false,
        )?;
        let mut exponent = 0.0;
        for i in 0..path.n_steps() {
            z[..d].copy_from_slice(path.position(i));
            z[d..].copy_from_slice(path.velocity(i));
            pinned.eval_b2(&z, 0, &mut b2);
            pinned.eval_sigma(&z, 0, &mut sigma);
            for j in 0..d {
                let g = b2[j] / sigma[j];
                exponent += g * g * h;
            }
        }
        let value = math::exp(lambda * exponent);
        if !value.is_finite() {
            infinity_suspected = true;
        }
        samples.push(value);
    }
    let (estimate, stderr) = if infinity_suspected {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let m = summarize(&samples);
        (m.mean, m.stderr)
    };
    // Tail-heaviness: share of the total mass in the top 1% of samples.
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let top = libm::ceil(sorted.len() as f64 * 0.01) as usize;
    let top = top.max(1);
    let total: f64 = crate::stats::pairwise_sum(&sorted);
    let top_mass: f64 = crate::stats::pairwise_sum(&sorted[sorted.len() - top..]);
    let tail_heavy = infinity_suspected || (total > 0.0 && top_mass / total > 0.5);
    Ok(NovikovReport {
        lambda,
        horizon,
        estimate,
        stderr,
        paths: n_paths,
        tail_heavy,
        infinity_suspected,
    })
}

/// The switching change-of-measure weight `M_t` along a Markovian-sampler
/// path: product over jumps before `t` of `q/q_hat` at the jump-boundary
/// segment, times `exp(-sum_steps h (q_k - q_hat_k))` on the step grid
/// (left endpoints).
pub fn switch_weight(path: &HybridPath, rates: &RateSpec, t: f64) -> Result<f64> {
    let m = steps_until(path, t)?;
    let mut log_w = 0.0;
    let mut zero_factor = false;
    for i in 0..m {
        let k = path.regimes[i];
        let gap = rates.rate_total(k, path.norms[i]) - rates.q_hat_total(k);
        log_w -= gap * path.step;
    }
    for jump in &path.jumps {
        if jump.time > t {
            break;
        }
        let q_hat = rates.q_hat(jump.from, jump.to);
        if q_hat <= 0.0 {
            return Err(CoreError::Contract(format!(
                "observed jump {} -> {} has zero dominating rate; sampler and \
                 rates disagree",
                jump.from, jump.to
            )));
        }
        let q = rates.rate(jump.from, jump.to, path.norms[jump.effective_step]);
        if q > q_hat * (1.0 + 1e-12) {
            return Err(CoreError::DominanceViolation {
                rate: q,
                dominating: q_hat,
            });
        }
        if q <= 0.0 {
            zero_factor = true;
        } else {
            log_w += math::ln(q / q_hat);
        }
    }
    if zero_factor {
        Ok(0.0)
    } else {
        Ok(math::exp(log_w))
    }
}

/// Reweighted estimator `(1/N) sum f_i M_i` with its standard error.
/// With `f` identically one this is exactly the sample mean of the weights.
pub fn reweighted_expectation(samples: &[(f64, f64)]) -> Result<Moments> {
    if samples.is_empty() {
        return Err(CoreError::Contract(String::from(
            "reweighted expectation of an empty sample",
        )));
    }
    let products: Vec<f64> = samples.iter().map(|&(f, m)| f * m).collect();
    Ok(summarize(&products))
}
