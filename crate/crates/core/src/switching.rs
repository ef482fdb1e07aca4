//! Regime switching: the interval layout on `[0, H]` that represents the
//! dominating matrix through a Poisson mark space, the Markovian chain
//! sampler built on it, and the thinning acceptance that turns dominated
//! candidates into the state-dependent chain.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::model::RateSpec;
use crate::rng::Stream;
use crate::Regime;

/// Per-state consecutive intervals `[lo, hi)` on `[0, H]`; the interval for
/// target `j` has width `q_hat_ij` and targets are laid out in ascending
/// order. A mark landing in the interval triggers a jump to its target.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalLayout {
    pub states: usize,
    /// Mark-space bound; total width per state never exceeds it.
    pub bound: f64,
    rows: Vec<Vec<LayoutEntry>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutEntry {
    pub lo: f64,
    pub hi: f64,
    pub target: Regime,
}

/// Lay out the dominating matrix of `rates` as mark intervals.
pub fn build_intervals(rates: &RateSpec) -> IntervalLayout {
    let states = rates.states;
    let mut rows = Vec::with_capacity(states);
    for i in 0..states {
        let mut row = Vec::new();
        let mut cursor = 0.0;
        for j in 0..states {
            if j == i {
                continue;
            }
            let width = rates.q_hat(i, j);
            if width > 0.0 {
                row.push(LayoutEntry {
                    lo: cursor,
                    hi: cursor + width,
                    target: j,
                });
                cursor += width;
            }
        }
        rows.push(row);
    }
    IntervalLayout {
        states,
        bound: rates.bound_h,
        rows,
    }
}

impl IntervalLayout {
    pub fn row(&self, i: Regime) -> &[LayoutEntry] {
        &self.rows[i]
    }

    /// Total mark width for state `i` (equals the dominating row sum).
    pub fn total_width(&self, i: Regime) -> f64 {
        self.rows[i].last().map_or(0.0, |e| e.hi)
    }

    /// Displacement `j - i` when the mark lands in an interval of state `i`,
    /// `None` when it misses every interval.
    pub fn h_map(&self, i: Regime, u: f64) -> Result<Option<i64>> {
        if !(0.0..=self.bound.max(self.total_width(i))).contains(&u) {
            return Err(CoreError::Domain(format!(
                "mark {u} outside [0, {}]",
                self.bound
            )));
        }
        for entry in &self.rows[i] {
            if u >= entry.lo && u < entry.hi {
                return Ok(Some(entry.target as i64 - i as i64));
            }
        }
        Ok(None)
    }

    /// Target for a mark uniform on the occupied part `U_i` of the row.
    pub fn target_for_mark(&self, i: Regime, u: f64) -> Regime {
        for entry in &self.rows[i] {
            if u < entry.hi {
                return entry.target;
            }
        }
        // Guard against u == total width from floating-point rounding.
        self.rows[i].last().unwrap().target
    }
}

/// Jump skeleton of the switching component.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub initial: Regime,
    /// Strictly increasing jump times in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// Regime entered at each jump.
    pub targets: Vec<Regime>,
    pub horizon: f64,
}

impl ChainPath {
    /// `n(t)`: number of jumps with `tau_i <= t` (inclusive).
    pub fn count_jumps(&self, t: f64) -> usize {
        self.jump_times.iter().take_while(|&&tau| tau <= t).count()
    }

    pub fn regime_at(&self, t: f64) -> Regime {
        let n = self.count_jumps(t);
        if n == 0 {
            self.initial
        } else {
            self.targets[n - 1]
        }
    }
}

/// Exact continuous-time sampler of the Markovian chain under the
/// dominating matrix: holding times are exponential with the row width,
/// marks are uniform on the occupied intervals.
pub fn simulate_markov_chain(
    layout: &IntervalLayout,
    k0: Regime,
    horizon: f64,
    rng: &mut Stream,
) -> ChainPath {
    let mut t = 0.0;
    let mut state = k0;
    let mut jump_times = Vec::new();
    let mut targets = Vec::new();
    loop {
        let width = layout.total_width(state);
        if width <= 0.0 {
            break; // absorbing
        }
        t += rng.exponential(width);
        if t > horizon {
            break;
        }
        let mark = rng.uniform() * width;
        let next = layout.target_for_mark(state, mark);
        jump_times.push(t);
        targets.push(next);
        state = next;
    }
    ChainPath {
        initial: k0,
        jump_times,
        targets,
        horizon,
    }
}

/// Accept a dominated candidate `k -> l` with probability
/// `q_kl(phi) / q_hat_kl`, given the history norm at the candidate time.
pub fn thinning_decision(
    rates: &RateSpec,
    k: Regime,
    l: Regime,
    history_norm: f64,
    rng: &mut Stream,
) -> Result<bool> {
    let q_hat = rates.q_hat(k, l);
    if q_hat <= 0.0 {
        return Err(CoreError::Contract(format!(
            "thinning against a zero dominating entry ({k},{l})"
        )));
    }
    let q = rates.rate(k, l, history_norm);
    if q > q_hat * (1.0 + 1e-12) {
        return Err(CoreError::DominanceViolation {
            rate: q,
            dominating: q_hat,
        });
    }
    Ok(rng.uniform() < q / q_hat)
}
