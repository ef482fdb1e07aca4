//! Time stepping for the hybrid system: Euler-Maruyama on the degenerate
//! pair `(X, Y)` with the segment frozen over each step, switching resolved
//! at step boundaries, and Brownian increments recorded so downstream
//! change-of-measure weights are exactly consistent with the path.
//!
//! History bookkeeping is incremental: the discounted norm obeys a decaying
//! max recurrence, weighted history integrals obey a one-step exponential
//! recurrence, and lagged values interpolate the recorded grid, so a step
//! costs O(d) regardless of path length.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::model::{B1Family, ModelSpec};
use crate::rng::PathRng;
use crate::segment::{HistoryMap, Segment};
use crate::switching::{build_intervals, simulate_markov_chain, thinning_decision, IntervalLayout};
use crate::Regime;

const MAX_STEPS: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchingMode {
    /// Chain driven by the dominating matrix, independent of the state.
    Markovian,
    /// Dominated candidates thinned by the state-dependent rates.
    StateDependent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    /// Exact candidate/jump time.
    pub time: f64,
    pub from: Regime,
    pub to: Regime,
    /// Step boundary where the jump takes effect on coefficients.
    pub effective_step: usize,
}

/// A discretized trajectory of `(Z(t), Theta(t))` with everything the
/// stochastic weights need.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPath {
    pub step: f64,
    pub horizon: f64,
    pub dimension: usize,
    pub initial: Segment,
    /// Positions, `(n_steps + 1) x d` row-major.
    pub xs: Vec<f64>,
    /// Velocities, same layout.
    pub ys: Vec<f64>,
    /// Effective regime on `[t_i, t_{i+1})`; the last entry is the final
    /// regime.
    pub regimes: Vec<Regime>,
    /// Brownian increments, `n_steps x d`.
    pub increments: Vec<f64>,
    /// Discounted history norm at each step boundary.
    pub norms: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
}

impl HybridPath {
    pub fn n_steps(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.dimension..(i + 1) * self.dimension]
    }

    /// `n(t)`: jumps with exact time `tau <= t`.
    pub fn count_jumps(&self, t: f64) -> usize {
        self.jumps.iter().take_while(|j| j.time <= t).count()
    }

    pub fn final_regime(&self) -> Regime {
        *self.regimes.last().unwrap()
    }

    /// State `(x, y)` at a step boundary as a single `2d` vector.
    pub fn state(&self, i: usize) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.dimension);
        z.extend_from_slice(self.position(i));
        z.extend_from_slice(self.velocity(i));
        z
    }

    /// Rebuild the segment process at step `i` by shifting and appending the
    /// recorded nodes; grid spacing equals the integrator step.
    pub fn segment_at(&self, i: usize) -> Result<Segment> {
        let mut seg = self.initial.clone();
        for j in 1..=i {
            seg = seg.shift_append(self.step, &self.state(j))?;
        }
        Ok(seg)
    }
}

/// One Euler-Maruyama update of the pair: positions are noise-free,
/// velocities get drift plus diagonal noise. Dropping `b2` gives the
/// drift-reduced reference step.
pub fn step_hamiltonian(
    x: &[f64],
    y: &[f64],
    phi: &Segment,
    k: Regime,
    h: f64,
    dw: &[f64],
    model: &ModelSpec,
    include_b2: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(h > 0.0) {
        return Err(CoreError::Contract(format!("step must be positive, got {h}")));
    }
    let d = model.dimension();
    let b1 = model.eval_b1(phi, k)?;
    let mut z = Vec::with_capacity(2 * d);
    z.extend_from_slice(x);
    z.extend_from_slice(y);
    let mut b2 = alloc::vec![0.0; d];
    if include_b2 {
        model.eval_b2(&z, k, &mut b2);
    }
    let mut sigma = alloc::vec![0.0; d];
    model.eval_sigma(&z, k, &mut sigma);
    let mut x_next = alloc::vec![0.0; d];
    let mut y_next = alloc::vec![0.0; d];
    for i in 0..d {
        x_next[i] = x[i] + (model.coefficients.drift_a * x[i] + model.coefficients.drift_b * y[i]) * h;
        y_next[i] = y[i] + (b1[i] + b2[i]) * h + sigma[i] * dw[i];
    }
    Ok((x_next, y_next))
}

/// Incremental history state shared by the online simulator and the
/// post-hoc walkers; identical update order keeps replays bit-exact.
struct HistoryState {
    dimension: usize,
    /// e^{-r h} and e^{-r h / 2}.
    decay: f64,
    decay_half: f64,
    /// Initial-segment norm contribution, decaying each step.
    init_part: f64,
    /// Running max over recorded nodes and midpoints, discounted.
    running: f64,
    /// Per-regime integral accumulators (velocity block), with their decay
    /// factors, for weighted-integral drift families.
    integrals: Vec<Option<IntegralAcc>>,
}

struct IntegralAcc {
    map: HistoryMap,
    decay: f64,
    value: Vec<f64>,
    mapped_prev: Vec<f64>,
}

impl HistoryState {
    fn new(model: &ModelSpec, phi0: &Segment, h: f64) -> Result<Self> {
        let d = model.dimension();
        let r = model.decay_rate;
        let mut integrals = Vec::with_capacity(model.states());
        let y0 = &phi0.head()[d..];
        for rc in &model.coefficients.regimes {
            match rc.b1 {
                B1Family::WeightedIntegral {
                    weight_rate, map, ..
                } => {
                    let full = phi0.weighted_history_integral(weight_rate, map)?;
                    let mut mapped_prev = alloc::vec![0.0; d];
                    map.apply(y0, &mut mapped_prev);
                    integrals.push(Some(IntegralAcc {
                        map,
                        decay: math::exp(-weight_rate * h),
                        value: full[d..].to_vec(),
                        mapped_prev,
                    }));
                }
                _ => integrals.push(None),
            }
        }
        Ok(HistoryState {
            dimension: d,
            decay: math::exp(-r * h),
            decay_half: math::exp(-r * h * 0.5),
            init_part: phi0.r_norm(),
            running: math::norm(phi0.head()),
            integrals,
        })
    }

    /// Advance past a completed step from state `z_prev` to `z_new`
    /// (each `2d`), step size `h`.
    fn advance(&mut self, z_prev: &[f64], z_new: &[f64], h: f64) {
        let d = self.dimension;
        self.init_part *= self.decay;
        let mut mid2 = 0.0;
        let mut new2 = 0.0;
        for i in 0..2 * d {
            let m = 0.5 * (z_prev[i] + z_new[i]);
            mid2 += m * m;
            new2 += z_new[i] * z_new[i];
        }
        self.running = (self.running * self.decay)
            .max(self.decay_half * math::sqrt(mid2))
            .max(math::sqrt(new2));
        let y_new = &z_new[d..];
        for acc in self.integrals.iter_mut().flatten() {
            let half = 0.5 * h;
            for i in 0..d {
                let mapped_new = acc.map.apply_scalar(y_new[i]);
                acc.value[i] =
                    acc.decay * (acc.value[i] + half * acc.mapped_prev[i]) + half * mapped_new;
                acc.mapped_prev[i] = mapped_new;
            }
        }
    }

    fn norm(&self) -> f64 {
        self.init_part.max(self.running)
    }

    /// Velocity-block history summary feeding `b1` for regime `k`.
    fn b1_summary(
        &self,
        model: &ModelSpec,
        phi0: &Segment,
        ys: &[f64],
        step_index: usize,
        h: f64,
        k: Regime,
        out: &mut [f64],
    ) -> Result<()> {
        let d = self.dimension;
        match &model.coefficients.regimes[k].b1 {
            B1Family::Zero => out.fill(0.0),
            B1Family::WeightedIntegral { .. } => {
                out.copy_from_slice(&self.integrals[k].as_ref().unwrap().value);
            }
            B1Family::DiscreteLag { lag, .. } => {
                let t = step_index as f64 * h;
                let s = t - lag;
                if s <= 0.0 {
                    let v = phi0.evaluate(s)?;
                    out.copy_from_slice(&v[d..]);
                } else {
                    let pos = s / h;
                    let lo = pos as usize;
                    let lo = lo.min(step_index - 1);
                    let w = pos - lo as f64;
                    for i in 0..d {
                        let a = ys[lo * d + i];
                        let b = ys[(lo + 1) * d + i];
                        out[i] = a + w * (b - a);
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_horizon(horizon: f64, h: f64) -> Result<usize> {
    if !(horizon > 0.0) || !(h > 0.0) {
        return Err(CoreError::Contract(String::from(
            "horizon and step must be positive",
        )));
    }
    let n = libm::round(horizon / h) as usize;
    if n == 0 || math::abs(n as f64 * h - horizon) > 1e-9 * horizon.max(1.0) {
        return Err(CoreError::Contract(format!(
            "horizon {horizon} is not a multiple of the step {h}"
        )));
    }
    if n > MAX_STEPS {
        return Err(CoreError::Contract(format!(
            "step count {n} exceeds the overflow guard {MAX_STEPS}"
        )));
    }
    Ok(n)
}

fn check_initial(model: &ModelSpec, phi0: &Segment, k0: Regime) -> Result<()> {
    if phi0.dimension() != model.dimension() {
        return Err(CoreError::Contract(String::from(
            "initial segment dimension does not match model",
        )));
    }
    if phi0.decay_rate() != model.decay_rate {
        return Err(CoreError::Contract(String::from(
            "initial segment decay rate does not match model",
        )));
    }
    if k0 >= model.states() {
        return Err(CoreError::Contract(format!("no regime {k0}")));
    }
    Ok(())
}

enum ChainDriver {
    Markovian {
        jump_times: Vec<f64>,
        targets: Vec<Regime>,
        pointer: usize,
    },
    Thinned {
        layout: IntervalLayout,
        next_candidate: f64,
    },
}

/// Simulate the hybrid pair on `[0, T]`.
///
/// Markovian mode drives an exact continuous-time chain from the dominating
/// matrix; state-dependent mode generates candidates at the dominating rate
/// and thins them with the segment frozen at the step boundary. Jump times
/// are recorded exactly; coefficient changes take effect at the next step
/// boundary.
pub fn simulate_hybrid(
    model: &ModelSpec,
    phi0: &Segment,
    k0: Regime,
    horizon: f64,
    h: f64,
    rng: &mut PathRng,
    mode: SwitchingMode,
    include_b2: bool,
) -> Result<HybridPath> {
    let n = check_horizon(horizon, h)?;
    check_initial(model, phi0, k0)?;
    let d = model.dimension();
    let sqrt_h = math::sqrt(h);

    let layout = build_intervals(&model.rates);
    let mut driver = match mode {
        SwitchingMode::Markovian => {
            let chain = simulate_markov_chain(&layout, k0, horizon, &mut rng.switching);
            ChainDriver::Markovian {
                jump_times: chain.jump_times,
                targets: chain.targets,
                pointer: 0,
            }
        }
        SwitchingMode::StateDependent => {
            let width = layout.total_width(k0);
            let next = if width > 0.0 {
                rng.switching.exponential(width)
            } else {
                f64::INFINITY
            };
            ChainDriver::Thinned {
                layout,
                next_candidate: next,
            }
        }
    };

    let mut history = HistoryState::new(model, phi0, h)?;
    let mut xs = Vec::with_capacity((n + 1) * d);
    let mut ys = Vec::with_capacity((n + 1) * d);
    let mut increments = Vec::with_capacity(n * d);
    let mut norms = Vec::with_capacity(n + 1);
    let mut regimes = Vec::with_capacity(n + 1);
    let mut jumps = Vec::new();

    let head = phi0.head();
    xs.extend_from_slice(&head[..d]);
    ys.extend_from_slice(&head[d..]);
    norms.push(history.norm());

    let mut state = k0;
    let mut summary = alloc::vec![0.0; d];
    let mut b1 = alloc::vec![0.0; d];
    let mut b2 = alloc::vec![0.0; d];
    let mut sigma = alloc::vec![0.0; d];
    let mut z_prev = alloc::vec![0.0; 2 * d];
    let mut z_new = alloc::vec![0.0; 2 * d];

    for i in 0..n {
        regimes.push(state);
        history.b1_summary(model, phi0, &ys, i, h, state, &mut summary)?;
        model.coefficients.regimes[state]
            .b1
            .from_velocity_summary(&summary, &mut b1);
        let base = i * d;
        for j in 0..d {
            z_prev[j] = xs[base + j];
            z_prev[d + j] = ys[base + j];
        }
        if include_b2 {
            model.eval_b2(&z_prev, state, &mut b2);
        } else {
            b2.fill(0.0);
        }
        model.eval_sigma(&z_prev, state, &mut sigma);
        for j in 0..d {
            let dw = sqrt_h * rng.noise.normal();
            increments.push(dw);
            z_new[j] = z_prev[j]
                + (model.coefficients.drift_a * z_prev[j]
                    + model.coefficients.drift_b * z_prev[d + j])
                    * h;
            z_new[d + j] = z_prev[d + j] + (b1[j] + b2[j]) * h + sigma[j] * dw;
        }
        xs.extend_from_slice(&z_new[..d]);
        ys.extend_from_slice(&z_new[d..]);
        history.advance(&z_prev, &z_new, h);
        norms.push(history.norm());

        let t_next = (i + 1) as f64 * h;
        match &mut driver {
            ChainDriver::Markovian {
                jump_times,
                targets,
                pointer,
            } => {
                while *pointer < jump_times.len() && jump_times[*pointer] <= t_next {
                    jumps.push(JumpRecord {
                        time: jump_times[*pointer],
                        from: state,
                        to: targets[*pointer],
                        effective_step: i + 1,
                    });
                    state = targets[*pointer];
                    *pointer += 1;
                }
            }
            ChainDriver::Thinned {
                layout,
                next_candidate,
            } => {
                while *next_candidate <= t_next {
                    let width = layout.total_width(state);
                    let mark = rng.switching.uniform() * width;
                    let target = layout.target_for_mark(state, mark);
                    let boundary_norm = history.norm();
                    if thinning_decision(&model.rates, state, target, boundary_norm, &mut rng.thinning)? {
                        jumps.push(JumpRecord {
                            time: *next_candidate,
                            from: state,
                            to: target,
                            effective_step: i + 1,
                        });
                        state = target;
                    }
                    let width = layout.total_width(state);
                    *next_candidate += if width > 0.0 {
                        rng.switching.exponential(width)
                    } else {
                        f64::INFINITY
                    };
                }
            }
        }
    }
    regimes.push(state);

    Ok(HybridPath {
        step: h,
        horizon,
        dimension: d,
        initial: phi0.clone(),
        xs,
        ys,
        regimes,
        increments,
        norms,
        jumps,
    })
}

/// Simulate a coupled pair from two initial histories sharing the initial
/// regime: one Markovian chain and one Brownian increment stream drive both
/// marginals, so the regime sequences coincide for all time and the noise
/// is synchronous from the start.
pub fn simulate_coupled_pair(
    model: &ModelSpec,
    phi: &Segment,
    psi: &Segment,
    k0: Regime,
    horizon: f64,
    h: f64,
    rng: &mut PathRng,
) -> Result<(HybridPath, HybridPath)> {
    let n = check_horizon(horizon, h)?;
    check_initial(model, phi, k0)?;
    check_initial(model, psi, k0)?;
    if phi.decay_rate() != psi.decay_rate() || phi.dimension() != psi.dimension() {
        return Err(CoreError::Contract(String::from(
            "coupled initial segments must share rate and dimension",
        )));
    }
    let d = model.dimension();
    let sqrt_h = math::sqrt(h);
    let layout = build_intervals(&model.rates);
    let chain = simulate_markov_chain(&layout, k0, horizon, &mut rng.switching);

    let mut runs = [PairLeg::new(model, phi, h)?, PairLeg::new(model, psi, h)?];
    let mut state = k0;
    let mut pointer = 0usize;
    let mut jumps = Vec::new();
    let mut regimes = Vec::with_capacity(n + 1);
    let mut dw = alloc::vec![0.0; d];

    for i in 0..n {
        regimes.push(state);
        for j in 0..d {
            dw[j] = sqrt_h * rng.noise.normal();
        }
        for leg in runs.iter_mut() {
            leg.step(model, state, i, h, &dw)?;
        }
        let t_next = (i + 1) as f64 * h;
        while pointer < chain.jump_times.len() && chain.jump_times[pointer] <= t_next {
            jumps.push(JumpRecord {
                time: chain.jump_times[pointer],
                from: state,
                to: chain.targets[pointer],
                effective_step: i + 1,
            });
            state = chain.targets[pointer];
            pointer += 1;
        }
    }
    regimes.push(state);

    let [leg_a, leg_b] = runs;
    Ok((
        leg_a.finish(phi, h, horizon, regimes.clone(), jumps.clone()),
        leg_b.finish(psi, h, horizon, regimes, jumps),
    ))
}

struct PairLeg {
    history: HistoryState,
    xs: Vec<f64>,
    ys: Vec<f64>,
    increments: Vec<f64>,
    norms: Vec<f64>,
    phi0: Segment,
    summary: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    sigma: Vec<f64>,
    z_prev: Vec<f64>,
    z_new: Vec<f64>,
}

impl PairLeg {
    fn new(model: &ModelSpec, phi0: &Segment, h: f64) -> Result<Self> {
        let d = model.dimension();
        let history = HistoryState::new(model, phi0, h)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let head = phi0.head();
        xs.extend_from_slice(&head[..d]);
        ys.extend_from_slice(&head[d..]);
        let norms = alloc::vec![history.norm()];
        Ok(PairLeg {
            history,
            xs,
            ys,
            increments: Vec::new(),
            norms,
            phi0: phi0.clone(),
            summary: alloc::vec![0.0; d],
            b1: alloc::vec![0.0; d],
            b2: alloc::vec![0.0; d],
            sigma: alloc::vec![0.0; d],
            z_prev: alloc::vec![0.0; 2 * d],
            z_new: alloc::vec![0.0; 2 * d],
        })
    }

    fn step(&mut self, model: &ModelSpec, state: Regime, i: usize, h: f64, dw: &[f64]) -> Result<()> {
        let d = model.dimension();
        self.history
            .b1_summary(model, &self.phi0, &self.ys, i, h, state, &mut self.summary)?;
        model.coefficients.regimes[state]
            .b1
            .from_velocity_summary(&self.summary, &mut self.b1);
        let base = i * d;
        for j in 0..d {
            self.z_prev[j] = self.xs[base + j];
            self.z_prev[d + j] = self.ys[base + j];
        }
        model.eval_b2(&self.z_prev, state, &mut self.b2);
        model.eval_sigma(&self.z_prev, state, &mut self.sigma);
        for j in 0..d {
            self.increments.push(dw[j]);
            self.z_new[j] = self.z_prev[j]
                + (model.coefficients.drift_a * self.z_prev[j]
                    + model.coefficients.drift_b * self.z_prev[d + j])
                    * h;
            self.z_new[d + j] =
                self.z_prev[d + j] + (self.b1[j] + self.b2[j]) * h + self.sigma[j] * dw[j];
        }
        self.xs.extend_from_slice(&self.z_new[..d]);
        self.ys.extend_from_slice(&self.z_new[d..]);
        self.history.advance(&self.z_prev, &self.z_new, h);
        self.norms.push(self.history.norm());
        Ok(())
    }

    fn finish(
        self,
        phi0: &Segment,
        h: f64,
        horizon: f64,
        regimes: Vec<Regime>,
        jumps: Vec<JumpRecord>,
    ) -> HybridPath {
        HybridPath {
            step: h,
            horizon,
            dimension: phi0.dimension(),
            initial: phi0.clone(),
            xs: self.xs,
            ys: self.ys,
            regimes,
            increments: self.increments,
            norms: self.norms,
            jumps,
        }
    }
}

/// Discounted-norm distances between the segment processes of a coupled
/// pair at every step boundary: the initial part is the exact segment
/// distance decayed along the grid, the recorded part runs the same max
/// recurrence as the single-path norm.
pub fn coupled_rnorm_distances(a: &HybridPath, b: &HybridPath) -> Result<Vec<f64>> {
    if a.n_steps() != b.n_steps() || a.dimension != b.dimension || a.step != b.step {
        return Err(CoreError::Contract(String::from(
            "coupled paths must share the grid",
        )));
    }
    let d = a.dimension;
    let r = a.initial.decay_rate();
    let h = a.step;
    let decay = math::exp(-r * h);
    let decay_half = math::exp(-r * h * 0.5);
    let mut init_part = a.initial.distance_r(&b.initial)?;
    let mut running = {
        let mut s = 0.0;
        for j in 0..d {
            let dx = a.xs[j] - b.xs[j];
            let dy = a.ys[j] - b.ys[j];
            s += dx * dx + dy * dy;
        }
        math::sqrt(s)
    };
    let mut out = Vec::with_capacity(a.n_steps() + 1);
    out.push(init_part.max(running));
    for i in 1..=a.n_steps() {
        init_part *= decay;
        let base = i * d;
        let prev = (i - 1) * d;
        let mut mid2 = 0.0;
        let mut new2 = 0.0;
        for j in 0..d {
            let dx_new = a.xs[base + j] - b.xs[base + j];
            let dy_new = a.ys[base + j] - b.ys[base + j];
            let dx_prev = a.xs[prev + j] - b.xs[prev + j];
            let dy_prev = a.ys[prev + j] - b.ys[prev + j];
            let mx = 0.5 * (dx_prev + dx_new);
            let my = 0.5 * (dy_prev + dy_new);
            mid2 += mx * mx + my * my;
            new2 += dx_new * dx_new + dy_new * dy_new;
        }
        running = (running * decay)
            .max(decay_half * math::sqrt(mid2))
            .max(math::sqrt(new2));
        out.push(init_part.max(running));
    }
    Ok(out)
}

/// Final-time discounted distance between a coupled pair.
pub fn coupled_rnorm_distance(a: &HybridPath, b: &HybridPath) -> Result<f64> {
    Ok(*coupled_rnorm_distances(a, b)?.last().unwrap())
}

/// Evaluates the full generator applied to a test function along a recorded
/// path, at every step boundary before the horizon: the regime-`k_i`
/// diffusion part at `z_i` plus the switching part at the recorded history
/// norm. The history drift is replayed with the same incremental machinery
/// the simulator used.
pub fn generator_along_path(
    model: &ModelSpec,
    f: &crate::model::BuiltinTestFunction,
    path: &HybridPath,
) -> Result<Vec<f64>> {
    let d = model.dimension();
    if path.dimension != d {
        return Err(CoreError::Contract(String::from(
            "path dimension does not match model",
        )));
    }
    let h = path.step;
    let n = path.n_steps();
    let mut history = HistoryState::new(model, &path.initial, h)?;
    let mut out = Vec::with_capacity(n);
    let mut summary = alloc::vec![0.0; d];
    let mut b1 = alloc::vec![0.0; d];
    let mut b2 = alloc::vec![0.0; d];
    let mut sigma = alloc::vec![0.0; d];
    let mut grad_x = alloc::vec![0.0; d];
    let mut grad_y = alloc::vec![0.0; d];
    let mut hess = alloc::vec![0.0; d * d];
    let mut z = alloc::vec![0.0; 2 * d];
    let mut z_prev = alloc::vec![0.0; 2 * d];
    for i in 0..n {
        let k = path.regimes[i];
        let base = i * d;
        for j in 0..d {
            z[j] = path.xs[base + j];
            z[d + j] = path.ys[base + j];
        }
        history.b1_summary(model, &path.initial, &path.ys, i, h, k, &mut summary)?;
        model.coefficients.regimes[k]
            .b1
            .from_velocity_summary(&summary, &mut b1);
        model.eval_b2(&z, k, &mut b2);
        model.eval_sigma(&z, k, &mut sigma);
        f.hess_y(&z, k, &mut hess);
        f.grad_x(&z, k, &mut grad_x);
        f.grad_y(&z, k, &mut grad_y);
        let mut acc = 0.0;
        for j in 0..d {
            acc += 0.5 * sigma[j] * sigma[j] * hess[j * d + j];
            acc += (model.coefficients.drift_a * z[j] + model.coefficients.drift_b * z[d + j])
                * grad_x[j];
            acc += (b1[j] + b2[j]) * grad_y[j];
        }
        let fk = f.value(&z, k);
        for l in 0..model.states() {
            if l != k {
                acc += model.rates.rate(k, l, path.norms[i]) * (f.value(&z, l) - fk);
            }
        }
        out.push(acc);
        z_prev.copy_from_slice(&z);
        let next = (i + 1) * d;
        for j in 0..d {
            z[j] = path.xs[next + j];
            z[d + j] = path.ys[next + j];
        }
        history.advance(&z_prev, &z, h);
    }
    Ok(out)
}

/// Exit-probability ladder for the drift-reduced reference system in a
/// fixed regime: estimates `P(tau_R <= t)` over a ladder of radii and
/// reports the Lyapunov envelope `e^{kappa t} (|phi(0)|^2 + C/kappa)`
/// against `R^2 P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitTimeReport {
    pub radii: Vec<f64>,
    pub exit_probs: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub scaled: Vec<f64>,
    pub envelope: f64,
    pub kappa: f64,
    pub c_estimate: f64,
    pub monotone_within_ci: bool,
    pub within_envelope: bool,
    pub halving_observed: bool,
    pub paths: u64,
}

pub fn exit_time_diagnostic(
    model: &ModelSpec,
    phi0: &Segment,
    k: Regime,
    radii: &[f64],
    t: f64,
    kappa: f64,
    n_paths: u64,
    h: f64,
    seed: u64,
) -> Result<ExitTimeReport> {
    let kappa_min = 2.0 * model.coefficients.drift_a + math::abs(model.coefficients.drift_b) + 1.0;
    if kappa < kappa_min {
        return Err(CoreError::Contract(format!(
            "kappa {kappa} below the admissible threshold {kappa_min}"
        )));
    }
    if radii.is_empty() {
        return Err(CoreError::Contract(String::from("empty radius ladder")));
    }
    let d = model.dimension();
    let y0_norm = math::norm(&phi0.head()[d..]);
    for &radius in radii {
        if radius <= y0_norm + 1.0 {
            return Err(CoreError::Contract(format!(
                "radius {radius} must exceed |phi_2(0)| + 1 = {}",
                y0_norm + 1.0
            )));
        }
    }
    let pinned = model.pinned_regime(k)?;
    let mut exceed_counts = alloc::vec![0u64; radii.len()];
    for path_index in 0..n_paths {
        let mut rng = PathRng::new(seed, path_index);
        let path = simulate_hybrid(
            &pinned,
            phi0,
            0,
            t,
            h,
            &mut rng,
            SwitchingMode::Markovian,
            false,
        )?;
        let mut max_y = 0.0f64;
        for i in 0..=path.n_steps() {
            let y = math::norm(path.velocity(i));
            if y > max_y {
                max_y = y;
            }
        }
        for (ri, &radius) in radii.iter().enumerate() {
            if max_y >= radius {
                exceed_counts[ri] += 1;
            }
        }
    }
    let n = n_paths as f64;
    let exit_probs: Vec<f64> = exceed_counts.iter().map(|&c| c as f64 / n).collect();
    let stderrs: Vec<f64> = exit_probs
        .iter()
        .map(|&p| math::sqrt(p * (1.0 - p) / n))
        .collect();
    let scaled: Vec<f64> = radii
        .iter()
        .zip(&exit_probs)
        .map(|(&radius, &p)| radius * radius * p)
        .collect();
    let sigma_hat = model.coefficients.regimes[k].sigma.hat();
    let b1_bound = model.coefficients.regimes[k].b1.bound(d);
    let c_estimate = d as f64 * sigma_hat * sigma_hat + b1_bound * b1_bound;
    let h0 = math::dot(phi0.head(), phi0.head());
    let envelope = math::exp(kappa * t) * (h0 + c_estimate / kappa);
    let mut monotone = true;
    for i in 1..exit_probs.len() {
        let slack = 3.0 * math::sqrt(stderrs[i - 1] * stderrs[i - 1] + stderrs[i] * stderrs[i]);
        if exit_probs[i] > exit_probs[i - 1] + slack {
            monotone = false;
        }
    }
    let within_envelope = scaled.iter().all(|&s| s <= envelope);
    let mut halving = false;
    for i in 1..exit_probs.len() {
        if exit_probs[i - 1] > 0.0 {
            let slack = 3.0 * math::sqrt(
                0.25 * stderrs[i - 1] * stderrs[i - 1] + stderrs[i] * stderrs[i],
            );
            if exit_probs[i] <= 0.5 * exit_probs[i - 1] + slack {
                halving = true;
            }
        }
    }
    Ok(ExitTimeReport {
        radii: radii.to_vec(),
        exit_probs,
        stderrs,
        scaled,
        envelope,
        kappa,
        c_estimate,
        monotone_within_ci: monotone,
        within_envelope,
        halving_observed: halving,
        paths: n_paths,
    })
}
