//! Model definition: per-regime coefficient families, the switching-rate
//! family with its dominating matrix, the generator, and empirical checks
//! of the standing assumptions.
//!
//! Coefficients come from closed families rather than user code, so the
//! constants the checks need (sup bounds, Lipschitz and Hölder constants,
//! entrywise rate suprema) are exact.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::rng::Stream;
use crate::segment::{HistoryMap, Segment, TailSpec};
use crate::Regime;

/// Bounded history-dependent velocity drift `b1`. Both non-trivial families
/// reduce the history to a `d`-vector (the velocity block of a lagged value
/// or of a weighted history integral) and apply `scale * tanh` per
/// component.
#[derive(Debug, Clone, PartialEq)]
pub enum B1Family {
    Zero,
    /// `scale * tanh(Y(t - lag))`, componentwise.
    DiscreteLag { scale: f64, lag: f64 },
    /// `scale * tanh` of the velocity block of
    /// `int e^{w theta} map(phi(theta)) dtheta`.
    WeightedIntegral {
        scale: f64,
        weight_rate: f64,
        map: HistoryMap,
    },
}

impl B1Family {
    /// `sup |b1|` over all histories.
    pub fn bound(&self, dimension: usize) -> f64 {
        match self {
            B1Family::Zero => 0.0,
            B1Family::DiscreteLag { scale, .. } | B1Family::WeightedIntegral { scale, .. } => {
                math::abs(*scale) * math::sqrt(dimension as f64)
            }
        }
    }

    /// Lipschitz constant in the `r`-norm.
    pub fn lipschitz(&self, decay_rate: f64) -> f64 {
        match self {
            B1Family::Zero => 0.0,
            B1Family::DiscreteLag { scale, lag } => {
                math::abs(*scale) * math::exp(decay_rate * *lag)
            }
            B1Family::WeightedIntegral {
                scale, weight_rate, ..
            } => math::abs(*scale) / (weight_rate - decay_rate),
        }
    }

    /// Shared kernel: `scale * tanh` applied to the `d`-dimensional history
    /// summary (lagged velocity or integral velocity block).
    #[inline]
    pub fn from_velocity_summary(&self, summary: &[f64], out: &mut [f64]) {
        match self {
            B1Family::Zero => out.fill(0.0),
            B1Family::DiscreteLag { scale, .. } | B1Family::WeightedIntegral { scale, .. } => {
                for (o, &s) in out.iter_mut().zip(summary) {
                    *o = scale * math::tanh(s);
                }
            }
        }
    }
}

/// Pointwise velocity drift `b2`; the signed-power family is Hölder with
/// exponent `alpha`, made globally Hölder by radially clipping the velocity
/// argument at `clip_radius`.
#[derive(Debug, Clone, PartialEq)]
pub enum B2Family {
    Zero,
    Constant(Vec<f64>),
    /// Componentwise `beta * |y_i|^alpha * sign(y_i)` after the radial clip.
    SignedPower {
        beta: f64,
        alpha: f64,
        clip_radius: f64,
    },
}

impl B2Family {
    /// Exact Hölder constant (Euclidean norms) for the check exponent equal
    /// to the family exponent: `2^{1-alpha} beta d^{(1-alpha)/2}`.
    pub fn holder_constant(&self, dimension: usize) -> f64 {
        match self {
            B2Family::Zero | B2Family::Constant(_) => 0.0,
            B2Family::SignedPower { beta, alpha, .. } => {
                math::powf(2.0, 1.0 - alpha)
                    * math::abs(*beta)
                    * math::powf(dimension as f64, 0.5 * (1.0 - alpha))
            }
        }
    }

    /// `sup |b2|` over `|y| <= radius`.
    pub fn sup_on_radius(&self, dimension: usize, radius: f64) -> f64 {
        match self {
            B2Family::Zero => 0.0,
            B2Family::Constant(v) => math::norm(v),
            B2Family::SignedPower {
                beta,
                alpha,
                clip_radius,
            } => {
                let reach = radius.min(*clip_radius);
                math::abs(*beta) * math::powf(reach, *alpha) * math::sqrt(dimension as f64)
            }
        }
    }
}

/// Diagonal diffusion families; entries stay in
/// `[base(1-|modulation|), base(1+|modulation|)]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaFamily {
    Constant { value: f64 },
    /// Entry `i` is `base * (1 + modulation * cos(y_i))`.
    Cosine { base: f64, modulation: f64 },
}

impl SigmaFamily {
    pub fn hat(&self) -> f64 {
        match self {
            SigmaFamily::Constant { value } => *value,
            SigmaFamily::Cosine { base, modulation } => base * (1.0 + math::abs(*modulation)),
        }
    }

    pub fn min_entry(&self) -> f64 {
        match self {
            SigmaFamily::Constant { value } => *value,
            SigmaFamily::Cosine { base, modulation } => base * (1.0 - math::abs(*modulation)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCoefficients {
    pub b1: B1Family,
    pub b2: B2Family,
    pub sigma: SigmaFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Position drift `a >= 0` in `dX = (aX + bY) dt`.
    pub drift_a: f64,
    /// Position-velocity coupling `b != 0`.
    pub drift_b: f64,
    pub dimension: usize,
    pub regimes: Vec<RegimeCoefficients>,
    /// Hölder exponent used by the (A2) check; all signed-power families
    /// must share it.
    pub holder_alpha: f64,
    /// Declared Hölder constant for (A2).
    pub holder_l2: f64,
    /// Declared Lipschitz constant for (H1).
    pub lipschitz_l1: f64,
}

impl CoefficientSet {
    pub fn new(
        drift_a: f64,
        drift_b: f64,
        dimension: usize,
        regimes: Vec<RegimeCoefficients>,
        declared_l1: Option<f64>,
        declared_l2: Option<f64>,
    ) -> Result<Self> {
        if drift_a < 0.0 {
            return Err(CoreError::Contract(format!(
                "position drift a must be nonnegative, got {drift_a}"
            )));
        }
        if drift_b == 0.0 {
            return Err(CoreError::Contract(String::from(
                "coupling b must be nonzero",
            )));
        }
        if dimension == 0 || regimes.is_empty() {
            return Err(CoreError::Contract(String::from(
                "need dimension >= 1 and at least one regime",
            )));
        }
        let mut alpha = None;
        for (k, rc) in regimes.iter().enumerate() {
            match &rc.b2 {
                B2Family::SignedPower {
                    alpha: a,
                    clip_radius,
                    ..
                } => {
                    if !(*a > 0.0 && *a < 1.0) {
                        return Err(CoreError::Contract(format!(
                            "regime {k}: Hölder exponent must lie in (0,1), got {a}"
                        )));
                    }
                    if !(*clip_radius > 0.0) {
                        return Err(CoreError::Contract(format!(
                            "regime {k}: clip radius must be positive"
                        )));
                    }
                    match alpha {
                        None => alpha = Some(*a),
                        Some(prev) if prev == *a => {}
                        Some(prev) => {
                            return Err(CoreError::Contract(format!(
                                "signed-power exponents must agree across regimes \
                                 ({prev} vs {a})"
                            )))
                        }
                    }
                }
                B2Family::Constant(v) if v.len() != dimension => {
                    return Err(CoreError::Contract(format!(
                        "regime {k}: constant b2 has {} components, expected {dimension}",
                        v.len()
                    )))
                }
                _ => {}
            }
            if rc.sigma.min_entry() <= 0.0 {
                return Err(CoreError::Contract(format!(
                    "regime {k}: diffusion must stay strictly positive"
                )));
            }
        }
        let holder_alpha = alpha.unwrap_or(0.5);
        let true_l2 = regimes
            .iter()
            .map(|rc| rc.b2.holder_constant(dimension))
            .fold(0.0f64, f64::max);
        Ok(CoefficientSet {
            drift_a,
            drift_b,
            dimension,
            regimes,
            holder_alpha,
            holder_l2: declared_l2.unwrap_or(true_l2),
            lipschitz_l1: declared_l1.unwrap_or(0.0),
            // lipschitz_l1 default is finalized by ModelSpec::new, which
            // knows the decay rate.
        })
    }

    pub fn states(&self) -> usize {
        self.regimes.len()
    }

    pub fn b1_bound(&self) -> f64 {
        self.regimes
            .iter()
            .map(|rc| rc.b1.bound(self.dimension))
            .fold(0.0f64, f64::max)
    }
}

/// Norm-dependence shape `s` in `q_kl(phi) = c_kl (1 + beta_kl s(|phi|_r))`;
/// all three map into `[0, 1]` with `sup s = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateShape {
    One,
    /// `1 / (1 + x^2)`.
    InvQuadratic,
    /// `e^{-x}`.
    ExpDecay,
}

impl RateShape {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            RateShape::One => 1.0,
            RateShape::InvQuadratic => 1.0 / (1.0 + x * x),
            RateShape::ExpDecay => math::exp(-x),
        }
    }

    /// Global Lipschitz constant of the shape.
    pub fn lipschitz(&self) -> f64 {
        match self {
            RateShape::One => 0.0,
            // max |s'| at x = 1/sqrt(3).
            RateShape::InvQuadratic => 3.0 * math::sqrt(3.0) / 8.0,
            RateShape::ExpDecay => 1.0,
        }
    }
}

/// Switching-rate family over a finite regime set, with its dominating
/// matrix. The default dominating entry is the exact supremum
/// `c_kl (1 + beta_kl)`; an explicit override may enlarge it (any matrix
/// entrywise above the supremum is a valid dominating matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct RateSpec {
    pub states: usize,
    pub c: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub shape: RateShape,
    q_hat: Vec<Vec<f64>>,
    q_hat_row: Vec<f64>,
    /// Declared uniform bound `H` on dominating row sums.
    pub bound_h: f64,
    /// Declared rate-Lipschitz constant `K`.
    pub lipschitz_k: f64,
}

impl RateSpec {
    pub fn new(
        c: Vec<Vec<f64>>,
        beta: Vec<Vec<f64>>,
        shape: RateShape,
        declared_h: Option<f64>,
        declared_k: Option<f64>,
        q_hat_override: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let states = c.len();
        if states == 0 {
            return Err(CoreError::Contract(String::from("empty rate table")));
        }
        let check_square = |m: &Vec<Vec<f64>>, name: &str| -> Result<()> {
            if m.len() != states || m.iter().any(|row| row.len() != states) {
                return Err(CoreError::Contract(format!(
                    "{name} matrix must be {states}x{states}"
                )));
            }
            Ok(())
        };
        check_square(&c, "c")?;
        check_square(&beta, "beta")?;
        for k in 0..states {
            for l in 0..states {
                if k == l {
                    continue;
                }
                if c[k][l] < 0.0 || beta[k][l] < 0.0 {
                    return Err(CoreError::Contract(format!(
                        "rate parameters must be nonnegative (entry {k},{l})"
                    )));
                }
            }
        }
        let mut q_hat = alloc::vec![alloc::vec![0.0; states]; states];
        for k in 0..states {
            for l in 0..states {
                if k != l {
                    q_hat[k][l] = c[k][l] * (1.0 + beta[k][l]);
                }
            }
        }
        if let Some(over) = q_hat_override {
            check_square(&over, "q_hat")?;
            for k in 0..states {
                for l in 0..states {
                    if k == l {
                        continue;
                    }
                    if over[k][l] < q_hat[k][l] * (1.0 - 1e-12) {
                        return Err(CoreError::Contract(format!(
                            "q_hat override {} below the family supremum {} at ({k},{l})",
                            over[k][l], q_hat[k][l]
                        )));
                    }
                    q_hat[k][l] = over[k][l];
                }
            }
        }
        let q_hat_row: Vec<f64> = (0..states)
            .map(|k| (0..states).filter(|&l| l != k).map(|l| q_hat[k][l]).sum())
            .collect();
        let h_min = q_hat_row.iter().copied().fold(0.0f64, f64::max);
        let bound_h = declared_h.unwrap_or(h_min);
        let shape_lip = shape.lipschitz();
        let mut k_true = 0.0f64;
        for k in 0..states {
            for l in 0..states {
                if k != l && q_hat[k][l] > 0.0 && c[k][l] > 0.0 {
                    k_true = k_true.max(c[k][l] * beta[k][l] * shape_lip / q_hat[k][l]);
                }
            }
        }
        Ok(RateSpec {
            states,
            c,
            beta,
            shape,
            q_hat,
            q_hat_row,
            bound_h,
            lipschitz_k: declared_k.unwrap_or(k_true),
        })
    }

    /// All-zero rates (no switching) over the given number of states.
    pub fn frozen(states: usize) -> Self {
        RateSpec::new(
            alloc::vec![alloc::vec![0.0; states]; states],
            alloc::vec![alloc::vec![0.0; states]; states],
            RateShape::One,
            Some(0.0),
            Some(0.0),
            None,
        )
        .unwrap()
    }

    /// `q_kl(phi)` given the history norm `x = |phi|_r`.
    #[inline]
    pub fn rate(&self, k: Regime, l: Regime, x: f64) -> f64 {
        if k == l {
            return 0.0;
        }
        self.c[k][l] * (1.0 + self.beta[k][l] * self.shape.eval(x))
    }

    /// `q_k(phi) = sum_{l != k} q_kl(phi)`.
    #[inline]
    pub fn rate_total(&self, k: Regime, x: f64) -> f64 {
        let mut s = 0.0;
        for l in 0..self.states {
            if l != k {
                s += self.rate(k, l, x);
            }
        }
        s
    }

    #[inline]
    pub fn q_hat(&self, k: Regime, l: Regime) -> f64 {
        self.q_hat[k][l]
    }

    #[inline]
    pub fn q_hat_total(&self, k: Regime) -> f64 {
        self.q_hat_row[k]
    }

    /// Exact closed-form supremum of the family entry (ignoring overrides).
    pub fn family_sup(&self, k: Regime, l: Regime) -> f64 {
        if k == l {
            0.0
        } else {
            self.c[k][l] * (1.0 + self.beta[k][l])
        }
    }

    /// The dominating matrix (off-diagonal entries, diagonal = negative row
    /// sum) and the tightest uniform bound `H`.
    pub fn dominating_matrix(&self) -> (Vec<Vec<f64>>, f64) {
        let mut m = self.q_hat.clone();
        for k in 0..self.states {
            m[k][k] = -self.q_hat_row[k];
        }
        let h = self.q_hat_row.iter().copied().fold(0.0f64, f64::max);
        (m, h)
    }

    /// Tightest Lipschitz constant valid for the family, per entry scaled by
    /// the dominating entry.
    pub fn k_true(&self) -> f64 {
        let lip = self.shape.lipschitz();
        let mut k_true = 0.0f64;
        for k in 0..self.states {
            for l in 0..self.states {
                if k != l && self.q_hat[k][l] > 0.0 {
                    k_true = k_true.max(self.c[k][l] * self.beta[k][l] * lip / self.q_hat[k][l]);
                }
            }
        }
        k_true
    }
}

/// The full hybrid model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub coefficients: CoefficientSet,
    pub rates: RateSpec,
    pub decay_rate: f64,
}

impl ModelSpec {
    pub fn new(mut coefficients: CoefficientSet, rates: RateSpec, decay_rate: f64) -> Result<Self> {
        if coefficients.states() != rates.states {
            return Err(CoreError::Contract(format!(
                "coefficient table has {} regimes but rate table has {}",
                coefficients.states(),
                rates.states
            )));
        }
        if !(decay_rate > 0.0) {
            return Err(CoreError::Contract(String::from(
                "decay rate must be positive",
            )));
        }
        for (k, rc) in coefficients.regimes.iter().enumerate() {
            if let B1Family::WeightedIntegral { weight_rate, .. } = rc.b1 {
                if weight_rate <= decay_rate {
                    return Err(CoreError::Contract(format!(
                        "regime {k}: history weight rate {weight_rate} must exceed \
                         the decay rate {decay_rate}"
                    )));
                }
            }
            if let B1Family::DiscreteLag { lag, .. } = rc.b1 {
                if !(lag > 0.0) {
                    return Err(CoreError::Contract(format!(
                        "regime {k}: lag must be positive"
                    )));
                }
            }
        }
        if coefficients.lipschitz_l1 == 0.0 {
            coefficients.lipschitz_l1 = coefficients
                .regimes
                .iter()
                .map(|rc| rc.b1.lipschitz(decay_rate))
                .fold(0.0f64, f64::max);
        }
        Ok(ModelSpec {
            coefficients,
            rates,
            decay_rate,
        })
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.dimension
    }

    pub fn states(&self) -> usize {
        self.rates.states
    }

    /// Single-regime submodel with frozen switching; regime `k` of the
    /// parent becomes regime 0.
    pub fn pinned_regime(&self, k: Regime) -> Result<ModelSpec> {
        if k >= self.states() {
            return Err(CoreError::Contract(format!("no regime {k}")));
        }
        let coeff = CoefficientSet {
            drift_a: self.coefficients.drift_a,
            drift_b: self.coefficients.drift_b,
            dimension: self.coefficients.dimension,
            regimes: alloc::vec![self.coefficients.regimes[k].clone()],
            holder_alpha: self.coefficients.holder_alpha,
            holder_l2: self.coefficients.holder_l2,
            lipschitz_l1: self.coefficients.lipschitz_l1,
        };
        ModelSpec::new(coeff, RateSpec::frozen(1), self.decay_rate)
    }

    /// History drift at the segment `phi` in regime `k`.
    pub fn eval_b1(&self, phi: &Segment, k: Regime) -> Result<Vec<f64>> {
        let d = self.dimension();
        let mut out = alloc::vec![0.0; d];
        match &self.coefficients.regimes[k].b1 {
            B1Family::Zero => {}
            B1Family::DiscreteLag { lag, .. } => {
                let v = phi.evaluate(-lag)?;
                self.coefficients.regimes[k]
                    .b1
                    .from_velocity_summary(&v[d..], &mut out);
            }
            B1Family::WeightedIntegral {
                weight_rate, map, ..
            } => {
                let integral = phi.weighted_history_integral(*weight_rate, *map)?;
                self.coefficients.regimes[k]
                    .b1
                    .from_velocity_summary(&integral[d..], &mut out);
            }
        }
        Ok(out)
    }

    /// Pointwise drift at `z = (x, y)` in regime `k`.
    pub fn eval_b2(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        let d = self.dimension();
        let y = &z[d..];
        match &self.coefficients.regimes[k].b2 {
            B2Family::Zero => out.fill(0.0),
            B2Family::Constant(v) => out.copy_from_slice(v),
            B2Family::SignedPower {
                beta,
                alpha,
                clip_radius,
            } => {
                let norm_y = math::norm(y);
                let shrink = if norm_y > *clip_radius {
                    clip_radius / norm_y
                } else {
                    1.0
                };
                for i in 0..d {
                    let yc = shrink * y[i];
                    // sqrt fast path for the common half-power exponent
                    let mag = if *alpha == 0.5 {
                        math::sqrt(math::abs(yc))
                    } else {
                        math::powf(math::abs(yc), *alpha)
                    };
                    out[i] = beta * mag * sign(yc);
                }
            }
        }
    }

    /// Diagonal diffusion entries at `z` in regime `k`.
    pub fn eval_sigma(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        let d = self.dimension();
        let y = &z[d..];
        match &self.coefficients.regimes[k].sigma {
            SigmaFamily::Constant { value } => out.fill(*value),
            SigmaFamily::Cosine { base, modulation } => {
                for i in 0..d {
                    out[i] = base * (1.0 + modulation * math::cos(y[i]));
                }
            }
        }
    }

    /// `sup_z |(sigma sigma^T)^{-1}|_HS` over all regimes (closed form for
    /// the diagonal families).
    pub fn diffusion_inverse_bound(&self) -> f64 {
        let d = self.dimension() as f64;
        self.coefficients
            .regimes
            .iter()
            .map(|rc| {
                let m = rc.sigma.min_entry();
                math::sqrt(d) / (m * m)
            })
            .fold(0.0f64, f64::max)
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Applies the full generator to a test function at `(phi, k)`:
/// the regime-`k` diffusion part at `phi(0)` plus the switching part.
pub fn generator_apply(
    f: &BuiltinTestFunction,
    phi: &Segment,
    k: Regime,
    model: &ModelSpec,
) -> Result<f64> {
    let d = model.dimension();
    if phi.dimension() != d {
        return Err(CoreError::Contract(String::from(
            "segment dimension does not match model",
        )));
    }
    let z = phi.head();
    let mut sigma = alloc::vec![0.0; d];
    model.eval_sigma(z, k, &mut sigma);
    let mut hess = alloc::vec![0.0; d * d];
    f.hess_y(z, k, &mut hess);
    let mut acc = 0.0;
    for i in 0..d {
        acc += 0.5 * sigma[i] * sigma[i] * hess[i * d + i];
    }

    let mut grad_x = alloc::vec![0.0; d];
    f.grad_x(z, k, &mut grad_x);
    for i in 0..d {
        acc += (model.coefficients.drift_a * z[i] + model.coefficients.drift_b * z[d + i])
            * grad_x[i];
    }

    let mut grad_y = alloc::vec![0.0; d];
    f.grad_y(z, k, &mut grad_y);
    let b1 = model.eval_b1(phi, k)?;
    let mut b2 = alloc::vec![0.0; d];
    model.eval_b2(z, k, &mut b2);
    for i in 0..d {
        acc += (b1[i] + b2[i]) * grad_y[i];
    }

    let x_norm = phi.r_norm();
    let fk = f.value(z, k);
    for l in 0..model.states() {
        if l != k {
            acc += model.rates.rate(k, l, x_norm) * (f.value(z, l) - fk);
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Test functions with analytic derivatives.
// ---------------------------------------------------------------------------

/// Fixed family of twice-differentiable test functions on `R^{2d} x S`.
/// Derivatives are analytic so generator evaluation never differentiates
/// numerically.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinTestFunction {
    /// `f(z, k) = values[k]`.
    RegimeOnly { values: Vec<f64> },
    /// Smooth bump `w_k A exp(1 - 1/(1 - |z-c|^2/R^2))` supported on the
    /// ball of radius `R` around `center`.
    Bump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
        regime_weights: Vec<f64>,
    },
    /// `w_k tanh(z_i / scale)` for a single coordinate.
    CoordTanh {
        index: usize,
        scale: f64,
        regime_weights: Vec<f64>,
    },
    /// Saturating quadratic `w_k |z|^2 / (1 + |z|^2 / rho^2)`, bounded by
    /// `w_k rho^2`.
    SmoothCap { rho: f64, regime_weights: Vec<f64> },
    /// Unbounded diagnostic `|y|^2` (regime-independent).
    VelocitySquare { dimension: usize },
}

impl BuiltinTestFunction {
    pub fn value(&self, z: &[f64], k: Regime) -> f64 {
        match self {
            BuiltinTestFunction::RegimeOnly { values } => values[k],
            BuiltinTestFunction::Bump {
                center,
                radius,
                amplitude,
                regime_weights,
            } => {
                let u = math::dist(z, center) / radius;
                let u2 = u * u;
                if u2 >= 1.0 {
                    0.0
                } else {
                    regime_weights[k] * amplitude * math::exp(1.0 - 1.0 / (1.0 - u2))
                }
            }
            BuiltinTestFunction::CoordTanh {
                index,
                scale,
                regime_weights,
            } => regime_weights[k] * math::tanh(z[*index] / scale),
            BuiltinTestFunction::SmoothCap {
                rho,
                regime_weights,
            } => {
                let q = math::dot(z, z);
                regime_weights[k] * q / (1.0 + q / (rho * rho))
            }
            BuiltinTestFunction::VelocitySquare { dimension } => math::dot(&z[*dimension..], &z[*dimension..]),
        }
    }

    fn grad_full(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        out.fill(0.0);
        match self {
            BuiltinTestFunction::RegimeOnly { .. } => {}
            BuiltinTestFunction::Bump {
                center,
                radius,
                amplitude,
                regime_weights,
            } => {
                let r2 = radius * radius;
                let mut u2 = 0.0;
                for i in 0..z.len() {
                    let d = z[i] - center[i];
                    u2 += d * d;
                }
                u2 /= r2;
                if u2 >= 1.0 {
                    return;
                }
                let g = regime_weights[k] * amplitude * math::exp(1.0 - 1.0 / (1.0 - u2));
                let dg_du = -g / ((1.0 - u2) * (1.0 - u2));
                for i in 0..z.len() {
                    out[i] = dg_du * 2.0 * (z[i] - center[i]) / r2;
                }
            }
            BuiltinTestFunction::CoordTanh {
                index,
                scale,
                regime_weights,
            } => {
                let t = math::tanh(z[*index] / scale);
                out[*index] = regime_weights[k] * (1.0 - t * t) / scale;
            }
            BuiltinTestFunction::SmoothCap {
                rho,
                regime_weights,
            } => {
                let q = math::dot(z, z);
                let rho2 = rho * rho;
                let denom = 1.0 + q / rho2;
                let df_dq = regime_weights[k] / (denom * denom);
                for i in 0..z.len() {
                    out[i] = df_dq * 2.0 * z[i];
                }
            }
            BuiltinTestFunction::VelocitySquare { dimension } => {
                for i in *dimension..z.len() {
                    out[i] = 2.0 * z[i];
                }
            }
        }
    }

    pub fn grad_x(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        let d = out.len();
        let mut full = alloc::vec![0.0; z.len()];
        self.grad_full(z, k, &mut full);
        out.copy_from_slice(&full[..d]);
    }

    pub fn grad_y(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        let d = out.len();
        let mut full = alloc::vec![0.0; z.len()];
        self.grad_full(z, k, &mut full);
        out.copy_from_slice(&full[z.len() - d..]);
    }

    /// Hessian in the velocity block, row-major `d x d`.
    pub fn hess_y(&self, z: &[f64], k: Regime, out: &mut [f64]) {
        out.fill(0.0);
        let two_d = z.len();
        let d = two_d / 2;
        match self {
            BuiltinTestFunction::RegimeOnly { .. } => {}
            BuiltinTestFunction::Bump {
                center,
                radius,
                amplitude,
                regime_weights,
            } => {
                let r2 = radius * radius;
                let mut u2 = 0.0;
                for i in 0..two_d {
                    let dd = z[i] - center[i];
                    u2 += dd * dd;
                }
                u2 /= r2;
                if u2 >= 1.0 {
                    return;
                }
                let one = 1.0 - u2;
                let g = regime_weights[k] * amplitude * math::exp(1.0 - 1.0 / one);
                let g1 = -g / (one * one);
                let g2 = g / (one * one * one * one) - 2.0 * g / (one * one * one);
                for i in 0..d {
                    for j in 0..d {
                        let ui = 2.0 * (z[d + i] - center[d + i]) / r2;
                        let uj = 2.0 * (z[d + j] - center[d + j]) / r2;
                        let mut h = g2 * ui * uj;
                        if i == j {
                            h += g1 * 2.0 / r2;
                        }
                        out[i * d + j] = h;
                    }
                }
            }
            BuiltinTestFunction::CoordTanh {
                index,
                scale,
                regime_weights,
            } => {
                if *index >= d {
                    let i = index - d;
                    let t = math::tanh(z[*index] / scale);
                    out[i * d + i] =
                        regime_weights[k] * (-2.0 * t * (1.0 - t * t)) / (scale * scale);
                }
            }
            BuiltinTestFunction::SmoothCap {
                rho,
                regime_weights,
            } => {
                let q = math::dot(z, z);
                let rho2 = rho * rho;
                let denom = 1.0 + q / rho2;
                let df_dq = regime_weights[k] / (denom * denom);
                let d2f_dq2 = -2.0 * regime_weights[k] / (rho2 * denom * denom * denom);
                for i in 0..d {
                    for j in 0..d {
                        let mut h = d2f_dq2 * 4.0 * z[d + i] * z[d + j];
                        if i == j {
                            h += df_dq * 2.0;
                        }
                        out[i * d + j] = h;
                    }
                }
            }
            BuiltinTestFunction::VelocitySquare { .. } => {
                for i in 0..d {
                    out[i * d + i] = 2.0;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Assumption validation.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst slack observed (negative means the check failed).
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub seed: u64,
    pub samples: usize,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Draw a random segment with a consistent tail for sampling-based checks.
pub fn sample_segment(rng: &mut Stream, decay_rate: f64, dimension: usize, scale: f64) -> Segment {
    let w = 2 * dimension;
    let family = rng.next_u64() % 3;
    let mut tail_vec = alloc::vec![0.0; w];
    for v in tail_vec.iter_mut() {
        *v = scale * (2.0 * rng.uniform() - 1.0);
    }
    let start = -(0.2 + 1.8 * rng.uniform());
    let first = match family {
        0 => alloc::vec![0.0; w],
        1 => tail_vec.clone(),
        _ => {
            let s = math::exp(-decay_rate * start);
            tail_vec.iter().map(|&v| s * v).collect()
        }
    };
    let n_extra = (rng.next_u64() % 4) as usize;
    let mut nodes = alloc::vec![(start, first)];
    let mut times = Vec::with_capacity(n_extra + 1);
    for _ in 0..n_extra {
        times.push(start * rng.uniform());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    times.retain(|&t| t > start && t < 0.0);
    for t in times {
        let mut v = alloc::vec![0.0; w];
        for x in v.iter_mut() {
            *x = scale * (2.0 * rng.uniform() - 1.0);
        }
        nodes.push((t, v));
    }
    let mut v = alloc::vec![0.0; w];
    for x in v.iter_mut() {
        *x = scale * (2.0 * rng.uniform() - 1.0);
    }
    nodes.push((0.0, v));
    let spec = match family {
        0 => TailSpec::Zero,
        1 => TailSpec::Constant(tail_vec),
        _ => TailSpec::ExpGrowth(tail_vec),
    };
    Segment::new(decay_rate, dimension, spec, nodes).unwrap()
}

/// Seeded empirical validation of (A1)-(A4) and (H1)-(H3). Failures are
/// report entries, never errors.
pub fn validate_assumptions(model: &ModelSpec, sample_budget: usize, seed: u64) -> AssumptionReport {
    let mut rng = crate::rng::rng_substream(seed, 0, 7);
    let d = model.dimension();
    let r = model.decay_rate;
    let tol = 1e-9;
    let mut checks = Vec::new();

    // (A1)/(H1) boundedness of b1.
    {
        let bound = model.coefficients.b1_bound();
        let mut worst = f64::INFINITY;
        for _ in 0..sample_budget {
            let phi = sample_segment(&mut rng, r, d, 5.0);
            for k in 0..model.states() {
                if let Ok(v) = model.eval_b1(&phi, k) {
                    worst = worst.min(bound + tol - math::norm(&v));
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "a1_b1_bounded",
            pass: worst >= 0.0,
            margin: worst,
            detail: format!("sup bound {bound}"),
        });
    }

    // (H1) Lipschitz continuity of b1 in the r-norm.
    {
        let l1 = model.coefficients.lipschitz_l1;
        let mut worst = f64::INFINITY;
        for _ in 0..sample_budget {
            let phi = sample_segment(&mut rng, r, d, 3.0);
            let psi = sample_segment(&mut rng, r, d, 3.0);
            let dist = match phi.distance_r(&psi) {
                Ok(x) if x > 1e-12 => x,
                _ => continue,
            };
            for k in 0..model.states() {
                if let (Ok(a), Ok(b)) = (model.eval_b1(&phi, k), model.eval_b1(&psi, k)) {
                    let gap = math::dist(&a, &b);
                    worst = worst.min(l1 * dist * (1.0 + tol) + 1e-12 - gap);
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "h1_b1_lipschitz",
            pass: worst >= 0.0,
            margin: worst,
            detail: format!("declared L1 {l1}"),
        });
    }

    // (A2) Hölder continuity of b2, including antisymmetric pairs near the
    // signed-power singularity where the sharp constant is attained.
    {
        let alpha = model.coefficients.holder_alpha;
        let l2 = model.coefficients.holder_l2;
        let mut worst = f64::INFINITY;
        let mut za = alloc::vec![0.0; 2 * d];
        let mut zb = alloc::vec![0.0; 2 * d];
        let mut ba = alloc::vec![0.0; d];
        let mut bb = alloc::vec![0.0; d];
        for s in 0..sample_budget {
            if s % 4 == 0 {
                // Adversarial: y and -y with a small magnitude.
                let eps = math::powf(10.0, -6.0 * rng.uniform());
                for i in 0..d {
                    za[i] = 0.0;
                    zb[i] = 0.0;
                    let y = eps * (2.0 * rng.uniform() - 1.0);
                    za[d + i] = y;
                    zb[d + i] = -y;
                }
            } else {
                for i in 0..2 * d {
                    za[i] = 10.0 * (2.0 * rng.uniform() - 1.0);
                    zb[i] = 10.0 * (2.0 * rng.uniform() - 1.0);
                }
            }
            let gap_z = math::dist(&za, &zb);
            if gap_z < 1e-14 {
                continue;
            }
            for k in 0..model.states() {
                model.eval_b2(&za, k, &mut ba);
                model.eval_b2(&zb, k, &mut bb);
                let gap = math::dist(&ba, &bb);
                let allowed = l2 * math::powf(gap_z, alpha) * (1.0 + tol) + 1e-12;
                worst = worst.min(allowed - gap);
            }
        }
        checks.push(AssumptionCheck {
            name: "a2_b2_holder",
            pass: worst >= 0.0,
            margin: worst,
            detail: format!("alpha {alpha}, declared L2 {l2}"),
        });
    }

    // (A3) diffusion bounded, symmetric positive definite.
    {
        let mut worst = f64::INFINITY;
        let mut z = alloc::vec![0.0; 2 * d];
        let mut diag = alloc::vec![0.0; d];
        for _ in 0..sample_budget {
            for x in z.iter_mut() {
                *x = 20.0 * (2.0 * rng.uniform() - 1.0);
            }
            for (k, rc) in model.coefficients.regimes.iter().enumerate() {
                model.eval_sigma(&z, k, &mut diag);
                let hat = rc.sigma.hat();
                for &s in &diag {
                    worst = worst.min(s); // positivity
                    worst = worst.min(hat + tol - s); // bounded by sigma_hat
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "a3_sigma_spd_bounded",
            pass: worst > 0.0,
            margin: worst,
            detail: String::from("diagonal entries positive and below sigma_hat"),
        });
    }

    // (H2) uniform bound on |(sigma sigma^T)^{-1}|.
    {
        let bound = model.diffusion_inverse_bound();
        let mut worst = f64::INFINITY;
        let mut z = alloc::vec![0.0; 2 * d];
        let mut diag = alloc::vec![0.0; d];
        for _ in 0..sample_budget {
            for x in z.iter_mut() {
                *x = 20.0 * (2.0 * rng.uniform() - 1.0);
            }
            for k in 0..model.states() {
                model.eval_sigma(&z, k, &mut diag);
                let mut hs = 0.0;
                for &s in &diag {
                    let inv = 1.0 / (s * s);
                    hs += inv * inv;
                }
                worst = worst.min(bound * (1.0 + tol) - math::sqrt(hs));
            }
        }
        checks.push(AssumptionCheck {
            name: "h2_inverse_bounded",
            pass: worst >= 0.0 && bound.is_finite(),
            margin: worst,
            detail: format!("closed-form bound {bound}"),
        });
    }

    // (A4) dominating row sums below the declared H.
    {
        let (_, h_min) = model.rates.dominating_matrix();
        let margin = model.rates.bound_h + tol - h_min;
        checks.push(AssumptionCheck {
            name: "a4_rate_bound",
            pass: margin >= 0.0,
            margin,
            detail: format!("tightest H {h_min}, declared {}", model.rates.bound_h),
        });
    }

    // (H3) rate Lipschitz continuity against K q_hat.
    {
        let kk = model.rates.lipschitz_k;
        let mut worst = f64::INFINITY;
        for _ in 0..sample_budget {
            let phi = sample_segment(&mut rng, r, d, 4.0);
            let psi = sample_segment(&mut rng, r, d, 4.0);
            let dist = match phi.distance_r(&psi) {
                Ok(x) if x > 1e-12 => x,
                _ => continue,
            };
            let na = phi.r_norm();
            let nb = psi.r_norm();
            for k in 0..model.states() {
                for l in 0..model.states() {
                    if k == l {
                        continue;
                    }
                    let gap = math::abs(model.rates.rate(k, l, na) - model.rates.rate(k, l, nb));
                    let allowed = kk * model.rates.q_hat(k, l) * dist * (1.0 + tol) + 1e-12;
                    worst = worst.min(allowed - gap);
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "h3_rate_lipschitz",
            pass: worst >= 0.0,
            margin: worst,
            detail: format!("declared K {kk}"),
        });
    }

    // Exact dominance of the q_hat matrix over sampled rates.
    {
        let mut worst = f64::INFINITY;
        for _ in 0..sample_budget {
            let phi = sample_segment(&mut rng, r, d, 4.0);
            let x = phi.r_norm();
            for k in 0..model.states() {
                for l in 0..model.states() {
                    if k != l {
                        worst =
                            worst.min(model.rates.q_hat(k, l) + tol - model.rates.rate(k, l, x));
                    }
                }
            }
        }
        checks.push(AssumptionCheck {
            name: "q_hat_dominates",
            pass: worst >= 0.0,
            margin: worst,
            detail: String::from("q_kl(phi) <= q_hat_kl on sampled segments"),
        });
    }

    AssumptionReport {
        checks,
        seed,
        samples: sample_budget,
    }
}
