//! History segments: continuous paths on `(-infinity, 0]` with values in
//! `R^{2d}`, an analytic far-past tail, and a recorded grid ending at 0.
//!
//! The `r`-weighted norm `sup_{theta <= 0} e^{r theta} |phi(theta)|`
//! discounts the far past exponentially. Three tail families (zero,
//! constant, exponential growth into the past) make the tail part of norms
//! and history integrals exact; the grid part is piecewise linear, with
//! suprema sampled at nodes and interval midpoints (gap `O(step^2)`).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;

/// Analytic tail family, specified in absolute form for `theta <= grid_start`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailSpec {
    Zero,
    /// `phi(theta) = v`.
    Constant(Vec<f64>),
    /// `phi(theta) = e^{-r theta} v`; its `r`-weighted magnitude is flat.
    ExpGrowth(Vec<f64>),
}

/// Stored tail family. The coefficient is anchored at the current grid
/// start (it always equals the first grid value), which keeps shifts exact:
/// `shift_append` moves the anchor with the grid and nothing else changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailFamily {
    Zero,
    Constant,
    ExpGrowth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    decay_rate: f64,
    dimension: usize,
    tail: TailFamily,
    /// Nonpositive, strictly increasing, last exactly 0.
    times: Vec<f64>,
    /// Row-major `times.len() x 2d`.
    values: Vec<f64>,
}

fn norm_of(v: &[f64]) -> f64 {
    math::norm(v)
}

impl Segment {
    /// Build a segment from an absolute tail spec and an optional node list.
    /// With no nodes, the grid is the single node `(0, tail(0))`.
    pub fn new(
        decay_rate: f64,
        dimension: usize,
        tail: TailSpec,
        nodes: Vec<(f64, Vec<f64>)>,
    ) -> Result<Self> {
        if !(decay_rate > 0.0) {
            return Err(CoreError::Contract(format!(
                "decay_rate must be positive, got {decay_rate}"
            )));
        }
        if dimension == 0 {
            return Err(CoreError::Contract(String::from("dimension must be >= 1")));
        }
        let width = 2 * dimension;
        let tail_vec = match &tail {
            TailSpec::Zero => None,
            TailSpec::Constant(v) | TailSpec::ExpGrowth(v) => {
                if v.len() != width {
                    return Err(CoreError::Contract(format!(
                        "tail vector has length {}, expected {width}",
                        v.len()
                    )));
                }
                Some(v.clone())
            }
        };
        let nodes = if nodes.is_empty() {
            let v0 = match &tail {
                TailSpec::Zero => alloc::vec![0.0; width],
                TailSpec::Constant(v) | TailSpec::ExpGrowth(v) => v.clone(),
            };
            alloc::vec![(0.0, v0)]
        } else {
            nodes
        };
        let mut times = Vec::with_capacity(nodes.len());
        let mut values = Vec::with_capacity(nodes.len() * width);
        for (t, v) in &nodes {
            if v.len() != width {
                return Err(CoreError::Contract(format!(
                    "node at {t} has {} components, expected {width}",
                    v.len()
                )));
            }
            if *t > 0.0 {
                return Err(CoreError::Contract(format!("node time {t} is positive")));
            }
            if let Some(&last) = times.last() {
                if *t <= last {
                    return Err(CoreError::Contract(format!(
                        "node times must be strictly increasing ({last} then {t})"
                    )));
                }
            }
            times.push(*t);
            values.extend_from_slice(v);
        }
        if *times.last().unwrap() != 0.0 {
            return Err(CoreError::Contract(String::from(
                "last node time must be exactly 0",
            )));
        }
        // Continuity: absolute tail evaluated at grid_start must equal the
        // first grid value.
        let start = times[0];
        let first = &values[..width];
        let family = match tail {
            TailSpec::Zero => TailFamily::Zero,
            TailSpec::Constant(_) => TailFamily::Constant,
            TailSpec::ExpGrowth(_) => TailFamily::ExpGrowth,
        };
        let scale = match family {
            TailFamily::Zero => 0.0,
            TailFamily::Constant => 1.0,
            TailFamily::ExpGrowth => math::exp(-decay_rate * start),
        };
        for i in 0..width {
            let expected = tail_vec.as_ref().map_or(0.0, |v| scale * v[i]);
            let gap = math::abs(expected - first[i]);
            let tol = 1e-9 * (1.0 + math::abs(expected));
            if gap > tol {
                return Err(CoreError::Contract(format!(
                    "tail value at grid start ({expected}) does not match first \
                     grid value ({}) in component {i}",
                    first[i]
                )));
            }
        }
        Ok(Segment {
            decay_rate,
            dimension,
            tail: family,
            times,
            values,
        })
    }

    /// Constant-in-time segment with the given value.
    pub fn constant(decay_rate: f64, dimension: usize, value: Vec<f64>) -> Result<Self> {
        Segment::new(decay_rate, dimension, TailSpec::Constant(value), Vec::new())
    }

    /// Identically-zero segment.
    pub fn zero(decay_rate: f64, dimension: usize) -> Result<Self> {
        Segment::new(decay_rate, dimension, TailSpec::Zero, Vec::new())
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tail_family(&self) -> TailFamily {
        self.tail
    }

    pub fn grid_start(&self) -> f64 {
        self.times[0]
    }

    pub fn node_times(&self) -> &[f64] {
        &self.times
    }

    pub fn node_value(&self, i: usize) -> &[f64] {
        let w = 2 * self.dimension;
        &self.values[i * w..(i + 1) * w]
    }

    /// Value at `theta = 0`, i.e. the present state.
    pub fn head(&self) -> &[f64] {
        self.node_value(self.times.len() - 1)
    }

    fn tail_at(&self, theta: f64, out: &mut [f64]) {
        let anchor = self.node_value(0);
        match self.tail {
            TailFamily::Zero => out.fill(0.0),
            TailFamily::Constant => out.copy_from_slice(anchor),
            TailFamily::ExpGrowth => {
                let s = math::exp(-self.decay_rate * (theta - self.times[0]));
                for (o, &a) in out.iter_mut().zip(anchor) {
                    *o = s * a;
                }
            }
        }
    }

    /// Evaluate the segment at a nonpositive time: the analytic tail below
    /// the grid start, linear interpolation on the grid, exact at nodes.
    pub fn evaluate(&self, theta: f64) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; 2 * self.dimension];
        self.evaluate_into(theta, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, theta: f64, out: &mut [f64]) -> Result<()> {
        if theta > 0.0 {
            return Err(CoreError::Domain(format!(
                "segment evaluated at positive time {theta}"
            )));
        }
        if theta <= self.times[0] {
            self.tail_at(theta, out);
            return Ok(());
        }
        // times is sorted; find the interval containing theta.
        let idx = match self
            .times
            .binary_search_by(|t| t.partial_cmp(&theta).unwrap())
        {
            Ok(i) => {
                out.copy_from_slice(self.node_value(i));
                return Ok(());
            }
            Err(i) => i,
        };
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (theta - t0) / (t1 - t0);
        let lo = self.node_value(idx - 1);
        let hi = self.node_value(idx);
        for i in 0..out.len() {
            out[i] = lo[i] + w * (hi[i] - lo[i]);
        }
        Ok(())
    }

    fn tail_weighted_sup(&self) -> f64 {
        match self.tail {
            TailFamily::Zero => 0.0,
            // e^{r theta}|v| increases toward the grid start; the exp-growth
            // family has a flat weighted magnitude. Both peak at the anchor.
            TailFamily::Constant | TailFamily::ExpGrowth => {
                math::exp(self.decay_rate * self.times[0]) * norm_of(self.node_value(0))
            }
        }
    }

    /// `sup_{theta <= 0} e^{r theta} |phi(theta)|`, with the tail supremum
    /// exact and the grid part sampled at nodes and interval midpoints.
    pub fn r_norm(&self) -> f64 {
        let mut best = self.tail_weighted_sup();
        let w = 2 * self.dimension;
        let mut mid = alloc::vec![0.0; w];
        for i in 0..self.times.len() {
            let cand = math::exp(self.decay_rate * self.times[i]) * norm_of(self.node_value(i));
            if cand > best {
                best = cand;
            }
            if i + 1 < self.times.len() {
                let a = self.node_value(i);
                let b = self.node_value(i + 1);
                for j in 0..w {
                    mid[j] = 0.5 * (a[j] + b[j]);
                }
                let tm = 0.5 * (self.times[i] + self.times[i + 1]);
                let cand = math::exp(self.decay_rate * tm) * norm_of(&mid);
                if cand > best {
                    best = cand;
                }
            }
        }
        best
    }

    /// `r`-norm of the pointwise difference. The tail part is exact: in the
    /// common far past the weighted difference is `|s C + D|` with
    /// `s = e^{r theta}`, convex in `s`, so its supremum sits at an endpoint.
    pub fn distance_r(&self, other: &Segment) -> Result<f64> {
        if self.decay_rate != other.decay_rate {
            return Err(CoreError::Contract(format!(
                "decay rates differ: {} vs {}",
                self.decay_rate, other.decay_rate
            )));
        }
        if self.dimension != other.dimension {
            return Err(CoreError::Contract(format!(
                "dimensions differ: {} vs {}",
                self.dimension, other.dimension
            )));
        }
        let w = 2 * self.dimension;
        let r = self.decay_rate;
        let start = if self.times[0] < other.times[0] {
            self.times[0]
        } else {
            other.times[0]
        };

        // Tail part over theta <= start: each tail is c + e^{-r(theta-t0)} v
        // in anchored form, so e^{r theta}(tail_a - tail_b) = s C + D.
        let (ca, va) = self.tail_parts();
        let (cb, vb) = other.tail_parts();
        let mut c_diff = alloc::vec![0.0; w];
        let mut d_diff = alloc::vec![0.0; w];
        let sa = math::exp(r * self.times[0]);
        let sb = math::exp(r * other.times[0]);
        for i in 0..w {
            c_diff[i] = ca[i] - cb[i];
            d_diff[i] = sa * va[i] - sb * vb[i];
        }
        let s_max = math::exp(r * start);
        let mut at_start = alloc::vec![0.0; w];
        for i in 0..w {
            at_start[i] = s_max * c_diff[i] + d_diff[i];
        }
        let mut best = norm_of(&d_diff).max(norm_of(&at_start));

        // Grid part: merged node times plus midpoints, from `start` to 0.
        let mut merged: Vec<f64> = Vec::with_capacity(self.times.len() + other.times.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.times.len() || j < other.times.len() {
            let ti = self.times.get(i).copied().unwrap_or(f64::INFINITY);
            let tj = other.times.get(j).copied().unwrap_or(f64::INFINITY);
            let t = if ti <= tj { ti } else { tj };
            if ti == t {
                i += 1;
            }
            if tj == t {
                j += 1;
            }
            if merged.last() != Some(&t) {
                merged.push(t);
            }
        }
        let mut buf_a = alloc::vec![0.0; w];
        let mut buf_b = alloc::vec![0.0; w];
        let mut probe = |theta: f64, best: &mut f64| -> Result<()> {
            self.evaluate_into(theta, &mut buf_a)?;
            other.evaluate_into(theta, &mut buf_b)?;
            let cand = math::exp(r * theta) * math::dist(&buf_a, &buf_b);
            if cand > *best {
                *best = cand;
            }
            Ok(())
        };
        for k in 0..merged.len() {
            probe(merged[k], &mut best)?;
            if k + 1 < merged.len() {
                probe(0.5 * (merged[k] + merged[k + 1]), &mut best)?;
            }
        }
        Ok(best)
    }

    /// Tail in additive form `(constant part, anchored exponential part)`.
    fn tail_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let w = 2 * self.dimension;
        let anchor = self.node_value(0);
        match self.tail {
            TailFamily::Zero => (alloc::vec![0.0; w], alloc::vec![0.0; w]),
            TailFamily::Constant => (anchor.to_vec(), alloc::vec![0.0; w]),
            TailFamily::ExpGrowth => (alloc::vec![0.0; w], anchor.to_vec()),
        }
    }

    /// Segment process step: shift history by `h` and append the new present
    /// value at time 0. The tail descriptor is untouched (its anchor moves
    /// with the grid start).
    pub fn shift_append(&self, h: f64, new_value: &[f64]) -> Result<Segment> {
        if !(h > 0.0) {
            return Err(CoreError::Contract(format!("shift must be positive, got {h}")));
        }
        let w = 2 * self.dimension;
        if new_value.len() != w {
            return Err(CoreError::Contract(format!(
                "new value has {} components, expected {w}",
                new_value.len()
            )));
        }
        let mut times = Vec::with_capacity(self.times.len() + 1);
        for &t in &self.times {
            times.push(t - h);
        }
        times.push(0.0);
        let mut values = self.values.clone();
        values.extend_from_slice(new_value);
        Ok(Segment {
            decay_rate: self.decay_rate,
            dimension: self.dimension,
            tail: self.tail,
            times,
            values,
        })
    }

    /// `self + scale * other`. Requires matching rate and dimension and
    /// compatible tails (any tail plus a zero tail, or equal families).
    pub fn linear_combination(&self, other: &Segment, scale: f64) -> Result<Segment> {
        if self.decay_rate != other.decay_rate || self.dimension != other.dimension {
            return Err(CoreError::Contract(String::from(
                "linear_combination requires equal decay rate and dimension",
            )));
        }
        let family = match (self.tail, other.tail) {
            (f, TailFamily::Zero) => f,
            (TailFamily::Zero, f) => f,
            (a, b) if a == b => a,
            _ => {
                return Err(CoreError::Contract(String::from(
                    "incompatible tail families in linear_combination",
                )))
            }
        };
        let w = 2 * self.dimension;
        let mut merged: Vec<f64> = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.times.len() || j < other.times.len() {
            let ti = self.times.get(i).copied().unwrap_or(f64::INFINITY);
            let tj = other.times.get(j).copied().unwrap_or(f64::INFINITY);
            let t = if ti <= tj { ti } else { tj };
            if ti == t {
                i += 1;
            }
            if tj == t {
                j += 1;
            }
            if merged.last() != Some(&t) {
                merged.push(t);
            }
        }
        let mut values = Vec::with_capacity(merged.len() * w);
        let mut ba = alloc::vec![0.0; w];
        let mut bb = alloc::vec![0.0; w];
        for &t in &merged {
            self.evaluate_into(t, &mut ba)?;
            other.evaluate_into(t, &mut bb)?;
            for k in 0..w {
                values.push(ba[k] + scale * bb[k]);
            }
        }
        Ok(Segment {
            decay_rate: self.decay_rate,
            dimension: self.dimension,
            tail: family,
            times: merged,
            values,
        })
    }

    /// `int_{-infinity}^0 e^{w theta} map(phi(theta)) dtheta`, trapezoid on
    /// the grid plus the analytic (or saturating-substitution) tail.
    pub fn weighted_history_integral(
        &self,
        weight_rate: f64,
        map: HistoryMap,
    ) -> Result<Vec<f64>> {
        if !(weight_rate > 0.0) {
            return Err(CoreError::Divergence(format!(
                "weight rate must be positive, got {weight_rate}"
            )));
        }
        if self.tail == TailFamily::ExpGrowth && weight_rate <= self.decay_rate {
            return Err(CoreError::Divergence(format!(
                "weight rate {weight_rate} <= decay rate {} with a growing tail",
                self.decay_rate
            )));
        }
        let w = 2 * self.dimension;
        let mut out = alloc::vec![0.0; w];
        let mut mapped_lo = alloc::vec![0.0; w];
        let mut mapped_hi = alloc::vec![0.0; w];

        // Grid part.
        map.apply(self.node_value(0), &mut mapped_lo);
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            map.apply(self.node_value(i + 1), &mut mapped_hi);
            let w0 = math::exp(weight_rate * t0);
            let w1 = math::exp(weight_rate * t1);
            let half = 0.5 * (t1 - t0);
            for k in 0..w {
                out[k] += half * (w0 * mapped_lo[k] + w1 * mapped_hi[k]);
            }
            core::mem::swap(&mut mapped_lo, &mut mapped_hi);
        }

        // Tail part.
        let t0 = self.times[0];
        let head_weight = math::exp(weight_rate * t0);
        match self.tail {
            TailFamily::Zero | TailFamily::Constant => {
                let anchor = self.node_value(0);
                map.apply(anchor, &mut mapped_lo);
                for k in 0..w {
                    out[k] += head_weight / weight_rate * mapped_lo[k];
                }
            }
            TailFamily::ExpGrowth => match map {
                HistoryMap::Identity => {
                    let anchor = self.node_value(0);
                    let c = head_weight / (weight_rate - self.decay_rate);
                    for k in 0..w {
                        out[k] += c * anchor[k];
                    }
                }
                HistoryMap::Tanh => {
                    // Substituting v = e^{w(theta - t0)} turns the tail into
                    // (e^{w t0}/w) int_0^1 map(v^{-r/w} anchor) dv with a
                    // bounded integrand; fixed-panel trapezoid.
                    const PANELS: usize = 4096;
                    let anchor = self.node_value(0);
                    let ratio = self.decay_rate / weight_rate;
                    let mut acc = alloc::vec![0.0; w];
                    let mut point = alloc::vec![0.0; w];
                    for p in 0..=PANELS {
                        let weight = if p == 0 || p == PANELS { 0.5 } else { 1.0 };
                        let scale = if p == 0 {
                            1e30 // v -> 0+ limit: the map saturates.
                        } else {
                            math::powf(p as f64 / PANELS as f64, -ratio)
                        };
                        for k in 0..w {
                            point[k] = scale * anchor[k];
                        }
                        map.apply(&point, &mut mapped_lo);
                        for k in 0..w {
                            acc[k] += weight * mapped_lo[k];
                        }
                    }
                    let c = head_weight / weight_rate / PANELS as f64;
                    for k in 0..w {
                        out[k] += c * acc[k];
                    }
                }
            },
        }
        Ok(out)
    }
}

/// Componentwise transforms admitted inside history integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMap {
    Identity,
    Tanh,
}

impl HistoryMap {
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            HistoryMap::Identity => out.copy_from_slice(x),
            HistoryMap::Tanh => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = math::tanh(v);
                }
            }
        }
    }

    #[inline]
    pub fn apply_scalar(&self, x: f64) -> f64 {
        match self {
            HistoryMap::Identity => x,
            HistoryMap::Tanh => math::tanh(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seg(r: f64, tail: TailSpec, nodes: Vec<(f64, Vec<f64>)>) -> Segment {
        Segment::new(r, 1, tail, nodes).unwrap()
    }

    #[test]
    fn evaluate_constant_tail() {
        let s = seg(1.0, TailSpec::Constant(vec![3.0, 4.0]), vec![]);
        assert_eq!(s.evaluate(-1.0).unwrap(), vec![3.0, 4.0]);
        assert_eq!(s.evaluate(0.0).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn evaluate_linear_interpolation() {
        let s = seg(
            1.0,
            TailSpec::Constant(vec![0.0, 0.0]),
            vec![(-0.1, vec![0.0, 0.0]), (0.0, vec![1.0, 1.0])],
        );
        let v = s.evaluate(-0.05).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_exp_tail() {
        let s = seg(1.0, TailSpec::ExpGrowth(vec![1.0, 0.0]), vec![]);
        let v = s.evaluate(-2.0).unwrap();
        assert!((v[0] - 2.0f64.exp().powi(1)).abs() < 1e-12);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn evaluate_rejects_positive_time() {
        let s = seg(1.0, TailSpec::Zero, vec![]);
        assert!(matches!(s.evaluate(0.5), Err(CoreError::Domain(_))));
    }

    #[test]
    fn r_norm_constant_segment() {
        for r in [0.5, 1.0, 2.0] {
            let s = seg(r, TailSpec::Constant(vec![3.0, 4.0]), vec![]);
            assert!((s.r_norm() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn r_norm_exp_tail_is_flat() {
        let s = seg(1.0, TailSpec::ExpGrowth(vec![1.0, 0.0]), vec![]);
        assert!((s.r_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_append_matches_trajectory() {
        let s = seg(1.0, TailSpec::Constant(vec![1.0, 0.0]), vec![]);
        let s2 = s.shift_append(0.5, &[2.0, 0.0]).unwrap();
        // Value at -0.5 is the old present value.
        assert_eq!(s2.evaluate(-0.5).unwrap(), vec![1.0, 0.0]);
        // Midpoint interpolates between old present and new value.
        let v = s2.evaluate(-0.25).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn integral_constant_identity() {
        let s = seg(1.0, TailSpec::Constant(vec![2.0, -1.0]), vec![]);
        let v = s
            .weighted_history_integral(1.0, HistoryMap::Identity)
            .unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12);
        assert!((v[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn integral_exp_tail_identity() {
        let s = seg(1.0, TailSpec::ExpGrowth(vec![1.0, 0.5]), vec![]);
        let v = s
            .weighted_history_integral(2.0, HistoryMap::Identity)
            .unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn integral_rejects_nonintegrable_tail() {
        let s = seg(1.0, TailSpec::ExpGrowth(vec![1.0, 0.0]), vec![]);
        assert!(matches!(
            s.weighted_history_integral(0.5, HistoryMap::Identity),
            Err(CoreError::Divergence(_))
        ));
    }
}
