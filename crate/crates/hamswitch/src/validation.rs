//! The statistical validation battery: martingale-problem residuals, the
//! drift-removal transfer, the switching reweighting identity, continuity
//! of the switching weight in the initial history, and the Feller scan.
//!
//! Every suite is a deterministic function of its context (model, initial
//! condition, horizon, step, paths, seed): sub-ensembles derive their seeds
//! from the context seed and fixed tags, and all aggregation is
//! order-stable.

use crate::montecarlo::{run_ensemble_columns, EnsembleColumns};
use crate::report::{CheckLine, TestReport, ValidationSummary};
use hamswitch_core::model::{BuiltinTestFunction, ModelSpec, RateShape, RateSpec};
use hamswitch_core::rng::PathRng;
use hamswitch_core::sde::{
    coupled_rnorm_distances, generator_along_path, simulate_coupled_pair, simulate_hybrid,
    HybridPath, SwitchingMode,
};
use hamswitch_core::segment::{Segment, TailSpec};
use hamswitch_core::stats;
use hamswitch_core::weights::{girsanov_weight, novikov_estimate, switch_weight};
use hamswitch_core::Regime;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct ValidationContext {
    pub model: ModelSpec,
    pub phi0: Segment,
    pub k0: Regime,
    pub horizon: f64,
    pub step: f64,
    pub paths: u64,
    pub seed: u64,
    /// Initial-history perturbation sizes for the continuity suites.
    pub ladder: Vec<f64>,
    /// Horizon for the drift-removal transfer suite.
    pub girsanov_horizon: f64,
}

impl ValidationContext {
    pub fn new(
        model: ModelSpec,
        phi0: Segment,
        k0: Regime,
        horizon: f64,
        step: f64,
        paths: u64,
        seed: u64,
    ) -> Self {
        ValidationContext {
            model,
            phi0,
            k0,
            horizon,
            step,
            paths,
            seed,
            ladder: vec![1e-1, 1e-2, 1e-3],
            girsanov_horizon: 0.5,
        }
    }
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x0000_0100_0000_01B3).wrapping_add(tag)
}

/// Bounded continuous functionals of the terminal pair used by the
/// estimator-consistency tests.
fn bounded_functionals(path: &HybridPath) -> [f64; 3] {
    let n = path.n_steps();
    let y = path.velocity(n);
    let x = path.position(n);
    let mut q = 0.0;
    for i in 0..path.dimension {
        q += x[i] * x[i] + y[i] * y[i];
    }
    let k = path.final_regime();
    [
        hamswitch_core::math::tanh(y[0]),
        1.0 / (1.0 + q),
        if k == 0 { 1.0 } else { 0.0 },
    ]
}

const FUNCTIONAL_LABELS: [&str; 3] = ["tanh(Y_T)", "1/(1+|Z_T|^2)", "indicator(Theta_T = 1)"];

/// Unit-norm perturbation direction compatible with any initial segment:
/// zero tail, a single velocity-unit node at time zero.
fn perturbation_direction(model: &ModelSpec) -> Segment {
    let d = model.dimension();
    let mut head = vec![0.0; 2 * d];
    head[d] = 1.0;
    Segment::new(
        model.decay_rate,
        d,
        TailSpec::Zero,
        vec![(-1.0, vec![0.0; 2 * d]), (0.0, head)],
    )
    .unwrap()
}

/// Smooth test functions with analytic derivatives for the generator.
fn generator_test_functions(model: &ModelSpec) -> Vec<(String, BuiltinTestFunction)> {
    let d = model.dimension();
    let states = model.states();
    let weights: Vec<f64> = (0..states).map(|k| 1.0 + 0.3 * k as f64).collect();
    vec![
        (
            "tanh velocity coordinate".into(),
            BuiltinTestFunction::CoordTanh {
                index: d,
                scale: 1.0,
                regime_weights: weights.clone(),
            },
        ),
        (
            "saturating quadratic".into(),
            BuiltinTestFunction::SmoothCap {
                rho: 2.0,
                regime_weights: weights,
            },
        ),
        (
            "regime label".into(),
            BuiltinTestFunction::RegimeOnly {
                values: (0..states).map(|k| 0.5 + k as f64).collect(),
            },
        ),
    ]
}

// ---------------------------------------------------------------------------
// Suite: martingale-problem residual.
// ---------------------------------------------------------------------------

/// For each test function, the residual increment
/// `f(Z_t) - f(Z_s) - sum (A f) h` over `[s, t]` must have zero mean and
/// zero correlation with history-measurable probes.
pub fn martingale_residual_suite(ctx: &ValidationContext) -> TestReport {
    let mut report = TestReport::new("martingale", ctx.seed, ctx.paths, ctx.step);
    let fs = generator_test_functions(&ctx.model);
    let n_steps = (ctx.horizon / ctx.step).round() as usize;
    let m_s = n_steps / 2;
    let seed = sub_seed(ctx.seed, 101);
    let width = fs.len() * 3;
    let columns = run_ensemble_columns(ctx.paths, seed, width, |idx, out| {
        let mut rng = PathRng::new(seed, idx);
        let path = simulate_hybrid(
            &ctx.model,
            &ctx.phi0,
            ctx.k0,
            ctx.horizon,
            ctx.step,
            &mut rng,
            SwitchingMode::StateDependent,
            true,
        )
        .expect("hybrid simulation failed");
        let z_s = path.state(m_s);
        let k_s = path.regimes[m_s];
        let z_t = path.state(n_steps);
        let k_t = path.regimes[n_steps];
        let probes = [
            1.0,
            if k_s == ctx.k0 { 1.0 } else { 0.0 },
            {
                let y = path.velocity(m_s);
                let mut q = 0.0;
                for v in y {
                    q += v * v;
                }
                q.sqrt().min(2.0)
            },
        ];
        for (fi, (_, f)) in fs.iter().enumerate() {
            let drift = generator_along_path(&ctx.model, f, &path).expect("generator replay");
            let mut integral = 0.0;
            for value in drift.iter().take(n_steps).skip(m_s) {
                integral += value * ctx.step;
            }
            let residual = f.value(&z_t, k_t) - f.value(&z_s, k_s) - integral;
            for (pi, &g) in probes.iter().enumerate() {
                out[fi * 3 + pi] = residual * g;
            }
        }
    });
    const PROBE_LABELS: [&str; 3] = ["unit", "regime indicator", "clipped |Y(s)|"];
    for (fi, (name, _)) in fs.iter().enumerate() {
        for (pi, probe) in PROBE_LABELS.iter().enumerate() {
            let m = columns.summarize(fi * 3 + pi);
            report.push(CheckLine::two_sided(
                format!("E[dM({name}) * {probe}] = 0"),
                m.mean,
                m.stderr,
                0.0,
            ));
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Suite: drift-removal transfer.
// ---------------------------------------------------------------------------

pub fn girsanov_suite(ctx: &ValidationContext) -> TestReport {
    let mut report = TestReport::new("girsanov", ctx.seed, ctx.paths, ctx.step);
    let horizon = ctx.girsanov_horizon;
    let pinned = ctx.model.pinned_regime(ctx.k0).expect("pinned regime");

    let seed_direct = sub_seed(ctx.seed, 201);
    let direct = run_ensemble_columns(ctx.paths, seed_direct, 3, |idx, out| {
        let mut rng = PathRng::new(seed_direct, idx);
        let path = simulate_hybrid(
            &pinned,
            &ctx.phi0,
            0,
            horizon,
            ctx.step,
            &mut rng,
            SwitchingMode::Markovian,
            true,
        )
        .expect("direct simulation");
        out.copy_from_slice(&bounded_functionals(&path));
    });
    let seed_ref = sub_seed(ctx.seed, 202);
    let reweighted = run_ensemble_columns(ctx.paths, seed_ref, 3, |idx, out| {
        let mut rng = PathRng::new(seed_ref, idx);
        let path = simulate_hybrid(
            &pinned,
            &ctx.phi0,
            0,
            horizon,
            ctx.step,
            &mut rng,
            SwitchingMode::Markovian,
            false,
        )
        .expect("reference simulation");
        let r = girsanov_weight(&path, &pinned, horizon).expect("drift-removal weight");
        let fs = bounded_functionals(&path);
        for j in 0..3 {
            out[j] = fs[j] * r;
        }
    });
    for j in 0..3 {
        let a = direct.summarize(j);
        let b = reweighted.summarize(j);
        let z = stats::z_score(a.mean, a.stderr, b.mean, b.stderr);
        report.push(CheckLine::z_test(
            format!("direct vs reweighted {}", FUNCTIONAL_LABELS[j]),
            z,
        ));
    }

    // With the Hölder drift removed entirely, shared seeds must give
    // bit-identical estimators (the weight is exactly one).
    {
        let mut zeroed = pinned.clone();
        zeroed.coefficients.regimes[0].b2 = hamswitch_core::model::B2Family::Zero;
        let seed_bit = sub_seed(ctx.seed, 203);
        let n = 256.min(ctx.paths);
        let on = run_ensemble_columns(n, seed_bit, 3, |idx, out| {
            let mut rng = PathRng::new(seed_bit, idx);
            let path = simulate_hybrid(
                &zeroed, &ctx.phi0, 0, horizon, ctx.step, &mut rng,
                SwitchingMode::Markovian, true,
            )
            .unwrap();
            out.copy_from_slice(&bounded_functionals(&path));
        });
        let off = run_ensemble_columns(n, seed_bit, 3, |idx, out| {
            let mut rng = PathRng::new(seed_bit, idx);
            let path = simulate_hybrid(
                &zeroed, &ctx.phi0, 0, horizon, ctx.step, &mut rng,
                SwitchingMode::Markovian, false,
            )
            .unwrap();
            let r = girsanov_weight(&path, &zeroed, horizon).unwrap();
            let fs = bounded_functionals(&path);
            for j in 0..3 {
                out[j] = fs[j] * r;
            }
        });
        let identical = (0..3).all(|j| {
            on.columns[j]
                .iter()
                .zip(&off.columns[j])
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
        report.push(CheckLine::structural(
            "b2 = 0: shared-seed estimators bitwise equal",
            identical,
            if identical { 1.0 } else { -1.0 },
        ));
    }

    // Exponential-moment diagnostic: finite and monotone in lambda.
    {
        let seed_nov = sub_seed(ctx.seed, 204);
        let n = (ctx.paths / 10).max(500);
        let mut last = 0.0;
        let mut monotone = true;
        let mut finite = true;
        for &lambda in &[0.5, 1.0, 2.0] {
            let rep = novikov_estimate(
                &ctx.model,
                ctx.k0,
                &ctx.phi0,
                lambda,
                horizon,
                n,
                ctx.step,
                seed_nov,
            )
            .expect("exponential-moment estimate");
            finite &= rep.estimate.is_finite() && !rep.infinity_suspected;
            monotone &= rep.estimate >= last;
            last = rep.estimate;
        }
        report.push(CheckLine::structural(
            "exponential moment finite and monotone in lambda",
            finite && monotone,
            if finite && monotone { 1.0 } else { -1.0 },
        ));
    }
    report
}

// ---------------------------------------------------------------------------
// Suite: switching reweighting identity.
// ---------------------------------------------------------------------------

pub fn reweight_suite(ctx: &ValidationContext) -> TestReport {
    let mut report = TestReport::new("reweight", ctx.seed, ctx.paths, ctx.step);
    let t = ctx.horizon;

    // Markovian sampler with the switching weight.
    let seed_mark = sub_seed(ctx.seed, 301);
    let weighted = run_ensemble_columns(ctx.paths, seed_mark, 6, |idx, out| {
        let mut rng = PathRng::new(seed_mark, idx);
        let path = simulate_hybrid(
            &ctx.model,
            &ctx.phi0,
            ctx.k0,
            t,
            ctx.step,
            &mut rng,
            SwitchingMode::Markovian,
            true,
        )
        .expect("markovian simulation");
        let m = switch_weight(&path, &ctx.model.rates, t).expect("switching weight");
        let fs = bounded_functionals(&path);
        out[0] = m;
        out[1] = m * m;
        out[2] = if m > 0.0 { 1.0 } else { 0.0 };
        for j in 0..3 {
            out[3 + j] = fs[j] * m;
        }
    });
    let m_mean = weighted.summarize(0);
    report.push(CheckLine::two_sided(
        "E[M_T] = 1",
        m_mean.mean,
        m_mean.stderr,
        1.0,
    ));
    let m_sq = weighted.summarize(1);
    let bound = 2.0 * hamswitch_core::math::exp(8.0 * ctx.model.rates.bound_h * t);
    report.push(CheckLine::one_sided(
        "E[M_T^2] <= 2 exp(8 H T)",
        m_sq.mean,
        m_sq.stderr,
        bound,
    ));
    let positive = weighted.summarize(2);
    report.push(CheckLine::structural(
        "M_T > 0 on every path",
        positive.min >= 1.0,
        positive.min - 0.5,
    ));

    // Direct thinning sampler.
    let seed_thin = sub_seed(ctx.seed, 302);
    let direct = run_ensemble_columns(ctx.paths, seed_thin, 3, |idx, out| {
        let mut rng = PathRng::new(seed_thin, idx);
        let path = simulate_hybrid(
            &ctx.model,
            &ctx.phi0,
            ctx.k0,
            t,
            ctx.step,
            &mut rng,
            SwitchingMode::StateDependent,
            true,
        )
        .expect("thinning simulation");
        out.copy_from_slice(&bounded_functionals(&path));
    });
    for j in 0..3 {
        let a = direct.summarize(j);
        let b = weighted.summarize(3 + j);
        let z = stats::z_score(a.mean, a.stderr, b.mean, b.stderr);
        report.push(CheckLine::z_test(
            format!("thinning vs reweighted {}", FUNCTIONAL_LABELS[j]),
            z,
        ));
    }

    // State-independent rates: shared seeds make the two estimators
    // coincide exactly (weights are identically one).
    {
        let states = ctx.model.states();
        let (q_hat, _) = ctx.model.rates.dominating_matrix();
        let mut c = vec![vec![0.0; states]; states];
        for (k, row) in c.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                if k != l {
                    *v = q_hat[k][l];
                }
            }
        }
        let mut flat = ctx.model.clone();
        flat.rates = RateSpec::new(
            c,
            vec![vec![0.0; states]; states],
            RateShape::One,
            Some(ctx.model.rates.bound_h),
            None,
            None,
        )
        .expect("state-independent rates");
        let seed_bit = sub_seed(ctx.seed, 303);
        let n = 256.min(ctx.paths);
        let a = run_ensemble_columns(n, seed_bit, 3, |idx, out| {
            let mut rng = PathRng::new(seed_bit, idx);
            let path = simulate_hybrid(
                &flat, &ctx.phi0, ctx.k0, t, ctx.step, &mut rng,
                SwitchingMode::StateDependent, true,
            )
            .unwrap();
            out.copy_from_slice(&bounded_functionals(&path));
        });
        let b = run_ensemble_columns(n, seed_bit, 3, |idx, out| {
            let mut rng = PathRng::new(seed_bit, idx);
            let path = simulate_hybrid(
                &flat, &ctx.phi0, ctx.k0, t, ctx.step, &mut rng,
                SwitchingMode::Markovian, true,
            )
            .unwrap();
            let m = switch_weight(&path, &flat.rates, t).unwrap();
            let fs = bounded_functionals(&path);
            for j in 0..3 {
                out[j] = fs[j] * m;
            }
        });
        let identical = (0..3).all(|j| {
            a.columns[j]
                .iter()
                .zip(&b.columns[j])
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
        report.push(CheckLine::structural(
            "state-independent rates: estimators coincide bitwise",
            identical,
            if identical { 1.0 } else { -1.0 },
        ));
    }
    report
}

// ---------------------------------------------------------------------------
// Suites: weight continuity and the Feller scan over a perturbation ladder.
// ---------------------------------------------------------------------------

struct LadderPoint {
    delta: f64,
    distance0: f64,
    columns: EnsembleColumns,
}

/// Coupled-pair ensembles per ladder point. Columns: |dM|, final segment
/// distance, sup segment distance, n(T), and the per-f reweighted
/// differences.
fn run_ladder(ctx: &ValidationContext, seed_tag: u64) -> Vec<LadderPoint> {
    let bump = perturbation_direction(&ctx.model);
    let t = ctx.horizon;
    ctx.ladder
        .iter()
        .enumerate()
        .map(|(j, &delta)| {
            let psi = ctx
                .phi0
                .linear_combination(&bump, delta)
                .expect("ladder perturbation");
            let distance0 = ctx.phi0.distance_r(&psi).expect("ladder distance");
            let seed = sub_seed(ctx.seed, seed_tag + j as u64);
            let columns = run_ensemble_columns(ctx.paths, seed, 7, |idx, out| {
                let mut rng = PathRng::new(seed, idx);
                let (pa, pb) = simulate_coupled_pair(
                    &ctx.model, &ctx.phi0, &psi, ctx.k0, t, ctx.step, &mut rng,
                )
                .expect("coupled simulation");
                let ma = switch_weight(&pa, &ctx.model.rates, t).expect("weight");
                let mb = switch_weight(&pb, &ctx.model.rates, t).expect("weight");
                let dists = coupled_rnorm_distances(&pa, &pb).expect("coupled distance");
                let sup = dists.iter().copied().fold(0.0f64, f64::max);
                out[0] = (ma - mb).abs();
                out[1] = *dists.last().unwrap();
                out[2] = sup;
                out[3] = pa.count_jumps(t) as f64;
                let fa = bounded_functionals(&pa);
                let fb = bounded_functionals(&pb);
                for k in 0..3 {
                    out[4 + k] = fa[k] * ma - fb[k] * mb;
                }
            });
            LadderPoint {
                delta,
                distance0,
                columns,
            }
        })
        .collect()
}

/// Strictly-decreasing check with each decrease resolved beyond the
/// combined 3-sigma noise of the two estimates.
fn decreasing_check(label: &str, values: &[(f64, f64)]) -> CheckLine {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for w in values.windows(2) {
        let (v0, s0) = w[0];
        let (v1, s1) = w[1];
        let resolved = (v0 - v1) - 3.0 * (s0 * s0 + s1 * s1).sqrt();
        pass &= resolved > 0.0;
        worst = worst.min(resolved);
    }
    CheckLine::structural(format!("{label} strictly decreasing (3-sigma resolved)"), pass, worst)
}

pub fn mt_continuity_suite(ctx: &ValidationContext) -> TestReport {
    let mut report = TestReport::new("mt-continuity", ctx.seed, ctx.paths, ctx.step);
    let t = ctx.horizon;
    let h_bound = ctx.model.rates.bound_h;
    let k_lip = ctx.model.rates.lipschitz_k;

    // Identical histories: the coupled weights agree exactly.
    {
        let seed = sub_seed(ctx.seed, 401);
        let n = 128.min(ctx.paths);
        let same = run_ensemble_columns(n, seed, 1, |idx, out| {
            let mut rng = PathRng::new(seed, idx);
            let (pa, pb) = simulate_coupled_pair(
                &ctx.model, &ctx.phi0, &ctx.phi0, ctx.k0, t, ctx.step, &mut rng,
            )
            .unwrap();
            let ma = switch_weight(&pa, &ctx.model.rates, t).unwrap();
            let mb = switch_weight(&pb, &ctx.model.rates, t).unwrap();
            out[0] = (ma - mb).abs();
        });
        let m = same.summarize(0);
        report.push(CheckLine::exact(
            "psi = phi: |M(phi) - M(psi)| = 0",
            m.max,
            0.0,
            0.0,
        ));
    }

    let ladder = run_ladder(ctx, 410);
    let mut dm_series = Vec::new();
    for point in &ladder {
        let dm = point.columns.summarize(0);
        // Envelope from the weight-difference decomposition: for any
        // epsilon, e^{HT} (2 eps K H T + 2 H T P(sup >= eps)
        // + 2 E[n(T) 1{sup >= eps}]), minimized over observed quantiles.
        let sup = &point.columns.columns[2];
        let jumps = &point.columns.columns[3];
        let n = sup.len() as f64;
        let mut best = f64::INFINITY;
        for quantile in [0.5, 0.75, 0.9, 0.99] {
            let mut sorted = sup.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let eps = sorted[((n - 1.0) * quantile) as usize];
            let mut exceed = 0.0;
            let mut jump_mass = 0.0;
            for (s, j) in sup.iter().zip(jumps) {
                if *s >= eps {
                    exceed += 1.0;
                    jump_mass += j;
                }
            }
            let envelope = hamswitch_core::math::exp(h_bound * t)
                * (2.0 * eps * k_lip * h_bound * t
                    + 2.0 * h_bound * t * exceed / n
                    + 2.0 * jump_mass / n);
            best = best.min(envelope);
        }
        report.push(CheckLine::one_sided(
            format!("E|M(phi) - M(psi)| within envelope at delta {:.0e}", point.delta),
            dm.mean,
            dm.stderr,
            best,
        ));
        dm_series.push((dm.mean, dm.stderr));
    }
    report.push(decreasing_check("E|M(phi) - M(psi)|", &dm_series));
    report
}

pub fn feller_suite(ctx: &ValidationContext) -> TestReport {
    let mut report = TestReport::new("feller", ctx.seed, ctx.paths, ctx.step);
    let ladder = run_ladder(ctx, 510);

    // Linear-bound check: the coupled-distance-to-perturbation ratio varies
    // by less than a factor two across the ladder.
    let mut ratios = Vec::new();
    for point in &ladder {
        let dist = point.columns.summarize(1);
        ratios.push(dist.mean / point.distance0);
    }
    let max_ratio = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::MAX, f64::min);
    let spread = max_ratio / min_ratio;
    report.push(CheckLine::structural(
        format!(
            "E|W_T(phi) - W_T(psi)| / |phi - psi| stable across ladder (spread {spread:.3})"
        ),
        spread < 2.0 && min_ratio > 0.0,
        2.0 - spread,
    ));

    // Jump-count bound E n(T) <= H T.
    {
        let jumps = ladder[0].columns.summarize(3);
        report.push(CheckLine::one_sided(
            "E[n(T)] <= H T",
            jumps.mean,
            jumps.stderr,
            ctx.model.rates.bound_h * ctx.horizon,
        ));
    }

    // Expectation continuity: per functional, the reweighted difference of
    // expectations decreases along the ladder.
    for j in 0..3 {
        let series: Vec<(f64, f64)> = ladder
            .iter()
            .map(|point| {
                let d = point.columns.summarize(4 + j);
                (d.mean.abs(), d.stderr)
            })
            .collect();
        report.push(decreasing_check(
            &format!("|E f(Z_T^phi) - E f(Z_T^psi)| for {}", FUNCTIONAL_LABELS[j]),
            &series,
        ));
    }
    report
}

// ---------------------------------------------------------------------------
// Orchestration.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Martingale,
    Girsanov,
    Reweight,
    MtContinuity,
    Feller,
    All,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "martingale" => Some(Suite::Martingale),
            "girsanov" => Some(Suite::Girsanov),
            "reweight" => Some(Suite::Reweight),
            "mt-continuity" => Some(Suite::MtContinuity),
            "feller" => Some(Suite::Feller),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

/// Seeded empirical checks of the standing assumptions, reported in the
/// same format as the statistical suites.
pub fn assumption_report(ctx: &ValidationContext) -> TestReport {
    let samples = 400;
    let report = hamswitch_core::model::validate_assumptions(
        &ctx.model,
        samples,
        sub_seed(ctx.seed, 1),
    );
    let mut out = TestReport::new("assumptions", ctx.seed, samples as u64, ctx.step);
    for check in &report.checks {
        out.push(CheckLine::structural(
            format!("{} ({})", check.name, check.detail),
            check.pass,
            check.margin,
        ));
    }
    out
}

pub fn run_suites(suite: Suite, ctx: &ValidationContext) -> ValidationSummary {
    let start = Instant::now();
    let mut reports = vec![assumption_report(ctx)];
    let run = |s: Suite| matches!(suite, Suite::All) || suite == s;
    if run(Suite::Martingale) {
        reports.push(martingale_residual_suite(ctx));
    }
    if run(Suite::Girsanov) {
        reports.push(girsanov_suite(ctx));
    }
    if run(Suite::Reweight) {
        reports.push(reweight_suite(ctx));
    }
    if run(Suite::MtContinuity) {
        reports.push(mt_continuity_suite(ctx));
    }
    if run(Suite::Feller) {
        reports.push(feller_suite(ctx));
    }
    ValidationSummary::new(reports, start.elapsed().as_secs_f64())
}
