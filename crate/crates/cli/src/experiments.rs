//! Experiment drivers shared by `verify`, `sweep` and the acceptance suite.
//!
//! Every driver returns [`BoundReport`]s. `Ctx::bound_scale` multiplies each
//! theoretical bound (or tolerance) before grading; it is `1` except under
//! the `--corrupt-bounds` test hook.

use std::time::Instant;

use ntkt_core::math::{gaussian_tail_bounds, estimate_tail_moments, mean_norm, norm, GaussianLaw};
use ntkt_core::metrics::{
    l2_of_values, loglog_slope, mean_se, median, run_trials, samp_bounds, BoundReport, Certificate, ProbeMeasure, TrialOutcome,
};
use ntkt_core::networks::{flip_rate, FiniteNtkNet, FiniteReluNet, ReluDirectPlan, ThresholdPlan};
use ntkt_core::representation::{
    infinite_relu_net, infinite_threshold_net, relu_tail_bound, threshold_tail_bound, SpectralConstants,
};
use ntkt_core::rng::RngStream;
use ntkt_core::sampling::{draw_batch, resampling_identity_check, signed_maurey_bound, truncation_radius, uniform_bounds};
use ntkt_core::targets::{convolution_error_check, ContinuityProfile, SmoothedTarget, TargetFunction, REGISTRY};
use ntkt_core::transport::{pipeline, rkhs_truncations, TransportMap};
use rayon::prelude::*;

use crate::error::Result;

/// Stream ids of the harness, disjoint from the library's tags.
pub mod streams {
    pub const GAUSS: u64 = 0x100;
    pub const RATE: u64 = 0x101;
    pub const CERT: u64 = 0x102;
    pub const FLIPS: u64 = 0x103;
    pub const THRESHOLD: u64 = 0x104;
    pub const RKHS: u64 = 0x105;
    pub const CONSTRUCTION: u64 = 0x106;
    pub const BUILD: u64 = 0x107;
    pub const PROBE: u64 = 0x108;
}

/// Quadrature noise floor for inequalities whose bound underflows to zero.
pub const QUAD_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub bound_scale: f64,
}

impl Ctx {
    pub fn new(seed: u64) -> Self {
        Self { seed, bound_scale: 1.0 }
    }

    pub fn corrupted(seed: u64, bound_scale: f64) -> Self {
        Self { seed, bound_scale }
    }

    fn stream(&self, id: u64) -> RngStream {
        RngStream::new(self.seed, id)
    }

    /// `empirical ≤ s·bound + k·stderr` with the scaled bound recorded.
    fn check(&self, name: impl Into<String>, bound: f64, empirical: f64, stderr: f64, k: f64) -> BoundReport {
        BoundReport::check(name, self.bound_scale * bound, empirical, stderr, k)
    }

    /// Whether `slope` lies in `[lo, hi]` after scaling the half-width.
    fn slope_report(&self, name: impl Into<String>, slope: f64, lo: f64, hi: f64) -> BoundReport {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) * self.bound_scale;
        BoundReport::new(name, half, (slope - mid).abs(), 0.0, (slope - mid).abs() <= half)
    }
}

/// Root mean square of `a − b`.
pub fn l2_gap(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_of_values(&diffs).0
}

/// `max |a − b|`.
pub fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn line_grid(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect()
}

/// Standard-Gaussian tail probabilities and moments against their bounds
/// at `r ∈ {√d, √d+1, √d+2}`, plus the mean norm.
pub fn gauss_tails(ctx: &Ctx, dims: &[usize], n: usize) -> Result<Vec<BoundReport>> {
    let cases: Vec<(usize, u32)> = dims.iter().flat_map(|&d| (0..3).map(move |k| (d, k))).collect();
    let base = ctx.stream(streams::GAUSS);
    let per_case: Vec<Result<Vec<BoundReport>>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(d, k))| {
            let mut rng = base.derive(i as u64);
            let r = (d as f64).sqrt() + k as f64;
            let b = gaussian_tail_bounds(d, r)?;
            let law = GaussianLaw::new(d)?;
            let mut z = vec![0.0; d];
            let mut hits = 0usize;
            let mut norms = Vec::with_capacity(n);
            for _ in 0..n {
                law.sample_into(&mut rng, &mut z);
                let nz = norm(&z);
                hits += usize::from(nz > r);
                norms.push(nz);
            }
            let freq = hits as f64 / n as f64;
            let est = estimate_tail_moments(d, r, n, &mut rng)?;
            let tag = format!("d={d},r=sqrt(d)+{k}");
            let mut out = vec![
                ctx.check(format!("gauss_tail_prob:{tag}"), b.prob_bound, freq, 0.0, 0.0),
                ctx.check(format!("gauss_tail_first_moment:{tag}"), b.norm_tail_bound, est.first, 0.0, 0.0),
                ctx.check(format!("gauss_tail_second_moment:{tag}"), b.sqnorm_tail_bound, est.second, 0.0, 0.0),
            ];
            if k == 0 {
                let (mean, se) = mean_se(&norms);
                let exact = mean_norm(d);
                out.push(ctx.check(format!("gauss_mean_norm:d={d}"), 0.0, (mean - exact).abs(), se, 3.0));
                out.push(ctx.check(format!("gauss_mean_norm_jensen:d={d}"), (d as f64).sqrt(), exact, 0.0, 0.0));
            }
            Ok(out)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_case {
        out.extend(r?);
    }
    Ok(out)
}

/// Quadrature `F_r`, `Q_r` against `h` on a 21-point grid of `[−1, 1]`, and
/// the tail inequalities `|h − F_ρ| ≤ 4π∫‖w‖|ĥ|`, `|h − Q_ρ| ≤ 12π²∫‖w‖²|ĥ|`
/// over `ρ ∈ {0.5, 1, 2, 4, r}`.
pub fn representation(ctx: &Ctx, delta: f64, r: f64, tol: f64) -> Result<Vec<BoundReport>> {
    let xs = line_grid(21);
    let per_target: Vec<Result<Vec<BoundReport>>> = REGISTRY
        .par_iter()
        .map(|id| {
            let h = SmoothedTarget::new(TargetFunction::parse(id, 1)?, delta)?;
            let consts = SpectralConstants::compute(&h)?;
            let hv: Vec<f64> = xs.iter().map(|x| h.value(x)).collect();
            let eval = |rho: f64| -> Result<(Vec<f64>, Vec<f64>)> {
                let f: Result<Vec<f64>> = xs.iter().map(|x| Ok(infinite_threshold_net(&h, &consts, rho, x)?)).collect();
                let q: Result<Vec<f64>> = xs.iter().map(|x| Ok(infinite_relu_net(&h, &consts, rho, x)?)).collect();
                Ok((f?, q?))
            };
            let (f, q) = eval(r)?;
            let mut out = vec![
                ctx.check(format!("representation_threshold:{id}"), tol, sup_gap(&f, &hv), 0.0, 0.0).with_delta(delta),
                ctx.check(format!("representation_relu:{id}"), tol, sup_gap(&q, &hv), 0.0, 0.0).with_delta(delta),
            ];
            let (mut excess_f, mut excess_q) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for rho in [0.5, 1.0, 2.0, 4.0, r] {
                let (f, q) = eval(rho)?;
                let (tf, tq) = (ctx.bound_scale * threshold_tail_bound(&h, rho)?, ctx.bound_scale * relu_tail_bound(&h, rho)?);
                excess_f = excess_f.max(sup_gap(&f, &hv) - tf);
                excess_q = excess_q.max(sup_gap(&q, &hv) - tq);
            }
            out.push(BoundReport::check(format!("tail_threshold:{id}"), QUAD_FLOOR, excess_f, 0.0, 0.0).with_delta(delta));
            out.push(BoundReport::check(format!("tail_relu:{id}"), QUAD_FLOOR, excess_q, 0.0, 0.0).with_delta(delta));
            Ok(out)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_target {
        out.extend(r?);
    }
    Ok(out)
}

/// Grid sup of `|f − f_{|δ} * G_α|` against `2ω_f(δ)` for the continuous
/// registry targets.
pub fn convolution(ctx: &Ctx, dims: &[usize], deltas: &[f64]) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for id in REGISTRY.iter().filter(|id| **id != "dirac") {
        for &d in dims {
            let probe = ProbeMeasure::grid(d);
            for &delta in deltas {
                let h = SmoothedTarget::new(TargetFunction::parse(id, d)?, delta)?;
                let rep = convolution_error_check(&h, &probe)?;
                out.push(ctx.check(format!("{}:d={d}", rep.name), rep.theoretical, rep.empirical, 0.0, 0.0).with_delta(delta));
            }
        }
    }
    Ok(out)
}

/// `E⟨T, Φ(x; ·)⟩` at every probe point.
pub fn infinite_values(t: &TransportMap, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let v: Result<Vec<f64>> = points.par_iter().map(|x| Ok(t.expected_inner(x)?.0)).collect();
    v
}

/// One `(m, trial, L2(P) error)` row of an NTK width sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub m: usize,
    pub trial: usize,
    pub error: f64,
}

/// NTK L2(P) error against `E⟨T, Φ⟩` over widths and trials, with the fitted
/// log-log slope of the median error in `m`. The probe points are shared
/// across widths.
#[allow(clippy::too_many_arguments)]
pub fn ntk_rate(
    ctx: &Ctx,
    f: &TargetFunction,
    delta: f64,
    eps: f64,
    eta: f64,
    ms: &[usize],
    trials: usize,
    probe: &ProbeMeasure,
) -> Result<(Vec<RateRow>, f64)> {
    let (_, t) = pipeline(f, delta, eps)?;
    let reference = infinite_values(&t, probe.points())?;
    let base = ctx.stream(streams::RATE).derive(delta.to_bits());
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &m in ms {
        let errs: Result<Vec<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|tr| {
                let mut rng = base.derive(m as u64).derive(tr);
                let net = FiniteNtkNet::new(draw_batch(&t, m, eps, eta, &mut rng)?);
                let vals: Result<Vec<f64>> = probe.points().iter().map(|x| Ok(net.eval(x)?)).collect();
                Ok(l2_gap(&vals?, &reference))
            })
            .collect();
        let errs = errs?;
        medians.push(median(&errs));
        rows.extend(errs.iter().enumerate().map(|(trial, &error)| RateRow { m, trial, error }));
    }
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let slope = loglog_slope(&xs, &medians)?;
    Ok((rows, slope))
}

/// Maurey rate of the NTK for the Dirac target, d = 1, δ = 0.2, ε = 0.01.
pub fn maurey_rate(ctx: &Ctx, ms: &[usize], trials: usize, n_probe: usize) -> Result<BoundReport> {
    let f = TargetFunction::parse("dirac", 1)?;
    let probe = ProbeMeasure::uniform_ball(1, n_probe, &mut ctx.stream(streams::PROBE))?;
    let (_, slope) = ntk_rate(ctx, &f, 0.2, 0.01, 0.1, ms, trials, &probe)?;
    Ok(ctx.slope_report("maurey_rate_slope", slope, -0.65, -0.35).with_eps(0.01).with_delta(0.2).with_seed(ctx.seed))
}

/// A frequency certificate graded at `bound_scale` and its negative control
/// (every bound halved), which passes iff the halved certificate fails.
pub struct CertPair {
    pub certificate: BoundReport,
    pub negative_control: BoundReport,
}

fn grade_pair(ctx: &Ctx, name: &str, trials: usize, eta: f64, outcomes: &[TrialOutcome]) -> Result<CertPair> {
    let cert = Certificate::new(name, trials, eta, 1, ctx.seed)?.shrunk(ctx.bound_scale);
    let certificate = cert.grade(outcomes);
    let halved = cert.shrunk(0.5).grade(outcomes);
    let negative_control = BoundReport::new(
        format!("{name}:negative_control"),
        halved.theoretical,
        halved.empirical,
        halved.stderr,
        !halved.pass,
    )
    .with_eta(eta)
    .with_seed(ctx.seed);
    Ok(CertPair { certificate: BoundReport { name: name.into(), ..certificate }, negative_control })
}

/// High-probability certificates over `trials` independent trials at level
/// `η`: the two sampling-theorem inequalities, the signed Maurey bound and
/// both uniform sampling bounds (Dirac target, d = 1, δ = 0.2).
pub fn certificates(ctx: &Ctx, trials: usize, eta: f64, m: usize) -> Result<Vec<CertPair>> {
    let f = TargetFunction::parse("dirac", 1)?;
    let delta = 0.2;
    let eps = 0.5;
    let (params, t) = pipeline(&f, delta, eps)?;
    let probe = ProbeMeasure::uniform_ball(1, 200, &mut ctx.stream(streams::PROBE))?;
    let pts = probe.points();
    let reference = infinite_values(&t, pts)?;
    let b = params.b.max(2.0);
    let base = ctx.stream(streams::CERT);

    let ntk_outcomes = |which: u64| {
        run_trials(ctx.seed, trials, |tr, _| {
            let mut rng = base.derive(tr);
            let batch = draw_batch(&t, m, eps, eta, &mut rng)?;
            let bounds = samp_bounds(b, m, eps, batch.radius(), eta)?;
            let ntk = FiniteNtkNet::new(batch.clone());
            let ntk_vals: ntkt_core::Result<Vec<f64>> = pts.iter().map(|x| ntk.eval(x)).collect();
            let ntk_vals = ntk_vals?;
            if which == 1 {
                return Ok(TrialOutcome { empirical: l2_gap(&ntk_vals, &reference), bound: bounds.eq1 });
            }
            let relu = FiniteReluNet::new(batch);
            let relu_vals: ntkt_core::Result<Vec<f64>> = pts.iter().map(|x| relu.eval(x)).collect();
            Ok(TrialOutcome { empirical: l2_gap(&ntk_vals, &relu_vals?), bound: bounds.eq2 })
        })
    };
    let eq1 = ntk_outcomes(1)?;
    let eq2 = ntk_outcomes(2)?;

    let h = t.source().expect("Fourier transport").clone();
    let consts = SpectralConstants::compute(&h)?;
    let grid = line_grid(2001);
    let thr_plan = ThresholdPlan::new(&h)?;
    let thr_l2_ref: Result<Vec<f64>> = pts.par_iter().map(|x| Ok(infinite_threshold_net(&h, &consts, f64::INFINITY, x)?)).collect();
    let thr_l2_ref = thr_l2_ref?;
    let thr_sup_ref: Result<Vec<f64>> =
        grid.par_iter().map(|x| Ok(infinite_threshold_net(&h, &consts, f64::INFINITY, x)?)).collect();
    let thr_sup_ref = thr_sup_ref?;
    let maurey = signed_maurey_bound(thr_plan.mass, 1.0, m, eta)?;
    let ub = uniform_bounds(thr_plan.mass, m, 1, eta, 1.0)?;
    let thr_outcomes: Result<Vec<[f64; 2]>> = (0..trials as u64)
        .into_par_iter()
        .map(|tr| {
            let mut rng = base.derive(1 << 32 | tr);
            let net = thr_plan.sample(m, &mut rng)?;
            let l2: Result<Vec<f64>> = pts.iter().map(|x| Ok(net.eval(x)?)).collect();
            let sup: Result<Vec<f64>> = grid.iter().map(|x| Ok(net.eval(x)?)).collect();
            Ok([l2_gap(&l2?, &thr_l2_ref), sup_gap(&sup?, &thr_sup_ref)])
        })
        .collect();
    let thr_outcomes = thr_outcomes?;
    let maurey_out: Vec<TrialOutcome> = thr_outcomes.iter().map(|o| TrialOutcome { empirical: o[0], bound: maurey }).collect();
    let uni1_out: Vec<TrialOutcome> =
        thr_outcomes.iter().map(|o| TrialOutcome { empirical: o[1], bound: ub.threshold_bound }).collect();

    let relu_plan = ReluDirectPlan::new(&h)?;
    let relu_ref: Result<Vec<f64>> = grid.par_iter().map(|x| Ok(infinite_relu_net(&h, &consts, relu_plan.r2, x)?)).collect();
    let relu_ref = relu_ref?;
    let relu_bound = uniform_bounds(relu_plan.mass, m, 1, eta, relu_plan.r2)?.relu_bound;
    let uni2_out = run_trials(ctx.seed, trials, |tr, _| {
        let mut rng = base.derive(2 << 32 | tr);
        let net = relu_plan.sample(m, &mut rng)?;
        let sup: ntkt_core::Result<Vec<f64>> = grid.iter().map(|x| net.eval(x)).collect();
        Ok(TrialOutcome { empirical: sup_gap(&sup?, &relu_ref), bound: relu_bound })
    })?;

    Ok(vec![
        grade_pair(ctx, "sampling_eq1", trials, eta, &eq1)?,
        grade_pair(ctx, "sampling_eq2", trials, eta, &eq2)?,
        grade_pair(ctx, "signed_maurey", trials, eta, &maurey_out)?,
        grade_pair(ctx, "uniform_threshold", trials, eta, &uni1_out)?,
        grade_pair(ctx, "uniform_relu", trials, eta, &uni2_out)?,
    ])
}

/// Smallest listed `δ` (largest first) whose modulus allows accuracy `eps`.
pub fn admissible_delta(f: &TargetFunction, eps: f64) -> Result<f64> {
    for delta in [0.2, 0.1, 0.05, 0.02, 0.01] {
        if ContinuityProfile::new(f, delta)?.omega <= eps {
            return Ok(delta);
        }
    }
    Err(ntkt_core::Error::Precondition(format!("no δ ≥ 0.01 gives ω_f(δ) ≤ {eps} for {f}")).into())
}

/// Activation-flip certificates over targets, dimensions, `ε` and `m`.
pub fn flips(ctx: &Ctx, ids: &[&str], dims: &[usize], eps_list: &[f64], ms: &[usize], n_mc: usize) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for id in ids {
        for &d in dims {
            let f = TargetFunction::parse(id, d)?;
            for &eps in eps_list {
                let delta = admissible_delta(&f, eps)?;
                let (_, t) = pipeline(&f, delta, eps)?;
                let mut x = vec![0.0; d];
                x[0] = 0.5;
                for &m in ms {
                    let radius = truncation_radius(d, m, 0.1);
                    let mut rng = ctx.stream(streams::FLIPS).derive(m as u64);
                    let rep = flip_rate(&t, eps, m, &x, n_mc, radius, &mut rng)?;
                    out.push(
                        ctx.check(format!("activation_flips:{id}:d={d}"), rep.theoretical, rep.empirical, rep.stderr, 3.0)
                            .with_m(m)
                            .with_eps(eps)
                            .with_delta(delta),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Flip rate against `m` for one target at `x = 0.5`, with its log-log slope.
pub fn flip_slope(ctx: &Ctx, id: &str, delta: f64, eps: f64, ms: &[usize], n_mc: usize) -> Result<(Vec<BoundReport>, BoundReport)> {
    let f = TargetFunction::parse(id, 1)?;
    let (_, t) = pipeline(&f, delta, eps)?;
    let mut reps = Vec::new();
    for &m in ms {
        let radius = truncation_radius(1, m, 0.1);
        let mut rng = ctx.stream(streams::FLIPS).derive(1 << 40 | m as u64);
        reps.push(flip_rate(&t, eps, m, &[0.5], n_mc, radius, &mut rng)?);
    }
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = reps.iter().map(|r| r.empirical).collect();
    let slope = if ys.iter().all(|&y| y > 0.0) { loglog_slope(&xs, &ys)? } else { f64::NAN };
    Ok((reps, ctx.slope_report(format!("flip_rate_slope:{id}"), slope, -0.65, -0.35).with_eps(eps).with_delta(delta)))
}

/// Fraction of trials whose grid-uniform error of the direct threshold net
/// against `f` is within `2ω + ‖p‖[√(8(d+1)ln(m+1)) + √ln(1/η)]/√m`.
pub fn threshold_uniform(ctx: &Ctx, id: &str, delta: f64, m: usize, eta: f64, trials: usize, required: f64) -> Result<BoundReport> {
    let f = TargetFunction::parse(id, 1)?;
    let h = SmoothedTarget::new(f, delta)?;
    let plan = ThresholdPlan::new(&h)?;
    let grid = ProbeMeasure::grid(1);
    let reference: Vec<f64> = grid.points().iter().map(|x| h.reference(x)).collect();
    let bound = ctx.bound_scale * (2.0 * h.profile().omega + uniform_bounds(plan.mass, m, 1, eta, 1.0)?.threshold_bound);
    let base = ctx.stream(streams::THRESHOLD);
    let hits: Result<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|tr| {
            let net = plan.sample(m, &mut base.derive(tr))?;
            let vals: Result<Vec<f64>> = grid.points().iter().map(|x| Ok(net.eval(x)?)).collect();
            Ok(sup_gap(&vals?, &reference) <= bound)
        })
        .collect();
    let frac = hits?.iter().filter(|&&b| b).count() as f64 / trials as f64;
    Ok(BoundReport::new(format!("threshold_uniform:{id}"), required, frac, 0.0, frac >= required)
        .with_m(m)
        .with_delta(delta)
        .with_eta(eta)
        .with_seed(ctx.seed))
}

/// Output and input truncations of the identity transport (d = 1).
pub fn rkhs(ctx: &Ctx, n: usize) -> Result<Vec<BoundReport>> {
    let t = TransportMap::identity(1)?;
    let probe = ProbeMeasure::line(21)?;
    let mut out = Vec::new();
    for (i, (b_cut, r_cut)) in [(1.5, 1.5), (2.0, 2.5), (3.0, 3.0)].into_iter().enumerate() {
        let mut rng = ctx.stream(streams::RKHS).derive(i as u64);
        let reps = rkhs_truncations(&t, b_cut, r_cut, &probe, n, &mut rng)?;
        for r in reps {
            let name = format!("{}:B={b_cut},r={r_cut}", r.name);
            out.push(ctx.check(name, r.theoretical, r.empirical, r.stderr, 3.0));
        }
    }
    let mut rng = ctx.stream(streams::RKHS).derive(99);
    let none = rkhs_truncations(&t, 1e300, f64::INFINITY, &probe, n, &mut rng)?;
    let zero = none[0].empirical == 0.0 && none[2].empirical == 0.0;
    out.push(BoundReport::new("rkhs_no_truncation", 0.0, none[0].empirical.max(none[2].empirical), 0.0, zero));
    Ok(out)
}

/// `max_j ‖τ_j − w̃_j𝟙[‖w̃_j‖ ≤ R]‖ ≤ B/(ε√m)` with zero tolerance, and the
/// time taken to draw each batch.
pub fn construction(ctx: &Ctx, d: usize, m: usize, eps: f64) -> Result<Vec<(BoundReport, f64)>> {
    let mut out = Vec::new();
    for (i, id) in REGISTRY.iter().enumerate() {
        let f = TargetFunction::parse(id, d)?;
        let delta = admissible_delta(&f, eps)?;
        let (_, t) = pipeline(&f, delta, eps)?;
        let mut rng = ctx.stream(streams::CONSTRUCTION).derive(i as u64);
        let start = Instant::now();
        let batch = draw_batch(&t, m, eps, 0.1, &mut rng)?;
        let secs = start.elapsed().as_secs_f64();
        let rep = ctx.check(format!("construction_bound:{id}:d={d}"), batch.move_bound(), batch.max_move(), 0.0, 0.0);
        out.push((rep.with_m(m).with_eps(eps).with_delta(delta), secs));
    }
    Ok(out)
}

/// Resampling identity, sup-norm bookkeeping and the construction bound.
pub fn transport_suite(ctx: &Ctx) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for (i, id) in ["dirac", "gauss:0.5"].iter().enumerate() {
        let f = TargetFunction::parse(id, 1)?;
        let (params, t) = pipeline(&f, 0.2, 1.0)?;
        let rep = resampling_identity_check(&t, &[0.3], 256, 1.0, 400, ctx.seed.wrapping_add(i as u64))?;
        out.push(BoundReport { name: format!("resampling_identity:{id}"), ..rep });
        out.push(ctx.check(format!("transport_b_formula:{id}"), params.b_formula, params.b, 0.0, 0.0));
        let g = t.grid_estimate().unwrap_or(0.0);
        out.push(ctx.check(format!("transport_grid_sup:{id}"), params.b, g, 0.0, 0.0));
    }
    out.extend(construction(ctx, 2, 10_000, 2.0)?.into_iter().map(|(r, _)| r));
    Ok(out)
}

/// Fake-triple exactness and the linearization identity on random probes.
pub fn network_identities(ctx: &Ctx) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let mut rng = ctx.stream(streams::BUILD).derive(7);
    let h = SmoothedTarget::new(TargetFunction::parse("mix2:0.3,0.4,0.6", 1)?, 0.2)?;
    let plan = ReluDirectPlan::new(&h)?;
    let net = plan.sample(64, &mut rng)?;
    let probe = ProbeMeasure::uniform_ball(1, 1000, &mut rng)?;
    let mut worst = 0.0f64;
    for x in probe.points() {
        let expect = plan.c2 + plan.a2[0] * x[0];
        worst = worst.max((net.fake_contribution(x)? - expect).abs() / (1.0 + expect.abs()));
    }
    out.push(ctx.check("fake_triples_exact", 1e-12, worst, 0.0, 0.0));

    let f = TargetFunction::parse("dirac", 1)?;
    let (_, t) = pipeline(&f, 0.2, 0.05)?;
    let batch = draw_batch(&t, 2000, 0.05, 0.1, &mut rng)?;
    let ntk = FiniteNtkNet::new(batch.clone());
    let relu = FiniteReluNet::new(batch);
    let mut mismatched = 0usize;
    for x in probe.points().iter().take(50) {
        let a = ntk.node_terms(x)?;
        let b = relu.node_terms(x)?;
        let flipped = relu.flipped(x)?;
        mismatched += (0..a.len()).filter(|j| flipped.binary_search(j).is_err() && a[*j] != b[*j]).count();
    }
    out.push(BoundReport::new("linearization_identity", 0.0, mismatched as f64, 0.0, mismatched == 0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps() {
        assert_eq!(sup_gap(&[1.0, 2.0], &[1.5, 0.0]), 2.0);
        assert!((l2_gap(&[1.0, 1.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope_report_scales_interval() {
        let c = Ctx::new(0);
        assert!(c.slope_report("s", -0.5, -0.65, -0.35).pass);
        assert!(!c.slope_report("s", -0.7, -0.65, -0.35).pass);
        assert!(!Ctx::corrupted(0, 0.0).slope_report("s", -0.51, -0.65, -0.35).pass);
    }

    #[test]
    fn admissible_delta_respects_modulus() {
        let f = TargetFunction::parse("cosridge:1", 1).unwrap();
        let delta = admissible_delta(&f, 0.5).unwrap();
        assert!(ContinuityProfile::new(&f, delta).unwrap().omega <= 0.5);
        assert_eq!(admissible_delta(&TargetFunction::parse("dirac", 1).unwrap(), 0.5).unwrap(), 0.2);
    }
}
