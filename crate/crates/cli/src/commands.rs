//! The `bounds`, `build`, `verify` and `sweep` subcommands.

use std::io::Write;
use std::time::Instant;

use ntkt_core::metrics::{loglog_slope, samp_bounds, BoundReport, ProbeMeasure};
use ntkt_core::networks::{relu_mass_bound, relu_radius, relu_radius_printed, FiniteNtkNet, FiniteReluNet, NetFile, ReluDirectPlan, ThresholdPlan};
use ntkt_core::representation::{infinite_relu_net, infinite_threshold_net, SpectralConstants};
use ntkt_core::sampling::{draw_batch, signed_maurey_bound, truncation_radius, uniform_bounds};
use ntkt_core::targets::SmoothedTarget;
use ntkt_core::transport::pipeline;
use ntkt_core::RngStream;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode, SeedSource};
use crate::error::{CliError, Result};
use crate::experiments::{self as ex, streams, Ctx};

/// Version line of every CSV file.
pub const CSV_SCHEMA: &str = "# schema=1";

/// Constants of both pipelines at one smoothing scale; no sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub delta: f64,
    pub omega: f64,
    pub alpha: f64,
    pub phi: f64,
    /// Transport truncation radius `r`.
    pub r: f64,
    /// Initialization truncation radius `R` at width `m`.
    pub trunc_r: f64,
    pub b: f64,
    pub b_eps: f64,
    pub m: usize,
    pub eq1: f64,
    pub eq2: f64,
    /// `(B/ε)²`.
    pub width_ntk: f64,
    /// ReLU truncation radius of the direct network.
    pub r2: f64,
    /// `(4 r₂ ‖p₂‖_{L1} [1 + √ln(1/η)] / ε)²` with the a-priori mass bound.
    pub width_direct: f64,
    /// Unscaled radius `√d + 2√ln(24π²(√d+7)² L1/ω)`.
    pub r2_printed: f64,
    /// `width_direct` with `r2_printed` in place of `r₂`.
    pub width_direct_printed: f64,
}

/// Constant table for every `δ` of the config. `m` defaults to `⌈(B/ε)²⌉`.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let f = cfg.target_fn()?;
    let mut rows = Vec::new();
    for delta in cfg.deltas() {
        let (p, t) = pipeline(&f, delta, cfg.eps)?;
        let h = t.source().expect("Fourier transport");
        let width_ntk = (p.b / cfg.eps).powi(2);
        let m = cfg.m.unwrap_or_else(|| width_ntk.ceil().clamp(2.0, 1e18) as usize);
        let trunc_r = truncation_radius(f.dim(), m, cfg.eta);
        let sb = samp_bounds(p.b.max(2.0), m, cfg.eps, trunc_r, cfg.eta)?;
        let env = h.envelope()?;
        let r2 = relu_radius(f.dim(), env.amplitude, env.scale, p.omega);
        let bracket = 1.0 + (1.0 / cfg.eta).ln().sqrt();
        let mass = relu_mass_bound(h)?;
        let width_direct = (4.0 * r2 * mass * bracket / cfg.eps).powi(2);
        let r2_printed = relu_radius_printed(f.dim(), p.m_f, p.omega);
        let width_direct_printed = (4.0 * r2_printed * mass * bracket / cfg.eps).powi(2);
        rows.push(BoundsRow {
            delta,
            omega: p.omega,
            alpha: p.alpha,
            phi: p.phi,
            r: p.r,
            trunc_r,
            b: p.b,
            b_eps: sb.b_eps,
            m,
            eq1: sb.eq1,
            eq2: sb.eq2,
            width_ntk,
            r2,
            width_direct,
            r2_printed,
            width_direct_printed,
        });
    }
    Ok(rows)
}

/// Fitted exponents in `1/δ` of the three width columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthExponents {
    pub ntk: f64,
    pub direct: f64,
    pub direct_printed: f64,
}

pub fn width_exponents(rows: &[BoundsRow]) -> Result<WidthExponents> {
    let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.delta).collect();
    let fit = |col: fn(&BoundsRow) -> f64| -> Result<f64> {
        let ys: Vec<f64> = rows.iter().map(col).collect();
        Ok(loglog_slope(&inv, &ys)?)
    };
    Ok(WidthExponents { ntk: fit(|r| r.width_ntk)?, direct: fit(|r| r.width_direct)?, direct_printed: fit(|r| r.width_direct_printed)? })
}

pub fn write_bounds_table(rows: &[BoundsRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to replay a `build` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub build: String,
    /// Seconds; only recorded with `--timing` so replays stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    pub reports: Vec<BoundReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nets: Vec<NetFile>,
}

pub fn build_id() -> String {
    format!("ntkt-cli {}", env!("CARGO_PKG_VERSION"))
}

fn eval_all(points: &[Vec<f64>], g: impl Fn(&[f64]) -> ntkt_core::Result<f64>) -> Result<Vec<f64>> {
    let v: ntkt_core::Result<Vec<f64>> = points.iter().map(|x| g(x)).collect();
    Ok(v?)
}

/// Builds the nets of `cfg.mode` at width `cfg.m` and grades their probe
/// errors against the matching single-draw bounds.
pub fn cmd_build(cfg: &ExperimentConfig, seed: u64, seed_source: SeedSource, ctx: &Ctx, timing: bool) -> Result<RunRecord> {
    cfg.validate()?;
    let m = cfg.m.ok_or_else(|| CliError::Config("build needs a single width m".into()))?;
    let start = Instant::now();
    let f = cfg.target_fn()?;
    let probe = cfg.probe_measure(seed)?;
    let pts = probe.points();
    let d = cfg.d;
    let eta = cfg.eta;
    let mut reports = Vec::new();
    let mut nets = Vec::new();
    let tag = |name: &str| format!("{name}:{}:d={d}", cfg.target);

    if cfg.mode.uses_transport() {
        let (p, t) = pipeline(&f, cfg.delta, cfg.eps)?;
        let reference = ex::infinite_values(&t, pts)?;
        let batch = draw_batch(&t, m, cfg.eps, eta, &mut RngStream::new(seed, streams::BUILD))?;
        let sb = samp_bounds(p.b.max(2.0), m, cfg.eps, batch.radius(), eta)?;
        let ntk = FiniteNtkNet::new(batch.clone());
        let ntk_vals = eval_all(pts, |x| ntk.eval(x))?;
        let meta = |r: BoundReport| r.with_m(m).with_eps(cfg.eps).with_delta(cfg.delta).with_eta(eta).with_seed(seed);
        if cfg.mode.includes(Mode::Ntk) {
            let err = ex::l2_gap(&ntk_vals, &reference);
            reports.push(meta(BoundReport::check(tag("ntk_l2_error"), ctx.bound_scale * sb.eq1, err, 0.0, 0.0)));
            if cfg.save_nets {
                nets.push(NetFile::from(&ntk));
            }
        }
        if cfg.mode.includes(Mode::Relu) {
            let relu = FiniteReluNet::new(batch);
            let relu_vals = eval_all(pts, |x| relu.eval(x))?;
            let gap = ex::l2_gap(&ntk_vals, &relu_vals);
            reports.push(meta(BoundReport::check(tag("relu_linearization_gap"), ctx.bound_scale * sb.eq2, gap, 0.0, 0.0)));
            if cfg.save_nets {
                nets.push(NetFile::from(&relu));
            }
        }
    }

    let direct = [Mode::Threshold, Mode::ReluDirect].iter().any(|&k| cfg.mode.includes(k));
    if direct {
        let h = SmoothedTarget::new(f.clone(), cfg.delta)?;
        let omega = h.profile().omega;
        let consts = SpectralConstants::compute(&h)?;
        let target = eval_all(pts, |x| Ok(h.reference(x)))?;
        let meta = |r: BoundReport| r.with_m(m).with_delta(cfg.delta).with_eta(eta).with_seed(seed);
        if cfg.mode.includes(Mode::Threshold) {
            let plan = ThresholdPlan::new(&h)?;
            let net = plan.sample(m, &mut RngStream::new(seed, streams::BUILD).derive(1))?;
            let vals = eval_all(pts, |x| net.eval(x))?;
            let inf = eval_all(pts, |x| infinite_threshold_net(&h, &consts, f64::INFINITY, x))?;
            let maurey = signed_maurey_bound(plan.mass, 1.0, m, eta)?;
            let uniform = 2.0 * omega + uniform_bounds(plan.mass, m, d, eta, 1.0)?.threshold_bound;
            reports.push(meta(BoundReport::check(tag("threshold_l2_sampling"), ctx.bound_scale * maurey, ex::l2_gap(&vals, &inf), 0.0, 0.0)));
            reports.push(meta(BoundReport::check(tag("threshold_uniform_error"), ctx.bound_scale * uniform, ex::sup_gap(&vals, &target), 0.0, 0.0)));
            if cfg.save_nets {
                nets.push(NetFile::from(&net));
            }
        }
        if cfg.mode.includes(Mode::ReluDirect) {
            let plan = ReluDirectPlan::new(&h)?;
            let net = plan.sample(m, &mut RngStream::new(seed, streams::BUILD).derive(2))?;
            let vals = eval_all(pts, |x| net.eval(x))?;
            let inf = eval_all(pts, |x| infinite_relu_net(&h, &consts, plan.r2, x))?;
            let uniform = uniform_bounds(plan.mass, m, d, eta, plan.r2)?.relu_bound;
            reports.push(meta(BoundReport::check(tag("relu_direct_sampling"), ctx.bound_scale * uniform, ex::sup_gap(&vals, &inf), 0.0, 0.0)));
            reports.push(meta(BoundReport::check(
                tag("relu_direct_uniform_error"),
                ctx.bound_scale * (3.0 * omega + uniform),
                ex::sup_gap(&vals, &target),
                0.0,
                0.0,
            )));
            if cfg.save_nets {
                nets.push(NetFile::from(&net));
            }
        }
    }

    let wall_time = timing.then(|| start.elapsed().as_secs_f64());
    Ok(RunRecord { config: cfg.clone(), seed, seed_source, build: build_id(), wall_time, reports, nets })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gauss,
    Fourier,
    Transport,
    Sampling,
    Networks,
    Rkhs,
    All,
}

impl std::str::FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gauss" => Self::Gauss,
            "fourier" => Self::Fourier,
            "transport" => Self::Transport,
            "sampling" => Self::Sampling,
            "networks" => Self::Networks,
            "rkhs" => Self::Rkhs,
            "all" => Self::All,
            _ => return Err(CliError::Config(format!("unknown suite {s:?}; expected gauss, fourier, transport, sampling, networks, rkhs or all"))),
        })
    }
}

impl Suite {
    const EACH: [Suite; 6] = [Self::Gauss, Self::Fourier, Self::Transport, Self::Sampling, Self::Networks, Self::Rkhs];
}

/// Property suites at moderate sample sizes.
pub fn cmd_verify(suite: Suite, ctx: &Ctx) -> Result<Vec<BoundReport>> {
    if suite == Suite::All {
        let mut out = Vec::new();
        for s in Suite::EACH {
            out.extend(cmd_verify(s, ctx)?);
        }
        return Ok(out);
    }
    Ok(match suite {
        Suite::Gauss => ex::gauss_tails(ctx, &[1, 2, 3, 4, 5], 100_000)?,
        Suite::Fourier => {
            let mut out = ex::representation(ctx, 0.2, 40.0, 1e-3)?;
            out.extend(ex::convolution(ctx, &[1], &[0.1, 0.2])?);
            out
        }
        Suite::Transport => ex::transport_suite(ctx)?,
        Suite::Sampling => {
            let mut out: Vec<BoundReport> =
                ex::certificates(ctx, 200, 0.1, 256)?.into_iter().map(|p| p.certificate).collect();
            out.push(ex::threshold_uniform(ctx, "dirac", 0.2, 1024, 0.1, 200, 0.9)?);
            out
        }
        Suite::Networks => {
            let mut out = ex::network_identities(ctx)?;
            out.extend(ex::flips(ctx, &["dirac", "gauss:0.5"], &[1], &[1.0], &[1000], 200_000)?);
            out
        }
        Suite::Rkhs => ex::rkhs(ctx, 20_000)?,
        Suite::All => unreachable!(),
    })
}

pub fn write_reports(reports: &[BoundReport], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BoundReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep output row. `kind` is `error` for a per-trial L2(P) error and
/// `slope_m`, `width_exponent_ntk` or `width_exponent_direct` for fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: String,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    pub trial: Option<usize>,
    pub value: f64,
}

/// NTK width sweeps per `δ` and, with at least three `δ`, the width-table
/// exponents. Needs at least three sweep points.
pub fn cmd_sweep(cfg: &ExperimentConfig, ctx: &Ctx) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let ms = cfg.widths();
    let deltas = cfg.deltas();
    if ms.len().max(1) * deltas.len() < 3 {
        return Err(CliError::Config(format!(
            "a sweep needs at least 3 points, got {} widths x {} deltas",
            ms.len(),
            deltas.len()
        )));
    }
    let f = cfg.target_fn()?;
    let probe: ProbeMeasure = cfg.probe_measure(ctx.seed)?;
    let mut rows = Vec::new();
    for &delta in &deltas {
        if ms.is_empty() {
            break;
        }
        let (rate, slope) = ex::ntk_rate(ctx, &f, delta, cfg.eps, cfg.eta, &ms, cfg.trials, &probe)?;
        let mut batch: Vec<SweepRow> = rate
            .into_iter()
            .map(|r| SweepRow { kind: "error".into(), m: Some(r.m), delta: Some(delta), trial: Some(r.trial), value: r.error })
            .collect();
        batch.sort_by_key(|a| (a.m, a.trial));
        rows.extend(batch);
        if ms.len() >= 2 {
            rows.push(SweepRow { kind: "slope_m".into(), m: None, delta: Some(delta), trial: None, value: slope });
        }
    }
    if deltas.len() >= 3 {
        let table = cmd_bounds(&ExperimentConfig { m: None, m_list: None, ..cfg.clone() })?;
        let e = width_exponents(&table)?;
        for (kind, value) in [("width_exponent_ntk", e.ntk), ("width_exponent_direct", e.direct), ("width_exponent_direct_printed", e.direct_printed)] {
            rows.push(SweepRow { kind: kind.into(), m: None, delta: None, trial: None, value });
        }
    }
    Ok(rows)
}

pub fn write_sweep(rows: &[SweepRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
