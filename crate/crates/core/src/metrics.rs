//! Probe measures, L2(P) and uniform-norm estimators, bound records and the
//! frequency certificates that turn high-probability statements into tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_eta, invalid, Error, Result};
use crate::math::{norm, uniform_ball};
use crate::rng::{tags, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    UniformBall,
    Grid,
    Custom,
}

/// A finite probability measure on the unit ball, given by its support points
/// (equal weights).
#[derive(Clone, Debug)]
pub struct ProbeMeasure {
    kind: ProbeKind,
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ProbeMeasure {
    /// `n` points uniform on the unit ball (normalized Gaussian × radius^{1/d}).
    pub fn uniform_ball(d: usize, n: usize, rng: &mut RngStream) -> Result<Self> {
        check_dim(d)?;
        if n == 0 {
            return Err(invalid("n", "probe measure needs at least one point"));
        }
        let points = (0..n)
            .map(|_| {
                let mut x = vec![0.0; d];
                uniform_ball(rng, &mut x);
                x
            })
            .collect();
        Ok(Self { kind: ProbeKind::UniformBall, dim: d, points })
    }

    /// Default measure: 10⁴ uniform-ball points from a fixed stream of `seed`.
    pub fn default_for(d: usize, seed: u64) -> Result<Self> {
        Self::uniform_ball(d, 10_000, &mut RngStream::new(seed, tags::PROBES))
    }

    /// Dense grid for sup-norm checks: 2001 points on `[−1, 1]` in one
    /// dimension, the 201² square grid masked to the disc in two, and 10⁵
    /// fixed uniform-ball points in three or more.
    pub fn grid(d: usize) -> Self {
        let points = match d {
            1 => (0..2001).map(|i| vec![-1.0 + i as f64 / 1000.0]).collect(),
            2 => {
                let mut pts = Vec::new();
                for i in 0..201 {
                    for j in 0..201 {
                        let x = vec![-1.0 + i as f64 / 100.0, -1.0 + j as f64 / 100.0];
                        if norm(&x) <= 1.0 {
                            pts.push(x);
                        }
                    }
                }
                pts
            }
            _ => {
                let mut rng = RngStream::new(0, tags::PROBES);
                (0..100_000)
                    .map(|_| {
                        let mut x = vec![0.0; d];
                        uniform_ball(&mut rng, &mut x);
                        x
                    })
                    .collect()
            }
        };
        Self { kind: ProbeKind::Grid, dim: d, points }
    }

    /// Evenly spaced grid on `[−1, 1]` with `n` points (one dimension).
    pub fn line(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", "a line grid needs at least two points"));
        }
        let points = (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect();
        Ok(Self { kind: ProbeKind::Grid, dim: 1, points })
    }

    pub fn custom(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("points", "empty probe set"))?;
        check_dim(dim)?;
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if !(norm(p) <= 1.0) {
                return Err(invalid("points", "probe points must lie in the unit ball"));
            }
        }
        Ok(Self { kind: ProbeKind::Custom, dim, points })
    }

    pub fn kind(&self) -> ProbeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `g` at every point, in order.
    pub fn evaluate<F: Fn(&[f64]) -> f64 + Sync>(&self, g: F) -> Vec<f64> {
        par_map(&self.points, g)
    }
}

/// Ordered parallel map over points.
pub fn par_map<F: Fn(&[f64]) -> f64 + Sync>(points: &[Vec<f64>], f: F) -> Vec<f64> {
    points.par_iter().map(|x| f(x)).collect()
}

/// Parallel maximum of `f` (`0` on an empty set).
pub fn par_max<F: Fn(&[f64]) -> f64 + Sync>(points: &[Vec<f64>], f: F) -> f64 {
    par_map(points, f).into_iter().fold(0.0, f64::max)
}

/// `(√mean(v²), standard error)` with the standard error from the delta method.
pub fn l2_of_values(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (mean, se) = mean_se(&sq);
    let est = mean.sqrt();
    if est == 0.0 {
        return (0.0, 0.0);
    }
    (est, se / (2.0 * est))
}

/// `‖g‖_{L2(P)}` with its standard error.
pub fn l2p_norm<F: Fn(&[f64]) -> f64 + Sync>(g: F, probe: &ProbeMeasure) -> (f64, f64) {
    l2_of_values(&probe.evaluate(g))
}

/// `max_x |g(x)|` over the probe points (a lower bound on the sup over the ball).
pub fn sup_norm<F: Fn(&[f64]) -> f64 + Sync>(g: F, probe: &ProbeMeasure) -> f64 {
    par_max(&probe.points, |x| g(x).abs())
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("xs", "slope fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("ys", "log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("xs", "slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// One certificate: a theoretical bound paired with its empirical counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub theoretical: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub pass: bool,
    pub m: Option<usize>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub seed: Option<u64>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, theoretical: f64, empirical: f64, stderr: f64, pass: bool) -> Self {
        Self { name: name.into(), theoretical, empirical, stderr, pass, m: None, eps: None, delta: None, eta: None, seed: None }
    }

    /// Pass iff `empirical ≤ theoretical + k_sigma · stderr`.
    pub fn check(name: impl Into<String>, theoretical: f64, empirical: f64, stderr: f64, k_sigma: f64) -> Self {
        let pass = empirical <= theoretical + k_sigma * stderr;
        Self::new(name, theoretical, empirical, stderr, pass)
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub const CSV_HEADER: [&'static str; 10] =
        ["name", "theoretical", "empirical", "stderr", "pass", "m", "eps", "delta", "eta", "seed"];

    /// Fields in [`Self::CSV_HEADER`] order; missing metadata is empty.
    pub fn csv_record(&self) -> [String; 10] {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        [
            self.name.clone(),
            self.theoretical.to_string(),
            self.empirical.to_string(),
            self.stderr.to_string(),
            self.pass.to_string(),
            opt(self.m),
            opt(self.eps),
            opt(self.delta),
            opt(self.eta),
            opt(self.seed),
        ]
    }
}

/// Outputs of the sampling theorem's bound formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampBounds {
    /// `2(B/√m + εR)[1 + √ln(1/η)]`.
    pub eq1: f64,
    /// `2(B²/(ε m^{3/2}) + BR/m + B/√m + εR)[1 + √ln(1/η)]`.
    pub eq2: f64,
    /// `B/(ε√m)`, the largest distance any weight moves.
    pub tau_move: f64,
    /// `B/(ε√m) + R`, bounding every `‖τ_j‖`.
    pub b_eps: f64,
}

pub fn samp_bounds(b: f64, m: usize, eps: f64, r: f64, eta: f64) -> Result<SampBounds> {
    if !(b > 0.0 && eps > 0.0 && r > 0.0 && m > 0) {
        return Err(invalid("samp_bounds", "B, m, ε and R must be positive"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1], got {eta}")));
    }
    let mf = m as f64;
    let sm = mf.sqrt();
    let bracket = 1.0 + (1.0 / eta).ln().sqrt();
    Ok(SampBounds {
        eq1: 2.0 * (b / sm + eps * r) * bracket,
        eq2: 2.0 * (b * b / (eps * mf * sm) + b * r / mf + b / sm + eps * r) * bracket,
        tau_move: b / (eps * sm),
        b_eps: b / (eps * sm) + r,
    })
}

/// One-sided binomial slack `2√(η(1−η)/trials)`.
pub fn binomial_slack(eta: f64, trials: usize) -> f64 {
    2.0 * (eta * (1.0 - eta) / trials as f64).sqrt()
}

/// Empirical value and bound from one end-to-end trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub empirical: f64,
    pub bound: f64,
}

/// Settings of a frequency certificate.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub name: String,
    pub trials: usize,
    pub eta: f64,
    /// Number of η-events the statement loses (1, 2 or 3).
    pub events: u32,
    pub seed: u64,
    /// Multiplier applied to each trial's bound (`0.5` for negative controls).
    pub bound_scale: f64,
}

impl Certificate {
    pub fn new(name: impl Into<String>, trials: usize, eta: f64, events: u32, seed: u64) -> Result<Self> {
        if trials < 200 {
            return Err(invalid("trials", "frequency certificates need at least 200 trials"));
        }
        check_eta(eta)?;
        Ok(Self { name: name.into(), trials, eta, events, seed, bound_scale: 1.0 })
    }

    /// The same certificate with every bound multiplied by `scale`.
    pub fn shrunk(&self, scale: f64) -> Self {
        Self { name: format!("{}:x{}", self.name, scale), bound_scale: self.bound_scale * scale, ..self.clone() }
    }

    /// Allowed violation frequency `k·η + slack`.
    pub fn allowed(&self) -> f64 {
        self.events as f64 * self.eta + binomial_slack(self.eta, self.trials)
    }

    /// Grade pre-computed trial outcomes.
    pub fn grade(&self, outcomes: &[TrialOutcome]) -> BoundReport {
        let n = outcomes.len().max(1) as f64;
        let violations = outcomes.iter().filter(|o| o.empirical > self.bound_scale * o.bound).count() as f64;
        let freq = violations / outcomes.len().max(1) as f64;
        let se = (freq * (1.0 - freq) / n).sqrt();
        let allowed = self.allowed();
        BoundReport::new(self.name.clone(), allowed, freq, se, freq <= allowed).with_eta(self.eta).with_seed(self.seed)
    }
}

/// Run `trial` on independent streams `RngStream::for_trial(seed, t)`.
pub fn run_trials<F>(seed: u64, trials: usize, trial: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(u64, &mut RngStream) -> Result<TrialOutcome> + Sync,
{
    (0..trials as u64).into_par_iter().map(|t| trial(t, &mut RngStream::for_trial(seed, t))).collect()
}

/// Run trials and grade them in one step.
pub fn certify<F>(cert: &Certificate, trial: F) -> Result<BoundReport>
where
    F: Fn(u64, &mut RngStream) -> Result<TrialOutcome> + Sync,
{
    let outcomes = run_trials(cert.seed, cert.trials, trial)?;
    Ok(cert.grade(&outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn l2_examples() {
        let p = ProbeMeasure::default_for(2, 1).unwrap();
        assert_eq!(l2p_norm(|_| 0.0, &p), (0.0, 0.0));
        let (v, se) = l2p_norm(|_| -1.5, &p);
        assert_eq!((v, se), (1.5, 0.0));
        let u = ProbeMeasure::default_for(1, 2).unwrap();
        let (v, se) = l2p_norm(|x| x[0], &u);
        assert!((v - (1.0f64 / 3.0).sqrt()).abs() <= 3.0 * se, "{v} ± {se}");
    }

    #[test]
    fn probe_points_in_ball() {
        for d in 1..=3 {
            for p in [ProbeMeasure::grid(d), ProbeMeasure::default_for(d, 4).unwrap()] {
                assert!(p.points().iter().all(|x| x.len() == d && norm(x) <= 1.0));
            }
        }
        assert_eq!(ProbeMeasure::grid(1).len(), 2001);
        assert!(ProbeMeasure::custom(vec![vec![2.0]]).is_err());
        assert!(ProbeMeasure::custom(vec![]).is_err());
    }

    #[test]
    fn samp_bounds_example() {
        let s = samp_bounds(10.0, 10_000, 0.1, 5.0, 0.05).unwrap();
        assert!((s.eq1 - 2.0 * 0.6 * (1.0 + 20f64.ln().sqrt())).abs() < 1e-12);
        assert!((s.eq1 - 3.277).abs() < 1e-3);
        let one = samp_bounds(10.0, 100, 0.1, 5.0, 1.0).unwrap();
        assert!((one.eq1 - 2.0 * (1.0 + 0.5)).abs() < 1e-12);
        assert!((s.b_eps - (s.tau_move + 5.0)).abs() < 1e-15);
    }

    #[test]
    fn certificate_with_infinite_bound_passes() {
        let c = Certificate::new("inf", 200, 0.1, 1, 3).unwrap();
        let r = certify(&c, |_, rng| Ok(TrialOutcome { empirical: rng.gen(), bound: f64::INFINITY })).unwrap();
        assert!(r.pass && r.empirical == 0.0);
        assert!(Certificate::new("few", 10, 0.1, 1, 3).is_err());
    }

    #[test]
    fn certificate_detects_violations() {
        let c = Certificate::new("coin", 400, 0.1, 1, 3).unwrap();
        let outcomes = run_trials(3, 400, |_, rng| Ok(TrialOutcome { empirical: rng.gen(), bound: 0.5 })).unwrap();
        assert!(!c.grade(&outcomes).pass);
        let ok = run_trials(3, 400, |_, rng| Ok(TrialOutcome { empirical: rng.gen(), bound: 0.95 })).unwrap();
        assert!(c.grade(&ok).pass);
        assert!(!c.shrunk(0.5).grade(&ok).pass);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [64.0, 256.0, 1024.0, 4096.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn csv_record_layout() {
        let r = BoundReport::new("x", 1.0, 0.5, 0.0, true).with_m(10).with_seed(7);
        let rec = r.csv_record();
        assert_eq!(rec[0], "x");
        assert_eq!(rec[4], "true");
        assert_eq!(rec[5], "10");
        assert_eq!(rec[6], "");
        assert_eq!(rec[9], "7");
    }

    proptest! {
        #[test]
        fn samp_bounds_monotone(b in 2.0f64..100.0, m in 1usize..100_000, eps in 0.01f64..2.0, r in 0.5f64..10.0, eta in 0.001f64..1.0) {
            let base = samp_bounds(b, m, eps, r, eta).unwrap();
            let more_m = samp_bounds(b, m * 2, eps, r, eta).unwrap();
            prop_assert!(more_m.eq1 <= base.eq1 && more_m.eq2 <= base.eq2);
            let more_b = samp_bounds(b * 1.5, m, eps, r, eta).unwrap();
            prop_assert!(more_b.eq1 >= base.eq1 && more_b.eq2 >= base.eq2);
            let more_r = samp_bounds(b, m, eps, r * 1.5, eta).unwrap();
            prop_assert!(more_r.eq1 >= base.eq1 && more_r.eq2 >= base.eq2);
            let more_eps = samp_bounds(b, m, eps * 1.5, r, eta).unwrap();
            prop_assert!(more_eps.eq1 >= base.eq1);
            let smaller_eta = samp_bounds(b, m, eps, r, eta / 2.0).unwrap();
            prop_assert!(smaller_eta.eq1 >= base.eq1 && smaller_eta.eq2 >= base.eq2);
            prop_assert!(base.eq2 >= base.eq1);
        }

        #[test]
        fn l2_triangle_inequality(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let p = ProbeMeasure::default_for(2, 11).unwrap();
            let f = |x: &[f64]| a * x[0] + b;
            let g = |x: &[f64]| c * x[1] * x[0];
            let (nf, sf) = l2p_norm(f, &p);
            let (ng, sg) = l2p_norm(g, &p);
            let (nfg, sfg) = l2p_norm(|x| f(x) + g(x), &p);
            prop_assert!(nfg <= nf + ng + 3.0 * (sf * sf + sg * sg + sfg * sfg).sqrt());
        }
    }
}
