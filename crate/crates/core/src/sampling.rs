//! Resampling of a transport into `m` weight triples, Maurey-type bound
//! formulas, and rejection sampling from signed densities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_eta, check_positive, invalid, Error, Result};
use crate::math::{augment, chi_sample, dot, mean_norm, norm, step, uniform_direction, GaussianLaw};
use crate::metrics::{mean_se, BoundReport};
use crate::rng::RngStream;
use crate::targets::SmoothedTarget;
use crate::transport::TransportMap;

const TWO_PI: f64 = 2.0 * PI;

/// `R = √(d+1) + 2√(ln(m/η))`.
pub fn truncation_radius(d: usize, m: usize, eta: f64) -> f64 {
    ((d + 1) as f64).sqrt() + 2.0 * (m as f64 / eta).ln().max(0.0).sqrt()
}

/// `m` triples `(w̃_j, s_j, τ_j)` with
/// `τ_j = s_j T(w̃_j)/(ε√m) + w̃_j 𝟙[‖w̃_j‖ ≤ R]`, stored as flat blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub(crate) d: usize,
    pub(crate) m: usize,
    pub(crate) eps: f64,
    pub(crate) radius: f64,
    pub(crate) sup_norm: f64,
    pub(crate) w: Vec<f64>,
    pub(crate) s: Vec<f64>,
    pub(crate) tau: Vec<f64>,
}

/// `τ = s T/(ε√m) + w̃ 𝟙[‖w̃‖ ≤ R]`, the single definition used everywhere.
#[inline]
pub fn transported_weight(wt: &[f64], t: &[f64], s: f64, eps: f64, m: usize, radius: f64, out: &mut [f64]) {
    let scale = eps * (m as f64).sqrt();
    let keep = if norm(wt) <= radius { 1.0 } else { 0.0 };
    for ((o, &wi), &ti) in out.iter_mut().zip(wt).zip(t) {
        *o = s * ti / scale + wi * keep;
    }
}

impl SampleBatch {
    pub fn from_parts(
        d: usize,
        eps: f64,
        radius: f64,
        sup_norm: f64,
        w: Vec<f64>,
        s: Vec<f64>,
        tau: Vec<f64>,
    ) -> Result<Self> {
        let k = d + 1;
        let m = s.len();
        if m == 0 || w.len() != m * k || tau.len() != m * k {
            return Err(Error::NetFormat(format!("inconsistent batch blocks for d = {d}, m = {m}")));
        }
        Ok(Self { d, m, eps, radius, sup_norm, w, s, tau })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn w(&self, j: usize) -> &[f64] {
        &self.w[j * (self.d + 1)..(j + 1) * (self.d + 1)]
    }

    pub fn tau(&self, j: usize) -> &[f64] {
        &self.tau[j * (self.d + 1)..(j + 1) * (self.d + 1)]
    }

    pub fn s(&self, j: usize) -> f64 {
        self.s[j]
    }

    pub fn w_block(&self) -> &[f64] {
        &self.w
    }

    pub fn tau_block(&self) -> &[f64] {
        &self.tau
    }

    pub fn s_block(&self) -> &[f64] {
        &self.s
    }

    pub fn max_w_norm(&self) -> f64 {
        (0..self.m).map(|j| norm(self.w(j))).fold(0.0, f64::max)
    }

    /// Whether every `‖w̃_j‖ ≤ R` (the high-probability event).
    pub fn within_radius(&self) -> bool {
        self.max_w_norm() <= self.radius
    }

    /// Number of nodes whose initialization term was dropped.
    pub fn truncated(&self) -> usize {
        (0..self.m).filter(|&j| norm(self.w(j)) > self.radius).count()
    }

    /// `max_j ‖τ_j − w̃_j 𝟙[‖w̃_j‖ ≤ R]‖`.
    pub fn max_move(&self) -> f64 {
        (0..self.m)
            .map(|j| {
                let keep = if norm(self.w(j)) <= self.radius { 1.0 } else { 0.0 };
                let diff: Vec<f64> = self.tau(j).iter().zip(self.w(j)).map(|(t, w)| t - w * keep).collect();
                norm(&diff)
            })
            .fold(0.0, f64::max)
    }

    /// `B/(ε√m)`.
    pub fn move_bound(&self) -> f64 {
        self.sup_norm / (self.eps * (self.m as f64).sqrt())
    }
}

/// Draw `w̃_j ~ N(0, I_{d+1})`, uniform signs, and transported weights `τ_j`.
pub fn draw_batch(t: &TransportMap, m: usize, eps: f64, eta: f64, rng: &mut RngStream) -> Result<SampleBatch> {
    if m == 0 {
        return Err(invalid("m", "width must be at least 1"));
    }
    check_positive("eps", eps)?;
    check_eta(eta)?;
    let d = t.dim();
    let k = d + 1;
    let radius = truncation_radius(d, m, eta);
    let law = GaussianLaw::new(k)?;
    let mut w = vec![0.0; m * k];
    let mut s = vec![0.0; m];
    for j in 0..m {
        law.sample_into(rng, &mut w[j * k..(j + 1) * k]);
        s[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    let mut tau = vec![0.0; m * k];
    tau.par_chunks_mut(k).enumerate().try_for_each(|(j, out)| -> Result<()> {
        let wt = &w[j * k..(j + 1) * k];
        let tv = t.eval(wt)?;
        transported_weight(wt, &tv, s[j], eps, m, radius, out);
        Ok(())
    })?;
    Ok(SampleBatch { d, m, eps, radius, sup_norm: t.sup_norm(), w, s, tau })
}

/// `Σ_j ⟨τ_j, φ_j(x)⟩` with `φ_j(x) = (ε s_j/√m) x̃ step(⟨w̃_j, x̃⟩)`.
pub fn ntk_value(batch: &SampleBatch, x: &[f64]) -> f64 {
    let xt = augment(x);
    let c = batch.eps / (batch.m as f64).sqrt();
    (0..batch.m).map(|j| c * batch.s[j] * step(dot(batch.w(j), &xt)) * dot(batch.tau(j), &xt)).sum()
}

/// Agreement of the trial mean of `Σ_j ⟨τ_j, φ_j(x)⟩` with `E⟨T, Φ(x; ·)⟩`.
///
/// Passes iff the difference is within four combined standard errors.
pub fn resampling_identity_check(
    t: &TransportMap,
    x: &[f64],
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    if norm(x) > 1.0 {
        return Err(invalid("x", "probe point must lie in the unit ball"));
    }
    if trials < 2 {
        return Err(invalid("trials", "need at least two trials"));
    }
    let vals: Result<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|tr| {
            let mut rng = RngStream::for_trial(seed, tr);
            let b = draw_batch(t, m, eps, 0.05, &mut rng)?;
            Ok(ntk_value(&b, x))
        })
        .collect();
    let (mean, se) = mean_se(&vals?);
    let (reference, ref_se) = t.expected_inner(x)?;
    let diff = (mean - reference).abs();
    let tol_se = (se * se + ref_se * ref_se).sqrt();
    Ok(BoundReport::new("resampling_identity", 0.0, diff, tol_se, diff <= 4.0 * tol_se)
        .with_m(m)
        .with_eps(eps)
        .with_seed(seed))
}

fn check_bound_args(m: usize, eta: f64) -> Result<()> {
    if m == 0 {
        return Err(invalid("m", "width must be at least 1"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

/// `sup_g (1 + √(2 ln(1/η))) / √m`.
pub fn maurey_bound(sup_g: f64, m: usize, eta: f64) -> Result<f64> {
    check_bound_args(m, eta)?;
    Ok(sup_g * (1.0 + (2.0 * (1.0 / eta).ln()).sqrt()) / (m as f64).sqrt())
}

/// `‖p‖_{L1} sup_g (1 + √(2 ln(1/η))) / √m`.
pub fn signed_maurey_bound(p_mass: f64, sup_g: f64, m: usize, eta: f64) -> Result<f64> {
    Ok(p_mass * maurey_bound(sup_g, m, eta)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformBounds {
    /// `‖p‖ [√(8(d+1) ln(m+1)) + √ln(1/η)] / √m`.
    pub threshold_bound: f64,
    /// `4r‖p‖ [1 + √ln(1/η)] / √m`.
    pub relu_bound: f64,
}

pub fn uniform_bounds(p_mass: f64, m: usize, d: usize, eta: f64, r: f64) -> Result<UniformBounds> {
    if m < 2 {
        return Err(invalid("m", "uniform bounds need m ≥ 2"));
    }
    check_bound_args(m, eta)?;
    let sm = (m as f64).sqrt();
    let l = (1.0 / eta).ln().sqrt();
    Ok(UniformBounds {
        threshold_bound: p_mass * ((8.0 * (d + 1) as f64 * ((m + 1) as f64).ln()).sqrt() + l) / sm,
        relu_bound: 4.0 * r * p_mass * (1.0 + l) / sm,
    })
}

type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A signed density on `ℝ^{d+1}` supported on `{|b| ≤ ‖w‖ ≤ r}` with the
/// envelope `|p(w̃)| ≤ C e^{−‖w‖²/(2s²)} 𝟙[|b| ≤ ‖w‖]`.
///
/// The envelope is proportional to the proposal law `‖w‖ = s·χ_{d+1}`,
/// uniform direction, `b ~ U[−‖w‖, ‖w‖]`, whose total mass is
/// `2C(2πs²)^{d/2} s E‖N(0, I_d)‖`.
#[derive(Clone)]
pub struct SignedDensity {
    d: usize,
    density: Density,
    env_const: f64,
    env_scale: f64,
    radius: f64,
}

impl fmt::Debug for SignedDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignedDensity")
            .field("d", &self.d)
            .field("env_const", &self.env_const)
            .field("env_scale", &self.env_scale)
            .field("radius", &self.radius)
            .finish()
    }
}

impl SignedDensity {
    pub fn new(
        d: usize,
        density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        env_const: f64,
        env_scale: f64,
        radius: f64,
    ) -> Result<Self> {
        crate::error::check_dim(d)?;
        if !(env_const >= 0.0 && env_const.is_finite()) {
            return Err(invalid("env_const", "must be finite and non-negative"));
        }
        check_positive("env_scale", env_scale)?;
        if !(radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        Ok(Self { d, density: Arc::new(density), env_const, env_scale, radius })
    }

    /// `p₁(w̃) = 2π |ĥ(w)| sin(2π(b − θ_h(w))) 𝟙[|b| ≤ ‖w‖]`.
    pub fn threshold(h: &SmoothedTarget) -> Result<Self> {
        h.require_fourier()?;
        let env = h.envelope()?;
        let d = h.dim();
        let hc = h.clone();
        Self::new(
            d,
            move |wt: &[f64]| {
                let (w, b) = wt.split_at(d);
                if b[0].abs() > norm(w) {
                    return 0.0;
                }
                let s = hc.spec(w);
                TWO_PI * s.modulus * (TWO_PI * (b[0] - s.phase)).sin()
            },
            TWO_PI * env.amplitude,
            env.scale,
            f64::INFINITY,
        )
    }

    /// `p₂(w̃) = −4π² |ĥ(w)| cos(2π(θ_h(w) − b)) 𝟙[|b| ≤ ‖w‖ ≤ r₂]`.
    pub fn relu(h: &SmoothedTarget, r2: f64) -> Result<Self> {
        h.require_fourier()?;
        let env = h.envelope()?;
        let d = h.dim();
        let hc = h.clone();
        Self::new(
            d,
            move |wt: &[f64]| {
                let (w, b) = wt.split_at(d);
                let rho = norm(w);
                if b[0].abs() > rho || rho > r2 {
                    return 0.0;
                }
                let s = hc.spec(w);
                -4.0 * PI * PI * s.modulus * (TWO_PI * (s.phase - b[0])).cos()
            },
            4.0 * PI * PI * env.amplitude,
            env.scale,
            r2,
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, wt: &[f64]) -> f64 {
        (self.density)(wt)
    }

    pub fn envelope(&self, wt: &[f64]) -> f64 {
        let (w, b) = wt.split_at(self.d);
        let rho = norm(w);
        if b[0].abs() > rho {
            return 0.0;
        }
        self.env_const * (-rho * rho / (2.0 * self.env_scale * self.env_scale)).exp()
    }

    pub fn envelope_mass(&self) -> f64 {
        let s = self.env_scale;
        2.0 * self.env_const * (TWO_PI * s * s).powf(self.d as f64 / 2.0) * s * mean_norm(self.d)
    }

    /// One proposal from the normalized envelope.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.d;
        let rho = self.env_scale * chi_sample(rng, d + 1);
        uniform_direction(rng, &mut out[..d]);
        out[..d].iter_mut().for_each(|v| *v *= rho);
        out[d] = rho * (2.0 * rng.gen::<f64>() - 1.0);
    }

    /// `|p|/envelope` at a proposal, failing if the envelope is violated.
    fn ratio(&self, wt: &[f64]) -> Result<(f64, f64)> {
        let p = self.value(wt);
        let e = self.envelope(wt);
        if p.abs() > e * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::BoundViolated(format!("|p| = {} exceeds the envelope {e} at w̃ = {wt:?}", p.abs())));
        }
        Ok((p, if e > 0.0 { p.abs() / e } else { 0.0 }))
    }
}

/// Accepted points `w̃_j` (flat block) with signs `s_j = sgn p(w̃_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSample {
    pub d: usize,
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub proposals: u64,
}

impl SignedSample {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.w[j * (self.d + 1)..(j + 1) * (self.d + 1)]
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.len() as f64 / self.proposals as f64
        }
    }
}

/// Rejection sampling of `m` points from `|p|/‖p‖_{L1}`.
pub fn sample_signed(p: &SignedDensity, m: usize, rng: &mut RngStream) -> Result<SignedSample> {
    let k = p.d + 1;
    let budget = 10_000 * m as u64 + 1_000_000;
    let mut w = Vec::with_capacity(m * k);
    let mut s = Vec::with_capacity(m);
    let mut wt = vec![0.0; k];
    let mut proposals = 0u64;
    while s.len() < m {
        if proposals >= budget || p.env_const == 0.0 {
            return Err(Error::SamplerExhausted { proposals, accepted: s.len() });
        }
        proposals += 1;
        p.propose(rng, &mut wt);
        let (val, ratio) = p.ratio(&wt)?;
        if rng.gen::<f64>() < ratio {
            w.extend_from_slice(&wt);
            s.push(if val >= 0.0 { 1.0 } else { -1.0 });
        }
    }
    Ok(SignedSample { d: p.d, w, s, proposals })
}

/// `(‖p‖_{L1}, standard error)` as the envelope mass times the mean of
/// `|p|/envelope` over `n` proposals.
pub fn estimate_mass(p: &SignedDensity, n: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    if n < 10_000 {
        return Err(invalid("n", "mass estimation needs at least 10⁴ proposals"));
    }
    if p.env_const == 0.0 {
        return Ok((0.0, 0.0));
    }
    let k = p.d + 1;
    let chunks = 64u64;
    let per = n.div_ceil(chunks as usize);
    let base = rng.derive(0);
    let parts: Result<Vec<Vec<f64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = base.derive(c);
            let mut wt = vec![0.0; k];
            (0..per)
                .map(|_| {
                    p.propose(&mut r, &mut wt);
                    Ok(p.ratio(&wt)?.1)
                })
                .collect()
        })
        .collect();
    let ratios: Vec<f64> = parts?.into_iter().flatten().collect();
    let (mean, se) = mean_se(&ratios);
    let mass = p.envelope_mass();
    Ok((mass * mean, mass * se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::targets::TargetFunction;
    use crate::transport::pipeline;

    #[test]
    fn zero_transport_batch() {
        let t = TransportMap::zero(2).unwrap();
        let b = draw_batch(&t, 500, 0.3, 0.1, &mut RngStream::new(1, 0)).unwrap();
        for j in 0..b.m() {
            let keep = if norm(b.w(j)) <= b.radius() { 1.0 } else { 0.0 };
            let expect: Vec<f64> = b.w(j).iter().map(|v| v * keep).collect();
            assert_eq!(b.tau(j), &expect[..]);
        }
        assert_eq!(b.max_move(), 0.0);
    }

    #[test]
    fn batch_invariant_is_bit_exact() {
        let f = TargetFunction::parse("dirac", 1).unwrap();
        let (_, t) = pipeline(&f, 0.2, 0.5).unwrap();
        let b = draw_batch(&t, 1000, 0.5, 0.05, &mut RngStream::new(2, 0)).unwrap();
        let mut out = vec![0.0; 2];
        for j in 0..b.m() {
            let tv = t.eval(b.w(j)).unwrap();
            transported_weight(b.w(j), &tv, b.s(j), b.eps(), b.m(), b.radius(), &mut out);
            assert_eq!(&out[..], b.tau(j));
        }
        assert!(b.max_move() <= b.move_bound());
        assert!((b.radius() - truncation_radius(1, 1000, 0.05)).abs() < 1e-15);
    }

    #[test]
    fn radius_event_frequency() {
        let t = TransportMap::zero(1).unwrap();
        let misses: usize = (0..200u64)
            .into_par_iter()
            .map(|tr| {
                let b = draw_batch(&t, 1000, 1.0, 0.1, &mut RngStream::for_trial(5, tr)).unwrap();
                usize::from(!b.within_radius())
            })
            .sum();
        assert!(misses as f64 / 200.0 <= 0.1);
    }

    #[test]
    fn bound_formula_examples() {
        assert!((maurey_bound(3.0, 100, 1.0).unwrap() - 0.3).abs() < 1e-15);
        let v = maurey_bound(2.0, 100, 0.05).unwrap();
        assert!((v - 2.0 * (1.0 + (2.0 * 20f64.ln()).sqrt()) / 10.0).abs() < 1e-14);
        assert!((v - 0.6898).abs() < 1e-3);
        assert!((maurey_bound(2.0, 400, 0.05).unwrap() - v / 2.0).abs() < 1e-15);
        let s = signed_maurey_bound(20.0, 1.0, 10_000, 0.05).unwrap();
        assert!((s - 0.6895).abs() < 1e-3);
        assert!((signed_maurey_bound(20.0, 1.0, 40_000, 0.05).unwrap() - s / 2.0).abs() < 1e-15);
        assert_eq!(signed_maurey_bound(5.0, 2.0, 100, 1.0).unwrap(), 1.0);
        let u = uniform_bounds(20.0, 10_000, 1, 0.05, 2.0).unwrap();
        assert!((u.threshold_bound - 2.774).abs() < 2e-3, "{}", u.threshold_bound);
        assert!((u.relu_bound - 4.370).abs() < 5e-3, "{}", u.relu_bound);
        assert!(uniform_bounds(20.0, 1, 1, 0.05, 2.0).is_err());
        let far = uniform_bounds(20.0, 100_000_000, 1, 0.05, 2.0).unwrap();
        assert!(far.threshold_bound < 0.1 * u.threshold_bound);
    }

    #[test]
    fn positive_density_gives_positive_signs() {
        let p = SignedDensity::new(1, |wt: &[f64]| if wt[1].abs() <= wt[0].abs() { (-wt[0] * wt[0] / 2.0).exp() } else { 0.0 }, 1.0, 1.0, f64::INFINITY)
            .unwrap();
        let s = sample_signed(&p, 2000, &mut RngStream::new(3, 0)).unwrap();
        assert!(s.s.iter().all(|v| *v == 1.0));
        assert!((s.acceptance_rate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_violation_detected() {
        let p = SignedDensity::new(1, |_| 5.0, 1.0, 1.0, f64::INFINITY).unwrap();
        assert!(matches!(sample_signed(&p, 10, &mut RngStream::new(3, 1)), Err(Error::BoundViolated(_))));
    }

    #[test]
    fn sampler_matches_quadrature_cdf() {
        // The b-tilt makes the w-marginal differ from the proposal's.
        let p = SignedDensity::new(
            1,
            |wt: &[f64]| {
                let (w, b) = (wt[0], wt[1]);
                if b.abs() > w.abs() || w.abs() > 2.0 {
                    return 0.0;
                }
                (-w * w / 2.0).exp() * (0.5 + 0.5 * (PI * b).cos().powi(2)) * if b > 0.0 { 1.0 } else { -1.0 }
            },
            1.0,
            1.0,
            2.0,
        )
        .unwrap();
        let n = 100_000;
        let s = sample_signed(&p, n, &mut RngStream::new(4, 0)).unwrap();
        // Marginal density of w: e^{−w²/2} ∫_{−|w|}^{|w|} (0.5 + 0.5 cos²πb) db.
        let inner = |w: f64| 1.5 * w.abs() + (TWO_PI * w.abs()).sin() / (4.0 * PI);
        let dens = |w: f64| (-w * w / 2.0).exp() * inner(w);
        let total = quad::composite(-2.0, 2.0, 64, 16, dens);
        let mut ws: Vec<f64> = (0..n).map(|j| s.point(j)[0]).collect();
        ws.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        for (i, &x) in ws.iter().enumerate().step_by(97) {
            let cdf = quad::composite(-2.0, x, 64, 16, dens) / total;
            ks = ks.max((cdf - i as f64 / n as f64).abs()).max((cdf - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.01, "KS = {ks}");
        assert!(ws.iter().all(|w| w.abs() <= 2.0));
    }

    #[test]
    fn threshold_density_sign_split_and_mass() {
        let h = SmoothedTarget::new(TargetFunction::parse("dirac", 1).unwrap(), 0.2).unwrap();
        let p = SignedDensity::threshold(&h).unwrap();
        let (mass, se) = estimate_mass(&p, 400_000, &mut RngStream::new(6, 0)).unwrap();
        // Oracle: ∫∫ |p| and ∫∫ p⁺ by nested quadrature in (w, b).
        let rmax = 12.0;
        let inner = |w: f64, pos: bool| {
            quad::composite(-w.abs(), w.abs(), 8, 16, |b| {
                let v = p.value(&[w, b]);
                if pos { v.max(0.0) } else { v.abs() }
            })
        };
        let abs_mass = quad::composite(-rmax, rmax, 96, 16, |w| inner(w, false));
        let pos_mass = quad::composite(-rmax, rmax, 96, 16, |w| inner(w, true));
        assert!((mass - abs_mass).abs() <= 4.0 * se, "{mass} ± {se} vs {abs_mass}");
        let bound = 2.0 * (TWO_PI / (TWO_PI * 0.04f64).powi(2)).sqrt();
        assert!((bound - 19.95).abs() < 0.01 && mass <= bound);
        let s = sample_signed(&p, 20_000, &mut RngStream::new(6, 1)).unwrap();
        let frac = s.s.iter().filter(|v| **v > 0.0).count() as f64 / s.len() as f64;
        assert!((frac - pos_mass / abs_mass).abs() < 0.02, "{frac} vs {}", pos_mass / abs_mass);
        for j in 0..s.len() {
            let pt = s.point(j);
            assert!(pt[1].abs() <= pt[0].abs());
        }
    }

    #[test]
    fn mass_is_linear_and_reproducible() {
        let f = TargetFunction::parse("gauss:0.5", 1).unwrap();
        let h1 = SmoothedTarget::new(f.clone(), 0.2).unwrap();
        let h2 = SmoothedTarget::from_profile(f.scaled(2.0), *h1.profile()).unwrap();
        let p1 = SignedDensity::threshold(&h1).unwrap();
        let p2 = SignedDensity::threshold(&h2).unwrap();
        let (a, sa) = estimate_mass(&p1, 200_000, &mut RngStream::new(7, 0)).unwrap();
        let (b, sb) = estimate_mass(&p1, 200_000, &mut RngStream::new(7, 1)).unwrap();
        assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt());
        let (c, sc) = estimate_mass(&p2, 200_000, &mut RngStream::new(7, 2)).unwrap();
        assert!((c - 2.0 * a).abs() <= 3.0 * (sc * sc + 4.0 * sa * sa).sqrt());
        let zero = SmoothedTarget::from_profile(f.scaled(0.0), *h1.profile()).unwrap();
        assert_eq!(estimate_mass(&SignedDensity::threshold(&zero).unwrap(), 10_000, &mut RngStream::new(7, 3)).unwrap(), (0.0, 0.0));
        assert!(estimate_mass(&p1, 100, &mut RngStream::new(7, 4)).is_err());
    }

    #[test]
    fn resampling_identity_examples() {
        let z = TransportMap::zero(1).unwrap();
        let r = resampling_identity_check(&z, &[0.2], 50, 1.0, 50, 1).unwrap();
        assert!(r.pass);
        let f = TargetFunction::parse("dirac", 1).unwrap();
        let (_, t) = pipeline(&f, 0.2, 0.5).unwrap();
        let a = resampling_identity_check(&t, &[0.0], 500, 1.0, 400, 2).unwrap();
        assert!(a.pass, "{a:?}");
        let b = resampling_identity_check(&t, &[0.0], 500, 0.1, 400, 3).unwrap();
        assert!(b.pass, "{b:?}");
    }
}
