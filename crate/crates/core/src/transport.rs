//! Transport mappings `w̃ ↦ T(w̃) ∈ ℝ^{d+1}` and the pipeline constants of the
//! Gaussian-smoothing construction.
//!
//! Fourier transports only move the bias coordinate: `T(w̃) = (0, …, 0, p(w̃))`.
//! With `c₀ = 2c_F`,
//!
//! ```text
//! generic:  p(w̃) = c₀ + 2π |ĥ(w)| / G(w̃) · sin(2π(b − θ_h(w))) 𝟙[|b| ≤ ‖w‖ ≤ r]
//! gaussian: p(w̃) = c₀ + K |f̂(φw)| e^{b²/2} sin(2π(φb − θ(φw))) 𝟙[|b| ≤ ‖w‖ ≤ r]
//! ```
//!
//! where `K = 2π(2πφ²)^{(d+1)/2}` and `f̂` is the source spectrum. The first
//! reproduces `F_r` in expectation, the second `F_{φr}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, invalid, Error, Result};
use crate::math::{augment, dot, norm, norm_sq, step, GaussianLaw};
use crate::metrics::{mean_se, BoundReport, ProbeMeasure};
use crate::representation::{infinite_threshold_net, spectral_l1, SpectralConstants};
use crate::rng::RngStream;
use crate::targets::{Envelope, SmoothedTarget, TargetFunction};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    GenericFourier,
    GaussianFourier,
    Zero,
    Identity,
    Custom,
}

type CustomMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct TransportMap {
    dim: usize,
    kind: TransportKind,
    sup_norm: f64,
    trunc_radius: f64,
    const_term: f64,
    phi: f64,
    k_const: f64,
    bound_formula: Option<f64>,
    grid_estimate: Option<f64>,
    source: Option<SmoothedTarget>,
    consts: Option<SpectralConstants>,
    custom: Option<CustomMap>,
}

impl fmt::Debug for TransportMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportMap")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("sup_norm", &self.sup_norm)
            .field("trunc_radius", &self.trunc_radius)
            .field("const_term", &self.const_term)
            .finish()
    }
}

impl TransportMap {
    /// `T ≡ 0`.
    pub fn zero(d: usize) -> Result<Self> {
        crate::error::check_dim(d)?;
        Ok(Self::bare(d, TransportKind::Zero, 0.0))
    }

    /// `T(w̃) = w̃`; unbounded, used for the RKHS truncation checks.
    pub fn identity(d: usize) -> Result<Self> {
        crate::error::check_dim(d)?;
        Ok(Self::bare(d, TransportKind::Identity, f64::INFINITY))
    }

    /// User map with a declared sup norm `B`, enforced at every evaluation.
    pub fn custom(d: usize, sup_norm: f64, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Result<Self> {
        crate::error::check_dim(d)?;
        if !(sup_norm >= 0.0) {
            return Err(invalid("sup_norm", "must be non-negative"));
        }
        let mut t = Self::bare(d, TransportKind::Custom, sup_norm);
        t.custom = Some(Arc::new(f));
        Ok(t)
    }

    fn bare(d: usize, kind: TransportKind, sup_norm: f64) -> Self {
        Self {
            dim: d,
            kind,
            sup_norm,
            trunc_radius: f64::INFINITY,
            const_term: 0.0,
            phi: 1.0,
            k_const: 0.0,
            bound_formula: None,
            grid_estimate: None,
            source: None,
            consts: None,
            custom: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> TransportKind {
        self.kind
    }

    /// `B`, a certified upper bound on `sup ‖T(w̃)‖`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `max(2, B)`, the form required by the sampling bounds.
    pub fn theorem_b(&self) -> f64 {
        self.sup_norm.max(2.0)
    }

    pub fn trunc_radius(&self) -> f64 {
        self.trunc_radius
    }

    pub fn const_term(&self) -> f64 {
        self.const_term
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Closed-form bound printed alongside `B` for the Fourier transports.
    pub fn bound_formula(&self) -> Option<f64> {
        self.bound_formula
    }

    /// Grid maximum of `|p|` over the truncation region (a lower estimate of `B`).
    pub fn grid_estimate(&self) -> Option<f64> {
        self.grid_estimate
    }

    pub fn source(&self) -> Option<&SmoothedTarget> {
        self.source.as_ref()
    }

    pub fn constants(&self) -> Option<&SpectralConstants> {
        self.consts.as_ref()
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self.kind, TransportKind::GenericFourier | TransportKind::GaussianFourier)
    }

    /// The bias-slot weight `p(w̃)` of a Fourier transport.
    pub fn bias_weight(&self, wt: &[f64]) -> f64 {
        let d = self.dim;
        let (w, b) = wt.split_at(d);
        let b = b[0];
        let rho_sq = norm_sq(w);
        let rho = rho_sq.sqrt();
        if b.abs() > rho || rho > self.trunc_radius {
            return self.const_term;
        }
        let h = self.source.as_ref().expect("Fourier transport has a source");
        match self.kind {
            TransportKind::GenericFourier => {
                let s = h.spec(w);
                if s.modulus == 0.0 {
                    return self.const_term;
                }
                let log_ratio = s.modulus.ln() + 0.5 * (d + 1) as f64 * TWO_PI.ln() + 0.5 * (rho_sq + b * b);
                self.const_term + TWO_PI * log_ratio.exp() * (TWO_PI * (b - s.phase)).sin()
            }
            TransportKind::GaussianFourier => {
                let v: Vec<f64> = w.iter().map(|x| x * self.phi).collect();
                let s = h.source_spec(&v);
                if s.modulus == 0.0 {
                    return self.const_term;
                }
                let mag = (s.modulus.ln() + 0.5 * b * b).exp();
                self.const_term + self.k_const * mag * (TWO_PI * (self.phi * b - s.phase)).sin()
            }
            _ => unreachable!("bias weight of a non-Fourier transport"),
        }
    }

    /// `T(w̃)` written into `out`, with the runtime check `‖T(w̃)‖ ≤ B`.
    pub fn eval_into(&self, wt: &[f64], out: &mut [f64]) -> Result<()> {
        if wt.len() != self.dim + 1 || out.len() != self.dim + 1 {
            return Err(Error::DimensionMismatch { expected: self.dim + 1, got: wt.len() });
        }
        match self.kind {
            TransportKind::Zero => out.fill(0.0),
            TransportKind::Identity => out.copy_from_slice(wt),
            TransportKind::Custom => {
                let v = (self.custom.as_ref().expect("custom map"))(wt);
                if v.len() != out.len() {
                    return Err(Error::DimensionMismatch { expected: out.len(), got: v.len() });
                }
                out.copy_from_slice(&v);
            }
            TransportKind::GenericFourier | TransportKind::GaussianFourier => {
                out.fill(0.0);
                out[self.dim] = self.bias_weight(wt);
            }
        }
        let n = norm(out);
        if n > self.sup_norm * (1.0 + 1e-12) {
            return Err(Error::BoundViolated(format!("‖T(w̃)‖ = {n} exceeds B = {} at w̃ = {wt:?}", self.sup_norm)));
        }
        Ok(())
    }

    pub fn eval(&self, wt: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim + 1];
        self.eval_into(wt, &mut out)?;
        Ok(out)
    }

    /// `E_w̃ ⟨T(w̃), Φ(x; w̃)⟩` and its standard error.
    ///
    /// Fourier transports use the closed-form bias integral plus quadrature
    /// over `w` (d ≤ 2; `F_r` for the generic map, `F_{φr}` for the Gaussian
    /// one); other maps use Monte Carlo over `G`.
    pub fn expected_inner(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        match self.kind {
            TransportKind::Zero => Ok((0.0, 0.0)),
            TransportKind::Identity => Ok(((norm_sq(x) + 1.0).sqrt() / TWO_PI.sqrt(), 0.0)),
            TransportKind::GenericFourier | TransportKind::GaussianFourier if self.dim <= 2 => {
                let h = self.source.as_ref().expect("source");
                let c = self.consts.as_ref().expect("constants");
                let r = if self.kind == TransportKind::GaussianFourier { self.phi * self.trunc_radius } else { self.trunc_radius };
                Ok((infinite_threshold_net(h, c, r, x)?, 0.0))
            }
            _ => self.expected_inner_mc(x, 1_000_000, &mut RngStream::new(0, crate::rng::tags::CONSTANTS)),
        }
    }

    /// Plain Monte Carlo estimate of `E_w̃ ⟨T(w̃), Φ(x; w̃)⟩` over `n` Gaussian draws.
    pub fn expected_inner_mc(&self, x: &[f64], n: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
        let xt = augment(x);
        let vals = self.mc_values(n, rng, |wt, t| dot(t, &xt) * step(dot(wt, &xt)))?;
        Ok(mean_se(&vals))
    }

    /// `‖T‖²_H = E‖T(w̃)‖²` by Monte Carlo.
    pub fn hilbert_norm_sq(&self, n: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
        let vals = self.mc_values(n, rng, |_, t| norm_sq(t))?;
        Ok(mean_se(&vals))
    }

    fn mc_values<F>(&self, n: usize, rng: &mut RngStream, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Sync,
    {
        let law = GaussianLaw::new(self.dim + 1)?;
        let chunks = 64u64;
        let per = n.div_ceil(chunks as usize);
        let base = rng.derive(0);
        let parts: Result<Vec<Vec<f64>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut r = base.derive(c);
                let mut wt = vec![0.0; self.dim + 1];
                let mut t = vec![0.0; self.dim + 1];
                let mut out = Vec::with_capacity(per);
                for _ in 0..per {
                    law.sample_into(&mut r, &mut wt);
                    self.eval_into(&wt, &mut t)?;
                    out.push(f(&wt, &t));
                }
                Ok(out)
            })
            .collect();
        Ok(parts?.into_iter().flatten().collect())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_infinite() {
        return Err(invalid("r", "an infinite truncation radius gives an unbounded transport"));
    }
    if !(r >= 0.0) {
        return Err(invalid("r", format!("must be non-negative, got {r}")));
    }
    Ok(())
}

/// `sup_{ρ ≤ r} A e^{−ρ²/(2s²)} e^{κρ²}` for the monotone Gaussian profile.
fn sup_tilted(env: Envelope, kappa: f64, r: f64) -> f64 {
    let inv = if env.scale.is_infinite() { 0.0 } else { 1.0 / (2.0 * env.scale * env.scale) };
    let rate = kappa - inv;
    env.amplitude * if rate > 0.0 { (rate * r * r).exp() } else { 1.0 }
}

/// Grid search of `|p|` over `(‖w‖, b)` on the truncation region followed by
/// compass refinement from the best node.
fn grid_sup(t: &TransportMap) -> f64 {
    let d = t.dim;
    let r = t.trunc_radius;
    let dirs: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..16)
            .map(|i| {
                let a = TWO_PI * i as f64 / 16.0;
                let mut u = vec![0.0; d];
                u[0] = a.cos();
                u[1] = a.sin();
                u
            })
            .collect(),
    };
    let eval = |u: &[f64], rho: f64, beta: f64| {
        let mut wt: Vec<f64> = u.iter().map(|v| v * rho).collect();
        wt.push(beta * rho);
        t.bias_weight(&wt).abs()
    };
    let mut best = t.const_term.abs();
    for u in &dirs {
        let mut arg = (0.0, 0.0, 0.0);
        for i in 0..=100 {
            let rho = r * i as f64 / 100.0;
            for j in 0..=100 {
                let beta = -1.0 + 2.0 * j as f64 / 100.0;
                let v = eval(u, rho, beta);
                if v > arg.0 {
                    arg = (v, rho, beta);
                }
            }
        }
        let (mut v, mut rho, mut beta) = arg;
        let (mut sr, mut sb) = (r / 100.0, 0.02);
        for _ in 0..200 {
            let mut moved = false;
            for (dr, db) in [(sr, 0.0), (-sr, 0.0), (0.0, sb), (0.0, -sb)] {
                let nr = (rho + dr).clamp(0.0, r);
                let nb = (beta + db).clamp(-1.0, 1.0);
                let nv = eval(u, nr, nb);
                if nv > v {
                    (v, rho, beta, moved) = (nv, nr, nb, true);
                }
            }
            if !moved {
                sr *= 0.5;
                sb *= 0.5;
            }
        }
        best = best.max(v);
    }
    best
}

fn fourier_transport(h: &SmoothedTarget, r: f64, kind: TransportKind) -> Result<TransportMap> {
    h.require_fourier()?;
    let d = h.dim();
    let consts = SpectralConstants::compute(h)?;
    let c0 = 2.0 * consts.c_threshold;
    let phi = h.phi();
    let mut t = TransportMap::bare(d, kind, f64::INFINITY);
    t.trunc_radius = r;
    t.const_term = c0;
    t.phi = phi;
    t.source = Some(h.clone());
    t.consts = Some(consts);
    Ok(t)
}

/// Generic Fourier transport `T_r` with `E⟨T_r, Φ(x; ·)⟩ = F_r(x)`.
///
/// `B` is the analytic bound `|c₀| + 2πA(2π)^{(d+1)/2} sup_{ρ ≤ r} e^{ρ²(1 − 1/(2φ_h²))}`
/// from the Gaussian envelope `|ĥ| ≤ A e^{−ρ²/(2φ_h²)}`; the grid maximum is
/// stored as a lower estimate.
pub fn build_generic_transport(h: &SmoothedTarget, r: f64) -> Result<TransportMap> {
    check_radius(r)?;
    let mut t = fourier_transport(h, r, TransportKind::GenericFourier)?;
    let d = h.dim();
    let env = h.envelope()?;
    let ratio = (TWO_PI).powf((d + 1) as f64 / 2.0) * sup_tilted(env, 1.0, r);
    t.sup_norm = t.const_term.abs() + TWO_PI * ratio;
    let h0 = h.value(&vec![0.0; d]);
    t.bound_formula = Some(2.0 * h0.abs() + 2.0 * spectral_l1(h)? + TWO_PI * ratio);
    let g = grid_sup(&t);
    if g > t.sup_norm * (1.0 + 1e-9) {
        return Err(Error::BoundViolated(format!("grid sup {g} exceeds the analytic B = {}", t.sup_norm)));
    }
    t.grid_estimate = Some(g);
    Ok(t)
}

/// Gaussian-change-of-variables transport with `E⟨T_r, Φ(x; ·)⟩ = F_{φr}(x)`.
///
/// `B = |c₀| + K sup_{ρ ≤ r} A e^{−φ²ρ²/(2φ_s²)} e^{ρ²/2}` from the source
/// envelope, checked against `2[M + (2πφ²)^{d/2} M_f (1 + √(2π³φ²) e^{r²/2})]`.
pub fn build_gaussian_transport(h: &SmoothedTarget, r: f64) -> Result<TransportMap> {
    check_radius(r)?;
    let d = h.dim();
    let sd = (d as f64).sqrt();
    if r < sd {
        return Err(invalid("r", format!("must be at least √d = {sd}, got {r}")));
    }
    let mut t = fourier_transport(h, r, TransportKind::GaussianFourier)?;
    let phi = t.phi;
    let k = TWO_PI * (TWO_PI * phi * phi).powf((d + 1) as f64 / 2.0);
    t.k_const = k;
    let src = h.base().source_envelope(h.delta())?;
    // In the rescaled variable the source envelope has width φ_s/φ.
    let scaled = Envelope { amplitude: src.amplitude, scale: src.scale / phi };
    t.sup_norm = t.const_term.abs() + k * sup_tilted(scaled, 0.5, r);
    let m = h.profile().sup_norm;
    let m_f = h.source_l1()?;
    let formula = 2.0 * (m + (TWO_PI * phi * phi).powf(d as f64 / 2.0) * m_f
        * (1.0 + (2.0 * PI.powi(3) * phi * phi).sqrt() * (r * r / 2.0).exp()));
    if t.sup_norm > formula * (1.0 + 1e-12) {
        return Err(Error::BoundViolated(format!("B = {} exceeds the closed-form bound {formula}", t.sup_norm)));
    }
    t.bound_formula = Some(formula);
    let g = grid_sup(&t);
    if g > t.sup_norm * (1.0 + 1e-9) {
        return Err(Error::BoundViolated(format!("grid sup {g} exceeds B = {}", t.sup_norm)));
    }
    t.grid_estimate = Some(g);
    Ok(t)
}

/// `4π(2πφ²)^{(d+1)/2} M_f (√d + 3) e^{−(r−√d)²/4}`, the uniform error of the
/// Gaussian transport with respect to `h` on the unit ball.
pub fn gaussian_transport_error_bound(d: usize, phi: f64, m_f: f64, r: f64) -> f64 {
    let sd = (d as f64).sqrt();
    4.0 * PI * (TWO_PI * phi * phi).powf((d + 1) as f64 / 2.0) * m_f * (sd + 3.0) * (-(r - sd).powi(2) / 4.0).exp()
}

/// Constants of the Gaussian-smoothing pipeline for a target, scale and accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    pub d: usize,
    pub delta: f64,
    pub eps: f64,
    pub omega: f64,
    pub sup_norm: f64,
    pub alpha: f64,
    pub phi: f64,
    pub r: f64,
    pub b: f64,
    pub b_formula: f64,
    pub m_f: f64,
    pub c0: f64,
}

/// `r = √d + 2√(ln(4π M_f (√d+3) (2πφ²)^{(d+1)/2} / ω))`, clamped to `≥ √d`.
pub fn pipeline_radius(d: usize, phi: f64, m_f: f64, omega: f64) -> f64 {
    let sd = (d as f64).sqrt();
    let arg = 4.0 * PI * m_f * (sd + 3.0) * (TWO_PI * phi * phi).powf((d + 1) as f64 / 2.0) / omega;
    sd + 2.0 * arg.ln().max(0.0).sqrt()
}

/// Smoothed target, transport and constants for `(f, δ, ε)`.
pub fn pipeline(f: &TargetFunction, delta: f64, eps: f64) -> Result<(TransportParams, TransportMap)> {
    check_positive("eps", eps)?;
    let h = SmoothedTarget::new(f.clone(), delta)?;
    let p = *h.profile();
    if eps < p.omega {
        return Err(Error::Precondition(format!("ε = {eps} is below ω_f(δ) = {}", p.omega)));
    }
    let d = f.dim();
    let m_f = h.source_l1()?;
    let phi = h.phi();
    let r = pipeline_radius(d, phi, m_f, p.omega);
    let t = build_gaussian_transport(&h, r)?;
    let params = TransportParams {
        d,
        delta,
        eps,
        omega: p.omega,
        sup_norm: p.sup_norm,
        alpha: p.alpha,
        phi,
        r,
        b: t.sup_norm(),
        b_formula: t.bound_formula().unwrap_or(f64::NAN),
        m_f,
        c0: t.const_term(),
    };
    Ok((params, t))
}

pub fn pipeline_params(f: &TargetFunction, delta: f64, eps: f64) -> Result<TransportParams> {
    Ok(pipeline(f, delta, eps)?.0)
}

/// Output- and input-truncation checks for a transport.
///
/// Returns three reports: the output truncation against `√2‖T‖²_H / B_cut`,
/// the same against the sharper `√2‖T‖²_H / B_cut²`, and the input truncation
/// against `√2‖T‖_H e^{−(r_cut − √d)²/4}`. Inner products use common random
/// numbers: the same `n` Gaussian draws for all maps and probe points.
pub fn rkhs_truncations(
    t: &TransportMap,
    b_cut: f64,
    r_cut: f64,
    probe: &ProbeMeasure,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<BoundReport>> {
    check_positive("b_cut", b_cut)?;
    let d = t.dim;
    let sd = (d as f64).sqrt();
    if r_cut < sd {
        return Err(invalid("r_cut", format!("must be at least √d = {sd}")));
    }
    if probe.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: probe.dim() });
    }
    let law = GaussianLaw::new(d + 1)?;
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let wt = law.sample(rng);
        let tv = t.eval(&wt)?;
        draws.push((wt, tv));
    }
    let norms: Vec<f64> = draws.iter().map(|(_, tv)| norm_sq(tv)).collect();
    let (hn_sq, _) = mean_se(&norms);
    let hn = hn_sq.sqrt();

    // Differences ⟨T_cut − T, Φ(x; w̃)⟩ per draw, reduced to (max |mean|, its se).
    let worst = |keep: &(dyn Fn(&[f64], &[f64]) -> bool + Sync)| -> (f64, f64) {
        let per_point: Vec<(f64, f64)> = probe
            .points()
            .par_iter()
            .map(|x| {
                let xt = augment(x);
                let diffs: Vec<f64> = draws
                    .iter()
                    .map(|(wt, tv)| if keep(wt, tv) { 0.0 } else { -dot(tv, &xt) * step(dot(wt, &xt)) })
                    .collect();
                let (m, se) = mean_se(&diffs);
                (m.abs(), se)
            })
            .collect();
        per_point.into_iter().fold((0.0, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc })
    };
    let (out_err, out_se) = worst(&|_, tv| norm(tv) <= b_cut);
    let (in_err, in_se) = worst(&|wt, _| norm(wt) <= r_cut);
    let s2 = std::f64::consts::SQRT_2;
    Ok(vec![
        BoundReport::check("rkhs_output_truncation", s2 * hn_sq / b_cut, out_err, out_se, 3.0),
        BoundReport::check("rkhs_output_truncation_squared", s2 * hn_sq / (b_cut * b_cut), out_err, out_se, 3.0),
        BoundReport::check("rkhs_input_truncation", s2 * hn * (-(r_cut - sd).powi(2) / 4.0).exp(), in_err, in_se, 3.0),
    ])
}
