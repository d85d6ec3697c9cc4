//! Finite-width evaluators: the NTK linearization, the shallow ReLU network
//! built from transported weights, and the direct threshold and ReLU
//! networks sampled from signed densities.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, invalid, Error, Result};
use crate::math::{augment, dot, norm, relu, step, GaussianLaw};
use crate::metrics::BoundReport;
use crate::representation::SpectralConstants;
use crate::rng::{tags, RngStream};
use crate::sampling::{estimate_mass, sample_signed, transported_weight, SampleBatch, SignedDensity};
use crate::targets::{SmoothedTarget, TargetFunction};
use crate::transport::TransportMap;

const TWO_PI: f64 = 2.0 * PI;
const MASS_SAMPLES: usize = 400_000;

fn check_x(d: usize, x: &[f64]) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    Ok(())
}

/// `x ↦ Σ_j ⟨τ_j, φ_j(x)⟩` with frozen activations `step(⟨w̃_j, x̃⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteNtkNet {
    pub batch: SampleBatch,
}

impl FiniteNtkNet {
    pub fn new(batch: SampleBatch) -> Self {
        Self { batch }
    }

    /// Per-node terms `(ε s_j/√m) step(⟨w̃_j, x̃⟩) ⟨τ_j, x̃⟩`.
    pub fn node_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        let b = &self.batch;
        check_x(b.d, x)?;
        let xt = augment(x);
        let c = b.eps / (b.m as f64).sqrt();
        Ok((0..b.m).map(|j| c * b.s[j] * step(dot(b.w(j), &xt)) * dot(b.tau(j), &xt)).collect())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.node_terms(x)?.iter().sum())
    }
}

/// `x ↦ (ε/√m) Σ_j s_j σ(⟨τ_j, x̃⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteReluNet {
    pub batch: SampleBatch,
}

impl FiniteReluNet {
    pub fn new(batch: SampleBatch) -> Self {
        Self { batch }
    }

    pub fn node_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        let b = &self.batch;
        check_x(b.d, x)?;
        let xt = augment(x);
        let c = b.eps / (b.m as f64).sqrt();
        Ok((0..b.m).map(|j| c * b.s[j] * relu(dot(b.tau(j), &xt))).collect())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.node_terms(x)?.iter().sum())
    }

    /// Indices of nodes whose activation differs between `w̃_j` and `τ_j` at `x`.
    pub fn flipped(&self, x: &[f64]) -> Result<Vec<usize>> {
        let b = &self.batch;
        check_x(b.d, x)?;
        let xt = augment(x);
        Ok((0..b.m).filter(|&j| step(dot(b.w(j), &xt)) != step(dot(b.tau(j), &xt))).collect())
    }
}

/// `2B√2 / (ε√(mπ))`.
pub fn flip_bound(b: f64, eps: f64, m: usize) -> f64 {
    2.0 * b * 2f64.sqrt() / (eps * (m as f64 * PI).sqrt())
}

/// `√d + 2√(max(0, ln(ε√(mπ)/(B√2))))`.
pub fn required_flip_radius(d: usize, b: f64, eps: f64, m: usize) -> f64 {
    let arg = eps * (m as f64 * PI).sqrt() / (b * 2f64.sqrt());
    (d as f64).sqrt() + 2.0 * arg.ln().max(0.0).sqrt()
}

/// Monte Carlo estimate of `E |step(⟨w̃, x̃⟩) − step(⟨τ, x̃⟩)|` against
/// `2B√2/(ε√(mπ))`; passes iff the estimate is within three standard errors.
pub fn flip_rate(
    t: &TransportMap,
    eps: f64,
    m: usize,
    x: &[f64],
    n_mc: usize,
    radius: f64,
    rng: &mut RngStream,
) -> Result<BoundReport> {
    let d = t.dim();
    check_x(d, x)?;
    check_positive("eps", eps)?;
    if m == 0 || n_mc == 0 {
        return Err(invalid("m", "width and sample count must be positive"));
    }
    let b = t.sup_norm();
    // With B = 0 the transported direction is w̃ itself inside the radius.
    let need = if b == 0.0 { 0.0 } else { required_flip_radius(d, b, eps, m) };
    if radius < need {
        return Err(Error::Precondition(format!("flip-rate radius {radius} is below the required {need}")));
    }
    let xt = augment(x);
    let law = GaussianLaw::new(d + 1)?;
    let chunks = 64u64;
    let per = n_mc.div_ceil(chunks as usize);
    let base = rng.derive(tags::FLIPS);
    let counts: Result<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = base.derive(c);
            let mut wt = vec![0.0; d + 1];
            let mut tv = vec![0.0; d + 1];
            let mut tau = vec![0.0; d + 1];
            let mut flips = 0usize;
            for _ in 0..per {
                law.sample_into(&mut r, &mut wt);
                let s = if r.gen::<bool>() { 1.0 } else { -1.0 };
                t.eval_into(&wt, &mut tv)?;
                transported_weight(&wt, &tv, s, eps, m, radius, &mut tau);
                if step(dot(&wt, &xt)) != step(dot(&tau, &xt)) {
                    flips += 1;
                }
            }
            Ok(flips)
        })
        .collect();
    let n = (per * chunks as usize) as f64;
    let rate = counts?.iter().sum::<usize>() as f64 / n;
    let se = (rate * (1.0 - rate) / n).sqrt();
    Ok(BoundReport::check("activation_flips", flip_bound(b, eps, m), rate, se, 3.0).with_m(m).with_eps(eps))
}

/// `L1 (2πφ²)^{d/2}`, the common factor of the direct-network constant bounds.
fn direct_scale(h: &SmoothedTarget) -> Result<f64> {
    let phi = h.phi();
    Ok(h.source_l1()? * (TWO_PI * phi * phi).powf(h.dim() as f64 / 2.0))
}

/// `4π √d φ L1 (2πφ²)^{d/2}`, the bound on `‖p₁‖_{L1}`.
pub fn threshold_mass_bound(h: &SmoothedTarget) -> Result<f64> {
    Ok(2.0 * TWO_PI * (h.dim() as f64).sqrt() * h.phi() * direct_scale(h)?)
}

/// `8π² √d φ L1 (2πφ²)^{d/2}`, the bound on `‖p₂‖_{L1}`.
pub fn relu_mass_bound(h: &SmoothedTarget) -> Result<f64> {
    Ok(8.0 * PI * PI * (h.dim() as f64).sqrt() * h.phi() * direct_scale(h)?)
}

fn check_mass(name: &str, mass: f64, se: f64, bound: f64) -> Result<()> {
    if mass > bound + 4.0 * se + 1e-12 {
        return Err(Error::BoundViolated(format!("{name} mass {mass} ± {se} exceeds {bound}")));
    }
    Ok(())
}

/// Constants and signed density of the direct threshold network.
#[derive(Clone, Debug)]
pub struct ThresholdPlan {
    pub dim: usize,
    /// `c₁ = ∫ |ĥ| cos(2π(θ_h − ‖w‖)) dw`.
    pub c1: f64,
    pub mass: f64,
    pub mass_se: f64,
    pub c1_bound: f64,
    pub mass_bound: f64,
    pub density: SignedDensity,
}

impl ThresholdPlan {
    pub fn new(h: &SmoothedTarget) -> Result<Self> {
        let d = h.dim();
        let consts = SpectralConstants::compute(h)?;
        let density = SignedDensity::threshold(h)?;
        let (mass, mass_se) = estimate_mass(&density, MASS_SAMPLES, &mut RngStream::new(0, tags::MASS))?;
        let scale = direct_scale(h)?;
        let c1_bound = scale;
        let mass_bound = threshold_mass_bound(h)?;
        let c1 = consts.c_threshold;
        if c1.abs() > c1_bound * (1.0 + 1e-9) + 4.0 * consts.stderr {
            return Err(Error::BoundViolated(format!("|c₁| = {} exceeds {c1_bound}", c1.abs())));
        }
        check_mass("threshold", mass, mass_se, mass_bound)?;
        Ok(Self { dim: d, c1, mass, mass_se, c1_bound, mass_bound, density })
    }

    pub fn sample(&self, m: usize, rng: &mut RngStream) -> Result<ThresholdNet> {
        if m == 0 {
            return Err(invalid("m", "width must be at least 1"));
        }
        if self.mass == 0.0 {
            return Ok(ThresholdNet { d: self.dim, m, c1: self.c1, mass: 0.0, w: Vec::new(), s: Vec::new() });
        }
        let smp = sample_signed(&self.density, m, rng)?;
        Ok(ThresholdNet { d: self.dim, m, c1: self.c1, mass: self.mass, w: smp.w, s: smp.s })
    }
}

/// `x ↦ c₁ + (‖p₁‖/m) Σ_j s_j step(⟨w̃_j, x̃⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdNet {
    d: usize,
    m: usize,
    c1: f64,
    mass: f64,
    w: Vec<f64>,
    s: Vec<f64>,
}

impl ThresholdNet {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn nodes(&self) -> usize {
        self.s.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_x(self.d, x)?;
        let xt = augment(x);
        let k = self.d + 1;
        let sum: f64 = self.s.iter().enumerate().map(|(j, s)| s * step(dot(&self.w[j * k..(j + 1) * k], &xt))).sum();
        Ok(self.c1 + self.mass / self.m as f64 * sum)
    }
}

pub fn build_threshold_net(f: &TargetFunction, delta: f64, m: usize, rng: &mut RngStream) -> Result<ThresholdNet> {
    let h = SmoothedTarget::new(f.clone(), delta)?;
    ThresholdPlan::new(&h)?.sample(m, rng)
}

/// `√d + 2√(ln(24π²(√d+7)² L1 / ω))`, the printed ReLU truncation radius.
pub fn relu_radius_printed(d: usize, l1: f64, omega: f64) -> f64 {
    let sd = (d as f64).sqrt();
    sd + 2.0 * (24.0 * PI * PI * (sd + 7.0).powi(2) * l1 / omega).ln().max(0.0).sqrt()
}

/// `φ_e ρ` with `ρ = √d + 2√(ln(24π²(√d+7)² A (2π)^{d/2} φ_e^{d+2} / ω))`,
/// where `A e^{−‖w‖²/(2φ_e²)}` is the envelope of `ĥ`.
pub fn relu_radius(d: usize, amplitude: f64, scale: f64, omega: f64) -> f64 {
    let sd = (d as f64).sqrt();
    let arg = 24.0 * PI * PI * (sd + 7.0).powi(2) * amplitude * TWO_PI.powf(d as f64 / 2.0) * scale.powi(d as i32 + 2) / omega;
    scale * (sd + 2.0 * arg.ln().max(0.0).sqrt())
}

/// Constants and signed density of the direct ReLU network.
#[derive(Clone, Debug)]
pub struct ReluDirectPlan {
    pub dim: usize,
    pub r2: f64,
    pub r2_printed: f64,
    /// `c₂ = ∫ |ĥ| [cos(2π(θ_h − ‖w‖)) − 2π‖w‖ sin(2π(θ_h − ‖w‖))] dw`.
    pub c2: f64,
    /// `a₂ = −2π ∫ w |ĥ| sin(2π(θ_h − ‖w‖)) dw`.
    pub a2: Vec<f64>,
    pub mass: f64,
    pub mass_se: f64,
    pub c2_bound: f64,
    pub a2_bound: f64,
    pub mass_bound: f64,
    pub density: SignedDensity,
}

impl ReluDirectPlan {
    pub fn new(h: &SmoothedTarget) -> Result<Self> {
        let d = h.dim();
        let consts = SpectralConstants::compute(h)?;
        let env = h.envelope()?;
        let omega = h.profile().omega;
        let r2 = relu_radius(d, env.amplitude, env.scale, omega);
        let r2_printed = relu_radius_printed(d, h.source_l1()?, omega);
        let density = SignedDensity::relu(h, r2)?;
        let (mass, mass_se) = estimate_mass(&density, MASS_SAMPLES, &mut RngStream::new(1, tags::MASS))?;
        let scale = direct_scale(h)?;
        let sd = (d as f64).sqrt();
        let phi = h.phi();
        let c2_bound = scale * (1.0 + TWO_PI * phi * sd);
        let a2_bound = TWO_PI * sd * phi * scale;
        let mass_bound = relu_mass_bound(h)?;
        let (c2, a2) = (consts.c_relu, consts.linear);
        let slack = 4.0 * consts.stderr;
        if c2.abs() > c2_bound * (1.0 + 1e-9) + slack {
            return Err(Error::BoundViolated(format!("|c₂| = {} exceeds {c2_bound}", c2.abs())));
        }
        if norm(&a2) > a2_bound * (1.0 + 1e-9) + slack {
            return Err(Error::BoundViolated(format!("‖a₂‖ = {} exceeds {a2_bound}", norm(&a2))));
        }
        check_mass("relu", mass, mass_se, mass_bound)?;
        Ok(Self { dim: d, r2, r2_printed, c2, a2, mass, mass_se, c2_bound, a2_bound, mass_bound, density })
    }

    pub fn sample(&self, m: usize, rng: &mut RngStream) -> Result<ReluDirectNet> {
        if m == 0 {
            return Err(invalid("m", "width must be at least 1"));
        }
        let k = self.dim + 1;
        let (mut w, mut s) = if self.mass == 0.0 {
            (Vec::new(), Vec::new())
        } else {
            let smp = sample_signed(&self.density, m, rng)?;
            (smp.w, smp.s.iter().map(|v| v * self.mass).collect::<Vec<_>>())
        };
        let mf = m as f64;
        let mut constant = vec![0.0; k];
        constant[self.dim] = self.c2.abs();
        w.extend_from_slice(&constant);
        s.push(if self.c2 < 0.0 { -mf } else { mf });
        let mut lin = self.a2.clone();
        lin.push(0.0);
        w.extend_from_slice(&lin);
        s.push(mf);
        w.extend(lin.iter().map(|v| -v));
        s.push(-mf);
        Ok(ReluDirectNet { d: self.dim, m, mass: self.mass, w, s })
    }
}

/// `x ↦ (1/m) Σ_{j ≤ m+3} s_j σ(⟨w̃_j, x̃⟩)`; the last three nodes are the
/// constant and linear triples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluDirectNet {
    d: usize,
    m: usize,
    mass: f64,
    w: Vec<f64>,
    s: Vec<f64>,
}

impl ReluDirectNet {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn nodes(&self) -> usize {
        self.s.len()
    }

    fn sum_range(&self, xt: &[f64], lo: usize, hi: usize) -> f64 {
        let k = self.d + 1;
        (lo..hi).map(|j| self.s[j] * relu(dot(&self.w[j * k..(j + 1) * k], xt))).sum::<f64>() / self.m as f64
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_x(self.d, x)?;
        Ok(self.sum_range(&augment(x), 0, self.s.len()))
    }

    /// Contribution of the three appended triples, `c₂ + a₂ᵀx`.
    pub fn fake_contribution(&self, x: &[f64]) -> Result<f64> {
        check_x(self.d, x)?;
        let n = self.s.len();
        Ok(self.sum_range(&augment(x), n - 3, n))
    }
}

pub fn build_relu_direct_net(f: &TargetFunction, delta: f64, m: usize, rng: &mut RngStream) -> Result<ReluDirectNet> {
    let h = SmoothedTarget::new(f.clone(), delta)?;
    ReluDirectPlan::new(&h)?.sample(m, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Ntk,
    Relu,
    Threshold,
    ReluDirect,
}

impl NetKind {
    fn code(self) -> u8 {
        match self {
            Self::Ntk => 0,
            Self::Relu => 1,
            Self::Threshold => 2,
            Self::ReluDirect => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => Self::Ntk,
            1 => Self::Relu,
            2 => Self::Threshold,
            3 => Self::ReluDirect,
            _ => return Err(Error::NetFormat(format!("unknown net kind {c}"))),
        })
    }
}

/// Flat serialized form shared by all networks.
///
/// Scalars: `[B]` for NTK/ReLU, `[c₁, mass]` for threshold, `[mass]` for
/// direct ReLU. Binary layout (little endian): `NTKN`, u32 version, u8 kind,
/// u32 d, u64 m, f64 ε, f64 R, then length-prefixed (u64) f64 blocks for
/// scalars, w, s and τ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetFile {
    pub kind: NetKind,
    pub d: usize,
    pub m: usize,
    pub eps: f64,
    pub radius: f64,
    pub scalars: Vec<f64>,
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub tau: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"NTKN";
const VERSION: u32 = 1;

fn batch_file(kind: NetKind, b: &SampleBatch) -> NetFile {
    NetFile {
        kind,
        d: b.d,
        m: b.m,
        eps: b.eps,
        radius: b.radius,
        scalars: vec![b.sup_norm],
        w: b.w.clone(),
        s: b.s.clone(),
        tau: b.tau.clone(),
    }
}

impl From<&FiniteNtkNet> for NetFile {
    fn from(n: &FiniteNtkNet) -> Self {
        batch_file(NetKind::Ntk, &n.batch)
    }
}

impl From<&FiniteReluNet> for NetFile {
    fn from(n: &FiniteReluNet) -> Self {
        batch_file(NetKind::Relu, &n.batch)
    }
}

impl From<&ThresholdNet> for NetFile {
    fn from(n: &ThresholdNet) -> Self {
        NetFile {
            kind: NetKind::Threshold,
            d: n.d,
            m: n.m,
            eps: 0.0,
            radius: 0.0,
            scalars: vec![n.c1, n.mass],
            w: n.w.clone(),
            s: n.s.clone(),
            tau: Vec::new(),
        }
    }
}

impl From<&ReluDirectNet> for NetFile {
    fn from(n: &ReluDirectNet) -> Self {
        NetFile {
            kind: NetKind::ReluDirect,
            d: n.d,
            m: n.m,
            eps: 0.0,
            radius: 0.0,
            scalars: vec![n.mass],
            w: n.w.clone(),
            s: n.s.clone(),
            tau: Vec::new(),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::NetFormat("truncated net file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn block(&mut self) -> Result<Vec<f64>> {
        let n = usize::try_from(self.u64()?).map_err(|_| Error::NetFormat("block too long".into()))?;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(Error::NetFormat("block length exceeds file size".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

impl NetFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * (self.w.len() + self.s.len() + self.tau.len() + self.scalars.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind.code());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u64).to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        out.extend_from_slice(&self.radius.to_le_bytes());
        for block in [&self.scalars, &self.w, &self.s, &self.tau] {
            out.extend_from_slice(&(block.len() as u64).to_le_bytes());
            for v in block.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::NetFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::NetFormat(format!("unsupported version {version}")));
        }
        let kind = NetKind::from_code(r.take(1)?[0])?;
        let d = r.u32()? as usize;
        let m = usize::try_from(r.u64()?).map_err(|_| Error::NetFormat("m too large".into()))?;
        let eps = r.f64()?;
        let radius = r.f64()?;
        let scalars = r.block()?;
        let w = r.block()?;
        let s = r.block()?;
        let tau = r.block()?;
        if r.pos != buf.len() {
            return Err(Error::NetFormat("trailing bytes".into()));
        }
        let f = Self { kind, d, m, eps, radius, scalars, w, s, tau };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let k = self.d + 1;
        let bad = |msg: &str| Err(Error::NetFormat(format!("{:?}: {msg}", self.kind)));
        if self.d == 0 || self.m == 0 {
            return bad("d and m must be positive");
        }
        let n = self.s.len();
        if self.w.len() != n * k {
            return bad("w block does not match s");
        }
        match self.kind {
            NetKind::Ntk | NetKind::Relu => {
                if n != self.m || self.tau.len() != n * k || self.scalars.len() != 1 {
                    return bad("inconsistent batch blocks");
                }
            }
            NetKind::Threshold => {
                if !(n == self.m || n == 0) || !self.tau.is_empty() || self.scalars.len() != 2 {
                    return bad("inconsistent threshold blocks");
                }
            }
            NetKind::ReluDirect => {
                if !(n == self.m + 3 || n == 3) || !self.tau.is_empty() || self.scalars.len() != 1 {
                    return bad("inconsistent direct ReLU blocks");
                }
            }
        }
        Ok(())
    }

    fn expect(&self, kind: NetKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::NetFormat(format!("expected a {kind:?} net, found {:?}", self.kind)));
        }
        Ok(())
    }

    fn batch(&self) -> Result<SampleBatch> {
        SampleBatch::from_parts(self.d, self.eps, self.radius, self.scalars[0], self.w.clone(), self.s.clone(), self.tau.clone())
    }

    pub fn into_ntk(&self) -> Result<FiniteNtkNet> {
        self.expect(NetKind::Ntk)?;
        Ok(FiniteNtkNet::new(self.batch()?))
    }

    pub fn into_relu(&self) -> Result<FiniteReluNet> {
        self.expect(NetKind::Relu)?;
        Ok(FiniteReluNet::new(self.batch()?))
    }

    pub fn into_threshold(&self) -> Result<ThresholdNet> {
        self.expect(NetKind::Threshold)?;
        Ok(ThresholdNet {
            d: self.d,
            m: self.m,
            c1: self.scalars[0],
            mass: self.scalars[1],
            w: self.w.clone(),
            s: self.s.clone(),
        })
    }

    pub fn into_relu_direct(&self) -> Result<ReluDirectNet> {
        self.expect(NetKind::ReluDirect)?;
        Ok(ReluDirectNet { d: self.d, m: self.m, mass: self.scalars[0], w: self.w.clone(), s: self.s.clone() })
    }
}
