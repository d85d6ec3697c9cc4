//! Target functions, their Fourier data, δ-restrictions, moduli of
//! continuity and Gaussian smoothing `h = f_{|δ} * G_α`.
//!
//! Fourier convention: `f̂(w) = ∫ f(x) e^{−2πi wᵀx} dx`, written in polar form
//! `f̂(w) = |f̂(w)| e^{2πi θ(w)}` with `θ ∈ (−1/2, 1/2]`, so that
//! `f(x) = ∫ |f̂(w)| cos(2π(wᵀx + θ(w))) dw` for real `f`.
//!
//! Registry ids: `dirac`, `dirac:<alpha>`, `gauss:<beta>`,
//! `mix2:<b1>,<b2>,<sep>`, `cosridge:<a>`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{check_dim, invalid, Error, Result};
use crate::math::{norm, norm_sq, uniform_ball, uniform_direction};
use crate::metrics::{BoundReport, ProbeMeasure};
use crate::quad;
use crate::rng::{tags, RngStream};

/// Moduli of continuity below this value are clamped.
pub const OMEGA_FLOOR: f64 = 1e-6;

/// Default registry ids used by suites and examples.
pub const REGISTRY: [&str; 4] = ["dirac", "gauss:0.5", "mix2:0.3,0.4,0.6", "cosridge:1"];

/// Polar form `|f̂| e^{2πiθ}` of a Fourier coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub modulus: f64,
    pub phase: f64,
}

impl Spectrum {
    fn from_complex(re: f64, im: f64) -> Self {
        let modulus = re.hypot(im);
        let phase = if modulus == 0.0 { 0.0 } else { im.atan2(re) / (2.0 * PI) };
        Self { modulus, phase }
    }

    fn from_real(v: f64) -> Self {
        if v >= 0.0 {
            Self { modulus: v, phase: 0.0 }
        } else {
            Self { modulus: -v, phase: 0.5 }
        }
    }
}

/// `Ĝ_α(w) = exp(−2π²α²‖w‖²)`, the Fourier transform of the `N(0, α² I)` density.
pub fn gaussian_fourier(alpha: f64, w: &[f64]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok((-2.0 * PI * PI * alpha * alpha * norm_sq(w)).exp())
}

/// Gaussian bound `|f̂(v)| ≤ amplitude · exp(−‖v‖²/(2 scale²))`; `scale = ∞`
/// means a flat bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub amplitude: f64,
    pub scale: f64,
}

impl Envelope {
    pub fn at_radius(&self, rho: f64) -> f64 {
        if self.scale.is_infinite() {
            self.amplitude
        } else {
            self.amplitude * (-rho * rho / (2.0 * self.scale * self.scale)).exp()
        }
    }

    /// Product with `exp(−‖v‖²/(2 s²))`.
    fn damped(&self, s: f64) -> Self {
        let inv = 1.0 / (s * s) + if self.scale.is_infinite() { 0.0 } else { 1.0 / (self.scale * self.scale) };
        Self { amplitude: self.amplitude, scale: 1.0 / inv.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// Dirac mass at the origin; smoothing gives `G_α` itself.
    Dirac { alpha: Option<f64> },
    /// Gaussian density `G_β`.
    Gauss { beta: f64 },
    /// `½ G_{b1}(x − μ) + ½ G_{b2}(x + μ)` with `μ = (sep/2) e₁`.
    Mix2 { b1: f64, b2: f64, sep: f64 },
    /// `cos(2π a x₁)`, restricted to the `(1+δ)`-ball before smoothing.
    CosRidge { a: f64 },
    /// Black-box evaluator without Fourier data.
    Custom,
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TargetFunction {
    id: String,
    dim: usize,
    kind: TargetKind,
    scale: f64,
    custom: Option<Evaluator>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("scale", &self.scale)
            .finish()
    }
}

fn parse_params(id: &str, body: &str, n: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = body.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::UnknownTarget(id.to_string())),
    }
}

impl TargetFunction {
    pub fn parse(id: &str, d: usize) -> Result<Self> {
        check_dim(d)?;
        let (head, body) = match id.split_once(':') {
            Some((h, b)) => (h, Some(b)),
            None => (id, None),
        };
        let kind = match (head, body) {
            ("dirac", None) => TargetKind::Dirac { alpha: None },
            ("dirac", Some(b)) => {
                let v = parse_params(id, b, 1)?;
                if v[0] <= 0.0 {
                    return Err(invalid("alpha", "dirac width must be positive"));
                }
                TargetKind::Dirac { alpha: Some(v[0]) }
            }
            ("gauss", Some(b)) => {
                let v = parse_params(id, b, 1)?;
                if v[0] <= 0.0 {
                    return Err(invalid("beta", "Gaussian width must be positive"));
                }
                TargetKind::Gauss { beta: v[0] }
            }
            ("mix2", Some(b)) => {
                let v = parse_params(id, b, 3)?;
                if v[0] <= 0.0 || v[1] <= 0.0 || v[2] < 0.0 {
                    return Err(invalid("mix2", "widths must be positive and separation non-negative"));
                }
                TargetKind::Mix2 { b1: v[0], b2: v[1], sep: v[2] }
            }
            ("cosridge", Some(b)) => {
                let v = parse_params(id, b, 1)?;
                if v[0] <= 0.0 {
                    return Err(invalid("a", "ridge frequency must be positive"));
                }
                if d > 3 {
                    return Err(Error::UnsupportedDimension(d));
                }
                TargetKind::CosRidge { a: v[0] }
            }
            _ => return Err(Error::UnknownTarget(id.to_string())),
        };
        Ok(Self { id: id.to_string(), dim: d, kind, scale: 1.0, custom: None })
    }

    /// Black-box target; it supports continuity and smoothing checks but not
    /// the Fourier constructions.
    pub fn custom(name: &str, d: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { id: name.to_string(), dim: d, kind: TargetKind::Custom, scale: 1.0, custom: Some(Arc::new(f)) })
    }

    /// The same target multiplied by `k` (Fourier data scales linearly).
    pub fn scaled(&self, k: f64) -> Self {
        let mut t = self.clone();
        t.scale *= k;
        t
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.kind, TargetKind::Dirac { .. })
    }

    pub fn has_fourier(&self) -> bool {
        !matches!(self.kind, TargetKind::Custom)
    }

    /// `|f̂|` and `θ` depend on `w` only through `‖w‖` (in one dimension: `f` is even).
    pub fn is_radial(&self) -> bool {
        match self.kind {
            TargetKind::Dirac { .. } | TargetKind::Gauss { .. } => true,
            TargetKind::Mix2 { b1, b2, sep } => sep == 0.0 && b1 == b2,
            TargetKind::CosRidge { .. } => self.dim == 1,
            TargetKind::Custom => false,
        }
    }

    /// `f(−x) = f(x)`, which makes every `∫ w |ĥ(w)| (…)` term vanish.
    pub fn is_even(&self) -> bool {
        match self.kind {
            TargetKind::Mix2 { b1, b2, sep } => sep == 0.0 || b1 == b2,
            TargetKind::Custom => false,
            _ => true,
        }
    }

    /// `f(x)`; `None` for the Dirac mass.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        let k = self.scale;
        match self.kind {
            TargetKind::Dirac { .. } => None,
            TargetKind::Gauss { beta } => Some(k * gauss_pdf(norm_sq(x), beta, self.dim)),
            TargetKind::Mix2 { b1, b2, sep } => Some(k * mix2_value(x, b1, b2, sep)),
            TargetKind::CosRidge { a } => Some(k * (2.0 * PI * a * x[0]).cos()),
            TargetKind::Custom => Some(k * (self.custom.as_ref().expect("custom evaluator"))(x)),
        }
    }

    /// Fourier data of the object that gets convolved with `G_α`.
    ///
    /// Dirac and Gaussian-mixture targets use their unrestricted transforms;
    /// the cosine ridge uses the exact transform of its `(1+δ)`-restriction.
    pub fn source_spectrum(&self, w: &[f64], delta: f64) -> Result<Spectrum> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.len() });
        }
        if !self.has_fourier() {
            return Err(Error::NoFourierData(self.id.clone()));
        }
        Ok(self.source_spectrum_unchecked(w, delta))
    }

    fn source_spectrum_unchecked(&self, w: &[f64], delta: f64) -> Spectrum {
        let k = self.scale;
        let sp = match self.kind {
            TargetKind::Dirac { .. } => Spectrum { modulus: 1.0, phase: 0.0 },
            TargetKind::Gauss { beta } => Spectrum { modulus: (-2.0 * PI * PI * beta * beta * norm_sq(w)).exp(), phase: 0.0 },
            TargetKind::Mix2 { b1, b2, sep } => {
                let q = norm_sq(w);
                let g1 = (-2.0 * PI * PI * b1 * b1 * q).exp();
                let g2 = (-2.0 * PI * PI * b2 * b2 * q).exp();
                let arg = PI * sep * w[0];
                Spectrum::from_complex(0.5 * (g1 + g2) * arg.cos(), 0.5 * (g2 - g1) * arg.sin())
            }
            TargetKind::CosRidge { a } => {
                let l = 1.0 + delta;
                let mut v = w.to_vec();
                v[0] = w[0] - a;
                let plus = ball_fourier(norm(&v), l, self.dim);
                v[0] = w[0] + a;
                let minus = ball_fourier(norm(&v), l, self.dim);
                Spectrum::from_real(0.5 * (plus + minus))
            }
            TargetKind::Custom => Spectrum { modulus: 0.0, phase: 0.0 },
        };
        if k >= 0.0 {
            Spectrum { modulus: k * sp.modulus, phase: sp.phase }
        } else {
            let ph = if sp.phase > 0.0 { sp.phase - 0.5 } else { sp.phase + 0.5 };
            Spectrum { modulus: -k * sp.modulus, phase: ph }
        }
    }

    /// Gaussian bound on `|source_spectrum|`.
    pub fn source_envelope(&self, delta: f64) -> Result<Envelope> {
        let k = self.scale.abs();
        Ok(match self.kind {
            TargetKind::Dirac { .. } => Envelope { amplitude: k, scale: f64::INFINITY },
            TargetKind::Gauss { beta } => Envelope { amplitude: k, scale: 1.0 / (2.0 * PI * beta) },
            TargetKind::Mix2 { b1, b2, .. } => Envelope { amplitude: k, scale: 1.0 / (2.0 * PI * b1.min(b2)) },
            TargetKind::CosRidge { .. } => Envelope { amplitude: self.source_l1(delta)?, scale: f64::INFINITY },
            TargetKind::Custom => return Err(Error::NoFourierData(self.id.clone())),
        })
    }

    /// L1 norm of the Fourier source object, which bounds `|source_spectrum|`.
    pub fn source_l1(&self, delta: f64) -> Result<f64> {
        match self.kind {
            TargetKind::Dirac { .. } | TargetKind::Gauss { .. } | TargetKind::Mix2 { .. } => Ok(self.scale.abs()),
            TargetKind::CosRidge { .. } => Ok(self.restricted_l1(delta)),
            TargetKind::Custom => Err(Error::NoFourierData(self.id.clone())),
        }
    }

    /// `‖f_{|δ}‖_{L1}`, the L1 norm of `f` restricted to the `(1+δ)`-ball.
    pub fn restricted_l1(&self, delta: f64) -> f64 {
        let l = 1.0 + delta;
        let d = self.dim;
        let k = self.scale.abs();
        match self.kind {
            TargetKind::Dirac { .. } => k,
            TargetKind::Gauss { beta } => k * gamma_lr(d as f64 / 2.0, l * l / (2.0 * beta * beta)),
            TargetKind::CosRidge { a } => {
                // Slice the ball orthogonally to e₁.
                let kinks: Vec<f64> = kink_points(a, l);
                let slice = |t: f64| (2.0 * PI * a * t).cos().abs() * ball_volume(d - 1, (l * l - t * t).max(0.0).sqrt());
                k * integrate_with_breaks(-l, l, &kinks, slice)
            }
            TargetKind::Mix2 { .. } | TargetKind::Custom => {
                let f = |x: &[f64]| self.value(x).unwrap_or(0.0).abs();
                ball_integral(&f, l, d)
            }
        }
    }

    /// `M`, the sup of `|f|` over the `(1+δ)`-ball; `None` for the Dirac mass.
    pub fn sup_norm(&self, delta: f64) -> Option<f64> {
        let l = 1.0 + delta;
        let k = self.scale.abs();
        match self.kind {
            TargetKind::Dirac { .. } => None,
            TargetKind::Gauss { beta } => Some(k * gauss_pdf(0.0, beta, self.dim)),
            TargetKind::Mix2 { b1, b2, sep } => {
                let mut x = vec![0.0; self.dim];
                let g = |t: f64, x: &mut Vec<f64>| {
                    x[0] = t;
                    mix2_value(x, b1, b2, sep)
                };
                Some(k * maximize_1d(-l, l, 4001, |t| g(t, &mut x)))
            }
            TargetKind::CosRidge { .. } => Some(k),
            TargetKind::Custom => Some(probe_sup(self, l)),
        }
    }

    /// Closed-form (or certified upper) modulus of continuity; `None` when the
    /// target only supports probing.
    pub fn omega_closed_form(&self, delta: f64) -> Option<f64> {
        let l = 1.0 + delta;
        let d = self.dim;
        let k = self.scale.abs();
        match self.kind {
            TargetKind::Dirac { .. } => Some(0.0),
            TargetKind::Gauss { beta } => {
                let g = |r: f64| gauss_pdf(r * r, beta, d);
                Some(k * maximize_1d(0.0, 1.0, 4001, |r| g(r) - g(r + delta)))
            }
            TargetKind::Mix2 { b1, b2, .. } => {
                let lip = |b: f64| gauss_pdf(0.0, b, d) * (-0.5f64).exp() / b;
                let m = self.sup_norm(delta).unwrap_or(f64::INFINITY);
                Some((delta * k * 0.5 * (lip(b1) + lip(b2))).min(m))
            }
            TargetKind::CosRidge { a } => {
                let gap = 2.0 * PI * a * delta;
                if gap >= PI && 1.0 / (2.0 * a) <= l {
                    Some(2.0 * k)
                } else if gap < PI && 1.0 / (4.0 * a) + delta / 2.0 <= l {
                    Some(2.0 * k * (gap / 2.0).sin())
                } else {
                    let f = |t: f64| {
                        let lo = (t - delta).max(-l);
                        let hi = (t + delta).min(l);
                        (2.0 * PI * a * t).cos() - cos_min(a, lo, hi)
                    };
                    Some(k * maximize_1d(-l, l, 20001, f))
                }
            }
            TargetKind::Custom => None,
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 1.0 {
            write!(f, "{}", self.id)
        } else {
            write!(f, "{}×{}", self.scale, self.id)
        }
    }
}

fn gauss_pdf(r2: f64, s: f64, d: usize) -> f64 {
    (-r2 / (2.0 * s * s)).exp() / (2.0 * PI * s * s).powf(d as f64 / 2.0)
}

fn mix2_value(x: &[f64], b1: f64, b2: f64, sep: f64) -> f64 {
    let mu = sep / 2.0;
    let rest: f64 = x[1..].iter().map(|v| v * v).sum();
    let d = x.len();
    0.5 * gauss_pdf((x[0] - mu).powi(2) + rest, b1, d) + 0.5 * gauss_pdf((x[0] + mu).powi(2) + rest, b2, d)
}

/// Volume of the `k`-dimensional ball of radius `r` (`k = 0` gives 1).
pub fn ball_volume(k: usize, r: f64) -> f64 {
    let k = k as f64;
    (k / 2.0 * PI.ln() - ln_gamma(k / 2.0 + 1.0)).exp() * r.powf(k)
}

/// Fourier transform of the indicator of the radius-`l` ball at frequency norm `k`.
fn ball_fourier(k: f64, l: f64, d: usize) -> f64 {
    let z = 2.0 * PI * l * k;
    match d {
        1 => {
            if z.abs() < 1e-4 {
                2.0 * l * (1.0 - z * z / 6.0)
            } else {
                (z).sin() / (PI * k)
            }
        }
        2 => {
            if z < 1e-4 {
                PI * l * l * (1.0 - z * z / 8.0)
            } else {
                l * puruspe::Jn(1, z) / k
            }
        }
        3 => {
            if z < 1e-3 {
                4.0 / 3.0 * PI * l.powi(3) * (1.0 - z * z / 10.0)
            } else {
                (z.sin() - z * z.cos()) / (2.0 * PI * PI * k.powi(3))
            }
        }
        _ => unreachable!("ball transform only for d ≤ 3"),
    }
}

/// Points in `(lo, hi)` where `|cos(2π a t)|` has a kink.
fn kink_points(a: f64, l: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let step = 1.0 / (2.0 * a);
    let mut t = -(((l * 2.0 * a) - 0.5).floor() + 0.5) * step;
    while t < l {
        if t > -l {
            out.push(t);
        }
        t += step;
    }
    out
}

fn integrate_with_breaks<F: Fn(f64) -> f64>(a: f64, b: f64, breaks: &[f64], f: F) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|t| *t > a && *t < b));
    pts.push(b);
    pts.windows(2).map(|p| quad::adaptive(p[0], p[1], 1e-12, 1e-12, &f)).sum()
}

/// Minimum of `cos(2π a s)` over `s ∈ [lo, hi]`.
fn cos_min(a: f64, lo: f64, hi: f64) -> f64 {
    // Minima sit at s = (2j+1)/(2a).
    let j = (lo * a - 0.5).ceil();
    if (2.0 * j + 1.0) / (2.0 * a) <= hi {
        -1.0
    } else {
        (2.0 * PI * a * lo).cos().min((2.0 * PI * a * hi).cos())
    }
}

/// Grid search followed by golden-section refinement around the best node.
pub(crate) fn maximize_1d<F: FnMut(f64) -> f64>(lo: f64, hi: f64, n: usize, mut f: F) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..n {
        let t = lo + i as f64 * h;
        let v = f(t);
        if v > best.0 {
            best = (v, t);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best.0.max(fc).max(fd)
}

/// Direction set with weights for integrating over the sphere `S^{d−1}`.
fn sphere_directions(d: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let n = 64;
            (0..n)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                    (vec![t.cos(), t.sin()], 2.0 * PI / n as f64)
                })
                .collect()
        }
        3 => {
            let n = 512;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let rad = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    (vec![rad * t.cos(), rad * t.sin(), z], 4.0 * PI / n as f64)
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// `∫_{‖x‖≤l} f(x) dx` by nested adaptive quadrature (d ≤ 2), polar
/// quadrature (d = 3) or Monte Carlo.
pub fn ball_integral(f: &dyn Fn(&[f64]) -> f64, l: f64, d: usize) -> f64 {
    if d == 1 {
        return quad::adaptive(-l, l, 1e-11, 1e-11, |t| f(&[t]));
    }
    if d == 2 {
        return quad::adaptive(-l, l, 1e-10, 1e-10, |u| {
            let c = (l * l - u * u).max(0.0).sqrt();
            quad::adaptive(-c, c, 1e-11, 1e-11, |v| f(&[u, v]))
        });
    }
    if d == 3 {
        let radial = quad::composite_nodes(0.0, l, 16, 16);
        let mut x = vec![0.0; d];
        let mut s = 0.0;
        for (u, wu) in sphere_directions(d) {
            for &(rho, wr) in &radial {
                for (xi, ui) in x.iter_mut().zip(&u) {
                    *xi = rho * ui;
                }
                s += wu * wr * rho.powi(d as i32 - 1) * f(&x);
            }
        }
        return s;
    }
    let mut rng = RngStream::new(0, tags::CONSTANTS);
    let n = 100_000;
    let mut x = vec![0.0; d];
    let mut s = 0.0;
    for _ in 0..n {
        uniform_ball(&mut rng, &mut x);
        x.iter_mut().for_each(|v| *v *= l);
        s += f(&x);
    }
    s / n as f64 * ball_volume(d, l)
}

fn probe_sup(t: &TargetFunction, l: f64) -> f64 {
    let f = |x: &[f64]| t.value(x).unwrap_or(0.0).abs();
    let mut best = 0.0f64;
    for p in ProbeMeasure::grid(t.dim).points() {
        let x: Vec<f64> = p.iter().map(|v| v * l).collect();
        best = best.max(f(&x));
    }
    best
}

/// Randomized pair probing plus local refinement; returns a lower estimate of
/// `ω_f(δ)` for any target with a pointwise evaluator.
pub fn probe_modulus(f: &TargetFunction, delta: f64, probe_budget: usize, rng: &mut RngStream) -> Result<f64> {
    if probe_budget < 100 {
        return Err(invalid("probe_budget", "at least 100 probes are required"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let d = f.dim;
    let l = 1.0 + delta;
    let Some(_) = f.value(&vec![0.0; d]) else {
        return Err(Error::Precondition("the Dirac mass has no modulus of continuity".into()));
    };
    let val = |x: &[f64]| f.value(x).expect("pointwise target");
    let project = |x: &mut [f64]| {
        let n = norm(x);
        if n > l {
            x.iter_mut().for_each(|v| *v *= l / n);
        }
    };
    let feasible = |x: &[f64], y: &[f64]| {
        norm(x) <= l && norm(y) <= l && x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= delta
    };

    let mut pairs: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; d];
    let mut u = vec![0.0; d];
    for _ in 0..probe_budget {
        uniform_ball(rng, &mut x);
        x.iter_mut().for_each(|v| *v *= l);
        uniform_direction(rng, &mut u);
        let t = if rng.gen::<bool>() { 1.0 } else { rng.gen::<f64>() };
        let mut y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + delta * t * b).collect();
        project(&mut y);
        let diff = val(&x) - val(&y);
        let (a, b) = if diff >= 0.0 { (x.clone(), y) } else { (y, x.clone()) };
        pairs.push((diff.abs(), a, b));
    }
    if d == 1 {
        for i in 0..2001 {
            let t = -l + 2.0 * l * i as f64 / 2000.0;
            for s in [t - delta, t + delta] {
                let s = s.clamp(-l, l);
                let diff = val(&[t]) - val(&[s]);
                let (a, b) = if diff >= 0.0 { (vec![t], vec![s]) } else { (vec![s], vec![t]) };
                pairs.push((diff.abs(), a, b));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(8);
    let mut best = pairs.first().map(|p| p.0).unwrap_or(0.0);
    for (mut score, mut a, mut b) in pairs {
        let mut step = delta / 4.0;
        for _ in 0..300 {
            let mut na = a.clone();
            let mut nb = b.clone();
            for v in na.iter_mut().chain(nb.iter_mut()) {
                *v += step * (2.0 * rng.gen::<f64>() - 1.0);
            }
            project(&mut na);
            project(&mut nb);
            if !feasible(&na, &nb) {
                step *= 0.97;
                continue;
            }
            let s = val(&na) - val(&nb);
            if s > score {
                score = s;
                a = na;
                b = nb;
            } else {
                step *= 0.97;
            }
        }
        best = best.max(score);
    }
    Ok(best)
}

/// Modulus of continuity: the closed form for registry targets (with the
/// probe asserted not to exceed it), the probe value otherwise.
pub fn modulus_of_continuity(f: &TargetFunction, delta: f64, probe_budget: usize, rng: &mut RngStream) -> Result<f64> {
    if f.is_dirac() {
        return Err(Error::Precondition("the Dirac mass has no modulus of continuity".into()));
    }
    let probe = probe_modulus(f, delta, probe_budget, rng)?;
    match f.omega_closed_form(delta) {
        Some(closed) => {
            if probe > closed * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::BoundViolated(format!(
                    "probed modulus {probe} exceeds the closed form {closed} for {f}"
                )));
            }
            Ok(closed)
        }
        None => Ok(probe),
    }
}

/// `α = δ / (√d + √(2 ln(2M/ω)))`.
pub fn smoothing_width(delta: f64, d: usize, sup_norm: f64, omega: f64) -> f64 {
    let lg = (2.0 * sup_norm / omega).ln().max(0.0);
    delta / ((d as f64).sqrt() + (2.0 * lg).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuityProfile {
    pub delta: f64,
    /// `ω_f(δ)` after flooring.
    pub omega: f64,
    /// Raw probe estimate (a lower bound on the true modulus).
    pub omega_probe: f64,
    pub sup_norm: f64,
    pub alpha: f64,
}

impl ContinuityProfile {
    /// Continuity data for `f` at scale `δ`.
    ///
    /// The Dirac mass has no modulus; it is smoothed at width `α = δ` (or its
    /// explicit width) and its smoothed version is the approximation target,
    /// so `ω` takes the floor value and `M = sup G_α`.
    pub fn new(f: &TargetFunction, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1], got {delta}")));
        }
        let d = f.dim;
        if let TargetKind::Dirac { alpha } = f.kind {
            let alpha = alpha.unwrap_or(delta);
            let m = f.scale.abs() * gauss_pdf(0.0, alpha, d);
            return Ok(Self { delta, omega: OMEGA_FLOOR, omega_probe: 0.0, sup_norm: m, alpha });
        }
        let mut rng = RngStream::new(0, tags::MODULUS);
        let probe = probe_modulus(f, delta, 20_000, &mut rng)?;
        let omega_raw = match f.omega_closed_form(delta) {
            Some(closed) => {
                if probe > closed * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::BoundViolated(format!(
                        "probed modulus {probe} exceeds the closed form {closed} for {f}"
                    )));
                }
                closed
            }
            None => probe,
        };
        let omega = omega_raw.max(OMEGA_FLOOR);
        let m = f.sup_norm(delta).expect("pointwise target");
        Ok(Self { delta, omega, omega_probe: probe, sup_norm: m, alpha: smoothing_width(delta, d, m, omega) })
    }
}

/// `h = f_{|δ} * G_α` together with its Fourier data `ĥ = f̂_src · Ĝ_α`.
#[derive(Clone, Debug)]
pub struct SmoothedTarget {
    base: TargetFunction,
    profile: ContinuityProfile,
}

impl SmoothedTarget {
    pub fn new(base: TargetFunction, delta: f64) -> Result<Self> {
        let profile = ContinuityProfile::new(&base, delta)?;
        Ok(Self { base, profile })
    }

    pub fn from_profile(base: TargetFunction, profile: ContinuityProfile) -> Result<Self> {
        check_positive_alpha(profile.alpha)?;
        Ok(Self { base, profile })
    }

    /// Override the smoothing width, keeping the continuity data.
    pub fn with_alpha(base: TargetFunction, delta: f64, alpha: f64) -> Result<Self> {
        check_positive_alpha(alpha)?;
        let mut profile = ContinuityProfile::new(&base, delta)?;
        profile.alpha = alpha;
        if base.is_dirac() {
            profile.sup_norm = base.scale.abs() * gauss_pdf(0.0, alpha, base.dim);
        }
        Ok(Self { base, profile })
    }

    pub fn base(&self) -> &TargetFunction {
        &self.base
    }

    pub fn profile(&self) -> &ContinuityProfile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn alpha(&self) -> f64 {
        self.profile.alpha
    }

    pub fn delta(&self) -> f64 {
        self.profile.delta
    }

    /// `φ = 1/(2πα)`, the standard deviation of `Ĝ_α` viewed as a Gaussian.
    pub fn phi(&self) -> f64 {
        1.0 / (2.0 * PI * self.profile.alpha)
    }

    pub fn is_radial(&self) -> bool {
        self.base.is_radial()
    }

    pub fn has_fourier(&self) -> bool {
        self.base.has_fourier()
    }

    pub(crate) fn require_fourier(&self) -> Result<()> {
        if self.has_fourier() {
            Ok(())
        } else {
            Err(Error::NoFourierData(self.base.id.clone()))
        }
    }

    /// `|ĥ(w)|` and `θ_h(w)`.
    pub fn spectrum(&self, w: &[f64]) -> Result<Spectrum> {
        let s = self.base.source_spectrum(w, self.profile.delta)?;
        let g = gaussian_fourier(self.profile.alpha, w)?;
        Ok(Spectrum { modulus: s.modulus * g, phase: s.phase })
    }

    /// Unchecked version of [`Self::spectrum`] for hot loops; Fourier data
    /// must have been validated with [`Self::require_fourier`].
    pub(crate) fn spec(&self, w: &[f64]) -> Spectrum {
        let s = self.base.source_spectrum_unchecked(w, self.profile.delta);
        let a = self.profile.alpha;
        Spectrum { modulus: s.modulus * (-2.0 * PI * PI * a * a * norm_sq(w)).exp(), phase: s.phase }
    }

    /// Source spectrum (before multiplying by `Ĝ_α`).
    pub(crate) fn source_spec(&self, v: &[f64]) -> Spectrum {
        self.base.source_spectrum_unchecked(v, self.profile.delta)
    }

    /// Gaussian bound on `|ĥ|`.
    pub fn envelope(&self) -> Result<Envelope> {
        Ok(self.base.source_envelope(self.profile.delta)?.damped(self.phi()))
    }

    /// L1 norm of the Fourier source, `M_f` in the transport bounds.
    pub fn source_l1(&self) -> Result<f64> {
        self.base.source_l1(self.profile.delta)
    }

    pub fn restricted_l1(&self) -> f64 {
        self.base.restricted_l1(self.profile.delta)
    }

    /// `h(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let a = self.profile.alpha;
        let k = self.base.scale;
        let d = self.base.dim;
        match self.base.kind {
            TargetKind::Dirac { .. } => k * gauss_pdf(norm_sq(x), a, d),
            TargetKind::Gauss { beta } => k * gauss_pdf(norm_sq(x), (beta * beta + a * a).sqrt(), d),
            TargetKind::Mix2 { b1, b2, sep } => {
                k * mix2_value(x, (b1 * b1 + a * a).sqrt(), (b2 * b2 + a * a).sqrt(), sep)
            }
            TargetKind::CosRidge { .. } | TargetKind::Custom => self.restricted_convolution(x),
        }
    }

    /// The function the finite networks are compared with: `f` itself, or
    /// `h = G_α` for the Dirac mass.
    pub fn reference(&self, x: &[f64]) -> f64 {
        self.base.value(x).unwrap_or_else(|| self.value(x))
    }

    /// `(f_{|δ} * G_α)(x)` by ray quadrature from `x` (Monte Carlo for `d > 3`).
    pub fn restricted_convolution(&self, x: &[f64]) -> f64 {
        let d = self.base.dim;
        let l = 1.0 + self.profile.delta;
        let a = self.profile.alpha;
        if self.base.is_dirac() {
            return self.value(x);
        }
        let f = |y: &[f64]| self.base.value(y).expect("pointwise target");
        let norm_c = (2.0 * PI * a * a).powf(-(d as f64) / 2.0);
        let dirs = sphere_directions(d);
        if dirs.is_empty() {
            let mut rng = RngStream::new(0, tags::CONSTANTS);
            let n = 100_000;
            let mut z = vec![0.0; d];
            let mut s = 0.0;
            for _ in 0..n {
                crate::math::GaussianLaw { dim: d }.sample_into(&mut rng, &mut z);
                let y: Vec<f64> = x.iter().zip(&z).map(|(xi, zi)| xi - a * zi).collect();
                if norm(&y) <= l {
                    s += f(&y);
                }
            }
            return s / n as f64;
        }
        let xx = norm_sq(x);
        let rule = quad::legendre(12);
        let mut y = vec![0.0; d];
        let mut s = 0.0;
        for (u, wu) in &dirs {
            let xu: f64 = x.iter().zip(u).map(|(p, q)| p * q).sum();
            let disc = xu * xu - xx + l * l;
            if disc < 0.0 {
                continue;
            }
            let exit = xu + disc.sqrt();
            let top = exit.min(10.0 * a);
            if top <= 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for p in 0..2 {
                let lo = top * p as f64 / 2.0;
                let hi = top * (p + 1) as f64 / 2.0;
                for (rho, wr) in rule.mapped(lo, hi) {
                    for ((yi, xi), ui) in y.iter_mut().zip(x).zip(u) {
                        *yi = xi - rho * ui;
                    }
                    inner += wr * rho.powi(d as i32 - 1) * (-rho * rho / (2.0 * a * a)).exp() * f(&y);
                }
            }
            s += wu * inner;
        }
        s * norm_c
    }
}

fn check_positive_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must be positive, got {alpha}")))
    }
}

/// Sup-grid check of `|f − f_{|δ} * G_α| ≤ 2ω_f(δ)` over a probe measure.
pub fn convolution_error_check(h: &SmoothedTarget, probe: &ProbeMeasure) -> Result<BoundReport> {
    if h.base.is_dirac() {
        return Err(Error::Precondition("the Dirac mass is not a continuous target".into()));
    }
    let pts = probe.points();
    let worst = crate::metrics::par_max(pts, |x| (h.base.value(x).expect("pointwise") - h.restricted_convolution(x)).abs());
    let bound = 2.0 * h.profile.omega;
    Ok(BoundReport::new(format!("convolution:{}", h.base), bound, worst, 0.0, worst <= bound).with_delta(h.profile.delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn smoothed(id: &str, d: usize, delta: f64) -> SmoothedTarget {
        SmoothedTarget::new(TargetFunction::parse(id, d).unwrap(), delta).unwrap()
    }

    #[test]
    fn gaussian_fourier_examples() {
        assert_eq!(gaussian_fourier(0.3, &[0.0, 0.0]).unwrap(), 1.0);
        let v = gaussian_fourier(1.0 / (2.0 * PI), &[1.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!(gaussian_fourier(0.0, &[1.0]).is_err());
    }

    #[test]
    fn gaussian_fourier_is_scaled_density() {
        let mut rng = RngStream::new(3, 0);
        for d in 1..=3 {
            for _ in 0..50 {
                let alpha: f64 = 0.05 + rng.gen::<f64>();
                let w: Vec<f64> = (0..d).map(|_| 3.0 * (rng.gen::<f64>() - 0.5)).collect();
                let phi = 1.0 / (2.0 * PI * alpha);
                let rhs = (2.0 * PI * phi * phi).powf(d as f64 / 2.0) * crate::math::gaussian_density(&w, phi);
                let lhs = gaussian_fourier(alpha, &w).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn parse_registry() {
        for id in REGISTRY {
            for d in 1..=3 {
                TargetFunction::parse(id, d).unwrap();
            }
        }
        assert!(TargetFunction::parse("gauss", 1).is_err());
        assert!(TargetFunction::parse("gauss:-1", 1).is_err());
        assert!(TargetFunction::parse("mix2:1,2", 1).is_err());
        assert!(TargetFunction::parse("sinc:1", 1).is_err());
        assert!(TargetFunction::parse("cosridge:1", 4).is_err());
        assert!(TargetFunction::parse("dirac", 0).is_err());
    }

    /// Oracle: direct quadrature of the forward transform in one dimension.
    fn forward_transform_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, w: f64) -> (f64, f64) {
        let re = quad::adaptive(lo, hi, 1e-13, 1e-13, |x| f(x) * (2.0 * PI * w * x).cos());
        let im = quad::adaptive(lo, hi, 1e-13, 1e-13, |x| -f(x) * (2.0 * PI * w * x).sin());
        (re, im)
    }

    #[test]
    fn source_spectra_match_forward_transform() {
        let delta = 0.1;
        for id in ["gauss:0.5", "mix2:0.3,0.4,0.6", "cosridge:1", "cosridge:0.35"] {
            let t = TargetFunction::parse(id, 1).unwrap();
            let (lo, hi) = if id.starts_with("cosridge") { (-1.1, 1.1) } else { (-12.0, 12.0) };
            let f = |x: f64| t.value(&[x]).unwrap();
            for w in [0.0, 0.3, -0.8, 1.0, 2.7] {
                let (re, im) = forward_transform_1d(&f, lo, hi, w);
                let s = t.source_spectrum(&[w], delta).unwrap();
                let (sre, sim) = (s.modulus * (2.0 * PI * s.phase).cos(), s.modulus * (2.0 * PI * s.phase).sin());
                assert!((re - sre).abs() < 1e-9 && (im - sim).abs() < 1e-9, "{id} w={w}: ({re},{im}) vs ({sre},{sim})");
            }
        }
    }

    #[test]
    fn ball_transform_2d_matches_quadrature() {
        // Oracle: polar quadrature of the 2-d forward transform of the disc.
        let l = 1.2;
        for k in [0.0, 0.4, 1.3, 3.1] {
            let f = |x: &[f64]| (2.0 * PI * k * x[0]).cos();
            let direct = ball_integral(&f, l, 2);
            assert!((direct - ball_fourier(k, l, 2)).abs() < 1e-6, "k={k}: {direct}");
        }
    }

    #[test]
    fn ball_transform_3d_limits() {
        let l = 1.1;
        let v0 = ball_fourier(0.0, l, 3);
        assert!((v0 - ball_volume(3, l)).abs() < 1e-12);
        let near = ball_fourier(1e-3, l, 3);
        let mid = ball_fourier(2e-3, l, 3);
        assert!(near <= v0 && mid <= near);
    }

    #[test]
    fn restricted_l1_matches_direct_integral() {
        for id in ["gauss:0.5", "cosridge:1", "mix2:0.3,0.4,0.6"] {
            for d in 1..=2 {
                let t = TargetFunction::parse(id, d).unwrap();
                let f = |x: &[f64]| t.value(x).unwrap().abs();
                let direct = if d == 1 {
                    quad::adaptive(-1.1, 1.1, 1e-12, 1e-12, |u| f(&[u]))
                } else {
                    quad::adaptive(-1.1, 1.1, 1e-10, 1e-10, |u| {
                        let c = (1.21 - u * u).max(0.0).sqrt();
                        quad::adaptive(-c, c, 1e-11, 1e-11, |v| f(&[u, v]))
                    })
                };
                let v = t.restricted_l1(0.1);
                assert!((direct - v).abs() < 1e-4 * v.max(1.0), "{id} d={d}: {direct} vs {v}");
            }
        }
    }

    #[test]
    fn envelope_dominates_spectrum() {
        let mut rng = RngStream::new(5, 0);
        for id in REGISTRY {
            for d in 1..=3 {
                let h = smoothed(id, d, 0.1);
                let env = h.envelope().unwrap();
                let l1 = h.source_l1().unwrap();
                for _ in 0..500 {
                    let w: Vec<f64> = (0..d).map(|_| 12.0 * (rng.gen::<f64>() - 0.5)).collect();
                    let s = h.spectrum(&w).unwrap();
                    let g = gaussian_fourier(h.alpha(), &w).unwrap();
                    assert!(s.modulus <= env.at_radius(norm(&w)) * (1.0 + 1e-12) + 1e-300);
                    assert!(s.modulus <= l1 * g * (1.0 + 1e-9) + 1e-300, "{id} d={d}");
                    assert!(s.phase > -0.5 - 1e-12 && s.phase <= 0.5 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fourier_inversion_recovers_h() {
        // Invert |ĥ|, θ_h over |w| ≤ 40 and compare with h on [−1, 1].
        for id in REGISTRY {
            let h = smoothed(id, 1, 0.2);
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let inv = quad::composite(-40.0, 40.0, 640, 16, |w| {
                    let s = h.spectrum(&[w]).unwrap();
                    s.modulus * (2.0 * PI * (w * x + s.phase)).cos()
                });
                assert!((inv - h.value(&[x])).abs() < 1e-4, "{id} x={x}: {inv} vs {}", h.value(&[x]));
            }
        }
    }

    #[test]
    fn dirac_smoothing_is_gaussian() {
        let h = SmoothedTarget::with_alpha(TargetFunction::parse("dirac", 1).unwrap(), 0.2, 0.3).unwrap();
        let x = [0.4];
        let g = (-0.16f64 / 0.18).exp() / (2.0 * PI * 0.09).sqrt();
        assert!((h.value(&x) - g).abs() < 1e-14);
        assert_eq!(h.profile().omega, OMEGA_FLOOR);
        assert!((h.profile().sup_norm - 1.0 / (2.0 * PI * 0.09).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_restricted_convolution_closed_form() {
        // Oracle: product of Gaussians, truncated with the normal CDF.
        let beta = 0.5;
        for delta in [0.05, 0.1, 0.2] {
            let h = smoothed("gauss:0.5", 1, delta);
            let a = h.alpha();
            let l = 1.0 + delta;
            let s2 = a * a + beta * beta;
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let mu = x * beta * beta / s2;
                let sd = (a * a * beta * beta / s2).sqrt();
                let n = Normal::new(mu, sd).unwrap();
                let exact = gauss_pdf(x * x, s2.sqrt(), 1) * (n.cdf(l) - n.cdf(-l));
                let q = h.restricted_convolution(&[x]);
                assert!((q - exact).abs() < 1e-10, "x={x}: {q} vs {exact}");
                // The unrestricted closed form adds the mass outside the ball.
                let outside = gauss_pdf(x * x, s2.sqrt(), 1) * (1.0 - (n.cdf(l) - n.cdf(-l)));
                assert!((h.value(&[x]) - exact - outside).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modulus_examples() {
        let mut rng = RngStream::new(9, 0);
        let id = TargetFunction::custom("identity", 1, |x| x[0]).unwrap();
        let w = modulus_of_continuity(&id, 0.1, 2000, &mut rng).unwrap();
        assert!((w - 0.1).abs() < 1e-9, "{w}");
        let c = TargetFunction::custom("const", 2, |_| 3.0).unwrap();
        assert_eq!(modulus_of_continuity(&c, 0.1, 500, &mut rng).unwrap(), 0.0);
        let p = ContinuityProfile::new(&c, 0.1).unwrap();
        assert_eq!(p.omega, OMEGA_FLOOR);
        assert!(modulus_of_continuity(&id, 0.1, 99, &mut rng).is_err());

        let g = TargetFunction::parse("gauss:0.5", 1).unwrap();
        let closed = g.omega_closed_form(0.1).unwrap();
        let probe = probe_modulus(&g, 0.1, 5000, &mut rng).unwrap();
        let lip = 0.1 * gauss_pdf(0.0, 0.5, 1) * (-0.5f64).exp() / 0.5;
        assert!(probe <= closed * (1.0 + 1e-9) && closed <= lip);
        assert!(probe > 0.99 * closed);
    }

    #[test]
    fn closed_form_moduli_dominate_probes() {
        let mut rng = RngStream::new(10, 0);
        for id in ["gauss:0.5", "mix2:0.3,0.4,0.6", "cosridge:1", "cosridge:0.2", "gauss:0.2"] {
            for d in 1..=3 {
                for delta in [0.05, 0.1, 0.2, 1.0] {
                    let t = TargetFunction::parse(id, d).unwrap();
                    modulus_of_continuity(&t, delta, 3000, &mut rng).unwrap();
                }
            }
        }
    }

    #[test]
    fn alpha_balances_far_term() {
        for id in ["gauss:0.5", "mix2:0.3,0.4,0.6", "cosridge:1"] {
            for d in 1..=3 {
                for delta in [0.05, 0.1, 0.2] {
                    let p = ContinuityProfile::new(&TargetFunction::parse(id, d).unwrap(), delta).unwrap();
                    let far = 2.0 * p.sup_norm * (-(delta / p.alpha - (d as f64).sqrt()).powi(2) / 2.0).exp();
                    assert!(far <= p.omega * (1.0 + 1e-9), "{id} d={d} δ={delta}");
                }
            }
        }
    }

    #[test]
    fn sup_norm_dominates_grid() {
        for id in ["gauss:0.5", "mix2:0.3,0.4,0.6", "cosridge:1"] {
            for d in 1..=2 {
                let t = TargetFunction::parse(id, d).unwrap();
                let m = t.sup_norm(0.1).unwrap();
                for p in ProbeMeasure::grid(d).points() {
                    let x: Vec<f64> = p.iter().map(|v| v * 1.1).collect();
                    assert!(t.value(&x).unwrap().abs() <= m * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn convolution_check_examples() {
        let lin = TargetFunction::custom("identity", 1, |x| x[0]).unwrap();
        let h = SmoothedTarget::new(lin, 0.1).unwrap();
        assert!(convolution_error_check(&h, &ProbeMeasure::grid(1)).unwrap().pass);
        let g = smoothed("gauss:0.5", 2, 0.05);
        assert!(convolution_error_check(&g, &ProbeMeasure::grid(2)).unwrap().pass);
        assert!(convolution_error_check(&smoothed("dirac", 1, 0.1), &ProbeMeasure::grid(1)).is_err());
    }

    #[test]
    fn scaling_is_linear() {
        let t = TargetFunction::parse("mix2:0.3,0.4,0.6", 1).unwrap();
        let t2 = t.scaled(-2.0);
        for w in [0.1, 0.7, 1.9] {
            let a = t.source_spectrum(&[w], 0.1).unwrap();
            let b = t2.source_spectrum(&[w], 0.1).unwrap();
            let (ra, ia) = (a.modulus * (2.0 * PI * a.phase).cos(), a.modulus * (2.0 * PI * a.phase).sin());
            let (rb, ib) = (b.modulus * (2.0 * PI * b.phase).cos(), b.modulus * (2.0 * PI * b.phase).sin());
            assert!((rb + 2.0 * ra).abs() < 1e-12 && (ib + 2.0 * ia).abs() < 1e-12);
        }
        assert_eq!(t2.value(&[0.3]).unwrap(), -2.0 * t.value(&[0.3]).unwrap());
    }

    proptest! {
        #[test]
        fn cos_min_matches_grid(a in 0.1f64..3.0, lo in -2.0f64..2.0, len in 0.0f64..1.0) {
            let hi = lo + len;
            let exact = cos_min(a, lo, hi);
            let grid = (0..=2000).map(|i| (2.0 * PI * a * (lo + len * i as f64 / 2000.0)).cos()).fold(f64::INFINITY, f64::min);
            prop_assert!(exact <= grid + 1e-12);
            prop_assert!(grid - exact < 1e-4);
        }
    }
}
