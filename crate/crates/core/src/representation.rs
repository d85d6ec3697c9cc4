//! Infinite-width threshold and ReLU representations of a smoothed target.
//!
//! With `ρ = ‖w‖`, `θ = θ_h(w)` and `σ′ = step`,
//!
//! ```text
//! F_r(x) = c_F + 2π ∫_{|b| ≤ ‖w‖ ≤ r} |ĥ(w)| sin(2π(b − θ)) σ′(wᵀx + b) dw̃
//! Q_r(x) = c_Q + a_Qᵀx − 4π² ∫_{|b| ≤ ‖w‖ ≤ r} |ĥ(w)| cos(2π(θ − b)) σ(wᵀx + b) dw̃
//! c_F = ∫ |ĥ| cos(2π(θ − ρ)) dw
//! c_Q = ∫ |ĥ| [cos(2π(θ − ρ)) − 2πρ sin(2π(θ − ρ))] dw
//! a_Q = −2π ∫ w |ĥ| sin(2π(θ − ρ)) dw
//! ```
//!
//! Both follow from writing `h(x) = ∫ |ĥ| g_w(wᵀx) dw` with
//! `g_w(z) = cos(2π(z + θ))` and expanding `g_w` around `z = −ρ`; `F_∞ = Q_∞ = h`
//! on the unit ball. The inner `b`-integrals are evaluated in closed form.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::math::{dot, norm, GaussianLaw};
use crate::quad;
use crate::rng::{tags, RngStream};
use crate::targets::{SmoothedTarget, Spectrum};

const TWO_PI: f64 = 2.0 * PI;
const PANELS_PER_UNIT: f64 = 4.0;
const NODES: usize = 16;

/// Surface area of the unit sphere in `ℝ^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Radius beyond which `|ĥ|` times any polynomial weight used here is negligible.
pub fn spectral_radius(h: &SmoothedTarget) -> Result<f64> {
    Ok(10.0 * h.envelope()?.scale)
}

type Integrand<'a> = dyn Fn(&[f64], f64, Spectrum) -> f64 + Sync + 'a;

/// `∫_{r0 ≤ ‖w‖ ≤ r1} f(w, ‖w‖, ĥ(w)) dw` by quadrature.
///
/// `radial` promises that `f` depends on `w` only through `‖w‖` and the
/// spectrum, so that a one-dimensional integral suffices for radial targets.
fn shell_integral(h: &SmoothedTarget, r0: f64, r1: f64, radial: bool, f: &Integrand<'_>) -> Result<f64> {
    let d = h.dim();
    if r1 <= r0 {
        return Ok(0.0);
    }
    let panels = ((r1 - r0) * PANELS_PER_UNIT).ceil().max(1.0) as usize;
    let nodes = quad::composite_nodes(r0, r1, panels, NODES);
    if radial && h.is_radial() {
        let area = sphere_area(d);
        let parts: Vec<f64> = nodes
            .par_chunks(NODES)
            .map(|chunk| {
                let mut w = vec![0.0; d];
                chunk
                    .iter()
                    .map(|&(rho, wt)| {
                        w[0] = rho;
                        wt * area * rho.powi(d as i32 - 1) * f(&w, rho, h.spec(&w))
                    })
                    .sum()
            })
            .collect();
        return Ok(parts.iter().sum());
    }
    match d {
        1 => {
            let parts: Vec<f64> = nodes
                .par_chunks(NODES)
                .map(|chunk| {
                    chunk
                        .iter()
                        .map(|&(rho, wt)| {
                            let p = [rho];
                            let n = [-rho];
                            wt * (f(&p, rho, h.spec(&p)) + f(&n, rho, h.spec(&n)))
                        })
                        .sum()
                })
                .collect();
            Ok(parts.iter().sum())
        }
        2 => {
            let n_ang = 64 + 2 * (2.0 * TWO_PI * r1).ceil() as usize;
            let angles: Vec<(f64, f64)> = (0..n_ang)
                .map(|i| {
                    let t = TWO_PI * (i as f64 + 0.5) / n_ang as f64;
                    (t.cos(), t.sin())
                })
                .collect();
            let dt = TWO_PI / n_ang as f64;
            let parts: Vec<f64> = nodes
                .par_chunks(NODES)
                .map(|chunk| {
                    let mut s = 0.0;
                    for &(rho, wt) in chunk {
                        let mut ring = 0.0;
                        for &(c, sn) in &angles {
                            let w = [rho * c, rho * sn];
                            ring += f(&w, rho, h.spec(&w));
                        }
                        s += wt * rho * dt * ring;
                    }
                    s
                })
                .collect();
            Ok(parts.iter().sum())
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Importance-sampled `∫ f(w) dw` with proposal `N(0, s² I)`; returns the
/// estimate and its standard error.
fn spectral_mc(h: &SmoothedTarget, n: usize, f: &Integrand<'_>) -> Result<(f64, f64)> {
    let d = h.dim();
    let s = h.envelope()?.scale;
    let law = GaussianLaw::new(d)?;
    let chunks = 64;
    let per = n.div_ceil(chunks);
    let base = RngStream::new(0, tags::CONSTANTS);
    let sums: Vec<(f64, f64)> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = base.derive(c);
            let mut z = vec![0.0; d];
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..per {
                law.sample_into(&mut rng, &mut z);
                let w: Vec<f64> = z.iter().map(|v| v * s).collect();
                let q = crate::math::gaussian_density(&w, s);
                let rho = norm(&w);
                let v = f(&w, rho, h.spec(&w)) / q;
                a += v;
                b += v * v;
            }
            (a, b)
        })
        .collect();
    let total = (per * chunks) as f64;
    let (a, b) = sums.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let mean = a / total;
    let var = (b / total - mean * mean).max(0.0);
    Ok((mean, (var / total).sqrt()))
}

fn integral_or_mc(h: &SmoothedTarget, radial: bool, f: &Integrand<'_>) -> Result<(f64, f64)> {
    let rmax = spectral_radius(h)?;
    if (radial && h.is_radial()) || h.dim() <= 2 {
        Ok((shell_integral(h, 0.0, rmax, radial, f)?, 0.0))
    } else {
        spectral_mc(h, 1_000_000, f)
    }
}

/// Constants of the infinite-width representations.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConstants {
    /// `c_F`, the constant of the threshold representation.
    pub c_threshold: f64,
    /// `c_Q`, the constant of the ReLU representation.
    pub c_relu: f64,
    /// `a_Q`, the linear term of the ReLU representation.
    pub linear: Vec<f64>,
    /// Monte Carlo standard error (zero for quadrature).
    pub stderr: f64,
}

impl SpectralConstants {
    pub fn compute(h: &SmoothedTarget) -> Result<Self> {
        h.require_fourier()?;
        let d = h.dim();
        let (c_threshold, se1) = integral_or_mc(h, true, &|_, rho, s| s.modulus * (TWO_PI * (s.phase - rho)).cos())?;
        let (c_relu, se2) = integral_or_mc(h, true, &|_, rho, s| {
            let a = TWO_PI * (s.phase - rho);
            s.modulus * (a.cos() - TWO_PI * rho * a.sin())
        })?;
        let mut linear = vec![0.0; d];
        let mut se3 = 0.0f64;
        if !h.base().is_even() {
            for (k, slot) in linear.iter_mut().enumerate() {
                let (v, se) =
                    integral_or_mc(h, false, &move |w, rho, s| -TWO_PI * w[k] * s.modulus * (TWO_PI * (s.phase - rho)).sin())?;
                *slot = v;
                se3 = se3.max(se);
            }
        }
        Ok(Self { c_threshold, c_relu, linear, stderr: se1.max(se2).max(se3) })
    }
}

fn check_point(h: &SmoothedTarget, x: &[f64], r: f64) -> Result<()> {
    if x.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: x.len() });
    }
    if norm(x) > 1.0 + 1e-12 {
        return Err(invalid("x", "representations are evaluated on the unit ball"));
    }
    if !(r >= 0.0) {
        return Err(invalid("r", format!("truncation radius must be non-negative, got {r}")));
    }
    if h.dim() > 2 {
        return Err(Error::UnsupportedDimension(h.dim()));
    }
    h.require_fourier()
}

/// `2π ∫_{lo}^{ρ} sin(2π(b − θ)) db` with `lo = max(−ρ, −wᵀx)`.
fn threshold_inner(z: f64, rho: f64, theta: f64) -> f64 {
    let lo = (-rho).max(-z);
    if lo >= rho {
        return 0.0;
    }
    (TWO_PI * (lo - theta)).cos() - (TWO_PI * (rho - theta)).cos()
}

/// `−4π² ∫_{lo}^{ρ} (z + b) cos(2π(b − θ)) db` with `lo = max(−ρ, −z)`.
fn relu_inner(z: f64, rho: f64, theta: f64) -> f64 {
    let lo = (-rho).max(-z);
    if lo >= rho {
        return 0.0;
    }
    let anti = |u: f64| {
        let a = TWO_PI * (u - theta);
        (z + u) * a.sin() / TWO_PI + a.cos() / (TWO_PI * TWO_PI)
    };
    -4.0 * PI * PI * (anti(rho) - anti(lo))
}

/// `F_r(x)` by quadrature over `w` with the bias integral in closed form (d ≤ 2).
pub fn infinite_threshold_net(h: &SmoothedTarget, consts: &SpectralConstants, r: f64, x: &[f64]) -> Result<f64> {
    check_point(h, x, r)?;
    let top = r.min(spectral_radius(h)?);
    let body = shell_integral(h, 0.0, top, false, &|w, rho, s| s.modulus * threshold_inner(dot(w, x), rho, s.phase))?;
    Ok(consts.c_threshold + body)
}

/// `Q_r(x)` by quadrature over `w` with the bias integral in closed form (d ≤ 2).
pub fn infinite_relu_net(h: &SmoothedTarget, consts: &SpectralConstants, r: f64, x: &[f64]) -> Result<f64> {
    check_point(h, x, r)?;
    let top = r.min(spectral_radius(h)?);
    let body = shell_integral(h, 0.0, top, false, &|w, rho, s| s.modulus * relu_inner(dot(w, x), rho, s.phase))?;
    Ok(consts.c_relu + dot(&consts.linear, x) + body)
}

/// `∫_{‖w‖ > r} ‖w‖^k |ĥ(w)| dw` (quadrature, or Monte Carlo for non-radial
/// targets in d ≥ 3).
pub fn tail_moment(h: &SmoothedTarget, r: f64, k: i32) -> Result<f64> {
    h.require_fourier()?;
    let rmax = spectral_radius(h)?;
    if h.is_radial() || h.dim() <= 2 {
        return shell_integral(h, r.min(rmax), rmax, true, &|_, rho, s| rho.powi(k) * s.modulus);
    }
    let (v, _) = spectral_mc(h, 1_000_000, &|_, rho, s| if rho > r { rho.powi(k) * s.modulus } else { 0.0 })?;
    Ok(v)
}

/// `4π ∫_{‖w‖>r} ‖w‖ |ĥ| dw`, bounding `|h − F_r|` on the unit ball.
pub fn threshold_tail_bound(h: &SmoothedTarget, r: f64) -> Result<f64> {
    Ok(4.0 * PI * tail_moment(h, r, 1)?)
}

/// `12π² ∫_{‖w‖>r} ‖w‖² |ĥ| dw`, bounding `|h − Q_r|` on the unit ball.
pub fn relu_tail_bound(h: &SmoothedTarget, r: f64) -> Result<f64> {
    Ok(12.0 * PI * PI * tail_moment(h, r, 2)?)
}

/// `∫ |ĥ| dw`.
pub fn spectral_l1(h: &SmoothedTarget) -> Result<f64> {
    tail_moment(h, 0.0, 0)
}

/// `∫₀^∞ σ(z − b) f″(b) db`, which equals `f(z)` when `f(0) = f′(0) = 0`.
pub fn folklore_integral<F: Fn(f64) -> f64>(f2: F, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    quad::adaptive(0.0, z, 1e-13, 1e-13, |b| (z - b) * f2(b))
}
