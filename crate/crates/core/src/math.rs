//! Vectors, activations, the standard Gaussian law and its tail bounds.
//!
//! Inputs `x ∈ ℝ^d` are augmented to `x̃ = (x, 1)` and weights are stored
//! augmented as `w̃ = (w, b)`, so a neuron is `σ(⟨w̃, x̃⟩)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{check_dim, invalid, Error, Result};

/// `x̃ = (x, 1)`.
pub fn augment(x: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.extend_from_slice(x);
    v.push(1.0);
    v
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        0.0
    }
}

/// Derivative of [`relu`] with the closed tie convention `step(0) = 1`.
#[inline]
pub fn step(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Random feature `Φ(x; w̃) = x̃ · step(⟨w̃, x̃⟩)`.
pub fn feature(x: &[f64], w_tilde: &[f64]) -> Result<Vec<f64>> {
    if w_tilde.len() != x.len() + 1 {
        return Err(Error::DimensionMismatch { expected: x.len() + 1, got: w_tilde.len() });
    }
    let xt = augment(x);
    let s = step(dot(w_tilde, &xt));
    Ok(xt.into_iter().map(|v| v * s).collect())
}

/// Standard Gaussian `N(0, I_dim)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussianLaw {
    pub dim: usize,
}

impl GaussianLaw {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.sample_into(rng, &mut v);
        v
    }

    pub fn density(&self, w: &[f64]) -> f64 {
        gaussian_density(w, 1.0)
    }
}

/// Density of `N(0, s² I)` at `w`.
pub fn gaussian_density(w: &[f64], s: f64) -> f64 {
    let d = w.len() as f64;
    (-norm_sq(w) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).powf(d / 2.0)
}

/// Uniform point on the unit sphere `S^{d-1}`.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = norm(out);
        if n > 1e-300 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// Uniform point in the closed unit ball.
pub fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    uniform_direction(rng, out);
    let d = out.len() as f64;
    let rad: f64 = rng.gen::<f64>().powf(1.0 / d);
    out.iter_mut().for_each(|v| *v *= rad);
}

/// Chi variate with `k` degrees of freedom.
pub fn chi_sample<R: Rng + ?Sized>(rng: &mut R, k: usize) -> f64 {
    let mut s = 0.0;
    for _ in 0..k {
        let z: f64 = StandardNormal.sample(rng);
        s += z * z;
    }
    s.sqrt()
}

/// Exact `E‖w‖ = √2 Γ((d+1)/2) / Γ(d/2)` for `w ~ N(0, I_d)`.
pub fn mean_norm(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::SQRT_2 * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}

/// Exact `E[‖w‖^k 𝟙[‖w‖ > r]]` for `w ~ N(0, I_d)` via the upper regularized gamma.
pub fn tail_moment_exact(d: usize, r: f64, k: u32) -> f64 {
    let d = d as f64;
    let k = k as f64;
    let scale = 2f64.powf(k / 2.0) * (ln_gamma((d + k) / 2.0) - ln_gamma(d / 2.0)).exp();
    if r <= 0.0 {
        return scale;
    }
    scale * gamma_ur((d + k) / 2.0, r * r / 2.0)
}

/// Upper bounds on Gaussian tails at radius `r ≥ √d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBounds {
    /// `P[‖w‖ > r] ≤ exp(−(r−√d)²/2)`.
    pub prob_bound: f64,
    /// `∫_{‖w‖>r} ‖w‖ dG ≤ (r+2) exp(−(r−√d)²/2)`.
    pub norm_tail_tight: f64,
    /// `∫_{‖w‖>r} ‖w‖ dG ≤ 2(√d+3) exp(−(r−√d)²/4)`.
    pub norm_tail_bound: f64,
    /// `∫_{‖w‖>r} ‖w‖² dG ≤ 2(r+2)² exp(−(r−√d)²/2)`.
    pub sqnorm_tail_tight: f64,
    /// `∫_{‖w‖>r} ‖w‖² dG ≤ 2(√d+7)² exp(−(r−√d)²/4)`.
    pub sqnorm_tail_bound: f64,
}

pub fn gaussian_tail_bounds(d: usize, r: f64) -> Result<TailBounds> {
    check_dim(d)?;
    let sd = (d as f64).sqrt();
    if !(r >= sd) {
        return Err(Error::Precondition(format!("tail radius r = {r} is below √d = {sd}")));
    }
    let g = r - sd;
    let e2 = (-g * g / 2.0).exp();
    let e4 = (-g * g / 4.0).exp();
    Ok(TailBounds {
        prob_bound: e2,
        norm_tail_tight: (r + 2.0) * e2,
        norm_tail_bound: 2.0 * (sd + 3.0) * e4,
        sqnorm_tail_tight: 2.0 * (r + 2.0).powi(2) * e2,
        sqnorm_tail_bound: 2.0 * (sd + 7.0).powi(2) * e4,
    })
}

/// Monte Carlo estimates (with standard errors) of the three tail functionals.
#[derive(Clone, Copy, Debug, Default)]
pub struct TailEstimate {
    pub prob: f64,
    pub prob_se: f64,
    pub first: f64,
    pub first_se: f64,
    pub second: f64,
    pub second_se: f64,
}

/// Importance-sampled tail functionals.
///
/// The proposal is `N(0, s² I)` with `s = max(1, r/√d)`, which puts its bulk
/// at radius `r`; weights are `G(z)/G_s(z)`.
pub fn estimate_tail_moments<R: Rng + ?Sized>(d: usize, r: f64, n: usize, rng: &mut R) -> Result<TailEstimate> {
    check_dim(d)?;
    if n < 2 {
        return Err(invalid("n", "need at least two samples"));
    }
    let s = (r / (d as f64).sqrt()).max(1.0);
    let log_s_d = d as f64 * s.ln();
    let shrink = 1.0 - 1.0 / (s * s);
    let mut z = vec![0.0; d];
    let mut acc = [[0.0f64; 2]; 3];
    for _ in 0..n {
        for v in z.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = s * g;
        }
        let q = norm_sq(&z);
        let nz = q.sqrt();
        if nz <= r {
            continue;
        }
        let wgt = (log_s_d - 0.5 * q * shrink).exp();
        for (k, val) in [wgt, wgt * nz, wgt * q].into_iter().enumerate() {
            acc[k][0] += val;
            acc[k][1] += val * val;
        }
    }
    let nf = n as f64;
    let stat = |k: usize| {
        let mean = acc[k][0] / nf;
        let var = (acc[k][1] / nf - mean * mean).max(0.0);
        (mean, (var / (nf - 1.0)).sqrt())
    };
    let (prob, prob_se) = stat(0);
    let (first, first_se) = stat(1);
    let (second, second_se) = stat(2);
    Ok(TailEstimate { prob, prob_se, first, first_se, second, second_se })
}

/// Both sides of `(x+a) e^{−(x−b)²/c} ≤ (a+b) e^{−(x−b)²/(2c)}` and, when
/// `squared`, of its square version, after checking the preconditions.
pub fn exp_simp_sides(a: f64, b: f64, c: f64, x: f64, squared: bool) -> Result<(f64, f64)> {
    let need = if squared { 4.0 * c } else { 2.0 * c };
    if !(b >= 0.0 && c > 0.0 && a >= 0.0 && x >= b && a + b >= need) {
        return Err(Error::Precondition(format!(
            "exp_simp requires b ≥ 0, c > 0, a ≥ 0, x ≥ b and a + b ≥ {}c (a={a}, b={b}, c={c}, x={x})",
            if squared { 4 } else { 2 }
        )));
    }
    let g = (x - b) * (x - b);
    let p = if squared { 2 } else { 1 };
    let lhs = (x + a).powi(p) * (-g / c).exp();
    let rhs = (a + b).powi(p) * (-g / (2.0 * c)).exp();
    Ok((lhs, rhs))
}

/// Whether the first exp_simp inequality holds at a valid parameter tuple.
pub fn exp_simp_check(a: f64, b: f64, c: f64, x: f64) -> Result<bool> {
    let (lhs, rhs) = exp_simp_sides(a, b, c, x, false)?;
    Ok(lhs <= rhs * (1.0 + 1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn feature_examples() {
        assert_eq!(feature(&[1.0], &[-1.0, -0.5]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(feature(&[1.0], &[1.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert!(feature(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn step_tie_is_closed() {
        assert_eq!(step(0.0), 1.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(step(-0.0), 1.0);
    }

    #[test]
    fn mean_norm_values() {
        assert!((mean_norm(1) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!((mean_norm(2) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
        for d in 1..40 {
            assert!(mean_norm(d) <= (d as f64).sqrt());
        }
    }

    #[test]
    fn mean_norm_matches_mc() {
        let mut rng = RngStream::new(1, 0);
        for d in 1..=5 {
            let g = GaussianLaw::new(d).unwrap();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| norm(&g.sample(&mut rng))).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            assert!((mean - mean_norm(d)).abs() <= 3.0 * se, "d={d}");
        }
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(gaussian_tail_bounds(1, 1.0).unwrap().prob_bound, 1.0);
        let b = gaussian_tail_bounds(1, 3.0).unwrap();
        assert!((b.prob_bound - (-2f64).exp()).abs() < 1e-15);
        assert!(gaussian_tail_bounds(4, 1.9).is_err());
    }

    #[test]
    fn exact_tail_moments_known_values() {
        // P[|w| > 3] in one dimension.
        assert!((tail_moment_exact(1, 3.0, 0) - 0.002_699_796_063_260_2).abs() < 1e-12);
        assert!((tail_moment_exact(3, 0.0, 2) - 3.0).abs() < 1e-12);
        assert!((tail_moment_exact(2, 0.0, 1) - mean_norm(2)).abs() < 1e-12);
    }

    #[test]
    fn importance_sampler_matches_exact() {
        let mut rng = RngStream::new(2, 0);
        for d in [1usize, 3, 5] {
            let r = (d as f64).sqrt() + 1.5;
            let est = estimate_tail_moments(d, r, 200_000, &mut rng).unwrap();
            for (e, se, k) in [(est.prob, est.prob_se, 0), (est.first, est.first_se, 1), (est.second, est.second_se, 2)] {
                let exact = tail_moment_exact(d, r, k);
                assert!((e - exact).abs() <= 4.0 * se, "d={d} k={k} est={e} exact={exact} se={se}");
            }
        }
    }

    #[test]
    fn exp_simp_examples() {
        let (l, r) = exp_simp_sides(3.0, 1.0, 2.0, 1.0, false).unwrap();
        assert_eq!(l, 4.0);
        assert_eq!(r, 4.0);
        assert!(exp_simp_check(4.0, 0.0, 2.0, 5.0).unwrap());
        assert!(exp_simp_check(1.0, 0.0, 2.0, 5.0).is_err());
    }

    #[test]
    fn exp_simp_sweep_fails_only_near_b() {
        use rand::Rng;
        // The inequality needs x − b ≥ 2c/(a+b) (4c/(a+b) when squared); just
        // above x = b the linear growth of the prefactor wins.
        assert!(!exp_simp_check(16.67, 9.86, 4.82, 9.86 + 0.1).unwrap());
        let mut rng = RngStream::new(3, 0);
        let mut violations = 0;
        for _ in 0..10_000 {
            let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0), rng.gen_range(0.01..5.0));
            if a + b < 4.0 * c {
                continue;
            }
            let x = b + rng.gen_range(0.0..2.0) * 4.0 * c / (a + b);
            let s = a + b;
            for (squared, gap) in [(false, 2.0 * c / s), (true, 4.0 * c / s)] {
                let (l, r) = exp_simp_sides(a, b, c, x, squared).unwrap();
                if l > r * (1.0 + 1e-12) {
                    violations += 1;
                    assert!(x - b < gap, "violation outside the Taylor band: a={a} b={b} c={c} x={x}");
                }
            }
        }
        assert!(violations > 0);
    }

    #[test]
    fn gaussian_density_normalised_1d() {
        let n = 20_000;
        let h = 20.0 / n as f64;
        let s: f64 = (0..n).map(|i| gaussian_density(&[-10.0 + (i as f64 + 0.5) * h], 0.7) * h).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn relu_is_z_times_step(z in -1e6f64..1e6) {
            prop_assert_eq!(relu(z), z * step(z));
        }

        #[test]
        fn feature_norm_two_valued(x in prop::collection::vec(-1.0f64..1.0, 1..4), seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 0);
            let w = GaussianLaw::new(x.len() + 1).unwrap().sample(&mut rng);
            let n = norm(&feature(&x, &w).unwrap());
            let full = (norm_sq(&x) + 1.0).sqrt();
            prop_assert!(n == 0.0 || (n - full).abs() < 1e-12);
        }

        #[test]
        fn exp_simp_holds_past_taylor_threshold(a in 0.0f64..20.0, b in 0.0f64..20.0, c in 0.01f64..5.0, t in 0.0f64..30.0) {
            prop_assume!(a + b >= 4.0 * c);
            let s = a + b;
            let x = b + 2.0 * c / s + t;
            let (l1, r1) = exp_simp_sides(a, b, c, x, false).unwrap();
            prop_assert!(l1 <= r1 * (1.0 + 1e-12));
            let x2 = b + 4.0 * c / s + t;
            let (l2, r2) = exp_simp_sides(a, b, c, x2, true).unwrap();
            prop_assert!(l2 <= r2 * (1.0 + 1e-12));
        }

        #[test]
        fn tight_tail_forms_below_simple(d in 1usize..10, t in 0.0f64..12.0) {
            let r = (d as f64).sqrt() + t;
            let b = gaussian_tail_bounds(d, r).unwrap();
            prop_assert!(b.norm_tail_tight <= b.norm_tail_bound * (1.0 + 1e-12));
            prop_assert!(b.sqnorm_tail_tight <= b.sqnorm_tail_bound * (1.0 + 1e-12));
            prop_assert!(tail_moment_exact(d, r, 0) <= b.prob_bound);
            prop_assert!(tail_moment_exact(d, r, 1) <= b.norm_tail_tight);
            prop_assert!(tail_moment_exact(d, r, 2) <= b.sqnorm_tail_tight);
        }
    }
}
