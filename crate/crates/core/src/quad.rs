//! Quadrature helpers: cached Gauss–Legendre rules, composite and adaptive
//! integration on intervals.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use gauss_quad::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    fn build(n: usize) -> Self {
        let gl = GaussLegendre::new(n.max(2)).expect("degree at least 2");
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Shared rule of degree `n`.
pub fn legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Box::leak(Box::new(Rule::build(n))))
}

/// `panels` equal sub-intervals of `[a, b]`, each with an `n`-point rule.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, n: usize, mut f: F) -> f64 {
    let rule = legendre(n);
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// Nodes and weights of [`composite`], for tensor-product use.
pub fn composite_nodes(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let rule = legendre(n);
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        out.extend(rule.mapped(lo, lo + h));
    }
    out
}

/// Adaptive bisection comparing 15- and 30-point Gauss–Legendre estimates.
///
/// Stops on an interval when the two estimates agree to
/// `max(abs_tol · len/total_len, rel_tol · |estimate|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, abs_tol: f64, rel_tol: f64, mut f: F) -> f64 {
    if a == b {
        return 0.0;
    }
    let lo_rule = legendre(15);
    let hi_rule = legendre(30);
    let total = (b - a).abs();
    let mut stack = vec![(a, b, 0u32)];
    let mut sum = 0.0;
    while let Some((l, r, depth)) = stack.pop() {
        let coarse = lo_rule.integrate(l, r, &mut f);
        let fine = hi_rule.integrate(l, r, &mut f);
        let tol = (abs_tol * (r - l).abs() / total).max(rel_tol * fine.abs());
        if (fine - coarse).abs() <= tol || depth >= 40 {
            sum += fine;
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
    }
    sum
}
