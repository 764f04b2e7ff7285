//! Gauss–Legendre helpers: cached reference rules, composite node sets and
//! refinement-to-convergence.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// The `n`-point rule, computed once per process.
pub fn gl_rule(n: usize) -> Arc<GlRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let n = n.max(2);
            let mut pairs = GaussLegendre::new(n)
                .expect("degree >= 2")
                .into_node_weight_pairs();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(GlRule {
                nodes: pairs.iter().map(|p| p.0).collect(),
                weights: pairs.iter().map(|p| p.1).collect(),
            })
        })
        .clone()
}

/// `panels` equal panels on `[a, b]`, `n` Gauss points each.
pub fn composite(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let rule = gl_rule(n);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Nodes for `total` points spread over the listed intervals, one panel
/// per interval, each panel using `total / intervals.len()` points split
/// into sub-panels of at most 64 points.
pub fn nodes_on_intervals(intervals: &[(f64, f64)], per_interval: usize) -> Vec<(f64, f64)> {
    let order = per_interval.min(64);
    let panels = per_interval.div_ceil(order);
    intervals
        .iter()
        .flat_map(|&(a, b)| composite(a, b, panels, order))
        .collect()
}

pub fn integrate(f: impl Fn(f64) -> f64, nodes: &[(f64, f64)]) -> f64 {
    nodes.iter().map(|&(t, w)| w * f(t)).sum()
}

/// Integrates over `intervals`, doubling the per-interval node count from
/// `start` until successive values differ by less than `tol` (absolute),
/// up to `cap` nodes per interval.
pub fn integrate_refined(
    f: impl Fn(f64) -> f64,
    intervals: &[(f64, f64)],
    start: usize,
    cap: usize,
    tol: f64,
) -> Result<f64> {
    let mut n = start;
    let mut prev = integrate(&f, &nodes_on_intervals(intervals, n));
    while n < cap {
        n *= 2;
        let cur = integrate(&f, &nodes_on_intervals(intervals, n));
        if (cur - prev).abs() < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!(
        "integral did not settle to {tol:e} within {cap} nodes per interval"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rule_integrates_polynomials() {
        let rule = gl_rule(5);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(8)).sum();
        assert_abs_diff_eq!(s, 2.0 / 9.0, epsilon = 1e-14);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn composite_sin() {
        let v = integrate(f64::sin, &composite(0.0, std::f64::consts::PI, 4, 16));
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn refined_reports_failure() {
        // A jump defeats the doubling criterion at a tight tolerance.
        let r = integrate_refined(|t| if t < 0.3 { 1.0 } else { 0.0 }, &[(0.0, 1.0)], 8, 64, 1e-15);
        assert!(r.is_err());
    }
}
