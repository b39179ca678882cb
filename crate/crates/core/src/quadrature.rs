//! Summation and Gauss–Legendre helpers shared by the integrators.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation in a fixed order, independent of threading.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Nodes and weights on `[-1, 1]` for the given order, cached process-wide.
pub fn legendre_rule(order: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("rule cache").get(&order) {
        return rule.clone();
    }
    let degree = NonZeroUsize::new(order.max(2)).expect("nonzero");
    let rule: Rule = Arc::new(GaussLegendre::new(degree).as_node_weight_pairs().to_vec());
    cache
        .lock()
        .expect("rule cache")
        .entry(order)
        .or_insert(rule)
        .clone()
}

/// `∫_a^b f` with a fixed-order rule.
pub fn integrate_fixed<F>(f: &F, a: f64, b: f64, order: usize) -> Complex64
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let rule = legendre_rule(order);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let terms: Vec<Complex64> = rule.iter().map(|&(x, w)| f(mid + half * x) * w).collect();
    pairwise_sum(&terms) * half
}

/// Result of an order-doubling integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Converged {
    pub value: Complex64,
    pub order: usize,
    pub change: f64,
}

/// Doubles the Gauss–Legendre order from `start` until two successive values
/// differ by at most `tol · max(1, |value|)`.
pub fn integrate_doubling<F>(f: &F, a: f64, b: f64, start: usize, max_order: usize, tol: f64) -> Result<Converged>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let mut order = start.max(2);
    let mut prev = integrate_fixed(f, a, b, order);
    while order * 2 <= max_order {
        order *= 2;
        let next = integrate_fixed(f, a, b, order);
        let change = (next - prev).norm();
        if change <= tol * next.norm().max(1.0) {
            return Ok(Converged {
                value: next,
                order,
                change,
            });
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged { order, tol })
}
