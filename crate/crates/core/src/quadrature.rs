//! Gauss-Legendre rules, 1D quadrature and 2D tensor-product cubature.
//!
//! An order-`n` rule places its nodes at the roots of the Legendre polynomial
//! `P_n` and integrates polynomials of degree `2n - 1` exactly on `[-1, 1]`.
//! Integration over a general interval uses the affine map
//! `t = (b - a)/2 * xi + (a + b)/2`.
//!
//! Rules are computed once per order and kept in a process-wide cache, so
//! [`gauss_legendre_rule`] is a table read after the first call.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported rule order.
pub const MAX_ORDER: usize = 256;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Immutable node/weight table on `[-1, 1]`, nodes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    /// Computes a fresh rule without touching the cache.
    pub fn compute(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "quadrature order {order} outside 1..={MAX_ORDER}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots come in +/- pairs; solve for the positive half and mirror.
        let half = n.div_ceil(2);
        for i in 1..=half {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..NEWTON_MAX_ITER {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= NEWTON_TOL {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // i = 1 is the largest root.
            nodes[n - i] = x;
            nodes[i - 1] = -x;
            weights[n - i] = w;
            weights[i - 1] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(t_i, w_i)` with nodes mapped onto `domain`. Weights are not rescaled.
    pub fn mapped_nodes(&self, domain: Interval) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = domain.half_width();
        let mid = domain.midpoint();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&xi, &w)| (half * xi + mid, w))
    }
}

/// Evaluates `(P_n(x), P_n'(x))` via the three-term recurrence.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

static RULE_CACHE: [OnceLock<QuadRule>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];

/// Cached Gauss-Legendre rule of the given order (1 ..= 256).
pub fn gauss_legendre_rule(order: usize) -> Result<&'static QuadRule> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {order} outside 1..={MAX_ORDER}"
        )));
    }
    let slot = &RULE_CACHE[order - 1];
    if let Some(rule) = slot.get() {
        return Ok(rule);
    }
    let rule = QuadRule::compute(order)?;
    Ok(slot.get_or_init(|| rule))
}

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidArgument(format!(
                "interval requires a < b, got [{a}, {b}]"
            )))
        }
    }

    /// Symmetric interval `[-half_width, half_width]`.
    pub fn centered(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

pub fn integrate_1d<F>(f: F, domain: Interval, rule: &QuadRule) -> f64
where
    F: Fn(f64) -> f64,
{
    let sum: f64 = rule.mapped_nodes(domain).map(|(t, w)| w * f(t)).sum();
    domain.half_width() * sum
}

pub fn integrate_2d<G>(g: G, rect_x: Interval, rect_y: Interval, rule: &QuadRule) -> f64
where
    G: Fn(f64, f64) -> f64,
{
    let mut outer = 0.0;
    for (psi, wj) in rule.mapped_nodes(rect_y) {
        let inner: f64 = rule
            .mapped_nodes(rect_x)
            .map(|(chi, wi)| wi * g(chi, psi))
            .sum();
        outer += wj * inner;
    }
    rect_x.length() * rect_y.length() / 4.0 * outer
}
