//! Fixed-order quadrature rules used throughout the crate.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Half-width of the square evaluation domain, in vortex radii.
pub const DOMAIN_HALF_WIDTH: f64 = 6.0;

/// Default tensor Gauss-Legendre order on the evaluation domain.
pub const DEFAULT_ORDER: usize = 64;

/// Nodes and weights of a rule already mapped onto a finite interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss-Legendre rule of `order` points on `[a, b]`.
    pub fn legendre(order: usize, a: f64, b: f64) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = gl.iter().map(|(x, w)| (mid + half * x, half * w)).unzip();
        Rule { nodes, weights }
    }

    /// Gauss-Hermite rule for the weight `exp(-x^2)` on the real line.
    pub fn hermite(order: usize) -> Self {
        let gh = GaussHermite::new(NonZeroUsize::new(order.max(1)).unwrap());
        let (nodes, weights) = gh.iter().map(|(x, w)| (*x, *w)).unzip();
        Rule { nodes, weights }
    }

    /// Periodic trapezoid rule on `[0, 2pi)`; exact for trigonometric
    /// polynomials of degree below `n`.
    pub fn periodic(n: usize) -> Self {
        let h = 2.0 * PI / n as f64;
        Rule {
            nodes: (0..n).map(|k| k as f64 * h).collect(),
            weights: vec![h; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Falls back to the trapezoid rule on the last interval when the number of
/// intervals is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i < even {
        s += values[i] + 4.0 * values[i + 1] + values[i + 2];
        i += 2;
    }
    s *= h / 3.0;
    if even < intervals {
        s += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    s
}

/// Plain trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}
