//! Quadrature rules on triangles and Gauss-Legendre rules on intervals.
use serde::{Deserialize, Serialize};

/// Per-triangle quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleRule {
    /// Vertex rule, exact for degree 1.
    Vertex,
    /// Edge-midpoint rule, exact for degree 2.
    Midpoint,
    /// Six point rule, exact for degree 4.
    Order4,
}

impl TriangleRule {
    /// Barycentric points and weights (weights sum to 1).
    pub fn points(&self) -> &'static [([f64; 3], f64)] {
        match self {
            TriangleRule::Vertex => &VERTEX,
            TriangleRule::Midpoint => &MIDPOINT,
            TriangleRule::Order4 => &ORDER4,
        }
    }
}

const THIRD: f64 = 1.0 / 3.0;

static VERTEX: [([f64; 3], f64); 3] = [
    ([1.0, 0.0, 0.0], THIRD),
    ([0.0, 1.0, 0.0], THIRD),
    ([0.0, 0.0, 1.0], THIRD),
];

static MIDPOINT: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], THIRD),
    ([0.0, 0.5, 0.5], THIRD),
    ([0.5, 0.0, 0.5], THIRD),
];

const A1: f64 = 0.445_948_490_915_965;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011;
const A2: f64 = 0.091_576_213_509_771;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = (1.0 - 3.0 * W1) / 3.0;

static ORDER4: [([f64; 3], f64); 6] = [
    ([A1, A1, B1], W1),
    ([A1, B1, A1], W1),
    ([B1, A1, A1], W1),
    ([A2, A2, B2], W2),
    ([A2, B2, A2], W2),
    ([B2, A2, A2], W2),
];

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}
