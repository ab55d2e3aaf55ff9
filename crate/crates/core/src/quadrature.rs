//! Quadrature rules on segments and triangles.

use crate::tensor::Vec2;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess followed by Newton on P_n.
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

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule on a triangle in barycentric coordinates; weights sum to one and
/// are multiplied by the triangle area.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    bary: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl TriangleRule {
    /// Edge-midpoint rule, exact for quadratics.
    pub fn edge_midpoint() -> Self {
        TriangleRule {
            bary: vec![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point symmetric rule, exact for quartics.
    pub fn degree4() -> Self {
        let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
        let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
        let mut bary = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (x, w) in [(a, wa), (b, wb)] {
            let y = 1.0 - 2.0 * x;
            bary.extend([[y, x, x], [x, y, x], [x, x, y]]);
            weights.extend([w; 3]);
        }
        TriangleRule { bary, weights, degree: 4 }
    }

    /// Collapsed (Duffy) tensor Gauss rule with `k` points per direction,
    /// exact for polynomials of degree `2k − 2` on the triangle.
    pub fn collapsed_gauss(k: usize) -> Self {
        let (x, w) = gauss_legendre(k);
        let mut bary = Vec::with_capacity(k * k);
        let mut weights = Vec::with_capacity(k * k);
        for i in 0..k {
            let s = 0.5 * (x[i] + 1.0);
            for j in 0..k {
                let t = 0.5 * (x[j] + 1.0);
                let l1 = s;
                let l2 = (1.0 - s) * t;
                bary.push([1.0 - l1 - l2, l1, l2]);
                // reference area 1/2 → normalized weights sum to 1
                weights.push(0.25 * w[i] * w[j] * (1.0 - s) * 2.0);
            }
        }
        TriangleRule { bary, weights, degree: 2 * k - 2 }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and area-scaled weights on the triangle `p`.
    pub fn points(&self, p: &[Vec2; 3], area: f64) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        let p = *p;
        self.bary.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            (x, w * area)
        })
    }

    pub fn integrate<F: FnMut(Vec2) -> f64>(&self, p: &[Vec2; 3], area: f64, mut f: F) -> f64 {
        self.points(p, area).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss rule on a segment, returning points and length-scaled weights.
pub fn segment_points(a: Vec2, b: Vec2, n: usize) -> Vec<(Vec2, f64)> {
    let (x, w) = gauss_legendre(n);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let s = 0.5 * (xi + 1.0);
            ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], 0.5 * wi * len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    // ∫_{ref} x^a y^b = a! b! / (a+b+2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_reach_stated_degree() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for rule in [TriangleRule::edge_midpoint(), TriangleRule::degree4(), TriangleRule::collapsed_gauss(5)] {
            for a in 0..=rule.degree() as u32 {
                for b in 0..=(rule.degree() as u32 - a) {
                    let q = rule.integrate(&p, 0.5, |x| x[0].powi(a as i32) * x[1].powi(b as i32));
                    assert!((q - monomial_exact(a, b)).abs() < 1e-13, "deg {} {a} {b}", rule.degree());
                }
            }
        }
    }
}
