//! Shared oracles for the integration tests: an independent triangle
//! quadrature built from tensorized Gauss-Legendre rules (exact for
//! polynomials up to the requested degree) and small random helpers.

use crest::mesh::Point;
use rand::Rng;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [0, 1],
/// computed from scratch with Newton iterations on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess on [-1, 1]
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((0.5 * (x + 1.0), 0.5 * w));
    }
    rule
}

/// Value and derivative of the degree-`n` Legendre polynomial at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over a triangle by the Duffy-type product rule: the map
/// `(s, t) -> a + s (b - a) + s t (c - b)` has Jacobian `2 |T| s`, so a
/// polynomial of total degree `d` becomes a polynomial of degree `d + 1`
/// in `s` and `d` in `t`; with `n >= d/2 + 1` points per axis the result
/// is exact.
pub fn tri_integrate_product(p: &[Point; 3], n: usize, mut f: impl FnMut(Point) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
            .abs();
    let mut sum = 0.0;
    for &(s, ws) in &rule {
        for &(t, wt) in &rule {
            let x = [
                p[0][0] + s * (p[1][0] - p[0][0]) + s * t * (p[2][0] - p[1][0]),
                p[0][1] + s * (p[1][1] - p[0][1]) + s * t * (p[2][1] - p[1][1]),
            ];
            sum += ws * wt * 2.0 * s * f(x);
        }
    }
    area * sum
}

/// Random CR coefficients with zero boundary values.
pub fn random_cr(mesh: &crest::mesh::Mesh, rng: &mut impl Rng) -> crest::fe::CrFunction {
    let coeffs = (0..mesh.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    crest::fe::CrFunction::from_edge_values(mesh, coeffs)
}
