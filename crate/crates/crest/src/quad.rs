//! Fixed quadrature rules: a 13-point symmetric triangle rule exact for
//! polynomials of total degree 7 and a 5-point Gauss-Legendre segment rule
//! exact for degree 9. All integrands in this crate are polynomials of
//! degree at most 6 on (sub-)triangles, so both rules are exact with
//! headroom.

use crate::mesh::Point;

/// Barycentric points and weights (relative to the triangle area) of the
/// 13-point degree-7 symmetric rule.
pub const TRI13: [([f64; 3], f64); 13] = {
    const W0: f64 = -0.149570044467670;
    const A1: f64 = 0.260345966079038;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.175615257433204;
    const A2: f64 = 0.065130102902216;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.053347235608839;
    const P: f64 = 0.638444188569809;
    const Q: f64 = 0.312865496004875;
    const R: f64 = 1.0 - P - Q;
    const W3: f64 = 0.077113760890257;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
        ([P, Q, R], W3),
        ([P, R, Q], W3),
        ([Q, P, R], W3),
        ([Q, R, P], W3),
        ([R, P, Q], W3),
        ([R, Q, P], W3),
    ]
};

/// Gauss-Legendre nodes and weights on [0, 1], exact for degree 9.
pub fn gauss5() -> [(f64, f64); 5] {
    let s1 = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let s2 = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let w0 = 128.0 / 225.0;
    let w1 = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
    let w2 = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
    [
        (0.5, 0.5 * w0),
        (0.5 * (1.0 - s1), 0.5 * w1),
        (0.5 * (1.0 + s1), 0.5 * w1),
        (0.5 * (1.0 - s2), 0.5 * w2),
        (0.5 * (1.0 + s2), 0.5 * w2),
    ]
}

pub fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Integrates `f` over the triangle with the given corners.
pub fn tri_integrate(p: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
    let area = signed_area(p).abs();
    let mut sum = 0.0;
    for (bary, w) in TRI13 {
        let x = [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ];
        sum += w * f(x);
    }
    area * sum
}

/// Integrates `f` along the segment from `a` to `b` (arc-length measure).
pub fn seg_integrate(a: Point, b: Point, mut f: impl FnMut(Point) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut sum = 0.0;
    for (t, w) in gauss5() {
        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        sum += w * f(x);
    }
    len * sum
}
