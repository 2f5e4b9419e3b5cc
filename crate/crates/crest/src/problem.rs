//! Source terms and manufactured exact solutions, including the benchmark
//! with a weighted line measure on a vertical segment and the
//! triangle/line clipping quadrature that keeps all integrands polynomial
//! on each side of the line.

use crate::fe::ConformingFunction;
use crate::mesh::{Mesh, Point};
use crate::quad;
use crate::{Error, Result};

/// A univariate polynomial in the second coordinate, low degree.
#[derive(Clone, Debug)]
pub struct Poly1 {
    /// Coefficients in ascending order.
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derivative(&self) -> Poly1 {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Poly1 { coeffs }
    }

    /// Maximum of `|p|` over `[a, b]`, attained at an endpoint or at a
    /// critical point. Critical points are closed-form for derivatives up
    /// to degree 2; higher degrees fall back to dense sampling.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut candidates = vec![lo, hi];
        let d = self.derivative();
        let dc: Vec<f64> = {
            let mut c = d.coeffs.clone();
            while c.last() == Some(&0.0) {
                c.pop();
            }
            c
        };
        match dc.len() {
            0 | 1 => {}
            2 => candidates.push(-dc[0] / dc[1]),
            3 => {
                let (c0, c1, c2) = (dc[0], dc[1], dc[2]);
                let disc = c1 * c1 - 4.0 * c2 * c0;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    candidates.push((-c1 + s) / (2.0 * c2));
                    candidates.push((-c1 - s) / (2.0 * c2));
                }
            }
            _ => {
                for k in 0..=256 {
                    candidates.push(lo + (hi - lo) * k as f64 / 256.0);
                }
            }
        }
        candidates
            .into_iter()
            .filter(|x| *x >= lo && *x <= hi)
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }
}

/// Piecewise-polynomial density, optionally split into two closed-form
/// branches at a vertical line.
pub struct Density {
    /// Branch split position; evaluation picks the branch by comparing the
    /// first coordinate against it.
    pub split_x: Option<f64>,
    eval: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Density {
    pub fn new(split_x: Option<f64>, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Density {
        Density { split_x, eval: Box::new(eval) }
    }

    pub fn constant(c: f64) -> Density {
        Density::new(None, move |_, _| c)
    }

    pub fn eval(&self, p: Point) -> f64 {
        (self.eval)(p[0], p[1])
    }
}

/// A weighted line measure supported on the vertical segment
/// `{x1 = x} x [0, 1]`.
pub struct LineMeasure {
    pub x: f64,
    pub weight: Poly1,
}

/// An `H^{-1}` functional: regular density plus optional line measure.
pub struct SourceTerm {
    pub regular: Option<Density>,
    pub line: Option<LineMeasure>,
}

impl SourceTerm {
    pub fn zero() -> SourceTerm {
        SourceTerm { regular: None, line: None }
    }

    /// The vertical line along which integrands change branch, if any.
    pub fn split_x(&self) -> Option<f64> {
        self.line
            .as_ref()
            .map(|l| l.x)
            .or_else(|| self.regular.as_ref().and_then(|d| d.split_x))
    }

    /// Action on a conforming function.
    pub fn apply(&self, mesh: &Mesh, g: &ConformingFunction) -> f64 {
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        self.apply_on(mesh, &all, &|t, p| {
            g.eval(mesh, t, mesh.barycentric(t, p)).unwrap().0
        })
    }

    /// Action on a function given by a local evaluator over the listed
    /// elements; elements crossed by the split line are integrated on
    /// clipped sub-triangles so that each polynomial branch is integrated
    /// on its own side.
    pub fn apply_on(&self, mesh: &Mesh, elements: &[usize], eval: &dyn Fn(usize, Point) -> f64) -> f64 {
        let split = self.split_x();
        let mut sum = 0.0;
        for &t in elements {
            let clip = split.and_then(|x| clip_element(mesh, t, x));
            if let Some(density) = &self.regular {
                match &clip {
                    Some(record) => {
                        for tri in record.left.iter().chain(record.right.iter()) {
                            sum += quad::tri_integrate(tri, |p| density.eval(p) * eval(t, p));
                        }
                    }
                    None => {
                        sum += quad::tri_integrate(&mesh.corners(t), |p| {
                            density.eval(p) * eval(t, p)
                        });
                    }
                }
            }
            if let (Some(line), Some(record)) = (&self.line, &clip) {
                sum += quad::seg_integrate(record.segment[0], record.segment[1], |p| {
                    line.weight.eval(p[1]) * eval(t, p)
                });
            }
        }
        sum
    }
}

/// Closed-form exact solution with optional gradient discontinuity across a
/// vertical line.
pub struct ExactSolution {
    pub split_x: Option<f64>,
    value: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>,
}

impl ExactSolution {
    pub fn new(
        split_x: Option<f64>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> ExactSolution {
        ExactSolution { split_x, value: Box::new(value), gradient: Box::new(gradient) }
    }

    pub fn value(&self, p: Point) -> f64 {
        (self.value)(p[0], p[1])
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        (self.gradient)(p[0], p[1])
    }
}

/// The rough-source benchmark pair on the unit square:
///
/// * `u = x1 (lambda - x1) x2 (1 - x2)` left of the line, `u = (1 - x1)
///   (x1 - lambda) x2 (1 - x2)` right of it (continuous, gradient jump
///   across the line),
/// * `f_reg = -Delta u` branchwise, plus the line measure with weight
///   `-x2 (1 - x2)` that the gradient jump of `u` induces on the segment
///   `{x1 = lambda}`.
pub fn benchmark(lambda: f64) -> Result<(SourceTerm, ExactSolution)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let l = lambda;
    let source = SourceTerm {
        regular: Some(Density::new(Some(l), move |x, y| {
            if x < l {
                2.0 * x * (l - x) + 2.0 * y * (1.0 - y)
            } else {
                2.0 * (1.0 - x) * (x - l) + 2.0 * y * (1.0 - y)
            }
        })),
        line: Some(LineMeasure { x: l, weight: Poly1 { coeffs: vec![0.0, -1.0, 1.0] } }),
    };
    let exact = ExactSolution::new(
        Some(l),
        move |x, y| {
            if x < l {
                x * (l - x) * y * (1.0 - y)
            } else {
                (1.0 - x) * (x - l) * y * (1.0 - y)
            }
        },
        move |x, y| {
            if x < l {
                [(l - 2.0 * x) * y * (1.0 - y), x * (l - x) * (1.0 - 2.0 * y)]
            } else {
                [(1.0 + l - 2.0 * x) * y * (1.0 - y), (1.0 - x) * (x - l) * (1.0 - 2.0 * y)]
            }
        },
    );
    Ok((source, exact))
}

/// Per-element record of the intersection with a vertical line: the clipped
/// segment and the sub-triangulations of the two sides.
#[derive(Clone, Debug)]
pub struct ClipRecord {
    /// Endpoints of the segment `T` cut by the line, ordered by ascending
    /// second coordinate.
    pub segment: [Point; 2],
    /// Sub-triangles covering the part with `x1 <= line`.
    pub left: Vec<[Point; 3]>,
    /// Sub-triangles covering the part with `x1 >= line`.
    pub right: Vec<[Point; 3]>,
}

/// Intersects one element with the vertical line `x1 = x`. Returns `None`
/// when the intersection has zero length.
pub fn clip_element(mesh: &Mesh, t: usize, x: f64) -> Option<ClipRecord> {
    let corners = mesh.corners(t);
    let side: Vec<f64> = corners.iter().map(|p| p[0] - x).collect();
    let strict_left: Vec<usize> = (0..3).filter(|&i| side[i] < 0.0).collect();
    let strict_right: Vec<usize> = (0..3).filter(|&i| side[i] > 0.0).collect();
    if strict_left.is_empty() || strict_right.is_empty() {
        return None;
    }
    let cut = |i: usize, j: usize| -> Point {
        let s = side[i] / (side[i] - side[j]);
        [x, corners[i][1] + s * (corners[j][1] - corners[i][1])]
    };
    let order = |a: Point, b: Point| if a[1] <= b[1] { [a, b] } else { [b, a] };

    if strict_left.len() == 1 && strict_right.len() == 1 {
        // one vertex on the line
        let on = (0..3).find(|&i| side[i] == 0.0).unwrap();
        let (il, ir) = (strict_left[0], strict_right[0]);
        let p = cut(il, ir);
        return Some(ClipRecord {
            segment: order(corners[on], p),
            left: vec![[corners[on], corners[il], p]],
            right: vec![[corners[on], p, corners[ir]]],
        });
    }

    // lone vertex strictly on one side, two vertices on the other
    let (lone, pair, lone_left) = if strict_left.len() == 1 {
        (strict_left[0], strict_right, true)
    } else {
        (strict_right[0], strict_left, false)
    };
    let p0 = cut(lone, pair[0]);
    let p1 = cut(lone, pair[1]);
    let tri_side = vec![[corners[lone], p0, p1]];
    let quad_side = vec![
        [corners[pair[0]], corners[pair[1]], p1],
        [corners[pair[0]], p1, p0],
    ];
    let (left, right) = if lone_left { (tri_side, quad_side) } else { (quad_side, tri_side) };
    Some(ClipRecord { segment: order(p0, p1), left, right })
}

/// Clip records for every element of the mesh.
pub fn clip_to_line(mesh: &Mesh, x: f64) -> Vec<Option<ClipRecord>> {
    (0..mesh.n_elements()).map(|t| clip_element(mesh, t, x)).collect()
}

/// `int_Omega grad u . grad g` for an exact solution and a local gradient
/// evaluator, with branch-exact clipped quadrature.
pub fn grad_inner_on(
    mesh: &Mesh,
    exact: &ExactSolution,
    elements: &[usize],
    grad_eval: &dyn Fn(usize, Point) -> [f64; 2],
) -> f64 {
    let mut sum = 0.0;
    for &t in elements {
        let clip = exact.split_x.and_then(|x| clip_element(mesh, t, x));
        let integrand = |p: Point| {
            let gu = exact.gradient(p);
            let gg = grad_eval(t, p);
            gu[0] * gg[0] + gu[1] * gg[1]
        };
        match clip {
            Some(record) => {
                for tri in record.left.iter().chain(record.right.iter()) {
                    sum += quad::tri_integrate(tri, integrand);
                }
            }
            None => sum += quad::tri_integrate(&mesh.corners(t), integrand),
        }
    }
    sum
}

/// `int_Omega grad u . grad g` for a conforming function.
pub fn grad_inner_conforming(mesh: &Mesh, exact: &ExactSolution, g: &ConformingFunction) -> f64 {
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    grad_inner_on(mesh, exact, &all, &|t, p| {
        g.eval(mesh, t, mesh.barycentric(t, p)).unwrap().1
    })
}

/// Squared energy norm `|| grad u ||^2` of an exact solution.
pub fn energy_sq(mesh: &Mesh, exact: &ExactSolution) -> f64 {
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    let mut sum = 0.0;
    for &t in &all {
        let clip = exact.split_x.and_then(|x| clip_element(mesh, t, x));
        let integrand = |p: Point| {
            let g = exact.gradient(p);
            g[0] * g[0] + g[1] * g[1]
        };
        match clip {
            Some(record) => {
                for tri in record.left.iter().chain(record.right.iter()) {
                    sum += quad::tri_integrate(tri, integrand);
                }
            }
            None => sum += quad::tri_integrate(&mesh.corners(t), integrand),
        }
    }
    sum
}
