//! A posteriori error indicators: the distance-to-conformity terms, the
//! hierarchical bubble indicators in full and simplified form, the patch
//! local-problem norm, the computable oscillation surrogate, and the exact
//! broken-energy error against a manufactured solution.

use crate::fe::{bubble_energy, local_edge_index, Bubble, CrFunction};
use crate::mesh::{Mesh, Point};
use crate::problem::{clip_element, ExactSolution, SourceTerm};
use crate::quad;
use crate::transfer::average_acr;
use crate::{Error, Result};

/// Which bubble indicator feeds the combined estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Element bubbles and interior edge bubbles.
    Cr,
    /// Element bubbles only.
    CrTilde,
}

/// Squared indicator values of one element.
#[derive(Clone, Copy, Debug, Default)]
pub struct ElementRecord {
    pub ncf_sq: f64,
    pub eta_sq: f64,
    pub osc_sq: f64,
    pub total_sq: f64,
}

/// Combined estimator output for one mesh.
pub struct EstimatorReport {
    pub variant: Variant,
    pub c1: f64,
    pub c2: f64,
    pub records: Vec<ElementRecord>,
    pub ncf: f64,
    pub eta: f64,
    pub osc: f64,
    pub est: f64,
    pub err: f64,
    /// `est / err`; absent when the error vanishes.
    pub eff: Option<f64>,
    /// Experimental order of convergence against the previous mesh in a
    /// hierarchy; absent on the first mesh.
    pub eoc: Option<f64>,
}

/// Value and gradient of a single bubble at a physical point of element `t`.
fn bubble_eval(mesh: &Mesh, t: usize, bubble: Bubble, p: Point) -> (f64, [f64; 2]) {
    let bary = mesh.barycentric(t, p);
    let grads = mesh.bary_grads(t);
    match bubble {
        Bubble::Element(te) => {
            debug_assert_eq!(te, t);
            let val = bary[0] * bary[1] * bary[2];
            let g = [
                grads[0][0] * bary[1] * bary[2]
                    + bary[0] * grads[1][0] * bary[2]
                    + bary[0] * bary[1] * grads[2][0],
                grads[0][1] * bary[1] * bary[2]
                    + bary[0] * grads[1][1] * bary[2]
                    + bary[0] * bary[1] * grads[2][1],
            ];
            (val, g)
        }
        Bubble::Edge(f) => {
            let i = local_edge_index(mesh, t, f);
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let val = bary[j] * bary[k];
            let g = [
                grads[j][0] * bary[k] + bary[j] * grads[k][0],
                grads[j][1] * bary[k] + bary[j] * grads[k][1],
            ];
            (val, g)
        }
    }
}

/// Elements supporting a bubble.
fn bubble_support(mesh: &Mesh, bubble: Bubble) -> Vec<usize> {
    match bubble {
        Bubble::Element(t) => vec![t],
        Bubble::Edge(f) => mesh.edge(f).incident().to_vec(),
    }
}

/// Residual of the bubble: `<f, Psi> - int grad_h u_h . grad Psi`,
/// normalized by the bubble energy norm.
fn bubble_residual(mesh: &Mesh, u: &CrFunction, source: &SourceTerm, bubble: Bubble) -> Result<f64> {
    let support = bubble_support(mesh, bubble);
    let load = source.apply_on(mesh, &support, &|t, p| bubble_eval(mesh, t, bubble, p).0);
    // drift: grad u_h is constant per element and int_T grad(lambda_j
    // lambda_k) = |T|/3 (grad lambda_j + grad lambda_k); for the element
    // bubble the integral vanishes
    let mut drift = 0.0;
    if let Bubble::Edge(f) = bubble {
        for &t in &support {
            let gu = u.gradient_on(mesh, t);
            let i = local_edge_index(mesh, t, f);
            let grads = mesh.bary_grads(t);
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let gb = [grads[j][0] + grads[k][0], grads[j][1] + grads[k][1]];
            drift += mesh.area(t) / 3.0 * (gu[0] * gb[0] + gu[1] * gb[1]);
        }
    }
    let norm = bubble_energy(mesh, bubble)?;
    Ok((load - drift).abs() / norm)
}

/// Distance to conformity by averaging: per element,
/// `|| grad(u_h - A u_h) ||^2` with the vertex-averaging operator `A`.
/// Both gradients are constant per element.
pub fn ncf_avg(mesh: &Mesh, u: &CrFunction) -> Vec<f64> {
    let au = average_acr(mesh, u);
    (0..mesh.n_elements())
        .map(|t| {
            let gu = u.gradient_on(mesh, t);
            let bary = [1.0 / 3.0; 3];
            let (_, ga) = au.eval(mesh, t, bary).unwrap();
            let d = [gu[0] - ga[0], gu[1] - ga[1]];
            mesh.area(t) * (d[0] * d[0] + d[1] * d[1])
        })
        .collect()
}

/// Distance to conformity by trace jumps: per edge `int_F |[u_h]|^2 / h_F`,
/// halved onto the incident elements. The jump is affine with a zero at the
/// midpoint, so with endpoint value `d` the edge integral is `h_F d^2 / 3`.
pub fn ncf_jump(mesh: &Mesh, u: &CrFunction) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_elements()];
    for f in 0..mesh.n_edges() {
        let edge = mesh.edge(f);
        let [a, _] = edge.vertices;
        let incident = edge.incident();
        let trace = |t: usize| u.eval(mesh, t, mesh.barycentric(t, mesh.vertex(a))).unwrap().0;
        let d = if edge.boundary {
            trace(incident[0])
        } else {
            trace(incident[0]) - trace(incident[1])
        };
        let contrib = d * d / 3.0;
        for &t in incident {
            out[t] += contrib / incident.len() as f64;
        }
    }
    out
}

/// Full bubble indicator: per element the maximum of the normalized bubble
/// residuals over the element bubble and the interior edge bubbles of the
/// element.
pub fn eta_cr(mesh: &Mesh, u: &CrFunction, source: &SourceTerm) -> Result<Vec<f64>> {
    // edge residuals are shared between two elements; compute once
    let mut edge_res = vec![0.0; mesh.n_edges()];
    for f in 0..mesh.n_edges() {
        if !mesh.edge(f).boundary {
            edge_res[f] = bubble_residual(mesh, u, source, Bubble::Edge(f))?;
        }
    }
    let mut out = Vec::with_capacity(mesh.n_elements());
    for t in 0..mesh.n_elements() {
        let mut m = bubble_residual(mesh, u, source, Bubble::Element(t))?;
        for &f in &mesh.element_edge_ids(t) {
            if !mesh.edge(f).boundary {
                m = m.max(edge_res[f]);
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Simplified bubble indicator: element bubbles only.
pub fn eta_crtilde(mesh: &Mesh, u: &CrFunction, source: &SourceTerm) -> Result<Vec<f64>> {
    (0..mesh.n_elements())
        .map(|t| bubble_residual(mesh, u, source, Bubble::Element(t)))
        .collect()
}

/// Norm of the projected residual on the local test space of a vertex
/// patch: element bubbles of the star and interior edge bubbles at the
/// vertex. Returns the squared norm `g^T A^{-1} g` from a dense solve of
/// the patch Gram system.
pub fn patch_residual_norm(mesh: &Mesh, u: &CrFunction, source: &SourceTerm, z: usize) -> Result<f64> {
    if z >= mesh.n_vertices() {
        return Err(Error::VertexOutOfRange(z));
    }
    let mut bubbles: Vec<Bubble> = mesh.star(z).iter().map(|&t| Bubble::Element(t)).collect();
    bubbles.extend(mesh.interior_edges_at(z).into_iter().map(Bubble::Edge));
    let n = bubbles.len();
    if n == 0 {
        return Ok(0.0);
    }
    let star = mesh.star(z);

    // Gram matrix of the energy inner product over the star
    let mut a = vec![vec![0.0; n]; n];
    for (i, &bi) in bubbles.iter().enumerate() {
        for (j, &bj) in bubbles.iter().enumerate().skip(i) {
            let mut inner = 0.0;
            for &t in star {
                let si = bubble_support(mesh, bi);
                let sj = bubble_support(mesh, bj);
                if si.contains(&t) && sj.contains(&t) {
                    inner += quad::tri_integrate(&mesh.corners(t), |p| {
                        let (_, gi) = bubble_eval(mesh, t, bi, p);
                        let (_, gj) = bubble_eval(mesh, t, bj, p);
                        gi[0] * gj[0] + gi[1] * gj[1]
                    });
                }
            }
            a[i][j] = inner;
            a[j][i] = inner;
        }
    }

    let g: Vec<f64> = bubbles
        .iter()
        .map(|&b| {
            let support = bubble_support(mesh, b);
            let load = source.apply_on(mesh, &support, &|t, p| bubble_eval(mesh, t, b, p).0);
            let mut drift = 0.0;
            for &t in &support {
                let gu = u.gradient_on(mesh, t);
                drift += quad::tri_integrate(&mesh.corners(t), |p| {
                    let (_, gb) = bubble_eval(mesh, t, b, p);
                    gu[0] * gb[0] + gu[1] * gb[1]
                });
            }
            load - drift
        })
        .collect();

    // dense symmetric solve by Cholesky
    let mut l = a;
    for j in 0..n {
        for k in 0..j {
            let ljk = l[j][k];
            for i in j..n {
                l[i][j] -= l[i][k] * ljk;
            }
        }
        if l[j][j] <= 0.0 {
            return Err(Error::SingularPatchMatrix(z));
        }
        let d = l[j][j].sqrt();
        for i in j..n {
            l[i][j] /= d;
        }
    }
    let mut y = g.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    // g^T A^{-1} g = || L^{-1} g ||^2
    Ok(y.iter().map(|v| v * v).sum())
}

/// Computable oscillation surrogate: per element the scaled variance of the
/// regular density (branch-exact across the line) plus, on crossed
/// elements, the squared maximum of the line weight over the clipped
/// segment, both weighted by the squared element diameter.
pub fn surrogate_osc(mesh: &Mesh, source: &SourceTerm) -> Vec<f64> {
    let split = source.split_x();
    (0..mesh.n_elements())
        .map(|t| {
            let clip = split.and_then(|x| clip_element(mesh, t, x));
            let h_sq = mesh.diameter(t).powi(2);
            let mut val = 0.0;
            if let Some(density) = &source.regular {
                let (mut mass, mut second) = (0.0, 0.0);
                let mut accumulate = |tri: &[Point; 3]| {
                    mass += quad::tri_integrate(tri, |p| density.eval(p));
                    second += quad::tri_integrate(tri, |p| density.eval(p).powi(2));
                };
                match &clip {
                    Some(c) => {
                        for tri in c.left.iter().chain(c.right.iter()) {
                            accumulate(tri);
                        }
                    }
                    None => accumulate(&mesh.corners(t)),
                }
                // inf_c || f - c ||^2 = || f ||^2 - (int f)^2 / |T|
                val += h_sq * (second - mass * mass / mesh.area(t)).max(0.0);
            }
            if let (Some(line), Some(c)) = (&source.line, &clip) {
                let (y0, y1) = (c.segment[0][1], c.segment[1][1]);
                val += h_sq * line.weight.max_abs_on(y0, y1).powi(2);
            }
            val
        })
        .collect()
}

/// Broken energy error `|| grad_h (u - u_h) ||` against a closed-form
/// solution: the global value and the per-element squared contributions.
/// Crossed elements are integrated on clipped sub-triangles so each branch
/// of the exact gradient is polynomial on its own side.
pub fn exact_error(mesh: &Mesh, u: &CrFunction, exact: &ExactSolution) -> (f64, Vec<f64>) {
    let per_element: Vec<f64> = (0..mesh.n_elements())
        .map(|t| {
            let gu = u.gradient_on(mesh, t);
            let integrand = |p: Point| {
                let ge = exact.gradient(p);
                let d = [ge[0] - gu[0], ge[1] - gu[1]];
                d[0] * d[0] + d[1] * d[1]
            };
            match exact.split_x.and_then(|x| clip_element(mesh, t, x)) {
                Some(c) => c
                    .left
                    .iter()
                    .chain(c.right.iter())
                    .map(|tri| quad::tri_integrate(tri, integrand))
                    .sum(),
                None => quad::tri_integrate(&mesh.corners(t), integrand),
            }
        })
        .collect();
    (per_element.iter().sum::<f64>().sqrt(), per_element)
}

/// Inputs to [`combine`]: per-element squared indicator parts and the exact
/// error on the same mesh.
pub struct EstimatorParts {
    pub ncf_sq: Vec<f64>,
    pub eta: Vec<f64>,
    pub osc_sq: Vec<f64>,
    pub err: f64,
    pub err_sq_per_element: Vec<f64>,
}

/// Computes all parts for one solved state.
pub fn estimate(
    mesh: &Mesh,
    u: &CrFunction,
    source: &SourceTerm,
    exact: Option<&ExactSolution>,
    variant: Variant,
) -> Result<EstimatorParts> {
    let eta = match variant {
        Variant::Cr => eta_cr(mesh, u, source)?,
        Variant::CrTilde => eta_crtilde(mesh, u, source)?,
    };
    let (err, err_sq_per_element) = match exact {
        Some(ex) => exact_error(mesh, u, ex),
        None => (0.0, vec![0.0; mesh.n_elements()]),
    };
    Ok(EstimatorParts {
        ncf_sq: ncf_avg(mesh, u),
        eta,
        osc_sq: surrogate_osc(mesh, source),
        err,
        err_sq_per_element,
    })
}

/// Combines the parts into the report with `Est^2 = Ncf^2 + C1^2 eta^2 +
/// C2^2 Osc^2` and the derived effectivity; `previous` is `(err, n_elements)`
/// of the preceding mesh in a hierarchy and yields the convergence order
/// `eoc = log(err_k / err_{k-1}) / log(n_{k-1} / n_k)`.
pub fn combine(
    parts: &EstimatorParts,
    c1: f64,
    c2: f64,
    variant: Variant,
    n_elements: usize,
    previous: Option<(f64, usize)>,
) -> Result<EstimatorReport> {
    let n = parts.ncf_sq.len();
    if n != n_elements || parts.eta.len() != n || parts.osc_sq.len() != n {
        return Err(Error::MeshMismatch(parts.eta.len(), n_elements));
    }
    let records: Vec<ElementRecord> = (0..n)
        .map(|t| {
            let ncf_sq = parts.ncf_sq[t];
            let eta_sq = parts.eta[t] * parts.eta[t];
            let osc_sq = parts.osc_sq[t];
            ElementRecord {
                ncf_sq,
                eta_sq,
                osc_sq,
                total_sq: ncf_sq + c1 * c1 * eta_sq + c2 * c2 * osc_sq,
            }
        })
        .collect();
    let ncf_sq: f64 = records.iter().map(|r| r.ncf_sq).sum();
    let eta_sq: f64 = records.iter().map(|r| r.eta_sq).sum();
    let osc_sq: f64 = records.iter().map(|r| r.osc_sq).sum();
    let est = (ncf_sq + c1 * c1 * eta_sq + c2 * c2 * osc_sq).sqrt();
    let eff = (parts.err > 0.0).then(|| est / parts.err);
    let eoc = previous.and_then(|(err_prev, n_prev)| {
        (parts.err > 0.0 && err_prev > 0.0 && n_prev != n_elements)
            .then(|| (parts.err / err_prev).ln() / (n_prev as f64 / n_elements as f64).ln())
    });
    Ok(EstimatorReport {
        variant,
        c1,
        c2,
        records,
        ncf: ncf_sq.sqrt(),
        eta: eta_sq.sqrt(),
        osc: osc_sq.sqrt(),
        est,
        err: parts.err,
        eff,
        eoc,
    })
}
