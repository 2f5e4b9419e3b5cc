//! Operators between the nonconforming and conforming worlds: the vertex
//! averaging operator into conforming piecewise linears and the
//! moment-preserving smoother into the hat + edge-bubble space.
//!
//! The smoother is realized as averaging followed by one edge-bubble
//! correction per interior edge. Since `int_F Psi_F = h_F / 6` and every
//! edge bubble vanishes identically on all other edges, the corrections
//! decouple edge by edge and the result conserves the mean of its argument
//! on every edge of the mesh.

use crate::fe::{ConformingFunction, CrFunction};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Vertex averaging into conforming piecewise linears: at every interior
/// vertex the arithmetic mean of the one-sided limits over the star, zero
/// at boundary vertices.
pub fn average_acr(mesh: &Mesh, v: &CrFunction) -> ConformingFunction {
    let mut out = ConformingFunction::zeros(mesh);
    for z in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(z) {
            continue;
        }
        let star = mesh.star(z);
        let mut sum = 0.0;
        for &t in star {
            sum += corner_trace(mesh, v, t, z);
        }
        out.vertex[z] = sum / star.len() as f64;
    }
    out
}

/// One-sided limit of a CR function at a vertex of element `t`.
fn corner_trace(mesh: &Mesh, v: &CrFunction, t: usize, z: usize) -> f64 {
    let verts = mesh.element(t).vertices;
    let edges = mesh.element_edge_ids(t);
    let i = verts.iter().position(|&y| y == z).expect("vertex not in element");
    // local basis: 1 - 2 lambda_j; at vertex i this is -1 for j == i, 1 otherwise
    let mut val = 0.0;
    for j in 0..3 {
        let c = v.coeffs[edges[j]];
        val += if j == i { -c } else { c };
    }
    val
}

/// The smoothing operator: averaging plus the edge-bubble corrections that
/// restore the mean of `v` on every interior edge. Boundary edges need no
/// correction since both `v` and the averaged function have zero mean
/// there.
pub fn smooth_ecr(mesh: &Mesh, v: &CrFunction) -> ConformingFunction {
    let mut out = average_acr(mesh, v);
    for f in 0..mesh.n_edges() {
        if mesh.edge(f).boundary {
            continue;
        }
        let [a, b] = mesh.edge(f).vertices;
        let avg_mean = 0.5 * (out.vertex[a] + out.vertex[b]);
        out.edge[f] = 6.0 * (v.coeffs[f] - avg_mean);
    }
    out
}

/// Sparse local representation of a smoothed CR basis function
/// `E_CR Psi_F^CR`, for on-the-fly right-hand-side assembly.
#[derive(Clone, Debug)]
pub struct SmoothedCrBasis {
    /// Nonzero hat coefficients `(vertex id, value)`.
    pub vertices: Vec<(usize, f64)>,
    /// Nonzero edge-bubble coefficients `(edge id, value)`.
    pub edges: Vec<(usize, f64)>,
    /// Elements covering the support.
    pub elements: Vec<usize>,
}

impl SmoothedCrBasis {
    /// Value and gradient at a barycentric point of element `t`; zero for
    /// elements outside the stored support.
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> (f64, [f64; 2]) {
        let verts = mesh.element(t).vertices;
        let edges = mesh.element_edge_ids(t);
        let grads = mesh.bary_grads(t);
        let l = bary;
        let mut value = 0.0;
        let mut grad = [0.0f64; 2];
        for &(z, a) in &self.vertices {
            if let Some(i) = verts.iter().position(|&y| y == z) {
                value += a * l[i];
                grad[0] += a * grads[i][0];
                grad[1] += a * grads[i][1];
            }
        }
        for &(f, b) in &self.edges {
            if let Some(i) = edges.iter().position(|&e| e == f) {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                value += b * l[j] * l[k];
                grad[0] += b * (l[j] * grads[k][0] + l[k] * grads[j][0]);
                grad[1] += b * (l[j] * grads[k][1] + l[k] * grads[j][1]);
            }
        }
        (value, grad)
    }
}

/// Builds `E_CR Psi_F^CR` for an interior edge without touching the rest of
/// the mesh. The averaging of a CR basis function is nonzero only at the
/// edge endpoints and at the vertices opposite the edge in its two incident
/// elements, so the support is the union of the stars of those vertices.
pub fn smoothed_cr_basis(mesh: &Mesh, edge: usize) -> Result<SmoothedCrBasis> {
    if edge >= mesh.n_edges() {
        return Err(Error::EdgeOutOfRange(edge));
    }
    let e = mesh.edge(edge);
    if e.boundary {
        return Err(Error::BoundaryEdgeBubble(edge));
    }

    // Vertex averages: corner traces of Psi_F^CR are +1 at the endpoints of
    // F and -1 at the opposite vertex, per incident element.
    let mut vertex_vals: Vec<(usize, f64)> = Vec::new();
    let add = |z: usize, contrib: f64, mesh: &Mesh, vals: &mut Vec<(usize, f64)>| {
        if mesh.is_boundary_vertex(z) {
            return;
        }
        let inc = contrib / mesh.star(z).len() as f64;
        if let Some(entry) = vals.iter_mut().find(|(y, _)| *y == z) {
            entry.1 += inc;
        } else {
            vals.push((z, inc));
        }
    };
    for &t in e.incident() {
        for &z in &mesh.element(t).vertices {
            let contrib = if e.vertices.contains(&z) { 1.0 } else { -1.0 };
            add(z, contrib, mesh, &mut vertex_vals);
        }
    }
    vertex_vals.retain(|&(_, a)| a != 0.0);

    // Bubble corrections on every interior edge whose endpoint averages are
    // nonzero, plus the edge itself (midpoint coefficient 1).
    let mut edges: Vec<(usize, f64)> = Vec::new();
    let mut candidates: Vec<usize> = vec![edge];
    for &(z, _) in &vertex_vals {
        candidates.extend(mesh.interior_edges_at(z));
    }
    candidates.sort_unstable();
    candidates.dedup();
    let value_at = |z: usize| vertex_vals.iter().find(|(y, _)| *y == z).map_or(0.0, |&(_, a)| a);
    for f in candidates {
        let [a, b] = mesh.edge(f).vertices;
        let coeff = if f == edge { 1.0 } else { 0.0 };
        let kappa = 6.0 * (coeff - 0.5 * (value_at(a) + value_at(b)));
        if kappa != 0.0 {
            edges.push((f, kappa));
        }
    }

    let mut elements: Vec<usize> = e.incident().to_vec();
    for &(z, _) in &vertex_vals {
        elements.extend_from_slice(mesh.star(z));
    }
    elements.sort_unstable();
    elements.dedup();

    Ok(SmoothedCrBasis { vertices: vertex_vals, edges, elements })
}
