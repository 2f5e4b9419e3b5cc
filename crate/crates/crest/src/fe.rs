//! Basis evaluation and degree-of-freedom bookkeeping for the
//! nonconforming Crouzeix-Raviart space and the conforming hierarchical
//! space spanned by vertex hats, quadratic edge bubbles, and cubic element
//! bubbles.

use crate::mesh::{Mesh, Point};
use crate::quad;
use crate::{Error, Result};

/// A Crouzeix-Raviart function, stored as one coefficient per edge: the
/// value at the edge midpoint. Boundary edges carry coefficient 0.
#[derive(Clone, Debug)]
pub struct CrFunction {
    pub coeffs: Vec<f64>,
}

impl CrFunction {
    pub fn zeros(mesh: &Mesh) -> CrFunction {
        CrFunction { coeffs: vec![0.0; mesh.n_edges()] }
    }

    /// Builds a function from per-edge midpoint values, forcing boundary
    /// edges to zero.
    pub fn from_edge_values(mesh: &Mesh, mut coeffs: Vec<f64>) -> CrFunction {
        coeffs.resize(mesh.n_edges(), 0.0);
        for (f, c) in coeffs.iter_mut().enumerate() {
            if mesh.edge(f).boundary {
                *c = 0.0;
            }
        }
        CrFunction { coeffs }
    }

    /// The Crouzeix-Raviart basis function of an interior edge.
    pub fn basis(mesh: &Mesh, edge: usize) -> Result<CrFunction> {
        if edge >= mesh.n_edges() {
            return Err(Error::EdgeOutOfRange(edge));
        }
        let mut v = CrFunction::zeros(mesh);
        v.coeffs[edge] = 1.0;
        Ok(v)
    }

    /// Value and (elementwise constant) broken gradient at a barycentric
    /// point of element `t`. The local basis function of the edge opposite
    /// vertex `i` is `1 - 2 lambda_i`.
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> Result<(f64, [f64; 2])> {
        if t >= mesh.n_elements() {
            return Err(Error::ElementOutOfRange(t));
        }
        let edges = mesh.element_edge_ids(t);
        let grads = mesh.bary_grads(t);
        let mut value = 0.0;
        let mut grad = [0.0f64; 2];
        for i in 0..3 {
            let c = self.coeffs[edges[i]];
            value += c * (1.0 - 2.0 * bary[i]);
            grad[0] -= 2.0 * c * grads[i][0];
            grad[1] -= 2.0 * c * grads[i][1];
        }
        Ok((value, grad))
    }

    /// The broken gradient on element `t`.
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> [f64; 2] {
        let edges = mesh.element_edge_ids(t);
        let grads = mesh.bary_grads(t);
        let mut grad = [0.0f64; 2];
        for i in 0..3 {
            let c = self.coeffs[edges[i]];
            grad[0] -= 2.0 * c * grads[i][0];
            grad[1] -= 2.0 * c * grads[i][1];
        }
        grad
    }

    /// Squared broken `H^1` seminorm.
    pub fn broken_energy_sq(&self, mesh: &Mesh) -> f64 {
        (0..mesh.n_elements())
            .map(|t| {
                let g = self.gradient_on(mesh, t);
                mesh.area(t) * (g[0] * g[0] + g[1] * g[1])
            })
            .sum()
    }
}

/// A globally continuous function vanishing on the boundary, represented in
/// the hierarchical basis: vertex hats, quadratic edge bubbles
/// `Psi_F = Psi_z1 Psi_z2`, and cubic element bubbles
/// `Psi_T = Psi_z1 Psi_z2 Psi_z3`.
#[derive(Clone, Debug)]
pub struct ConformingFunction {
    /// Hat coefficients per vertex; boundary vertices must stay 0.
    pub vertex: Vec<f64>,
    /// Edge-bubble coefficients per edge; boundary edges must stay 0.
    pub edge: Vec<f64>,
    /// Element-bubble coefficients per element.
    pub element: Vec<f64>,
}

impl ConformingFunction {
    pub fn zeros(mesh: &Mesh) -> ConformingFunction {
        ConformingFunction {
            vertex: vec![0.0; mesh.n_vertices()],
            edge: vec![0.0; mesh.n_edges()],
            element: vec![0.0; mesh.n_elements()],
        }
    }

    /// Value and gradient at a barycentric point of element `t`.
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> Result<(f64, [f64; 2])> {
        if t >= mesh.n_elements() {
            return Err(Error::ElementOutOfRange(t));
        }
        let verts = mesh.element(t).vertices;
        let edges = mesh.element_edge_ids(t);
        let grads = mesh.bary_grads(t);
        let l = bary;
        let mut value = 0.0;
        let mut grad = [0.0f64; 2];
        for i in 0..3 {
            let a = self.vertex[verts[i]];
            value += a * l[i];
            grad[0] += a * grads[i][0];
            grad[1] += a * grads[i][1];
            // edge i is opposite vertex i, spanned by vertices j and k
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let b = self.edge[edges[i]];
            value += b * l[j] * l[k];
            grad[0] += b * (l[j] * grads[k][0] + l[k] * grads[j][0]);
            grad[1] += b * (l[j] * grads[k][1] + l[k] * grads[j][1]);
        }
        let c = self.element[t];
        value += c * l[0] * l[1] * l[2];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grad[0] += c * l[j] * l[k] * grads[i][0];
            grad[1] += c * l[j] * l[k] * grads[i][1];
        }
        Ok((value, grad))
    }

    /// Squared `H^1` seminorm, by exact quadrature.
    pub fn energy_sq(&self, mesh: &Mesh) -> f64 {
        (0..mesh.n_elements())
            .map(|t| {
                quad::tri_integrate(&mesh.corners(t), |p| {
                    let (_, g) = self.eval(mesh, t, mesh.barycentric(t, p)).unwrap();
                    g[0] * g[0] + g[1] * g[1]
                })
            })
            .sum()
    }
}

/// Identifies a bubble function: the cubic bubble of an element or the
/// quadratic bubble of an interior edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bubble {
    Element(usize),
    Edge(usize),
}

/// `|| grad Psi_K ||_{L^2(Omega)}` of a bubble function, by exact
/// quadrature over its support. Boundary edges are rejected: the residual
/// indicators test only with interior-face bubbles.
pub fn bubble_energy(mesh: &Mesh, bubble: Bubble) -> Result<f64> {
    let sq = match bubble {
        Bubble::Element(t) => {
            if t >= mesh.n_elements() {
                return Err(Error::ElementOutOfRange(t));
            }
            element_bubble_energy_sq(mesh, t)
        }
        Bubble::Edge(f) => {
            if f >= mesh.n_edges() {
                return Err(Error::EdgeOutOfRange(f));
            }
            if mesh.edge(f).boundary {
                return Err(Error::BoundaryEdgeBubble(f));
            }
            mesh.edge(f)
                .incident()
                .iter()
                .map(|&t| edge_bubble_energy_sq_on(mesh, t, f))
                .sum()
        }
    };
    Ok(sq.sqrt())
}

fn element_bubble_energy_sq(mesh: &Mesh, t: usize) -> f64 {
    let grads = mesh.bary_grads(t);
    quad::tri_integrate(&mesh.corners(t), |p| {
        let l = mesh.barycentric(t, p);
        let mut g = [0.0f64; 2];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            g[0] += l[j] * l[k] * grads[i][0];
            g[1] += l[j] * l[k] * grads[i][1];
        }
        g[0] * g[0] + g[1] * g[1]
    })
}

/// Squared energy of the bubble of edge `f` restricted to element `t`.
fn edge_bubble_energy_sq_on(mesh: &Mesh, t: usize, f: usize) -> f64 {
    let i = local_edge_index(mesh, t, f);
    let grads = mesh.bary_grads(t);
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    quad::tri_integrate(&mesh.corners(t), |p| {
        let l = mesh.barycentric(t, p);
        let gx = l[j] * grads[k][0] + l[k] * grads[j][0];
        let gy = l[j] * grads[k][1] + l[k] * grads[j][1];
        gx * gx + gy * gy
    })
}

/// Local index of edge `f` within element `t`.
pub fn local_edge_index(mesh: &Mesh, t: usize, f: usize) -> usize {
    let edges = mesh.element_edge_ids(t);
    edges.iter().position(|&e| e == f).expect("edge not incident to element")
}

/// The Crouzeix-Raviart interpolant: preserves the mean of `v` on every
/// interior edge (for a CR function the edge mean equals the midpoint
/// value); boundary edges are set to zero.
pub fn interpolate_cr(mesh: &Mesh, v: impl Fn(Point) -> f64) -> CrFunction {
    let mut out = CrFunction::zeros(mesh);
    for f in 0..mesh.n_edges() {
        if mesh.edge(f).boundary {
            continue;
        }
        let [a, b] = mesh.edge(f).vertices;
        let mean = quad::seg_integrate(mesh.vertex(a), mesh.vertex(b), &v) / mesh.edge_length(f);
        out.coeffs[f] = mean;
    }
    out
}
