//! Conforming triangulations of the unit square with newest-vertex
//! bisection refinement.
//!
//! Elements store their refinement edge as a local edge index; local edge
//! `i` is the edge opposite local vertex `i`. Bisection of an element with
//! refinement edge `(a, b)` (opposite the newest vertex `c`) produces the
//! children `(c, a, m)` and `(b, c, m)` with `m` the edge midpoint, so the
//! refinement edge of each child is again the edge opposite its newest
//! vertex. All vertex coordinates reachable from the initial mesh are
//! dyadic rationals and therefore exact in binary floating point.

use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap, HashSet};

pub type Point = [f64; 2];

pub const NO_ELEMENT: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Element {
    /// Vertex ids, positively oriented.
    pub vertices: [usize; 3],
    /// Local index of the refinement edge (edge `i` is opposite vertex `i`).
    pub refinement_edge: u8,
    /// Bisection generation (initial elements have generation 0).
    pub generation: u32,
    /// Element id in the mesh this element was refined from; for an
    /// unrefined mesh this is the element's own id.
    pub ancestor: usize,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoint vertex ids, sorted ascending.
    pub vertices: [usize; 2],
    /// Incident element ids, sorted ascending; `elements[1] == NO_ELEMENT`
    /// for boundary edges. The unit normal of an interior edge points from
    /// `elements[0]` to `elements[1]`.
    pub elements: [usize; 2],
    pub boundary: bool,
}

impl Edge {
    pub fn incident(&self) -> &[usize] {
        if self.boundary {
            &self.elements[..1]
        } else {
            &self.elements[..]
        }
    }
}

/// Patch lookup tables: vertex stars, interior-edge fans, and edge patches.
#[derive(Clone, Debug)]
pub struct PatchTables {
    /// For every vertex `z`, the element ids of the star around `z`.
    pub stars: Vec<Vec<usize>>,
    /// For every vertex `z`, the interior edges containing `z`.
    pub interior_edge_fans: Vec<Vec<usize>>,
    /// For every edge `F`, the one or two elements of the patch around `F`.
    pub edge_patches: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<Element>,
    edges: Vec<Edge>,
    /// For each element, the edge id opposite each local vertex.
    element_edges: Vec<[usize; 3]>,
    vertex_stars: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    /// Gradients of the barycentric coordinate functions per element.
    bary_grads: Vec<[[f64; 2]; 3]>,
}

impl Mesh {
    /// The four-triangle mesh of the unit square obtained by drawing the
    /// two main diagonals. The refinement edge of each triangle is its
    /// boundary side (the side opposite the center vertex).
    pub fn unit_square_initial() -> Mesh {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let elements = (0..4)
            .map(|i| Element {
                vertices: [i, (i + 1) % 4, 4],
                refinement_edge: 2,
                generation: 0,
                ancestor: i,
            })
            .collect();
        Mesh::from_parts(vertices, elements).expect("initial mesh is valid")
    }

    /// Builds the derived topology (edges, stars, geometry caches) and
    /// validates face-to-face conformity and positive orientation.
    pub fn from_parts(vertices: Vec<Point>, elements: Vec<Element>) -> Result<Mesh> {
        let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, el) in elements.iter().enumerate() {
            let v = el.vertices;
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::DegenerateElement(t));
            }
            for i in 0..3 {
                if v[i] >= vertices.len() {
                    return Err(Error::VertexOutOfRange(v[i]));
                }
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push(t);
            }
        }

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::with_capacity(edge_map.len());
        for (&(a, b), in_elems) in edge_map.iter() {
            let mut inc = in_elems.clone();
            inc.sort_unstable();
            let edge = match inc.len() {
                1 => Edge {
                    vertices: [a, b],
                    elements: [inc[0], NO_ELEMENT],
                    boundary: true,
                },
                2 => Edge {
                    vertices: [a, b],
                    elements: [inc[0], inc[1]],
                    boundary: false,
                },
                n => return Err(Error::NonConforming(a, b, n)),
            };
            edge_ids.insert((a, b), edges.len());
            edges.push(edge);
        }

        let mut element_edges = Vec::with_capacity(elements.len());
        for el in &elements {
            let v = el.vertices;
            let mut ee = [0usize; 3];
            for (i, slot) in ee.iter_mut().enumerate() {
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                *slot = edge_ids[&(a.min(b), a.max(b))];
            }
            element_edges.push(ee);
        }

        let mut vertex_stars = vec![Vec::new(); vertices.len()];
        for (t, el) in elements.iter().enumerate() {
            for &v in &el.vertices {
                vertex_stars[v].push(t);
            }
        }
        let mut vertex_edges = vec![Vec::new(); vertices.len()];
        for (f, e) in edges.iter().enumerate() {
            vertex_edges[e.vertices[0]].push(f);
            vertex_edges[e.vertices[1]].push(f);
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in &edges {
            if e.boundary {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }

        let mut areas = Vec::with_capacity(elements.len());
        let mut bary_grads = Vec::with_capacity(elements.len());
        for (t, el) in elements.iter().enumerate() {
            let p: Vec<Point> = el.vertices.iter().map(|&v| vertices[v]).collect();
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            if det <= 0.0 {
                return Err(Error::DegenerateElement(t));
            }
            areas.push(0.5 * det);
            // grad lambda_i is the inward normal of the opposite edge over 2|T|
            let mut g = [[0.0f64; 2]; 3];
            for i in 0..3 {
                let a = p[(i + 1) % 3];
                let b = p[(i + 2) % 3];
                g[i] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
            }
            bary_grads.push(g);
        }

        Ok(Mesh {
            vertices,
            elements,
            edges,
            element_edges,
            vertex_stars,
            vertex_edges,
            boundary_vertex,
            areas,
            bary_grads,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, z: usize) -> Point {
        self.vertices[z]
    }

    pub fn element(&self, t: usize) -> &Element {
        &self.elements[t]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edge(&self, f: usize) -> &Edge {
        &self.edges[f]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids of element `t`; entry `i` is the edge opposite local vertex `i`.
    pub fn element_edge_ids(&self, t: usize) -> [usize; 3] {
        self.element_edges[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Gradients of the three barycentric coordinate functions on element `t`.
    pub fn bary_grads(&self, t: usize) -> [[f64; 2]; 3] {
        self.bary_grads[t]
    }

    pub fn is_boundary_vertex(&self, z: usize) -> bool {
        self.boundary_vertex[z]
    }

    /// Element ids of the star around vertex `z`.
    pub fn star(&self, z: usize) -> &[usize] {
        &self.vertex_stars[z]
    }

    /// Edge ids incident to vertex `z` (interior and boundary).
    pub fn edges_at_vertex(&self, z: usize) -> &[usize] {
        &self.vertex_edges[z]
    }

    /// Interior edges containing vertex `z`.
    pub fn interior_edges_at(&self, z: usize) -> Vec<usize> {
        self.vertex_edges[z]
            .iter()
            .copied()
            .filter(|&f| !self.edges[f].boundary)
            .collect()
    }

    pub fn edge_length(&self, f: usize) -> f64 {
        let [a, b] = self.edges[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
    }

    pub fn edge_midpoint(&self, f: usize) -> Point {
        let [a, b] = self.edges[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Element diameter `h_T` (the longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        self.element_edges[t]
            .iter()
            .map(|&f| self.edge_length(f))
            .fold(0.0, f64::max)
    }

    /// Diameter of the largest inscribed ball, `2 * area / semiperimeter`.
    pub fn inball_diameter(&self, t: usize) -> f64 {
        let perimeter: f64 = self.element_edges[t].iter().map(|&f| self.edge_length(f)).sum();
        4.0 * self.areas[t] / perimeter
    }

    /// Shape constant `max_T h_T / rho_T` of the mesh.
    pub fn shape_constant(&self) -> f64 {
        (0..self.n_elements())
            .map(|t| self.diameter(t) / self.inball_diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    /// Barycentric coordinates of a physical point with respect to element `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let v: Vec<Point> = self.elements[t].vertices.iter().map(|&z| self.vertices[z]).collect();
        let det = 2.0 * self.areas[t];
        let l1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (p[1] - v[0][1]))
            / det;
        let l2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (p[0] - v[0][0]) * (v[1][1] - v[0][1]))
            / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Physical coordinates of a barycentric point of element `t`.
    pub fn point_at(&self, t: usize, bary: [f64; 3]) -> Point {
        let v = self.elements[t].vertices;
        let mut p = [0.0f64; 2];
        for i in 0..3 {
            let q = self.vertices[v[i]];
            p[0] += bary[i] * q[0];
            p[1] += bary[i] * q[1];
        }
        p
    }

    /// Corner coordinates of element `t`.
    pub fn corners(&self, t: usize) -> [Point; 3] {
        let v = self.elements[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    /// Patch lookup tables for estimator assembly.
    pub fn topology(&self) -> PatchTables {
        PatchTables {
            stars: self.vertex_stars.clone(),
            interior_edge_fans: (0..self.n_vertices()).map(|z| self.interior_edges_at(z)).collect(),
            edge_patches: self.edges.iter().map(|e| e.incident().to_vec()).collect(),
        }
    }

    /// Refines each marked element into four descendants (two rounds of
    /// newest-vertex bisection) and performs completion until the mesh is
    /// conforming again.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh> {
        for &t in marked {
            if t >= self.n_elements() {
                return Err(Error::MarkedOutOfRange(t));
            }
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }

        // Quartering a marked element is realized by marking all three of
        // its edges for bisection.
        let mut marked_edges: HashSet<(usize, usize)> = HashSet::new();
        for &t in marked {
            for &f in &self.element_edges[t] {
                let [a, b] = self.edges[f].vertices;
                marked_edges.insert((a, b));
            }
        }

        // Completion closure: whenever any edge of an element is marked,
        // its refinement edge must be marked as well. The set of marked
        // edges grows monotonically, so the loop terminates; the pass bound
        // guards against an inconsistent refinement-edge assignment.
        let max_passes = self.n_edges() + 2;
        let mut passes = 0;
        loop {
            let mut changed = false;
            for (t, el) in self.elements.iter().enumerate() {
                let ref_key = self.edge_key(t, el.refinement_edge as usize);
                if marked_edges.contains(&ref_key) {
                    continue;
                }
                let any = (0..3).any(|i| marked_edges.contains(&self.edge_key(t, i)));
                if any {
                    marked_edges.insert(ref_key);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            passes += 1;
            if passes > max_passes {
                return Err(Error::CompletionStalled);
            }
        }

        let mut new_vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_elements: Vec<Element> = Vec::with_capacity(4 * self.n_elements());

        for (t, el) in self.elements.iter().enumerate() {
            // Rotate so that the refinement edge is (v0, v1), opposite v2.
            let v = el.vertices;
            let ordered = match el.refinement_edge {
                0 => [v[1], v[2], v[0]],
                1 => [v[2], v[0], v[1]],
                _ => v,
            };
            bisect(
                ordered,
                el.generation,
                t,
                &marked_edges,
                &mut new_vertices,
                &mut midpoints,
                &mut new_elements,
            );
        }

        Mesh::from_parts(new_vertices, new_elements)
    }

    /// Refines every element; the element count multiplies by exactly 4.
    pub fn uniform_refine(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.n_elements()).collect();
        self.refine(&all)
    }

    fn edge_key(&self, t: usize, local: usize) -> (usize, usize) {
        let [a, b] = self.edges[self.element_edges[t][local]].vertices;
        (a, b)
    }
}

/// Recursive newest-vertex bisection of an element whose refinement edge is
/// `(v[0], v[1])`. Only edges of the input mesh can be marked, so the
/// recursion depth is at most two.
fn bisect(
    v: [usize; 3],
    generation: u32,
    ancestor: usize,
    marked: &HashSet<(usize, usize)>,
    vertices: &mut Vec<Point>,
    midpoints: &mut HashMap<(usize, usize), usize>,
    out: &mut Vec<Element>,
) {
    let key = (v[0].min(v[1]), v[0].max(v[1]));
    if !marked.contains(&key) {
        out.push(Element {
            vertices: v,
            refinement_edge: 2,
            generation,
            ancestor,
        });
        return;
    }
    let m = *midpoints.entry(key).or_insert_with(|| {
        let (a, b) = (vertices[v[0]], vertices[v[1]]);
        vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        vertices.len() - 1
    });
    bisect([v[2], v[0], m], generation + 1, ancestor, marked, vertices, midpoints, out);
    bisect([v[1], v[2], m], generation + 1, ancestor, marked, vertices, midpoints, out);
}
