//! Assembly and linear algebra: CSR matrices, a Jacobi-preconditioned
//! conjugate gradient solver with a dense Cholesky fallback for small
//! systems, and mesh-to-mesh prolongation of discrete solutions.

use crate::fe::CrFunction;
use crate::mesh::Mesh;
use crate::problem::SourceTerm;
use crate::transfer::smoothed_cr_basis;
use crate::{Error, Result};

/// Symmetric positive definite matrix in compressed sparse row format.
pub struct SparseSpd {
    pub n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSpd {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseSpd {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseSpd { n, row_ptr, col, val }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut sum = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                sum += self.val[k] * x[self.col[k]];
            }
            y[r] = sum;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col[k] == r {
                    d[r] = self.val[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                a[r][self.col[k]] = self.val[k];
            }
        }
        a
    }
}

/// Bijection between interior edges and unknown indices.
pub struct DofMap {
    /// Interior edge id per unknown.
    pub edges: Vec<usize>,
    /// Unknown index per edge; `None` on the boundary.
    pub dof: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> DofMap {
        let mut edges = Vec::new();
        let mut dof = vec![None; mesh.n_edges()];
        for f in 0..mesh.n_edges() {
            if !mesh.edge(f).boundary {
                dof[f] = Some(edges.len());
                edges.push(f);
            }
        }
        DofMap { edges, dof }
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    /// Expands an unknown vector into edgewise coefficients (zero on the
    /// boundary).
    pub fn expand(&self, mesh: &Mesh, x: &[f64]) -> CrFunction {
        let mut coeffs = vec![0.0; mesh.n_edges()];
        for (i, &f) in self.edges.iter().enumerate() {
            coeffs[f] = x[i];
        }
        CrFunction { coeffs }
    }

    /// Restricts edgewise coefficients to the unknown vector.
    pub fn restrict(&self, v: &CrFunction) -> Vec<f64> {
        self.edges.iter().map(|&f| v.coeffs[f]).collect()
    }
}

/// Stiffness matrix of the broken bilinear form on the homogeneous
/// Crouzeix-Raviart space. The basis function of the edge opposite local
/// vertex `i` has elementwise gradient `-2 grad lambda_i`, so the local
/// matrix is `4 |T| grad lambda_i . grad lambda_j`.
pub fn assemble_stiffness(mesh: &Mesh, dofs: &DofMap) -> SparseSpd {
    let mut triplets = Vec::with_capacity(9 * mesh.n_elements());
    for t in 0..mesh.n_elements() {
        let grads = mesh.bary_grads(t);
        let area = mesh.area(t);
        let fs = mesh.element_edge_ids(t);
        for i in 0..3 {
            let Some(di) = dofs.dof[fs[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs.dof[fs[j]] else { continue };
                let k = 4.0 * area
                    * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                triplets.push((di, dj, k));
            }
        }
    }
    SparseSpd::from_triplets(dofs.n(), triplets)
}

/// Load vector: the source applied to the smoothed image of each basis
/// function, assembled edge by edge over the local supports.
pub fn assemble_load(mesh: &Mesh, dofs: &DofMap, source: &SourceTerm) -> Result<Vec<f64>> {
    let mut b = vec![0.0; dofs.n()];
    for (i, &f) in dofs.edges.iter().enumerate() {
        let basis = smoothed_cr_basis(mesh, f)?;
        b[i] = source.apply_on(mesh, &basis.elements, &|t, p| {
            basis.eval(mesh, t, mesh.barycentric(t, p)).0
        });
    }
    Ok(b)
}

/// Outcome of an iterative solve.
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual in the Euclidean norm.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. Converges to a relative
/// residual of `tol`; errs out at the iteration cap.
pub fn solve_cg(
    a: &SparseSpd,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite(i));
    }
    let cap = 200 * (n as f64).sqrt().ceil() as usize + 500;

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];

    for iter in 0..cap {
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        if res <= tol {
            return Ok((x, SolveStats { iterations: iter, residual: res }));
        }
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite(iter));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
    Err(Error::CgIterationCap { cap, residual: res })
}

/// Dense Cholesky solve, intended as a cross-check for moderate sizes.
pub fn solve_dense(a: &SparseSpd, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let mut l = a.to_dense();
    for j in 0..n {
        for k in 0..j {
            let ljk = l[j][k];
            for i in j..n {
                l[i][j] -= l[i][k] * ljk;
            }
        }
        if l[j][j] <= 0.0 {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = l[j][j].sqrt();
        for i in j..n {
            l[i][j] /= d;
        }
    }
    // forward then backward substitution
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i][k] * y[k];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k][i] * y[k];
        }
        y[i] /= l[i][i];
    }
    Ok(y)
}

/// Assembles and solves the discrete problem, optionally warm-started from
/// a solution on a previous mesh.
pub fn solve_poisson(
    mesh: &Mesh,
    source: &SourceTerm,
    initial_guess: Option<&CrFunction>,
    tol: f64,
) -> Result<(CrFunction, SolveStats)> {
    let dofs = DofMap::new(mesh);
    let a = assemble_stiffness(mesh, &dofs);
    let b = assemble_load(mesh, &dofs, source)?;
    let x0 = initial_guess.map(|v| dofs.restrict(v));
    let (x, stats) = solve_cg(&a, &b, x0.as_deref(), tol)?;
    Ok((dofs.expand(mesh, &x), stats))
}

/// Carries a discrete function from a mesh to its refinement by edge-mean
/// interpolation: every fine edge midpoint lies in the closure of the
/// ancestor element, where the coarse function is affine.
pub fn prolongate(coarse: &Mesh, fine: &Mesh, v: &CrFunction) -> Result<CrFunction> {
    if v.coeffs.len() != coarse.n_edges() {
        return Err(Error::MeshMismatch(v.coeffs.len(), coarse.n_edges()));
    }
    // A fine edge inside a coarse edge sees a (possibly) different trace
    // from each side; averaging the per-element contributions keeps the
    // map well defined and symmetric.
    let mut sums = vec![0.0; fine.n_edges()];
    let mut counts = vec![0u32; fine.n_edges()];
    for t in 0..fine.n_elements() {
        let parent = fine.element(t).ancestor;
        if parent >= coarse.n_elements() {
            return Err(Error::MeshMismatch(parent, coarse.n_elements()));
        }
        for &f in &fine.element_edge_ids(t) {
            if fine.edge(f).boundary {
                continue;
            }
            let m = fine.edge_midpoint(f);
            let bary = coarse.barycentric(parent, m);
            let (val, _) = v.eval(coarse, parent, bary)?;
            sums[f] += val;
            counts[f] += 1;
        }
    }
    let coeffs = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(CrFunction { coeffs })
}
