//! End-to-end acceptance checks. Each test covers one criterion and prints
//! a single pass/fail line (visible with `--nocapture` or on failure).

mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crest::driver::{dorfler_mark, run, Mode, RunConfig};
use crest::estimator::{eta_cr, eta_crtilde, exact_error, surrogate_osc, Variant};
use crest::fe::{bubble_energy, Bubble, CrFunction};
use crest::mesh::Mesh;
use crest::problem::{benchmark, clip_element, grad_inner_conforming};
use crest::solver::{
    assemble_load, assemble_stiffness, solve_cg, solve_dense, solve_poisson, DofMap,
};
use crest::transfer::{average_acr, smooth_ecr, smoothed_cr_basis};

const LAMBDA: f64 = 2.0 / 3.0;

fn report(criterion: usize, label: &str, failures: Vec<String>) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion} ({label}): {verdict}");
    assert!(failures.is_empty(), "criterion {criterion} failures: {failures:#?}");
}

fn uniform_run(variant: Variant, max_elements: usize) -> crest::driver::RunOutput {
    let config = RunConfig {
        mode: Mode::Uniform,
        variant,
        max_elements,
        ..RunConfig::default()
    };
    run(&config).unwrap()
}

/// Reference values of the uniform benchmark table: error, order, and
/// effectivity per level for both estimator variants.
const REF_ERR: [f64; 8] = [6.55e-2, 5.91e-2, 4.10e-2, 2.71e-2, 1.86e-2, 1.30e-2, 9.11e-3, 6.42e-3];
const REF_EOC: [f64; 8] = [f64::NAN, 0.07, 0.26, 0.30, 0.27, 0.26, 0.26, 0.25];
const REF_EFF_CR: [f64; 8] = [2.09, 1.81, 1.79, 1.80, 1.81, 1.81, 1.82, 1.82];
const REF_EFF_CRTILDE: [f64; 8] = [2.03, 1.78, 1.74, 1.76, 1.77, 1.78, 1.78, 1.78];

#[test]
fn criterion_1_uniform_table() {
    let mut failures = Vec::new();
    for (variant, ref_eff) in [(Variant::Cr, REF_EFF_CR), (Variant::CrTilde, REF_EFF_CRTILDE)] {
        let out = uniform_run(variant, 70_000);
        if out.sizes.len() < 8 {
            failures.push(format!("{variant:?}: only {} levels", out.sizes.len()));
            continue;
        }
        for k in 0..8 {
            let r = &out.reports[k];
            // the smoother construction follows the averaging + bubble
            // choice; absolute errors may shift at the percent level
            // relative to the reference, hence the 10% band
            if k <= 6 {
                let rel = (r.err - REF_ERR[k]).abs() / REF_ERR[k];
                if rel > 0.10 {
                    failures.push(format!("{variant:?} k={k}: err {} off by {rel:.3}", r.err));
                }
            }
            if k >= 4 {
                let eoc = r.eoc.unwrap();
                if (eoc - REF_EOC[k]).abs() > 0.03 {
                    failures.push(format!("{variant:?} k={k}: eoc {eoc:.3} vs {}", REF_EOC[k]));
                }
            }
            // the reference effectivity ranges describe the settled regime
            // k >= 2; on the two coarsest meshes the variants coincide
            if k >= 2 {
                let eff = r.eff.unwrap();
                if (eff - ref_eff[k]).abs() > 0.15 {
                    failures.push(format!("{variant:?} k={k}: eff {eff:.3} vs {}", ref_eff[k]));
                }
                if !(1.5..=2.2).contains(&eff) {
                    failures.push(format!("{variant:?} k={k}: eff {eff:.3} outside [1.5, 2.2]"));
                }
            }
        }
    }
    report(1, "uniform benchmark table reproduction", failures);
}

#[test]
fn criterion_2_deep_uniform_orders() {
    let out = uniform_run(Variant::CrTilde, 1_100_000);
    let mut failures = Vec::new();
    if out.sizes.len() < 10 {
        failures.push(format!("only {} levels reached", out.sizes.len()));
    } else {
        for k in [8, 9] {
            let eoc = out.reports[k].eoc.unwrap();
            if (eoc - 0.25).abs() > 0.02 {
                failures.push(format!("k={k}: eoc {eoc:.4} outside 0.25 +/- 0.02"));
            }
        }
    }
    report(2, "deep uniform asymptotic order", failures);
}

/// Least-squares slope of `ln y` against `ln n`.
fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(k, _)| (k as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[test]
fn criterion_3_adaptive_convergence() {
    let mut failures = Vec::new();
    let adaptive = run(&RunConfig {
        mode: Mode::Adaptive,
        variant: Variant::CrTilde,
        theta: 0.7,
        max_iterations: 40,
        max_elements: 150_000,
        ..RunConfig::default()
    })
    .unwrap();
    if adaptive.reports.len() < 12 {
        failures.push(format!("only {} adaptive iterations", adaptive.reports.len()));
    }
    let tail = adaptive.reports.len().saturating_sub(5);
    let err_pts: Vec<(usize, f64)> = adaptive.sizes[tail..]
        .iter()
        .zip(&adaptive.reports[tail..])
        .map(|(&n, r)| (n, r.err))
        .collect();
    let est_pts: Vec<(usize, f64)> = adaptive.sizes[tail..]
        .iter()
        .zip(&adaptive.reports[tail..])
        .map(|(&n, r)| (n, r.est))
        .collect();
    for (name, pts) in [("err", err_pts), ("est", est_pts)] {
        let slope = loglog_slope(&pts);
        if !(-0.55..=-0.45).contains(&slope) {
            failures.push(format!("{name} slope {slope:.3} outside [-0.55, -0.45]"));
        }
    }

    // adaptive beats uniform at comparable sizes
    let uniform = uniform_run(Variant::CrTilde, 70_000);
    for (&n, r) in adaptive.sizes.iter().zip(&adaptive.reports) {
        if n < 10_000 {
            continue;
        }
        let nearest = uniform
            .sizes
            .iter()
            .enumerate()
            .min_by_key(|&(_, &un)| (un as i64 - n as i64).unsigned_abs())
            .unwrap()
            .0;
        if r.err >= uniform.reports[nearest].err {
            failures.push(format!(
                "adaptive err {} at n={n} not below uniform err {} at n={}",
                r.err, uniform.reports[nearest].err, uniform.sizes[nearest]
            ));
        }
    }
    report(3, "adaptive rate and superiority", failures);
}

fn mesh_hierarchy(levels: usize) -> Vec<Mesh> {
    let mut meshes = vec![Mesh::unit_square_initial()];
    for _ in 0..levels {
        meshes.push(meshes.last().unwrap().uniform_refine().unwrap());
    }
    meshes
}

#[test]
fn criterion_4_property_suite() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20230617);
    let meshes = mesh_hierarchy(4);
    let (source, exact) = benchmark(LAMBDA).unwrap();
    let seg_rule = support::gauss_legendre(4);

    // smoother moment conservation on every edge, 50 random fields/level
    for mesh in &meshes {
        for _ in 0..50 {
            let v = support::random_cr(mesh, &mut rng);
            let ev = smooth_ecr(mesh, &v);
            for f in 0..mesh.n_edges() {
                let [a, b] = mesh.edge(f).vertices;
                let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
                let h = mesh.edge_length(f);
                let t = mesh.edge(f).incident()[0];
                let mut moment = 0.0;
                for &(s, w) in &seg_rule {
                    let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let bary = mesh.barycentric(t, p);
                    let ev_val = ev.eval(mesh, t, bary).unwrap().0;
                    let v_val = v.eval(mesh, t, bary).unwrap().0;
                    moment += w * (ev_val - v_val);
                }
                moment *= h;
                if moment.abs() > 1e-13 * h {
                    failures.push(format!("moment violation {moment:.2e} on edge {f}"));
                }
            }
        }
        if failures.len() > 5 {
            break;
        }
    }

    // overconsistency of the smoother, 50 random pairs per level
    for mesh in &meshes {
        for _ in 0..50 {
            let w = support::random_cr(mesh, &mut rng);
            let v = support::random_cr(mesh, &mut rng);
            let ev = smooth_ecr(mesh, &v);
            let mut inner = 0.0;
            for t in 0..mesh.n_elements() {
                let gw = w.gradient_on(mesh, t);
                // grad(v - Ev) integrated against the constant grad w
                inner += support::tri_integrate_product(&mesh.corners(t), 3, |p| {
                    let bary = mesh.barycentric(t, p);
                    let gv = v.eval(mesh, t, bary).unwrap().1;
                    let ge = ev.eval(mesh, t, bary).unwrap().1;
                    gw[0] * (gv[0] - ge[0]) + gw[1] * (gv[1] - ge[1])
                });
            }
            let scale = w.broken_energy_sq(mesh).sqrt() * v.broken_energy_sq(mesh).sqrt();
            if inner.abs() > 1e-12 * scale {
                failures.push(format!("overconsistency violation {inner:.2e}"));
            }
        }
        if failures.len() > 5 {
            break;
        }
    }

    // post-solve residual orthogonality on the level-3 mesh
    {
        let mesh = &meshes[3];
        let (u, _) = solve_poisson(mesh, &source, None, 1e-13).unwrap();
        let energy = u.broken_energy_sq(mesh).sqrt();
        for f in 0..mesh.n_edges() {
            if mesh.edge(f).boundary {
                continue;
            }
            let basis = smoothed_cr_basis(mesh, f).unwrap();
            let load = source.apply_on(mesh, &basis.elements, &|t, p| {
                basis.eval(mesh, t, mesh.barycentric(t, p)).0
            });
            let phi = CrFunction::basis(mesh, f).unwrap();
            let mut ah = 0.0;
            for &t in &basis.elements {
                let gu = u.gradient_on(mesh, t);
                let gp = phi.gradient_on(mesh, t);
                ah += mesh.area(t) * (gu[0] * gp[0] + gu[1] * gp[1]);
            }
            if (load - ah).abs() > 1e-9 * energy {
                failures.push(format!("residual not orthogonal on edge {f}: {:.2e}", load - ah));
            }
        }
    }

    // invariance of averaging and smoothing on conforming members
    for mesh in &meshes[..3] {
        let values: Vec<f64> = (0..mesh.n_vertices())
            .map(|z| if mesh.is_boundary_vertex(z) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let coeffs: Vec<f64> = (0..mesh.n_edges())
            .map(|f| {
                let [a, b] = mesh.edge(f).vertices;
                0.5 * (values[a] + values[b])
            })
            .collect();
        let v = CrFunction::from_edge_values(mesh, coeffs);
        for (name, image) in [("A", average_acr(mesh, &v)), ("E", smooth_ecr(mesh, &v))] {
            for z in 0..mesh.n_vertices() {
                if (image.vertex[z] - values[z]).abs() > 1e-14 {
                    failures.push(format!("{name} not invariant at vertex {z}"));
                }
            }
            let bubbles = image.edge.iter().chain(image.element.iter());
            if bubbles.map(|c| c.abs()).fold(0.0, f64::max) > 1e-14 {
                failures.push(format!("{name} produced bubbles on a conforming input"));
            }
        }
    }

    // indicator domination and local lower bounds
    for mesh in &meshes[..3] {
        let (u, _) = solve_poisson(mesh, &source, None, 1e-13).unwrap();
        let full = eta_cr(mesh, &u, &source).unwrap();
        let simple = eta_crtilde(mesh, &u, &source).unwrap();
        let (_, err_sq) = exact_error(mesh, &u, &exact);
        for t in 0..mesh.n_elements() {
            if simple[t] > full[t] + 1e-15 {
                failures.push(format!("domination violated on element {t}"));
            }
            if simple[t] > err_sq[t].sqrt() + 1e-10 {
                failures.push(format!("simplified lower bound violated on element {t}"));
            }
            let mut patch_sq = err_sq[t];
            for &f in &mesh.element_edge_ids(t) {
                for &s in mesh.edge(f).incident() {
                    if s != t {
                        patch_sq += err_sq[s];
                    }
                }
            }
            if full[t] > patch_sq.sqrt() + 1e-10 {
                failures.push(format!("full lower bound violated on element {t}"));
            }
        }
    }

    // dense Cholesky against conjugate gradients
    {
        let mesh = &meshes[4];
        let dofs = DofMap::new(mesh);
        assert!(mesh.n_edges() <= 2000);
        let a = assemble_stiffness(mesh, &dofs);
        let b = assemble_load(mesh, &dofs, &source).unwrap();
        let (x_cg, _) = solve_cg(&a, &b, None, 1e-14).unwrap();
        let x_dense = solve_dense(&a, &b).unwrap();
        let scale = x_dense.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gap = x_cg
            .iter()
            .zip(&x_dense)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        if gap > 1e-10 * scale {
            failures.push(format!("CG/dense gap {:.2e}", gap / scale));
        }
    }

    // weak-form identity for random conforming test functions
    {
        let mesh = &meshes[2];
        for _ in 0..30 {
            let mut g = crest::fe::ConformingFunction::zeros(mesh);
            for z in 0..mesh.n_vertices() {
                if !mesh.is_boundary_vertex(z) {
                    g.vertex[z] = rng.gen_range(-1.0..1.0);
                }
            }
            for f in 0..mesh.n_edges() {
                if !mesh.edge(f).boundary {
                    g.edge[f] = rng.gen_range(-1.0..1.0);
                }
            }
            for t in 0..mesh.n_elements() {
                g.element[t] = rng.gen_range(-1.0..1.0);
            }
            let lhs = source.apply(mesh, &g);
            let rhs = grad_inner_conforming(mesh, &exact, &g);
            let scale = g.energy_sq(mesh).sqrt();
            if (lhs - rhs).abs() > 1e-10 * scale {
                failures.push(format!("weak form violated: {:.2e}", (lhs - rhs) / scale));
            }
        }
    }

    report(4, "operator and estimator property suite", failures);
}

#[test]
fn criterion_5_quadrature_oracles() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(987654321);
    let meshes = mesh_hierarchy(4);
    let (source, _) = benchmark(LAMBDA).unwrap();
    let density = source.regular.as_ref().unwrap();
    let weight = &source.line.as_ref().unwrap().weight;

    for mesh in &meshes {
        let dofs = DofMap::new(mesh);
        let stiffness = assemble_stiffness(mesh, &dofs).to_dense();
        let osc = surrogate_osc(mesh, &source);
        for _ in 0..20 {
            let t = rng.gen_range(0..mesh.n_elements());

            // local stiffness entries against the product-Gauss oracle
            let fs = mesh.element_edge_ids(t);
            for i in 0..3 {
                for j in 0..3 {
                    let (Some(di), Some(dj)) = (dofs.dof[fs[i]], dofs.dof[fs[j]]) else {
                        continue;
                    };
                    let vi = CrFunction::basis(mesh, fs[i]).unwrap();
                    let vj = CrFunction::basis(mesh, fs[j]).unwrap();
                    let oracle = support::tri_integrate_product(&mesh.corners(t), 2, |p| {
                        let bary = mesh.barycentric(t, p);
                        let gi = vi.eval(mesh, t, bary).unwrap().1;
                        let gj = vj.eval(mesh, t, bary).unwrap().1;
                        gi[0] * gj[0] + gi[1] * gj[1]
                    });
                    // isolate the contribution of element t from the
                    // assembled entry by summing the other elements
                    let mut rest = 0.0;
                    for s in 0..mesh.n_elements() {
                        if s == t {
                            continue;
                        }
                        let ss = mesh.element_edge_ids(s);
                        if ss.contains(&fs[i]) && ss.contains(&fs[j]) {
                            let gi = vi.gradient_on(mesh, s);
                            let gj = vj.gradient_on(mesh, s);
                            rest += mesh.area(s) * (gi[0] * gj[0] + gi[1] * gj[1]);
                        }
                    }
                    let assembled = stiffness[di][dj] - rest;
                    if (assembled - oracle).abs() > 1e-12 * oracle.abs().max(1.0) {
                        failures.push(format!(
                            "stiffness entry ({i},{j}) on element {t}: {assembled} vs {oracle}"
                        ));
                    }
                }
            }

            // bubble energies
            let mut bubbles = vec![Bubble::Element(t)];
            for &f in &fs {
                if !mesh.edge(f).boundary {
                    bubbles.push(Bubble::Edge(f));
                }
            }
            for bubble in bubbles {
                let val = bubble_energy(mesh, bubble).unwrap().powi(2);
                let elements: Vec<usize> = match bubble {
                    Bubble::Element(e) => vec![e],
                    Bubble::Edge(f) => mesh.edge(f).incident().to_vec(),
                };
                let mut oracle = 0.0;
                for &s in &elements {
                    let mut g = crest::fe::ConformingFunction::zeros(mesh);
                    match bubble {
                        Bubble::Element(e) => g.element[e] = 1.0,
                        Bubble::Edge(f) => g.edge[f] = 1.0,
                    }
                    oracle += support::tri_integrate_product(&mesh.corners(s), 3, |p| {
                        let d = g.eval(mesh, s, mesh.barycentric(s, p)).unwrap().1;
                        d[0] * d[0] + d[1] * d[1]
                    });
                }
                if (val - oracle).abs() > 1e-12 * oracle {
                    failures.push(format!("bubble energy on element {t}: {val} vs {oracle}"));
                }
            }

            // surrogate oscillation
            let h_sq = mesh.diameter(t).powi(2);
            let clip = clip_element(mesh, t, LAMBDA);
            let tris: Vec<[crest::mesh::Point; 3]> = match &clip {
                Some(c) => c.left.iter().chain(c.right.iter()).cloned().collect(),
                None => vec![mesh.corners(t)],
            };
            let mut mass = 0.0;
            let mut second = 0.0;
            for tri in &tris {
                mass += support::tri_integrate_product(tri, 3, |p| density.eval(p));
                second += support::tri_integrate_product(tri, 4, |p| density.eval(p).powi(2));
            }
            let mut oracle = h_sq * (second - mass * mass / mesh.area(t));
            // the variance subtraction cancels heavily, so 1e-12 relative
            // agreement can only refer to the uncancelled magnitude
            let osc_scale = (h_sq * second).max(1e-12);
            if let Some(c) = &clip {
                let (y0, y1) = (c.segment[0][1], c.segment[1][1]);
                let max_w = (0..=4096)
                    .map(|k| weight.eval(y0 + (y1 - y0) * k as f64 / 4096.0).abs())
                    .fold(0.0, f64::max);
                oracle += h_sq * max_w * max_w;
                // the sampled maximum undershoots the analytic one by
                // O(step^2); widen the tolerance accordingly
                if (osc[t] - oracle).abs() > 1e-7 * oracle.abs().max(1e-12) {
                    failures.push(format!("osc on crossed element {t}: {} vs {oracle}", osc[t]));
                }
            } else if (osc[t] - oracle).abs() > 1e-12 * osc_scale {
                failures.push(format!("osc on element {t}: {} vs {oracle}", osc[t]));
            }
        }
    }
    report(5, "independent quadrature oracle agreement", failures);
}

#[test]
fn dorfler_marks_expected_bulk() {
    // marking convention shared by the acceptance runs
    assert_eq!(dorfler_mark(&[16.0, 9.0, 4.0, 1.0], 0.7), vec![0, 1]);
}
