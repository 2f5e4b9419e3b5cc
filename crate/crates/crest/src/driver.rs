//! Refinement loops and file output. A run repeats solve → estimate →
//! mark → refine until a size or iteration cap, optionally writing a CSV
//! convergence table, per-iteration VTK indicator fields, and an SVG
//! convergence plot.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::estimator::{combine, estimate, EstimatorReport, Variant};
use crate::mesh::Mesh;
use crate::problem::benchmark;
use crate::solver::{prolongate, solve_poisson};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Uniform,
    Adaptive,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EmitFlags {
    pub csv: bool,
    pub vtk: bool,
    pub svg: bool,
}

/// Full configuration of one refinement run.
pub struct RunConfig {
    pub lambda: f64,
    pub mode: Mode,
    pub variant: Variant,
    /// Doerfler bulk parameter.
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    /// Stop before processing a mesh larger than this.
    pub max_elements: usize,
    /// Hard cap on the number of processed meshes.
    pub max_iterations: usize,
    /// Relative residual tolerance of the linear solver.
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
    pub emit: EmitFlags,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            lambda: 2.0 / 3.0,
            mode: Mode::Uniform,
            variant: Variant::Cr,
            theta: 0.7,
            c1: 1.0,
            c2: 0.3,
            max_elements: 100_000,
            max_iterations: 100,
            tol: 1e-12,
            out_dir: None,
            emit: EmitFlags::default(),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Greedy bulk marking: sort squared indicators descending (ties by
/// ascending element id) and mark until the marked sum reaches
/// `theta` times the total. All-zero indicators yield an empty set.
pub fn dorfler_mark(indicators_sq: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = indicators_sq.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators_sq.len()).collect();
    order.sort_by(|&a, &b| {
        indicators_sq[b]
            .partial_cmp(&indicators_sq[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut marked = Vec::new();
    let mut sum = 0.0;
    for t in order {
        if sum >= theta * total {
            break;
        }
        if indicators_sq[t] == 0.0 {
            break;
        }
        marked.push(t);
        sum += indicators_sq[t];
    }
    marked.sort_unstable();
    marked
}

/// Everything a run produces in memory.
pub struct RunOutput {
    pub reports: Vec<EstimatorReport>,
    /// Element count per processed mesh.
    pub sizes: Vec<usize>,
    pub final_mesh: Mesh,
}

/// Executes the configured refinement loop on the benchmark problem.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let (source, exact) = benchmark(config.lambda)?;
    if let (Some(dir), true) = (&config.out_dir, config.emit.csv || config.emit.vtk || config.emit.svg) {
        std::fs::create_dir_all(dir)?;
    }

    let mut mesh = Mesh::unit_square_initial();
    let mut reports: Vec<EstimatorReport> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut carried: Option<crate::fe::CrFunction> = None;

    loop {
        let guess = carried.as_ref();
        let (u, _) = solve_poisson(&mesh, &source, guess, config.tol)?;
        let parts = estimate(&mesh, &u, &source, Some(&exact), config.variant)?;
        let previous = reports
            .last()
            .zip(sizes.last())
            .map(|(r, &n)| (r.err, n));
        let report = combine(
            &parts,
            config.c1,
            config.c2,
            config.variant,
            mesh.n_elements(),
            previous,
        )?;
        if config.emit.vtk {
            if let Some(dir) = &config.out_dir {
                let path = dir.join(format!("mesh_{}.vtk", reports.len()));
                std::fs::write(path, vtk_cell_fields(&mesh, &report))?;
            }
        }
        sizes.push(mesh.n_elements());
        reports.push(report);

        if reports.len() >= config.max_iterations {
            break;
        }
        let marked: Vec<usize> = match config.mode {
            Mode::Uniform => (0..mesh.n_elements()).collect(),
            Mode::Adaptive => {
                let totals: Vec<f64> = reports
                    .last()
                    .unwrap()
                    .records
                    .iter()
                    .map(|r| r.total_sq)
                    .collect();
                dorfler_mark(&totals, config.theta)
            }
        };
        if marked.is_empty() {
            break;
        }
        let next = mesh.refine(&marked)?;
        if next.n_elements() > config.max_elements {
            break;
        }
        carried = Some(prolongate(&mesh, &next, &u)?);
        mesh = next;
    }

    if config.emit.csv {
        if let Some(dir) = &config.out_dir {
            std::fs::write(dir.join("table.csv"), csv_table(&reports, &sizes))?;
        }
    }
    if config.emit.svg {
        if let Some(dir) = &config.out_dir {
            std::fs::write(dir.join("convergence.svg"), convergence_svg(&reports, &sizes))?;
        }
    }
    Ok(RunOutput { reports, sizes, final_mesh: mesh })
}

/// Six significant digits, plain `.` decimal separator.
fn fmt6(x: f64) -> String {
    format!("{x:.5e}")
}

/// The convergence table in the layout of the printed results.
pub fn csv_table(reports: &[EstimatorReport], sizes: &[usize]) -> String {
    let mut out = String::from("k,n_elements,err,eoc,est,eff,ncf,eta,osc\n");
    for (k, (report, n)) in reports.iter().zip(sizes).enumerate() {
        let eoc = report.eoc.map(fmt6).unwrap_or_default();
        let eff = report.eff.map(fmt6).unwrap_or_default();
        let _ = writeln!(
            out,
            "{k},{n},{},{eoc},{},{eff},{},{},{}",
            fmt6(report.err),
            fmt6(report.est),
            fmt6(report.ncf),
            fmt6(report.eta),
            fmt6(report.osc),
        );
    }
    out
}

/// Legacy ASCII VTK unstructured grid with the squared indicator fields as
/// cell data.
pub fn vtk_cell_fields(mesh: &Mesh, report: &EstimatorReport) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("error indicators\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for z in 0..mesh.n_vertices() {
        let p = mesh.vertex(z);
        let _ = writeln!(out, "{} {} 0", p[0], p[1]);
    }
    let n = mesh.n_elements();
    let _ = writeln!(out, "CELLS {n} {}", 4 * n);
    for t in 0..n {
        let v = mesh.element(t).vertices;
        let _ = writeln!(out, "3 {} {} {}", v[0], v[1], v[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {n}");
    for _ in 0..n {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "CELL_DATA {n}");
    let fields: [(&str, Box<dyn Fn(usize) -> f64>); 4] = [
        ("ncf2", Box::new(|t| report.records[t].ncf_sq)),
        ("eta2", Box::new(|t| report.records[t].eta_sq)),
        ("osc2", Box::new(|t| report.records[t].osc_sq)),
        ("total2", Box::new(|t| report.records[t].total_sq)),
    ];
    for (name, get) in fields {
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for t in 0..n {
            let _ = writeln!(out, "{}", get(t));
        }
    }
    out
}

/// Static log-log plot of error and estimator against element count with a
/// slope −1/2 reference line.
pub fn convergence_svg(reports: &[EstimatorReport], sizes: &[usize]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;

    let points: Vec<(f64, f64, f64)> = reports
        .iter()
        .zip(sizes)
        .filter(|(r, _)| r.err > 0.0 && r.est > 0.0)
        .map(|(r, &n)| ((n as f64).ln(), r.err.ln(), r.est.ln()))
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().flat_map(|p| [p.1, p.2]).collect();
        let (x0, x1) = (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = (
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        let polyline = |vals: &[(f64, f64)], color: &str| {
            let pts: Vec<String> = vals
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            )
        };
        let err_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
        let est_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.2)).collect();
        out.push_str(&polyline(&err_pts, "#1f77b4"));
        out.push_str(&polyline(&est_pts, "#d62728"));
        // reference line with slope -1/2 through the last error point
        let (lx, ly) = (points.last().unwrap().0, points.last().unwrap().1);
        let reference = [(x0, ly + 0.5 * (lx - x0)), (lx, ly)];
        out.push_str(&polyline(&reference, "#7f7f7f"));
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">slope -1/2</text>",
            sx(reference[0].0) + 6.0,
            sy(reference[0].1)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#1f77b4\">err</text>",
            W - M + 8.0,
            sy(err_pts.last().unwrap().1)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#d62728\">est</text>",
            W - M + 8.0,
            sy(est_pts.last().unwrap().1)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">log #elements</text>",
            W / 2.0 - 40.0,
            H - 20.0
        );
    }
    out.push_str("</svg>\n");
    out
}
