//! One runner per experiment kind. Each returns the headline gap, the pass
//! verdict, structured details and the files to write.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, Family};
use super::generators::{frame_plan, leaf_domain, random_connection, random_flat_model, random_gauge};
use super::output::Table;
use crate::algebra::tensor::{multi_indices, SymmetricTensorField};
use crate::algebra::{dzbar_component, gauge_pullback, Connection, Frame, MatrixField};
use crate::dbar::SolverOptions;
use crate::error::{Error, Result};
use crate::geometry::ComplexFrame;
use crate::holonomy::transport::EXTERIOR_PAD;
use crate::holonomy::{
    amplitudes, counterexample_generate, det_consistency, equal_transport_check, gauge_glue, line_transport_deviation, monomial,
    stokes_moment_check, symmetry_check, FlatGaugeModel, SymmetryReport,
};
use crate::linalg::{self, c, CMat};
use crate::transforms::probe::max_trace;
use crate::transforms::{attenuated_smoke_test, exact_derivative_defect, kernel_injectivity_probe, sym_derivative, ProbeConfig, RaySetup};

/// Highest power `k` of the Stokes weights `zᵏ`.
pub const STOKES_MAX_POWER: u32 = 4;
/// Real transport along some horizontal line must move this far from `id`.
pub const MIN_LINE_DEVIATION: f64 = 1e-3;
/// Number of horizontal lines probed by the counterexample.
pub const LINE_COUNT: usize = 9;
pub const LINE_STEPS: usize = 400;
/// Simpson steps per geodesic of the exact-derivative fan.
pub const FAN_STEPS: usize = 1600;
/// Attenuation parameters of the reconstruction smoke test.
pub const SMOKE_XI: [f64; 5] = [-0.2, -0.1, 0.0, 0.1, 0.2];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub gap: f64,
    pub tolerance: f64,
    pub details: serde_json::Value,
    pub fields: Vec<(String, MatrixField)>,
    pub plots: Vec<Table>,
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn run_kind(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.kind {
        ExperimentKind::KernelProbe => kernel_probe(cfg),
        ExperimentKind::Stokes => stokes(cfg),
        ExperimentKind::Glue => glue(cfg),
        ExperimentKind::HolonomyCounterexample => counterexample(cfg),
        ExperimentKind::Symmetry => symmetry(cfg),
        ExperimentKind::AttenuatedXray => attenuated_xray(cfg),
    }
}

fn rng(cfg: &ExperimentConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed())
}

fn kernel_probe(cfg: &ExperimentConfig) -> Result<Outcome> {
    let surface = cfg.surface()?;
    let setup = RaySetup::new(cfg.complex_grid()?, cfg.grid.leaf_half_width);
    let m = cfg.generator.degree;
    let tol = cfg.tolerances.gap;
    let mut table = Table::new("kernel_traces", &["trial", "kernel_trace", "nonpotential_trace", "high_mode_fraction"]);
    if cfg.generator.family == Family::Zero {
        let n = multi_indices(m, surface.dim + 1).len();
        let p = SymmetricTensorField::new(m, surface.dim, 1, move |_, _| vec![CMat::zeros(1, 1); n]);
        let probe = ProbeConfig::new(m, cfg.generator.count, cfg.seed());
        let trace = max_trace(&setup, &surface, &sym_derivative(&p, surface.factor), &probe.leaves)?;
        table.push(vec![0.0, trace, f64::NAN, f64::NAN]);
        return Ok(Outcome {
            pass: trace <= tol,
            gap: trace,
            tolerance: tol,
            details: json!({ "m": m, "kernel_trace": trace }),
            fields: Vec::new(),
            plots: vec![table],
        });
    }
    let mut probe = ProbeConfig::new(m, cfg.generator.count, cfg.seed());
    probe.tol = tol;
    let report = kernel_injectivity_probe(&setup, &surface, &probe)?;
    for (k, t) in report.trials.iter().enumerate() {
        table.push(vec![k as f64, t.kernel_trace, t.nonpotential_trace, t.high_mode_fraction.unwrap_or(f64::NAN)]);
    }
    let gap = report.trials.iter().map(|t| t.kernel_trace).fold(0.0, f64::max);
    Ok(Outcome { pass: report.passed(), gap, tolerance: tol, details: to_json(&report), fields: Vec::new(), plots: vec![table] })
}

fn stokes(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (grid, window) = leaf_domain(cfg)?;
    let target = window.grow(EXTERIOR_PAD, &grid);
    let opts = SolverOptions::default();
    let mut rng = rng(cfg);
    let mut table = Table::new("stokes_moments", &["pair", "k", "lhs", "gap"]);
    let mut fields = Vec::new();
    let mut worst: f64 = 0.0;
    for pair in 0..cfg.generator.count {
        let a1 = random_connection(&mut rng, grid, window, &cfg.generator)?;
        let a2 = random_connection(&mut rng, grid, window, &cfg.generator)?;
        let amp = amplitudes(&a1, &a2, target, &opts)?;
        for k in 0..=STOKES_MAX_POWER {
            let h = monomial(grid, target, cfg.generator.rank, k, c(0.0, 0.0), 1.0);
            let m = stokes_moment_check(&amp.c1, &amp.c2, &amp.a_tilde, &h, &window)?;
            worst = worst.max(m.gap);
            table.push(vec![pair as f64, f64::from(k), linalg::fro(&m.lhs), m.gap]);
        }
        if pair == 0 {
            fields.push(("c1".to_string(), amp.c1));
            fields.push(("c2".to_string(), amp.c2));
        }
    }
    let tol = cfg.tolerances.gap;
    Ok(Outcome {
        pass: worst <= tol,
        gap: worst,
        tolerance: tol,
        details: json!({ "pairs": cfg.generator.count, "max_power": STOKES_MAX_POWER }),
        fields,
        plots: vec![table],
    })
}

fn sup_distance(a: &MatrixField, b: &MatrixField) -> f64 {
    a.window().nodes().map(|(i, j)| linalg::fro(&(a.at(i, j) - b.at(i, j)))).fold(0.0, f64::max)
}

#[derive(Serialize)]
struct GlueTrial {
    error: f64,
    residual: f64,
    edge_defect: f64,
    max_moment: f64,
    det_gap: f64,
    min_det: f64,
    det_pass: bool,
}

fn glue(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (grid, window) = leaf_domain(cfg)?;
    let opts = SolverOptions::default();
    let mut rng = rng(cfg);
    let (tol, det_tol) = (cfg.tolerances.glue, cfg.tolerances.gap);
    let mut table = Table::new("glue_errors", &["trial", "error", "det_gap", "min_det"]);
    let mut trials = Vec::new();
    let mut fields = Vec::new();
    for k in 0..cfg.generator.count {
        let a1 = random_connection(&mut rng, grid, window, &cfg.generator)?;
        let g0 = random_gauge(&mut rng, grid, window, &cfg.generator)?;
        let a2 = gauge_pullback(&g0, &a1)?;
        let out = gauge_glue(&a1, &a2, window, &opts, tol)?;
        let error = sup_distance(&g0.field().restrict(out.window), &out.gauge.field().restrict(out.window));
        let det = det_consistency(&a1, &a2, &out.gauge, &opts, det_tol)?;
        let d = &out.diagnostics;
        let max_moment = d.moments.iter().cloned().fold(0.0, f64::max);
        table.push(vec![k as f64, error, det.gap, det.min_det]);
        trials.push(GlueTrial {
            error,
            residual: d.residual,
            edge_defect: d.edge_defect,
            max_moment,
            det_gap: det.gap,
            min_det: det.min_det,
            det_pass: det.pass,
        });
        if k == 0 {
            fields.push(("g_recovered".to_string(), out.gauge.field().clone()));
            fields.push(("g_true".to_string(), g0.field().clone()));
        }
    }
    let gap = trials.iter().map(|t| t.error).fold(0.0, f64::max);
    let pass = gap <= tol && trials.iter().all(|t| t.det_pass);
    Ok(Outcome { pass, gap, tolerance: tol, details: json!({ "trials": trials }), fields, plots: vec![table] })
}

#[derive(Serialize)]
struct CounterexampleTrial {
    summary: crate::holonomy::counterexample::CounterexampleSummary,
    diagnostics: crate::holonomy::transport::EqualTransportDiagnostics,
    diagnostic_gap: f64,
    equal: bool,
    curvature_witness: bool,
    line_deviation: f64,
    det_gap: Option<f64>,
    det_pass: bool,
}

fn counterexample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (grid, window) = leaf_domain(cfg)?;
    let opts = SolverOptions::default();
    let mut rng = rng(cfg);
    let tol = cfg.tolerances.gap;
    let (t, hh) = (cfg.grid.leaf_half_width, cfg.grid.leaf_half_height);
    let heights: Vec<f64> = (0..LINE_COUNT).map(|k| 0.8 * hh * (2.0 * k as f64 / (LINE_COUNT - 1) as f64 - 1.0)).collect();
    let zero = Connection::zero(grid, window, cfg.generator.rank, Frame::Leaf);
    let mut lines = Table::new("line_transport", &["trial", "height", "deviation"]);
    let mut trials = Vec::new();
    let mut fields = Vec::new();
    for k in 0..cfg.generator.count {
        let a0 = random_connection(&mut rng, grid, window, &cfg.generator)?;
        let ce = counterexample_generate(&a0, Complex64::new(0.0, 0.0), cfg.generator.rho, &opts)?;
        let eq = equal_transport_check(&ce.a, &zero, window, &opts, tol)?;
        let d = &eq.diagnostics;
        let diagnostic_gap = d.residual.max(d.exterior_identity).max(d.exterior_holomorphy).max(d.plemelj_mismatch);
        let dev = line_transport_deviation(&ce.a, &heights, -t + 0.1, t - 0.1, LINE_STEPS);
        for (y, v) in heights.iter().zip(&dev) {
            lines.push(vec![k as f64, *y, *v]);
        }
        let det = match &eq.gauge {
            Some(g) => Some(det_consistency(&ce.a, &zero, g, &opts, tol)?),
            None => None,
        };
        trials.push(CounterexampleTrial {
            summary: ce.summary(),
            diagnostics: d.clone(),
            diagnostic_gap,
            equal: eq.equal,
            curvature_witness: ce.curvature_witness(),
            line_deviation: dev.iter().cloned().fold(0.0, f64::max),
            det_gap: det.as_ref().map(|r| r.gap),
            det_pass: det.is_some_and(|r| r.pass),
        });
        if k == 0 {
            fields.push(("a_dzbar".to_string(), dzbar_component(&ce.a)?));
            fields.push(("g".to_string(), ce.g.clone()));
        }
    }
    let gap = trials.iter().map(|t| t.diagnostic_gap).fold(0.0, f64::max);
    let pass = trials.iter().all(|t| t.equal && t.curvature_witness && t.line_deviation > MIN_LINE_DEVIATION && t.det_pass);
    Ok(Outcome { pass, gap, tolerance: tol, details: json!({ "trials": trials }), fields, plots: vec![lines] })
}

/// Flat gauge model and frame plan shared by the symmetry run and sweep.
pub struct SymmetrySetup {
    pub model: FlatGaugeModel,
    pub frames: Vec<ComplexFrame>,
    pub grid: crate::grid::ComplexGrid,
}

pub fn symmetry_setup(cfg: &ExperimentConfig) -> Result<SymmetrySetup> {
    let surface = cfg.surface()?;
    let model = random_flat_model(&mut rng(cfg), &surface, &cfg.generator);
    let frames = frame_plan(&surface, cfg.sweep.frames, cfg.sweep.tilt)?;
    Ok(SymmetrySetup { model, frames, grid: cfg.complex_grid()? })
}

pub fn symmetry_frame(cfg: &ExperimentConfig, setup: &SymmetrySetup, frame: &ComplexFrame) -> Result<SymmetryReport> {
    let opts = SolverOptions::default();
    let glue = |f: &ComplexFrame| setup.model.glue(f, &setup.grid, cfg.grid.leaf_half_width, &opts, cfg.tolerances.glue);
    symmetry_check(glue, frame, cfg.sweep.theta, cfg.generator.unitary)
}

fn symmetry(cfg: &ExperimentConfig) -> Result<Outcome> {
    let setup = symmetry_setup(cfg)?;
    let frame = setup.frames[0];
    let report = symmetry_frame(cfg, &setup, &frame)?;
    let opts = SolverOptions::default();
    let base = setup.model.glue(&frame, &setup.grid, cfg.grid.leaf_half_width, &opts, cfg.tolerances.glue)?;
    let mut table = Table::new("symmetry_gaps", &["symmetry", "gap"]);
    table.push(vec![0.0, report.negation]);
    table.push(vec![1.0, report.rotation.unwrap_or(f64::NAN)]);
    table.push(vec![2.0, report.conjugation.unwrap_or(f64::NAN)]);
    let tol = cfg.tolerances.gap;
    let gap = report.max_gap();
    Ok(Outcome {
        pass: gap <= tol,
        gap,
        tolerance: tol,
        details: json!({ "frame": frame_json(&frame), "gaps": to_json(&report) }),
        fields: vec![("g".to_string(), base.glue.gauge.field().clone())],
        plots: vec![table],
    })
}

pub fn frame_json(f: &ComplexFrame) -> serde_json::Value {
    json!({ "y": f.y, "x": f.x, "mu": f.mu, "nu_y": f.nu_y, "nu_x": f.nu_x })
}

fn attenuated_xray(cfg: &ExperimentConfig) -> Result<Outcome> {
    let surface = cfg.surface()?;
    let spec = &cfg.generator;
    let [x0, x1, y0, y1] = spec.support;
    let centre = [0.5 * (x0 + x1), 0.5 * (y0 + y1)];
    if centre[0].hypot(centre[1]) + spec.width >= surface.size {
        return Err(Error::Config("generator.width: the derivative bump leaves the disk".into()));
    }
    let defect = exact_derivative_defect(&surface, centre, spec.width, 6, 5, FAN_STEPS)?;
    let setup = RaySetup::new(cfg.complex_grid()?, cfg.grid.leaf_half_width);
    let leaves = ProbeConfig::new(0, 1, cfg.seed()).leaves;
    let tol = cfg.tolerances.gap;
    let mut table = Table::new("reconstruction_norms", &["seed", "xi1", "norm"]);
    let mut trials = Vec::new();
    for k in 0..spec.count {
        let seed = cfg.seed().wrapping_add(k as u64);
        let trial = attenuated_smoke_test(&setup, &surface, seed, tol, &SMOKE_XI, &leaves)?;
        for &(xi, n) in &trial.reconstructed {
            table.push(vec![seed as f64, xi, n]);
        }
        trials.push(trial);
    }
    let worst = trials.iter().map(|t| t.max_norm).fold(0.0, f64::max);
    let pass = defect <= cfg.tolerances.derivative && worst <= cfg.tolerances.reconstruction;
    Ok(Outcome {
        pass,
        gap: defect,
        tolerance: cfg.tolerances.derivative,
        details: json!({ "derivative_defect": defect, "max_reconstruction": worst, "trials": to_json(&trials) }),
        fields: Vec::new(),
        plots: vec![table],
    })
}
