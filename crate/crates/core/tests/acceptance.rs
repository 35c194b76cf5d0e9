//! End-to-end acceptance checks at the default resolution `h = 1/128`,
//! `S = 4`. Each test writes one `criterion N [PASS|FAIL]` line to stdout
//! (uncaptured) and then asserts.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use leafray::algebra::{gauge_pullback, Connection, Frame, GaugeTransform, MatrixField};
use leafray::dbar::solve::{residual, solve_dbar_potential, Coupling};
use leafray::dbar::{cauchy_transform, SolverOptions};
use leafray::experiment::config::GeneratorSpec;
use leafray::experiment::generators::{random_connection, random_flat_model, random_gauge, random_matrix};
use leafray::experiment::{export_convergence, leaf_sweep, run_experiment, ExperimentConfig};
use leafray::geometry::{xi_family, xi_normaliser, ComplexFrame, ConformalFactor, SimpleSurface};
use leafray::holonomy::{counterexample_generate, det_consistency, equal_transport_check, gauge_glue, line_transport_deviation};
use leafray::linalg::{c, fro, CMat};
use leafray::transforms::{
    attenuated_smoke_test, exact_derivative_defect, kernel_injectivity_probe, ProbeConfig, ProbeReport, RaySetup,
};
use leafray::ComplexGrid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1.0 / 128.0;
const S: f64 = 4.0;

fn line(n: u32, pass: bool, title: &str, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn grid() -> ComplexGrid {
    ComplexGrid::new(S, H).unwrap()
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn leaf_window(g: &ComplexGrid) -> leafray::IndexBox {
    g.window(-2.0, 2.0, -1.5, 1.5).unwrap()
}

/// `(1 − |z − z0|²/w²)⁶` and its `∂_{z̄}` derivative.
fn bump(z: Complex64, z0: Complex64, w: f64) -> (f64, Complex64) {
    let r2 = (z - z0).norm_sqr() / (w * w);
    if r2 >= 1.0 {
        return (0.0, c(0.0, 0.0));
    }
    ((1.0 - r2).powi(6), -6.0 * (1.0 - r2).powi(5) * (z - z0) / (w * w))
}

fn disk_coverage(z: Complex64, h: f64) -> f64 {
    let n = 16;
    let inside = (0..n * n)
        .filter(|k| {
            let (p, q) = ((k % n) as f64 + 0.5, (k / n) as f64 + 0.5);
            (z + c((p / n as f64 - 0.5) * h, (q / n as f64 - 0.5) * h)).norm_sqr() < 1.0
        })
        .count();
    inside as f64 / (n * n) as f64
}

#[test]
fn criterion_01_dbar_solver() {
    let g = grid();
    let support = g.window(-1.2, 1.2, -1.2, 1.2).unwrap();
    let target = g.window(-2.0, 2.0, -2.0, 2.0).unwrap();
    let inner = g.window(-1.9, 1.9, -1.9, 1.9).unwrap();
    let opts = SolverOptions::default().with_target(target);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_res: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for rank in [1, 2] {
        for _ in 0..10 {
            let k = random_matrix(&mut rng, rank, 1.0);
            let m = random_matrix(&mut rng, rank, 1.0);
            let za = c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            let zu = c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
            let exact = MatrixField::from_fn(g, target, rank, |z| &m * c(bump(z, zu, 0.95).0, 0.0));
            let a = MatrixField::from_fn(g, support, rank, |z| &k * c(bump(z, za, 0.9).0, 0.0)).with_support(support);
            let f = MatrixField::from_fn(g, support, rank, |z| {
                let (b, db) = bump(z, zu, 0.95);
                &m * db + &k * &m * c(bump(z, za, 0.9).0 * b, 0.0)
            })
            .with_support(support);
            let sol = solve_dbar_potential(&a, &f, &opts).unwrap();
            worst_res = worst_res.max(residual(&Coupling::left(a), &sol.u, &f, &inner).unwrap());
            worst_err = worst_err.max(sol.u.sub(&exact).unwrap().sup_norm(Some(&inner)));
        }
    }
    let indicator = MatrixField::from_scalar_fn(g, support, 1, |z| c(disk_coverage(z, H), 0.0)).with_support(support);
    let u = cauchy_transform(&indicator, target).unwrap();
    let disk_err = max(target.nodes().filter(|&(i, j)| (g.z(i, j).norm() - 1.0).abs() > 0.1).map(|(i, j)| {
        let z = g.z(i, j);
        let truth = if z.norm() < 1.0 { z.conj() } else { z.inv() };
        (u.at(i, j)[(0, 0)] - truth).norm()
    }));
    let pass = worst_res <= 1e-6 && disk_err <= 1e-3;
    line(
        1,
        pass,
        "dbar solver",
        &format!("max residual {worst_res:.2e} (<= 1e-6), max solution error {worst_err:.2e}, disk closed form {disk_err:.2e} (<= 1e-3)"),
    );
    assert!(pass);
}

fn stokes_config(h: f64, count: usize) -> ExperimentConfig {
    let text = format!(
        "kind = \"stokes\"\nseed = 11\n[grid]\nh = {h}\n[generator]\nrank = 2\namplitude = 0.8\nwidth = 0.9\nsupport = [-0.4, 0.4, -0.3, 0.3]\ncount = {count}\n"
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn criterion_02_stokes_identity() {
    let conv = export_convergence(&stokes_config(4.0 * H, 8), 3).unwrap();
    let fine = *conv.gaps.last().unwrap();
    let slope = conv.slope.unwrap_or(f64::INFINITY);
    let pass = fine <= 1e-5 && conv.pass && slope >= 1.8;
    line(
        2,
        pass,
        "Stokes moment identity",
        &format!("8 pairs, k = 0..4: max gap {fine:.2e} at h = 1/128 (<= 1e-5); gaps {:?} over h = 1/32, 1/64, 1/128, slope {} (>= 1.8)", fmt_gaps(&conv.gaps), conv.slope_label()),
    );
    assert!(pass, "{conv:?}");
}

fn fmt_gaps(g: &[f64]) -> Vec<String> {
    g.iter().map(|v| format!("{v:.2e}")).collect()
}

fn kernel_setup() -> (RaySetup, SimpleSurface) {
    (RaySetup::new(grid(), 2.0), SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 }).unwrap())
}

/// The two kernel probes (`p` of degree 0 and 1), shared with the degree check.
fn kernel_probes() -> &'static Vec<ProbeReport> {
    static PROBES: OnceLock<Vec<ProbeReport>> = OnceLock::new();
    PROBES.get_or_init(|| {
        let (setup, surface) = kernel_setup();
        (0..2).map(|m| kernel_injectivity_probe(&setup, &surface, &ProbeConfig::new(m, 8, 51 + m as u64)).unwrap()).collect()
    })
}

fn kernel_config(m: usize, h: f64) -> ExperimentConfig {
    let text = format!(
        "kind = \"kernel-probe\"\nseed = {}\n[surface]\nshape = \"disk\"\nsize = 1.0\nkappa = 0.2\n[grid]\nh = {h}\n[generator]\ndegree = {m}\ncount = 2\n",
        71 + m
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn criterion_03_kernel_inclusion() {
    let probes = kernel_probes();
    let traces: Vec<f64> = probes.iter().map(|r| max(r.trials.iter().map(|t| t.kernel_trace))).collect();
    let nondegenerate = probes.iter().all(|r| r.nondegenerate_pass);
    let convs: Vec<_> = (0..2).map(|m| export_convergence(&kernel_config(m, 1.0 / 16.0), 3).unwrap()).collect();
    let slopes_ok = convs.iter().all(|cv| cv.pass && cv.slope.is_some_and(|s| s >= 1.8));
    let pass = traces.iter().all(|t| *t <= 1e-5) && nondegenerate && slopes_ok;
    let slopes: Vec<String> = convs.iter().map(|cv| cv.slope_label()).collect();
    line(
        3,
        pass,
        "kernel inclusion",
        &format!(
            "8 potentials per m: max |C(Dp)| m=0 {:.2e}, m=1 {:.2e} (<= 1e-5); non-potential traces above 10 tol: {nondegenerate}; refinement slopes (h = 1/16..1/64) {slopes:?} (>= 1.8)",
            traces[0], traces[1]
        ),
    );
    assert!(pass);
}

/// Glue outputs of the gauge recovery runs, shared with the determinant check.
struct GlueRun {
    a1: Connection,
    a2: Connection,
    gauge: GaugeTransform,
    error: f64,
}

fn glue_runs() -> &'static Vec<GlueRun> {
    static RUNS: OnceLock<Vec<GlueRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let g = grid();
        let w = leaf_window(&g);
        let spec = GeneratorSpec { support: [-0.4, 0.4, -0.3, 0.3], ..GeneratorSpec::default() };
        let opts = SolverOptions::default();
        (0..8)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
                let a1 = random_connection(&mut rng, g, w, &spec).unwrap();
                let g0 = random_gauge(&mut rng, g, w, &spec).unwrap();
                let a2 = gauge_pullback(&g0, &a1).unwrap();
                let out = gauge_glue(&a1, &a2, w, &opts, 1e-4).unwrap();
                let error = max(w.nodes().map(|(i, j)| fro(&(out.gauge.field().at(i, j) - g0.field().at(i, j)))));
                GlueRun { a1, a2, gauge: out.gauge, error }
            })
            .collect()
    })
}

#[test]
fn criterion_04_gauge_glue_recovery() {
    let errors: Vec<f64> = glue_runs().iter().map(|r| r.error).collect();
    let worst = max(errors.iter().cloned());
    let pass = worst <= 1e-4;
    line(4, pass, "gauge-glue recovery", &format!("8 seeds, r = 2: max sup|G - G0| {worst:.2e} (<= 1e-4)"));
    assert!(pass, "{errors:?}");
}

#[test]
fn criterion_05_frame_symmetries() {
    let text = "kind = \"symmetry\"\nseed = 41\n[surface]\nshape = \"interval\"\nsize = 2.0\n[grid]\nh = 0.0078125\nleaf_half_width = 1.5\nleaf_half_height = 1.5\n\
                [generator]\nrank = 2\namplitude = 0.6\nwidth = 0.9\nsupport = [-0.1, 0.1, -0.1, 0.1]\nunitary = true\n[sweep]\nframes = 16\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let sweep = leaf_sweep(&cfg).unwrap();
    let neg = max(sweep.rows.iter().map(|r| r.negation));
    let rot = max(sweep.rows.iter().filter_map(|r| r.rotation));
    let conj = max(sweep.rows.iter().filter_map(|r| r.conjugation));
    let complete = sweep.rows.len() == 16 && sweep.rows.iter().all(|r| r.error.is_none() && r.conjugation.is_some());
    let pass = complete && sweep.pass() && neg.max(rot).max(conj) <= 1e-5;
    line(
        5,
        pass,
        "frame symmetries",
        &format!("16 frames (8 planar): negation {neg:.2e}, rotation {rot:.2e}, conjugation {conj:.2e} (all <= 1e-5)"),
    );
    assert!(pass, "{}", sweep.to_csv());
}

struct CounterexampleRun {
    a: Connection,
    zero: Connection,
    gauge: Option<GaugeTransform>,
    diag_gap: f64,
    equal: bool,
    witness: bool,
    deviation: f64,
}

fn counterexample_runs() -> &'static Vec<CounterexampleRun> {
    static RUNS: OnceLock<Vec<CounterexampleRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let g = grid();
        let w = leaf_window(&g);
        let spec = GeneratorSpec { amplitude: 0.6, width: 0.5, support: [-0.1, 0.1, -0.1, 0.1], ..GeneratorSpec::default() };
        let opts = SolverOptions::default();
        let heights: Vec<f64> = (0..9).map(|k| -1.2 + 0.3 * k as f64).collect();
        (0..4)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
                let a0 = random_connection(&mut rng, g, w, &spec).unwrap();
                let ce = counterexample_generate(&a0, c(0.0, 0.0), 1.4, &opts).unwrap();
                let zero = Connection::zero(g, w, 2, Frame::Leaf);
                let eq = equal_transport_check(&ce.a, &zero, w, &opts, 1e-5).unwrap();
                let d = &eq.diagnostics;
                let diag_gap = d.residual.max(d.exterior_identity).max(d.exterior_holomorphy).max(d.plemelj_mismatch);
                let deviation = max(line_transport_deviation(&ce.a, &heights, -1.9, 1.9, 400));
                CounterexampleRun { witness: ce.curvature_witness(), a: ce.a, zero, gauge: eq.gauge, diag_gap, equal: eq.equal, deviation }
            })
            .collect()
    })
}

#[test]
fn criterion_06_counterexample() {
    let runs = counterexample_runs();
    let diag = max(runs.iter().map(|r| r.diag_gap));
    let dev = runs.iter().map(|r| r.deviation).fold(f64::INFINITY, f64::min);
    let pass = runs.iter().all(|r| r.equal && r.witness && r.deviation > 1e-3) && diag <= 1e-5;
    line(
        6,
        pass,
        "curved connection with trivial complex transport",
        &format!(
            "4 seeds: transport diagnostics {diag:.2e} (<= 1e-5), curvature witness {}/4, smallest max line deviation {dev:.2e} (> 1e-3)",
            runs.iter().filter(|r| r.witness).count()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_determinant_consistency() {
    let opts = SolverOptions::default();
    let mut gaps = Vec::new();
    let mut min_det = f64::INFINITY;
    for r in glue_runs() {
        let d = det_consistency(&r.a1, &r.a2, &r.gauge, &opts, 1e-5).unwrap();
        gaps.push(d.gap);
        min_det = min_det.min(d.min_det);
    }
    let mut missing = 0;
    for r in counterexample_runs() {
        match &r.gauge {
            Some(g) => {
                let d = det_consistency(&r.a, &r.zero, g, &opts, 1e-5).unwrap();
                gaps.push(d.gap);
                min_det = min_det.min(d.min_det);
            }
            None => missing += 1,
        }
    }
    let worst = max(gaps.iter().cloned());
    let pass = missing == 0 && worst <= 1e-5 && min_det > 0.0;
    line(
        7,
        pass,
        "determinant consistency",
        &format!("{} glue outputs: max |det G - d| {worst:.2e} (<= 1e-5), min |det G| {min_det:.3}", gaps.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_08_xi_family() {
    let surface = SimpleSurface::disk(1.0, ConformalFactor::Flat).unwrap();
    let (y, x, v) = ([0.0, 0.0], [0.1, -0.2], [0.6, 0.8]);
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut null_worst: f64 = 0.0;
    let mut radius_worst: f64 = 0.0;
    for _ in 0..100 {
        let t = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        for plus in [true, false] {
            let xi = xi_family(surface, y, x, v, t, plus).unwrap();
            null_worst = null_worst.max(xi.bilinear_square().norm());
            radius_worst = radius_worst.max((xi.mu_norm() - xi_normaliser(t)).abs());
        }
    }

    let spec = GeneratorSpec { amplitude: 0.6, support: [-0.1, 0.1, -0.1, 0.1], ..GeneratorSpec::default() };
    let model = random_flat_model(&mut ChaCha8Rng::seed_from_u64(801), &surface, &spec);
    let g = grid();
    let opts = SolverOptions::default();
    let base = model.g0.eval(&[y[0], y[1], x[0], x[1]]);
    let mut spread: f64 = 0.0;
    let mut first: Option<CMat> = None;
    for t in [c(0.7, 0.4), c(-1.3, 0.9), c(0.2, -1.6)] {
        for plus in [true, false] {
            let frame: ComplexFrame = xi_family(surface, y, x, v, t, plus).unwrap();
            let at = model.glue(&frame, &g, 1.5, &opts, 1e-4).unwrap().at_base();
            spread = spread.max(fro(&(&at - &base)));
            if let Some(f) = &first {
                spread = spread.max(fro(&(&at - f)));
            } else {
                first = Some(at);
            }
        }
    }
    let pass = null_worst <= 1e-12 && radius_worst <= 1e-12 && spread <= 1e-5;
    line(
        8,
        pass,
        "xi family",
        &format!(
            "100 t: max |xi|^2 {null_worst:.1e} (<= 1e-12), max ||mu| - r(t)| {radius_worst:.2e} (<= 1e-12); glue over 6 xi frames spread {spread:.2e} (<= 1e-5)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_attenuated_xray() {
    let surface = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 }).unwrap();
    let defect = exact_derivative_defect(&surface, [0.1, -0.2], 0.5, 6, 5, 1600).unwrap();
    let setup = RaySetup::new(grid(), 2.0);
    let leaves = ProbeConfig::new(0, 1, 0).leaves;
    let norms: Vec<f64> =
        (0..8).map(|seed| attenuated_smoke_test(&setup, &surface, 900 + seed, 1e-5, &[-0.2, -0.1, 0.0, 0.1, 0.2], &leaves).unwrap().max_norm).collect();
    let worst = max(norms.iter().cloned());
    let pass = defect <= 1e-8 && worst <= 1e-4;
    line(
        9,
        pass,
        "attenuated X-ray reduction",
        &format!("exact derivatives at xi1 = 0: {defect:.2e} (<= 1e-8); 8 sources with traces 1e-5: max |f^(xi1)| {worst:.2e} (<= 1e-4)"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_degree_bound() {
    let probes = kernel_probes();
    let fractions: Vec<f64> = probes.iter().map(|r| max(r.trials.iter().map(|t| t.high_mode_fraction.unwrap_or(f64::INFINITY)))).collect();
    let pass = fractions.iter().all(|f| *f <= 1e-5);
    line(
        10,
        pass,
        "Fourier degree bound",
        &format!("energy fraction in modes >= m: m=1 {:.2e}, m=2 {:.2e} (<= 1e-5)", fractions[0], fractions[1]),
    );
    assert!(pass);
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_11_determinism() {
    let configs = [
        "kind = \"stokes\"\nseed = 5\n[grid]\nh = 0.0625\n[generator]\ncount = 2\n",
        "kind = \"glue\"\nseed = 6\n[grid]\nh = 0.0625\n[generator]\ncount = 2\n[tolerances]\nglue = 1e-2\n",
        "kind = \"holonomy-counterexample\"\nseed = 7\n[grid]\nh = 0.0625\n[generator]\namplitude = 0.6\nwidth = 0.5\nsupport = [-0.1, 0.1, -0.1, 0.1]\ncount = 1\n",
        "kind = \"kernel-probe\"\nseed = 8\n[grid]\nh = 0.0625\n[generator]\ndegree = 1\ncount = 1\n",
        "kind = \"attenuated-xray\"\nseed = 9\n[grid]\nh = 0.0625\n[generator]\nwidth = 0.5\nsupport = [0.1, 0.1, -0.2, -0.2]\ncount = 1\n",
        "kind = \"symmetry\"\nseed = 10\n[surface]\nshape = \"interval\"\nsize = 2.0\n[grid]\nh = 0.0625\nleaf_half_width = 1.5\nleaf_half_height = 1.5\n\
         [generator]\namplitude = 0.6\nsupport = [-0.1, 0.1, -0.1, 0.1]\n[sweep]\nframes = 4\n",
    ];
    let mut identical = 0;
    for text in configs {
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let runs: Vec<_> = [1, 3]
            .iter()
            .map(|&threads| {
                let dir = tempfile::tempdir().unwrap();
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                pool.install(|| {
                    run_experiment(&cfg).unwrap().write(dir.path()).unwrap();
                    if cfg.kind == leafray::experiment::ExperimentKind::Symmetry {
                        let sweep_dir = dir.path().join("sweep");
                        leaf_sweep(&cfg).unwrap().write(&cfg, &sweep_dir).unwrap();
                    }
                });
                files_of(dir.path())
            })
            .collect();
        if runs[0] == runs[1] && !runs[0].is_empty() {
            identical += 1;
        }
    }
    let pass = identical == configs.len();
    line(11, pass, "determinism", &format!("{identical}/{} seeded experiments rerun byte-identically (1 vs 3 threads)", configs.len()));
    assert!(pass);
}
