//! Experiment configuration, single runs, frame sweeps and grid-convergence
//! studies, with their report files.
//!
//! A run is described by a TOML file (see [`ExperimentConfig`]). Every output
//! is a pure function of the configuration and seed: random inputs are drawn
//! from a seeded ChaCha stream before any parallel work starts, and parallel
//! results are collected in frame order.

pub mod config;
pub mod generators;
pub mod output;
pub mod runners;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{Artifacts, Report, Table};

use crate::error::{Error, Result};
use output::{format_float, write_json, write_text};

/// Process exit status of the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    NumericFail = 1,
    ConfigFail = 2,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass { Status::Pass } else { Status::NumericFail }
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::Config(_) => Status::ConfigFail,
            _ => Status::NumericFail,
        }
    }
}

/// Runs the configured experiment. Numerical failures become a failing
/// report carrying the error text; only configuration errors are returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let report = |pass, gap, tolerance, details, error| Report { kind: cfg.kind, seed: cfg.seed(), h: cfg.grid.h, pass, gap, tolerance, details, error };
    match runners::run_kind(cfg) {
        Ok(o) => Ok(Artifacts { report: report(o.pass, o.gap, o.tolerance, o.details, None), fields: o.fields, plots: o.plots }),
        Err(e @ Error::Config(_)) => Err(e),
        Err(e) => Ok(Artifacts { report: report(false, f64::NAN, f64::NAN, serde_json::Value::Null, Some(e.to_string())), fields: Vec::new(), plots: Vec::new() }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub frame: usize,
    pub mu: [f64; 2],
    pub nu_y: [f64; 2],
    pub nu_x: [f64; 2],
    pub negation: f64,
    pub rotation: Option<f64>,
    pub conjugation: Option<f64>,
    pub max_gap: f64,
    pub pass: bool,
    pub error: Option<String>,
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, format_float)
}

impl SweepRow {
    pub const HEADER: &'static str = "# frame,mu_0,mu_1,nu_y_0,nu_y_1,nu_x_0,nu_x_1,negation,rotation,conjugation,max_gap,pass,error";

    pub fn to_csv(&self) -> String {
        let nums = [self.mu[0], self.mu[1], self.nu_y[0], self.nu_y[1], self.nu_x[0], self.nu_x[1]].map(format_float).join(",");
        let err = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{},{nums},{},{},{},{},{},{err}",
            self.frame,
            format_float(self.negation),
            opt_cell(self.rotation),
            opt_cell(self.conjugation),
            format_float(self.max_gap),
            self.pass,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SweepRow::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
        write_text(&dir.join("sweep.csv"), &self.to_csv())?;
        let worst = self.rows.iter().map(|r| r.max_gap).fold(0.0, f64::max);
        let report = Report {
            kind: cfg.kind,
            seed: cfg.seed(),
            h: cfg.grid.h,
            pass: self.pass(),
            gap: worst,
            tolerance: cfg.tolerances.gap,
            details: json!({ "frames": self.rows.len(), "failed": self.rows.iter().filter(|r| !r.pass).count() }),
            error: None,
        };
        write_json(&dir.join("report.json"), &report)
    }
}

/// Symmetry checks over the configured frame plan, one row per frame, run
/// concurrently and reported in frame order.
pub fn leaf_sweep(cfg: &ExperimentConfig) -> Result<Sweep> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Symmetry {
        return Err(Error::Config(format!("kind: sweeps support symmetry experiments, not {}", cfg.kind)));
    }
    let setup = runners::symmetry_setup(cfg)?;
    let tol = cfg.tolerances.gap;
    let rows = setup
        .frames
        .par_iter()
        .enumerate()
        .map(|(k, frame)| {
            let base = SweepRow {
                frame: k,
                mu: frame.mu,
                nu_y: frame.nu_y,
                nu_x: frame.nu_x,
                negation: f64::NAN,
                rotation: None,
                conjugation: None,
                max_gap: f64::NAN,
                pass: false,
                error: None,
            };
            match runners::symmetry_frame(cfg, &setup, frame) {
                Ok(r) => SweepRow { negation: r.negation, rotation: r.rotation, conjugation: r.conjugation, max_gap: r.max_gap(), pass: r.max_gap() <= tol, ..base },
                Err(e) => SweepRow { error: Some(e.to_string()), ..base },
            }
        })
        .collect();
    Ok(Sweep { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub h: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Least-squares slope of `log gap` against `log h`; `None` when every
    /// gap is exactly zero.
    pub slope: Option<f64>,
    pub monotone: bool,
    pub min_slope: f64,
    pub errors: Vec<Option<String>>,
    pub pass: bool,
}

impl Convergence {
    pub fn slope_label(&self) -> String {
        self.slope.map_or_else(|| "exact".to_string(), format_float)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# h,gap\n");
        for (h, g) in self.h.iter().zip(&self.gaps) {
            out.push_str(&format!("{},{}\n", format_float(*h), format_float(*g)));
        }
        out.push_str(&format!("# slope,{}\n", self.slope_label()));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("convergence.csv"), &self.to_csv())?;
        write_json(&dir.join("report.json"), &json!({ "convergence": self, "slope": self.slope_label() }))
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Reruns the experiment at `h, h/2, …, h/2^{levels−1}` and fits the
/// observed order of the headline gap.
pub fn export_convergence(cfg: &ExperimentConfig, levels: u32) -> Result<Convergence> {
    cfg.validate()?;
    if levels < 2 {
        return Err(Error::Config("levels: at least two refinement levels are needed".into()));
    }
    if cfg.kind == ExperimentKind::AttenuatedXray {
        return Err(Error::Config("kind: attenuated-xray has no grid-dependent gap".into()));
    }
    let mut h = Vec::new();
    let mut gaps = Vec::new();
    let mut errors = Vec::new();
    for level in 0..levels {
        let fine = cfg.refined(level);
        let art = run_experiment(&fine)?;
        h.push(fine.grid.h);
        gaps.push(art.report.gap);
        errors.push(art.report.error);
    }
    let failed = errors.iter().any(Option::is_some) || gaps.iter().any(|g| !g.is_finite());
    let exact = !failed && gaps.iter().all(|g| *g == 0.0);
    let monotone = !failed && (exact || gaps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    let slope = match (exact, monotone) {
        (true, _) => None,
        (false, true) => Some(loglog_slope(&h, &gaps)),
        (false, false) => Some(f64::NAN),
    };
    let pass = exact || slope.is_some_and(|s| s >= cfg.tolerances.min_slope);
    Ok(Convergence { h, gaps, slope, monotone, min_slope: cfg.tolerances.min_slope, errors, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025];
        let g: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(4)).collect();
        assert!((loglog_slope(&h, &g) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_of_other_kinds_is_a_config_error() {
        let cfg = ExperimentConfig::from_toml("kind = \"stokes\"\nseed = 1\n").unwrap();
        assert!(matches!(leaf_sweep(&cfg), Err(Error::Config(_))));
        assert_eq!(Status::from_error(&leaf_sweep(&cfg).unwrap_err()), Status::ConfigFail);
    }

    #[test]
    fn zero_probe_converges_exactly() {
        let text = "kind = \"kernel-probe\"\n[grid]\nh = 0.25\n[generator]\nfamily = \"zero\"\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let conv = export_convergence(&cfg, 2).unwrap();
        assert!(conv.pass && conv.slope.is_none(), "{conv:?}");
        assert_eq!(conv.slope_label(), "exact");
    }
}
