//! TOML experiment configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::surface::{ConformalFactor, SimpleSurface};
use crate::grid::ComplexGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    KernelProbe,
    Stokes,
    Glue,
    HolonomyCounterexample,
    Symmetry,
    AttenuatedXray,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::KernelProbe => "kernel-probe",
            Self::Stokes => "stokes",
            Self::Glue => "glue",
            Self::HolonomyCounterexample => "holonomy-counterexample",
            Self::Symmetry => "symmetry",
            Self::AttenuatedXray => "attenuated-xray",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Disk,
    Interval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSpec {
    pub shape: Shape,
    /// Disk radius or interval length.
    pub size: f64,
    /// Cap parameter of the conformal factor; zero is Euclidean.
    pub kappa: f64,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self { shape: Shape::Disk, size: 1.0, kappa: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub h: f64,
    /// Half-width `S` of the computational box `[−S, S]²`.
    pub half_width: f64,
    /// Half-width `T` of the `x₁` window of a leaf.
    pub leaf_half_width: f64,
    /// Half-height of leaf windows `[−T, T] × [−H, H]` for leaf-level
    /// experiments.
    pub leaf_half_height: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h: 1.0 / 128.0, half_width: 4.0, leaf_half_width: 2.0, leaf_half_height: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bump,
    Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    pub family: Family,
    pub rank: usize,
    pub amplitude: f64,
    pub width: f64,
    /// Box `[x0, x1, y0, y1]` from which bump centres are drawn.
    pub support: [f64; 4],
    /// Connection pairs, seeds or trials.
    pub count: usize,
    /// Tensor degree `m` of the kernel probe.
    pub degree: usize,
    /// Cutoff radius of the counterexample.
    pub rho: f64,
    /// Draw skew-Hermitian generators, so connections and gauges are unitary.
    pub unitary: bool,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { family: Family::Bump, rank: 2, amplitude: 0.8, width: 0.9, support: [-0.4, 0.4, -0.4, 0.4], count: 2, degree: 0, rho: 1.4, unitary: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Identity gaps (Stokes, symmetry, transport diagnostics, kernel traces).
    pub gap: f64,
    /// Sup error of a recovered gauge.
    pub glue: f64,
    /// Norm bound of reconstructed attenuated-X-ray sources.
    pub reconstruction: f64,
    /// Attenuated X-ray transform of exact derivatives at `ξ₁ = 0`.
    pub derivative: f64,
    pub min_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: 1e-5, glue: 1e-4, reconstruction: 1e-4, derivative: 1e-8, min_slope: 1.8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub frames: usize,
    /// Rotation angle of the rotation symmetry.
    pub theta: f64,
    /// Tilt of odd frames out of the `ℝ²` factor.
    pub tilt: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { frames: 16, theta: 0.7, tilt: 0.6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn bad(field: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format_args!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        positive("grid.h", self.grid.h)?;
        positive("grid.half_width", self.grid.half_width)?;
        positive("grid.leaf_half_width", self.grid.leaf_half_width)?;
        positive("grid.leaf_half_height", self.grid.leaf_half_height)?;
        ComplexGrid::new(self.grid.half_width, self.grid.h).map_err(|e| bad("grid.h", e))?;
        if self.grid.leaf_half_width >= self.grid.half_width || self.grid.leaf_half_height >= self.grid.half_width {
            return Err(bad("grid.leaf_half_width", "leaf window must lie inside the grid"));
        }
        positive("surface.size", self.surface.size)?;
        if !(0.0..=0.5).contains(&self.surface.kappa) {
            return Err(bad("surface.kappa", format_args!("must lie in [0, 0.5], got {}", self.surface.kappa)));
        }
        if self.surface.shape == Shape::Interval && self.surface.kappa != 0.0 {
            return Err(bad("surface.kappa", "an interval carries no conformal factor"));
        }
        for (name, v) in [
            ("tolerances.gap", self.tolerances.gap),
            ("tolerances.glue", self.tolerances.glue),
            ("tolerances.reconstruction", self.tolerances.reconstruction),
            ("tolerances.derivative", self.tolerances.derivative),
            ("tolerances.min_slope", self.tolerances.min_slope),
        ] {
            positive(name, v)?;
        }
        let g = &self.generator;
        if g.rank == 0 {
            return Err(bad("generator.rank", "must be at least 1"));
        }
        if !g.amplitude.is_finite() || g.amplitude < 0.0 {
            return Err(bad("generator.amplitude", format_args!("must be finite and non-negative, got {}", g.amplitude)));
        }
        positive("generator.width", g.width)?;
        positive("generator.rho", g.rho)?;
        if g.count == 0 {
            return Err(bad("generator.count", "must be at least 1"));
        }
        let [x0, x1, y0, y1] = g.support;
        if !(x0 <= x1 && y0 <= y1) {
            return Err(bad("generator.support", "expected [x0, x1, y0, y1] with x0 <= x1 and y0 <= y1"));
        }
        let (tw, th) = (self.grid.leaf_half_width, self.grid.leaf_half_height);
        if x0 - g.width <= -tw || x1 + g.width >= tw || y0 - g.width <= -th || y1 + g.width >= th {
            return Err(bad("generator.support", "bumps of this width leave the leaf window"));
        }
        if g.family == Family::Bump && self.seed.is_none() {
            return Err(bad("seed", "required by the bump generator"));
        }
        if self.kind == ExperimentKind::Symmetry {
            if self.sweep.frames == 0 {
                return Err(bad("sweep.frames", "must be at least 1"));
            }
            if self.surface.kappa != 0.0 {
                return Err(bad("surface.kappa", "symmetry frames need a flat transversal factor"));
            }
        }
        if self.kind == ExperimentKind::AttenuatedXray && self.surface.shape != Shape::Disk {
            return Err(bad("surface.shape", "the attenuated X-ray fan needs a disk"));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn surface(&self) -> Result<SimpleSurface> {
        match self.surface.shape {
            Shape::Disk => {
                let factor = if self.surface.kappa == 0.0 { ConformalFactor::Flat } else { ConformalFactor::Cap { kappa: self.surface.kappa } };
                SimpleSurface::disk(self.surface.size, factor)
            }
            Shape::Interval => SimpleSurface::interval(self.surface.size),
        }
    }

    pub fn complex_grid(&self) -> Result<ComplexGrid> {
        ComplexGrid::new(self.grid.half_width, self.grid.h)
    }

    /// Copy with spacing `h / 2^level`.
    pub fn refined(&self, level: u32) -> Self {
        let mut c = self.clone();
        c.grid.h = self.grid.h / f64::from(1u32 << level);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::from_toml("kind = \"stokes\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Stokes);
        assert_eq!(cfg.grid.h, 1.0 / 128.0);
        assert_eq!(cfg.refined(2).grid.h, 1.0 / 512.0);
    }

    #[test]
    fn negative_spacing_names_the_field() {
        let err = ExperimentConfig::from_toml("kind = \"glue\"\nseed = 1\n[grid]\nh = -0.1\n").unwrap_err();
        assert!(err.to_string().contains("grid.h"), "{err}");
    }

    #[test]
    fn missing_seed_and_unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("kind = \"glue\"\n").unwrap_err();
        assert!(err.to_string().contains("seed"));
        let err = ExperimentConfig::from_toml("kind = \"glue\"\nseed = 1\n[grid]\nspacing = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("spacing"), "{err}");
        assert!(ExperimentConfig::from_toml("kind = \"nonsense\"\n").is_err());
        let zero = ExperimentConfig::from_toml("kind = \"kernel-probe\"\n[generator]\nfamily = \"zero\"\n");
        assert!(zero.is_ok());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let err = ExperimentConfig::from_toml("kind = \"stokes\"\nseed = 1\n[tolerances]\ngap = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("tolerances.gap"));
    }
}
