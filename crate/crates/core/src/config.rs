//! Run configuration: one TOML file per run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::modulus::ModulusConfig;
use crate::geometry::{CornerDomainMap, CornerSpec};
use crate::kernels::exponent_bookkeeping;
use crate::lemmas::LemmaOptions;
use crate::pipeline::ProbeSpec;
use crate::quadrature::GridParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    JumpCheck,
    LemmaCheck,
    AlgebraSelftest,
    DeltaSweep,
    FieldExport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::JumpCheck => "jump-check",
            Command::LemmaCheck => "lemma-check",
            Command::AlgebraSelftest => "algebra-selftest",
            Command::DeltaSweep => "delta-sweep",
            Command::FieldExport => "field-export",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// `identity`, `cusp`, `polynomial` or `corner-family`.
    pub name: String,
    /// Polynomial coefficients, or the corner-family scale, as `[re, im]`.
    #[serde(default)]
    pub params: Vec<[f64; 2]>,
    #[serde(default)]
    pub corners: Vec<CornerSpec>,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { name: "identity".into(), params: Vec::new(), corners: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// Traces of `ζⁿ`, which is then the exact solution.
    Manufactured { degree: u32 },
    /// Delimited `theta, u1, u3` samples on the unit circle. Relative paths
    /// resolve against the config file's directory.
    Samples { path: PathBuf },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Manufactured { degree: 2 }
    }
}

/// Artifact file names inside the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report: String,
    pub field: String,
    pub table: String,
    pub summary: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: "report.json".into(),
            field: "field.csv".into(),
            table: "table.csv".into(),
            summary: "summary.txt".into(),
        }
    }
}

/// Thresholds beyond which a run exits with the numerical-failure status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Off-grid collocation residual of the linear system.
    pub residual_offgrid: f64,
    /// Deviation of the boundary-limit formulas from the data between nodes.
    pub boundary_residual: f64,
    /// Jump-check deviation between extrapolated limits and boundary values.
    pub jump: f64,
    /// Treat a numerically singular system as a failure even when the
    /// minimum-norm solution meets the residual limits.
    pub fail_on_singular: bool,
    /// Treat unstable lemma rows as a failure.
    pub fail_on_unstable: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual_offgrid: 1e-6,
            boundary_residual: 1e-4,
            jump: 1e-6,
            fail_on_singular: false,
            fail_on_unstable: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpConfig {
    pub angles: Vec<f64>,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig { angles: crate::pipeline::default_jump_angles() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub deltas: Vec<f64>,
    pub probe_angles: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { deltas: vec![0.2, 0.1, 0.05, 0.025], probe_angles: vec![0.5, PI / 2.0, 2.0, PI - 0.3, PI + 0.3, 4.5] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub samples: usize,
    pub integral_samples: usize,
    pub seed: u64,
    pub modulus: ModulusConfig,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        let d = LemmaOptions::default();
        LemmaConfig { samples: d.samples, integral_samples: d.integral_samples, seed: d.seed, modulus: d.modulus }
    }
}

impl LemmaConfig {
    pub fn options(&self) -> LemmaOptions {
        LemmaOptions {
            samples: self.samples,
            integral_samples: self.integral_samples,
            seed: self.seed,
            modulus: self.modulus.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub jump: JumpConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub lemma: LemmaConfig,
    /// Directory the config was read from; sample paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            map: MapConfig::default(),
            grid: GridParams::default(),
            data: DataConfig::default(),
            probes: ProbeSpec::default(),
            output: OutputConfig::default(),
            tolerances: Tolerances::default(),
            jump: JumpConfig::default(),
            sweep: SweepConfig::default(),
            lemma: LemmaConfig::default(),
            base_dir: None,
        }
    }

    /// Parses and validates. Syntax errors carry the line and column from the
    /// TOML parser; validation errors name the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.map.corners.iter().enumerate() {
            c.validate().map_err(|e| prefix(&format!("map.corners[{i}]"), e))?;
        }
        if !self.map.corners.is_empty() {
            exponent_bookkeeping(&self.map.corners).map_err(|e| prefix("map.corners", e))?;
        }
        let g = &self.grid;
        if g.n < 8 {
            return Err(Error::Config(format!("grid.n = {} must be at least 8", g.n)));
        }
        if !(g.q >= 1.0 && g.q.is_finite()) {
            return Err(Error::Config(format!("grid.q = {} must be at least 1", g.q)));
        }
        if !(g.delta >= 0.0 && g.delta < 0.5) {
            return Err(Error::Config(format!("grid.delta = {} must lie in [0, 0.5)", g.delta)));
        }
        if self.probes.radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::Config("probes.radii must lie in (0, 1)".into()));
        }
        if self.probes.angles == 0 {
            return Err(Error::Config("probes.angles must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("residual_offgrid", t.residual_offgrid),
            ("boundary_residual", t.boundary_residual),
            ("jump", t.jump),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("tolerances.{name} = {v} must be positive")));
            }
        }
        if let DataConfig::Manufactured { degree } = self.data {
            if degree > 12 {
                return Err(Error::Config(format!("data.degree = {degree} exceeds 12")));
            }
        }
        if self.command == Command::DeltaSweep {
            let d = &self.sweep.deltas;
            if d.is_empty() || d.iter().any(|x| !(*x > 0.0 && *x < 0.5)) || d.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config("sweep.deltas must be strictly decreasing values in (0, 0.5)".into()));
            }
        }
        if self.command == Command::LemmaCheck && (self.lemma.samples < 100 || self.lemma.integral_samples < 2) {
            return Err(Error::Config("lemma.samples must be at least 100 and lemma.integral_samples at least 2".into()));
        }
        if self.command == Command::LemmaCheck {
            self.lemma.modulus.validate().map_err(|e| prefix("lemma.modulus", e))?;
        }
        Ok(())
    }

    /// Builds the map named in the config.
    pub fn build_map(&self) -> Result<CornerDomainMap> {
        CornerDomainMap::from_catalog(&self.map.name, &self.map.params, &self.map.corners)
            .map_err(|e| prefix("map", e))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{field}: {m}")),
        Error::ExponentOutOfRange(m) => Error::ExponentOutOfRange(format!("{field}: {m}")),
        Error::MapViolation(m) => Error::MapViolation(format!("{field}: {m}")),
        other => other,
    }
}
