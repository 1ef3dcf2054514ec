//! Experiment description read from JSON.
//!
//! Every table rejects unknown keys. Omitted fields take the defaults below;
//! [`ExperimentConfig::resolve`] fills the truncation from the cavity state
//! and checks physical validity.

use std::path::{Path, PathBuf};

use qbtransfer::metrics::default_window;
use qbtransfer::model::{BathParams, QubitConvention, SystemParams};
use qbtransfer::spectrum::uniform_grid;
use qbtransfer::states::CavitySpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spectrum,
    Evolve,
    Sweep,
    Jump,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Evolve => "evolve",
            Mode::Sweep => "sweep",
            Mode::Jump => "jump",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "omega_C", default = "one")]
    pub omega_c: f64,
    #[serde(rename = "omega_B", default = "one")]
    pub omega_b: f64,
    #[serde(rename = "omega_M", default = "one")]
    pub omega_m: f64,
    /// Coupling for `evolve`; sweeps take theirs from the grid.
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    /// 10·N or 10·⌈N̄⌉ when omitted.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub convention: QubitConvention,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            omega_b: 1.0,
            omega_m: 1.0,
            g: None,
            tau: None,
            n_max: None,
            convention: QubitConvention::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub beta: f64,
    pub omega_cut: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        let b = BathParams::default();
        Self {
            alpha_1: b.alpha_1,
            alpha_2: b.alpha_2,
            beta: b.beta,
            omega_cut: b.omega_cut,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CavityConfig {
    Fock { n: usize },
    Coherent { n_bar: f64 },
}

impl From<CavityConfig> for CavitySpec {
    fn from(c: CavityConfig) -> Self {
        match c {
            CavityConfig::Fock { n } => CavitySpec::Fock { n },
            CavityConfig::Coherent { n_bar } => CavitySpec::Coherent { n_bar },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
    /// Explicit couplings; replaces the uniform grid when present.
    pub g_values: Option<Vec<f64>>,
    /// End of the sampled time axis for `evolve`.
    pub t_end: Option<f64>,
    pub dt: f64,
    /// Search window for sweeps; coupling-dependent default when omitted.
    pub window: Option<f64>,
    /// Eigenvalues reported per grid point.
    pub levels: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            g_min: 0.0,
            g_max: 0.5,
            g_points: 201,
            g_values: None,
            t_end: None,
            dt: 0.01,
            window: None,
            levels: 12,
        }
    }
}

impl GridConfig {
    pub fn couplings(&self) -> Vec<f64> {
        match &self.g_values {
            Some(v) => v.clone(),
            None => uniform_grid(self.g_min, self.g_max, self.g_points),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// File stem of the outputs, e.g. "fig2"; the mode name when omitted.
    #[serde(default)]
    pub figure: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::default(),
            figure: None,
        }
    }
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_default")]
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub bath: BathConfig,
    pub cavity: CavityConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads; all available cores when omitted.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
}

/// Name inside backticks after `marker` in a serde message.
fn quoted_after<'a>(msg: &'a str, marker: &str) -> Option<&'a str> {
    let start = msg.find(marker)? + marker.len();
    let rest = &msg[start..];
    Some(&rest[..rest.find('`')?])
}

/// Parses without resolving defaults that depend on other fields.
pub fn parse_str(text: &str) -> CliResult<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        if let Some(key) = quoted_after(&message, "unknown field `") {
            return CliError::Validation {
                field: Some(key.to_string()),
                message: format!(
                    "unknown key `{key}` at line {}, column {}",
                    e.line(),
                    e.column()
                ),
            };
        }
        CliError::Parse {
            line: e.line(),
            column: e.column(),
            field: quoted_after(&message, "missing field `").map(str::to_string),
            message,
        }
    })
}

/// Reads and parses a configuration file without resolving it.
pub fn read_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

/// Reads, parses and resolves a configuration file.
pub fn parse_config(path: &Path) -> CliResult<ExperimentConfig> {
    read_config(path)?.resolve()
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::validation(field, format!("must be > 0, got {v}")))
    }
}

fn engine_check(field: &str, r: qbtransfer::Result<()>) -> CliResult<()> {
    r.map_err(|e| CliError::validation(field, e.to_string()))
}

impl ExperimentConfig {
    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        self
    }

    /// Fills the truncation and checks every field.
    pub fn resolve(mut self) -> CliResult<Self> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let spec = self.cavity_spec();
        if let CavityConfig::Coherent { n_bar } = self.cavity {
            if !(n_bar.is_finite() && n_bar >= 0.0) {
                return Err(CliError::validation(
                    "cavity.n_bar",
                    format!("must be >= 0, got {n_bar}"),
                ));
            }
        }
        let n_max = *self.system.n_max.get_or_insert(spec.default_n_max());
        engine_check("cavity", spec.amplitudes(n_max).map(|_| ()))?;

        let s = &self.system;
        if let Some(g) = s.g {
            engine_check("system.g", self.system_params(g).validate())?;
        } else {
            engine_check("system", self.system_params(0.0).validate())?;
        }
        engine_check("bath", self.bath_params().validate())?;

        let grid = &self.grid;
        positive("grid.dt", grid.dt)?;
        if let Some(t) = grid.t_end {
            positive("grid.t_end", t)?;
        }
        if let Some(w) = grid.window {
            positive("grid.window", w)?;
        }
        if grid.levels == 0 {
            return Err(CliError::validation("grid.levels", "must be >= 1"));
        }
        if self.mode != Mode::Evolve {
            let g = grid.couplings();
            if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(CliError::validation(
                    "grid",
                    format!("coupling {bad} must be >= 0"),
                ));
            }
            let min_points = if self.mode == Mode::Jump { 10 } else { 3 };
            if g.len() < min_points {
                return Err(CliError::validation(
                    "grid",
                    format!(
                        "mode {} needs at least {min_points} couplings",
                        self.mode.name()
                    ),
                ));
            }
            if !g.windows(2).all(|w| w[1] > w[0]) {
                return Err(CliError::validation(
                    "grid",
                    "couplings must be strictly ascending",
                ));
            }
        } else if s.g.is_none() && grid.g_values.is_none() {
            return Err(CliError::validation(
                "system.g",
                "mode evolve needs system.g or grid.g_values",
            ));
        }
        if let Some(name) = &self.output.figure {
            let ok = !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(CliError::validation(
                    "output.figure",
                    "use letters, digits, '_' and '-' only",
                ));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::validation("workers", "must be >= 1"));
        }
        Ok(self)
    }

    pub fn cavity_spec(&self) -> CavitySpec {
        self.cavity.into()
    }

    /// System parameters at coupling `g`. Call after [`Self::resolve`].
    pub fn system_params(&self, g: f64) -> SystemParams {
        let s = &self.system;
        SystemParams {
            omega_c: s.omega_c,
            omega_b: s.omega_b,
            omega_m: s.omega_m,
            g,
            tau: s.tau,
            n_max: s
                .n_max
                .unwrap_or_else(|| self.cavity_spec().default_n_max()),
            convention: s.convention,
        }
    }

    pub fn bath_params(&self) -> BathParams {
        BathParams {
            alpha_1: self.bath.alpha_1,
            alpha_2: self.bath.alpha_2,
            beta: self.bath.beta,
            omega_cut: self.bath.omega_cut,
        }
    }

    /// Couplings of an `evolve` run.
    pub fn evolve_couplings(&self) -> Vec<f64> {
        match (&self.grid.g_values, self.system.g) {
            (Some(v), _) => v.clone(),
            (None, Some(g)) => vec![g],
            (None, None) => Vec::new(),
        }
    }

    /// End of the time axis of an `evolve` run at coupling `g`.
    pub fn t_end(&self, g: f64) -> f64 {
        self.grid
            .t_end
            .or(self.grid.window)
            .unwrap_or_else(|| default_window(g))
    }

    pub fn stem(&self) -> String {
        self.output
            .figure
            .clone()
            .unwrap_or_else(|| self.mode.name().to_string())
    }

    /// The part that determines the numbers: output location and worker
    /// count cleared.
    pub fn deterministic(&self) -> Self {
        let mut c = self.clone();
        c.output.dir = default_dir();
        c.workers = None;
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
