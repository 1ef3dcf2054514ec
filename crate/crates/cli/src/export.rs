//! Rendering of results to CSV or JSON and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use qbtransfer::metrics::TransferMetrics;
use qbtransfer::spectrum::SpectrumResult;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::error::{CliError, CliResult};
use crate::run::{EvolveSeries, Failure, Results, RunReport};

pub const TOOL: &str = "qbtransfer";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything that determines the content of the data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub failures: Vec<Failure>,
}

impl DataManifest {
    pub fn new(cfg: &ExperimentConfig, failures: &[Failure]) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            config: cfg.deterministic(),
            failures: failures.to_vec(),
        }
    }
}

/// Written next to the data as `<stem>_manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Resolved configuration as run, including flag overrides.
    pub config: ExperimentConfig,
    pub workers: usize,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub failures: Vec<Failure>,
}

/// Single JSON output document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonDocument {
    pub manifest: DataManifest,
    pub results: Results,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn spectrum_csv(s: &SpectrumResult, stem: &str) -> CliResult<Vec<OutputFile>> {
    let k = s.levels.first().map_or(0, Vec::len);
    if s.g_grid.is_empty() || k == 0 {
        return Err(CliError::Empty("spectrum has no levels".into()));
    }
    let mut header = vec!["g".to_string()];
    header.extend((1..=k).map(|i| format!("E_{i}")));
    let rows: Vec<Vec<String>> = s
        .g_grid
        .iter()
        .zip(&s.levels)
        .map(|(g, lv)| {
            std::iter::once(num(*g))
                .chain(lv.iter().map(|e| num(*e)))
                .collect()
        })
        .collect();
    let cross_header = strings(&[
        "rank", "g_star", "energy", "min_gap", "weight", "level_a", "level_b", "track_a", "track_b",
    ]);
    let cross_rows: Vec<Vec<String>> = s
        .crossings
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                (i + 1).to_string(),
                num(c.g_star),
                num(c.energy),
                num(c.min_gap),
                num(c.weight),
                (c.ranks.0 + 1).to_string(),
                (c.ranks.1 + 1).to_string(),
                c.track_pair.0.to_string(),
                c.track_pair.1.to_string(),
            ]
        })
        .collect();
    Ok(vec![
        OutputFile {
            name: format!("{stem}.csv"),
            contents: table(&header, &rows),
        },
        OutputFile {
            name: format!("{stem}_crossings.csv"),
            contents: table(&cross_header, &cross_rows),
        },
    ])
}

fn evolve_csv(e: &EvolveSeries, stem: &str) -> CliResult<Vec<OutputFile>> {
    if e.times.is_empty() || e.couplings.is_empty() {
        return Err(CliError::Empty("no evolution series".into()));
    }
    let mut header = vec!["t".to_string()];
    if e.couplings.len() == 1 {
        header.push("E_B".into());
    } else {
        header.extend(e.couplings.iter().map(|g| format!("E_B(g={g})")));
    }
    let rows: Vec<Vec<String>> = e
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            std::iter::once(num(*t))
                .chain(e.battery_energy.iter().map(|s| num(s[i])))
                .collect()
        })
        .collect();
    Ok(vec![OutputFile {
        name: format!("{stem}.csv"),
        contents: table(&header, &rows),
    }])
}

/// Columns g, e_max, t_max, p_max, dissipative.
pub fn metrics_table(points: &[TransferMetrics]) -> CliResult<String> {
    if points.is_empty() {
        return Err(CliError::Empty("sweep has no successful points".into()));
    }
    let header = strings(&["g", "e_max", "t_max", "p_max", "dissipative"]);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|m| {
            vec![
                num(m.g),
                num(m.e_max),
                num(m.t_max),
                num(m.p_max),
                m.dissipative.to_string(),
            ]
        })
        .collect();
    Ok(table(&header, &rows))
}

/// Files for `results` in the requested format, in a fixed order.
pub fn render(
    report: &RunReport,
    manifest: &DataManifest,
    format: Format,
    stem: &str,
) -> CliResult<Vec<OutputFile>> {
    match format {
        Format::Json => {
            // same emptiness rules as CSV
            render(report, manifest, Format::Csv, stem)?;
            let doc = JsonDocument {
                manifest: manifest.clone(),
                results: report.results.clone(),
            };
            let mut contents = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
            contents.push('\n');
            Ok(vec![OutputFile {
                name: format!("{stem}.json"),
                contents,
            }])
        }
        Format::Csv => match &report.results {
            Results::Spectrum(s) => spectrum_csv(s, stem),
            Results::Evolve(e) => evolve_csv(e, stem),
            Results::Sweep { points } => Ok(vec![OutputFile {
                name: format!("{stem}.csv"),
                contents: metrics_table(points)?,
            }]),
            Results::Jump { points, jump } => {
                let mut files = vec![OutputFile {
                    name: format!("{stem}.csv"),
                    contents: metrics_table(points)?,
                }];
                if let Some(j) = jump {
                    let header = strings(&[
                        "g_jump",
                        "bracket_lo",
                        "bracket_hi",
                        "p_below",
                        "p_above",
                        "refinements",
                    ]);
                    let row = vec![
                        num(j.g_jump),
                        num(j.bracket.0),
                        num(j.bracket.1),
                        num(j.p_below),
                        num(j.p_above),
                        j.refinements.to_string(),
                    ];
                    files.push(OutputFile {
                        name: format!("{stem}_jump.csv"),
                        contents: table(&header, &[row]),
                    });
                }
                Ok(files)
            }
        },
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

/// Writes the data files followed by the run manifest. Returns all paths.
pub fn write_outputs(
    report: &RunReport,
    cfg: &ExperimentConfig,
    workers: usize,
    wall_time_s: f64,
) -> CliResult<Vec<PathBuf>> {
    let stem = cfg.stem();
    let data = DataManifest::new(cfg, &report.failures);
    let files = render(report, &data, cfg.output.format, &stem)?;
    let dir = &cfg.output.dir;
    let mut paths = Vec::new();
    for f in &files {
        paths.push(write_atomic(dir, &f.name, &f.contents)?);
    }
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config: cfg.clone(),
        workers,
        wall_time_s,
        files: files.iter().map(|f| f.name.clone()).collect(),
        failures: report.failures.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    text.push('\n');
    paths.push(write_atomic(dir, &format!("{stem}_manifest.json"), &text)?);
    Ok(paths)
}
