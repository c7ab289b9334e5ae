//! `run`, `describe` and `list`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{sha256_hex, Config, Scenario};
use crate::error::{io_err, CliError, Result};
use crate::scenarios::{execute, Output};
pub use crate::scenarios::Status;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub filter: Option<String>,
    /// Inconclusive verdicts count as failures.
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub kind: String,
    /// `Pass`, `Fail`, `Inconclusive` or `Error`.
    pub status: String,
    pub summary: String,
    pub params: serde_json::Value,
    pub artifacts: Vec<ArtifactEntry>,
    pub wall_time_s: f64,
}

#[derive(Debug)]
pub struct RunSummary {
    pub entries: Vec<ScenarioEntry>,
    pub manifest: PathBuf,
    /// Scenario errors, in id order.
    pub errors: Vec<CliError>,
    pub strict: bool,
}

impl RunSummary {
    /// All scenarios passed (Inconclusive passes unless strict).
    pub fn success(&self) -> bool {
        self.errors.is_empty()
            && self.entries.iter().all(|e| e.status == "Pass" || (!self.strict && e.status == "Inconclusive"))
    }
}

fn select<'a>(cfg: &'a Config, filter: Option<&str>) -> Result<Vec<&'a Scenario>> {
    let pat = filter
        .map(|f| glob::Pattern::new(f).map_err(|e| CliError::Config(format!("--filter `{f}`: {e}"))))
        .transpose()?;
    Ok(cfg.scenarios.iter().filter(|s| pat.as_ref().is_none_or(|p| p.matches(&s.id))).collect())
}

fn write_artifacts(dir: &Path, id: &str, out: &Output) -> Result<Vec<ArtifactEntry>> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::new();
    for (name, bytes) in &out.artifacts {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        entries.push(ArtifactEntry { path: format!("{id}/{name}"), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    Ok(entries)
}

/// Executes the selected scenarios, writes `<out>/<id>/*` and `<out>/manifest.json`.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = Config::load(config_path)?;
    let chosen = select(&cfg, opts.filter.as_deref())?;
    std::fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("--jobs {}: {e}", opts.jobs)))?;
    let started = Instant::now();
    let results: Vec<(ScenarioEntry, Option<CliError>)> = pool.install(|| {
        chosen
            .par_iter()
            .map(|sc| {
                let t0 = Instant::now();
                let mut entry = ScenarioEntry {
                    id: sc.id.clone(),
                    kind: sc.kind.name().to_string(),
                    status: String::new(),
                    summary: String::new(),
                    params: sc.params.to_json(),
                    artifacts: Vec::new(),
                    wall_time_s: 0.0,
                };
                let err = match execute(sc, &cfg) {
                    Ok(out) => match write_artifacts(&opts.out.join(&sc.id), &sc.id, &out) {
                        Ok(a) => {
                            entry.status = format!("{:?}", out.status);
                            entry.summary = out.summary;
                            entry.artifacts = a;
                            None
                        }
                        Err(e) => Some(e),
                    },
                    Err(source) => Some(CliError::Scenario { id: sc.id.clone(), source }),
                };
                if let Some(e) = &err {
                    entry.status = "Error".into();
                    entry.summary = e.to_string();
                }
                entry.wall_time_s = t0.elapsed().as_secs_f64();
                (entry, err)
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (e, err) in results {
        entries.push(e);
        errors.extend(err);
    }
    let manifest = json!({
        "schema": 1,
        "tool": "rdlab",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_path.display().to_string(),
        "config_sha256": cfg.sha256,
        "filter": opts.filter,
        "strict": opts.strict,
        // no scenario draws random numbers
        "seeds": {},
        "scenarios": entries,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    let path = opts.out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(RunSummary { entries, manifest: path, errors, strict: opts.strict })
}

/// One line per scenario: id and kind.
pub fn list(config_path: &Path, filter: Option<&str>) -> Result<String> {
    let cfg = Config::load(config_path)?;
    let chosen = select(&cfg, filter)?;
    let width = chosen.iter().map(|s| s.id.len()).max().unwrap_or(2).max(2);
    let mut s = format!("{:<width$}  kind\n", "id");
    for sc in chosen {
        let _ = writeln!(s, "{:<width$}  {}", sc.id, sc.kind);
    }
    Ok(s)
}

/// Catalog, then every scenario with kind, resolved parameters and artifacts.
pub fn describe(config_path: &Path, filter: Option<&str>) -> Result<String> {
    let cfg = Config::load(config_path)?;
    let chosen = select(&cfg, filter)?;
    let mut s = String::new();
    let _ = writeln!(s, "config   {} (sha256 {})", config_path.display(), cfg.sha256);
    let _ = writeln!(s, "terms    {}", cfg.terms.keys().cloned().collect::<Vec<_>>().join(", "));
    let _ = writeln!(s, "operators {}", cfg.operators.keys().cloned().collect::<Vec<_>>().join(", "));
    let _ = writeln!(s, "scenarios {}", chosen.len());
    for sc in chosen {
        let _ = writeln!(s, "\n[{}] {}", sc.id, sc.kind);
        let defs = sc.kind.params();
        let width = defs.iter().map(|d| d.name.len()).max().unwrap_or(0);
        for (name, value) in sc.params.iter() {
            let doc = defs.iter().find(|d| d.name == name).map_or("", |d| d.doc);
            let _ = writeln!(s, "  {name:<width$} = {value:<12}  {doc}");
        }
        let _ = writeln!(s, "  artifacts: {}", sc.kind.artifacts().join(", "));
    }
    Ok(s)
}
