use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ldlab::grid::{read_raster, write_raster};
use ldlab::GridSet;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{digest, write_manifest, GridInfo, KernelInfo, RunManifest};
use crate::{commands, resolve, Common, Verb};

/// State of one invocation: resolved config, files read and written,
/// results for the manifest, and failed contracts.
pub struct Run {
    pub cfg: Config,
    out: PathBuf,
    stem: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    results: Map<String, Value>,
    violations: Vec<String>,
    grid: Option<(f64, [f64; 3], [usize; 3])>,
}

impl Run {
    pub fn path(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}{suffix}", self.stem))
    }

    pub fn read_raster(&mut self, path: &Path) -> Result<GridSet, CliError> {
        let f = fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
        let s = read_raster(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.inputs.push(path.to_path_buf());
        self.note_grid(&s);
        Ok(s)
    }

    pub fn note_grid(&mut self, s: &GridSet) {
        if self.grid.is_none() {
            self.grid = Some((s.h(), s.origin(), s.shape()));
        }
    }

    pub fn write_raster(&mut self, suffix: &str, s: &GridSet) -> Result<PathBuf, CliError> {
        let p = self.path(suffix);
        let mut w = BufWriter::new(fs::File::create(&p)?);
        write_raster(s, &mut w)?;
        w.flush()?;
        self.note_grid(s);
        self.outputs.push(p.clone());
        Ok(p)
    }

    pub fn write_csv<T: Serialize>(&mut self, suffix: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let p = self.path(suffix);
        let mut w = csv::Writer::from_path(&p)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.outputs.push(p.clone());
        Ok(p)
    }

    pub fn write_text(&mut self, suffix: &str, text: &str) -> Result<PathBuf, CliError> {
        let p = self.path(suffix);
        fs::write(&p, text)?;
        self.outputs.push(p.clone());
        Ok(p)
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> Result<(), CliError> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Records a contract; a false `ok` makes the run exit 1 after all
    /// outputs and the manifest are written.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.violations.push(what.into());
        }
    }
}

pub fn execute(common: &Common, verb: &Verb, argv: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = resolve(common, verb)?;
    let stem = common.name.clone().unwrap_or_else(|| verb.stem());
    if stem.is_empty() || stem.contains(['/', '\\']) {
        return Err(CliError::Usage(format!("invalid output name `{stem}`")));
    }
    let manifest_path = common.out.join(format!("{stem}.manifest.json"));
    if manifest_path.exists() {
        if !common.force {
            return Err(CliError::Usage(format!(
                "{} exists; manifests are not overwritten (pass --force or another --name)",
                manifest_path.display()
            )));
        }
        fs::remove_file(&manifest_path)?;
    }
    fs::create_dir_all(&common.out)?;
    let mut run = Run {
        cfg,
        out: common.out.clone(),
        stem,
        inputs: Vec::new(),
        outputs: Vec::new(),
        results: Map::new(),
        violations: Vec::new(),
        grid: None,
    };
    commands::dispatch(&mut run, verb)?;

    let (h, origin, shape) = match run.grid {
        Some((h, o, s)) => (h, Some(o), Some(s)),
        None => (run.cfg.grid.h, None, None),
    };
    let seed = match verb {
        Verb::Minimize { .. } => run.cfg.anneal.seed,
        _ => run.cfg.sweep.seed,
    };
    let manifest = RunManifest {
        tool: "ldlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: argv.to_vec(),
        verb: verb.name().into(),
        kernel: KernelInfo {
            n: run.cfg.kernel.n,
            alpha: run.cfg.kernel.alpha,
        },
        grid: GridInfo { h, origin, shape },
        seed,
        inputs: run.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
        outputs: run.outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
        results: Value::Object(std::mem::take(&mut run.results)),
        status: if run.violations.is_empty() { "ok" } else { "violation" }.into(),
        violations: run.violations.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: run.cfg.clone(),
    };
    write_manifest(&manifest_path, &manifest)?;
    if run.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(run.violations))
    }
}
