//! Command-line front end. A job is a JSON config (file or inline) whose
//! top-level knobs can be overridden by flags.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric budget exceeded
//! (refinement cap or eigenvalue non-convergence), 1 anything else.

pub mod emit;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::operator::ShiftModel;
use crate::oracle::{self, Boundary, OracleParams};
use crate::radii::{RadiiEvaluator, MIN_K_MAX};
use crate::sequence::ComplexRepr;
use crate::series::{self, Prechecks};
use crate::spectrum::{self, ScanParams};

pub const DEFAULT_K_MAX: usize = 64;
pub const DEFAULT_SERIES_LEN: usize = 64;
pub const MAX_SERIES_LEN: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Radii,
    Membership,
    Scan,
    Boundary,
    Nshift,
    VerifyInverse,
    Oracle,
    Compare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Pgm => "pgm",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[x0, x1, y0, y1]`.
    #[serde(default, rename = "box")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default = "default_resolution")]
    pub nx: usize,
    #[serde(default = "default_resolution")]
    pub ny: usize,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

fn default_resolution() -> usize {
    64
}

fn default_depth() -> u32 {
    3
}

fn default_max_cells() -> usize {
    spectrum::DEFAULT_MAX_CELLS
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bbox: None,
            nx: default_resolution(),
            ny: default_resolution(),
            max_depth: default_depth(),
            max_cells: default_max_cells(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_oracle_n")]
    pub n: usize,
    #[serde(default = "default_oracle_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub offset: i64,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Also sample σ_min over the grid box (oracle command, JSON output).
    #[serde(default)]
    pub sigma_grid: bool,
}

fn default_oracle_n() -> usize {
    128
}

fn default_oracle_boundary() -> Boundary {
    Boundary::Circulant
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n: default_oracle_n(),
            boundary: default_oracle_boundary(),
            offset: 0,
            delta: None,
            sigma_grid: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File path for one format, file stem for several. When absent a single
    /// output goes to stdout and several use the command name as stem.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ShiftModel,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Defaults to `10 / k_max`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub lambda: Option<ComplexRepr>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_series_len")]
    pub series_len: usize,
    #[serde(default)]
    pub probes: Option<Vec<i64>>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

fn default_series_len() -> usize {
    DEFAULT_SERIES_LEN
}

impl JobConfig {
    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| spectrum::default_eps(self.k_max))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k_max < MIN_K_MAX {
            return Err(format!("k_max must be >= {MIN_K_MAX}, got {}", self.k_max));
        }
        let eps = self.eps();
        if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
            return Err(format!("eps must lie in [0, 1), got {eps}"));
        }
        let g = &self.grid;
        for (name, n) in [("grid.nx", g.nx), ("grid.ny", g.ny)] {
            if n == 0 || n > spectrum::MAX_RESOLUTION {
                return Err(format!(
                    "{name} must lie in [1, {}], got {n}",
                    spectrum::MAX_RESOLUTION
                ));
            }
        }
        if g.max_depth > spectrum::MAX_DEPTH {
            return Err(format!(
                "grid.max_depth must be <= {}, got {}",
                spectrum::MAX_DEPTH,
                g.max_depth
            ));
        }
        if let Some(b) = g.bbox {
            if !(b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3]) {
                return Err(format!("grid.box must satisfy x0 < x1 and y0 < y1, got {b:?}"));
            }
        }
        if self.series_len > MAX_SERIES_LEN {
            return Err(format!("series_len must be <= {MAX_SERIES_LEN}, got {}", self.series_len));
        }
        if self.oracle.n < 2 || self.oracle.n > oracle::MAX_DIMENSION {
            return Err(format!(
                "oracle.n must lie in [2, {}], got {}",
                oracle::MAX_DIMENSION,
                self.oracle.n
            ));
        }
        if self.threads == Some(0) {
            return Err("threads must be >= 1".into());
        }
        Ok(())
    }

    fn scan_params(&self) -> ScanParams {
        let g = &self.grid;
        let mut p = ScanParams::new(g.nx, g.ny, g.max_depth, self.k_max)
            .with_eps(self.eps())
            .with_max_cells(g.max_cells);
        p.bbox = g.bbox;
        p
    }

    fn lambda(&self) -> Result<Complex64, CliError> {
        self.lambda
            .map(Complex64::from)
            .ok_or_else(|| CliError::Config("this command needs `lambda`".into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "shiftspec", version, about = "Spectra of diagonally perturbed weighted shifts")]
pub struct Args {
    /// Command to run; overrides `command` in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON job config file.
    #[arg(long, conflicts_with = "config_json")]
    pub config: Option<PathBuf>,
    /// Inline JSON job config.
    #[arg(long)]
    pub config_json: Option<String>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Spectral parameter as `re,im` (or `re`).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Output file (one format) or file stem (several formats).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Vec<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(Error::BudgetExceeded { .. } | Error::NoConvergence { .. }) => 3,
            CliError::Numeric(
                Error::InvalidParameter(_)
                | Error::InvalidSequence(_)
                | Error::StepNotOne(_)
                | Error::NonzeroDiagonals(_)
                | Error::PeriodMismatch { .. }
                | Error::DimensionTooLarge { .. },
            ) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

fn parse_lambda(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad --lambda component {t:?}")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Config(format!("--lambda expects `re,im`, got {s:?}"))),
    }
}

/// Reads the config and applies flag overrides.
pub fn load_config(args: &Args) -> Result<JobConfig, CliError> {
    let text = match (&args.config, &args.config_json) {
        (Some(path), _) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        (None, Some(inline)) => inline.clone(),
        (None, None) => return Err(CliError::Config("pass --config FILE or --config-json JSON".into())),
    };
    let mut cfg: JobConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid job config: {e}")))?;
    if let Some(c) = args.command {
        cfg.command = Some(c);
    }
    if let Some(k) = args.k_max {
        cfg.k_max = k;
    }
    if let Some(e) = args.eps {
        cfg.eps = Some(e);
    }
    if let Some(l) = &args.lambda {
        cfg.lambda = Some(parse_lambda(l)?.into());
    }
    if let Some(o) = &args.out {
        cfg.output.path = Some(o.clone());
    }
    if !args.format.is_empty() {
        cfg.output.formats = args.format.clone();
    }
    if let Some(t) = args.threads {
        cfg.threads = Some(t);
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Rendered artifacts, one per format, plus text for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<(Format, Vec<u8>)>,
}

fn formats_or(cfg: &JobConfig, default: &[Format], allowed: &[Format]) -> Result<Vec<Format>, CliError> {
    let f = if cfg.output.formats.is_empty() {
        default.to_vec()
    } else {
        cfg.output.formats.clone()
    };
    if let Some(bad) = f.iter().find(|x| !allowed.contains(x)) {
        return Err(CliError::Config(format!("format {bad:?} is not available for this command")));
    }
    Ok(f)
}

/// Runs the job and renders its outputs without touching the filesystem.
pub fn execute(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let command = cfg
        .command
        .ok_or_else(|| CliError::Config("no command given".into()))?;
    let model = &cfg.model;
    let mut out = Outcome::default();
    match command {
        Command::Radii => {
            let eval = RadiiEvaluator::new(model, cfg.k_max)?;
            let (p, m) = eval.both(cfg.lambda()?);
            let doc = json!({
                "r_plus": emit_ext(p.value),
                "r_minus": emit_ext(m.value),
                "method": p.method,
            });
            out.stdout = emit::to_json(&doc);
        }
        Command::Membership => {
            let r = spectrum::membership(model, cfg.lambda()?, cfg.k_max, cfg.eps())?;
            out.stdout = emit::to_json(&r);
        }
        Command::Scan | Command::Nshift => {
            if command == Command::Nshift && model.step() < 2 {
                log::warn!("nshift on a model with step 1 is a plain scan");
            }
            let grid = spectrum::decompose_union(model, &cfg.scan_params())?;
            for f in formats_or(cfg, &[Format::Csv, Format::Pgm], &[Format::Csv, Format::Json, Format::Pgm])? {
                let bytes = match f {
                    Format::Csv => emit::grid_csv(&grid).into_bytes(),
                    Format::Json => emit::grid_json(&grid).into_bytes(),
                    Format::Pgm => emit::grid_pgm(&grid),
                };
                out.files.push((f, bytes));
            }
        }
        Command::Boundary => {
            let grid = spectrum::decompose_union(model, &cfg.scan_params())?;
            let b = spectrum::extract_boundary(&grid);
            for f in formats_or(cfg, &[Format::Json], &[Format::Csv, Format::Json, Format::Pgm])? {
                let bytes = match f {
                    Format::Csv => emit::boundary_csv(&b).into_bytes(),
                    Format::Json => emit::boundary_json(&b).into_bytes(),
                    Format::Pgm => emit::grid_pgm(&grid),
                };
                out.files.push((f, bytes));
            }
        }
        Command::VerifyInverse => {
            let lambda = cfg.lambda()?;
            let eval = RadiiEvaluator::new(model, cfg.k_max)?;
            let pre = Prechecks::evaluate(&eval, lambda);
            let mut doc = json!({
                "lambda": [lambda.re, lambda.im],
                "r_plus": emit_ext(pre.r_plus.value),
                "r_minus": if eval.shift_invertible() { emit_ext(pre.r_minus.value) } else { json!(null) },
                "forward_precheck": pre.forward,
                "backward_precheck": pre.backward,
                "direction": null,
            });
            if let Some(dir) = pre.direction() {
                let s = series::build(model, lambda, dir, cfg.series_len, None)?;
                let probes = cfg.probes.clone().unwrap_or_else(|| s.probe_indices());
                let residual = series::residual_identity(&s, model, &probes)?;
                doc["direction"] = json!(dir);
                doc["series_len"] = json!(cfg.series_len);
                doc["index_range"] = json!([s.index_range().0, s.index_range().1]);
                doc["probes"] = json!(probes.len());
                doc["residual"] = json!(residual);
                doc["tail_bound"] = emit_ext(s.tail_bound());
            }
            out.stdout = emit::to_json(&doc);
        }
        Command::Oracle => {
            let o = &cfg.oracle;
            let eig = oracle::model_eigenvalues(model, o.n, o.boundary, o.offset)?;
            for f in formats_or(cfg, &[Format::Csv], &[Format::Csv, Format::Json])? {
                let bytes = match f {
                    Format::Csv => emit::eigen_csv(&eig),
                    Format::Json => {
                        let mut doc = json!({
                            "n": o.n,
                            "boundary": o.boundary,
                            "offset": o.offset,
                            "eigenvalues": eig.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        });
                        if o.sigma_grid {
                            let bbox = cfg.grid.bbox.unwrap_or_else(|| spectrum::default_box(model));
                            let g = oracle::sigma_min_grid(model, o.n, o.boundary, o.offset, bbox, cfg.grid.nx, cfg.grid.ny)?;
                            doc["sigma_min"] = json!({
                                "box": g.bbox,
                                "nx": g.nx,
                                "ny": g.ny,
                                "values": g.values,
                            });
                        }
                        emit::to_json(&doc)
                    }
                    Format::Pgm => unreachable!(),
                };
                out.files.push((f, bytes.into_bytes()));
            }
        }
        Command::Compare => {
            let grid = spectrum::decompose_union(model, &cfg.scan_params())?;
            let o = &cfg.oracle;
            let params = OracleParams {
                n: o.n,
                boundary: o.boundary,
                offset: o.offset,
                delta: o.delta,
            };
            let report = oracle::compare(model, &grid, &params)?;
            formats_or(cfg, &[Format::Json], &[Format::Json])?;
            out.files.push((Format::Json, emit::to_json(&report).into_bytes()));
        }
    }
    Ok(out)
}

fn emit_ext(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(crate::extreal::format_text(v))
    }
}

fn target_paths(cfg: &JobConfig, files: &[(Format, Vec<u8>)]) -> Vec<Option<PathBuf>> {
    let stem = |p: &Path| files.iter().map(|(f, _)| Some(p.with_extension(f.extension()))).collect();
    match (&cfg.output.path, files.len()) {
        (_, 0) => Vec::new(),
        (None, 1) => vec![None],
        (Some(p), 1) => vec![Some(p.clone())],
        (Some(p), _) => stem(p),
        (None, _) => {
            let name = cfg.command.and_then(|c| c.to_possible_value()).map(|v| v.get_name().to_owned());
            stem(Path::new(&name.unwrap_or_else(|| "out".into())))
        }
    }
}

fn write_all(targets: &[(PathBuf, &[u8])]) -> Result<(), CliError> {
    let tmp = |p: &Path| {
        let mut s = p.as_os_str().to_owned();
        s.push(".partial");
        PathBuf::from(s)
    };
    for (path, bytes) in targets {
        if let Err(e) = fs::write(tmp(path), bytes) {
            for (p, _) in targets {
                let _ = fs::remove_file(tmp(p));
            }
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
    }
    for (path, _) in targets {
        fs::rename(tmp(path), path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_job(cfg: &JobConfig) -> Result<(), CliError> {
    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| execute(cfg))?,
        None => execute(cfg)?,
    };
    let paths = target_paths(cfg, &outcome.files);
    let mut stdout = outcome.stdout.into_bytes();
    let mut targets = Vec::new();
    for (path, (_, bytes)) in paths.into_iter().zip(&outcome.files) {
        match path {
            Some(p) => targets.push((p, bytes.as_slice())),
            None => stdout.extend_from_slice(bytes),
        }
    }
    if let (Some(p), true) = (&cfg.output.path, outcome.files.is_empty()) {
        targets.push((p.clone(), stdout.as_slice()));
    }
    write_all(&targets)?;
    use std::io::Write;
    std::io::stdout()
        .write_all(&stdout)
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

/// Parses arguments, runs the job and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = load_config(&args).and_then(|cfg| run_job(&cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("shiftspec: {e}");
            e.exit_code()
        }
    }
}
