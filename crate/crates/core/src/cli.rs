//! Command-line front end.
//!
//! Every subcommand resolves its configuration from flags, then an optional
//! JSON file (`--config`), then defaults. Runs with `--out` write their data
//! files first and a `manifest.json` listing each file's SHA-256 last.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{self, CascadeError};
use crate::estimators::{self, EstimatorError};
use crate::io::{self, FieldDump, IoError};
use crate::regimes::{self, RegimeError};
use crate::spectrum::{self, Spectrum};
use crate::verify::{self, Scale, VerifyConfig};
use crate::weights::{ModelSpec, WeightError, WeightModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Numerical(String),
    #[error("acceptance suite failed")]
    Acceptance,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Acceptance => EXIT_ACCEPTANCE,
        }
    }
}

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<RegimeError> for CliError {
    fn from(e: RegimeError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::MixedSpectra(_) | EstimatorError::TooFewSpectra(_) | EstimatorError::Cascade(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
    .into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lognormal,
    Twopoint,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Full,
    Quick,
}

#[derive(Parser, Debug)]
#[command(name = "mccm", version, about = "Mandelbrot cascade measures: dimensions, simulation, Fourier estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form dimensions and regime of one model.
    Analyze(CommonArgs),
    /// Sample fields and write spectra (and optionally fields).
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump the leaf masses of every field.
        #[arg(long)]
        fields: bool,
    },
    /// Fourier decay fit on dumped spectra, or on fresh samples of a model.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Spectrum dumps (`.csv` or `.bin`).
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        block_base: Option<u64>,
    },
    /// Log-normal dimension curves over a sigma grid, as CSV and SVG.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid size; sigma_j = sqrt(2 ln b) j / (points + 1).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run the acceptance suite.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "sigma2-over-logb")]
    pub sigma2_over_logb: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    /// `value:prob,value:prob,...`
    #[arg(long)]
    pub atoms: Option<String>,
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kmax: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of the flags above (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Resolved or partial run configuration, as read from a config file and
/// echoed into manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_over_logb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<PathBuf>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_base: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_scale: Option<f64>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        Config { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl Config {
    /// Fields of `self` where set, else those of `lower`.
    pub fn over(self, lower: Config) -> Config {
        overlay!(self, lower; model, sigma, sigma2_over_logb, x, atoms, b, depth, reps, seed, kmax, out,
            threads, format, fields, input, block_base, points, scale, only, tolerance_scale)
    }

    pub fn from_file(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// The model described by this configuration; `b` defaults to 2 and the
    /// model to log-normal with `sigma^2 / ln b = 0.25`.
    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let b = self.b.unwrap_or(2);
        if b < 2 {
            return Err(CliError::Usage(format!("b = {b} must be at least 2")));
        }
        let weight = match self.model.unwrap_or(ModelKind::Lognormal) {
            ModelKind::Lognormal => {
                let sigma = match (self.sigma, self.sigma2_over_logb) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Usage("give either sigma or sigma2_over_logb, not both".into()))
                    }
                    (Some(s), None) => s,
                    (None, r) => (r.unwrap_or(0.25) * (b as f64).ln()).sqrt(),
                };
                WeightModel::lognormal(sigma)?
            }
            ModelKind::Twopoint => WeightModel::two_point(
                self.x
                    .ok_or_else(|| CliError::Usage("model twopoint needs x".into()))?,
            )?,
            ModelKind::Discrete => WeightModel::discrete(
                self.atoms
                    .clone()
                    .ok_or_else(|| CliError::Usage("model discrete needs atoms".into()))?,
            )?,
        };
        Ok(ModelSpec::new(weight, b)?)
    }

    /// Records the model as resolved, so the manifest echo is complete.
    fn with_model(mut self, spec: &ModelSpec) -> Config {
        self.b = Some(spec.b);
        match &spec.weight {
            WeightModel::LogNormal { sigma } => {
                self.model = Some(ModelKind::Lognormal);
                self.sigma = Some(*sigma);
                self.sigma2_over_logb = None;
            }
            WeightModel::TwoPoint { x } => {
                self.model = Some(ModelKind::Twopoint);
                self.x = Some(*x);
            }
            WeightModel::Discrete { atoms } => {
                self.model = Some(ModelKind::Discrete);
                self.atoms = Some(atoms.clone());
            }
        }
        self
    }
}

fn parse_atoms(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(',')
        .map(|pair| {
            let (v, p) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("atom {pair:?} is not value:prob")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("atom {pair:?}: {e}")))
            };
            Ok((num(v)?, num(p)?))
        })
        .collect()
}

impl CommonArgs {
    fn to_config(&self) -> Result<Config, CliError> {
        Ok(Config {
            model: self.model,
            sigma: self.sigma,
            sigma2_over_logb: self.sigma2_over_logb,
            x: self.x,
            atoms: self.atoms.as_deref().map(parse_atoms).transpose()?,
            b: self.b,
            depth: self.depth,
            reps: self.reps,
            seed: self.seed,
            kmax: self.kmax,
            out: self.out.clone(),
            threads: self.threads,
            format: self.format,
            ..Config::default()
        })
    }

    /// Flags over the config file.
    fn resolve(&self, extra: Config) -> Result<Config, CliError> {
        let flags = extra.over(self.to_config()?);
        match &self.config {
            Some(path) => Ok(flags.over(Config::from_file(path)?)),
            None => Ok(flags),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

/// Collects written files and writes the manifest after them.
struct Run {
    command: &'static str,
    dir: Option<PathBuf>,
    outputs: Vec<OutputFile>,
    start: Instant,
}

impl Run {
    fn new(command: &'static str, dir: Option<PathBuf>, start: Instant) -> Result<Run, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| io_error(d, e))?;
        }
        Ok(Run {
            command,
            dir,
            outputs: Vec::new(),
            start,
        })
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn record(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.path(name).expect("recorded files live in the output directory");
        let bytes = fs::metadata(&path).map_err(|e| io_error(&path, e))?.len();
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: io::file_digest(&path)?,
            bytes,
        });
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        if let Some(path) = self.path(name) {
            fs::write(&path, text).map_err(|e| io_error(&path, e))?;
            self.record(name)?;
        }
        Ok(())
    }

    fn finish(self, config: &Config) -> Result<Option<RunManifest>, CliError> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let manifest = RunManifest {
            command: self.command.to_string(),
            config: config.clone(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
        Ok(Some(manifest))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("threads must be positive".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn cmd_analyze(common: &CommonArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = common.resolve(Config::default())?;
    let spec = cfg.spec()?;
    let cfg = cfg.with_model(&spec);
    let record = regimes::report_record(&spec)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&record),
        Format::Csv => {
            let v = serde_json::to_value(&record).expect("record serializes");
            let mut s = String::from("key,value\n");
            for (k, v) in v.as_object().expect("record is an object") {
                let _ = writeln!(s, "{k},{}", v.to_string().trim_matches('"'));
            }
            s
        }
        Format::Bin => return Err(CliError::Usage("analyze writes csv or json".into())),
    };
    print!("{text}");
    let mut run = Run::new("analyze", cfg.out.clone(), start)?;
    let ext = if cfg.format == Some(Format::Csv) { "csv" } else { "json" };
    run.write_text(&format!("report.{ext}"), &text)?;
    run.finish(&cfg)?;
    Ok(())
}

fn default_kmax(b: u32, depth: u32) -> u64 {
    (b as u64).saturating_pow(depth).min(4096)
}

fn cmd_simulate(common: &CommonArgs, fields: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = common.resolve(Config {
        fields: fields.then_some(true),
        ..Config::default()
    })?;
    let spec = cfg.spec()?;
    let mut cfg = cfg.with_model(&spec);
    let depth = *cfg.depth.get_or_insert(10);
    let reps = *cfg.reps.get_or_insert(1);
    let seed = *cfg.seed.get_or_insert(0);
    let kmax = *cfg.kmax.get_or_insert(default_kmax(spec.b, depth));
    let format = *cfg.format.get_or_insert(Format::Csv);
    let dump_fields = cfg.fields.unwrap_or(false);
    if format == Format::Json {
        return Err(CliError::Usage("simulate writes csv or bin dumps".into()));
    }
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("simulate needs --out".into()))?;
    set_threads(cfg.threads)?;
    cascade::sample_field(&spec, depth, seed, None)?;
    let mut run = Run::new("simulate", Some(out), start)?;
    let ext = if format == Format::Csv { "csv" } else { "bin" };
    let width = reps.saturating_sub(1).to_string().len().max(3);
    for r in 0..reps {
        let field = cascade::sample_field(&spec, depth, estimators::replicate_seed(seed, r as u64), None)?;
        let sp = spectrum::fourier_all(&field, kmax);
        let name = format!("spectrum_{r:0width$}.{ext}");
        let path = run.path(&name).expect("output directory");
        match format {
            Format::Csv => io::write_spectrum_csv(&path, &sp)?,
            _ => io::write_spectrum_bin(&path, &sp)?,
        }
        run.record(&name)?;
        if dump_fields {
            let name = format!("field_{r:0width$}.{ext}");
            let path = run.path(&name).expect("output directory");
            let dump = FieldDump::from(&field);
            match format {
                Format::Csv => io::write_field_csv(&path, &dump)?,
                _ => io::write_field_bin(&path, &dump)?,
            }
            run.record(&name)?;
        }
    }
    let n = run.outputs.len();
    run.finish(&cfg)?;
    println!("wrote {n} files");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub spectra: usize,
    pub decay: estimators::FitResult,
    /// `d_f` of the model when the spectra were sampled in-process.
    pub d_f: Option<f64>,
}

fn cmd_estimate(common: &CommonArgs, input: &[PathBuf], block_base: Option<u64>) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = common.resolve(Config {
        input: (!input.is_empty()).then(|| input.to_vec()),
        block_base,
        ..Config::default()
    })?;
    set_threads(cfg.threads)?;
    let (mut cfg, spectra, d_f) = match cfg.input.clone() {
        Some(paths) => {
            let spectra = paths
                .iter()
                .map(|p| io::read_spectrum(p))
                .collect::<Result<Vec<Spectrum>, _>>()?;
            (cfg, spectra, None)
        }
        None => {
            let spec = cfg.spec()?;
            let mut cfg = cfg.with_model(&spec);
            let depth = *cfg.depth.get_or_insert(12);
            let reps = *cfg.reps.get_or_insert(20);
            let seed = *cfg.seed.get_or_insert(0);
            let kmax = *cfg.kmax.get_or_insert((spec.b as u64).pow(depth.saturating_sub(1)));
            cascade::sample_field(&spec, depth, seed, None)?;
            let spectra = estimators::replicates(reps, |r| {
                cascade::sample_field(&spec, depth, estimators::replicate_seed(seed, r), None)
                    .map(|f| spectrum::fourier_all(&f, kmax))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let d_f = regimes::fourier_dimension(&spec).ok();
            (cfg, spectra, d_f)
        }
    };
    let base = *cfg
        .block_base
        .get_or_insert(spectra.first().map(|s| s.b as u64).unwrap_or(2));
    let report = EstimateReport {
        spectra: spectra.len(),
        decay: estimators::decay_fit(&spectra, base)?,
        d_f,
    };
    let text = to_json(&report);
    print!("{text}");
    let mut run = Run::new("estimate", cfg.out.clone(), start)?;
    run.write_text("estimate.json", &text)?;
    run.finish(&cfg)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub d_h: f64,
    pub d_f_analytic: f64,
    pub d_f_estimated: Option<f64>,
    pub stderr: Option<f64>,
}

/// `points` log-normal models at `sigma_j = sqrt(2 ln b) j / (points + 1)`,
/// with a Monte Carlo decay fit when `reps > 0`.
pub fn sweep_rows(b: u32, points: usize, mc: Option<(u32, usize, u64)>) -> Result<Vec<SweepRow>, CliError> {
    if points == 0 {
        return Err(CliError::Usage("empty sigma grid".into()));
    }
    let top = (2.0 * (b as f64).ln()).sqrt();
    (1..=points)
        .map(|j| {
            let sigma = top * j as f64 / (points + 1) as f64;
            let spec = ModelSpec::new(WeightModel::lognormal(sigma)?, b)?;
            let (d_f_estimated, stderr) = match mc {
                Some((depth, reps, seed)) if reps > 0 => {
                    let kmax = (b as u64).pow(depth.saturating_sub(1));
                    let spectra = estimators::replicates(reps, |r| {
                        cascade::sample_field(&spec, depth, estimators::replicate_seed(seed, r), None)
                            .map(|f| spectrum::fourier_all(&f, kmax))
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>, _>>()?;
                    let fit = estimators::decay_fit(&spectra, b as u64)?;
                    (Some(fit.estimate), Some(fit.std_err))
                }
                _ => (None, None),
            };
            Ok(SweepRow {
                sigma,
                d_h: regimes::hausdorff_dimension(&spec)?,
                d_f_analytic: regimes::fourier_dimension(&spec)?,
                d_f_estimated,
                stderr,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("sigma,d_h,d_f_analytic,d_f_estimated,stderr\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{},{}",
            r.sigma,
            r.d_h,
            r.d_f_analytic,
            opt(r.d_f_estimated),
            opt(r.stderr)
        );
    }
    s
}

/// A named polyline (or point set) for [`svg_plot`].
pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

/// Minimal SVG line chart on `[x0, x1] x [0, 1]`.
pub fn svg_plot(title: &str, x_label: &str, x_range: (f64, f64), series: &[Series], vline: Option<f64>) -> String {
    let (w, h, m) = (640.0, 420.0, 56.0);
    let (x0, x1) = x_range;
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - y.clamp(0.0, 1.0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<polyline points="{m},{} {m},{} {},{}" fill="none" stroke="black"/>"#,
        m,
        h - m,
        w - m,
        h - m
    );
    for i in 0..=4 {
        let y = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{y:.2}</text>"#,
            m - 6.0,
            py(y) + 4.0
        );
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{x:.2}</text>"#,
            px(x),
            h - m + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        w / 2.0,
        h - 12.0
    );
    if let Some(v) = vline {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            px(v),
            m,
            h - m
        );
    }
    for (i, ser) in series.iter().enumerate() {
        if ser.markers {
            for &(x, y) in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    px(x),
                    py(y),
                    ser.color
                );
            }
        } else if !ser.points.is_empty() {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                pts.join(" "),
                ser.color
            );
        }
        let ly = m + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
            w - m - 120.0,
            ser.color,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    s
}

fn cmd_sweep(common: &CommonArgs, points: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = common.resolve(Config {
        points,
        ..Config::default()
    })?;
    cfg.model = Some(ModelKind::Lognormal);
    let b = *cfg.b.get_or_insert(3);
    let points = *cfg.points.get_or_insert(25);
    let reps = *cfg.reps.get_or_insert(0);
    let seed = *cfg.seed.get_or_insert(0);
    let depth = *cfg.depth.get_or_insert(10);
    if b < 2 {
        return Err(CliError::Usage(format!("b = {b} must be at least 2")));
    }
    set_threads(cfg.threads)?;
    let rows = sweep_rows(b, points, (reps > 0).then_some((depth, reps, seed)))?;
    let csv = sweep_csv(&rows);
    let top = (2.0 * (b as f64).ln()).sqrt();
    let series = [
        Series {
            name: "d_h",
            color: "#1f77b4",
            points: rows.iter().map(|r| (r.sigma, r.d_h)).collect(),
            markers: false,
        },
        Series {
            name: "d_f",
            color: "#d62728",
            points: rows.iter().map(|r| (r.sigma, r.d_f_analytic)).collect(),
            markers: false,
        },
        Series {
            name: "d_f estimated",
            color: "#2ca02c",
            points: rows
                .iter()
                .filter_map(|r| r.d_f_estimated.map(|d| (r.sigma, d)))
                .collect(),
            markers: true,
        },
    ];
    let svg = svg_plot(
        &format!("log-normal cascade, b = {b}"),
        "sigma",
        (0.0, top),
        &series,
        Some(top / 2.0),
    );
    if cfg.out.is_none() {
        print!("{csv}");
    }
    let mut run = Run::new("sweep", cfg.out.clone(), start)?;
    run.write_text("sweep.csv", &csv)?;
    run.write_text("sweep.svg", &svg)?;
    run.finish(&cfg)?;
    Ok(())
}

fn cmd_verify(common: &CommonArgs, scale: Option<ScaleArg>, only: &[u32], tolerance_scale: Option<f64>) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = common.resolve(Config {
        scale: scale.map(|s| match s {
            ScaleArg::Full => Scale::Full,
            ScaleArg::Quick => Scale::Quick,
        }),
        only: (!only.is_empty()).then(|| only.to_vec()),
        tolerance_scale,
        ..Config::default()
    })?;
    let vc = VerifyConfig {
        scale: *cfg.scale.get_or_insert(Scale::Full),
        seed: *cfg.seed.get_or_insert(verify::DEFAULT_SEED),
        tolerance_scale: *cfg.tolerance_scale.get_or_insert(1.0),
        only: cfg.only.clone().unwrap_or_default(),
    };
    if let Some(bad) = vc.only.iter().find(|&&i| i == 0 || i > verify::CRITERIA) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    set_threads(cfg.threads)?;
    let summary = verify::run_suite_with(&vc, |o| println!("{}", o.line()));
    let passed = summary.outcomes.iter().filter(|o| o.passed).count();
    println!(
        "{passed}/{} criteria passed; summary digest {}",
        summary.outcomes.len(),
        summary.digest()
    );
    let mut run = Run::new("verify", cfg.out.clone(), start)?;
    run.write_text("summary.json", &to_json(&summary))?;
    run.finish(&cfg)?;
    if summary.passed {
        Ok(())
    } else {
        Err(CliError::Acceptance)
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Simulate { common, fields } => cmd_simulate(common, *fields),
        Command::Estimate {
            common,
            input,
            block_base,
        } => cmd_estimate(common, input, *block_base),
        Command::Sweep { common, points } => cmd_sweep(common, *points),
        Command::Verify {
            common,
            scale,
            only,
            tolerance_scale,
        } => cmd_verify(common, *scale, only, *tolerance_scale),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
