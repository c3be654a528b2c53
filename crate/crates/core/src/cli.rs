//! The `fbrewire` command line.
//!
//! Exit codes: 0 success, 2 configuration error (bad arguments, missing or
//! invalid filterbank/model files, unsupported depth), 3 malformed input
//! file, 4 numerical validation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_multi, synthesize_multi};
use crate::analysis2d::{analyze_2d, synthesize_2d, Subbands2D};
use crate::complement::{
    alias_decompose, alias_report, analyze_complementary_multi, ross_predict_modulated,
    AliasReport, Complement,
};
use crate::config::ModelConfig;
use crate::error::{FbError, Result};
use crate::filterbank::{FilterbankPair, FilterbankSpec};
use crate::io;
use crate::likelihood::{sample_observation_2d, ObservationKind};
use crate::metrics::Metrics;
use crate::pipeline::{denoise_interpolate, despeckle, Estimator, MonteCarlo};
use crate::prior::{PriorFamily, PriorSpec};
use crate::scs::subband_convolve;
use crate::signal::{modulate, subsample, Image2D, Signal1D};
use crate::subband::{Provenance, SubbandIndex, SubbandSet};
use crate::validation::{self, ValidationConfig, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const DEFAULT_DEPTH: u32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fbrewire",
    version,
    about = "Two-channel filterbank rewiring toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a signal (.txt) or image (.pgm) into per-subband files.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value = "haar")]
        filterbank: String,
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Output directory; receives band files and manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a signal or image from an `analyze` manifest.
    Synthesize {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localized aliasing, reverse-order and subband-convolution checks for a signal.
    RewireReport {
        input: PathBuf,
        #[arg(long, default_value = "haar")]
        filterbank: String,
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Support threshold; defaults to a relative one.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Joint interpolation and denoising of a lattice-subsampled image.
    Interpolate(RestoreArgs),
    /// Posterior-mean reduction of multiplicative noise.
    Despeckle(RestoreArgs),
    /// Run the acceptance checks.
    Validate {
        /// Comma-separated criterion numbers (1-11); all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Filterbank names or JSON files; the shipped set by default.
        #[arg(long)]
        filterbank: Vec<String>,
        #[arg(long, default_value_t = validation::SEED)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RestoreArgs {
    /// Clean image to corrupt and restore, or with `--observed` the observation.
    pub input: PathBuf,
    #[arg(long)]
    pub filterbank: Option<String>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file: {model, sigma, depth, filterbank, prior}.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Treat the input as an observation instead of simulating one.
    #[arg(long)]
    pub observed: bool,
    /// Ground truth for metrics when `--observed` is set.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the simulated observation here.
    #[arg(long)]
    pub observation: Option<PathBuf>,
}

/// Fully resolved settings of a restoration run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ObservationKind,
    pub input: PathBuf,
    pub output: PathBuf,
    pub filterbank: FilterbankPair,
    pub depth: u32,
    pub sigma: f64,
    pub prior: PriorSpec,
    pub monte_carlo: Option<MonteCarlo>,
    pub seed: u64,
    pub report: Option<PathBuf>,
    pub observed: bool,
    pub truth: Option<PathBuf>,
    pub observation: Option<PathBuf>,
}

impl RunConfig {
    /// Flags override the model file; `sigma` must come from one of them.
    pub fn resolve(model: ObservationKind, a: &RestoreArgs) -> Result<Self> {
        let file = a.prior.as_deref().map(ModelConfig::from_path).transpose()?;
        if let Some(f) = &file {
            if f.model != model {
                return Err(FbError::Config(format!(
                    "model file describes {:?}, command needs {model:?}",
                    f.model
                )));
            }
        }
        let sigma = a.sigma.or(file.as_ref().map(|f| f.sigma)).ok_or_else(|| {
            FbError::Config("--sigma is required (or a model file with sigma)".into())
        })?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(FbError::Config(format!(
                "sigma {sigma} must be finite and ≥ 0"
            )));
        }
        let depth = a
            .depth
            .or(file.as_ref().map(|f| f.depth))
            .unwrap_or(DEFAULT_DEPTH);
        if depth == 0 {
            return Err(FbError::Config("depth must be at least 1".into()));
        }
        let fb_name = a
            .filterbank
            .clone()
            .or(file.as_ref().map(|f| f.filterbank.clone()))
            .unwrap_or_else(|| "haar".into());
        let filterbank =
            FilterbankPair::resolve(&fb_name).map_err(|e| FbError::Config(e.to_string()))?;
        if a.truth.is_some() && !a.observed {
            return Err(FbError::Config(
                "--truth only applies with --observed".into(),
            ));
        }
        Ok(RunConfig {
            model,
            input: a.input.clone(),
            output: a.out.clone(),
            filterbank,
            depth,
            sigma,
            prior: file.as_ref().map_or_else(
                || PriorSpec::fit(PriorFamily::Laplacian),
                |f| f.prior.clone(),
            ),
            monte_carlo: file.and_then(|f| f.monte_carlo),
            seed: a.seed,
            report: a.report.clone(),
            observed: a.observed,
            truth: a.truth.clone(),
            observation: a.observation.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Signal,
    Image,
}

/// Index of an `analyze` output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: DataKind,
    pub depth: u32,
    /// Band labels in file order: `i_{I-1}…i_0`, or `r/c` for images.
    pub order: Vec<String>,
    pub files: Vec<String>,
    /// `[N]` or `[height, width]`.
    pub shape: Vec<usize>,
    pub band_shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxval: Option<u16>,
    pub filterbank: FilterbankSpec,
    pub provenance: Provenance,
}

pub const MANIFEST: &str = "manifest.json";

fn config_fb(name: &str) -> Result<FilterbankPair> {
    FilterbankPair::resolve(name).map_err(|e| FbError::Config(e.to_string()))
}

pub fn cmd_analyze(
    input: &Path,
    fb: &FilterbankPair,
    depth: u32,
    out_dir: &Path,
) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| FbError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut order = Vec::new();
    let mut files = Vec::new();
    let manifest = if io::is_pgm_path(input) {
        let im = io::read_pgm(input)?;
        let s = analyze_2d(&im, fb, depth)?;
        let (bh, bw) = s.band_shape();
        for (r, c, band) in s.iter() {
            let file = format!("band_{r}_{c}.txt");
            io::write_matrix(&out_dir.join(&file), band, bw)?;
            order.push(format!("{r}/{c}"));
            files.push(file);
        }
        Manifest {
            kind: DataKind::Image,
            depth,
            order,
            files,
            shape: vec![im.height(), im.width()],
            band_shape: vec![bh, bw],
            maxval: Some(im.maxval),
            filterbank: fb.to_spec(),
            provenance: s.provenance().clone(),
        }
    } else {
        let x = io::read_signal(input)?;
        let s = analyze_multi(&x, fb, depth)?;
        for i in s.indices() {
            let file = format!("band_{i}.txt");
            io::write_signal(&out_dir.join(&file), s.band(i))?;
            order.push(i.to_string());
            files.push(file);
        }
        Manifest {
            kind: DataKind::Signal,
            depth,
            order,
            files,
            shape: vec![x.len()],
            band_shape: vec![s.band_len()],
            maxval: None,
            filterbank: fb.to_spec(),
            provenance: s.provenance().clone(),
        }
    };
    io::write_json(&out_dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub enum Synthesized {
    Signal(Signal1D),
    Image(Image2D),
}

fn manifest_error(path: &Path, message: impl Into<String>) -> FbError {
    FbError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Reads the band files listed by a manifest and synthesizes.
pub fn load_and_synthesize(manifest_path: &Path) -> Result<Synthesized> {
    let text = io::read_to_string(manifest_path)?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| manifest_error(manifest_path, e.to_string()))?;
    let fb = FilterbankPair::from_spec(m.filterbank.clone())?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let nb = 1usize << m.depth;
    match m.kind {
        DataKind::Signal => {
            let [len] = m.shape[..] else {
                return Err(manifest_error(
                    manifest_path,
                    "signal shape must have one entry",
                ));
            };
            let mut bands = vec![Vec::new(); nb];
            for (label, file) in m.order.iter().zip(&m.files) {
                let bits: Vec<u8> = label.bytes().map(|b| b.wrapping_sub(b'0')).collect();
                let idx = SubbandIndex::from_bits(&bits)
                    .map_err(|e| manifest_error(manifest_path, e.to_string()))?;
                bands[idx.as_usize()] = io::read_signal(&dir.join(file))?.into_inner();
            }
            let set = SubbandSet::new(m.depth, len, bands, m.provenance.clone())?;
            Ok(Synthesized::Signal(synthesize_multi(&set, &fb)?))
        }
        DataKind::Image => {
            let (&[h, w], &[bh, bw]) = (&m.shape[..], &m.band_shape[..]) else {
                return Err(manifest_error(
                    manifest_path,
                    "image shapes must have two entries",
                ));
            };
            let mut bands = vec![Vec::new(); nb * nb];
            for (label, file) in m.order.iter().zip(&m.files) {
                let (r, c) = label.split_once('/').ok_or_else(|| {
                    manifest_error(manifest_path, format!("bad band label `{label}`"))
                })?;
                let idx = |s: &str| {
                    let bits: Vec<u8> = s.bytes().map(|b| b.wrapping_sub(b'0')).collect();
                    SubbandIndex::from_bits(&bits)
                        .map_err(|e| manifest_error(manifest_path, e.to_string()))
                };
                let slot = idx(r)?.as_usize() * nb + idx(c)?.as_usize();
                bands[slot] = io::read_matrix(&dir.join(file), bh, bw)?;
            }
            let s = Subbands2D::from_bands(
                m.depth,
                h,
                w,
                bands,
                m.provenance.clone(),
                m.maxval.unwrap_or(255),
            )?;
            Ok(Synthesized::Image(synthesize_2d(&s, &fb)?))
        }
    }
}

pub fn cmd_synthesize(manifest_path: &Path, out: &Path) -> Result<()> {
    match load_and_synthesize(manifest_path)? {
        Synthesized::Signal(x) => io::write_signal(out, &x),
        Synthesized::Image(im) => io::write_pgm(out, &im),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementSummary {
    pub name: String,
    pub a: f64,
    pub b: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScsCheck {
    /// Against direct analysis of `x·x`.
    pub square_max_error: f64,
    /// Against direct analysis of `x·x_m`.
    pub modulated_max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewireReport {
    pub filterbank: String,
    pub depth: u32,
    pub signal_length: usize,
    pub complement: ComplementSummary,
    pub alias: AliasReport,
    /// `v^{x_m}` against its prediction from `w^x`.
    pub ross_max_error: f64,
    /// `v^{x_s}` against `½(v + (−1)^{i_0} w_{𝒊′})`.
    pub aliasing_max_error: f64,
    /// Gain-2 Haar only.
    pub scs: ScsCheck,
}

pub fn cmd_rewire_report(
    x: &Signal1D,
    fb: &FilterbankPair,
    depth: u32,
    eps: Option<f64>,
) -> Result<RewireReport> {
    let comp = Complement::of(fb)?;
    let v = analyze_multi(x, fb, depth)?;
    let w = analyze_complementary_multi(x, fb, depth)?;
    let alias = alias_report(&v, &w, eps)?;
    let vm = analyze_multi(&modulate(x)?, fb, depth)?;
    let ross_max_error = vm.max_abs_diff(&ross_predict_modulated(&w)?)?;
    let vs = analyze_multi(&subsample(x), fb, depth)?;
    let aliasing_max_error = vs.max_abs_diff(&alias_decompose(&v, &w)?)?;

    let haar = FilterbankPair::haar();
    let hx = analyze_multi(x, &haar, depth)?;
    let xm = modulate(x)?;
    let hm = analyze_multi(&xm, &haar, depth)?;
    let square_max_error =
        analyze_multi(&x.product(x)?, &haar, depth)?.max_abs_diff(&subband_convolve(&hx, &hx)?)?;
    let modulated_max_error = analyze_multi(&x.product(&xm)?, &haar, depth)?
        .max_abs_diff(&subband_convolve(&hx, &hm)?)?;
    Ok(RewireReport {
        filterbank: fb.name().to_string(),
        depth,
        signal_length: x.len(),
        complement: ComplementSummary {
            name: comp.pair.name().to_string(),
            a: comp.params.a,
            b: comp.params.b,
        },
        alias,
        ross_max_error,
        aliasing_max_error,
        scs: ScsCheck {
            square_max_error,
            modulated_max_error,
        },
    })
}

/// Runs a restoration command; returns metrics when ground truth is known.
pub fn cmd_restore(cfg: &RunConfig) -> Result<Option<Metrics>> {
    let input = io::read_pgm(&cfg.input)?;
    let (truth, y) = if cfg.observed {
        (cfg.truth.as_deref().map(io::read_pgm).transpose()?, input)
    } else {
        let y = sample_observation_2d(cfg.model, &input, cfg.sigma, cfg.seed)?;
        if let Some(p) = &cfg.observation {
            io::write_pgm(p, &y)?;
        }
        (Some(input), y)
    };
    let est = Estimator {
        prior: cfg.prior.clone(),
        monte_carlo: cfg.monte_carlo,
    };
    let start = Instant::now();
    let out = match cfg.model {
        ObservationKind::SubsampledNoisy => {
            denoise_interpolate(&y, &cfg.filterbank, cfg.depth, &est, cfg.sigma)?
        }
        ObservationKind::Multiplicative => {
            despeckle(&y, &cfg.filterbank, cfg.depth, &est, cfg.sigma)?
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    io::write_pgm(&cfg.output, &out.image)?;
    let Some(x) = truth else { return Ok(None) };
    if (x.height(), x.width()) != (y.height(), y.width()) {
        return Err(FbError::Config(
            "ground truth and observation differ in size".into(),
        ));
    }
    let m = match cfg.model {
        ObservationKind::SubsampledNoisy => Metrics::measure(
            x.subsample_lattice().pixels(),
            y.pixels(),
            x.pixels(),
            out.image.pixels(),
            ms,
            cfg.seed,
        )?,
        ObservationKind::Multiplicative => Metrics::measure(
            x.pixels(),
            y.pixels(),
            x.pixels(),
            out.image.pixels(),
            ms,
            cfg.seed,
        )?,
    };
    Ok(Some(m))
}

fn validation_fb(name: &str) -> Result<FilterbankPair> {
    match FilterbankPair::by_name(name) {
        Ok(fb) => Ok(fb),
        Err(_) if Path::new(name).exists() => FilterbankPair::from_path_unverified(Path::new(name)),
        Err(e) => Err(FbError::Config(e.to_string())),
    }
}

pub fn cmd_validate(only: &[u8], filterbanks: &[String], seed: u64) -> Result<ValidationReport> {
    let filterbanks = if filterbanks.is_empty() {
        FilterbankPair::shipped()
    } else {
        filterbanks
            .iter()
            .map(|n| validation_fb(n))
            .collect::<Result<_>>()?
    };
    let cfg = ValidationConfig { filterbanks, seed };
    validation::run(&cfg, (!only.is_empty()).then_some(only))
        .map_err(|e| FbError::Config(e.to_string()))
}

pub fn exit_code(e: &FbError) -> i32 {
    match e {
        FbError::Format { .. } | FbError::InvalidSignal(_) | FbError::InvalidImage(_) => {
            EXIT_FORMAT
        }
        FbError::NotPerfectReconstruction { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => io::write_json(p, value),
        None => {
            let text =
                serde_json::to_string_pretty(value).map_err(|e| FbError::Config(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze {
            input,
            filterbank,
            depth,
            out,
        } => {
            cmd_analyze(&input, &config_fb(&filterbank)?, depth, &out)?;
        }
        Command::Synthesize { manifest, out } => cmd_synthesize(&manifest, &out)?,
        Command::RewireReport {
            input,
            filterbank,
            depth,
            eps,
            report,
        } => {
            let x = io::read_signal(&input)?;
            let r = cmd_rewire_report(&x, &config_fb(&filterbank)?, depth, eps)?;
            emit_json(report.as_deref(), &r)?;
        }
        Command::Interpolate(a) => restore(ObservationKind::SubsampledNoisy, &a)?,
        Command::Despeckle(a) => restore(ObservationKind::Multiplicative, &a)?,
        Command::Validate {
            only,
            filterbank,
            seed,
            report,
        } => {
            let r = cmd_validate(&only, &filterbank, seed)?;
            for c in &r.criteria {
                eprintln!(
                    "criterion {:>2} {}: {} ({})",
                    c.id,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            emit_json(report.as_deref(), &r)?;
            return Ok(if r.pass { EXIT_OK } else { EXIT_NUMERICAL });
        }
    }
    Ok(EXIT_OK)
}

fn restore(model: ObservationKind, a: &RestoreArgs) -> Result<()> {
    let cfg = RunConfig::resolve(model, a)?;
    match cmd_restore(&cfg)? {
        Some(m) => emit_json(cfg.report.as_deref(), &m),
        None => {
            eprintln!("no ground truth given; metrics skipped");
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
