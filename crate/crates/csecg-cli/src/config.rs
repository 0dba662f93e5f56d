//! Run configuration: defaults, overridden by an optional `key=value`
//! file, overridden again by command-line flags.

use crate::error::{CliError, Result};
use clap::Args;
use csecg::experiment::Method;
use csecg::recovery::HaltingRule;
use csecg::sensing::MatrixKind;
use csecg::wavelet::WaveletCoeffs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    RawF64,
    RawI16,
}

impl InputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "csv" => Ok(InputFormat::Csv),
            "raw-f64" => Ok(InputFormat::RawF64),
            "raw-i16" => Ok(InputFormat::RawI16),
            other => Err(CliError::Config(format!(
                "unknown input format '{other}' (expected csv, raw-f64 or raw-i16)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputFormat::Csv => "csv",
            InputFormat::RawF64 => "raw-f64",
            InputFormat::RawI16 => "raw-i16",
        }
    }
}

pub fn parse_matrix_kind(s: &str) -> Result<MatrixKind> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "dense" | "dense-bernoulli" => Ok(MatrixKind::DenseBernoulli),
        "sparse-binary" => Ok(MatrixKind::SparseBinary),
        "sparse-signed" => Ok(MatrixKind::SparseSigned),
        other => Err(CliError::Config(format!(
            "unknown matrix kind '{other}' (expected dense, sparse-binary or sparse-signed)"
        ))),
    }
}

pub fn matrix_kind_name(kind: MatrixKind) -> &'static str {
    match kind {
        MatrixKind::DenseBernoulli => "dense",
        MatrixKind::SparseBinary => "sparse-binary",
        MatrixKind::SparseSigned => "sparse-signed",
    }
}

/// Flags shared by every subcommand. Each one mirrors a config-file key
/// (same name with underscores) and wins over the file value.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// key=value configuration file applied before the flags
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// input file: a sample stream, or the bitstream for decompress
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// input sample format: csv, raw-f64 or raw-i16
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,

    /// multiplier applied to each raw-i16 sample
    #[arg(long, value_name = "GAIN")]
    pub scale: Option<f64>,

    /// input sample rate in Hz; 360 Hz input is resampled to 250 Hz
    #[arg(long, value_name = "HZ")]
    pub fs: Option<u32>,

    /// generate a synthetic ECG of this many samples instead of reading input
    #[arg(long, value_name = "SAMPLES")]
    pub synthetic: Option<usize>,

    /// segment length N
    #[arg(long, value_name = "N")]
    pub segment_length: Option<usize>,

    /// wavelet decomposition depth L
    #[arg(long, value_name = "L")]
    pub levels: Option<usize>,

    /// sparsity budget K, scaling coefficients included
    #[arg(long, value_name = "K")]
    pub k_total: Option<usize>,

    /// measurement count M
    #[arg(long, value_name = "M", conflicts_with = "ratio")]
    pub m: Option<usize>,

    /// measurement ratio M/N, an alternative to --m
    #[arg(long, value_name = "RATIO")]
    pub ratio: Option<f64>,

    /// matrix family: dense, sparse-binary or sparse-signed
    #[arg(long, value_name = "KIND")]
    pub matrix: Option<String>,

    /// nonzeros per column for the sparse matrix kinds (default N/40)
    #[arg(long, value_name = "Q")]
    pub q: Option<usize>,

    /// base seed for every random draw in the run
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// reconstruction method: mmb-iht, mmb-cosamp, iht, cosamp or oracle
    #[arg(long, value_name = "NAME")]
    pub algorithm: Option<String>,

    /// iteration cap for the recovery loop
    #[arg(long, value_name = "COUNT")]
    pub max_iterations: Option<usize>,

    /// relative residual tolerance that stops the recovery loop
    #[arg(long, value_name = "TOL")]
    pub residual_tolerance: Option<f64>,

    /// seeded trials per configuration point
    #[arg(long, value_name = "COUNT")]
    pub trials: Option<usize>,

    /// residual-energy fraction at which a sparsity level is selected
    #[arg(long, value_name = "FRACTION")]
    pub threshold: Option<f64>,

    /// support size for overlap analysis (defaults to K)
    #[arg(long, value_name = "K")]
    pub overlap_k: Option<usize>,

    /// primary output path (bitstream, reconstruction or CSV by command)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// per-segment report CSV, written by decompress when given
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// manifest path (default: <output>.manifest)
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

/// Everything resolved and validated; commands read only this.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub scale: f64,
    pub fs: u32,
    pub synthetic: Option<usize>,
    pub n: usize,
    pub levels: usize,
    pub k_total: usize,
    pub m: usize,
    pub matrix: MatrixKind,
    pub q: usize,
    pub seed: u64,
    pub algorithm: Method,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub trials: usize,
    pub threshold: f64,
    pub overlap_k: usize,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => parse_config_file(path)?,
            None => CommonArgs::default(),
        };

        let n = args.segment_length.or(file.segment_length).unwrap_or(256);
        let levels = args.levels.or(file.levels).unwrap_or(5);
        let k_total = args.k_total.or(file.k_total).unwrap_or(34);

        // --m/--ratio act as one setting: a flag for either hides both
        // file values, so a flag ratio can override a file m.
        let (m_given, ratio_given) = if args.m.is_some() || args.ratio.is_some() {
            (args.m, args.ratio)
        } else {
            if file.m.is_some() && file.ratio.is_some() {
                return Err(CliError::Config(
                    "config file sets both m and ratio; pick one".into(),
                ));
            }
            (file.m, file.ratio)
        };
        let m = match (m_given, ratio_given) {
            (Some(m), _) => m,
            (None, Some(r)) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(CliError::Config(format!(
                        "measurement ratio {r} outside (0, 1)"
                    )));
                }
                ((r * n as f64).round() as usize).max(1)
            }
            (None, None) => 96,
        };

        let matrix = match args.matrix.as_deref().or(file.matrix.as_deref()) {
            Some(s) => parse_matrix_kind(s)?,
            None => MatrixKind::DenseBernoulli,
        };
        let q = match args.q.or(file.q) {
            Some(q) => {
                if !matrix.is_sparse() {
                    return Err(CliError::Config(
                        "q only applies to the sparse matrix kinds".into(),
                    ));
                }
                q
            }
            None if matrix.is_sparse() => (n / 40).clamp(1, m),
            None => 0,
        };

        let algorithm = args
            .algorithm
            .as_deref()
            .or(file.algorithm.as_deref())
            .unwrap_or("mmb-iht")
            .parse::<Method>()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let format = match args.format.as_deref().or(file.format.as_deref()) {
            Some(s) => InputFormat::parse(s)?,
            None => InputFormat::Csv,
        };

        let cfg = RunConfig {
            input: args.input.clone().or(file.input),
            format,
            scale: args.scale.or(file.scale).unwrap_or(1.0),
            fs: args.fs.or(file.fs).unwrap_or(250),
            synthetic: args.synthetic.or(file.synthetic),
            n,
            levels,
            k_total,
            m,
            matrix,
            q,
            seed: args.seed.or(file.seed).unwrap_or(1),
            algorithm,
            max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(70),
            residual_tolerance: args
                .residual_tolerance
                .or(file.residual_tolerance)
                .unwrap_or(1e-3),
            trials: args.trials.or(file.trials).unwrap_or(10),
            threshold: args.threshold.or(file.threshold).unwrap_or(1e-3),
            overlap_k: args.overlap_k.or(file.overlap_k).unwrap_or(k_total),
            output: args.output.clone().or(file.output),
            report: args.report.clone().or(file.report),
            manifest: args.manifest.clone().or(file.manifest),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        WaveletCoeffs::zeros(self.n, self.levels)
            .map_err(|e| CliError::Config(format!("bad segment geometry: {e}")))?;
        if self.m >= self.n {
            return Err(CliError::Config(format!(
                "measurement count {} must be below the segment length {}",
                self.m, self.n
            )));
        }
        if self.k_total < self.n >> self.levels {
            return Err(CliError::Config(format!(
                "sparsity budget {} cannot cover the {} scaling coefficients",
                self.k_total,
                self.n >> self.levels
            )));
        }
        if self.k_total > self.n {
            return Err(CliError::Config(format!(
                "sparsity budget {} exceeds the segment length {}",
                self.k_total, self.n
            )));
        }
        if self.fs != 250 && self.fs != 360 {
            return Err(CliError::Config(format!(
                "sample rate {} Hz unsupported (expected 250 or 360)",
                self.fs
            )));
        }
        if !self.scale.is_finite() || self.scale == 0.0 {
            return Err(CliError::Config(format!("bad sample scale {}", self.scale)));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trial count must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CliError::Config("iteration cap must be positive".into()));
        }
        if !(self.residual_tolerance >= 0.0 && self.residual_tolerance.is_finite()) {
            return Err(CliError::Config(format!(
                "bad residual tolerance {}",
                self.residual_tolerance
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CliError::Config(format!(
                "energy threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if self.overlap_k == 0 || self.overlap_k > self.n {
            return Err(CliError::Config(format!(
                "overlap support size {} outside 1..={}",
                self.overlap_k, self.n
            )));
        }
        if let Some(0) = self.synthetic {
            return Err(CliError::Config("synthetic length must be positive".into()));
        }
        Ok(())
    }

    pub fn halting(&self) -> HaltingRule {
        HaltingRule {
            max_iterations: self.max_iterations,
            residual_tolerance: self.residual_tolerance,
        }
    }

    /// Effective settings as key/value pairs, for the run manifest.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into())
        };
        let opt_num =
            |v: &Option<usize>| v.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        vec![
            ("input", opt_path(&self.input)),
            ("format", self.format.name().into()),
            ("scale", self.scale.to_string()),
            ("fs", self.fs.to_string()),
            ("synthetic", opt_num(&self.synthetic)),
            ("segment_length", self.n.to_string()),
            ("levels", self.levels.to_string()),
            ("k_total", self.k_total.to_string()),
            ("m", self.m.to_string()),
            ("matrix", matrix_kind_name(self.matrix).into()),
            ("q", self.q.to_string()),
            ("seed", self.seed.to_string()),
            ("algorithm", self.algorithm.name().into()),
            ("max_iterations", self.max_iterations.to_string()),
            ("residual_tolerance", self.residual_tolerance.to_string()),
            ("trials", self.trials.to_string()),
            ("threshold", self.threshold.to_string()),
            ("overlap_k", self.overlap_k.to_string()),
            ("output", opt_path(&self.output)),
            ("report", opt_path(&self.report)),
        ]
    }
}

fn parse_config_file(path: &Path) -> Result<CommonArgs> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = CommonArgs::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        set_key(&mut out, &key, value.trim())
            .map_err(|msg| CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1)))?;
    }
    Ok(out)
}

fn set_key(out: &mut CommonArgs, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        value
            .parse()
            .map_err(|e| format!("bad value '{value}' for {key}: {e}"))
    }
    match key {
        "input" => out.input = Some(PathBuf::from(value)),
        "format" => out.format = Some(value.to_string()),
        "scale" => out.scale = Some(num(key, value)?),
        "fs" => out.fs = Some(num(key, value)?),
        "synthetic" => out.synthetic = Some(num(key, value)?),
        "segment_length" => out.segment_length = Some(num(key, value)?),
        "levels" => out.levels = Some(num(key, value)?),
        "k_total" => out.k_total = Some(num(key, value)?),
        "m" => out.m = Some(num(key, value)?),
        "ratio" => out.ratio = Some(num(key, value)?),
        "matrix" => out.matrix = Some(value.to_string()),
        "q" => out.q = Some(num(key, value)?),
        "seed" => out.seed = Some(num(key, value)?),
        "algorithm" => out.algorithm = Some(value.to_string()),
        "max_iterations" => out.max_iterations = Some(num(key, value)?),
        "residual_tolerance" => out.residual_tolerance = Some(num(key, value)?),
        "trials" => out.trials = Some(num(key, value)?),
        "threshold" => out.threshold = Some(num(key, value)?),
        "overlap_k" => out.overlap_k = Some(num(key, value)?),
        "output" => out.output = Some(PathBuf::from(value)),
        "report" => out.report = Some(PathBuf::from(value)),
        "manifest" => out.manifest = Some(PathBuf::from(value)),
        other => return Err(format!("unknown key '{other}'")),
    }
    Ok(())
}
