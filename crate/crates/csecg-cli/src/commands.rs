//! The five subcommands. Each resolves its configuration, does the work,
//! and finishes by writing a manifest describing the artifacts.

use crate::config::{CommonArgs, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::ingest;
use crate::manifest;
use csecg::codec;
use csecg::experiment::{self, derive_seed, Method};
use csecg::metrics::{self, SegmentReport, ORIGINAL_BITS_PER_SAMPLE};
use csecg::recovery::{oracle_estimate, RecoveryResult};
use csecg::sensing::{SensingMatrix, Theta};
use csecg::signal;
use csecg::treemodel::{tree_approx_signal, SupportSet};
use csecg::wavelet;
use std::path::{Path, PathBuf};

#[derive(clap::Args, Debug)]
pub struct CompressArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// also write each segment's best model support, for later oracle runs
    #[arg(long, value_name = "PATH")]
    pub emit_supports: Option<PathBuf>,

    /// also write the working 250 Hz input as CSV (reference for decompress)
    #[arg(long, value_name = "PATH")]
    pub emit_input: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct DecompressArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// ground-truth support indices, one comma-separated line per segment
    #[arg(long, value_name = "PATH")]
    pub support_file: Option<PathBuf>,

    /// original 250 Hz signal (CSV) for per-segment quality metrics
    #[arg(long, value_name = "PATH")]
    pub reference: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// comma-separated measurement counts (default 2K,3K,4K,5K)
    #[arg(long, value_name = "M,M,...")]
    pub m_grid: Option<String>,

    /// comma-separated methods to compare (default all plus oracle)
    #[arg(long, value_name = "NAMES")]
    pub algorithms: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct AnalyzeSupportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(clap::Args, Debug)]
pub struct EnergyCurveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

fn require_output(cfg: &RunConfig, command: &str) -> Result<PathBuf> {
    cfg.output
        .clone()
        .ok_or_else(|| CliError::Config(format!("{command} needs --output <path>")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(format!("cannot write {}", path.display())))
}

fn finish_manifest(
    cfg: &RunConfig,
    command: &str,
    primary: &Path,
    artifacts: &[(&str, &Path)],
) -> Result<()> {
    let path = cfg
        .manifest
        .clone()
        .unwrap_or_else(|| manifest::default_path(primary));
    manifest::write_manifest(&path, command, &cfg.echo(), artifacts)
}

pub fn compress(args: &CompressArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let output = require_output(&cfg, "compress")?;
    let (samples, record) = ingest::load_stream(&cfg)?;
    let phi = SensingMatrix::generate(cfg.matrix, cfg.m, cfg.n, cfg.q, cfg.seed)?;
    let (stream, stats, dropped) =
        experiment::compress_signal(&phi, cfg.levels, cfg.k_total, &samples)?;
    if dropped > 0 {
        log::warn!("dropped {dropped} trailing samples short of a full segment");
    }
    let bytes = stream.serialize();
    std::fs::write(&output, &bytes).map_err(io_err(format!("cannot write {}", output.display())))?;

    let segments = stream.frames.len();
    let original_bits = segments * cfg.n * ORIGINAL_BITS_PER_SAMPLE;
    let cr = metrics::compression_ratio(original_bits, bytes.len() * 8)?;
    log::info!(
        "encoded {segments} segments of {record} into {} bytes at {}",
        bytes.len(),
        output.display()
    );
    log::info!(
        "achieved CR {cr:.4} ({original_bits} source bits, {} stream bits)",
        bytes.len() * 8
    );
    log::info!(
        "quantizer trained to MSE {:.4e}{}; codes {:.3} bits/symbol against entropy {:.3}",
        stats.training_mse.last().copied().unwrap_or(f64::NAN),
        if stats.quantizer_collapsed {
            " (collapsed levels)"
        } else {
            ""
        },
        stats.mean_code_bits_per_symbol,
        stats.entropy_bits_per_symbol
    );

    let mut artifacts: Vec<(&str, &Path)> = vec![("bitstream", output.as_path())];
    if let Some(supports_path) = &args.emit_supports {
        write_supports(&cfg, &samples, supports_path)?;
        artifacts.push(("supports", supports_path.as_path()));
    }
    if let Some(input_path) = &args.emit_input {
        let mut text = String::new();
        for v in &samples {
            text.push_str(&format!("{v}\n"));
        }
        write_text(input_path, &text)?;
        artifacts.push(("input-echo", input_path.as_path()));
    }
    finish_manifest(&cfg, "compress", &output, &artifacts)
}

fn write_supports(cfg: &RunConfig, samples: &[f64], path: &Path) -> Result<()> {
    let (segments, _) = signal::segment(samples, cfg.n);
    let k_detail = cfg.k_total - (cfg.n >> cfg.levels);
    let mut text = String::new();
    for s in &segments {
        let (_, support) = tree_approx_signal(s, cfg.levels, k_detail)?;
        let line: Vec<String> = support.to_vec().iter().map(|i| i.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_text(path, &text)?;
    log::info!(
        "wrote model supports for {} segments to {}",
        segments.len(),
        path.display()
    );
    Ok(())
}

fn read_supports(path: &Path, n: usize, levels: usize, expected: usize) -> Result<Vec<SupportSet>> {
    let text = std::fs::read_to_string(path)
        .map_err(io_err(format!("cannot read {}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let mut indices = Vec::new();
        for tok in raw.split([',', ' ']).filter(|t| !t.trim().is_empty()) {
            let idx: usize = tok.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "{}:{}: bad support index '{tok}'",
                    path.display(),
                    i + 1
                ))
            })?;
            if idx >= n {
                return Err(CliError::Data(format!(
                    "{}:{}: support index {idx} outside 0..{n}",
                    path.display(),
                    i + 1
                )));
            }
            indices.push(idx);
        }
        out.push(SupportSet::from_indices(indices, n, levels));
    }
    if out.len() != expected {
        return Err(CliError::Data(format!(
            "{}: {} support lines for {expected} segments",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

pub fn decompress(args: &DecompressArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Config("decompress needs --input <bitstream>".into()))?;
    let output = require_output(&cfg, "decompress")?;
    let bytes =
        std::fs::read(&input).map_err(io_err(format!("cannot read {}", input.display())))?;
    let (stream, measurements) = codec::decode_segments(&bytes)?;
    let header = &stream.header;
    let n = header.n as usize;
    let levels = header.levels as usize;
    let k_total = header.k_total as usize;
    log::info!(
        "stream opened: {} segments, N={n}, M={}, L={levels}, K={k_total}",
        measurements.len(),
        header.m
    );

    let supports = match &args.support_file {
        Some(p) => Some(read_supports(p, n, levels, measurements.len())?),
        None => None,
    };
    if cfg.algorithm == Method::Oracle && supports.is_none() {
        return Err(CliError::Config(
            "the oracle method needs --support-file with one line of ground-truth indices per segment"
                .into(),
        ));
    }

    let theta = Theta::new(header.sensing_matrix()?, levels)?;
    let halting = cfg.halting();
    let mut results: Vec<Option<RecoveryResult>> = Vec::with_capacity(measurements.len());
    let mut warm: Option<SupportSet> = None;
    let mut failures = 0usize;
    for (t, y) in measurements.iter().enumerate() {
        let attempt = match cfg.algorithm {
            Method::Algo(a) => {
                match &warm {
                    Some(s) => log::info!(
                        "segment {t}: warm start from segment {} support ({} indices)",
                        t - 1,
                        s.len()
                    ),
                    None => log::info!("segment {t}: cold start"),
                }
                a.run(&theta, y, k_total, &halting, warm.as_ref())
            }
            Method::Oracle => oracle_estimate(&theta, y, &supports.as_ref().unwrap()[t]),
        };
        match attempt {
            Ok(r) => {
                warm = Some(r.support.clone());
                results.push(Some(r));
            }
            Err(e) => {
                log::error!("segment {t}: {e}; writing zeros and restarting cold");
                warm = None;
                failures += 1;
                results.push(None);
            }
        }
    }

    let mut text = String::new();
    for r in &results {
        match r {
            Some(r) => {
                for v in &r.signal {
                    text.push_str(&format!("{v}\n"));
                }
            }
            None => text.push_str(&"0\n".repeat(n)),
        }
    }
    write_text(&output, &text)?;
    log::info!(
        "wrote {} samples to {} ({failures} of {} segments failed)",
        results.len() * n,
        output.display(),
        results.len()
    );

    let mut artifacts: Vec<(&str, &Path)> = vec![("reconstruction", output.as_path())];
    if let Some(report_path) = &cfg.report {
        let reference = match &args.reference {
            Some(p) => {
                let samples = ingest::read_samples(p, crate::config::InputFormat::Csv, 1.0)?;
                let (segments, _) = signal::segment(&samples, n);
                if segments.len() < results.len() {
                    return Err(CliError::Data(format!(
                        "reference {} covers {} segments, stream has {}",
                        p.display(),
                        segments.len(),
                        results.len()
                    )));
                }
                Some(segments)
            }
            None => None,
        };
        let record = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.display().to_string());
        let mut csv = String::from(SegmentReport::CSV_HEADER);
        csv.push('\n');
        for (t, r) in results.iter().enumerate() {
            let frame_bits = 64 + stream.frames[t].payload_bits as usize;
            let seg_cr = (n * ORIGINAL_BITS_PER_SAMPLE) as f64 / frame_bits as f64;
            let (prd, prdn, rsnr, iterations) = match (r, &reference) {
                (Some(r), Some(refs)) => (
                    metrics::prd(&refs[t], &r.signal).unwrap_or(f64::NAN),
                    metrics::prdn(&refs[t], &r.signal).unwrap_or(f64::NAN),
                    metrics::rsnr(&refs[t], &r.signal).unwrap_or(f64::NAN),
                    r.iterations,
                ),
                (Some(r), None) => (f64::NAN, f64::NAN, f64::NAN, r.iterations),
                (None, _) => (f64::NAN, f64::NAN, f64::NAN, 0),
            };
            let report = SegmentReport::new(
                cfg.algorithm.name(),
                record.as_str(),
                cfg.seed,
                header.m as usize,
                k_total,
                seg_cr,
                prd,
                prdn,
                rsnr,
                iterations,
            );
            csv.push_str(&report.csv_row());
            csv.push('\n');
        }
        write_text(report_path, &csv)?;
        artifacts.push(("report", report_path.as_path()));
    }
    finish_manifest(&cfg, "decompress", &output, &artifacts)
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

struct MethodMetrics {
    prd: f64,
    prdn: f64,
    rsnr: f64,
    qs: f64,
    iterations: f64,
}

struct PipelineTrial {
    cr: f64,
    per_method: Vec<MethodMetrics>,
}

/// Full codec round trip for one seeded trial at measurement count `m`:
/// measure, encode, decode, reconstruct with every method, score against
/// the original segments.
fn run_pipeline_trial(
    cfg: &RunConfig,
    m: usize,
    methods: &[Method],
    fixed: Option<&[f64]>,
    trial: u64,
) -> Result<PipelineTrial> {
    let matrix_seed = derive_seed(cfg.seed, 2 * trial);
    let samples: Vec<f64> = match fixed {
        Some(s) => s.to_vec(),
        None => signal::synthetic_ecg(
            cfg.synthetic.unwrap_or(10 * cfg.n),
            250.0,
            derive_seed(cfg.seed, 2 * trial + 1),
        ),
    };
    let q = if cfg.matrix.is_sparse() {
        cfg.q.clamp(1, m)
    } else {
        0
    };
    let phi = SensingMatrix::generate(cfg.matrix, m, cfg.n, q, matrix_seed)?;
    let (segments, _) = signal::segment(&samples, cfg.n);
    if segments.is_empty() {
        return Err(CliError::Data(format!(
            "input shorter than one segment of {}",
            cfg.n
        )));
    }
    let used: Vec<f64> = segments.iter().flatten().copied().collect();
    let (stream, stats, _) = experiment::compress_signal(&phi, cfg.levels, cfg.k_total, &samples)?;
    let cr = metrics::compression_ratio(
        segments.len() * cfg.n * ORIGINAL_BITS_PER_SAMPLE,
        stream.serialized_len() * 8,
    )?;

    let k_detail = cfg.k_total - (cfg.n >> cfg.levels);
    let supports: Vec<SupportSet> = segments
        .iter()
        .map(|s| tree_approx_signal(s, cfg.levels, k_detail).map(|(_, sup)| sup))
        .collect::<csecg::Result<_>>()?;

    let halting = cfg.halting();
    let mut per_method = Vec::with_capacity(methods.len());
    for &method in methods {
        let results = experiment::reconstruct_measurements(
            &stream.header,
            &stats.reconstructions,
            method,
            &halting,
            Some(&supports),
        )?;
        let recon: Vec<f64> = results.iter().flat_map(|r| r.signal.iter().copied()).collect();
        let prd = metrics::prd(&used, &recon)?;
        per_method.push(MethodMetrics {
            prd,
            prdn: metrics::prdn(&used, &recon)?,
            rsnr: metrics::rsnr(&used, &recon)?,
            qs: cr / prd,
            iterations: results.iter().map(|r| r.iterations as f64).sum::<f64>()
                / results.len() as f64,
        });
    }
    Ok(PipelineTrial { cr, per_method })
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let output = require_output(&cfg, "benchmark")?;
    let grid = match &args.m_grid {
        Some(s) => parse_usize_list(s, "m-grid")?,
        None => [2, 3, 4, 5].iter().map(|r| r * cfg.k_total).collect(),
    };
    if grid.is_empty() {
        return Err(CliError::Config("empty measurement grid".into()));
    }
    for &m in &grid {
        if m == 0 || m >= cfg.n {
            return Err(CliError::Config(format!(
                "grid measurement count {m} outside 1..{}",
                cfg.n
            )));
        }
    }
    let methods: Vec<Method> = match &args.algorithms {
        Some(s) => s
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<Method>().map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<_>>()?,
        None => Method::ALL.to_vec(),
    };
    if methods.is_empty() {
        return Err(CliError::Config("no methods selected".into()));
    }
    // Real input is fixed across trials (only the matrix redraws);
    // synthetic inputs redraw per trial.
    let fixed: Option<Vec<f64>> = if cfg.synthetic.is_some() {
        None
    } else {
        Some(ingest::load_stream(&cfg)?.0)
    };

    let mut csv = String::from("algorithm,M,K_total,trials,CR,PRD,PRDN,QS,R-SNR,iterations\n");
    for &m in &grid {
        let trials = csecg::par::map_indexed(cfg.trials, |t| {
            run_pipeline_trial(&cfg, m, &methods, fixed.as_deref(), t as u64)
        });
        let mut done = Vec::with_capacity(trials.len());
        for t in trials {
            done.push(t?);
        }
        let count = done.len() as f64;
        let mean_cr = done.iter().map(|t| t.cr).sum::<f64>() / count;
        for (i, &method) in methods.iter().enumerate() {
            let mean = |f: &dyn Fn(&MethodMetrics) -> f64| {
                done.iter().map(|t| f(&t.per_method[i])).sum::<f64>() / count
            };
            let row = format!(
                "{},{m},{},{},{mean_cr},{},{},{},{},{}",
                method.name(),
                cfg.k_total,
                done.len(),
                mean(&|x| x.prd),
                mean(&|x| x.prdn),
                mean(&|x| x.qs),
                mean(&|x| x.rsnr),
                mean(&|x| x.iterations),
            );
            log::info!(
                "M={m} {}: CR {mean_cr:.3}, PRD {:.3}, R-SNR {:.2} dB",
                method.name(),
                mean(&|x| x.prd),
                mean(&|x| x.rsnr)
            );
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    write_text(&output, &csv)?;
    finish_manifest(&cfg, "benchmark", &output, &[("curves", output.as_path())])
}

/// Indices of the `k` largest-magnitude wavelet coefficients, the support
/// definition used for the overlap statistic.
fn top_k_support(x: &[f64], levels: usize, k: usize) -> Result<SupportSet> {
    let coeffs = wavelet::dwt(x, levels)?;
    let data = coeffs.data();
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|&a, &b| {
        data[b]
            .abs()
            .partial_cmp(&data[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    Ok(SupportSet::from_indices(idx, data.len(), levels))
}

pub fn analyze_support(args: &AnalyzeSupportArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let output = require_output(&cfg, "analyze-support")?;
    let (samples, record) = ingest::load_stream(&cfg)?;
    let (segments, dropped) = signal::segment(&samples, cfg.n);
    if dropped > 0 {
        log::warn!("dropped {dropped} trailing samples short of a full segment");
    }
    if segments.len() < 2 {
        return Err(CliError::Data(
            "overlap analysis needs at least two full segments".into(),
        ));
    }
    let supports = segments
        .iter()
        .map(|s| top_k_support(s, cfg.levels, cfg.overlap_k))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("t,overlap\n");
    let mut sum = 0.0;
    for t in 1..supports.len() {
        let v = metrics::support_overlap(&supports[t], &supports[t - 1])?;
        sum += v;
        csv.push_str(&format!("{t},{v}\n"));
    }
    let mean = sum / (supports.len() - 1) as f64;
    csv.push_str(&format!("mean,{mean}\n"));
    write_text(&output, &csv)?;
    log::info!(
        "mean support overlap {mean:.4} over {} transitions ({record}, K={}, N={})",
        supports.len() - 1,
        cfg.overlap_k,
        cfg.n
    );
    finish_manifest(
        &cfg,
        "analyze-support",
        &output,
        &[("overlap", output.as_path())],
    )
}

pub fn energy_curve(args: &EnergyCurveArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let output = require_output(&cfg, "energy-curve")?;
    let (samples, record) = ingest::load_stream(&cfg)?;
    let (segments, _) = signal::segment(&samples, cfg.n);
    if segments.is_empty() {
        return Err(CliError::Data(format!(
            "input shorter than one segment of {}",
            cfg.n
        )));
    }
    let mut mean_curve = vec![0.0; cfg.n];
    for s in &segments {
        let coeffs = wavelet::dwt(s, cfg.levels)?;
        let curve = metrics::residual_energy_curve(coeffs.data())?;
        for (acc, v) in mean_curve.iter_mut().zip(&curve) {
            *acc += v;
        }
    }
    for v in &mut mean_curve {
        *v /= segments.len() as f64;
    }
    let selected = metrics::select_sparsity(&mean_curve, cfg.threshold);
    let mut csv = String::from("K,C_K\n");
    for (i, v) in mean_curve.iter().enumerate() {
        csv.push_str(&format!("{},{v}\n", i + 1));
    }
    write_text(&output, &csv)?;
    println!("selected K = {selected}");
    log::info!(
        "selected K = {selected} at threshold {} over {} segments of {record}",
        cfg.threshold,
        segments.len()
    );
    finish_manifest(
        &cfg,
        "energy-curve",
        &output,
        &[("curve", output.as_path())],
    )
}
