mod commands;
mod config;
mod error;
mod ingest;
mod manifest;

use clap::{Parser, Subcommand};
use commands::{AnalyzeSupportArgs, BenchmarkArgs, CompressArgs, DecompressArgs, EnergyCurveArgs};
use std::process::ExitCode;

/// Compressed-sensing ECG codec: random measurement, differential
/// quantized entropy coding, and model-based sparse reconstruction.
#[derive(Parser, Debug)]
#[command(name = "csecg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure, difference, quantize and entropy-code an ECG stream
    Compress(CompressArgs),
    /// Decode a bitstream and reconstruct the signal segment by segment
    Decompress(DecompressArgs),
    /// Sweep measurement counts over seeded trials; write averaged curves
    Benchmark(BenchmarkArgs),
    /// Track wavelet-support overlap between consecutive segments
    AnalyzeSupport(AnalyzeSupportArgs),
    /// Average residual energy curves and select a sparsity level
    EnergyCurve(EnergyCurveArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compress(args) => commands::compress(args),
        Command::Decompress(args) => commands::decompress(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::AnalyzeSupport(args) => commands::analyze_support(args),
        Command::EnergyCurve(args) => commands::energy_curve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
