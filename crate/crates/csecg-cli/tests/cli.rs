//! End-to-end runs of the installed binary: every subcommand, the exit
//! codes, and the determinism guarantee.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csecg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, expected: i32) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "stderr:\n{}",
        stderr_of(out)
    );
}

fn path_str(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read_csv_column(path: &Path, column: &str) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == column)
        .unwrap_or_else(|| panic!("no column {column} in {header:?}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_owned()).collect()
}

/// Compresses a short synthetic record and returns (bitstream, original
/// CSV, supports file) paths inside `dir`.
fn compress_fixture(dir: &tempfile::TempDir) -> (String, String, String) {
    let stream = path_str(dir, "a.cseb");
    let orig = path_str(dir, "a.orig.csv");
    let sup = path_str(dir, "a.sup");
    let out = run(&[
        "compress",
        "--synthetic",
        "2560",
        "--output",
        &stream,
        "--emit-input",
        &orig,
        "--emit-supports",
        &sup,
    ]);
    assert_code(&out, 0);
    (stream, orig, sup)
}

#[test]
fn compress_is_deterministic_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let first = path_str(&dir, "r1.cseb");
    let second = path_str(&dir, "r2.cseb");
    let out = run(&["compress", "--synthetic", "2560", "--output", &first]);
    assert_code(&out, 0);
    let err = stderr_of(&out);
    assert!(err.contains("achieved CR"), "{err}");
    let out = run(&["compress", "--synthetic", "2560", "--output", &second]);
    assert_code(&out, 0);
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap(),
        "same config must give byte-identical streams"
    );

    let manifest = std::fs::read_to_string(format!("{first}.manifest")).unwrap();
    assert!(manifest.contains("command = compress"), "{manifest}");
    assert!(manifest.contains("seed = 1"), "{manifest}");
    assert!(manifest.contains("sha256="), "{manifest}");
}

#[test]
fn achieved_cr_grows_as_measurements_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let mut crs = Vec::new();
    for m in ["64", "96", "128"] {
        let output = path_str(&dir, &format!("m{m}.cseb"));
        let out = run(&[
            "compress", "--synthetic", "12800", "--m", m, "--output", &output,
        ]);
        assert_code(&out, 0);
        let err = stderr_of(&out);
        let line = err
            .lines()
            .find(|l| l.contains("achieved CR"))
            .unwrap_or_else(|| panic!("no CR line in {err}"));
        let cr: f64 = line
            .split("achieved CR ")
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        crs.push(cr);
    }
    assert!(
        crs[0] > crs[1] && crs[1] > crs[2],
        "CR should fall as M rises: {crs:?}"
    );
}

#[test]
fn decompress_roundtrip_reports_quality_and_beats_plain_iht() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, orig, _) = compress_fixture(&dir);

    let mut mean_prd = Vec::new();
    for alg in ["mmb-iht", "iht"] {
        let rec = path_str(&dir, &format!("{alg}.csv"));
        let rep = path_str(&dir, &format!("{alg}.rep.csv"));
        let out = run(&[
            "decompress",
            "--input",
            &stream,
            "--output",
            &rec,
            "--report",
            &rep,
            "--reference",
            &orig,
            "--algorithm",
            alg,
        ]);
        assert_code(&out, 0);
        let err = stderr_of(&out);
        assert!(
            err.contains("segment 1: warm start from segment 0 support"),
            "{err}"
        );
        let samples = std::fs::read_to_string(&rec).unwrap().lines().count();
        assert_eq!(samples, 2560);

        let prds: Vec<f64> = read_csv_column(Path::new(&rep), "PRD")
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(prds.len(), 10);
        assert!(prds.iter().all(|p| p.is_finite()), "{prds:?}");
        mean_prd.push(prds.iter().sum::<f64>() / prds.len() as f64);
    }
    assert!(
        mean_prd[0] < mean_prd[1],
        "model-based IHT should beat plain IHT on the same stream: {mean_prd:?}"
    );
}

#[test]
fn oracle_needs_a_support_file_and_works_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, orig, sup) = compress_fixture(&dir);
    let rec = path_str(&dir, "oracle.csv");

    let out = run(&[
        "decompress", "--input", &stream, "--output", &rec, "--algorithm", "oracle",
    ]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("support"), "{}", stderr_of(&out));

    let rep = path_str(&dir, "oracle.rep.csv");
    let out = run(&[
        "decompress",
        "--input",
        &stream,
        "--output",
        &rec,
        "--report",
        &rep,
        "--reference",
        &orig,
        "--algorithm",
        "oracle",
        "--support-file",
        &sup,
    ]);
    assert_code(&out, 0);
    let prds: Vec<f64> = read_csv_column(Path::new(&rep), "PRD")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let mean = prds.iter().sum::<f64>() / prds.len() as f64;
    assert!(mean < 50.0, "oracle mean PRD {mean}");
}

#[test]
fn corrupted_streams_exit_4_naming_the_frame() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _, _) = compress_fixture(&dir);
    let bytes = std::fs::read(&stream).unwrap();
    let rec = path_str(&dir, "x.csv");

    let truncated = path_str(&dir, "trunc.cseb");
    std::fs::write(&truncated, &bytes[..2500]).unwrap();
    let out = run(&["decompress", "--input", &truncated, "--output", &rec]);
    assert_code(&out, 4);
    assert!(stderr_of(&out).contains("frame"), "{}", stderr_of(&out));

    let flipped = path_str(&dir, "flip.cseb");
    let mut copy = bytes.clone();
    copy[2360] ^= 0xff; // inside the first frame's payload
    std::fs::write(&flipped, &copy).unwrap();
    let out = run(&["decompress", "--input", &flipped, "--output", &rec]);
    assert_code(&out, 4);
    assert!(
        stderr_of(&out).contains("CRC mismatch in frame 0"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn segment_failures_are_logged_without_aborting() {
    // Plain CoSaMP's merged support (3K = 102) exceeds M = 96, so its
    // least-squares step fails on most segments; the run must still
    // complete with zero-filled segments.
    let dir = tempfile::tempdir().unwrap();
    let (stream, _, _) = compress_fixture(&dir);
    let rec = path_str(&dir, "cosamp.csv");
    let out = run(&[
        "decompress", "--input", &stream, "--output", &rec, "--algorithm", "cosamp",
    ]);
    assert_code(&out, 0);
    let err = stderr_of(&out);
    assert!(err.contains("writing zeros"), "{err}");
    assert_eq!(std::fs::read_to_string(&rec).unwrap().lines().count(), 2560);
}

#[test]
fn benchmark_rsnr_does_not_fall_with_more_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path_str(&dir, "bench.csv");
    let out = run(&[
        "benchmark",
        "--synthetic",
        "1280",
        "--trials",
        "3",
        "--m-grid",
        "68,170",
        "--algorithms",
        "mmb-iht",
        "--output",
        &csv,
    ]);
    assert_code(&out, 0);
    let rsnr: Vec<f64> = read_csv_column(Path::new(&csv), "R-SNR")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(rsnr.len(), 2);
    assert!(rsnr[1] >= rsnr[0], "{rsnr:?}");
}

#[test]
fn white_noise_overlap_matches_the_null_model() {
    // Independent random K-subsets of N indices intersect in K²/N on
    // average, so the mean overlap should sit near K/N = 225/2048.
    let dir = tempfile::tempdir().unwrap();
    let noise = dir.path().join("noise.csv");
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut text = String::new();
    for _ in 0..2048 * 40 {
        let v = (next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(&noise, text).unwrap();

    let csv = path_str(&dir, "ov.csv");
    let out = run(&[
        "analyze-support",
        "--input",
        noise.to_str().unwrap(),
        "--segment-length",
        "2048",
        "--k-total",
        "225",
        "--overlap-k",
        "225",
        "--output",
        &csv,
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mean: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mean,"))
        .unwrap()
        .parse()
        .unwrap();
    let null = 225.0 / 2048.0;
    assert!((mean - null).abs() < 0.03, "mean {mean} vs null {null}");
}

#[test]
fn energy_curve_selects_a_plausible_sparsity() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path_str(&dir, "curve.csv");
    let out = run(&[
        "energy-curve", "--synthetic", "2560", "--output", &csv,
    ]);
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let selected: usize = stdout
        .lines()
        .find_map(|l| l.strip_prefix("selected K = "))
        .unwrap_or_else(|| panic!("no selection in {stdout}"))
        .parse()
        .unwrap();
    assert!((8..=90).contains(&selected), "K = {selected}");

    let curve: Vec<f64> = read_csv_column(Path::new(&csv), "C_K")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(curve.len(), 256);
    assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(curve[255].abs() < 1e-12);
}

#[test]
fn bad_input_rows_exit_3_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "1.0\n2.0\noops\n").unwrap();
    let out = run(&[
        "compress",
        "--input",
        csv.to_str().unwrap(),
        "--output",
        &path_str(&dir, "x.cseb"),
    ]);
    assert_code(&out, 3);
    assert!(stderr_of(&out).contains("row 3"), "{}", stderr_of(&out));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "m = 64\nseed = 5\nsynthetic = 2560\n").unwrap();
    let output = path_str(&dir, "c.cseb");
    let out = run(&[
        "compress",
        "--config",
        config.to_str().unwrap(),
        "--m",
        "96",
        "--output",
        &output,
    ]);
    assert_code(&out, 0);
    let manifest = std::fs::read_to_string(format!("{output}.manifest")).unwrap();
    assert!(manifest.contains("m = 96"), "{manifest}");
    assert!(manifest.contains("seed = 5"), "{manifest}");
}

#[test]
fn missing_required_paths_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compress", "--synthetic", "2560"]);
    assert_code(&out, 2);
    let out = run(&["decompress", "--output", &path_str(&dir, "x.csv")]);
    assert_code(&out, 2);
    let out = run(&["compress", "--output", &path_str(&dir, "x.cseb")]);
    assert_code(&out, 2); // neither --input nor --synthetic
}
