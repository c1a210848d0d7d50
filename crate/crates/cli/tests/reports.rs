use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use phasecomp_cli::report::{render_report, ReportError};
use phasecomp_cli::{parse_config, read_report, run, write_csv, write_report, Payload, Report};
use phasecomp_core::nogo::{Evidence, Verdict};

fn report_for(args: &str) -> Report {
    let argv = std::iter::once("phasecomp").chain(args.split_whitespace());
    run(&parse_config(argv).unwrap()).unwrap()
}

#[test]
fn compress_demo_matches_prediction() {
    let report = report_for(&format!(
        "compress-demo --phi1 {} --phi2 {} --outcome 0",
        PI / 2.0,
        PI
    ));
    let Payload::CompressDemo(r) = report.results else {
        panic!("wrong payload")
    };
    assert_eq!(r.outcome, 0);
    assert!((r.probability - 0.5).abs() < 1e-12);
    assert!((r.fidelity_to_expected - 1.0).abs() < 1e-12);
    // sin(π/4)|0⟩ − cos(π/4)|1⟩ up to a global phase.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (r.retrieved[0], r.retrieved[1]);
    assert!(((a.re * a.re + a.im * a.im).sqrt() - s).abs() < 1e-12);
    assert!(((b.re * b.re + b.im * b.im).sqrt() - s).abs() < 1e-12);
    let ratio_re = (b.re * a.re + b.im * a.im) / (a.re * a.re + a.im * a.im);
    assert!((ratio_re + 1.0).abs() < 1e-12);
}

#[test]
fn lemma1_report_values() {
    let Payload::Lemma1(r) = report_for("lemma1 --d 2 --n 2").results else {
        panic!("wrong payload")
    };
    assert!((r.det_abs - 16.0).abs() < 1e-9);
    assert!((r.oracle_det_abs - 16.0).abs() < 1e-9);
    assert!(r.passes && r.nonsingular);
}

#[test]
fn nogo_report_values() {
    let Payload::Nogo(r) = report_for("nogo --d 2 --n 2 --m 1 --p 0").results else {
        panic!("wrong payload")
    };
    assert_eq!(r.witness.verdict, Verdict::Infeasible);
    match r.witness.evidence {
        Evidence::GramRank { gram_rank, available_rank, .. } => {
            assert_eq!((gram_rank, available_rank), (4, 2));
        }
        other => panic!("unexpected evidence {other:?}"),
    }
    assert_eq!(r.identity_support.verdict, Verdict::FeasibleNotExcluded);
    assert_eq!(r.compressed_support.unwrap().verdict, Verdict::Infeasible);
}

#[test]
fn teleport_demo_recovers_pair() {
    let Payload::TeleportDemo(r) = report_for("teleport-demo --seed 3").results else {
        panic!("wrong payload")
    };
    assert_eq!(r.branches.len(), 4);
    assert!((r.worst_fidelity - 1.0).abs() < 1e-12);
    for b in &r.branches {
        assert!((b.probability - 0.25).abs() < 1e-12);
    }
}

#[test]
fn residual_report_flags_identity() {
    let Payload::Residual(r) = report_for("residual --d 2 --n 2 --m 1").results else {
        panic!("wrong payload")
    };
    assert_eq!(r.sample_kind, "grid");
    assert_eq!(r.sample_count, 4);
    assert!(r.residual > 0.9 && !r.precondition_met);
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        "compress-demo --outcome sample --seed 7",
        "phase-loss --points 9",
        "teleport-demo",
        "lemma1 --d 3 --n 2",
        "nogo --d 3 --n 2 --m 1 --p 1",
        "residual --unitary random --samples 5",
        "optimize --budget 200 --restarts 2 --samples 8 --record-timing",
    ]
    .iter()
    .enumerate()
    {
        let report = report_for(args);
        let path = dir.path().join(format!("{i}.json"));
        write_report(&report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, report, "{args}");
        assert!(render_report(&back).ends_with("}\n"));
    }
}

#[test]
fn echoed_config_reproduces_payload() {
    let report = report_for("residual --unitary random --samples 12 --seed 99");
    let again = run(&report.config.to_config()).unwrap();
    assert_eq!(render_report(&again), render_report(&report));
}

#[test]
fn timing_only_when_requested() {
    let plain = report_for("lemma1");
    assert!(plain.provenance.wall_time_ms.is_none());
    assert!(!render_report(&plain).contains("wall_time_ms"));
    let timed = report_for("lemma1 --record-timing");
    assert!(timed.provenance.wall_time_ms.is_some());
    assert_eq!(plain.results, timed.results);
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (headers, rows)
}

#[test]
fn phase_loss_csv_shows_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let report = report_for("phase-loss --points 41");
    write_csv(&report, &path).unwrap();
    let (headers, rows) = read_csv(&path);
    assert_eq!(headers, ["phi1", "fidelity"]);
    assert_eq!(rows.len(), 41);
    for (k, row) in rows.iter().enumerate() {
        if k % 20 == 0 {
            assert!((row[1] - 1.0).abs() < 1e-12, "row {k}: {row:?}");
        } else {
            assert!(row[1] < 1.0 - 1e-6, "row {k}: {row:?}");
        }
    }
    assert!((rows[10][1]).abs() < 1e-12, "pi/2 separates phi2 = 0 and pi");
    let Payload::PhaseLoss(r) = &report.results else {
        panic!("wrong payload")
    };
    assert_eq!(r.lost_at, vec![0.0, PI, 2.0 * PI]);
}

#[test]
fn optimizer_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let report = report_for("optimize --budget 300 --restarts 2 --samples 8");
    write_csv(&report, &path).unwrap();
    let (headers, rows) = read_csv(&path);
    assert_eq!(headers, ["iteration", "best"]);
    let Payload::Optimize(r) = &report.results else {
        panic!("wrong payload")
    };
    assert_eq!(rows.len(), r.trace.len());
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0] && w[0][1] <= w[1][1]));
}

#[test]
fn csv_refused_without_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("none.csv");
    let err = write_csv(&report_for("lemma1"), &path).unwrap_err();
    assert!(matches!(err, ReportError::NoTable(_)));
    assert!(!path.exists());
}

#[test]
fn binary_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_phasecomp");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.json"));
        let status = Command::new(bin)
            .args(["nogo", "--d", "2", "--n", "2", "--m", "1", "--p", "0", "--output"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn binary_reports_range_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_phasecomp"))
        .args(["lemma1", "--d", "7", "--n", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("`d`") && stderr.contains("2..5"), "{stderr}");
}

#[test]
fn binary_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "command = \"lemma1\"\nd = 2\nn = 2\ntol = 1e-8\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phasecomp"))
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.results.command(), "lemma1");
    assert_eq!(report.provenance.seed, 0);
}
