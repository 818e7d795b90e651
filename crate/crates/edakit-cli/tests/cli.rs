//! End-to-end tests of the binary interface: round trips, exit codes,
//! wrapper fidelity against the library, and output file shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edakit::coherence::{coherence_params, sparsity_condition};
use edakit::io::read_values_csv;
use edakit::synth::relative_error;
use edakit::ImpulseResponse;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edakit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn decompose_round_trip_recovers_simulated_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_code(&run_in(dir, &["simulate", "--out-dir", "sim"]), 0);
    assert_code(
        &run_in(
            dir,
            &[
                "decompose",
                "--input",
                "sim/signal.csv",
                "--eta",
                "0.0105",
                "--out-dir",
                "dec",
            ],
        ),
        0,
    );
    let truth = read_values_csv(&dir.join("sim/truth_events.csv")).unwrap();
    let est = read_values_csv(&dir.join("dec/events.csv")).unwrap();
    let err = relative_error(&truth, &est).unwrap();
    assert!(err < 0.05, "round-trip relative error {err}");
}

#[test]
fn missing_required_flag_exits_one_with_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["decompose"]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--input"), "stderr: {stderr}");
    assert!(stderr.to_lowercase().contains("usage"), "stderr: {stderr}");
}

#[test]
fn empty_input_exits_one_with_one_line_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.csv"), "time,value\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["decompose", "--input", "empty.csv", "--out-dir", "out"],
    );
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
}

#[test]
fn unreadable_input_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["decompose", "--input", "nosuch.csv", "--out-dir", "out"],
    );
    assert_code(&out, 1);
}

#[test]
fn iteration_cap_exits_two_but_still_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_code(&run_in(dir, &["simulate", "--out-dir", "sim"]), 0);
    let out = run_in(
        dir,
        &[
            "decompose",
            "--input",
            "sim/signal.csv",
            "--eta",
            "0.0105",
            "--max-iters",
            "5",
            "--out-dir",
            "dec",
        ],
    );
    assert_code(&out, 2);
    for name in [
        "events.csv",
        "baseline_diff.csv",
        "scr_signal.csv",
        "diagnostics.txt",
        "run-manifest.txt",
    ] {
        assert!(dir.join("dec").join(name).is_file(), "missing {name}");
    }
    let diag = fs::read_to_string(dir.join("dec/diagnostics.txt")).unwrap();
    assert!(diag.contains("converged=false"), "diagnostics: {diag}");
}

#[test]
fn coherence_command_matches_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "coherence",
            "--driver-len",
            "240",
            "--events",
            "1",
            "--jumps",
            "0",
            "--out-dir",
            "coh",
        ],
    );
    assert_code(&out, 0);
    let text = fs::read_to_string(tmp.path().join("coh/coherence.txt")).unwrap();
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap_or_else(|| panic!("{key} missing in {text}"))
            .parse()
            .unwrap()
    };
    let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
    let report = coherence_params(&h, 240).unwrap();
    let check = sparsity_condition(&report, 1, 0);
    assert_eq!(get("mu_h"), report.mu_h);
    assert_eq!(get("mu_m"), report.mu_m);
    assert_eq!(get("mu_c"), report.mu_c);
    assert_eq!(get("threshold"), check.threshold);
    assert!(text.contains("regime=bounded-error"), "report: {text}");
}

#[test]
fn default_phase_diagram_grid_writes_twenty_rows() {
    let tmp = tempfile::tempdir().unwrap();
    // Default 5x4 grid of (events, jumps) cells; shrunk instance and
    // iteration budget keep the sweep fast, the shape is what counts.
    let out = run_in(
        tmp.path(),
        &[
            "phase-diagram",
            "--driver-len",
            "162",
            "--ir-duration",
            "10",
            "--trials",
            "1",
            "--max-iters",
            "150",
            "--out-dir",
            "pd",
        ],
    );
    assert_code(&out, 0);
    let text = fs::read_to_string(tmp.path().join("pd/phase_diagram.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "s,c,alpha,trial_count,mean_rel_error,std_rel_error"
    );
    assert_eq!(lines.len(), 21, "header plus 20 grid rows");
}

#[test]
fn simulate_with_clips_plants_events_only_inside_stimulus_windows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("clips.csv"),
        "start_s,end_s,label\n2,5,stimulus\n8,11,silence\n14,17,stimulus\n20,23,silence\n",
    )
    .unwrap();
    assert_code(
        &run_in(
            dir,
            &[
                "simulate",
                "--clips",
                "clips.csv",
                "--driver-len",
                "120",
                "--ir-duration",
                "10",
                "--out-dir",
                "corpus",
            ],
        ),
        0,
    );
    let truth = read_values_csv(&dir.join("corpus/truth_events_000.csv")).unwrap();
    assert_eq!(truth.len(), 120);
    let stim: Vec<std::ops::Range<usize>> = vec![8..20, 56..68];
    let nonzero: Vec<usize> = truth
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(nonzero.len(), 4, "two events per stimulus window");
    for idx in &nonzero {
        assert!(
            stim.iter().any(|w| w.contains(idx)),
            "event at {idx} outside stimulus windows"
        );
    }
}

#[test]
fn evaluate_writes_rocs_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("clips.csv"),
        "start_s,end_s,label\n2,5,stimulus\n8,11,silence\n14,17,stimulus\n20,23,silence\n",
    )
    .unwrap();
    assert_code(
        &run_in(
            dir,
            &[
                "simulate",
                "--clips",
                "clips.csv",
                "--signals",
                "2",
                "--driver-len",
                "120",
                "--ir-duration",
                "10",
                "--out-dir",
                "corpus",
            ],
        ),
        0,
    );
    let out = run_in(
        dir,
        &[
            "evaluate",
            "--signals",
            "corpus/signal_000.csv,corpus/signal_001.csv",
            "--clips",
            "clips.csv",
            "--ir-duration",
            "10",
            "--eta",
            "0.0105",
            "--max-iters",
            "1500",
            "--out-dir",
            "eval",
        ],
    );
    assert_code(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("auc_unconstrained="), "stdout: {stdout}");
    let metrics = fs::read_to_string(dir.join("eval/metrics.txt")).unwrap();
    for key in ["auc_unconstrained=", "auc_nonnegative="] {
        let line = metrics
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("{key} missing in {metrics}"));
        let auc: f64 = line.split('=').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&auc), "{line}");
    }
    for name in ["roc_unconstrained.csv", "roc_nonnegative.csv"] {
        let text = fs::read_to_string(dir.join("eval").join(name)).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\n"), "{name}: {text}");
        assert!(text.lines().count() >= 3, "{name} too short: {text}");
    }
}
