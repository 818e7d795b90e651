//! Acceptance: replaying any run-manifest reproduces the original
//! output directory byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edakit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn assert_ok(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        assert!(entry.file_type().unwrap().is_file());
        out.insert(
            entry.file_name().to_string_lossy().into_owned(),
            fs::read(entry.path()).unwrap(),
        );
    }
    out
}

fn assert_bit_identical(a: &Path, b: &Path, what: &str) {
    let left = dir_contents(a);
    let right = dir_contents(b);
    assert_eq!(
        left.keys().collect::<Vec<_>>(),
        right.keys().collect::<Vec<_>>(),
        "{what}: file sets differ"
    );
    for (name, bytes) in &left {
        assert_eq!(bytes, &right[name], "{what}: {name} differs");
    }
}

#[test]
fn acceptance_09_rerun_from_manifest_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("clips.csv"),
        "start_s,end_s,label\n2,5,stimulus\n8,11,silence\n14,17,stimulus\n20,23,silence\n",
    )
    .unwrap();

    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "simulate",
            vec![
                "simulate",
                "--driver-len",
                "60",
                "--ir-duration",
                "10",
                "--signals",
                "2",
                "--out-dir",
                "sim",
            ],
        ),
        (
            "simulate --clips",
            vec![
                "simulate",
                "--clips",
                "clips.csv",
                "--driver-len",
                "120",
                "--ir-duration",
                "10",
                "--signals",
                "2",
                "--out-dir",
                "corpus",
            ],
        ),
        (
            "decompose",
            vec![
                "decompose",
                "--input",
                "sim/signal_000.csv",
                "--ir-duration",
                "10",
                "--eta",
                "0.0105",
                "--out-dir",
                "dec",
            ],
        ),
        (
            "coherence",
            vec![
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
        ),
        (
            "phase-diagram",
            vec![
                "phase-diagram",
                "--s-values",
                "2,4",
                "--c-values",
                "3",
                "--trials",
                "2",
                "--driver-len",
                "60",
                "--ir-duration",
                "10",
                "--max-iters",
                "800",
                "--out-dir",
                "pd",
            ],
        ),
        (
            "evaluate",
            vec![
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
        ),
    ];

    let mut replayed = 0;
    for (label, args) in &runs {
        assert_ok(&run_in(dir, args));
        let out_dir = args.last().unwrap().to_string();
        let manifest = format!("{out_dir}/run-manifest.txt");
        let replay_dir = format!("{out_dir}_replay");
        assert_ok(&run_in(
            dir,
            &["rerun", "--manifest", &manifest, "--out-dir", &replay_dir],
        ));
        assert_bit_identical(&dir.join(&out_dir), &dir.join(&replay_dir), label);
        replayed += 1;
    }
    println!(
        "ACCEPTANCE 9: PASS — {replayed} command manifests replayed into fresh directories with \
         byte-identical outputs (including the manifests themselves)"
    );
}
