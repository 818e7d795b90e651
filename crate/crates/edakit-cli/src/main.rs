//! `edakit`: batch front end for sparse decomposition of
//! electrodermal-activity recordings.
//!
//! Five commands cover the pipeline — `simulate`, `decompose`,
//! `coherence`, `phase-diagram`, `evaluate` — and every run writes a
//! `run-manifest.txt` capturing the command and all parameters except
//! the output directory. `rerun` replays such a manifest and, because
//! every code path is deterministic, reproduces the original outputs
//! byte for byte.
//!
//! Exit codes: 0 success, 1 usage or runtime error (one-line
//! diagnostic on stderr), 2 for a decomposition that stopped at the
//! iteration cap (its outputs are still written).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use edakit::coherence::{coherence_params, recovery_certificate, RecoveryRegime};
use edakit::experiments::{
    run_detection_experiment, run_phase_diagram, synth_detection_corpus, Aggregation, CorpusConfig,
    DetectionConfig,
};
use edakit::io::{
    read_clips_csv, read_signal_csv, write_phase_diagram_csv, write_roc_csv, write_signal_csv,
    write_values_csv,
};
use edakit::operators::downsample;
use edakit::solver::{kkt_report, solve};
use edakit::synth::{compose_raw, RawOptions, SynthConfig};
use edakit::{ImpulseResponse, SolverConfig};

#[derive(Parser)]
#[command(
    name = "edakit",
    version,
    about = "Sparse decomposition of electrodermal-activity signals"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic recordings with stored ground truth.
    Simulate(SimulateArgs),
    /// Decompose a recording into events, baseline steps, and noise.
    Decompose(DecomposeArgs),
    /// Report dictionary coherence and the certified sparsity budget.
    Coherence(CoherenceArgs),
    /// Sweep recovery error over a grid of sparsity levels.
    PhaseDiagram(PhaseDiagramArgs),
    /// Score windowed event detection against labeled clips.
    Evaluate(EvaluateArgs),
    /// Replay a run-manifest into a fresh output directory.
    Rerun(RerunArgs),
}

/// Impulse-response and sampling flags shared by every command.
#[derive(Args)]
struct ImpulseArgs {
    /// Slow time constant of the canonical response, seconds.
    #[arg(long, default_value_t = 10.0)]
    tau1: f64,
    /// Fast time constant of the canonical response, seconds.
    #[arg(long, default_value_t = 1.0)]
    tau2: f64,
    /// Length of the sampled response, seconds (half-open grid).
    #[arg(long = "ir-duration", default_value_t = 40.0)]
    ir_duration: f64,
    /// Sampling rate of the response and the recordings, Hz.
    #[arg(long = "sample-rate", default_value_t = 4.0)]
    sample_rate: f64,
}

impl ImpulseArgs {
    fn build(&self, rate: f64) -> Result<ImpulseResponse, String> {
        ImpulseResponse::biexponential(self.tau1, self.tau2, rate, self.ir_duration)
            .map_err(|e| e.to_string())
    }

    fn record(&self, manifest: &mut Manifest) {
        manifest.push("tau1", self.tau1);
        manifest.push("tau2", self.tau2);
        manifest.push("ir-duration", self.ir_duration);
        manifest.push("sample-rate", self.sample_rate);
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    impulse: ImpulseArgs,
    /// Driver length (number of candidate event slots).
    #[arg(long = "driver-len", default_value_t = 240)]
    driver_len: usize,
    /// Number of planted events (ignored when --clips is given).
    #[arg(long, default_value_t = 5)]
    events: usize,
    /// Number of baseline jumps.
    #[arg(long, default_value_t = 2)]
    jumps: usize,
    /// l1 budget of the dense perturbation added to the events.
    #[arg(long = "event-deviation", default_value_t = 0.01)]
    event_deviation: f64,
    /// l1 budget of the dense perturbation added to the baseline steps.
    #[arg(long = "jump-deviation", default_value_t = 0.01)]
    jump_deviation: f64,
    /// l2 budget of the differenced-domain noise; the raw recording
    /// receives half of it.
    #[arg(long = "noise-norm", default_value_t = 0.01)]
    noise_norm: f64,
    /// Scale applied to the baseline-step component.
    #[arg(long = "baseline-scale", default_value_t = 0.01)]
    baseline_scale: f64,
    /// Tonic level the baseline integrates from.
    #[arg(long = "baseline-level", default_value_t = 10.0)]
    baseline_level: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of recordings to generate.
    #[arg(long, default_value_t = 1)]
    signals: usize,
    /// Labeled clips CSV; when given, events are planted only inside
    /// its stimulus windows.
    #[arg(long)]
    clips: Option<PathBuf>,
    /// Events planted per stimulus window (only with --clips).
    #[arg(long = "events-per-window", default_value_t = 2)]
    events_per_window: usize,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Recording CSV (optional header; one or two columns, the last
    /// one holding the value).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    impulse: ImpulseArgs,
    /// Residual budget of the recovery program.
    #[arg(long, default_value_t = 0.14)]
    eta: f64,
    /// Constrain the recovered driver to be nonnegative.
    #[arg(long)]
    nonneg: bool,
    /// Block-mean downsample the recording to this rate first.
    #[arg(long = "downsample-to-hz")]
    downsample_to_hz: Option<f64>,
    #[arg(long = "max-iters", default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long = "tol-rel", default_value_t = 1e-6)]
    tol_rel: f64,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CoherenceArgs {
    #[command(flatten)]
    impulse: ImpulseArgs,
    /// Driver length the dictionary is built for.
    #[arg(long = "driver-len", default_value_t = 240)]
    driver_len: usize,
    /// Event count to certify (requires --jumps).
    #[arg(long, requires = "jumps")]
    events: Option<usize>,
    /// Baseline-jump count to certify (requires --events).
    #[arg(long, requires = "events")]
    jumps: Option<usize>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[command(flatten)]
    impulse: ImpulseArgs,
    #[arg(long = "driver-len", default_value_t = 240)]
    driver_len: usize,
    #[arg(long = "event-deviation", default_value_t = 0.01)]
    event_deviation: f64,
    #[arg(long = "jump-deviation", default_value_t = 0.01)]
    jump_deviation: f64,
    #[arg(long = "noise-norm", default_value_t = 0.01)]
    noise_norm: f64,
    #[arg(long = "baseline-scale", default_value_t = 0.01)]
    baseline_scale: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Event counts of the grid rows.
    #[arg(long = "s-values", value_delimiter = ',', default_values_t = [5, 25, 45, 65, 85])]
    s_values: Vec<usize>,
    /// Jump counts of the grid columns.
    #[arg(long = "c-values", value_delimiter = ',', default_values_t = [5, 50, 100, 200])]
    c_values: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Residual budget per cell as a multiple of the noise norm.
    #[arg(long = "eta-factor", default_value_t = 1.05)]
    eta_factor: f64,
    #[arg(long = "max-iters", default_value_t = 4_000)]
    max_iters: usize,
    #[arg(long = "tol-rel", default_value_t = 1e-5)]
    tol_rel: f64,
    /// Run the full-scale sweep (events up to 225, jumps up to 350,
    /// 30 trials) instead of the desk-scale defaults. Hours, not
    /// minutes; overrides --s-values, --c-values, and --trials.
    #[arg(long)]
    full: bool,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Recording CSVs, comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true)]
    signals: Vec<PathBuf>,
    /// Labeled clips CSV (start_s,end_s,label).
    #[arg(long)]
    clips: PathBuf,
    #[command(flatten)]
    impulse: ImpulseArgs,
    /// Residual budget of both decomposition variants.
    #[arg(long, default_value_t = 0.14)]
    eta: f64,
    /// Window score rule: clamped-sum, raw-sum, or abs-sum.
    #[arg(long, default_value = "clamped-sum")]
    aggregation: Aggregation,
    /// Block-mean downsample each recording to this rate first.
    #[arg(long = "downsample-to-hz")]
    downsample_to_hz: Option<f64>,
    #[arg(long = "max-iters", default_value_t = 2_500)]
    max_iters: usize,
    #[arg(long = "tol-rel", default_value_t = 1e-4)]
    tol_rel: f64,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    /// Manifest written by a previous run.
    #[arg(long)]
    manifest: PathBuf,
    /// Fresh output directory for the replayed run.
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

/// Ordered key=value record of one invocation. Keys equal the long
/// flag names so a manifest can be replayed verbatim; the output
/// directory is deliberately not recorded.
struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(subcommand: &str) -> Self {
        Self {
            lines: vec![("subcommand".into(), subcommand.into())],
        }
    }

    fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn push_if(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.push(key, v);
        }
    }

    fn push_flag(&mut self, key: &str, on: bool) {
        if on {
            self.push(key, "true");
        }
    }

    fn write(&self, dir: &Path) -> Result<(), String> {
        let mut text = String::new();
        for (k, v) in &self.lines {
            text.push_str(k);
            text.push('=');
            text.push_str(v);
            text.push('\n');
        }
        fs::write(dir.join("run-manifest.txt"), text)
            .map_err(|e| format!("writing run-manifest.txt: {e}"))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))
}

fn lib(e: edakit::Error) -> String {
    e.to_string()
}

fn join<T: Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Decompose(args) => cmd_decompose(args),
        Cmd::Coherence(args) => cmd_coherence(args),
        Cmd::PhaseDiagram(args) => cmd_phase_diagram(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Rerun(args) => cmd_rerun(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, String> {
    let rate = args.impulse.sample_rate;
    let h = args.impulse.build(rate)?;
    ensure_dir(&args.out_dir)?;

    let mut manifest = Manifest::new("simulate");
    args.impulse.record(&mut manifest);
    manifest.push("driver-len", args.driver_len);
    manifest.push("events", args.events);
    manifest.push("jumps", args.jumps);
    manifest.push("event-deviation", args.event_deviation);
    manifest.push("jump-deviation", args.jump_deviation);
    manifest.push("noise-norm", args.noise_norm);
    manifest.push("baseline-scale", args.baseline_scale);
    manifest.push("baseline-level", args.baseline_level);
    manifest.push("seed", args.seed);
    manifest.push("signals", args.signals);
    manifest.push_if("clips", args.clips.as_ref().map(|p| p.display()));
    if args.clips.is_some() {
        manifest.push("events-per-window", args.events_per_window);
    }

    if let Some(clips_path) = &args.clips {
        let clips = read_clips_csv(clips_path).map_err(lib)?;
        let cfg = CorpusConfig {
            signals: args.signals,
            driver_len: args.driver_len,
            events_per_window: args.events_per_window,
            jumps: args.jumps,
            noise_norm: args.noise_norm,
            baseline_scale: args.baseline_scale,
            baseline_level: args.baseline_level,
            seed: args.seed,
        };
        let corpus = synth_detection_corpus(&h, &clips, &cfg).map_err(lib)?;
        for (i, item) in corpus.iter().enumerate() {
            write_signal_csv(
                &args.out_dir.join(format!("signal_{i:03}.csv")),
                &item.signal,
            )
            .map_err(lib)?;
            write_values_csv(
                &args.out_dir.join(format!("truth_events_{i:03}.csv")),
                &item.x_true,
                rate,
            )
            .map_err(lib)?;
        }
        manifest.write(&args.out_dir)?;
        println!(
            "wrote {} labeled recording(s) of {} samples to {}",
            corpus.len(),
            corpus[0].signal.len(),
            args.out_dir.display()
        );
        return Ok(0);
    }

    let opts = RawOptions {
        baseline_level: args.baseline_level,
        event_support: None,
    };
    for i in 0..args.signals {
        let cfg = SynthConfig {
            h: h.clone(),
            driver_len: args.driver_len,
            events: args.events,
            jumps: args.jumps,
            event_deviation: args.event_deviation,
            jump_deviation: args.jump_deviation,
            noise_norm: args.noise_norm,
            baseline_scale: args.baseline_scale,
            seed: args.seed + i as u64,
        };
        let inst = compose_raw(&cfg, &opts).map_err(lib)?;
        let (signal_name, events_name, baseline_name) = if args.signals == 1 {
            (
                "signal.csv".to_string(),
                "truth_events.csv".to_string(),
                "truth_baseline_diff.csv".to_string(),
            )
        } else {
            (
                format!("signal_{i:03}.csv"),
                format!("truth_events_{i:03}.csv"),
                format!("truth_baseline_diff_{i:03}.csv"),
            )
        };
        write_signal_csv(&args.out_dir.join(signal_name), &inst.y).map_err(lib)?;
        write_values_csv(&args.out_dir.join(events_name), inst.x_true.values(), rate)
            .map_err(lib)?;
        write_values_csv(
            &args.out_dir.join(baseline_name),
            inst.db_true.values(),
            rate,
        )
        .map_err(lib)?;
    }
    manifest.write(&args.out_dir)?;
    println!(
        "wrote {} recording(s) of {} samples to {}",
        args.signals,
        args.driver_len + h.len() - 1,
        args.out_dir.display()
    );
    Ok(0)
}

fn cmd_decompose(args: DecomposeArgs) -> Result<u8, String> {
    let working_rate = args.downsample_to_hz.unwrap_or(args.impulse.sample_rate);
    let h = args.impulse.build(working_rate)?;
    let y = read_signal_csv(&args.input, args.impulse.sample_rate).map_err(lib)?;
    let working = match args.downsample_to_hz {
        Some(hz) => downsample(&y, hz).map_err(lib)?,
        None => y,
    };

    let mut cfg = SolverConfig::new(args.eta);
    cfg.nonnegative = args.nonneg;
    cfg.max_iters = args.max_iters;
    cfg.tol_rel = args.tol_rel;
    let res = solve(&working, &h, &cfg).map_err(lib)?;
    let kkt = kkt_report(&res, &working, &h, &cfg).map_err(lib)?;

    ensure_dir(&args.out_dir)?;
    write_values_csv(&args.out_dir.join("events.csv"), &res.x_hat, working_rate).map_err(lib)?;
    write_values_csv(
        &args.out_dir.join("baseline_diff.csv"),
        &res.u_hat,
        working_rate,
    )
    .map_err(lib)?;
    write_signal_csv(&args.out_dir.join("scr_signal.csv"), &res.scr_signal).map_err(lib)?;

    let mut diag = String::new();
    for (k, v) in [
        ("converged", res.converged.to_string()),
        ("iterations", res.iterations.to_string()),
        ("residual_norm", res.residual_norm.to_string()),
        ("objective", res.objective.to_string()),
        ("eta", args.eta.to_string()),
        ("feasibility_gap", kkt.feasibility_gap.to_string()),
        ("stationarity", kkt.stationarity.to_string()),
        (
            "complementary_slackness",
            kkt.complementary_slackness.to_string(),
        ),
        ("dual_norm", kkt.dual_norm.to_string()),
    ] {
        diag.push_str(&format!("{k}={v}\n"));
    }
    fs::write(args.out_dir.join("diagnostics.txt"), diag)
        .map_err(|e| format!("writing diagnostics.txt: {e}"))?;

    let mut manifest = Manifest::new("decompose");
    manifest.push("input", args.input.display());
    args.impulse.record(&mut manifest);
    manifest.push("eta", args.eta);
    manifest.push_flag("nonneg", args.nonneg);
    manifest.push_if("downsample-to-hz", args.downsample_to_hz);
    manifest.push("max-iters", args.max_iters);
    manifest.push("tol-rel", args.tol_rel);
    manifest.write(&args.out_dir)?;

    println!(
        "converged={} iterations={} residual_norm={} objective={}",
        res.converged, res.iterations, res.residual_norm, res.objective
    );
    Ok(if res.converged { 0 } else { 2 })
}

fn cmd_coherence(args: CoherenceArgs) -> Result<u8, String> {
    let h = args.impulse.build(args.impulse.sample_rate)?;
    let report = coherence_params(&h, args.driver_len).map_err(lib)?;

    let mut lines = vec![
        format!("mu_h={}", report.mu_h),
        format!("mu_m={}", report.mu_m),
        format!("mu_c={}", report.mu_c),
    ];
    let norm_min = report
        .column_norms
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let norm_max = report.column_norms.iter().cloned().fold(0.0f64, f64::max);
    if let (Some(events), Some(jumps)) = (args.events, args.jumps) {
        let cert = recovery_certificate(&report, events, jumps);
        lines.push(format!("threshold={}", cert.threshold));
        lines.push(format!("events={events}"));
        lines.push(format!("jumps={jumps}"));
        lines.push(format!(
            "regime={}",
            match cert.regime {
                RecoveryRegime::BoundedError => "bounded-error",
                RecoveryRegime::NoGuarantee => "no-guarantee",
            }
        ));
    } else {
        let cert = recovery_certificate(&report, 0, 0);
        lines.push(format!("threshold={}", cert.threshold));
    }
    lines.push(format!("column_norm_min={norm_min}"));
    lines.push(format!("column_norm_max={norm_max}"));
    let text = lines.join("\n") + "\n";
    print!("{text}");

    ensure_dir(&args.out_dir)?;
    fs::write(args.out_dir.join("coherence.txt"), &text)
        .map_err(|e| format!("writing coherence.txt: {e}"))?;

    let mut manifest = Manifest::new("coherence");
    args.impulse.record(&mut manifest);
    manifest.push("driver-len", args.driver_len);
    manifest.push_if("events", args.events);
    manifest.push_if("jumps", args.jumps);
    manifest.write(&args.out_dir)?;
    Ok(0)
}

fn cmd_phase_diagram(args: PhaseDiagramArgs) -> Result<u8, String> {
    let h = args.impulse.build(args.impulse.sample_rate)?;
    let (s_values, c_values, trials) = if args.full {
        (
            (5..=225).step_by(20).collect::<Vec<_>>(),
            vec![5, 50, 100, 150, 200, 250, 300, 350],
            30,
        )
    } else {
        (args.s_values.clone(), args.c_values.clone(), args.trials)
    };

    let base = SynthConfig {
        h,
        driver_len: args.driver_len,
        events: 1,
        jumps: 1,
        event_deviation: args.event_deviation,
        jump_deviation: args.jump_deviation,
        noise_norm: args.noise_norm,
        baseline_scale: args.baseline_scale,
        seed: args.seed,
    };
    let mut solver_cfg = SolverConfig::new(0.0);
    solver_cfg.max_iters = args.max_iters;
    solver_cfg.tol_rel = args.tol_rel;
    let grid = run_phase_diagram(
        &base,
        &s_values,
        &c_values,
        trials,
        args.eta_factor,
        &solver_cfg,
    )
    .map_err(lib)?;

    ensure_dir(&args.out_dir)?;
    write_phase_diagram_csv(&args.out_dir.join("phase_diagram.csv"), &grid).map_err(lib)?;

    let mut manifest = Manifest::new("phase-diagram");
    args.impulse.record(&mut manifest);
    manifest.push("driver-len", args.driver_len);
    manifest.push("event-deviation", args.event_deviation);
    manifest.push("jump-deviation", args.jump_deviation);
    manifest.push("noise-norm", args.noise_norm);
    manifest.push("baseline-scale", args.baseline_scale);
    manifest.push("seed", args.seed);
    manifest.push("s-values", join(&s_values));
    manifest.push("c-values", join(&c_values));
    manifest.push("trials", trials);
    manifest.push("eta-factor", args.eta_factor);
    manifest.push("max-iters", args.max_iters);
    manifest.push("tol-rel", args.tol_rel);
    manifest.write(&args.out_dir)?;

    let worst = grid
        .mean_rel_error
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b));
    let non_converged: usize = grid.non_converged.iter().flatten().sum();
    println!(
        "cells={} trials_per_cell={} worst_mean_rel_error={} non_converged_solves={}",
        s_values.len() * c_values.len(),
        trials,
        worst,
        non_converged
    );
    Ok(0)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<u8, String> {
    let working_rate = args.downsample_to_hz.unwrap_or(args.impulse.sample_rate);
    let h = args.impulse.build(working_rate)?;
    let clips = read_clips_csv(&args.clips).map_err(lib)?;
    let mut signals = Vec::with_capacity(args.signals.len());
    for path in &args.signals {
        signals.push(read_signal_csv(path, args.impulse.sample_rate).map_err(lib)?);
    }

    let mut solver_cfg = SolverConfig::new(args.eta);
    solver_cfg.max_iters = args.max_iters;
    solver_cfg.tol_rel = args.tol_rel;
    let cfg = DetectionConfig {
        solver: solver_cfg,
        aggregation: args.aggregation,
        downsample_to_hz: args.downsample_to_hz,
    };
    let outcome = run_detection_experiment(&signals, &clips, &h, &cfg).map_err(lib)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }

    ensure_dir(&args.out_dir)?;
    write_roc_csv(
        &args.out_dir.join("roc_unconstrained.csv"),
        &outcome.unconstrained,
    )
    .map_err(lib)?;
    write_roc_csv(
        &args.out_dir.join("roc_nonnegative.csv"),
        &outcome.nonnegative,
    )
    .map_err(lib)?;
    let metrics = format!(
        "auc_unconstrained={}\nauc_nonnegative={}\n",
        outcome.unconstrained.auc, outcome.nonnegative.auc
    );
    fs::write(args.out_dir.join("metrics.txt"), &metrics)
        .map_err(|e| format!("writing metrics.txt: {e}"))?;
    print!("{metrics}");

    let mut manifest = Manifest::new("evaluate");
    manifest.push(
        "signals",
        join(
            &args
                .signals
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>(),
        ),
    );
    manifest.push("clips", args.clips.display());
    args.impulse.record(&mut manifest);
    manifest.push("eta", args.eta);
    manifest.push("aggregation", args.aggregation);
    manifest.push_if("downsample-to-hz", args.downsample_to_hz);
    manifest.push("max-iters", args.max_iters);
    manifest.push("tol-rel", args.tol_rel);
    manifest.write(&args.out_dir)?;
    Ok(0)
}

fn cmd_rerun(args: RerunArgs) -> Result<u8, String> {
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| format!("reading {}: {e}", args.manifest.display()))?;
    let mut argv: Vec<String> = vec!["edakit".into()];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            format!(
                "{}:{}: expected key=value, got {line:?}",
                args.manifest.display(),
                idx + 1
            )
        })?;
        if key == "subcommand" {
            if argv.len() != 1 {
                return Err("manifest names more than one subcommand".into());
            }
            if value == "rerun" {
                return Err("manifest of a rerun cannot be replayed".into());
            }
            argv.push(value.into());
        } else if value == "true" {
            argv.push(format!("--{key}"));
        } else {
            argv.push(format!("--{key}"));
            argv.push(value.into());
        }
    }
    if argv.len() < 2 {
        return Err("manifest does not name a subcommand".into());
    }
    argv.push("--out-dir".into());
    argv.push(args.out_dir.display().to_string());

    let cli = Cli::try_parse_from(&argv).map_err(|e| format!("replaying manifest: {e}"))?;
    dispatch(cli.cmd)
}
