//! `franson` — command-line front end for the simulator and analysis
//! toolkit in `franson-core`.
//!
//! Analytic commands (`sweep-sync`, `sprs`, `sweep-length`) evaluate closed
//! forms and emit CSV. Monte Carlo commands (`simulate`, `fringe`) run full
//! timestamp-level scenarios from a TOML configuration and write their
//! outputs, together with the fully resolved configuration, into an output
//! directory. `correlate` and `delay-trace` cover offline analysis of
//! recorded streams and the clock-transfer model.
//!
//! All numeric output is formatted with a fixed precision, so identical
//! seeds and configurations produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use franson_core::io::{self, fmt_f64};
use franson_core::sim::seed_streams;
use franson_core::{
    build_histogram, cross_correlate, delay_trace, differential_stats, differential_trace,
    fit_gaussian, mix_seed, run_fringe, simulate_scenario, sprs_rate, summarize,
    sweep_visibility_vs_length, sweep_visibility_vs_sync, synth_environment, CoreError,
    DelayTrace, LengthSweepParams, Result, ScenarioConfig, SprsParams, SyncSweepParams,
    WindowPolicy, BETA_1555_FROM_1310, PUMP_RATE_DEFAULT_HZ,
};

#[derive(Parser)]
#[command(
    name = "franson",
    version,
    about = "Simulate and analyze two-photon interference over shared fiber links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form visibility versus synchronization jitter.
    SweepSync(SweepSyncArgs),
    /// Spontaneous Raman scattering rate versus fiber length.
    Sprs(SprsArgs),
    /// Closed-form visibility over a grid of per-arm fiber lengths.
    SweepLength(SweepLengthArgs),
    /// Run a Monte Carlo scenario and record the detected timestamp streams.
    Simulate(SimulateArgs),
    /// Cross-correlate two recorded streams into a delay histogram.
    Correlate(CorrelateArgs),
    /// Run a phase-scan Monte Carlo and fit the interference fringe.
    Fringe(FringeArgs),
    /// Synthesize the environment and emit channel delay traces.
    DelayTrace(DelayTraceArgs),
}

#[derive(Args)]
struct SweepSyncArgs {
    /// Pair generation rate, counts/s.
    #[arg(long, default_value_t = 1e8)]
    brightness_cps: f64,
    /// Timing spread with no synchronization jitter, ps.
    #[arg(long, default_value_t = 30.0)]
    sigma0_ps: f64,
    /// Captured fraction targeted by the window optimizer.
    #[arg(long, default_value_t = 0.98)]
    f_min: f64,
    /// Use a fixed coincidence window instead of optimizing one.
    #[arg(long, conflicts_with = "f_min")]
    tau_ps: Option<f64>,
    /// Largest synchronization jitter on the grid, ps.
    #[arg(long, default_value_t = 200.0)]
    max_ps: f64,
    /// Grid step, ps.
    #[arg(long, default_value_t = 2.0)]
    step_ps: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SprsArgs {
    /// Raman conversion efficiency, (km*Hz)^-1.
    #[arg(long, default_value_t = BETA_1555_FROM_1310)]
    beta_per_km_hz: f64,
    /// Fiber attenuation in the quantum band, dB/km.
    #[arg(long, default_value_t = 0.19)]
    alpha_q_db_km: f64,
    /// Fiber attenuation at the classical wavelength, dB/km.
    #[arg(long, default_value_t = 0.33)]
    alpha_c_db_km: f64,
    /// Collection bandwidth, nm.
    #[arg(long, default_value_t = 1.0)]
    delta_lambda_nm: f64,
    /// Launched classical photon rate, Hz.
    #[arg(long, default_value_t = PUMP_RATE_DEFAULT_HZ)]
    pump_rate_hz: f64,
    /// Dimensionless calibration factor.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Largest fiber length on the grid, km.
    #[arg(long, default_value_t = 100.0)]
    max_km: f64,
    /// Grid step, km.
    #[arg(long, default_value_t = 0.5)]
    step_km: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepLengthArgs {
    /// Largest per-arm fiber length on the grid, km.
    #[arg(long, default_value_t = 125.0)]
    max_km: f64,
    /// Grid step, km.
    #[arg(long, default_value_t = 25.0)]
    step_km: f64,
    /// Synchronization jitter, ps.
    #[arg(long, default_value_t = 100.0)]
    sigma_sync_ps: f64,
    /// Dark count rate per detector, counts/s.
    #[arg(long, default_value_t = 100.0)]
    dcr_cps: f64,
    /// Raman calibration factor.
    #[arg(long, default_value_t = 9.0e13)]
    sprs_scale: f64,
    /// Captured fraction targeted by the window optimizer.
    #[arg(long, default_value_t = 0.98)]
    f_min: f64,
    /// Use a fixed coincidence window instead of optimizing one.
    #[arg(long, conflicts_with = "f_min")]
    tau_ps: Option<f64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML (desk-scale defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured acquisition length, s.
    #[arg(long)]
    duration_s: Option<f64>,
    /// Directory for streams and the resolved configuration.
    #[arg(long)]
    out_dir: PathBuf,
    /// Write text streams (one timestamp per line) instead of binary.
    #[arg(long)]
    text: bool,
    /// Also write per-event origin sidecars (simulation truth).
    #[arg(long)]
    origins: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Recorded signal-side stream.
    #[arg(long)]
    signal: PathBuf,
    /// Recorded idler-side stream.
    #[arg(long)]
    idler: PathBuf,
    /// Largest |delay| retained, ps.
    #[arg(long, default_value_t = 2000)]
    span_ps: i64,
    /// Histogram bin width, ps.
    #[arg(long, default_value_t = 2)]
    bin_width_ps: i64,
    /// Also fit a Gaussian to the histogram and print it.
    #[arg(long)]
    fit: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FringeArgs {
    /// Scenario TOML (desk-scale defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the scan, the fit and the resolved configuration.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceKind {
    /// Quantum-channel delay minus classical-channel delay.
    Differential,
    Quantum,
    Classical,
}

#[derive(Args)]
struct DelayTraceArgs {
    /// Scenario TOML providing the environment and clock-link parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Which delay record to emit.
    #[arg(long, value_enum, default_value_t = TraceKind::Differential)]
    what: TraceKind,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Map failures onto stable exit codes: 2 for configuration and parameter
/// problems, 3 for I/O and file-format problems, 4 when a numeric routine
/// fails to converge or the data cannot support a fit.
fn exit_code(err: &CoreError) -> u8 {
    match err {
        CoreError::Io(_) | CoreError::StreamFormat { .. } => 3,
        CoreError::NonConvergence { .. } | CoreError::DegenerateScan => 4,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::SweepSync(args) => cmd_sweep_sync(args),
        Command::Sprs(args) => cmd_sprs(args),
        Command::SweepLength(args) => cmd_sweep_length(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Fringe(args) => cmd_fringe(args),
        Command::DelayTrace(args) => cmd_delay_trace(args),
    }
}

// ---------------------------------------------------------------------------
// Analytic sweeps
// ---------------------------------------------------------------------------

fn cmd_sweep_sync(args: SweepSyncArgs) -> Result<()> {
    let params = SyncSweepParams {
        brightness_cps: args.brightness_cps,
        sigma0_ps: args.sigma0_ps,
        window: window_policy(args.tau_ps, args.f_min),
        grid: grid(args.max_ps, args.step_ps)?,
    };
    let points = sweep_visibility_vs_sync(&params)?;
    let rows = points
        .iter()
        .map(|p| vec![fmt_f64(p.sigma_sync_ps), fmt_f64(p.tau_opt_ps), fmt_f64(p.visibility)])
        .collect();
    emit_csv(args.out.as_deref(), &["sigma_sync_ps", "tau_opt_ps", "visibility"], rows)
}

fn cmd_sprs(args: SprsArgs) -> Result<()> {
    let sprs = SprsParams {
        beta_per_km_hz: args.beta_per_km_hz,
        delta_lambda_nm: args.delta_lambda_nm,
        pump_rate_hz: args.pump_rate_hz,
        scale: args.scale,
    };
    let mut rows = Vec::new();
    for l_km in grid(args.max_km, args.step_km)? {
        let rate = sprs_rate(l_km, args.alpha_q_db_km, args.alpha_c_db_km, &sprs)?;
        rows.push(vec![fmt_f64(l_km), fmt_f64(rate)]);
    }
    emit_csv(args.out.as_deref(), &["l_km", "sprs_cps"], rows)
}

fn cmd_sweep_length(args: SweepLengthArgs) -> Result<()> {
    let grid_km = grid(args.max_km, args.step_km)?;
    let params = LengthSweepParams {
        sigma_sync_ps: args.sigma_sync_ps,
        dcr_cps: args.dcr_cps,
        sprs_scale: args.sprs_scale,
        window: window_policy(args.tau_ps, args.f_min),
        l_s_grid_km: grid_km.clone(),
        l_i_grid_km: grid_km,
        ..LengthSweepParams::default()
    };
    let points = sweep_visibility_vs_length(&params)?;
    let rows = points
        .iter()
        .map(|p| vec![fmt_f64(p.l_s_km), fmt_f64(p.l_i_km), fmt_f64(p.visibility)])
        .collect();
    emit_csv(args.out.as_deref(), &["l_s_km", "l_i_km", "visibility"], rows)
}

// ---------------------------------------------------------------------------
// Monte Carlo scenarios
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(duration) = args.duration_s {
        cfg.duration_s = duration;
    }
    cfg.validate()?;
    fs::create_dir_all(&args.out_dir)?;
    write_resolved(&args.out_dir, &cfg)?;

    let out = simulate_scenario(&cfg)?;
    let summary = summarize(&cfg, &out);
    let ext = if args.text { "txt" } else { "fts" };
    for (name, stream, events, rate) in [
        ("signal", &out.signal, summary.signal_events, summary.signal_rate_cps),
        ("idler", &out.idler, summary.idler_events, summary.idler_rate_cps),
    ] {
        let path = args.out_dir.join(format!("{name}.{ext}"));
        if args.text {
            io::write_stream_text(&path, stream)?;
        } else {
            io::write_stream(&path, stream)?;
        }
        if args.origins {
            io::write_origins(&args.out_dir.join(format!("{name}.origins.txt")), stream)?;
        }
        println!("{name}: {events} events ({} counts/s) -> {}", fmt_f64(rate), path.display());
    }
    Ok(())
}

fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    let signal = io::read_stream(&args.signal)?;
    let idler = io::read_stream(&args.idler)?;
    let diffs = cross_correlate(&signal.times(), &idler.times(), args.span_ps)?;
    let hist = build_histogram(&diffs, -args.span_ps, args.span_ps, args.bin_width_ps)?;
    let rows = hist
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| vec![fmt_f64(hist.bin_center_ps(i)), c.to_string()])
        .collect();
    emit_csv(args.out.as_deref(), &["bin_center_ps", "count"], rows)?;
    if args.fit {
        let peak = fit_gaussian(&hist)?;
        println!(
            "fit: amplitude {} counts/bin, center {} ps, sigma {} ps",
            fmt_f64(peak.amplitude),
            fmt_f64(peak.center_ps),
            fmt_f64(peak.sigma_ps)
        );
    }
    Ok(())
}

fn cmd_fringe(args: FringeArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&args.out_dir)?;
    write_resolved(&args.out_dir, &cfg)?;

    let run = run_fringe(&cfg)?;
    let scan_rows = run
        .scan
        .phases_rad
        .iter()
        .zip(&run.scan.counts)
        .zip(&run.scan.durations_s)
        .map(|((&phase, &count), &dwell)| {
            vec![fmt_f64(phase), count.to_string(), fmt_f64(dwell)]
        })
        .collect();
    emit_csv(
        Some(&args.out_dir.join("scan.csv")),
        &["phase_rad", "count", "duration_s"],
        scan_rows,
    )?;
    emit_csv(
        Some(&args.out_dir.join("fit.csv")),
        &["visibility", "sigma_v", "phi0_rad", "mean_rate_cps"],
        vec![vec![
            fmt_f64(run.fit.visibility),
            fmt_f64(run.fit.sigma_v),
            fmt_f64(run.fit.phi0_rad),
            fmt_f64(run.fit.mean_rate_cps),
        ]],
    )?;

    println!(
        "peak: center {} ps, sigma {} ps",
        fmt_f64(run.peak.center_ps),
        fmt_f64(run.peak.sigma_ps)
    );
    println!(
        "window: center {} ps, width {} ps",
        fmt_f64(run.window_center_ps),
        fmt_f64(run.window_tau_ps)
    );
    println!(
        "visibility: {} +- {} (phase of maximum {} rad)",
        fmt_f64(run.fit.visibility),
        fmt_f64(run.fit.sigma_v),
        fmt_f64(run.fit.phi0_rad)
    );
    if run.fit.clipped {
        println!("note: raw fitted visibility fell outside [0, 1]; the value above is clipped");
    }
    Ok(())
}

fn cmd_delay_trace(args: DelayTraceArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let temps = synth_environment(&cfg.environment, mix_seed(cfg.seed, seed_streams::ENVIRONMENT))?;
    let quantum = delay_trace(
        &cfg.environment,
        &temps,
        cfg.clock.k_quantum_ps_per_km_k,
        cfg.clock.length_km,
    )?;
    let classical = delay_trace(
        &cfg.environment,
        &temps,
        cfg.clock.k_classical_ps_per_km_k,
        cfg.clock.length_km,
    )?;
    let trace: DelayTrace = match args.what {
        TraceKind::Differential => differential_trace(&quantum, &classical)?,
        TraceKind::Quantum => quantum,
        TraceKind::Classical => classical,
    };
    if args.what == TraceKind::Differential {
        let stats = differential_stats(&trace)?;
        eprintln!(
            "differential: mean {} ps, std {} ps, peak-to-peak {} ps",
            fmt_f64(stats.mean_ps),
            fmt_f64(stats.std_ps),
            fmt_f64(stats.peak_to_peak_ps)
        );
    }
    let rows = trace
        .t_s
        .iter()
        .zip(&trace.delay_ps)
        .map(|(&t, &d)| vec![fmt_f64(t), fmt_f64(d)])
        .collect();
    emit_csv(args.out.as_deref(), &["t_s", "delay_ps"], rows)
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn window_policy(tau_ps: Option<f64>, f_min: f64) -> WindowPolicy {
    match tau_ps {
        Some(tau_ps) => WindowPolicy::Fixed { tau_ps },
        None => WindowPolicy::CaptureConstrained { f_min },
    }
}

/// Inclusive uniform grid `0, step, 2 step, ..` up to `max`.
fn grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) || !max.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "grid",
            reason: format!("need step > 0 and max >= 0, got step {step}, max {max}"),
        });
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Echo the fully resolved configuration next to the outputs it produced.
fn write_resolved(dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
    io::atomic_write(&dir.join("resolved.toml"), cfg.to_toml_string()?.as_bytes())
}

fn emit_csv(out: Option<&Path>, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    match out {
        Some(path) => io::write_csv(path, header, &rows),
        None => {
            let mut text = String::with_capacity(rows.len() * 32 + 64);
            text.push_str(&header.join(","));
            text.push('\n');
            for row in rows {
                text.push_str(&row.join(","));
                text.push('\n');
            }
            print!("{text}");
            Ok(())
        }
    }
}
