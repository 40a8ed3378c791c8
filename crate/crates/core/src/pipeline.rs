//! End-to-end scenario execution: wiring the Monte-Carlo stages together,
//! truth-tagged coincidence accounting, and the fringe-scan protocol.

use crate::coincidence::{
    build_histogram, count_in_window, cross_correlate, fit_fringe, fit_gaussian, FringeFit,
    FringeScan, PeakFit,
};
use crate::error::{CoreError, Result};
use crate::link::{optimize_window, WindowPolicy};
use crate::math::{mix_seed, sigma_m_from_peak_sigma};
use crate::scenario::{RunSummary, ScenarioConfig};
use crate::sim::{self, seed_streams, FransonParams};
use crate::stream::{Channel, Origin, TimestampStream};
use rayon::prelude::*;

/// The two detected streams of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub signal: TimestampStream,
    pub idler: TimestampStream,
}

/// Run one acquisition as described by the configuration.
pub fn simulate_scenario(cfg: &ScenarioConfig) -> Result<SimOutput> {
    simulate_with(cfg, cfg.franson.phase_s_rad, cfg.duration_s, cfg.seed)
}

/// Run one acquisition with an overridden signal phase, duration, and base
/// seed (the fringe scan varies all three per point).
pub fn simulate_with(
    cfg: &ScenarioConfig,
    phase_s_rad: f64,
    duration_s: f64,
    base_seed: u64,
) -> Result<SimOutput> {
    cfg.validate()?;
    let franson = FransonParams { phase_s_rad, ..cfg.franson.clone() };
    let duration_ps = (duration_s * 1e12).round() as u64;

    let pairs = sim::generate_pairs(&cfg.source, &franson, duration_s, base_seed)?;
    let signal = sim::materialize_arm(&pairs, Channel::Signal, franson.imbalance_ps, duration_ps);
    let idler = sim::materialize_arm(&pairs, Channel::Idler, franson.imbalance_ps, duration_ps);
    drop(pairs);

    // Transport, then de-skew the known nominal group delay at the receiver.
    let signal = sim::apply_channel(
        signal,
        &cfg.signal_leg,
        mix_seed(base_seed, seed_streams::CHANNEL_SIGNAL),
    )?;
    let signal = sim::shift_stream(signal, -sim::nominal_delay_ps(&cfg.signal_leg));
    let idler = sim::apply_channel(
        idler,
        &cfg.idler_leg,
        mix_seed(base_seed, seed_streams::CHANNEL_IDLER),
    )?;
    let idler = sim::shift_stream(idler, -sim::nominal_delay_ps(&cfg.idler_leg));

    // Synchronization error lives on the remote (signal) timebase.
    let signal = sim::apply_gaussian_jitter(
        signal,
        cfg.sync.sigma_sync_ps,
        mix_seed(base_seed, seed_streams::SYNC),
    )?;

    let bg_signal = cfg.background.signal_cps
        + if cfg.rof.enabled { cfg.rof.added_background_cps } else { 0.0 };
    let signal = sim::apply_detector(
        signal,
        &cfg.detector_s,
        bg_signal,
        mix_seed(base_seed, seed_streams::DETECTOR_SIGNAL),
    )?;
    let idler = sim::apply_detector(
        idler,
        &cfg.detector_i,
        cfg.background.idler_cps,
        mix_seed(base_seed, seed_streams::DETECTOR_IDLER),
    )?;

    // Recovered-clock retiming adds its fast excess jitter to the remote
    // record (a post-processing step on recorded tags).
    let signal = if cfg.rof.enabled {
        sim::apply_gaussian_jitter(
            signal,
            cfg.rof.excess_jitter_ps,
            mix_seed(base_seed, seed_streams::RETIME),
        )?
    } else {
        signal
    };

    Ok(SimOutput { signal, idler })
}

pub fn summarize(cfg: &ScenarioConfig, out: &SimOutput) -> RunSummary {
    RunSummary {
        seed: cfg.seed,
        duration_s: cfg.duration_s,
        signal_events: out.signal.len(),
        idler_events: out.idler.len(),
        signal_rate_cps: out.signal.rate_cps(),
        idler_rate_cps: out.idler.rate_cps(),
    }
}

/// Windowed coincidences split by ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthWindowCounts {
    /// Both clicks from the same generated pair.
    pub genuine: u64,
    /// Everything else inside the window (unrelated pairs, background,
    /// darks).
    pub accidental: u64,
}

/// Count coincidences in the window `|delta - center| <= tau/2` and classify
/// each by origin truth tags. Requires sorted streams.
pub fn count_window_by_truth(
    a: &TimestampStream,
    b: &TimestampStream,
    center_ps: f64,
    tau_ps: f64,
) -> Result<TruthWindowCounts> {
    for s in [a, b] {
        if let Some(i) = s.events.windows(2).position(|w| w[0].t_ps > w[1].t_ps) {
            return Err(CoreError::UnsortedTimestamps { index: i + 1 });
        }
    }
    let half = tau_ps / 2.0;
    let lo_off = (center_ps - half).floor() as i64;
    let hi_off = (center_ps + half).ceil() as i64;
    let mut counts = TruthWindowCounts { genuine: 0, accidental: 0 };
    let mut start = 0usize;
    for ea in &a.events {
        while start < b.events.len() && b.events[start].t_ps < ea.t_ps - hi_off {
            start += 1;
        }
        let mut k = start;
        while k < b.events.len() && b.events[k].t_ps <= ea.t_ps - lo_off {
            let eb = &b.events[k];
            k += 1;
            if ((ea.t_ps - eb.t_ps) as f64 - center_ps).abs() > half {
                continue;
            }
            match (ea.origin, eb.origin) {
                (Origin::Pair(x), Origin::Pair(y)) if x == y => counts.genuine += 1,
                _ => counts.accidental += 1,
            }
        }
    }
    Ok(counts)
}

/// Everything produced by one fringe-scan run.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeRun {
    pub scan: FringeScan,
    /// Gaussian fit of the phase-aggregated central coincidence peak.
    pub peak: PeakFit,
    pub window_center_ps: f64,
    pub window_tau_ps: f64,
    pub fit: FringeFit,
}

/// Execute the fringe protocol: step the signal-side phase across a full
/// turn, acquire each point with an independent seeded run, locate the
/// central coincidence peak on the phase-aggregated histogram, then count
/// windowed coincidences per phase and fit the fringe.
///
/// Points run in a small worker pool (results are order-stable and the
/// per-point seeds are fixed, so the output is independent of scheduling).
pub fn run_fringe(cfg: &ScenarioConfig) -> Result<FringeRun> {
    cfg.validate()?;
    let phases = cfg.fringe.phases_rad();
    // The correlation span for fringe counting is the half-separation of the
    // interferometer peaks: wide enough for the central peak and its fit,
    // narrow enough to exclude the side peaks.
    let half_sep = (cfg.franson.imbalance_ps / 2.0).round() as i64;
    let bw = cfg.analysis.bin_width_ps;
    let half = (half_sep / bw) * bw;
    if half < 5 * bw {
        return Err(CoreError::InvalidParameter {
            name: "analysis.bin_width_ps",
            reason: format!(
                "bin width {bw} ps is too coarse for the {half_sep} ps central region"
            ),
        });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .expect("worker pool construction cannot fail with static settings");
    let per_phase: Vec<Vec<i64>> = pool.install(|| {
        phases
            .par_iter()
            .enumerate()
            .map(|(k, &phase)| {
                let seed = mix_seed(cfg.seed, seed_streams::FRINGE_PHASE_BASE + k as u64);
                let out = simulate_with(cfg, phase, cfg.fringe.dwell_s, seed)?;
                cross_correlate(&out.signal.times(), &out.idler.times(), half)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let aggregate: Vec<i64> = per_phase.iter().flatten().copied().collect();
    let hist = build_histogram(&aggregate, -half, half, bw)?;
    let peak = fit_gaussian(&hist)?;
    let tau = match cfg.analysis.window {
        WindowPolicy::Fixed { tau_ps } => tau_ps,
        WindowPolicy::CaptureConstrained { .. } => {
            optimize_window(sigma_m_from_peak_sigma(peak.sigma_ps), &cfg.analysis.window)?
        }
    };
    if peak.center_ps - tau / 2.0 < -(half as f64) || peak.center_ps + tau / 2.0 > half as f64 {
        return Err(CoreError::InvalidParameter {
            name: "analysis.window",
            reason: format!(
                "window {tau:.1} ps around {:.1} ps exceeds the +/-{half} ps central region",
                peak.center_ps
            ),
        });
    }

    let counts: Vec<u64> = per_phase
        .iter()
        .map(|diffs| count_in_window(diffs, peak.center_ps, tau))
        .collect();
    let scan = FringeScan {
        phases_rad: phases,
        counts,
        durations_s: vec![cfg.fringe.dwell_s; cfg.fringe.points],
    };
    let fit = fit_fringe(&scan)?;
    Ok(FringeRun { scan, peak, window_center_ps: peak.center_ps, window_tau_ps: tau, fit })
}
