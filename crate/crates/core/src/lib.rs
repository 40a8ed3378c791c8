//! Simulation and analysis library for nonlocal two-photon (Franson)
//! interferometry over fiber links that share their infrastructure with a
//! classical clock-distribution channel.
//!
//! The crate has three layers:
//!
//! * **Analytic link model** ([`link`], [`math`]): closed forms for jitter
//!   composition, windowed coincidence capture, accidental floors including
//!   spontaneous Raman scattering, CAR/visibility, CHSH, and parameter
//!   sweeps.
//! * **Monte-Carlo simulator** ([`sim`], [`clock`], [`pipeline`]):
//!   timestamp-level generation of entangled-pair detections through fiber,
//!   detectors, background, and clock-synchronization impairments.
//! * **Analysis** ([`coincidence`]): cross-correlation, delay histograms,
//!   Gaussian peak fits, windowed counting, and fringe-visibility fits that
//!   work identically on simulated and recorded streams.
//!
//! All randomness is seeded and reproducible; identical inputs give
//! identical outputs, including across the parallel sweep paths.

pub mod clock;
pub mod coincidence;
pub mod error;
pub mod io;
pub mod link;
pub mod math;
pub mod pipeline;
pub mod scenario;
pub mod sim;
pub mod stream;

pub use clock::{
    delay_trace, differential_stats, differential_trace, retime_stream, synth_environment,
    DelayTrace, DifferentialStats, EnvironmentProfile,
};
pub use coincidence::{
    build_histogram, count_in_window, cross_correlate, fit_fringe, fit_gaussian,
    three_peak_decompose, CoincidenceHistogram, FringeFit, FringeScan, PeakFit, ThreePeak,
};
pub use error::{CoreError, FransonViolation, Result};
pub use link::{
    accidental_cc, accidental_cc_noisy, car_ideal, car_noisy, chsh_s, compose_jitter,
    effective_cc, evaluate_budget, excess_jitter, optimize_window, sprs_rate,
    sweep_visibility_vs_length, sweep_visibility_vs_sync, violation_sigmas, visibility_from_car,
    BudgetReport, DetectorParams, FiberLeg, LengthSweepParams, LengthSweepPoint, LinkBudget,
    SourceParams, SprsParams, SyncParams, SyncSweepParams, SyncSweepPoint, WindowPolicy,
    BETA_1555_FROM_1310, BETA_1575_FROM_1310, PUMP_RATE_DEFAULT_HZ,
};
pub use math::{erf, erfc, gaussian_capture, mix_seed, sigma_m_from_peak_sigma, FWHM_PER_SIGMA};
pub use pipeline::{
    count_window_by_truth, run_fringe, simulate_scenario, simulate_with, summarize, FringeRun,
    SimOutput, TruthWindowCounts,
};
pub use scenario::{
    AnalysisParams, BackgroundParams, ClockLinkParams, FringeProtocol, RofParams, RunSummary,
    ScenarioConfig,
};
pub use sim::{
    generate_pairs, joint_outcome_probabilities, validate_franson_condition, FransonParams,
    Outcome, PairEvent,
};
pub use stream::{Channel, Event, Origin, TimestampStream};
