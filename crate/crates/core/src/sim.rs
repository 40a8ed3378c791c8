//! Monte-Carlo generation of entangled-pair detection timestamps.
//!
//! The simulator produces per-channel [`TimestampStream`]s by pushing each
//! generated pair through the physical chain: interferometer outcome
//! sampling, fiber transport (loss, group delay, residual dispersion),
//! synchronization jitter, and detection (efficiency, timing jitter, dark
//! counts, uncorrelated background, dead time).
//!
//! Every stage is seeded explicitly. Stage seeds are derived from one base
//! seed with [`crate::math::mix_seed`] and the tags in [`seed_streams`], so a
//! scenario is reproducible end to end while stages stay statistically
//! independent.

use crate::error::{CoreError, FransonViolation, Result};
use crate::link::{DetectorParams, FiberLeg, SourceParams};
use crate::math::mix_seed;
use crate::stream::{Channel, Event, Origin, TimestampStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

/// Group delay of standard single-mode fiber, ps/km.
pub const FIBER_DELAY_PS_PER_KM: f64 = 4.9e6;

/// Stage tags for deriving per-stage RNG seeds from one base seed.
pub mod seed_streams {
    pub const PAIR_TIMES: u64 = 1;
    pub const OUTCOMES: u64 = 2;
    pub const CHANNEL_SIGNAL: u64 = 3;
    pub const CHANNEL_IDLER: u64 = 4;
    pub const SYNC: u64 = 5;
    pub const DETECTOR_SIGNAL: u64 = 6;
    pub const DETECTOR_IDLER: u64 = 7;
    pub const RETIME: u64 = 8;
    pub const ENVIRONMENT: u64 = 9;
    /// Base offset for per-phase seeds in a fringe scan.
    pub const FRINGE_PHASE_BASE: u64 = 1000;
}

/// Geometry and phases of the two unbalanced interferometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FransonParams {
    /// Path imbalance dT shared by both interferometers, ps.
    pub imbalance_ps: f64,
    /// Signal-side interferometer phase, rad.
    pub phase_s_rad: f64,
    /// Idler-side interferometer phase, rad.
    pub phase_i_rad: f64,
}

impl Default for FransonParams {
    fn default() -> Self {
        FransonParams { imbalance_ps: 500.0, phase_s_rad: 0.0, phase_i_rad: 0.0 }
    }
}

impl FransonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.imbalance_ps > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "franson.imbalance_ps",
                reason: "must be > 0".to_string(),
            });
        }
        if !self.phase_s_rad.is_finite() || !self.phase_i_rad.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "franson.phase",
                reason: "phases must be finite".to_string(),
            });
        }
        Ok(())
    }

    pub fn total_phase_rad(&self) -> f64 {
        self.phase_s_rad + self.phase_i_rad
    }
}

/// Check the operating condition of a Franson interferometer: the path
/// imbalance must exceed the single-photon coherence time (suppressing
/// single-photon interference) while staying below the pump coherence time
/// (keeping the early/early and late/late amplitudes mutually coherent).
pub fn validate_franson_condition(source: &SourceParams, franson: &FransonParams) -> Result<()> {
    source.validate()?;
    franson.validate()?;
    if franson.imbalance_ps <= source.photon_coherence_ps {
        return Err(CoreError::FransonCondition(FransonViolation::BelowPhotonCoherence {
            imbalance_ps: franson.imbalance_ps,
            photon_coherence_ps: source.photon_coherence_ps,
        }));
    }
    if franson.imbalance_ps >= source.pump_coherence_ps {
        return Err(CoreError::FransonCondition(FransonViolation::AtOrAbovePumpCoherence {
            imbalance_ps: franson.imbalance_ps,
            pump_coherence_ps: source.pump_coherence_ps,
        }));
    }
    Ok(())
}

/// Which exit of an unbalanced interferometer a photon took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Short arm, detected at the interfering output.
    Short,
    /// Long arm (delayed by the imbalance), detected at the interfering
    /// output.
    Long,
    /// Routed to a non-monitored output port; the photon is lost.
    Unmonitored,
}

/// One generated pair; its index in the generation order is its identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEvent {
    /// Emission time at the source, ps.
    pub t_emit_ps: i64,
    pub outcome_s: Outcome,
    pub outcome_i: Outcome,
}

/// Joint probability table over the nine (signal, idler) outcome
/// combinations, indexed `[signal][idler]` in the order
/// `[Short, Long, Unmonitored]`.
///
/// The postselected interfering combinations `(Short,Short)` and
/// `(Long,Long)` carry the two-photon interference
/// `(1 + V0 cos(phase)) / 16`; the distinguishable combinations
/// `(Short,Long)`/`(Long,Short)` are phase-insensitive at `1/16` each; the
/// remainder feeds the unmonitored ports such that each photon's marginal is
/// exactly (1/4, 1/4, 1/2) regardless of phase and visibility.
pub fn joint_outcome_probabilities(
    intrinsic_visibility: f64,
    total_phase_rad: f64,
) -> Result<[[f64; 3]; 3]> {
    if !(0.0..=1.0).contains(&intrinsic_visibility) {
        return Err(CoreError::InvalidParameter {
            name: "intrinsic_visibility",
            reason: "must lie in [0, 1]".to_string(),
        });
    }
    let c = (1.0 + intrinsic_visibility * total_phase_rad.cos()) / 16.0;
    let u = 3.0 / 16.0 - c;
    Ok([
        [c, 1.0 / 16.0, u],
        [1.0 / 16.0, c, u],
        [u, u, 2.0 * c + 1.0 / 8.0],
    ])
}

const OUTCOMES: [Outcome; 3] = [Outcome::Short, Outcome::Long, Outcome::Unmonitored];

/// Generate the pair emission record for one acquisition: Poisson emission
/// times at the source brightness and jointly sampled interferometer
/// outcomes at the given phases.
pub fn generate_pairs(
    source: &SourceParams,
    franson: &FransonParams,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<PairEvent>> {
    validate_franson_condition(source, franson)?;
    if !(duration_s > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "duration_s",
            reason: "must be > 0".to_string(),
        });
    }
    let duration_ps = (duration_s * 1e12).round() as u64;
    let mut rng_t = ChaCha8Rng::seed_from_u64(mix_seed(seed, seed_streams::PAIR_TIMES));
    let mut rng_o = ChaCha8Rng::seed_from_u64(mix_seed(seed, seed_streams::OUTCOMES));

    let table =
        joint_outcome_probabilities(source.intrinsic_visibility, franson.total_phase_rad())?;
    // Flattened cumulative distribution for inverse-CDF sampling.
    let mut cdf = [0.0f64; 9];
    let mut acc = 0.0;
    for s in 0..3 {
        for i in 0..3 {
            acc += table[s][i];
            cdf[s * 3 + i] = acc;
        }
    }

    let times = poisson_times(source.brightness_cps, duration_ps, &mut rng_t);
    let mut pairs = Vec::with_capacity(times.len());
    for t in times {
        let u: f64 = rng_o.random();
        let cell = cdf.iter().position(|&c| u < c).unwrap_or(8);
        pairs.push(PairEvent {
            t_emit_ps: t,
            outcome_s: OUTCOMES[cell / 3],
            outcome_i: OUTCOMES[cell % 3],
        });
    }
    Ok(pairs)
}

/// Sorted arrival times of a homogeneous Poisson process of the given rate
/// over `[0, duration_ps)`, in ps.
pub fn poisson_times(rate_cps: f64, duration_ps: u64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    if rate_cps <= 0.0 || duration_ps == 0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_cps * 1e-12).expect("positive rate");
    let mut out = Vec::with_capacity((rate_cps * duration_ps as f64 * 1e-12 * 1.1) as usize + 16);
    let mut t = 0.0f64;
    loop {
        t += exp.sample(rng);
        if t >= duration_ps as f64 {
            break;
        }
        out.push(t.round() as i64);
    }
    out
}

/// Materialize the detected-arm stream of one channel from the pair record:
/// photons routed to an unmonitored port are dropped, long-arm photons are
/// delayed by the interferometer imbalance. The result is time-ordered.
pub fn materialize_arm(
    pairs: &[PairEvent],
    channel: Channel,
    imbalance_ps: f64,
    duration_ps: u64,
) -> TimestampStream {
    let delay = imbalance_ps.round() as i64;
    let mut stream = TimestampStream::new(channel, duration_ps);
    stream.events.reserve(pairs.len() / 2 + 16);
    for (id, p) in pairs.iter().enumerate() {
        let outcome = match channel {
            Channel::Signal => p.outcome_s,
            Channel::Idler => p.outcome_i,
        };
        let t = match outcome {
            Outcome::Short => p.t_emit_ps,
            Outcome::Long => p.t_emit_ps + delay,
            Outcome::Unmonitored => continue,
        };
        stream.events.push(Event { t_ps: t, origin: Origin::Pair(id as u64) });
    }
    // The long-arm offset can locally reorder events.
    stream.events.sort_unstable_by_key(|e| e.t_ps);
    stream
}

/// Transport a stream through one fiber leg: Bernoulli thinning by the
/// quantum-channel transmission, the nominal group delay, and per-photon
/// Gaussian residual-dispersion jitter. The result is re-sorted.
///
/// The nominal group delay is a known constant; [`shift_stream`] removes it
/// again at the receiver (de-skew) without any loss of information.
pub fn apply_channel(
    mut stream: TimestampStream,
    leg: &FiberLeg,
    seed: u64,
) -> Result<TimestampStream> {
    leg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transmission = leg.transmission_q();
    let delay = nominal_delay_ps(leg);
    let disp = if leg.residual_dispersion_sigma_ps > 0.0 {
        Some(Normal::new(0.0, leg.residual_dispersion_sigma_ps).expect("valid sigma"))
    } else {
        None
    };
    let mut kept = Vec::with_capacity((stream.events.len() as f64 * transmission) as usize + 16);
    for e in stream.events.drain(..) {
        if transmission < 1.0 && rng.random::<f64>() >= transmission {
            continue;
        }
        let mut t = e.t_ps + delay;
        if let Some(d) = &disp {
            t += d.sample(&mut rng).round() as i64;
        }
        kept.push(Event { t_ps: t, origin: e.origin });
    }
    kept.sort_unstable_by_key(|e| e.t_ps);
    stream.events = kept;
    Ok(stream)
}

/// Nominal group delay of a leg, ps.
pub fn nominal_delay_ps(leg: &FiberLeg) -> i64 {
    (FIBER_DELAY_PS_PER_KM * leg.length_km).round() as i64
}

/// Shift every timestamp by a constant offset (order-preserving, exact).
pub fn shift_stream(mut stream: TimestampStream, offset_ps: i64) -> TimestampStream {
    for e in &mut stream.events {
        e.t_ps += offset_ps;
    }
    stream
}

/// Add zero-mean Gaussian timing noise of the given sigma to every event and
/// re-sort. Used for synchronization jitter and clock-recovery excess jitter.
pub fn apply_gaussian_jitter(
    mut stream: TimestampStream,
    sigma_ps: f64,
    seed: u64,
) -> Result<TimestampStream> {
    if !(sigma_ps >= 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "sigma_ps",
            reason: "must be >= 0".to_string(),
        });
    }
    if sigma_ps == 0.0 || stream.events.is_empty() {
        return Ok(stream);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_ps).expect("valid sigma");
    for e in &mut stream.events {
        e.t_ps += normal.sample(&mut rng).round() as i64;
    }
    stream.events.sort_unstable_by_key(|e| e.t_ps);
    Ok(stream)
}

/// Detect a stream: Bernoulli thinning by the detector efficiency, Gaussian
/// timing jitter on every photon, dark counts and uncorrelated background
/// merged in as Poisson processes, non-paralyzable dead time, and clipping
/// to the acquisition window `[0, duration_ps]`.
pub fn apply_detector(
    mut stream: TimestampStream,
    det: &DetectorParams,
    background_cps: f64,
    seed: u64,
) -> Result<TimestampStream> {
    det.validate()?;
    if !(background_cps >= 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "background_cps",
            reason: "must be >= 0".to_string(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = if det.jitter_sigma_ps > 0.0 {
        Some(Normal::new(0.0, det.jitter_sigma_ps).expect("valid sigma"))
    } else {
        None
    };
    let mut clicks = Vec::with_capacity(
        (stream.events.len() as f64 * det.efficiency) as usize
            + ((det.dcr_cps + background_cps) * stream.duration_ps as f64 * 1e-12) as usize
            + 32,
    );
    for e in stream.events.drain(..) {
        if det.efficiency < 1.0 && rng.random::<f64>() >= det.efficiency {
            continue;
        }
        let mut t = e.t_ps;
        if let Some(j) = &jitter {
            t += j.sample(&mut rng).round() as i64;
        }
        clicks.push(Event { t_ps: t, origin: e.origin });
    }
    for t in poisson_times(det.dcr_cps, stream.duration_ps, &mut rng) {
        clicks.push(Event { t_ps: t, origin: Origin::Dark });
    }
    for t in poisson_times(background_cps, stream.duration_ps, &mut rng) {
        clicks.push(Event { t_ps: t, origin: Origin::Background });
    }
    clicks.sort_unstable_by_key(|e| e.t_ps);

    let dead = det.dead_time_ps.round() as i64;
    let duration = stream.duration_ps as i64;
    let mut kept = Vec::with_capacity(clicks.len());
    let mut last_click: Option<i64> = None;
    for e in clicks {
        if let (Some(last), true) = (last_click, dead > 0) {
            if e.t_ps - last < dead {
                continue;
            }
        }
        last_click = Some(e.t_ps);
        if e.t_ps >= 0 && e.t_ps <= duration {
            kept.push(e);
        }
    }
    stream.events = kept;
    Ok(stream)
}
