//! Declarative scenario configuration: one TOML document describes a full
//! experiment (source, interferometers, fiber legs, detectors,
//! synchronization, background, clock link, and analysis settings).
//!
//! Every field has a default, so a minimal file can override just what it
//! needs; unknown keys are rejected to catch typos.

use crate::clock::EnvironmentProfile;
use crate::error::{CoreError, Result};
use crate::link::{DetectorParams, FiberLeg, SourceParams, SyncParams, WindowPolicy};
use crate::sim::{validate_franson_condition, FransonParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Uncorrelated background light reaching each receiver, counts/s (Raman
/// scattering from a co-propagating classical channel, filter leakage, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundParams {
    pub signal_cps: f64,
    pub idler_cps: f64,
}

impl BackgroundParams {
    pub fn validate(&self) -> Result<()> {
        if self.signal_cps < 0.0 || self.idler_cps < 0.0 {
            return Err(CoreError::InvalidParameter {
                name: "background",
                reason: "rates must be >= 0".to_string(),
            });
        }
        Ok(())
    }
}

/// Radio-over-fiber clock recovery at the remote receiver. When enabled, the
/// remote timestamps pick up the recovery's fast excess jitter and the
/// receiver collects the classical carrier's scattered light as additional
/// background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RofParams {
    pub enabled: bool,
    pub excess_jitter_ps: f64,
    /// Extra background on the remote (signal) receiver while the classical
    /// carrier is on, counts/s.
    pub added_background_cps: f64,
}

impl Default for RofParams {
    fn default() -> Self {
        RofParams { enabled: false, excess_jitter_ps: 29.3, added_background_cps: 0.0 }
    }
}

impl RofParams {
    pub fn validate(&self) -> Result<()> {
        if self.excess_jitter_ps < 0.0 || self.added_background_cps < 0.0 {
            return Err(CoreError::InvalidParameter {
                name: "rof",
                reason: "jitter and background must be >= 0".to_string(),
            });
        }
        Ok(())
    }
}

/// Thermal-delay coefficients of the clock link used by delay-trace studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockLinkParams {
    /// Classical (clock) wavelength coefficient, ps/(km*K).
    pub k_classical_ps_per_km_k: f64,
    /// Quantum wavelength coefficient, ps/(km*K).
    pub k_quantum_ps_per_km_k: f64,
    pub length_km: f64,
}

impl Default for ClockLinkParams {
    fn default() -> Self {
        ClockLinkParams {
            k_classical_ps_per_km_k: 40.0,
            k_quantum_ps_per_km_k: 40.5,
            length_km: 50.0,
        }
    }
}

impl ClockLinkParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_classical_ps_per_km_k < 0.0
            || self.k_quantum_ps_per_km_k < 0.0
            || self.length_km < 0.0
        {
            return Err(CoreError::InvalidParameter {
                name: "clock",
                reason: "coefficients and length must be >= 0".to_string(),
            });
        }
        Ok(())
    }
}

/// Phase-scan protocol for fringe acquisitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeProtocol {
    /// Number of phase settings; they span `[0, 2 pi]` inclusive.
    pub points: usize,
    /// Dwell time per phase setting, s.
    pub dwell_s: f64,
}

impl Default for FringeProtocol {
    fn default() -> Self {
        FringeProtocol { points: 16, dwell_s: 20.0 }
    }
}

impl FringeProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.points < 4 {
            return Err(CoreError::InvalidParameter {
                name: "fringe.points",
                reason: "need at least 4 phase settings".to_string(),
            });
        }
        if !(self.dwell_s > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "fringe.dwell_s",
                reason: "must be > 0".to_string(),
            });
        }
        Ok(())
    }

    pub fn phases_rad(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| k as f64 * 2.0 * std::f64::consts::PI / (n - 1) as f64)
            .collect()
    }
}

/// Post-processing settings shared by the correlator paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    /// Correlation search half-span, ps.
    pub span_ps: i64,
    pub bin_width_ps: i64,
    pub window: WindowPolicy,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            span_ps: 2000,
            bin_width_ps: 2,
            window: WindowPolicy::Fixed { tau_ps: 100.0 },
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        if self.span_ps <= 0 || self.bin_width_ps <= 0 {
            return Err(CoreError::InvalidParameter {
                name: "analysis",
                reason: "span_ps and bin_width_ps must be > 0".to_string(),
            });
        }
        if (2 * self.span_ps) % self.bin_width_ps != 0 {
            return Err(CoreError::InvalidParameter {
                name: "analysis.bin_width_ps",
                reason: format!("must divide the full span {} ps", 2 * self.span_ps),
            });
        }
        self.window.validate()
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub source: SourceParams,
    pub franson: FransonParams,
    pub signal_leg: FiberLeg,
    pub idler_leg: FiberLeg,
    pub detector_s: DetectorParams,
    pub detector_i: DetectorParams,
    pub sync: SyncParams,
    pub background: BackgroundParams,
    pub rof: RofParams,
    pub environment: EnvironmentProfile,
    pub clock: ClockLinkParams,
    pub fringe: FringeProtocol,
    pub analysis: AnalysisParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration_s: 10.0,
            source: SourceParams::default(),
            franson: FransonParams::default(),
            signal_leg: FiberLeg::default(),
            idler_leg: FiberLeg::default(),
            detector_s: DetectorParams::default(),
            detector_i: DetectorParams::default(),
            sync: SyncParams::default(),
            background: BackgroundParams::default(),
            rof: RofParams::default(),
            environment: EnvironmentProfile::default(),
            clock: ClockLinkParams::default(),
            fringe: FringeProtocol::default(),
            analysis: AnalysisParams::default(),
        }
    }
}

impl ScenarioConfig {
    /// The desk-scale default: both parties colocated, no deployed fiber.
    pub fn desk() -> Self {
        ScenarioConfig::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "duration_s",
                reason: "must be > 0".to_string(),
            });
        }
        validate_franson_condition(&self.source, &self.franson)?;
        self.signal_leg.validate()?;
        self.idler_leg.validate()?;
        self.detector_s.validate()?;
        self.detector_i.validate()?;
        self.sync.validate()?;
        self.background.validate()?;
        self.rof.validate()?;
        self.environment.validate()?;
        self.clock.validate()?;
        self.fringe.validate()?;
        self.analysis.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| CoreError::Config { reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io_at(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CoreError::Config { reason } => CoreError::Config {
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        })
    }

    /// Canonical TOML rendering (used to echo the fully resolved
    /// configuration next to every set of outputs).
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CoreError::Config { reason: e.to_string() })
    }
}

/// Fields reported after a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration_s: f64,
    pub signal_events: usize,
    pub idler_events: usize,
    pub signal_rate_cps: f64,
    pub idler_rate_cps: f64,
}
