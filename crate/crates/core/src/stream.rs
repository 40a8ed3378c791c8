//! Timestamp streams: the interchange type between the Monte-Carlo
//! simulator, the coincidence analysis, and on-disk timetag files.
//!
//! Timestamps are integer picoseconds. Sub-picosecond structure is far below
//! every jitter scale in the model (>= 20 ps), and integer times make the
//! correlator and histogrammer exact and the file round-trip lossless.

use serde::{Deserialize, Serialize};

/// Which receiver a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Signal,
    Idler,
}

impl Channel {
    pub fn code(self) -> u16 {
        match self {
            Channel::Signal => 0,
            Channel::Idler => 1,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(Channel::Signal),
            1 => Some(Channel::Idler),
            _ => None,
        }
    }
}

/// Ground-truth origin of a detection event. Carried alongside simulated
/// streams so analysis code can be validated against truth (e.g. separating
/// genuine-pair coincidences from accidentals); absent for streams read back
/// from plain timetag files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Photon from the entangled pair with this generation index.
    Pair(u64),
    /// Background photon (Raman scattering or other leakage).
    Background,
    /// Detector dark count.
    Dark,
    /// Stream was loaded from disk without truth information.
    Unknown,
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t_ps: i64,
    pub origin: Origin,
}

/// A time-ordered sequence of detection events on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampStream {
    pub channel: Channel,
    /// Acquisition span; all event times lie in `[0, duration_ps]`.
    pub duration_ps: u64,
    pub events: Vec<Event>,
}

impl TimestampStream {
    pub fn new(channel: Channel, duration_ps: u64) -> Self {
        TimestampStream { channel, duration_ps, events: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Event times only, in stream order.
    pub fn times(&self) -> Vec<i64> {
        self.events.iter().map(|e| e.t_ps).collect()
    }

    /// Mean detected rate over the acquisition, counts/s.
    pub fn rate_cps(&self) -> f64 {
        if self.duration_ps == 0 {
            return 0.0;
        }
        self.events.len() as f64 / (self.duration_ps as f64 * 1e-12)
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].t_ps <= w[1].t_ps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_codes_roundtrip() {
        for ch in [Channel::Signal, Channel::Idler] {
            assert_eq!(Channel::from_code(ch.code()), Some(ch));
        }
        assert_eq!(Channel::from_code(7), None);
    }

    #[test]
    fn rate_and_ordering() {
        let mut s = TimestampStream::new(Channel::Signal, 1_000_000_000_000); // 1 s
        for i in 0..1000 {
            s.events.push(Event { t_ps: i * 1_000_000_000, origin: Origin::Unknown });
        }
        assert_eq!(s.len(), 1000);
        assert!((s.rate_cps() - 1000.0).abs() < 1e-9);
        assert!(s.is_sorted());
        s.events.swap(0, 999);
        assert!(!s.is_sorted());
    }
}
