//! Wall-clock time-of-day, the `HHMMSS` format carried in message TIME fields.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const SECONDS_PER_DAY: u32 = 86_400;

/// A time of day with one-second resolution, wire form `HHMMSS` (24 h).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WallTime {
    secs: u32,
}

impl WallTime {
    pub fn from_hms(h: u32, m: u32, s: u32) -> Result<Self, WallTimeError> {
        if h >= 24 {
            return Err(WallTimeError::HourOutOfRange(h));
        }
        if m >= 60 {
            return Err(WallTimeError::MinuteOutOfRange(m));
        }
        if s >= 60 {
            return Err(WallTimeError::SecondOutOfRange(s));
        }
        Ok(WallTime {
            secs: h * 3600 + m * 60 + s,
        })
    }

    /// Parses the 6-digit `HHMMSS` form, e.g. `092310`.
    pub fn parse(text: &str) -> Result<Self, WallTimeError> {
        if text.len() != 6 || !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(WallTimeError::Malformed(text.to_string()));
        }
        let num = |r: std::ops::Range<usize>| text[r].parse::<u32>().unwrap();
        WallTime::from_hms(num(0..2), num(2..4), num(4..6))
    }

    /// Seconds since midnight.
    pub fn secs(&self) -> u32 {
        self.secs
    }

    /// Wall time reached `sim_seconds` after this one, wrapping at midnight.
    /// Fractional seconds truncate: the wire format has one-second resolution.
    pub fn advanced_by(&self, sim_seconds: f64) -> WallTime {
        let whole = sim_seconds.max(0.0).floor() as u64;
        WallTime {
            secs: ((self.secs as u64 + whole) % SECONDS_PER_DAY as u64) as u32,
        }
    }

    /// Forward elapsed seconds from `self` to `later`, crossing at most one
    /// midnight. `later` earlier in the day than `self` is read as next-day.
    pub fn elapsed_until(&self, later: WallTime) -> u32 {
        (later.secs + SECONDS_PER_DAY - self.secs) % SECONDS_PER_DAY
    }
}

impl fmt::Display for WallTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}{:02}{:02}",
            self.secs / 3600,
            (self.secs / 60) % 60,
            self.secs % 60
        )
    }
}

impl TryFrom<String> for WallTime {
    type Error = WallTimeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        WallTime::parse(&s)
    }
}

impl From<WallTime> for String {
    fn from(t: WallTime) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WallTimeError {
    #[error("time must be 6 digits HHMMSS, got {0:?}")]
    Malformed(String),
    #[error("hour {0} out of range (HH < 24)")]
    HourOutOfRange(u32),
    #[error("minute {0} out of range (MM < 60)")]
    MinuteOutOfRange(u32),
    #[error("second {0} out of range (SS < 60)")]
    SecondOutOfRange(u32),
}

/// A day-agnostic time window. `wraps` marks windows that span midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: WallTime,
    pub end: WallTime,
    #[serde(default)]
    pub wraps: bool,
}

impl TimeWindow {
    pub fn new(start: WallTime, end: WallTime, wraps: bool) -> Result<Self, WallTimeError> {
        if !wraps && start >= end {
            return Err(WallTimeError::Malformed(format!(
                "window start {start} must precede end {end} unless wraps is set"
            )));
        }
        Ok(TimeWindow { start, end, wraps })
    }

    /// Inclusive on both ends.
    pub fn contains(&self, t: WallTime) -> bool {
        if self.wraps {
            t >= self.start || t <= self.end
        } else {
            t >= self.start && t <= self.end
        }
    }
}
