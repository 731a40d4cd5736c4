use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-agreed periodic instants at which a transmission may start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousSchedule {
    pub epoch: DateTime<Utc>,
    pub period_s: f64,
    /// How long the receiver listens before each instant to learn the baseline.
    pub baseline_window_s: f64,
}

pub(crate) fn delta(seconds: f64) -> TimeDelta {
    TimeDelta::nanoseconds((seconds * 1e9).round() as i64)
}

pub(crate) fn seconds_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    let d = to - from;
    d.num_seconds() as f64 + d.subsec_nanos() as f64 * 1e-9
}

impl RendezvousSchedule {
    pub fn new(epoch: DateTime<Utc>, period_s: f64, baseline_window_s: f64) -> Result<Self> {
        if !(period_s > 0.0 && period_s.is_finite()) {
            return Err(Error::invalid(format!(
                "period must be positive, got {period_s}"
            )));
        }
        if !(baseline_window_s >= 0.0 && baseline_window_s.is_finite()) {
            return Err(Error::invalid("baseline window must be nonnegative"));
        }
        Ok(RendezvousSchedule {
            epoch,
            period_s,
            baseline_window_s,
        })
    }

    /// The first instant whose baseline window has not yet begun at `now`.
    /// Both parties use the same rule, so they agree on the slot.
    pub fn next_after(&self, now: DateTime<Utc>) -> DateTime<Utc> {
        let listen_from = now + delta(self.baseline_window_s);
        let elapsed = seconds_between(self.epoch, listen_from);
        if elapsed <= 0.0 {
            return self.epoch;
        }
        let k = (elapsed / self.period_s - 1e-12).ceil();
        self.epoch + delta(k * self.period_s)
    }

    pub fn check_fits(&self, frame_duration_s: f64) -> Result<()> {
        if self.period_s <= frame_duration_s + self.baseline_window_s {
            return Err(Error::invalid(format!(
                "period {} s cannot hold a {frame_duration_s} s frame plus a {} s baseline window",
                self.period_s, self.baseline_window_s
            )));
        }
        Ok(())
    }
}
