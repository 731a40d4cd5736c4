use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the simulated DVFS governor picks a clock level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GovernorKind {
    /// Lowest level whose normalized capacity covers the current demand.
    OnDemand,
    /// Pinned at the highest level regardless of demand.
    Performance,
}

/// A simulated edge device with identical cores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub n_cores: usize,
    /// Ascending clock levels available to every core.
    pub clock_levels_hz: Vec<u64>,
    pub governor: GovernorKind,
    /// Demand must stay past a level boundary this long before the governor switches.
    pub dvfs_reaction_delay_s: f64,
    /// Minimum time between two switches.
    pub dvfs_min_dwell_s: f64,
}

const MHZ: u64 = 1_000_000;

impl DeviceProfile {
    /// Quad-core phone with eight clock levels from 200 MHz to 1.2 GHz.
    pub fn phone() -> Self {
        DeviceProfile {
            n_cores: 4,
            clock_levels_hz: [200, 400, 533, 800, 998, 1094, 1152, 1200]
                .iter()
                .map(|m| m * MHZ)
                .collect(),
            governor: GovernorKind::OnDemand,
            dvfs_reaction_delay_s: 0.08,
            dvfs_min_dwell_s: 0.04,
        }
    }

    /// Quad-core board with two clock levels whose governor sits at the top one.
    pub fn rpi() -> Self {
        DeviceProfile {
            n_cores: 4,
            clock_levels_hz: vec![600 * MHZ, 1200 * MHZ],
            governor: GovernorKind::Performance,
            dvfs_reaction_delay_s: 0.0,
            dvfs_min_dwell_s: 0.0,
        }
    }

    /// The phone's clock ladder with an instantaneous governor.
    pub fn ideal() -> Self {
        DeviceProfile {
            dvfs_reaction_delay_s: 0.0,
            dvfs_min_dwell_s: 0.0,
            ..DeviceProfile::phone()
        }
    }

    pub fn max_clock_hz(&self) -> u64 {
        *self
            .clock_levels_hz
            .last()
            .expect("validated profile has levels")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cores < 2 {
            return Err(Error::invalid(format!(
                "a device needs at least 2 cores, got {}",
                self.n_cores
            )));
        }
        if self.clock_levels_hz.is_empty() {
            return Err(Error::invalid("clock level list is empty"));
        }
        if self.clock_levels_hz[0] == 0 {
            return Err(Error::invalid("clock levels must be positive"));
        }
        if self.clock_levels_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("clock levels must be strictly ascending"));
        }
        for (name, v) in [
            ("dvfs_reaction_delay_s", self.dvfs_reaction_delay_s),
            ("dvfs_min_dwell_s", self.dvfs_min_dwell_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for DeviceProfile {
    fn default() -> Self {
        DeviceProfile::phone()
    }
}
