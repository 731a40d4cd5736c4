//! Deterministic simulated edge device.
//!
//! A transmitter waveform, a noisy baseline and optional interference add up
//! (then clamp) to the device's processor demand. Time load is the mean demand
//! over each sample interval plus sensor noise; frequency load follows a DVFS
//! governor that quantizes demand onto the device's clock ladder.

mod config;
mod device;
mod noise;
mod sim;

pub use config::{
    interference_signal, ChannelConfig, Interference, InterferenceParams, SimProfile,
    BASELINE_NOISE_INTERVAL_S,
};
pub use device::{DeviceProfile, GovernorKind};
pub use noise::NoiseSource;
pub use sim::{
    effective_demand, sample_frequency_load, sample_time_load, SimClock, SimMedium,
    TICKS_PER_SAMPLE,
};
