//! Covert signalling through a device's aggregate processor workload.
//!
//! A transmitter alternates the processor between busy and idle to encode
//! bits (ASK on the load level, FSK on the toggling frequency). A receiver on
//! the same device samples either the time load from `/proc/stat` or the DVFS
//! frequency load from cpufreq and demodulates. The [`channel`] module
//! simulates such a device deterministically; [`loadgen`] and [`sysload`] are
//! the real-host transmitter and sensor.
//!
//! ```
//! use loadmodem::codec::{demodulate, modulate, required_sample_rate, sample_ideal, DemodConfig, ModulationConfig, Scheme};
//! use loadmodem::BitVector;
//!
//! let bits: BitVector = "1011".parse().unwrap();
//! let cfg = ModulationConfig::new(Scheme::Fsk, 1.0);
//! let trace = sample_ideal(&modulate(&bits, &cfg).unwrap(), required_sample_rate(&cfg).unwrap());
//! let back = demodulate(&trace, &DemodConfig::from_modulation(&cfg)).unwrap();
//! assert_eq!(back, bits);
//! ```

pub mod assoc;
pub mod bench;
mod bits;
pub mod channel;
pub mod codec;
mod error;
pub mod loadgen;
pub mod receiver;
pub mod sysload;
mod trace;

pub use bits::BitVector;
pub use error::{Error, Result};
pub use trace::{Metric, WorkloadTrace};
