//! Coherent receiver: turns a baseline capture plus a frame capture into bits.
//!
//! The ASK threshold sits halfway between the pre-transmission baseline and the
//! full workload level, where the full level is the in-frame peak but never
//! below [`FULL_LEVEL_FLOOR`], so an absent transmitter cannot pull the
//! threshold down onto the baseline.

use serde::Serialize;

use crate::bits::BitVector;
use crate::codec::{demodulate, required_sample_rate, DemodConfig, ModulationConfig, Scheme};
use crate::error::{Error, Result};
use crate::trace::{Metric, WorkloadTrace};

pub const FULL_LEVEL_FLOOR: f64 = 0.9;

/// Peak-to-peak spread below which a frame is treated as carrying no signal.
const FLAT_SPREAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReceiverConfig {
    pub modulation: ModulationConfig,
    pub metric: Metric,
    pub expected_bits: usize,
    pub ask_majority: f64,
    pub full_level_floor: f64,
    /// Skip the adaptive rule and use this ASK threshold.
    pub threshold_override: Option<f64>,
}

impl ReceiverConfig {
    pub fn new(modulation: ModulationConfig, metric: Metric, expected_bits: usize) -> Self {
        ReceiverConfig {
            modulation,
            metric,
            expected_bits,
            ask_majority: 0.75,
            full_level_floor: FULL_LEVEL_FLOOR,
            threshold_override: None,
        }
    }

    pub fn sample_rate_hz(&self) -> Result<f64> {
        required_sample_rate(&self.modulation)
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.expected_bits as f64 * self.modulation.bit_duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reception {
    /// `None` when the frame capture was too short to hold every expected bit.
    pub bits: Option<BitVector>,
    pub baseline_mean: f64,
    pub frame_peak: f64,
    /// ASK decision threshold actually used; `None` for FSK.
    pub threshold: Option<f64>,
    /// The frame showed no variation at all (for example a pinned governor).
    pub flat: bool,
}

impl Reception {
    pub fn has_signal(&self) -> bool {
        self.bits.is_some() && !self.flat
    }
}

pub fn ask_threshold(baseline_mean: f64, frame_peak: f64, full_level_floor: f64) -> f64 {
    (baseline_mean + frame_peak.max(full_level_floor)) / 2.0
}

/// Decode a frame. `baseline` may be empty, in which case the frame minimum
/// stands in for the baseline level.
pub fn decode(
    baseline: &WorkloadTrace,
    frame: &WorkloadTrace,
    cfg: &ReceiverConfig,
) -> Result<Reception> {
    let frame_peak = frame.samples.iter().copied().fold(f64::NAN, f64::max);
    let frame_min = frame.samples.iter().copied().fold(f64::NAN, f64::min);
    if frame.samples.is_empty() {
        return Ok(Reception {
            bits: None,
            baseline_mean: baseline.mean().unwrap_or(f64::NAN),
            frame_peak: f64::NAN,
            threshold: None,
            flat: true,
        });
    }
    let baseline_mean = baseline.mean().unwrap_or(frame_min);
    let threshold = match cfg.modulation.scheme {
        Scheme::Ask => Some(
            cfg.threshold_override
                .unwrap_or_else(|| ask_threshold(baseline_mean, frame_peak, cfg.full_level_floor)),
        ),
        Scheme::Fsk => None,
    };
    let mut demod =
        DemodConfig::from_modulation(&cfg.modulation).with_expected_bits(cfg.expected_bits);
    demod.ask_majority = cfg.ask_majority;
    if let Some(th) = threshold {
        demod.ask_threshold = th;
    }
    let bits = match demodulate(frame, &demod) {
        Ok(bits) => Some(bits),
        Err(Error::InsufficientData { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Reception {
        bits,
        baseline_mean,
        frame_peak,
        threshold,
        flat: frame_peak - frame_min < FLAT_SPREAD,
    })
}

/// Decode a single capture that starts before the rendezvous instant (time 0).
pub fn decode_capture(capture: &WorkloadTrace, cfg: &ReceiverConfig) -> Result<Reception> {
    let (baseline, frame) = capture.split_at_rendezvous();
    decode(&baseline, &frame, cfg)
}
