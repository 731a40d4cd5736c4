use serde::{Deserialize, Serialize};

use super::schedule::{ModulationConfig, Scheme};
use super::spectrum::spectral_peak;
use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::trace::WorkloadTrace;

/// Receiver-side decision parameters for coherent demodulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodConfig {
    pub scheme: Scheme,
    pub bit_duration_s: f64,
    /// A sample counts as high when strictly above this.
    pub ask_threshold: f64,
    /// Fraction of a bit window that must be high for a 1.
    pub ask_majority: f64,
    pub fsk_cycle_ratio: u32,
    /// Number of bits to decode; `None` decodes every full window.
    pub expected_bits: Option<usize>,
}

impl DemodConfig {
    pub fn new(scheme: Scheme, bit_duration_s: f64) -> Self {
        DemodConfig {
            scheme,
            bit_duration_s,
            ask_threshold: 0.5,
            ask_majority: 0.75,
            fsk_cycle_ratio: 5,
            expected_bits: None,
        }
    }

    pub fn from_modulation(cfg: &ModulationConfig) -> Self {
        DemodConfig {
            fsk_cycle_ratio: cfg.fsk_cycle_ratio,
            ..DemodConfig::new(cfg.scheme, cfg.bit_duration_s)
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.ask_threshold = threshold;
        self
    }

    pub fn with_expected_bits(mut self, bits: usize) -> Self {
        self.expected_bits = Some(bits);
        self
    }

    /// Midpoint between the two carrier frequencies: 3/T for the default 5:1 ratio.
    pub fn fsk_freq_threshold_hz(&self) -> f64 {
        (1.0 + self.fsk_cycle_ratio as f64) / 2.0 / self.bit_duration_s
    }

    /// Lowest acceptable sample rate for this scheme: four samples per fastest carrier cycle.
    pub fn min_sample_rate_hz(&self) -> f64 {
        let cycles = match self.scheme {
            Scheme::Ask => 1.0,
            Scheme::Fsk => self.fsk_cycle_ratio as f64,
        };
        4.0 * cycles / self.bit_duration_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bit_duration_s > 0.0 && self.bit_duration_s.is_finite()) {
            return Err(Error::invalid(format!(
                "bit duration must be positive and finite, got {}",
                self.bit_duration_s
            )));
        }
        if !(self.ask_majority > 0.5 && self.ask_majority <= 1.0) {
            return Err(Error::invalid("ask majority must lie in (0.5, 1]"));
        }
        if self.scheme == Scheme::Ask && !(self.ask_threshold.is_finite()) {
            return Err(Error::invalid("ask threshold must be finite"));
        }
        if self.fsk_cycle_ratio < 2 {
            return Err(Error::invalid("fsk cycle ratio must be at least 2"));
        }
        Ok(())
    }
}

/// Checks shared by both schemes; returns (samples per bit, bit count).
fn windows(trace: &WorkloadTrace, cfg: &DemodConfig) -> Result<(usize, usize)> {
    cfg.validate()?;
    let min_rate = cfg.min_sample_rate_hz();
    if trace.sample_rate_hz < min_rate * (1.0 - 1e-6) {
        return Err(Error::invalid(format!(
            "sample rate {} Hz is below the {min_rate} Hz needed for {}",
            trace.sample_rate_hz, cfg.scheme
        )));
    }
    let w = (cfg.bit_duration_s * trace.sample_rate_hz).round() as usize;
    let full = trace.samples.len() / w;
    let k = cfg.expected_bits.unwrap_or(full).max(1);
    if full < k {
        return Err(Error::InsufficientData {
            needed: k * w,
            available: trace.samples.len(),
        });
    }
    Ok((w, k))
}

/// Majority-of-window amplitude detection.
pub fn demodulate_ask(trace: &WorkloadTrace, cfg: &DemodConfig) -> Result<BitVector> {
    let (w, k) = windows(trace, cfg)?;
    let needed = (cfg.ask_majority * w as f64 - 1e-9).ceil() as usize;
    Ok(trace
        .samples
        .chunks_exact(w)
        .take(k)
        .map(|win| win.iter().filter(|&&v| v > cfg.ask_threshold).count() >= needed)
        .collect::<Vec<_>>()
        .into())
}

/// Per-window spectral peak against the carrier midpoint frequency.
pub fn demodulate_fsk(trace: &WorkloadTrace, cfg: &DemodConfig) -> Result<BitVector> {
    let (w, k) = windows(trace, cfg)?;
    let cutoff = cfg.fsk_freq_threshold_hz();
    trace
        .samples
        .chunks_exact(w)
        .take(k)
        .map(|win| spectral_peak(win, cfg.bit_duration_s).map(|p| p.frequency_hz > cutoff))
        .collect::<Result<Vec<_>>>()
        .map(BitVector::from)
}

pub fn demodulate(trace: &WorkloadTrace, cfg: &DemodConfig) -> Result<BitVector> {
    match cfg.scheme {
        Scheme::Ask => demodulate_ask(trace, cfg),
        Scheme::Fsk => demodulate_fsk(trace, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Metric;

    fn trace(rate: f64, samples: Vec<f64>) -> WorkloadTrace {
        WorkloadTrace::new(Metric::TimeLoad, rate, 0.0, samples).unwrap()
    }

    #[test]
    fn three_of_four_above_is_a_one() {
        let cfg = DemodConfig::new(Scheme::Ask, 1.0).with_threshold(0.6);
        let bits = demodulate_ask(&trace(4.0, vec![0.9, 0.95, 0.2, 0.88]), &cfg).unwrap();
        assert_eq!(bits.to_string(), "1");
        let bits = demodulate_ask(&trace(4.0, vec![0.9, 0.2, 0.2, 0.88]), &cfg).unwrap();
        assert_eq!(bits.to_string(), "0");
    }

    #[test]
    fn comparison_is_strict() {
        let cfg = DemodConfig::new(Scheme::Ask, 1.0).with_threshold(0.6);
        let bits = demodulate_ask(&trace(4.0, vec![0.6; 4]), &cfg).unwrap();
        assert_eq!(bits.to_string(), "0");
    }

    #[test]
    fn quiet_window_is_zero() {
        let cfg = DemodConfig::new(Scheme::Ask, 1.0).with_threshold(0.6);
        let bits = demodulate_ask(&trace(4.0, vec![0.1; 4]), &cfg).unwrap();
        assert_eq!(bits.to_string(), "0");
    }

    #[test]
    fn fsk_windows() {
        let cfg = DemodConfig::new(Scheme::Fsk, 1.0);
        assert_eq!(cfg.fsk_freq_threshold_hz(), 3.0);
        let mut s: Vec<f64> = (0..20)
            .map(|i| if (i / 2) % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        s.extend((0..20).map(|i| if i < 10 { 1.0 } else { 0.0 }));
        s.extend([0.3; 20]);
        let bits = demodulate_fsk(&trace(20.0, s), &cfg).unwrap();
        assert_eq!(bits.to_string(), "100");
    }

    #[test]
    fn partial_window_is_discarded() {
        let cfg = DemodConfig::new(Scheme::Ask, 1.0);
        let bits = demodulate_ask(&trace(4.0, vec![1.0; 7]), &cfg).unwrap();
        assert_eq!(bits.len(), 1);
        let err =
            demodulate_ask(&trace(4.0, vec![1.0; 7]), &cfg.with_expected_bits(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                needed: 8,
                available: 7
            }
        ));
    }

    #[test]
    fn short_trace_and_slow_rate_are_rejected() {
        let cfg = DemodConfig::new(Scheme::Ask, 1.0);
        assert!(matches!(
            demodulate_ask(&trace(4.0, vec![1.0; 3]), &cfg),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            demodulate_ask(&trace(2.0, vec![1.0; 8]), &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let fsk = DemodConfig::new(Scheme::Fsk, 1.0);
        assert!(matches!(
            demodulate_fsk(&trace(4.0, vec![1.0; 40]), &fsk),
            Err(Error::InvalidArgument(_))
        ));
    }
}
