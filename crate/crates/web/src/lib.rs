//! Browser bindings for the simulator. Every export takes plain values and
//! returns a JSON string for the page to plot.

use loadmodem::bench::{run_bench, BenchPlan};
use loadmodem::channel::{ChannelConfig, DeviceProfile, Interference, SimMedium};
use loadmodem::codec::{
    modulate, power_spectrum, required_sample_rate, sample_ideal, spectral_peak, ModulationConfig,
};
use loadmodem::receiver::{decode_capture, ReceiverConfig};
use loadmodem::{BitVector, Metric};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Shared knobs of the simulated link.
pub struct Link {
    pub scheme: String,
    pub metric: String,
    pub interference: String,
    pub delay_s: f64,
    pub seed: u64,
}

impl Link {
    fn channel(&self) -> Result<ChannelConfig, String> {
        let interference: Interference = self.interference.parse().map_err(err)?;
        Ok(ChannelConfig {
            tx_response_delay_s: self.delay_s,
            ..ChannelConfig::default()
        }
        .with_interference(interference)
        .with_seed(self.seed))
    }

    fn metric(&self) -> Result<Metric, String> {
        self.metric.parse().map_err(err)
    }

    fn modulation(&self, bit_duration_s: f64) -> Result<ModulationConfig, String> {
        let cfg = ModulationConfig::new(self.scheme.parse().map_err(err)?, bit_duration_s);
        cfg.validate().map_err(err)?;
        Ok(cfg)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct Transmission {
    sent: String,
    received: Option<String>,
    bit_errors: usize,
    threshold: Option<f64>,
    flat: bool,
    sample_rate_hz: f64,
    start_s: f64,
    samples: Vec<f64>,
    demand: Vec<f64>,
}

/// Send `bits` across the phone profile and decode the capture.
/// The capture includes two bit durations of baseline before the frame.
pub fn transmit(link: &Link, bits: &str, bit_duration_s: f64) -> Result<String, String> {
    let bits: BitVector = bits.trim().parse().map_err(err)?;
    if bits.is_empty() || bits.len() > 256 {
        return Err("give between 1 and 256 bits".into());
    }
    let cfg = link.modulation(bit_duration_s)?;
    let metric = link.metric()?;
    let schedule = modulate(&bits, &cfg).map_err(err)?;
    let rate = required_sample_rate(&cfg).map_err(err)?;
    let lead = 2.0 * bit_duration_s;
    let mut medium = SimMedium::new(DeviceProfile::phone(), link.channel()?).map_err(err)?;
    medium.add_transmission(0.0, schedule.clone());
    let capture = medium
        .capture(metric, rate, -lead, lead + schedule.total_duration_s())
        .map_err(err)?;
    let rx =
        decode_capture(&capture, &ReceiverConfig::new(cfg, metric, bits.len())).map_err(err)?;
    let bit_errors = match &rx.bits {
        Some(got) => got.iter().zip(bits.iter()).filter(|(a, b)| a != b).count(),
        None => bits.len(),
    };
    let demand = (0..capture.len())
        .map(|i| schedule.load_at(capture.time_of(i) + 0.5 / rate))
        .collect();
    let out = Transmission {
        sent: bits.to_string(),
        received: rx.bits.as_ref().map(|b| b.to_string()),
        bit_errors,
        threshold: rx.threshold,
        flat: rx.flat,
        sample_rate_hz: rate,
        start_s: capture.start_time_s,
        samples: capture.samples,
        demand,
    };
    serde_json::to_string(&out).map_err(err)
}

/// BER against data rate, `trials` messages of 100 bits per rate.
pub fn sweep(link: &Link, rates_bps: &[f64], trials: usize) -> Result<String, String> {
    let plan = BenchPlan {
        data_rates_bps: rates_bps.to_vec(),
        trials_per_rate: trials,
        scheme: link.scheme.parse().map_err(err)?,
        metric: link.metric()?,
        interference: link.interference.parse().map_err(err)?,
        seed: link.seed,
        ..BenchPlan::default()
    };
    let report = run_bench(&plan, &DeviceProfile::phone(), &link.channel()?).map_err(err)?;
    serde_json::to_string(&report.rates).map_err(err)
}

#[derive(Serialize)]
struct Spectrum {
    frequencies_hz: Vec<f64>,
    power: Vec<f64>,
    peak_hz: f64,
    decided: u8,
}

/// Periodogram of one ideal FSK bit window.
pub fn fsk_bit_spectrum(bit: bool, bit_duration_s: f64) -> Result<String, String> {
    let link = Link {
        scheme: "fsk".into(),
        metric: "time_load".into(),
        interference: "none".into(),
        delay_s: 0.0,
        seed: 0,
    };
    let cfg = link.modulation(bit_duration_s)?;
    let bits = BitVector::new(vec![bit]);
    let rate = required_sample_rate(&cfg).map_err(err)?;
    let trace = sample_ideal(&modulate(&bits, &cfg).map_err(err)?, rate);
    let power = power_spectrum(&trace.samples);
    let peak = spectral_peak(&trace.samples, bit_duration_s).map_err(err)?;
    let out = Spectrum {
        frequencies_hz: (1..=power.len())
            .map(|m| m as f64 / bit_duration_s)
            .collect(),
        power,
        peak_hz: peak.frequency_hz,
        decided: u8::from(peak.frequency_hz > 3.0 / bit_duration_s),
    };
    serde_json::to_string(&out).map_err(err)
}

#[wasm_bindgen]
pub fn simulate(
    bits: &str,
    scheme: &str,
    metric: &str,
    interference: &str,
    bit_duration_s: f64,
    delay_s: f64,
    seed: u32,
) -> Result<String, JsError> {
    let link = Link {
        scheme: scheme.into(),
        metric: metric.into(),
        interference: interference.into(),
        delay_s,
        seed: seed.into(),
    };
    transmit(&link, bits, bit_duration_s).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ber_sweep(
    scheme: &str,
    metric: &str,
    interference: &str,
    delay_s: f64,
    trials: u32,
    seed: u32,
) -> Result<String, JsError> {
    let link = Link {
        scheme: scheme.into(),
        metric: metric.into(),
        interference: interference.into(),
        delay_s,
        seed: seed.into(),
    };
    sweep(&link, &loadmodem::bench::DEFAULT_RATES_BPS, trials as usize)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fsk_spectrum(bit: u8, bit_duration_s: f64) -> Result<String, JsError> {
    fsk_bit_spectrum(bit != 0, bit_duration_s).map_err(|e| JsError::new(&e))
}
