use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::device::{DeviceProfile, GovernorKind};
use super::noise::{NoiseSource, STREAM_MEDIA};
use crate::codec::{Segment, WaveformSchedule};
use crate::error::{Error, Result};

/// Background activity competing with the transmitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interference {
    None,
    /// Media playback: a random level redrawn at a fixed interval.
    Media,
    /// Archive compression: periodic on/off bursts.
    Compress,
    Custom(WaveformSchedule),
}

impl Interference {
    pub fn name(&self) -> &'static str {
        match self {
            Interference::None => "none",
            Interference::Media => "media",
            Interference::Compress => "compress",
            Interference::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for Interference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Interference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Interference::None),
            "media" => Ok(Interference::Media),
            "compress" => Ok(Interference::Compress),
            other => Err(Error::invalid(format!(
                "unknown interference `{other}` (custom needs a schedule)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceParams {
    pub media_min: f64,
    pub media_max: f64,
    pub media_interval_s: f64,
    pub compress_level: f64,
    pub compress_on_s: f64,
    pub compress_off_s: f64,
}

impl Default for InterferenceParams {
    fn default() -> Self {
        InterferenceParams {
            media_min: 0.10,
            media_max: 0.30,
            media_interval_s: 0.25,
            compress_level: 0.60,
            compress_on_s: 2.0,
            compress_off_s: 0.5,
        }
    }
}

/// Everything on the device that is not the transmitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub baseline_load: f64,
    /// Gaussian jitter on the baseline, redrawn every [`BASELINE_NOISE_INTERVAL_S`].
    pub baseline_noise_sigma: f64,
    pub interference: Interference,
    pub interference_params: InterferenceParams,
    /// Lag between the transmitter's intended and actual workload change.
    pub tx_response_delay_s: f64,
    /// Gaussian sensor noise added to each time-load sample.
    pub measurement_noise_sigma: f64,
    pub rng_seed: u64,
}

pub const BASELINE_NOISE_INTERVAL_S: f64 = 0.05;

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            baseline_load: 0.05,
            baseline_noise_sigma: 0.02,
            interference: Interference::None,
            interference_params: InterferenceParams::default(),
            tx_response_delay_s: 0.0,
            measurement_noise_sigma: 0.01,
            rng_seed: 0,
        }
    }
}

impl ChannelConfig {
    /// No baseline, no noise, no interference, no delay.
    pub fn ideal() -> Self {
        ChannelConfig {
            baseline_load: 0.0,
            baseline_noise_sigma: 0.0,
            measurement_noise_sigma: 0.0,
            ..ChannelConfig::default()
        }
    }

    pub fn with_interference(mut self, interference: Interference) -> Self {
        self.interference = interference;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.interference_params;
        let fractions = [
            ("baseline_load", self.baseline_load),
            ("media_min", p.media_min),
            ("media_max", p.media_max),
            ("compress_level", p.compress_level),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if p.media_min > p.media_max {
            return Err(Error::invalid("media_min exceeds media_max"));
        }
        let nonneg = [
            ("baseline_noise_sigma", self.baseline_noise_sigma),
            ("measurement_noise_sigma", self.measurement_noise_sigma),
            ("tx_response_delay_s", self.tx_response_delay_s),
            ("compress_off_s", p.compress_off_s),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("media_interval_s", p.media_interval_s),
            ("compress_on_s", p.compress_on_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Interference load at time `t` for a given seed.
pub fn interference_signal(
    kind: &Interference,
    params: &InterferenceParams,
    t: f64,
    seed: u64,
) -> f64 {
    interference_with(kind, params, t, &NoiseSource::new(seed))
}

pub(crate) fn media_index(params: &InterferenceParams, t: f64) -> i64 {
    (t / params.media_interval_s).floor() as i64
}

pub(crate) fn media_level(params: &InterferenceParams, index: i64, noise: &NoiseSource) -> f64 {
    params.media_min + (params.media_max - params.media_min) * noise.uniform(STREAM_MEDIA, index)
}

pub(crate) fn interference_with(
    kind: &Interference,
    params: &InterferenceParams,
    t: f64,
    noise: &NoiseSource,
) -> f64 {
    match kind {
        Interference::None => 0.0,
        Interference::Media => media_level(params, media_index(params, t), noise),
        Interference::Compress => {
            let period = params.compress_on_s + params.compress_off_s;
            if t.rem_euclid(period) < params.compress_on_s {
                params.compress_level
            } else {
                0.0
            }
        }
        Interference::Custom(schedule) => schedule.load_at(t),
    }
}

/// Device and channel settings read from a `key = value` file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimProfile {
    pub device: DeviceProfile,
    pub channel: ChannelConfig,
}

impl SimProfile {
    /// Parse `key = value` lines. `#` starts a comment; unknown keys are errors.
    ///
    /// `preset = phone|rpi|ideal` resets the device and must come first if used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut profile = SimProfile::default();
        let mut custom: Option<Vec<Segment>> = None;
        let mut custom_selected = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|e| err(format!("{key}: `{v}` is not a number ({e})")))
            };
            let dev = &mut profile.device;
            let ch = &mut profile.channel;
            let ip = &mut ch.interference_params;
            match key {
                "preset" => {
                    *dev = match value {
                        "phone" => DeviceProfile::phone(),
                        "rpi" => DeviceProfile::rpi(),
                        "ideal" => DeviceProfile::ideal(),
                        other => return Err(err(format!("unknown preset `{other}`"))),
                    }
                }
                "n_cores" => {
                    dev.n_cores = value
                        .parse()
                        .map_err(|e| err(format!("n_cores: `{value}` ({e})")))?
                }
                "clock_levels_hz" => {
                    dev.clock_levels_hz = value
                        .split(',')
                        .map(|v| num(v.trim()).map(|f| f.round() as u64))
                        .collect::<Result<_>>()?
                }
                "governor" => {
                    dev.governor = match value {
                        "ondemand" => GovernorKind::OnDemand,
                        "performance" => GovernorKind::Performance,
                        other => return Err(err(format!("unknown governor `{other}`"))),
                    }
                }
                "dvfs_reaction_delay_s" => dev.dvfs_reaction_delay_s = num(value)?,
                "dvfs_min_dwell_s" => dev.dvfs_min_dwell_s = num(value)?,
                "baseline_load" => ch.baseline_load = num(value)?,
                "baseline_noise_sigma" => ch.baseline_noise_sigma = num(value)?,
                "measurement_noise_sigma" => ch.measurement_noise_sigma = num(value)?,
                "tx_response_delay_s" => ch.tx_response_delay_s = num(value)?,
                "rng_seed" => {
                    ch.rng_seed = value
                        .parse()
                        .map_err(|e| err(format!("rng_seed: `{value}` ({e})")))?
                }
                "interference" => {
                    if value == "custom" {
                        custom_selected = true;
                    } else {
                        ch.interference = value.parse().map_err(|e: Error| err(e.to_string()))?;
                    }
                }
                "custom_schedule" => {
                    let segs = value
                        .split(',')
                        .map(|pair| {
                            let (d, l) = pair.trim().split_once(':').ok_or_else(|| {
                                err(format!("expected `duration:load`, got `{pair}`"))
                            })?;
                            Ok(Segment {
                                duration_s: num(d.trim())?,
                                target_load: num(l.trim())?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    custom = Some(segs);
                }
                "media_min" => ip.media_min = num(value)?,
                "media_max" => ip.media_max = num(value)?,
                "media_interval_s" => ip.media_interval_s = num(value)?,
                "compress_level" => ip.compress_level = num(value)?,
                "compress_on_s" => ip.compress_on_s = num(value)?,
                "compress_off_s" => ip.compress_off_s = num(value)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        if custom_selected {
            let segs = custom.ok_or_else(|| Error::Parse {
                line: 0,
                message: "interference = custom requires custom_schedule".into(),
            })?;
            profile.channel.interference = Interference::Custom(WaveformSchedule::new(segs)?);
        }
        profile.device.validate()?;
        profile.channel.validate()?;
        Ok(profile)
    }
}
