use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ask,
    Fsk,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ask" => Ok(Scheme::Ask),
            "fsk" => Ok(Scheme::Fsk),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ask => "ask",
            Scheme::Fsk => "fsk",
        })
    }
}

/// Transmitter-side carrier parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    pub scheme: Scheme,
    /// Seconds per bit; the data rate is its reciprocal.
    pub bit_duration_s: f64,
    pub high_load: f64,
    /// 0.0 means the transmitter adds nothing and the channel baseline shows through.
    pub low_load: f64,
    /// Carrier cycles per bit for a 1 under FSK (a 0 always uses one cycle).
    pub fsk_cycle_ratio: u32,
}

impl ModulationConfig {
    pub fn new(scheme: Scheme, bit_duration_s: f64) -> Self {
        ModulationConfig {
            scheme,
            bit_duration_s,
            high_load: 1.0,
            low_load: 0.0,
            fsk_cycle_ratio: 5,
        }
    }

    pub fn data_rate_bps(&self) -> f64 {
        1.0 / self.bit_duration_s
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bit_duration_s.is_finite() || self.bit_duration_s <= 0.0 {
            return Err(Error::invalid(format!(
                "bit duration must be positive and finite, got {}",
                self.bit_duration_s
            )));
        }
        if !(self.high_load > 0.0 && self.high_load <= 1.0) {
            return Err(Error::invalid(format!(
                "high load must lie in (0, 1], got {}",
                self.high_load
            )));
        }
        if !(self.low_load >= 0.0 && self.low_load < 1.0) {
            return Err(Error::invalid(format!(
                "low load must lie in [0, 1), got {}",
                self.low_load
            )));
        }
        if self.high_load <= self.low_load {
            return Err(Error::invalid("high load must exceed low load"));
        }
        if self.fsk_cycle_ratio < 2 {
            return Err(Error::invalid("fsk cycle ratio must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: f64,
    pub target_load: f64,
}

/// Piecewise-constant target load starting at t = 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WaveformSchedule {
    segments: Vec<Segment>,
    /// Start time of each segment, same length as `segments`.
    #[serde(skip)]
    starts: Vec<f64>,
    total_duration_s: f64,
}

impl WaveformSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut starts = Vec::with_capacity(segments.len());
        let mut t = 0.0;
        for seg in &segments {
            if !(seg.duration_s > 0.0 && seg.duration_s.is_finite()) {
                return Err(Error::invalid(format!(
                    "segment duration must be positive, got {}",
                    seg.duration_s
                )));
            }
            if !(0.0..=1.0).contains(&seg.target_load) {
                return Err(Error::invalid(format!(
                    "target load must lie in [0, 1], got {}",
                    seg.target_load
                )));
            }
            starts.push(t);
            t += seg.duration_s;
        }
        Ok(WaveformSchedule {
            segments,
            starts,
            total_duration_s: t,
        })
    }

    pub fn empty() -> Self {
        WaveformSchedule::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration_s(&self) -> f64 {
        self.total_duration_s
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn shortest_segment_s(&self) -> Option<f64> {
        self.segments.iter().map(|s| s.duration_s).reduce(f64::min)
    }

    /// Segment boundaries including 0 and the end time.
    pub fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.starts
            .iter()
            .copied()
            .chain((!self.segments.is_empty()).then_some(self.total_duration_s))
    }

    /// Target load at `t`; zero outside the schedule.
    pub fn load_at(&self, t: f64) -> f64 {
        if self.segments.is_empty() || t < 0.0 || t >= self.total_duration_s {
            return 0.0;
        }
        let idx = self.starts.partition_point(|&s| s <= t) - 1;
        self.segments[idx].target_load
    }

    /// Merge adjacent segments with identical loads. Total duration is unchanged.
    pub fn merged(&self) -> WaveformSchedule {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            match out.last_mut() {
                Some(last) if last.target_load == seg.target_load => {
                    last.duration_s += seg.duration_s
                }
                _ => out.push(*seg),
            }
        }
        WaveformSchedule::new(out).expect("merging preserves validity")
    }
}

/// Encode `bits` as a unipolar NRZ workload waveform.
///
/// ASK holds the high or low load for the whole bit. FSK sends a square wave
/// starting high: one cycle per bit for a 0, `fsk_cycle_ratio` cycles for a 1.
pub fn modulate(bits: &BitVector, cfg: &ModulationConfig) -> Result<WaveformSchedule> {
    if bits.is_empty() {
        return Err(Error::invalid("cannot modulate an empty bit vector"));
    }
    cfg.validate()?;
    let t = cfg.bit_duration_s;
    let mut segments = Vec::new();
    for bit in bits.iter() {
        match cfg.scheme {
            Scheme::Ask => segments.push(Segment {
                duration_s: t,
                target_load: if bit { cfg.high_load } else { cfg.low_load },
            }),
            Scheme::Fsk => {
                let half_cycles = if bit { 2 * cfg.fsk_cycle_ratio } else { 2 };
                let d = t / half_cycles as f64;
                for k in 0..half_cycles {
                    segments.push(Segment {
                        duration_s: d,
                        target_load: if k % 2 == 0 {
                            cfg.high_load
                        } else {
                            cfg.low_load
                        },
                    });
                }
            }
        }
    }
    WaveformSchedule::new(segments)
}

/// Four times the highest carrier frequency: 4/T for ASK, 4·ratio/T for FSK.
pub fn required_sample_rate(cfg: &ModulationConfig) -> Result<f64> {
    cfg.validate()?;
    let cycles = match cfg.scheme {
        Scheme::Ask => 1.0,
        Scheme::Fsk => cfg.fsk_cycle_ratio as f64,
    };
    Ok(4.0 * cycles / cfg.bit_duration_s)
}
