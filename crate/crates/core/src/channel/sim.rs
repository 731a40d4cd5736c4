use super::config::{
    interference_with, media_index, media_level, ChannelConfig, Interference,
    BASELINE_NOISE_INTERVAL_S,
};
use super::device::{DeviceProfile, GovernorKind};
use super::noise::{NoiseSource, STREAM_BASELINE, STREAM_MEASUREMENT};
use crate::codec::WaveformSchedule;
use crate::error::{Error, Result};
use crate::sysload::{frequency_load, CpuFreqReading};
use crate::trace::{sample_count, Metric, WorkloadTrace};

/// Integration points per sample interval.
pub const TICKS_PER_SAMPLE: usize = 8;

/// Virtual time advanced in fixed ticks that evenly divide the sample interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub tick_s: f64,
    pub now_s: f64,
}

impl SimClock {
    pub fn for_sample_rate(sample_rate_hz: f64, start_s: f64) -> Self {
        SimClock {
            tick_s: 1.0 / (sample_rate_hz * TICKS_PER_SAMPLE as f64),
            now_s: start_s,
        }
    }

    pub fn advance(&mut self, seconds: f64) {
        self.now_s += seconds;
    }
}

/// A simulated device with any number of scheduled transmissions on it.
///
/// Time is measured in seconds from an arbitrary origin; each transmission is
/// placed at its own start time.
#[derive(Debug, Clone)]
pub struct SimMedium {
    device: DeviceProfile,
    channel: ChannelConfig,
    noise: NoiseSource,
    transmissions: Vec<(f64, WaveformSchedule)>,
    pub clock: SimClock,
}

impl SimMedium {
    pub fn new(device: DeviceProfile, channel: ChannelConfig) -> Result<Self> {
        device.validate()?;
        channel.validate()?;
        Ok(SimMedium {
            noise: NoiseSource::new(channel.rng_seed),
            device,
            channel,
            transmissions: Vec::new(),
            clock: SimClock {
                tick_s: 0.01,
                now_s: 0.0,
            },
        })
    }

    pub fn device(&self) -> &DeviceProfile {
        &self.device
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    /// Schedule a transmitter waveform to begin at `start_s`.
    pub fn add_transmission(&mut self, start_s: f64, schedule: WaveformSchedule) {
        self.transmissions.push((start_s, schedule));
    }

    pub fn transmissions(&self) -> &[(f64, WaveformSchedule)] {
        &self.transmissions
    }

    fn tx_load(&self, t: f64) -> f64 {
        let t = t - self.channel.tx_response_delay_s;
        self.transmissions
            .iter()
            .map(|(start, s)| s.load_at(t - start))
            .sum()
    }

    /// Total processor demand at `t`, clamped to [0, 1].
    pub fn effective_demand(&self, t: f64) -> f64 {
        let ch = &self.channel;
        let baseline =
            ch.baseline_load + ch.baseline_noise_sigma * self.baseline_jitter(baseline_index(t));
        let interference =
            interference_with(&ch.interference, &ch.interference_params, t, &self.noise);
        (baseline + interference + self.tx_load(t)).clamp(0.0, 1.0)
    }

    fn baseline_jitter(&self, index: i64) -> f64 {
        if self.channel.baseline_noise_sigma == 0.0 {
            0.0
        } else {
            self.noise.gaussian(STREAM_BASELINE, index)
        }
    }

    /// Sense `metric` over `[start_s, start_s + duration_s)`.
    pub fn capture(
        &self,
        metric: Metric,
        sample_rate_hz: f64,
        start_s: f64,
        duration_s: f64,
    ) -> Result<WorkloadTrace> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !(duration_s.is_finite() && duration_s * sample_rate_hz >= 1.0 - 1e-9) {
            return Err(Error::invalid(format!(
                "duration {duration_s} s is shorter than one sample at {sample_rate_hz} Hz"
            )));
        }
        let n = sample_count(duration_s, sample_rate_hz);
        let mut clock = SimClock::for_sample_rate(sample_rate_hz, start_s);
        let mut demand = DemandCursor::new(self);
        let first_t = start_s + 0.5 * clock.tick_s;
        let mut governor = Governor::new(&self.device, demand.at(first_t));
        let max = self.device.max_clock_hz();
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..TICKS_PER_SAMPLE {
                let t = start_s
                    + (i as f64 + (j as f64 + 0.5) / TICKS_PER_SAMPLE as f64) / sample_rate_hz;
                let d = demand.at(t);
                acc += d;
                governor.step(t, d);
                clock.advance(clock.tick_s);
            }
            let value = match metric {
                Metric::TimeLoad => {
                    let sigma = self.channel.measurement_noise_sigma;
                    let jitter = if sigma == 0.0 {
                        0.0
                    } else {
                        let index =
                            ((start_s * sample_rate_hz).round() as i64).wrapping_add(i as i64);
                        sigma * self.noise.gaussian(STREAM_MEASUREMENT, index)
                    };
                    (acc / TICKS_PER_SAMPLE as f64 + jitter).clamp(0.0, 1.0)
                }
                Metric::FrequencyLoad => {
                    let level = self.device.clock_levels_hz[governor.level];
                    let reading = CpuFreqReading::uniform(self.device.n_cores, level, max)?;
                    frequency_load(&reading)?
                }
            };
            samples.push(value);
        }
        WorkloadTrace::new(metric, sample_rate_hz, start_s, samples)
    }
}

fn baseline_index(t: f64) -> i64 {
    (t / BASELINE_NOISE_INTERVAL_S).floor() as i64
}

/// Evaluates demand at increasing times, reusing random draws that stay
/// constant over their hold interval.
struct DemandCursor<'a> {
    medium: &'a SimMedium,
    baseline: Option<(i64, f64)>,
    media: Option<(i64, f64)>,
}

impl<'a> DemandCursor<'a> {
    fn new(medium: &'a SimMedium) -> Self {
        DemandCursor {
            medium,
            baseline: None,
            media: None,
        }
    }

    fn at(&mut self, t: f64) -> f64 {
        let m = self.medium;
        let ch = &m.channel;
        let bi = baseline_index(t);
        let jitter = match self.baseline {
            Some((idx, v)) if idx == bi => v,
            _ => {
                let v = m.baseline_jitter(bi);
                self.baseline = Some((bi, v));
                v
            }
        };
        let interference = match &ch.interference {
            Interference::Media => {
                let mi = media_index(&ch.interference_params, t);
                match self.media {
                    Some((idx, v)) if idx == mi => v,
                    _ => {
                        let v = media_level(&ch.interference_params, mi, &m.noise);
                        self.media = Some((mi, v));
                        v
                    }
                }
            }
            other => interference_with(other, &ch.interference_params, t, &m.noise),
        };
        (ch.baseline_load + ch.baseline_noise_sigma * jitter + interference + m.tx_load(t))
            .clamp(0.0, 1.0)
    }
}

/// Lowest-sufficient-level DVFS governor with reaction delay and dwell time.
struct Governor<'a> {
    device: &'a DeviceProfile,
    level: usize,
    pending_since: Option<f64>,
    last_switch: f64,
}

impl<'a> Governor<'a> {
    fn new(device: &'a DeviceProfile, initial_demand: f64) -> Self {
        let mut g = Governor {
            device,
            level: 0,
            pending_since: None,
            last_switch: f64::NEG_INFINITY,
        };
        g.level = g.desired(initial_demand);
        g
    }

    fn desired(&self, demand: f64) -> usize {
        let levels = &self.device.clock_levels_hz;
        let top = levels.len() - 1;
        if self.device.governor == GovernorKind::Performance {
            return top;
        }
        let max = self.device.max_clock_hz() as f64;
        levels
            .iter()
            .position(|&l| l as f64 / max >= demand - 1e-12)
            .unwrap_or(top)
    }

    fn step(&mut self, t: f64, demand: f64) {
        let want = self.desired(demand);
        if want == self.level {
            self.pending_since = None;
            return;
        }
        let since = *self.pending_since.get_or_insert(t);
        let waited = t - since >= self.device.dvfs_reaction_delay_s - 1e-12;
        let dwelt = t - self.last_switch >= self.device.dvfs_min_dwell_s - 1e-12;
        if waited && dwelt {
            self.level = want;
            self.last_switch = t;
            self.pending_since = None;
        }
    }
}

/// Demand at `t` with a single transmission starting at 0.
pub fn effective_demand(
    t: f64,
    tx: &WaveformSchedule,
    device: &DeviceProfile,
    cfg: &ChannelConfig,
) -> Result<f64> {
    Ok(single(tx, device, cfg)?.effective_demand(t))
}

pub fn sample_time_load(
    tx: &WaveformSchedule,
    device: &DeviceProfile,
    cfg: &ChannelConfig,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<WorkloadTrace> {
    single(tx, device, cfg)?.capture(Metric::TimeLoad, sample_rate_hz, 0.0, duration_s)
}

pub fn sample_frequency_load(
    tx: &WaveformSchedule,
    device: &DeviceProfile,
    cfg: &ChannelConfig,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<WorkloadTrace> {
    single(tx, device, cfg)?.capture(Metric::FrequencyLoad, sample_rate_hz, 0.0, duration_s)
}

fn single(tx: &WaveformSchedule, device: &DeviceProfile, cfg: &ChannelConfig) -> Result<SimMedium> {
    let mut m = SimMedium::new(device.clone(), cfg.clone())?;
    m.add_transmission(0.0, tx.clone());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::InterferenceParams;
    use crate::codec::{modulate, ModulationConfig, Scheme, Segment};

    fn quiet() -> ChannelConfig {
        ChannelConfig {
            baseline_noise_sigma: 0.0,
            measurement_noise_sigma: 0.0,
            ..ChannelConfig::default()
        }
    }

    fn constant(load: f64, d: f64) -> WaveformSchedule {
        WaveformSchedule::new(vec![Segment {
            duration_s: d,
            target_load: load,
        }])
        .unwrap()
    }

    #[test]
    fn saturation_and_passthrough() {
        let dev = DeviceProfile::phone();
        assert_eq!(
            effective_demand(1.0, &constant(1.0, 4.0), &dev, &quiet()).unwrap(),
            1.0
        );
        assert_eq!(
            effective_demand(1.0, &constant(0.0, 4.0), &dev, &quiet()).unwrap(),
            0.05
        );
    }

    #[test]
    fn media_adds_to_baseline() {
        let p = InterferenceParams {
            media_min: 0.2,
            media_max: 0.2,
            ..InterferenceParams::default()
        };
        let cfg = ChannelConfig {
            interference: Interference::Media,
            interference_params: p,
            ..quiet()
        }
        .with_seed(11);
        let d = effective_demand(3.3, &constant(0.0, 4.0), &DeviceProfile::phone(), &cfg).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ask_10_at_one_hertz() {
        let tx = modulate(
            &"10".parse().unwrap(),
            &ModulationConfig::new(Scheme::Ask, 4.0),
        )
        .unwrap();
        let trace = sample_time_load(&tx, &DeviceProfile::phone(), &quiet(), 1.0, 8.0).unwrap();
        let expected = [1.0, 1.0, 1.0, 1.0, 0.05, 0.05, 0.05, 0.05];
        assert_eq!(trace.samples.len(), 8);
        for (got, want) in trace.samples.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn baseline_only_trace() {
        let trace = sample_time_load(
            &WaveformSchedule::empty(),
            &DeviceProfile::phone(),
            &quiet(),
            2.0,
            5.0,
        )
        .unwrap();
        assert_eq!(trace.samples.len(), 10);
        assert!(trace.samples.iter().all(|v| (v - 0.05).abs() < 1e-12));
    }

    #[test]
    fn same_seed_same_trace() {
        let tx = modulate(
            &"1101".parse().unwrap(),
            &ModulationConfig::new(Scheme::Fsk, 1.0),
        )
        .unwrap();
        let cfg = ChannelConfig::default()
            .with_interference(Interference::Media)
            .with_seed(5);
        let dev = DeviceProfile::phone();
        for metric in [Metric::TimeLoad, Metric::FrequencyLoad] {
            let m = single(&tx, &dev, &cfg).unwrap();
            let a = m.capture(metric, 20.0, -1.0, 5.0).unwrap();
            let b = m.capture(metric, 20.0, -1.0, 5.0).unwrap();
            assert_eq!(a, b);
        }
        let other = single(&tx, &dev, &cfg.clone().with_seed(6)).unwrap();
        let a = single(&tx, &dev, &cfg)
            .unwrap()
            .capture(Metric::TimeLoad, 20.0, 0.0, 4.0)
            .unwrap();
        assert_ne!(a, other.capture(Metric::TimeLoad, 20.0, 0.0, 4.0).unwrap());
    }

    #[test]
    fn governor_levels() {
        let dev = DeviceProfile {
            n_cores: 4,
            clock_levels_hz: vec![600_000_000, 1_200_000_000],
            governor: GovernorKind::OnDemand,
            dvfs_reaction_delay_s: 0.0,
            dvfs_min_dwell_s: 0.0,
        };
        let cfg = ChannelConfig {
            baseline_load: 0.0,
            ..quiet()
        };
        let hi = sample_frequency_load(&constant(1.0, 2.0), &dev, &cfg, 4.0, 2.0).unwrap();
        assert!(hi.samples.iter().all(|&v| v == 1.0));
        let lo = sample_frequency_load(&constant(0.3, 2.0), &dev, &cfg, 4.0, 2.0).unwrap();
        assert!(lo.samples.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn reaction_delay_holds_the_old_level() {
        let dev = DeviceProfile {
            dvfs_reaction_delay_s: 0.5,
            ..DeviceProfile::ideal()
        };
        let cfg = ChannelConfig {
            baseline_load: 0.0,
            ..quiet()
        };
        let tx = WaveformSchedule::new(vec![
            Segment {
                duration_s: 1.0,
                target_load: 0.0,
            },
            Segment {
                duration_s: 2.0,
                target_load: 1.0,
            },
        ])
        .unwrap();
        let trace = sample_frequency_load(&tx, &dev, &cfg, 4.0, 3.0).unwrap();
        let low = 200.0 / 1200.0;
        // Demand rises at 1.0 s; the governor follows half a second later.
        assert!((trace.samples[3] - low).abs() < 1e-12);
        assert!((trace.samples[5] - low).abs() < 1e-12);
        assert_eq!(trace.samples[6], 1.0);
    }

    #[test]
    fn rejects_bad_sampling() {
        let dev = DeviceProfile::phone();
        let tx = constant(1.0, 1.0);
        assert!(sample_time_load(&tx, &dev, &quiet(), 0.0, 1.0).is_err());
        assert!(sample_time_load(&tx, &dev, &quiet(), 1.0, 0.5).is_err());
    }
}
