#![allow(dead_code)]

use std::path::PathBuf;

use loadmodem::bench::{run_bench, BenchPlan, DEFAULT_RATES_BPS};
use loadmodem::channel::{ChannelConfig, DeviceProfile, Interference};
use loadmodem::codec::Scheme;
use loadmodem::sysload::{CoreFreq, ProcStatSnapshot};
use loadmodem::Metric;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub const SCHEMES: [Scheme; 2] = [Scheme::Ask, Scheme::Fsk];
pub const METRICS: [Metric; 2] = [Metric::TimeLoad, Metric::FrequencyLoad];

/// Mean over cores of current / max, summed back to front.
pub fn freq_load_by_hand(cores: &[CoreFreq]) -> f64 {
    let mut sum = 0.0;
    for c in cores.iter().rev() {
        sum += c.current_hz as f64 / c.max_hz as f64;
    }
    sum / cores.len() as f64
}

pub fn modern_stat_snapshot() -> ProcStatSnapshot {
    ProcStatSnapshot {
        user: 10132153,
        nice: 290696,
        system: 3084719,
        idle: 46828483,
        iowait: 16683,
        irq: 0,
        softirq: 25195,
        steal: 0,
        guest: 175628,
        guest_nice: 0,
    }
}

pub fn legacy_stat_snapshot() -> ProcStatSnapshot {
    ProcStatSnapshot {
        user: 2255,
        nice: 34,
        system: 2290,
        idle: 22625563,
        iowait: 6290,
        irq: 127,
        softirq: 456,
        steal: 0,
        guest: 0,
        guest_nice: 0,
    }
}

pub fn phone_cores() -> Vec<CoreFreq> {
    [998_400_000, 998_400_000, 533_333_000, 200_000_000]
        .into_iter()
        .map(|current_hz| CoreFreq {
            current_hz,
            max_hz: 1_200_000_000,
        })
        .collect()
}

pub fn fallback_cores() -> Vec<CoreFreq> {
    [(600, 1200), (1200, 1200), (2400, 2400), (1800, 2400)]
        .into_iter()
        .map(|(c, m)| CoreFreq {
            current_hz: c * 1_000_000,
            max_hz: m * 1_000_000,
        })
        .collect()
}

/// ber_avg per default-grid rate, averaged over `seeds`.
pub fn mean_curve(
    scheme: Scheme,
    metric: Metric,
    interference: &Interference,
    channel: &ChannelConfig,
    seeds: std::ops::Range<u64>,
) -> Vec<f64> {
    let n = seeds.end - seeds.start;
    let mut curve = vec![0.0; DEFAULT_RATES_BPS.len()];
    for seed in seeds {
        let plan = BenchPlan {
            scheme,
            metric,
            interference: interference.clone(),
            seed,
            ..BenchPlan::default()
        };
        let report = run_bench(&plan, &DeviceProfile::phone(), channel).expect("bench runs");
        for (acc, r) in curve.iter_mut().zip(&report.rates) {
            *acc += r.ber_avg / n as f64;
        }
    }
    curve
}
