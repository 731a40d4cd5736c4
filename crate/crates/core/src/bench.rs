//! BER versus data rate on the simulated channel.

use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitVector;
use crate::channel::{ChannelConfig, DeviceProfile, Interference, SimMedium};
use crate::codec::{modulate, required_sample_rate, ModulationConfig, Scheme};
use crate::error::{Error, Result};
use crate::receiver::{decode_capture, ReceiverConfig};
use crate::trace::Metric;

pub const DEFAULT_RATES_BPS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchPlan {
    pub data_rates_bps: Vec<f64>,
    pub bits_per_trial: usize,
    pub trials_per_rate: usize,
    pub scheme: Scheme,
    pub metric: Metric,
    #[serde(serialize_with = "ser_interference")]
    pub interference: Interference,
    pub seed: u64,
}

fn ser_interference<S: serde::Serializer>(
    i: &Interference,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(i.name())
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            data_rates_bps: DEFAULT_RATES_BPS.to_vec(),
            bits_per_trial: 100,
            trials_per_rate: 4,
            scheme: Scheme::Ask,
            metric: Metric::TimeLoad,
            interference: Interference::None,
            seed: 0,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.data_rates_bps.is_empty() {
            return Err(Error::invalid("bench needs at least one data rate"));
        }
        for (i, &r) in self.data_rates_bps.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!(
                    "data rate must be positive, got {r}"
                )));
            }
            if self.data_rates_bps[..i].contains(&r) {
                return Err(Error::invalid(format!("duplicate data rate {r}")));
            }
        }
        if self.bits_per_trial == 0 || self.trials_per_rate == 0 {
            return Err(Error::invalid(
                "bits per trial and trials per rate must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub rate_bps: f64,
    pub trial: usize,
    pub seed: u64,
    pub bit_errors: usize,
    pub ber: f64,
    /// The capture was too short to demodulate; every bit counted as an error.
    pub insufficient_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub rate_bps: f64,
    pub ber_min: f64,
    pub ber_avg: f64,
    pub ber_max: f64,
    pub trials: usize,
    pub bits_per_trial: usize,
    pub insufficient_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerReport {
    pub plan: BenchPlan,
    /// Ascending by rate.
    pub rates: Vec<RateSummary>,
    pub trials: Vec<TrialResult>,
}

impl BerReport {
    pub fn rate(&self, rate_bps: f64) -> Option<&RateSummary> {
        self.rates.iter().find(|r| r.rate_bps == rate_bps)
    }
}

/// splitmix64 finalizer, used to give every trial its own seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(plan_seed: u64, rate_bps: f64, trial: usize) -> u64 {
    mix(mix(plan_seed ^ rate_bps.to_bits()) ^ trial as u64)
}

/// One trial: random bits sent from time 0, captured from `-2T` so the
/// receiver sees a baseline first, then compared position by position.
pub fn run_trial(
    plan: &BenchPlan,
    rate_bps: f64,
    trial: usize,
    device: &DeviceProfile,
    channel: &ChannelConfig,
) -> Result<TrialResult> {
    let seed = trial_seed(plan.seed, rate_bps, trial);
    let bits = BitVector::random(&mut ChaCha8Rng::seed_from_u64(seed), plan.bits_per_trial);
    let modulation = ModulationConfig::new(plan.scheme, 1.0 / rate_bps);
    let waveform = modulate(&bits, &modulation)?;
    let ch = channel
        .clone()
        .with_interference(plan.interference.clone())
        .with_seed(seed);
    let mut medium = SimMedium::new(device.clone(), ch)?;
    medium.add_transmission(0.0, waveform);

    let t = modulation.bit_duration_s;
    let rate = required_sample_rate(&modulation)?;
    let lead = 2.0 * t;
    let capture = medium.capture(
        plan.metric,
        rate,
        -lead,
        lead + plan.bits_per_trial as f64 * t,
    )?;
    let cfg = ReceiverConfig::new(modulation, plan.metric, plan.bits_per_trial);
    let reception = decode_capture(&capture, &cfg)?;
    let (bit_errors, insufficient_data) = match &reception.bits {
        Some(rx) => (rx.hamming_distance(&bits), false),
        None => (plan.bits_per_trial, true),
    };
    Ok(TrialResult {
        rate_bps,
        trial,
        seed,
        bit_errors,
        ber: bit_errors as f64 / plan.bits_per_trial as f64,
        insufficient_data,
    })
}

pub fn run_bench(
    plan: &BenchPlan,
    device: &DeviceProfile,
    channel: &ChannelConfig,
) -> Result<BerReport> {
    plan.validate()?;
    device.validate()?;
    channel.validate()?;
    let mut rates = plan.data_rates_bps.clone();
    rates.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, usize)> = rates
        .iter()
        .flat_map(|&r| (0..plan.trials_per_rate).map(move |k| (r, k)))
        .collect();

    let run = |&(r, k): &(f64, usize)| run_trial(plan, r, k, device, channel);
    #[cfg(feature = "parallel")]
    let trials: Vec<TrialResult> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let trials: Vec<TrialResult> = jobs.iter().map(run).collect::<Result<_>>()?;

    let summaries = rates
        .iter()
        .map(|&r| {
            let of_rate: Vec<&TrialResult> = trials.iter().filter(|t| t.rate_bps == r).collect();
            let bers = of_rate.iter().map(|t| t.ber);
            RateSummary {
                rate_bps: r,
                ber_min: bers.clone().fold(f64::INFINITY, f64::min),
                ber_avg: bers.clone().sum::<f64>() / of_rate.len() as f64,
                ber_max: bers.fold(f64::NEG_INFINITY, f64::max),
                trials: of_rate.len(),
                bits_per_trial: plan.bits_per_trial,
                insufficient_trials: of_rate.iter().filter(|t| t.insufficient_data).count(),
            }
        })
        .collect();
    Ok(BerReport {
        plan: plan.clone(),
        rates: summaries,
        trials,
    })
}

/// Violations of the report's own invariants; empty when consistent.
pub fn check_invariants(report: &BerReport) -> Vec<String> {
    let mut problems = Vec::new();
    for r in &report.rates {
        let ok = 0.0 <= r.ber_min
            && r.ber_min <= r.ber_avg + 1e-12
            && r.ber_avg <= r.ber_max + 1e-12
            && r.ber_max <= 1.0;
        if !ok {
            problems.push(format!(
                "rate {}: min/avg/max {}/{}/{} out of order",
                r.rate_bps, r.ber_min, r.ber_avg, r.ber_max
            ));
        }
    }
    for t in &report.trials {
        if t.ber != t.bit_errors as f64 / report.plan.bits_per_trial as f64 {
            problems.push(format!(
                "rate {} trial {}: ber {} != errors/bits",
                t.rate_bps, t.trial, t.ber
            ));
        }
    }
    if report
        .rates
        .windows(2)
        .any(|w| w[0].rate_bps >= w[1].rate_bps)
    {
        problems.push("rates not in ascending order".into());
    }
    problems
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
    Json,
}

pub fn emit_report<W: Write>(report: &BerReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "rate_bps",
                "ber_min",
                "ber_avg",
                "ber_max",
                "trials",
                "bits_per_trial",
            ])?;
            for r in &report.rates {
                w.write_record([
                    r.rate_bps.to_string(),
                    r.ber_min.to_string(),
                    r.ber_avg.to_string(),
                    r.ber_max.to_string(),
                    r.trials.to_string(),
                    r.bits_per_trial.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Text => out.write_all(text_table(report).as_bytes())?,
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn text_table(report: &BerReport) -> String {
    let mut s = String::new();
    let p = &report.plan;
    let _ = writeln!(
        s,
        "{} / {} / interference {}  ({} trials x {} bits)",
        p.scheme,
        p.metric,
        p.interference.name(),
        p.trials_per_rate,
        p.bits_per_trial
    );
    let _ = writeln!(
        s,
        "{:>9}  {:>7}  {:>7}  {:>7}",
        "rate_bps", "min", "avg", "max"
    );
    for r in &report.rates {
        let _ = write!(
            s,
            "{:>9}  {:>7.4}  {:>7.4}  {:>7.4}",
            r.rate_bps, r.ber_min, r.ber_avg, r.ber_max
        );
        if r.insufficient_trials > 0 {
            let _ = write!(s, "  ({} short)", r.insufficient_trials);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(rows: &[(f64, f64, f64, f64)]) -> BerReport {
        BerReport {
            plan: BenchPlan::default(),
            rates: rows
                .iter()
                .map(|&(rate_bps, ber_min, ber_avg, ber_max)| RateSummary {
                    rate_bps,
                    ber_min,
                    ber_avg,
                    ber_max,
                    trials: 4,
                    bits_per_trial: 100,
                    insufficient_trials: 0,
                })
                .collect(),
            trials: vec![],
        }
    }

    #[test]
    fn csv_zero_row() {
        let mut out = Vec::new();
        emit_report(&fake(&[(0.25, 0.0, 0.0, 0.0)]), ReportFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "rate_bps,ber_min,ber_avg,ber_max,trials,bits_per_trial\n0.25,0,0,0,4,100\n"
        );
    }

    #[test]
    fn csv_and_table_have_one_row_per_rate() {
        let r = fake(&[
            (0.5, 0.0, 0.01, 0.02),
            (1.0, 0.0, 0.05, 0.1),
            (2.0, 0.1, 0.2, 0.3),
        ]);
        let mut csv = Vec::new();
        emit_report(&r, ReportFormat::Csv, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
        let table = text_table(&r);
        let rows: Vec<&str> = table.lines().skip(2).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|l| l.len() == rows[0].len()));
    }

    #[test]
    fn plan_validation() {
        assert!(BenchPlan::default().validate().is_ok());
        let dup = BenchPlan {
            data_rates_bps: vec![1.0, 1.0],
            ..BenchPlan::default()
        };
        assert!(dup.validate().is_err());
        let neg = BenchPlan {
            data_rates_bps: vec![-1.0],
            ..BenchPlan::default()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn invariant_checker_catches_disorder() {
        assert!(check_invariants(&fake(&[(1.0, 0.0, 0.1, 0.2)])).is_empty());
        assert!(!check_invariants(&fake(&[(1.0, 0.3, 0.1, 0.2)])).is_empty());
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(0, 0.25, 0), trial_seed(0, 0.25, 1));
        assert_ne!(trial_seed(0, 0.25, 0), trial_seed(0, 0.5, 0));
        assert_eq!(trial_seed(7, 1.0, 2), trial_seed(7, 1.0, 2));
    }
}
