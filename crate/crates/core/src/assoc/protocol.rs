use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::frame::{build_frame, parse_frame, FrameOptions};
use super::registry::{id_hex, InstallationId, VendorRegistry};
use super::rendezvous::{delta, seconds_between, RendezvousSchedule};
use crate::bits::BitVector;
use crate::channel::SimMedium;
use crate::codec::{modulate, required_sample_rate, ModulationConfig, Scheme, WaveformSchedule};
use crate::error::{Error, Result};
use crate::loadgen::{self, available_cores, plan_from_schedule};
use crate::receiver::{decode_capture, ReceiverConfig, Reception};
use crate::sysload::{run_sampler_from, SourcePaths};
use crate::trace::{Metric, WorkloadTrace};

/// Something that can put a workload waveform on the device at a given instant.
pub trait TransmitBackend {
    fn now(&self) -> DateTime<Utc>;
    fn transmit(&mut self, at: DateTime<Utc>, waveform: &WaveformSchedule) -> Result<()>;
}

/// Something that can sense the device's workload over a time window.
pub trait SenseBackend {
    fn now(&self) -> DateTime<Utc>;
    fn capture(
        &mut self,
        metric: Metric,
        sample_rate_hz: f64,
        start: DateTime<Utc>,
        duration_s: f64,
    ) -> Result<WorkloadTrace>;
}

/// A simulated device on a virtual clock. Both parties may act on it in turn;
/// registering a transmission does not advance the clock, capturing does.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub medium: SimMedium,
    origin: DateTime<Utc>,
    now_s: f64,
}

impl SimWorld {
    pub fn new(medium: SimMedium, now: DateTime<Utc>) -> Self {
        SimWorld {
            medium,
            origin: now,
            now_s: 0.0,
        }
    }

    pub fn to_sim_time(&self, at: DateTime<Utc>) -> f64 {
        seconds_between(self.origin, at)
    }

    pub fn set_now(&mut self, now: DateTime<Utc>) {
        self.now_s = self.to_sim_time(now);
    }
}

impl TransmitBackend for SimWorld {
    fn now(&self) -> DateTime<Utc> {
        self.origin + delta(self.now_s)
    }

    fn transmit(&mut self, at: DateTime<Utc>, waveform: &WaveformSchedule) -> Result<()> {
        let start = self.to_sim_time(at);
        self.medium.add_transmission(start, waveform.clone());
        Ok(())
    }
}

impl SenseBackend for SimWorld {
    fn now(&self) -> DateTime<Utc> {
        self.origin + delta(self.now_s)
    }

    fn capture(
        &mut self,
        metric: Metric,
        sample_rate_hz: f64,
        start: DateTime<Utc>,
        duration_s: f64,
    ) -> Result<WorkloadTrace> {
        let start_s = self.to_sim_time(start);
        let trace = self
            .medium
            .capture(metric, sample_rate_hz, start_s, duration_s)?;
        self.now_s = self.now_s.max(start_s + duration_s);
        Ok(trace)
    }
}

fn instant_for(at: DateTime<Utc>) -> Instant {
    let ahead = seconds_between(Utc::now(), at);
    let now = Instant::now();
    if ahead > 0.0 {
        now + std::time::Duration::from_secs_f64(ahead)
    } else {
        now
    }
}

/// Drives this machine's processor with the load generator.
#[derive(Debug, Clone)]
pub struct HostTransmitter {
    pub n_cores: usize,
}

impl Default for HostTransmitter {
    fn default() -> Self {
        HostTransmitter {
            n_cores: available_cores(),
        }
    }
}

impl TransmitBackend for HostTransmitter {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn transmit(&mut self, at: DateTime<Utc>, waveform: &WaveformSchedule) -> Result<()> {
        let plan = plan_from_schedule(waveform.clone(), self.n_cores);
        let start = instant_for(at).max(Instant::now() + std::time::Duration::from_millis(1));
        loadgen::execute(plan, start).map(drop)
    }
}

/// Reads this machine's `/proc/stat` or cpufreq files.
#[derive(Debug, Clone, Default)]
pub struct HostSensor {
    pub paths: SourcePaths,
}

impl SenseBackend for HostSensor {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn capture(
        &mut self,
        metric: Metric,
        sample_rate_hz: f64,
        start: DateTime<Utc>,
        duration_s: f64,
    ) -> Result<WorkloadTrace> {
        let timed = run_sampler_from(
            instant_for(start),
            metric,
            sample_rate_hz,
            duration_s,
            &self.paths,
        )?;
        Ok(timed.trace)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TxReport {
    pub rendezvous_at: DateTime<Utc>,
    pub waited_s: f64,
    pub frame_bits: usize,
    /// Active transmission time, `frame_bits · T`.
    pub airtime_s: f64,
}

/// Wait for the next rendezvous and transmit the framed id.
pub fn run_transmitter(
    id: &InstallationId,
    modulation: &ModulationConfig,
    frame: &FrameOptions,
    schedule: &RendezvousSchedule,
    backend: &mut dyn TransmitBackend,
) -> Result<TxReport> {
    let bits = build_frame(id, frame).serialize();
    let waveform = modulate(&bits, modulation)?;
    let airtime_s = bits.len() as f64 * modulation.bit_duration_s;
    schedule.check_fits(airtime_s)?;
    let now = backend.now();
    let at = schedule.next_after(now);
    backend.transmit(at, &waveform)?;
    Ok(TxReport {
        rendezvous_at: at,
        waited_s: seconds_between(now, at),
        frame_bits: bits.len(),
        airtime_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedRecord {
    pub vendor: String,
    pub id_hex: String,
    pub identity: String,
    pub created_at: DateTime<Utc>,
}

/// What a receiving installation sends back to its own vendor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub reporter_app: String,
    pub reporter_id_hex: String,
    pub detected_id_hex: Option<String>,
    #[serde(serialize_with = "ser_opt_bits")]
    pub detected_bits: Option<BitVector>,
    pub detected_valid: bool,
    pub matched: Option<MatchedRecord>,
    pub rendezvous_at: Option<DateTime<Utc>>,
}

fn ser_opt_bits<S: serde::Serializer>(
    bits: &Option<BitVector>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match bits {
        Some(b) => s.serialize_some(&b.to_string()),
        None => s.serialize_none(),
    }
}

impl AssociationReport {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReceiverSetup {
    pub modulation: ModulationConfig,
    pub metric: Metric,
    pub id_width: usize,
}

/// A receiver run: the report plus the raw capture behind it.
#[derive(Debug, Clone)]
pub struct ReceiveOutcome {
    pub report: AssociationReport,
    pub reception: Reception,
    pub capture: WorkloadTrace,
}

/// Listen through the next rendezvous: baseline window, then one frame.
///
/// A frame with no high bit at all is indistinguishable from an absent
/// transmitter and is reported invalid.
pub fn run_receiver(
    reporter: &InstallationId,
    setup: &ReceiverSetup,
    frame: &FrameOptions,
    schedule: &RendezvousSchedule,
    backend: &mut dyn SenseBackend,
) -> Result<ReceiveOutcome> {
    if setup.modulation.scheme == Scheme::Ask && schedule.baseline_window_s <= 0.0 {
        return Err(Error::invalid(
            "ASK reception needs a positive baseline window",
        ));
    }
    let frame_bits = frame.frame_len(setup.id_width);
    let cfg = ReceiverConfig::new(setup.modulation, setup.metric, frame_bits);
    schedule.check_fits(cfg.frame_duration_s())?;
    let rate = required_sample_rate(&setup.modulation)?;
    let at = schedule.next_after(backend.now());
    let pre = (schedule.baseline_window_s * rate).round() as usize;
    let frame_samples = (cfg.frame_duration_s() * rate).round() as usize;
    let lead_s = pre as f64 / rate;
    let mut capture = backend.capture(
        setup.metric,
        rate,
        at - delta(lead_s),
        (pre + frame_samples) as f64 / rate,
    )?;
    capture.start_time_s = -lead_s;
    let reception = decode_capture(&capture, &cfg)?;

    let parsed = reception
        .bits
        .as_ref()
        .and_then(|b| parse_frame(b, setup.id_width, frame));
    let any_high = reception.bits.as_ref().is_some_and(|b| b.iter().any(|x| x));
    let detected_valid =
        reception.has_signal() && any_high && parsed.as_ref().is_some_and(|p| p.valid());
    let detected_bits = parsed.map(|p| p.payload);
    Ok(ReceiveOutcome {
        report: AssociationReport {
            reporter_app: reporter.app_name.clone(),
            reporter_id_hex: reporter.hex(),
            detected_id_hex: detected_bits.as_ref().map(id_hex),
            detected_bits,
            detected_valid,
            matched: None,
            rendezvous_at: Some(at),
        },
        reception,
        capture,
    })
}

/// Look the detected id up in the partner vendor's registry.
pub fn match_report(
    report: &AssociationReport,
    partner: &VendorRegistry,
) -> Result<AssociationReport> {
    if !report.detected_valid {
        return Err(Error::invalid(
            "cannot match a report without a valid detection",
        ));
    }
    let bits = report
        .detected_bits
        .as_ref()
        .ok_or_else(|| Error::invalid("valid report lacks detected bits"))?;
    let matched = partner.lookup(bits).map(|rec| MatchedRecord {
        vendor: partner.vendor().to_string(),
        id_hex: id_hex(bits),
        identity: rec.identity.clone(),
        created_at: rec.created_at,
    });
    Ok(AssociationReport {
        matched,
        ..report.clone()
    })
}
