use chrono::{DateTime, TimeZone, Utc};
use serde::Serialize;

use super::frame::FrameOptions;
use super::protocol::{
    match_report, run_receiver, run_transmitter, AssociationReport, ReceiverSetup, SimWorld,
    TxReport,
};
use super::registry::{IdPolicy, InstallationId, VendorRegistry, DEFAULT_ID_WIDTH};
use super::rendezvous::{delta, RendezvousSchedule};
use crate::channel::{ChannelConfig, DeviceProfile, Interference, SimMedium};
use crate::codec::{ModulationConfig, Scheme};
use crate::error::Result;
use crate::trace::{Metric, WorkloadTrace};

/// Monday 2024-01-01 04:00:00 UTC, the default weekly rendezvous epoch.
pub fn default_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 4, 0, 0)
        .single()
        .expect("valid date")
}

pub const WEEK_S: f64 = 7.0 * 24.0 * 3600.0;

/// A two-party association on one simulated device: app X transmits its
/// installation id, app Y listens and reports to its vendor, and the colluding
/// vendors look the id up in X's registry.
#[derive(Debug, Clone)]
pub struct AssociationScenario {
    pub width: usize,
    pub modulation: ModulationConfig,
    pub metric: Metric,
    pub frame: FrameOptions,
    pub device: DeviceProfile,
    pub channel: ChannelConfig,
    /// Other installations registered with X's vendor.
    pub decoys: usize,
    pub epoch: DateTime<Utc>,
    pub period_s: f64,
    /// Defaults to two bit durations.
    pub baseline_window_s: Option<f64>,
    /// How long before the rendezvous both apps start.
    pub lead_time_s: f64,
    pub seed: u64,
}

impl AssociationScenario {
    pub fn new(seed: u64) -> Self {
        AssociationScenario {
            width: DEFAULT_ID_WIDTH,
            modulation: ModulationConfig::new(Scheme::Ask, 4.0),
            metric: Metric::TimeLoad,
            frame: FrameOptions::default(),
            device: DeviceProfile::phone(),
            channel: ChannelConfig::default().with_interference(Interference::Media),
            decoys: 16,
            epoch: default_epoch(),
            period_s: WEEK_S,
            baseline_window_s: None,
            lead_time_s: 60.0,
            seed,
        }
    }

    pub fn schedule(&self) -> Result<RendezvousSchedule> {
        let bw = self
            .baseline_window_s
            .unwrap_or(2.0 * self.modulation.bit_duration_s);
        RendezvousSchedule::new(self.epoch, self.period_s, bw)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssociationRun {
    pub transmitter: IdSummary,
    pub tx: TxReport,
    pub report: AssociationReport,
    /// The identity X's vendor stored for the transmitting installation.
    pub expected_identity: String,
    #[serde(skip)]
    pub capture: WorkloadTrace,
}

/// Serializable view of an [`InstallationId`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdSummary {
    pub app_name: String,
    pub id_hex: String,
}

impl From<&InstallationId> for IdSummary {
    fn from(id: &InstallationId) -> Self {
        IdSummary {
            app_name: id.app_name.clone(),
            id_hex: id.hex(),
        }
    }
}

impl AssociationRun {
    pub fn matched_correctly(&self) -> bool {
        self.report
            .matched
            .as_ref()
            .is_some_and(|m| m.identity == self.expected_identity)
    }
}

/// The installations taking part in one association: X's registry with the
/// transmitting installation among decoys, and Y's listening installation.
#[derive(Debug, Clone)]
pub struct Cast {
    pub x_registry: VendorRegistry,
    pub y_registry: VendorRegistry,
    pub transmitter: InstallationId,
    pub receiver: InstallationId,
    pub expected_identity: String,
}

impl Cast {
    pub fn new(
        width: usize,
        decoys: usize,
        seed: u64,
        registered_at: DateTime<Utc>,
    ) -> Result<Self> {
        let mut x = VendorRegistry::new("X", width)?;
        let mut x_policy = IdPolicy::random(seed ^ 0x5851_f42d_4c95_7f2d);
        let target = decoys / 2;
        let mut tx_id = None;
        for i in 0..=decoys {
            let id = x.allocate(format!("x-user-{i}"), &mut x_policy, registered_at)?;
            if i == target {
                tx_id = Some(id);
            }
        }
        let transmitter = tx_id.expect("target allocated");
        let expected_identity = x
            .lookup(&transmitter.bits)
            .expect("just allocated")
            .identity
            .clone();

        let mut y = VendorRegistry::new("Y", width)?;
        let mut y_policy = IdPolicy::random(seed ^ 0x2545_f491_4f6c_dd1d);
        let receiver = y.allocate("y-user", &mut y_policy, registered_at)?;
        Ok(Cast {
            x_registry: x,
            y_registry: y,
            transmitter,
            receiver,
            expected_identity,
        })
    }
}

pub fn run_sim_association(sc: &AssociationScenario) -> Result<AssociationRun> {
    let schedule = sc.schedule()?;
    let cast = Cast::new(
        sc.width,
        sc.decoys,
        sc.seed,
        sc.epoch - delta(3600.0 * 24.0),
    )?;

    let channel = sc.channel.clone().with_seed(sc.seed);
    let start = sc.epoch - delta(sc.lead_time_s);
    let mut world = SimWorld::new(SimMedium::new(sc.device.clone(), channel)?, start);

    let tx = run_transmitter(
        &cast.transmitter,
        &sc.modulation,
        &sc.frame,
        &schedule,
        &mut world,
    )?;
    let setup = ReceiverSetup {
        modulation: sc.modulation,
        metric: sc.metric,
        id_width: sc.width,
    };
    let outcome = run_receiver(&cast.receiver, &setup, &sc.frame, &schedule, &mut world)?;
    let report = if outcome.report.detected_valid {
        match_report(&outcome.report, &cast.x_registry)?
    } else {
        outcome.report
    };
    Ok(AssociationRun {
        transmitter: (&cast.transmitter).into(),
        tx,
        report,
        expected_identity: cast.expected_identity,
        capture: outcome.capture,
    })
}
