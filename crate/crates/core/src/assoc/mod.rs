//! Covert device association between colluding app installations.
//!
//! App X modulates its installation id onto the processor workload at a
//! pre-agreed instant; app Y on the same device senses it and reports the id
//! to its own vendor, who looks it up in X's registry.

mod frame;
mod protocol;
mod registry;
mod rendezvous;
mod sim;

pub use frame::{
    build_frame, crc8, parse_frame, Frame, FrameOptions, ParsedFrame, DEFAULT_PREAMBLE,
};
pub use protocol::{
    match_report, run_receiver, run_transmitter, AssociationReport, HostSensor, HostTransmitter,
    MatchedRecord, ReceiveOutcome, ReceiverSetup, SenseBackend, SimWorld, TransmitBackend,
    TxReport,
};
pub use registry::{
    IdPolicy, InstallationId, InstallationRecord, VendorRegistry, DEFAULT_ID_WIDTH,
};
pub use rendezvous::RendezvousSchedule;
pub use sim::{
    default_epoch, run_sim_association, AssociationRun, AssociationScenario, Cast, IdSummary,
    WEEK_S,
};
