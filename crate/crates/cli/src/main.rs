use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use loadmodem::channel::Interference;
use loadmodem::codec::Scheme;
use loadmodem::{BitVector, Metric};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "loadmodem",
    version,
    about = "Send, sense and benchmark bits carried by processor workload"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for every random draw in simulated runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Device and channel profile (`key = value` lines).
    #[arg(long, global = true, alias = "channel-config", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sim,
    Host,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmit bits, on the simulated device (writing its trace) or on this host.
    Send(SendArgs),
    /// Demodulate bits from a trace file or from live sensing.
    Recv(RecvArgs),
    /// Dump raw workload samples.
    Trace(TraceArgs),
    /// BER versus data rate on the simulated device.
    Bench(BenchArgs),
    /// Run a full two-party device association.
    Associate(AssociateArgs),
}

#[derive(Debug, Args)]
pub struct ModemOpts {
    #[arg(long, default_value = "ask", value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Seconds per bit.
    #[arg(long, default_value_t = 4.0)]
    pub bit_duration: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("payload").required(true).args(["bits", "id_hex"])))]
pub struct SendArgs {
    /// Bits to send, e.g. 101010.
    #[arg(long, value_parser = parse_bits)]
    pub bits: Option<BitVector>,
    /// Installation id in hex; four bits per digit.
    #[arg(long, value_parser = parse_hex)]
    pub id_hex: Option<BitVector>,
    #[command(flatten)]
    pub modem: ModemOpts,
    #[arg(long, value_enum, default_value = "sim")]
    pub mode: Mode,
    /// Metric of the simulated trace.
    #[arg(long, default_value = "time_load", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, value_parser = parse_interference)]
    pub interference: Option<Interference>,
    /// Also record this many seconds of baseline before the first bit.
    #[arg(long, default_value_t = 0.0)]
    pub lead: f64,
    /// Pace a simulated run at wall-clock speed.
    #[arg(long)]
    pub realtime: bool,
    /// Host mode: seconds to wait before the first bit.
    #[arg(long, default_value_t = 0.2)]
    pub start_in: f64,
}

#[derive(Debug, Args)]
pub struct RecvArgs {
    /// Trace CSV written by `send` or `trace`. Without it, sense this host live.
    #[arg(long, value_name = "CSV")]
    pub from_trace: Option<PathBuf>,
    #[command(flatten)]
    pub modem: ModemOpts,
    /// Number of bits in the frame.
    #[arg(long)]
    pub expect: usize,
    /// Fixed ASK threshold instead of the adaptive one.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Live mode: metric to sense.
    #[arg(long, default_value = "time_load", value_parser = parse_metric)]
    pub metric: Metric,
    /// Live mode: seconds of baseline to record before the frame.
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Live mode: seconds until the frame starts.
    #[arg(long)]
    pub start_in: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_enum, default_value = "host")]
    pub mode: Mode,
    #[arg(long, default_value = "time_load", value_parser = parse_metric)]
    pub metric: Metric,
    /// Samples per second.
    #[arg(long, default_value_t = 4.0)]
    pub rate: f64,
    /// Seconds to record.
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    #[arg(long, value_parser = parse_interference)]
    pub interference: Option<Interference>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated data rates in bits per second.
    #[arg(long, value_delimiter = ',', default_values_t = loadmodem::bench::DEFAULT_RATES_BPS.to_vec())]
    pub rates: Vec<f64>,
    #[arg(long, default_value = "ask", value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long, default_value = "time_load", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, default_value = "none", value_parser = parse_interference)]
    pub interference: Interference,
    #[arg(long, default_value_t = 100)]
    pub bits_per_trial: usize,
    #[arg(long, default_value_t = 4)]
    pub trials: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("backend").args(["sim", "host"])))]
pub struct AssociateArgs {
    /// Installation id width in bits.
    #[arg(long, default_value_t = 48)]
    pub width: usize,
    /// Data rate in bits per second.
    #[arg(long, default_value_t = 0.25)]
    pub rate: f64,
    /// Run on the simulated device (the default).
    #[arg(long)]
    pub sim: bool,
    /// Run on this host: transmitter and receiver in real time.
    #[arg(long)]
    pub host: bool,
    #[arg(long, default_value = "ask", value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long, default_value = "time_load", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, default_value = "media", value_parser = parse_interference)]
    pub interference: Interference,
    /// Append a CRC-8 of the id.
    #[arg(long)]
    pub crc: bool,
    /// Prefix the frame with 10101010.
    #[arg(long)]
    pub preamble: bool,
    /// Other installations registered with the transmitting vendor.
    #[arg(long, default_value_t = 16)]
    pub decoys: usize,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: loadmodem::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: loadmodem::Error| e.to_string())
}

fn parse_interference(s: &str) -> Result<Interference, String> {
    s.parse().map_err(|e: loadmodem::Error| e.to_string())
}

fn parse_bits(s: &str) -> Result<BitVector, String> {
    let bits: BitVector = s.parse().map_err(|e: loadmodem::Error| e.to_string())?;
    if bits.is_empty() {
        return Err("no bits given".into());
    }
    Ok(bits)
}

fn parse_hex(s: &str) -> Result<BitVector, String> {
    BitVector::from_hex(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
