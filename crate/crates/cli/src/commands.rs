use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DurationRound, TimeDelta, Utc};
use loadmodem::assoc::{
    match_report, run_receiver, run_sim_association, run_transmitter, AssociationScenario, Cast,
    FrameOptions, HostSensor, HostTransmitter, ReceiverSetup, RendezvousSchedule,
};
use loadmodem::bench::{check_invariants, emit_report, run_bench, BenchPlan, ReportFormat};
use loadmodem::channel::{SimMedium, SimProfile};
use loadmodem::codec::{modulate, required_sample_rate, ModulationConfig};
use loadmodem::loadgen::{available_cores, execute, plan_from_schedule};
use loadmodem::receiver::{decode_capture, ReceiverConfig};
use loadmodem::sysload::{run_sampler, run_sampler_from, SourcePaths};
use loadmodem::{Error, WorkloadTrace};
use serde::Serialize;

use crate::{
    AssociateArgs, BenchArgs, Cli, Command, Format, GlobalOpts, Mode, RecvArgs, SendArgs, TraceArgs,
};

pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Send(a) => send(g, a),
        Command::Recv(a) => recv(g, a),
        Command::Trace(a) => trace(g, a),
        Command::Bench(a) => bench(g, a),
        Command::Associate(a) => associate(g, a),
    }
}

fn output(g: &GlobalOpts) -> Result<Box<dyn Write>, Failure> {
    Ok(match &g.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::Runtime(format!("{}: {e}", path.display()))
            })?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn profile(g: &GlobalOpts) -> Result<SimProfile, Failure> {
    let mut p = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            SimProfile::parse(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SimProfile::default(),
    };
    if let Some(seed) = g.seed {
        p.channel.rng_seed = seed;
    }
    Ok(p)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Outcome {
    serde_json::to_writer(&mut *out, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn write_trace(out: &mut dyn Write, trace: &WorkloadTrace, format: Format) -> Outcome {
    match format {
        Format::Json => write_json(out, trace),
        _ => Ok(trace.write_csv(&mut *out)?),
    }
}

fn modulation(
    scheme: loadmodem::codec::Scheme,
    bit_duration: f64,
) -> Result<ModulationConfig, Failure> {
    let cfg = ModulationConfig::new(scheme, bit_duration);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| Failure::Usage(format!("bad duration {s}")))
}

fn send(g: &GlobalOpts, a: &SendArgs) -> Outcome {
    let bits = a
        .bits
        .clone()
        .or_else(|| a.id_hex.clone())
        .expect("clap enforces one payload");
    let cfg = modulation(a.modem.scheme, a.modem.bit_duration)?;
    let schedule = modulate(&bits, &cfg)?;
    match a.mode {
        Mode::Sim => {
            if !(a.lead >= 0.0) {
                return Err(Failure::Usage("--lead must be nonnegative".into()));
            }
            let mut p = profile(g)?;
            if let Some(i) = &a.interference {
                p.channel.interference = i.clone();
            }
            let mut medium = SimMedium::new(p.device, p.channel)?;
            let total = schedule.total_duration_s();
            medium.add_transmission(0.0, schedule);
            let rate = required_sample_rate(&cfg)?;
            let trace = medium.capture(a.metric, rate, -a.lead, a.lead + total)?;
            if a.realtime {
                thread::sleep(seconds(a.lead + total)?);
            }
            let mut out = output(g)?;
            match g.format.unwrap_or(Format::Csv) {
                Format::Text => writeln!(
                    out,
                    "sent {} bits ({}) over {total} simulated seconds; {} {} samples at {rate} Hz",
                    bits.len(),
                    cfg.scheme,
                    trace.len(),
                    trace.metric
                )?,
                f => write_trace(&mut *out, &trace, f)?,
            }
            out.flush()?;
        }
        Mode::Host => {
            if a.interference.is_some() {
                return Err(Failure::Usage(
                    "--interference only applies to --mode sim".into(),
                ));
            }
            let plan = plan_from_schedule(schedule.merged(), available_cores());
            let report = execute(plan, Instant::now() + seconds(a.start_in.max(0.001))?)?;
            let mut out = output(g)?;
            match g.format.unwrap_or(Format::Text) {
                Format::Json => write_json(&mut *out, &report)?,
                _ => writeln!(
                    out,
                    "sent {} bits with {} workers; boundary error max {:.4} s, p95 {:.4} s{}",
                    bits.len(),
                    report.worker_count,
                    report.max_error_s(),
                    report.p95_error_s(),
                    if report.aborted { " (aborted)" } else { "" }
                )?,
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn recv(g: &GlobalOpts, a: &RecvArgs) -> Outcome {
    let cfg = modulation(a.modem.scheme, a.modem.bit_duration)?;
    if a.expect == 0 {
        return Err(Failure::Usage("--expect must be positive".into()));
    }
    let capture = match &a.from_trace {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            WorkloadTrace::read_csv(file)?
        }
        None => {
            let rate = required_sample_rate(&cfg)?;
            let baseline = a.baseline.unwrap_or(2.0 * cfg.bit_duration_s);
            let start_in = a.start_in.unwrap_or(baseline);
            if baseline < 0.0 || start_in < baseline {
                return Err(Failure::Usage(
                    "--start-in must be at least the baseline window".into(),
                ));
            }
            let pre = (baseline * rate).round();
            let lead = pre / rate;
            let frame_start = Instant::now() + seconds(start_in)?;
            let begin = frame_start - seconds(lead)?;
            let total = lead + a.expect as f64 * cfg.bit_duration_s;
            let mut t =
                run_sampler_from(begin, a.metric, rate, total, &SourcePaths::default())?.trace;
            t.start_time_s = -lead;
            t
        }
    };
    let mut rc = ReceiverConfig::new(cfg, capture.metric, a.expect);
    rc.threshold_override = a.threshold;
    let reception = decode_capture(&capture, &rc)?;
    let mut out = output(g)?;
    match g.format.unwrap_or(Format::Text) {
        Format::Json => write_json(&mut *out, &reception)?,
        _ => match &reception.bits {
            Some(bits) => writeln!(out, "{bits}")?,
            None => {
                return Err(Failure::Runtime(format!(
                    "trace holds fewer than {} bits after the rendezvous",
                    a.expect
                )))
            }
        },
    }
    out.flush()?;
    Ok(())
}

fn trace(g: &GlobalOpts, a: &TraceArgs) -> Outcome {
    let trace = match a.mode {
        Mode::Sim => {
            let mut p = profile(g)?;
            if let Some(i) = &a.interference {
                p.channel.interference = i.clone();
            }
            SimMedium::new(p.device, p.channel)?.capture(a.metric, a.rate, 0.0, a.duration)?
        }
        Mode::Host => {
            if a.interference.is_some() {
                return Err(Failure::Usage(
                    "--interference only applies to --mode sim".into(),
                ));
            }
            run_sampler(a.metric, a.rate, a.duration, &SourcePaths::default())?
        }
    };
    let mut out = output(g)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Text => {
            for (i, v) in trace.samples.iter().enumerate() {
                writeln!(out, "{:>10.3}  {v:.4}", trace.time_of(i))?;
            }
        }
        f => write_trace(&mut *out, &trace, f)?,
    }
    out.flush()?;
    Ok(())
}

fn bench(g: &GlobalOpts, a: &BenchArgs) -> Outcome {
    let p = profile(g)?;
    let plan = BenchPlan {
        data_rates_bps: a.rates.clone(),
        bits_per_trial: a.bits_per_trial,
        trials_per_rate: a.trials,
        scheme: a.scheme,
        metric: a.metric,
        interference: a.interference.clone(),
        seed: p.channel.rng_seed,
    };
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let report = run_bench(&plan, &p.device, &p.channel)?;
    let format = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
        Format::Text => ReportFormat::Text,
    };
    let mut out = output(g)?;
    emit_report(&report, format, &mut out)?;
    out.flush()?;
    let problems = check_invariants(&report);
    if !problems.is_empty() {
        return Err(Failure::Runtime(problems.join("; ")));
    }
    Ok(())
}

#[derive(Serialize)]
struct HostRun<'a> {
    transmitter: loadmodem::assoc::IdSummary,
    tx: &'a loadmodem::assoc::TxReport,
    report: &'a loadmodem::assoc::AssociationReport,
    expected_identity: &'a str,
}

fn associate(g: &GlobalOpts, a: &AssociateArgs) -> Outcome {
    if !(a.rate > 0.0 && a.rate.is_finite()) {
        return Err(Failure::Usage(format!(
            "--rate must be positive, got {}",
            a.rate
        )));
    }
    let modulation = modulation(a.scheme, 1.0 / a.rate)?;
    let mut frame = FrameOptions::default();
    if a.preamble {
        frame = frame.with_preamble();
    }
    if a.crc {
        frame = frame.with_crc();
    }
    let mut p = profile(g)?;
    p.channel.interference = a.interference.clone();
    let seed = p.channel.rng_seed;
    let format = g.format.unwrap_or(Format::Text);
    let mut out = output(g)?;

    let (report, tx, expected, summary) = if a.host {
        let cast = Cast::new(a.width, a.decoys, seed, Utc::now())
            .map_err(|e| Failure::Usage(e.to_string()))?;
        let baseline = 2.0 * modulation.bit_duration_s;
        let epoch = (Utc::now() + TimeDelta::seconds(baseline.ceil() as i64 + 2))
            .duration_round(TimeDelta::seconds(1))
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        let schedule = RendezvousSchedule::new(epoch, 7.0 * 24.0 * 3600.0, baseline)?;
        let tx_id = cast.transmitter.clone();
        let tx_frame = frame.clone();
        let tx_thread = thread::spawn(move || {
            run_transmitter(
                &tx_id,
                &modulation,
                &tx_frame,
                &schedule,
                &mut HostTransmitter::default(),
            )
        });
        let setup = ReceiverSetup {
            modulation,
            metric: a.metric,
            id_width: a.width,
        };
        let outcome = run_receiver(
            &cast.receiver,
            &setup,
            &frame,
            &schedule,
            &mut HostSensor::default(),
        );
        let tx = tx_thread
            .join()
            .map_err(|_| Failure::Runtime("transmitter thread panicked".into()))??;
        let mut report = outcome?.report;
        if report.detected_valid {
            report = match_report(&report, &cast.x_registry)?;
        }
        (
            report,
            tx,
            cast.expected_identity.clone(),
            (&cast.transmitter).into(),
        )
    } else {
        let sc = AssociationScenario {
            width: a.width,
            modulation,
            metric: a.metric,
            frame,
            device: p.device,
            channel: p.channel,
            decoys: a.decoys,
            ..AssociationScenario::new(seed)
        };
        let run = run_sim_association(&sc).map_err(|e| match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => other.into(),
        })?;
        (run.report, run.tx, run.expected_identity, run.transmitter)
    };

    let matched = report
        .matched
        .as_ref()
        .is_some_and(|m| m.identity == expected);
    match format {
        Format::Json => write_json(
            &mut *out,
            &HostRun {
                transmitter: summary,
                tx: &tx,
                report: &report,
                expected_identity: &expected,
            },
        )?,
        _ => {
            writeln!(out, "transmitter   {} {}", summary.app_name, summary.id_hex)?;
            writeln!(out, "rendezvous    {}", tx.rendezvous_at.to_rfc3339())?;
            writeln!(out, "frame_bits    {}", tx.frame_bits)?;
            writeln!(out, "airtime_s     {:.1}", tx.airtime_s)?;
            writeln!(
                out,
                "detected      {} ({})",
                report.detected_id_hex.as_deref().unwrap_or("-"),
                if report.detected_valid {
                    "valid"
                } else {
                    "invalid"
                }
            )?;
            match &report.matched {
                Some(m) => writeln!(
                    out,
                    "matched       {} {} created {}",
                    m.vendor,
                    m.identity,
                    m.created_at.to_rfc3339()
                )?,
                None => writeln!(out, "matched       none")?,
            }
        }
    }
    out.flush()?;
    if !matched {
        return Err(Failure::Runtime(
            "association did not identify the transmitting installation".into(),
        ));
    }
    Ok(())
}
