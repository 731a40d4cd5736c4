//! Acceptance gate. Runs every criterion in sequence and prints one
//! PASS/FAIL/SKIP line each; exits nonzero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::thread;
use std::time::{Duration, Instant};

use loadmodem::bench::{run_bench, BenchPlan, DEFAULT_RATES_BPS};
use loadmodem::channel::{ChannelConfig, DeviceProfile, Interference, SimMedium};
use loadmodem::codec::{
    modulate, required_sample_rate, sample_ideal, spectral_peak, ModulationConfig, Scheme,
};
use loadmodem::loadgen::{available_cores, plan_from_schedule, spawn};
use loadmodem::receiver::{decode_capture, ReceiverConfig};
use loadmodem::sysload::{
    frequency_load, parse_khz, parse_proc_stat, read_cpufreq, run_sampler, run_sampler_from,
    CoreFreq, CpuFreqReading, ProcStatSnapshot, SourcePaths,
};
use loadmodem::{BitVector, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCHEMES: [Scheme; 2] = [Scheme::Ask, Scheme::Fsk];
const METRICS: [Metric; 2] = [Metric::TimeLoad, Metric::FrequencyLoad];

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn check(cond: bool, pass: impl Into<String>, fail: impl Into<String>) -> Verdict {
    if cond {
        Pass(pass.into())
    } else {
        Fail(fail.into())
    }
}

fn bench(
    plan: BenchPlan,
    device: &DeviceProfile,
    channel: &ChannelConfig,
) -> loadmodem::bench::BerReport {
    run_bench(&plan, device, channel).expect("bench runs")
}

fn zero_ber_regime() -> Verdict {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for scheme in SCHEMES {
        for metric in METRICS {
            for interference in [Interference::None, Interference::Media] {
                let plan = BenchPlan {
                    data_rates_bps: vec![0.25],
                    scheme,
                    metric,
                    interference: interference.clone(),
                    ..BenchPlan::default()
                };
                let r = bench(plan, &DeviceProfile::phone(), &ChannelConfig::default());
                let s = &r.rates[0];
                if s.ber_avg != 0.0 || s.trials != 4 || s.bits_per_trial != 100 {
                    bad.push(format!(
                        "{scheme}/{metric}/{interference} ber_avg {}",
                        s.ber_avg
                    ));
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    if elapsed >= Duration::from_secs(10) {
        bad.push(format!("took {elapsed:?}"));
    }
    check(
        bad.is_empty(),
        format!(
            "8 configurations x 4 trials x 100 bits all error-free in {:.2?}",
            elapsed
        ),
        bad.join("; "),
    )
}

fn association_airtime() -> Verdict {
    let mut bad = Vec::new();
    for seed in 0..20 {
        let seed = seed.to_string();
        let out = Command::new(env!("CARGO_BIN_EXE_loadmodem"))
            .args([
                "associate",
                "--width",
                "48",
                "--rate",
                "0.25",
                "--sim",
                "--interference",
                "media",
            ])
            .args(["--format", "json", "--seed", &seed])
            .output()
            .expect("binary runs");
        if !out.status.success() {
            bad.push(format!("seed {seed}: exit {:?}", out.status.code()));
            continue;
        }
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
        let airtime = v["tx"]["airtime_s"].as_f64();
        let matched = v["report"]["matched"]["identity"].as_str();
        if airtime != Some(192.0) {
            bad.push(format!("seed {seed}: airtime {airtime:?}"));
        }
        if matched.is_none() || matched != v["expected_identity"].as_str() {
            bad.push(format!("seed {seed}: matched {matched:?}"));
        }
    }
    check(
        bad.is_empty(),
        "airtime 192.0 s, 20/20 seeded runs matched the registered identity",
        bad.join("; "),
    )
}

fn round_trip_oracle() -> Verdict {
    let mut cases = 0;
    let mut bad = Vec::new();
    for scheme in SCHEMES {
        for metric in METRICS {
            for t in [0.25, 1.0, 4.0, 10.0] {
                let plan = BenchPlan {
                    data_rates_bps: vec![1.0 / t],
                    trials_per_rate: 100,
                    scheme,
                    metric,
                    seed: 1600,
                    ..BenchPlan::default()
                };
                let r = bench(plan, &DeviceProfile::ideal(), &ChannelConfig::ideal());
                cases += r.trials.len();
                let errs: usize = r.trials.iter().map(|t| t.bit_errors).sum();
                if errs > 0 {
                    bad.push(format!("{scheme}/{metric}/T={t}: {errs} bit errors"));
                }
            }
        }
    }
    check(
        bad.is_empty() && cases == 1600,
        format!("{cases} messages of 100 bits recovered exactly"),
        format!("{cases} cases; {}", bad.join("; ")),
    )
}

fn freq_load_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE01);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=32);
        let cores: Vec<CoreFreq> = (0..n)
            .map(|_| {
                let max_hz = rng.random_range(50_000_000..=5_000_000_000u64);
                CoreFreq {
                    current_hz: rng.random_range(1..=max_hz),
                    max_hz,
                }
            })
            .collect();
        let mut by_hand = 0.0;
        for c in cores.iter().rev() {
            by_hand += c.current_hz as f64 / c.max_hz as f64;
        }
        by_hand /= n as f64;
        let got = frequency_load(&CpuFreqReading::new(cores).expect("valid")).expect("nonempty");
        worst = worst.max((got - by_hand).abs());
    }
    check(
        worst <= 1e-12,
        format!("1000 configurations, max deviation {worst:e}"),
        format!("max deviation {worst:e}"),
    )
}

fn fsk_spectral_check() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for t in [1.0, 5.0] {
        let cfg = ModulationConfig::new(Scheme::Fsk, t);
        let rate = required_sample_rate(&cfg).expect("rate");
        for (bit, expect) in [("1", 5.0 / t), ("0", 1.0 / t)] {
            let bits: BitVector = bit.parse().expect("bits");
            let trace = sample_ideal(&modulate(&bits, &cfg).expect("modulate"), rate);
            let peak = spectral_peak(&trace.samples, t).expect("peak");
            let good = (peak.frequency_hz - expect).abs() <= 0.5 / t;
            ok &= good;
            notes.push(format!("T={t} bit {bit}: {} Hz", peak.frequency_hz));
        }
    }
    check(ok, notes.join(", "), notes.join(", "))
}

fn ordering_properties() -> Verdict {
    let seeds = 0..4u64;
    let curve = |scheme, metric, interference: &Interference| {
        let mut c = vec![0.0; DEFAULT_RATES_BPS.len()];
        for seed in seeds.clone() {
            let plan = BenchPlan {
                scheme,
                metric,
                interference: interference.clone(),
                seed,
                ..BenchPlan::default()
            };
            for (acc, r) in c
                .iter_mut()
                .zip(bench(plan, &DeviceProfile::phone(), &ChannelConfig::default()).rates)
            {
                *acc += r.ber_avg / 4.0;
            }
        }
        c
    };
    let mut bad = Vec::new();
    for scheme in SCHEMES {
        for metric in METRICS {
            let clean = curve(scheme, metric, &Interference::None);
            for kind in [
                Interference::None,
                Interference::Media,
                Interference::Compress,
            ] {
                let c = if kind == Interference::None {
                    clean.clone()
                } else {
                    curve(scheme, metric, &kind)
                };
                if c.windows(2).any(|w| w[1] < w[0] - 0.02) {
                    bad.push(format!("{scheme}/{metric}/{kind} not monotone: {c:?}"));
                }
                if c.iter().zip(&clean).any(|(n, q)| *n < q - 0.01) {
                    bad.push(format!(
                        "{scheme}/{metric}/{kind} beats clean: {c:?} vs {clean:?}"
                    ));
                }
            }
        }
    }
    check(
        bad.is_empty(),
        "rate and interference orderings hold for 2 schemes x 2 metrics x 3 interference kinds, 4 seeds",
        bad.join("; "),
    )
}

fn saturation_rate() -> Verdict {
    let channel = ChannelConfig {
        tx_response_delay_s: 0.5,
        ..ChannelConfig::default()
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for scheme in SCHEMES {
        for metric in METRICS {
            let mut avg = 0.0;
            for seed in 0..4 {
                let plan = BenchPlan {
                    data_rates_bps: vec![4.0],
                    scheme,
                    metric,
                    seed,
                    ..BenchPlan::default()
                };
                avg += bench(plan, &DeviceProfile::phone(), &channel).rates[0].ber_avg / 4.0;
            }
            ok &= avg >= 0.2;
            notes.push(format!("{scheme}/{metric} {avg:.3}"));
        }
    }
    check(
        ok,
        format!("ber_avg at 4 bps with 0.5 s delay: {}", notes.join(", ")),
        notes.join(", "),
    )
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn parser_golden_and_fuzz() -> Verdict {
    let mut bad = Vec::new();
    let stat =
        |name: &str| fs::read_to_string(fixtures().join("proc").join(name)).expect("fixture");
    let modern = ProcStatSnapshot {
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
    };
    if parse_proc_stat(&stat("stat_modern")).ok() != Some(modern) {
        bad.push("stat_modern".to_string());
    }
    let legacy = ProcStatSnapshot {
        user: 2255,
        nice: 34,
        system: 2290,
        idle: 22625563,
        iowait: 6290,
        irq: 127,
        softirq: 456,
        ..ProcStatSnapshot::default()
    };
    if parse_proc_stat(&stat("stat_legacy")).ok() != Some(legacy) {
        bad.push("stat_legacy".to_string());
    }
    let phone: Vec<CoreFreq> = [998_400_000, 998_400_000, 533_333_000, 200_000_000]
        .into_iter()
        .map(|current_hz| CoreFreq {
            current_hz,
            max_hz: 1_200_000_000,
        })
        .collect();
    match read_cpufreq(&fixtures().join("cpufreq/phone")) {
        Ok(r) if r.cores() == phone.as_slice() => {}
        other => bad.push(format!("cpufreq/phone: {other:?}")),
    }
    match read_cpufreq(&fixtures().join("cpufreq/fallback")).and_then(|r| frequency_load(&r)) {
        Ok(0.8125) => {}
        other => bad.push(format!("cpufreq/fallback: {other:?}")),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let alphabet = b"cpu 0123456789-\t\nxintr";
    let mut panics = 0;
    let mut parsed = 0;
    for i in 0..10_000 {
        let len = rng.random_range(0..200);
        let bytes: Vec<u8> = (0..len)
            .map(|_| {
                if i % 2 == 0 {
                    rng.random()
                } else {
                    alphabet[rng.random_range(0..alphabet.len())]
                }
            })
            .collect();
        let mut text = String::from_utf8_lossy(&bytes).into_owned();
        if i % 4 == 3 {
            let fields = rng.random_range(4..=10);
            let nums: Vec<String> = (0..fields)
                .map(|_| rng.random::<u32>().to_string())
                .collect();
            text = format!("cpu  {}\n{text}", nums.join(" "));
        }
        match catch_unwind(AssertUnwindSafe(|| {
            (parse_proc_stat(&text).is_ok(), parse_khz(&text).is_ok())
        })) {
            Ok((a, _)) => parsed += a as usize,
            Err(_) => panics += 1,
        }
    }
    if panics > 0 {
        bad.push(format!("{panics} fuzz inputs panicked"));
    }
    check(
        bad.is_empty(),
        format!("4 golden fixtures exact; 10000 fuzz inputs, 0 panics ({parsed} parsed)"),
        bad.join("; "),
    )
}

fn rpi_profile() -> Verdict {
    let device = DeviceProfile::rpi();
    let channel = ChannelConfig::default().with_interference(Interference::Media);
    let mut bad = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9);
    for scheme in SCHEMES {
        let cfg = ModulationConfig::new(scheme, 4.0);
        let bits = BitVector::random(&mut rng, 24);
        let mut medium = SimMedium::new(device.clone(), channel.clone()).expect("medium");
        medium.add_transmission(0.0, modulate(&bits, &cfg).expect("modulate"));
        let rate = required_sample_rate(&cfg).expect("rate");
        let capture = medium
            .capture(Metric::FrequencyLoad, rate, -8.0, 8.0 + 24.0 * 4.0)
            .expect("capture");
        if capture.samples.iter().any(|&v| v != 1.0) {
            bad.push(format!("{scheme}: frequency load not constant 1.0"));
        }
        let rx = decode_capture(
            &capture,
            &ReceiverConfig::new(cfg, Metric::FrequencyLoad, 24),
        )
        .expect("decode");
        let all_zero = rx.bits.as_ref().is_some_and(|b| b.iter().all(|x| !x));
        if !(rx.flat && !rx.has_signal() && all_zero) {
            bad.push(format!("{scheme}: frequency demod not flagged ({rx:?})"));
        }
        let time = bench(
            BenchPlan {
                data_rates_bps: vec![0.25],
                scheme,
                ..BenchPlan::default()
            },
            &device,
            &ChannelConfig::default(),
        );
        if time.rates[0].ber_avg != 0.0 {
            bad.push(format!("{scheme}: time load ber {}", time.rates[0].ber_avg));
        }
    }
    check(
        bad.is_empty(),
        "frequency load pinned at 1.0, frequency demod flat and all-zero, time load error-free",
        bad.join("; "),
    )
}

fn host_smoke() -> Verdict {
    let paths = SourcePaths::default();
    let idle = match run_sampler(Metric::TimeLoad, 4.0, 2.0, &paths) {
        Ok(t) => t.mean().unwrap_or(1.0),
        Err(e) => return Skip(format!("cannot read /proc/stat: {e}")),
    };
    if idle > 0.2 {
        return Skip(format!("host not idle (baseline time load {idle:.2})"));
    }
    let bits: BitVector = "10101010".parse().expect("bits");
    let cfg = ModulationConfig::new(Scheme::Ask, 4.0);
    let schedule = modulate(&bits, &cfg).expect("modulate").merged();
    let baseline_s = 8.0;
    let now = Instant::now();
    let frame_start = now + Duration::from_secs_f64(baseline_s + 0.5);
    let handle = match spawn(plan_from_schedule(schedule, available_cores()), frame_start) {
        Ok(h) => h,
        Err(e) => return Fail(format!("loadgen: {e}")),
    };
    let sensing = thread::spawn(move || {
        run_sampler_from(
            frame_start - Duration::from_secs_f64(baseline_s),
            Metric::TimeLoad,
            1.0,
            baseline_s + 32.0,
            &SourcePaths::default(),
        )
    });
    let capture = sensing.join().expect("sampler thread");
    let _ = handle.join();
    let mut capture = match capture {
        Ok(t) => t.trace,
        Err(e) => return Fail(format!("sampler: {e}")),
    };
    capture.start_time_s = -baseline_s;
    let rx =
        decode_capture(&capture, &ReceiverConfig::new(cfg, Metric::TimeLoad, 8)).expect("decode");
    let got = rx.bits.map(|b| b.to_string()).unwrap_or_default();
    check(
        got == "10101010",
        format!("8 bits at 0.25 bps over /proc/stat decoded as {got}"),
        format!("decoded {got:?} from {:?}", capture.samples),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("zero-BER regime at 0.25 bps", zero_ber_regime),
        ("association airtime and matching", association_airtime),
        ("round-trip oracle", round_trip_oracle),
        ("frequency-load formula oracle", freq_load_oracle),
        ("FSK spectral check", fsk_spectral_check),
        ("ordering properties", ordering_properties),
        ("saturation-rate chance behavior", saturation_rate),
        ("parser golden and fuzz", parser_golden_and_fuzz),
        ("two-level pinned profile", rpi_profile),
        ("host smoke loopback", host_smoke),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{:>2}] {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria failed",
        failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
