use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use super::cpufreq::{frequency_load, read_cpufreq};
use super::procstat::{parse_proc_stat, time_load_between, ProcStatSnapshot};
use crate::error::{Error, Result};
use crate::trace::{sample_count, Metric, WorkloadTrace};

/// Where the sampler reads its pseudo-files from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePaths {
    pub proc_stat: PathBuf,
    /// Directory holding `cpu<N>/cpufreq/`.
    pub cpu_root: PathBuf,
}

impl Default for SourcePaths {
    fn default() -> Self {
        SourcePaths {
            proc_stat: PathBuf::from("/proc/stat"),
            cpu_root: PathBuf::from("/sys/devices/system/cpu"),
        }
    }
}

impl SourcePaths {
    pub fn read_proc_stat(&self) -> Result<ProcStatSnapshot> {
        read_snapshot(&self.proc_stat)
    }
}

fn read_snapshot(path: &Path) -> Result<ProcStatSnapshot> {
    let text = fs::read_to_string(path).map_err(|source| Error::Permission {
        path: path.to_path_buf(),
        source,
    })?;
    parse_proc_stat(&text)
}

/// A trace plus the monotonic offset (from the start instant) at which each sample was taken.
#[derive(Debug, Clone)]
pub struct TimedTrace {
    pub trace: WorkloadTrace,
    pub taken_at_s: Vec<f64>,
}

/// Sample the host starting now.
pub fn run_sampler(
    metric: Metric,
    sample_rate_hz: f64,
    duration_s: f64,
    paths: &SourcePaths,
) -> Result<WorkloadTrace> {
    run_sampler_from(Instant::now(), metric, sample_rate_hz, duration_s, paths).map(|t| t.trace)
}

/// Sample the host on a cadence anchored to `start`.
///
/// Time-load sample `i` covers `[start + i/rate, start + (i+1)/rate)` using
/// back-to-back `/proc/stat` snapshots; frequency-load sample `i` is the clock
/// reading at the end of that interval.
pub fn run_sampler_from(
    start: Instant,
    metric: Metric,
    sample_rate_hz: f64,
    duration_s: f64,
    paths: &SourcePaths,
) -> Result<TimedTrace> {
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!(
            "duration must be nonnegative, got {duration_s}"
        )));
    }
    let n = sample_count(duration_s, sample_rate_hz);
    let mut samples = Vec::with_capacity(n);
    let mut taken_at_s = Vec::with_capacity(n);
    if n > 0 {
        // Fail early, before any waiting, when the source is unreadable.
        match metric {
            Metric::TimeLoad => drop(read_snapshot(&paths.proc_stat)?),
            Metric::FrequencyLoad => drop(read_cpufreq(&paths.cpu_root)?),
        }
    }
    sleep_until(start);
    let mut prev = match (metric, n) {
        (Metric::TimeLoad, 1..) => Some(read_snapshot(&paths.proc_stat)?),
        _ => None,
    };
    let mut last = 0.0;
    for i in 0..n {
        let due = start + Duration::from_secs_f64((i + 1) as f64 / sample_rate_hz);
        sleep_until(due);
        taken_at_s.push(start.elapsed().as_secs_f64());
        let value = match metric {
            Metric::TimeLoad => {
                let snap = read_snapshot(&paths.proc_stat)?;
                let a = prev.replace(snap).expect("snapshot taken before loop");
                match time_load_between(&a, &snap) {
                    Ok(v) => v,
                    // No tick elapsed in a very short interval: repeat the last value.
                    Err(Error::InsufficientData { .. }) => last,
                    Err(e) => return Err(e),
                }
            }
            Metric::FrequencyLoad => frequency_load(&read_cpufreq(&paths.cpu_root)?)?,
        };
        last = value;
        samples.push(value);
    }
    Ok(TimedTrace {
        trace: WorkloadTrace::new(metric, sample_rate_hz, 0.0, samples)?,
        taken_at_s,
    })
}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_paths(dir: &Path) -> SourcePaths {
        SourcePaths {
            proc_stat: dir.join("stat"),
            cpu_root: dir.join("cpu"),
        }
    }

    #[test]
    fn zero_duration_is_empty() {
        let paths = fixture_paths(Path::new("/nonexistent-loadmodem"));
        let trace = run_sampler(Metric::TimeLoad, 10.0, 0.0, &paths).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn missing_source_is_permission_error() {
        let paths = fixture_paths(Path::new("/nonexistent-loadmodem"));
        match run_sampler(Metric::TimeLoad, 10.0, 1.0, &paths) {
            Err(Error::Permission { path, .. }) => assert!(path.ends_with("stat")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            run_sampler(Metric::FrequencyLoad, 10.0, 1.0, &paths),
            Err(Error::Permission { .. })
        ));
    }

    #[test]
    fn static_fixture_repeats_last_value() {
        // Counters never move, so every interval lacks ticks.
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("stat"), "cpu 1 2 3 4 5 6 7 8\n").unwrap();
        let trace = run_sampler(Metric::TimeLoad, 50.0, 0.1, &fixture_paths(tmp.path())).unwrap();
        assert_eq!(trace.len(), 5);
        assert!(trace.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frequency_fixture() {
        let tmp = tempfile::tempdir().unwrap();
        for (i, cur) in ["600000", "1200000"].iter().enumerate() {
            let dir = tmp.path().join(format!("cpu/cpu{i}/cpufreq"));
            fs::create_dir_all(&dir).unwrap();
            fs::write(dir.join("scaling_cur_freq"), cur).unwrap();
            fs::write(dir.join("scaling_max_freq"), "1200000").unwrap();
        }
        let trace =
            run_sampler(Metric::FrequencyLoad, 20.0, 0.2, &fixture_paths(tmp.path())).unwrap();
        assert_eq!(trace.samples, vec![0.75; 4]);
    }
}
