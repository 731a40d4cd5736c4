use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreFreq {
    pub current_hz: u64,
    pub max_hz: u64,
}

/// Instantaneous clock rates of every core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpuFreqReading {
    cores: Vec<CoreFreq>,
}

impl CpuFreqReading {
    pub fn new(cores: Vec<CoreFreq>) -> Result<Self> {
        for (i, c) in cores.iter().enumerate() {
            if c.max_hz == 0 || c.current_hz == 0 || c.current_hz > c.max_hz {
                return Err(Error::invalid(format!(
                    "core {i}: need 0 < current ({}) <= max ({})",
                    c.current_hz, c.max_hz
                )));
            }
        }
        Ok(CpuFreqReading { cores })
    }

    /// `n` identical cores all running at `current_hz`.
    pub fn uniform(n: usize, current_hz: u64, max_hz: u64) -> Result<Self> {
        CpuFreqReading::new(vec![CoreFreq { current_hz, max_hz }; n])
    }

    pub fn cores(&self) -> &[CoreFreq] {
        &self.cores
    }
}

/// Load frequency ratio: the mean over cores of current / max clock rate.
pub fn frequency_load(reading: &CpuFreqReading) -> Result<f64> {
    if reading.cores.is_empty() {
        return Err(Error::invalid("frequency reading has no cores"));
    }
    let n = reading.cores.len() as f64;
    Ok(reading
        .cores
        .iter()
        .map(|c| c.current_hz as f64 / c.max_hz as f64)
        .sum::<f64>()
        / n)
}

/// Parse a cpufreq attribute file (a single integer in kHz) into Hz.
pub fn parse_khz(text: &str) -> Result<u64> {
    let t = text.trim();
    t.parse::<u64>()
        .ok()
        .and_then(|khz| khz.checked_mul(1000))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("`{t}` is not a frequency in kHz"),
        })
}

fn read_attr(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Permission {
        path: path.to_path_buf(),
        source,
    })
}

/// Directories `cpu<N>/cpufreq` under `cpu_root`, ordered by core index.
pub fn cpufreq_dirs(cpu_root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(cpu_root).map_err(|source| Error::Permission {
        path: cpu_root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<(u32, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let idx: u32 = name.strip_prefix("cpu")?.parse().ok()?;
            let dir = e.path().join("cpufreq");
            dir.is_dir().then_some((idx, dir))
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Permission {
            path: cpu_root.join("cpu0/cpufreq"),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no cpufreq directories"),
        });
    }
    Ok(dirs.into_iter().map(|(_, d)| d).collect())
}

/// Read `scaling_cur_freq` and `scaling_max_freq` (falling back to
/// `cpuinfo_max_freq`) for every core. A current rate reported above the
/// maximum, as happens transiently with boost clocks, is clamped to it.
pub fn read_cpufreq(cpu_root: &Path) -> Result<CpuFreqReading> {
    let mut cores = Vec::new();
    for dir in cpufreq_dirs(cpu_root)? {
        let current_hz = parse_khz(&read_attr(&dir.join("scaling_cur_freq"))?)?;
        let max_hz = match read_attr(&dir.join("scaling_max_freq")) {
            Ok(text) => parse_khz(&text)?,
            Err(_) => parse_khz(&read_attr(&dir.join("cpuinfo_max_freq"))?)?,
        };
        cores.push(CoreFreq {
            current_hz: current_hz.min(max_hz),
            max_hz,
        });
    }
    CpuFreqReading::new(cores)
}
