//! Host workload sensing from `/proc/stat` and the cpufreq sysfs tree.
//!
//! All source paths are parameters so fixtures can stand in for the real files;
//! nothing here needs elevated privileges.

mod cpufreq;
mod procstat;
mod sampler;

pub use cpufreq::{
    cpufreq_dirs, frequency_load, parse_khz, read_cpufreq, CoreFreq, CpuFreqReading,
};
pub use procstat::{parse_proc_stat, time_load_between, ProcStatSnapshot};
pub use sampler::{run_sampler, run_sampler_from, SourcePaths, TimedTrace};
