//! Uniformly sampled workload observations and their CSV form
//! (`time_s,value,metric`, one row per sample).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Fraction of processor time spent non-idle.
    TimeLoad,
    /// Mean over cores of current clock rate divided by maximum clock rate.
    FrequencyLoad,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::TimeLoad => "time_load",
            Metric::FrequencyLoad => "frequency_load",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time_load" | "time" => Ok(Metric::TimeLoad),
            "frequency_load" | "freq" | "frequency" => Ok(Metric::FrequencyLoad),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadTrace {
    pub metric: Metric,
    pub sample_rate_hz: f64,
    /// Time of sample 0 relative to the rendezvous instant.
    pub start_time_s: f64,
    pub samples: Vec<f64>,
}

/// Number of samples covering `duration_s` at `rate_hz`, tolerant of
/// floating-point products like `k * T * (4 / T)` landing just above an integer.
pub(crate) fn sample_count(duration_s: f64, rate_hz: f64) -> usize {
    let n = duration_s * rate_hz;
    if n <= 0.0 {
        0
    } else {
        (n - 1e-9).ceil().max(0.0) as usize
    }
}

impl WorkloadTrace {
    pub fn new(
        metric: Metric,
        sample_rate_hz: f64,
        start_time_s: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("sample {bad} outside [0, 1]")));
        }
        Ok(WorkloadTrace {
            metric,
            sample_rate_hz,
            start_time_s,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time_s + index as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.samples.is_empty())
            .then(|| self.samples.iter().sum::<f64>() / self.samples.len() as f64)
    }

    /// Samples `[from, to)` as a new trace with a shifted start time.
    pub fn slice(&self, from: usize, to: usize) -> WorkloadTrace {
        let to = to.min(self.samples.len());
        let from = from.min(to);
        WorkloadTrace {
            metric: self.metric,
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.time_of(from),
            samples: self.samples[from..to].to_vec(),
        }
    }

    /// Split at time 0 into (pre-rendezvous baseline, frame onward).
    pub fn split_at_rendezvous(&self) -> (WorkloadTrace, WorkloadTrace) {
        let pre = ((-self.start_time_s) * self.sample_rate_hz).round();
        let pre = if pre > 0.0 { pre as usize } else { 0 };
        (self.slice(0, pre), self.slice(pre, self.samples.len()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "value", "metric"])?;
        for (i, v) in self.samples.iter().enumerate() {
            w.write_record([
                format!("{}", round_time(self.time_of(i))),
                format!("{v}"),
                self.metric.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a trace written by [`WorkloadTrace::write_csv`]. The sample rate is
    /// recovered from the spacing of the first two rows.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_s", "value", "metric"] {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `time_s,value,metric`".into(),
            });
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        let mut metric = None;
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let field = |k: usize| {
                rec.get(k).ok_or_else(|| Error::Parse {
                    line,
                    message: "missing column".into(),
                })
            };
            let parse_f = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("`{s}`: {e}"),
                })
            };
            times.push(parse_f(field(0)?)?);
            samples.push(parse_f(field(1)?)?);
            let m: Metric = field(2)?.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unknown metric `{}`", field(2).unwrap_or_default()),
            })?;
            if *metric.get_or_insert(m) != m {
                return Err(Error::Parse {
                    line,
                    message: "mixed metrics in one trace".into(),
                });
            }
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                available: times.len(),
            });
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::Parse {
                line: 3,
                message: "timestamps must increase".into(),
            });
        }
        WorkloadTrace::new(metric.unwrap(), 1.0 / dt, times[0], samples)
    }
}

// Keeps CSV timestamps free of accumulated representation noise like 0.30000000000000004.
fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let trace =
            WorkloadTrace::new(Metric::TimeLoad, 4.0, -0.5, vec![0.1, 0.2, 0.95, 1.0]).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,value,metric\n-0.5,0.1,time_load\n"));
        let back = WorkloadTrace::read_csv(&buf[..]).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn rejects_out_of_range_samples() {
        assert!(WorkloadTrace::new(Metric::TimeLoad, 1.0, 0.0, vec![1.2]).is_err());
        assert!(WorkloadTrace::new(Metric::TimeLoad, 0.0, 0.0, vec![]).is_err());
    }

    #[test]
    fn split_at_rendezvous() {
        let trace = WorkloadTrace::new(Metric::TimeLoad, 2.0, -1.0, vec![0.0; 6]).unwrap();
        let (pre, frame) = trace.split_at_rendezvous();
        assert_eq!(pre.len(), 2);
        assert_eq!(frame.len(), 4);
        assert_eq!(frame.start_time_s, 0.0);
    }

    #[test]
    fn sample_count_tolerates_rounding() {
        let t = 0.1;
        assert_eq!(sample_count(100.0 * t, 4.0 / t), 400);
        assert_eq!(sample_count(0.0, 4.0), 0);
        assert_eq!(sample_count(2.5, 1.0), 3);
    }
}
