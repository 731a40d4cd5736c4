use crate::error::{Error, Result};

/// Aggregate tick counters from the `cpu` line of `/proc/stat`, in clock ticks
/// (normally 10 ms each).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcStatSnapshot {
    pub user: u64,
    pub nice: u64,
    pub system: u64,
    pub idle: u64,
    pub iowait: u64,
    pub irq: u64,
    pub softirq: u64,
    pub steal: u64,
    /// Already folded into `user` by the kernel; kept for reference only.
    pub guest: u64,
    /// Already folded into `nice` by the kernel; kept for reference only.
    pub guest_nice: u64,
}

const FIELD_NAMES: [&str; 10] = [
    "user",
    "nice",
    "system",
    "idle",
    "iowait",
    "irq",
    "softirq",
    "steal",
    "guest",
    "guest_nice",
];

impl ProcStatSnapshot {
    fn fields(&self) -> [u64; 10] {
        [
            self.user,
            self.nice,
            self.system,
            self.idle,
            self.iowait,
            self.irq,
            self.softirq,
            self.steal,
            self.guest,
            self.guest_nice,
        ]
    }

    /// Sum of the eight accounting categories.
    pub fn total(&self) -> u128 {
        self.fields()[..8].iter().map(|&v| v as u128).sum()
    }

    pub fn idle_total(&self) -> u128 {
        self.idle as u128 + self.iowait as u128
    }
}

/// Parse the aggregate `cpu` line out of `/proc/stat` text.
///
/// At least four counters are required; missing trailing ones read as zero.
pub fn parse_proc_stat(text: &str) -> Result<ProcStatSnapshot> {
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_ascii_whitespace();
        if tokens.next() != Some("cpu") {
            continue;
        }
        let mut values = [0u64; 10];
        let mut count = 0;
        for (slot, tok) in values.iter_mut().zip(tokens) {
            *slot = tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!(
                    "field {} (`{}`) is not an integer: `{line}`",
                    FIELD_NAMES[count], tok
                ),
            })?;
            count += 1;
        }
        if count < 4 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("aggregate cpu line has {count} counters, need at least 4"),
            });
        }
        let [user, nice, system, idle, iowait, irq, softirq, steal, guest, guest_nice] = values;
        return Ok(ProcStatSnapshot {
            user,
            nice,
            system,
            idle,
            iowait,
            irq,
            softirq,
            steal,
            guest,
            guest_nice,
        });
    }
    Err(Error::Parse {
        line: text.lines().count(),
        message: "no aggregate `cpu` line".into(),
    })
}

/// Busy fraction between two snapshots: `(Δtotal − Δidle − Δiowait) / Δtotal`.
pub fn time_load_between(a: &ProcStatSnapshot, b: &ProcStatSnapshot) -> Result<f64> {
    let (fa, fb) = (a.fields(), b.fields());
    for k in 0..8 {
        if fb[k] < fa[k] {
            return Err(Error::CounterWrap {
                field: FIELD_NAMES[k],
                before: fa[k],
                after: fb[k],
            });
        }
    }
    let total = b.total() - a.total();
    if total == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    }
    let idle = b.idle_total() - a.idle_total();
    Ok(((total - idle) as f64 / total as f64).clamp(0.0, 1.0))
}
