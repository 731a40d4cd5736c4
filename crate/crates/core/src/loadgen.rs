//! Host transmitter: n−2 worker threads toggled between dense matrix
//! multiplication and sleep to follow a [`WaveformSchedule`].
//!
//! One coordinator thread owns the schedule clock and publishes the current
//! phase through an atomic; workers poll it between work units.

use std::hint::black_box;
use std::sync::atomic::{AtomicU8, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::codec::WaveformSchedule;
use crate::error::{Error, Result};

const IDLE: u8 = 0;
const BUSY: u8 = 1;
const STOP: u8 = 2;

/// Segments at or above this target load run the workers flat out.
pub const BUSY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadPlan {
    pub worker_count: usize,
    pub schedule: WaveformSchedule,
    /// Side length of the square matrices multiplied per work unit.
    pub matrix_dim: usize,
    pub toggle_resolution_s: f64,
}

/// Leave two cores free for the rest of the system, but always run at least one worker.
pub fn plan_from_schedule(schedule: WaveformSchedule, n_cores: usize) -> LoadPlan {
    let toggle = schedule
        .shortest_segment_s()
        .map_or(0.01, |s| (s / 4.0).min(0.01));
    LoadPlan {
        worker_count: n_cores.saturating_sub(2).max(1),
        schedule,
        matrix_dim: 64,
        toggle_resolution_s: toggle,
    }
}

pub fn available_cores() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub worker_count: usize,
    pub segments_executed: usize,
    /// Actual minus scheduled time of every boundary the coordinator reached, seconds.
    pub boundary_errors_s: Vec<f64>,
    pub aborted: bool,
}

impl RunReport {
    pub fn max_error_s(&self) -> f64 {
        self.boundary_errors_s.iter().copied().fold(0.0, f64::max)
    }

    pub fn p95_error_s(&self) -> f64 {
        if self.boundary_errors_s.is_empty() {
            return 0.0;
        }
        let mut v = self.boundary_errors_s.clone();
        v.sort_by(f64::total_cmp);
        let idx = ((v.len() as f64 * 0.95).ceil() as usize).clamp(1, v.len()) - 1;
        v[idx]
    }
}

/// A transmission in progress.
pub struct LoadHandle {
    phase: Arc<AtomicU8>,
    coordinator: Option<JoinHandle<RunReport>>,
    report: Option<RunReport>,
}

impl LoadHandle {
    /// Stop all workers and wait for them. Calling it again, or after the run
    /// finished, does nothing.
    pub fn abort(&mut self) {
        if let Some(c) = self.coordinator.take() {
            self.phase.store(STOP, Ordering::SeqCst);
            self.report = Some(c.join().unwrap_or_default());
        }
    }

    pub fn is_finished(&self) -> bool {
        self.coordinator.as_ref().is_none_or(|c| c.is_finished())
    }

    pub fn join(mut self) -> Result<RunReport> {
        if let Some(c) = self.coordinator.take() {
            self.report = Some(
                c.join()
                    .map_err(|_| Error::Resource("load coordinator panicked".into()))?,
            );
        }
        Ok(self.report.take().unwrap_or_default())
    }
}

impl Drop for LoadHandle {
    fn drop(&mut self) {
        self.abort();
    }
}

/// Start the workers now and begin the schedule at `start_at`.
pub fn spawn(plan: LoadPlan, start_at: Instant) -> Result<LoadHandle> {
    if start_at < Instant::now() {
        return Err(Error::Scheduling(
            "start instant is already in the past".into(),
        ));
    }
    if plan.worker_count == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    if !(plan.toggle_resolution_s > 0.0) {
        return Err(Error::invalid("toggle resolution must be positive"));
    }
    let phase = Arc::new(AtomicU8::new(IDLE));
    if plan.schedule.is_empty() {
        return Ok(LoadHandle {
            phase,
            coordinator: None,
            report: Some(RunReport::default()),
        });
    }

    let resolution = Duration::from_secs_f64(plan.toggle_resolution_s);
    let mut workers = Vec::with_capacity(plan.worker_count);
    for i in 0..plan.worker_count {
        let worker_phase = Arc::clone(&phase);
        let dim = plan.matrix_dim.max(1);
        let spawned = thread::Builder::new()
            .name(format!("load-worker-{i}"))
            .spawn(move || worker_loop(&worker_phase, dim, resolution));
        match spawned {
            Ok(h) => workers.push(h),
            Err(e) => {
                phase.store(STOP, Ordering::SeqCst);
                for w in workers {
                    let _ = w.join();
                }
                return Err(Error::Resource(format!("cannot spawn worker {i}: {e}")));
            }
        }
    }

    let coord_phase = Arc::clone(&phase);
    let coordinator = thread::Builder::new()
        .name("load-coordinator".into())
        .spawn(move || coordinate(&plan, start_at, &coord_phase, workers))
        .map_err(|e| {
            phase.store(STOP, Ordering::SeqCst);
            Error::Resource(format!("cannot spawn coordinator: {e}"))
        })?;
    Ok(LoadHandle {
        phase,
        coordinator: Some(coordinator),
        report: None,
    })
}

/// Run the whole plan, blocking until the schedule ends.
pub fn execute(plan: LoadPlan, start_at: Instant) -> Result<RunReport> {
    spawn(plan, start_at)?.join()
}

fn coordinate(
    plan: &LoadPlan,
    start_at: Instant,
    phase: &AtomicU8,
    workers: Vec<JoinHandle<()>>,
) -> RunReport {
    let resolution = Duration::from_secs_f64(plan.toggle_resolution_s);
    let mut report = RunReport {
        worker_count: workers.len(),
        ..RunReport::default()
    };
    let boundaries: Vec<f64> = plan.schedule.boundaries().collect();
    let segments = plan.schedule.segments();
    for (k, &at) in boundaries.iter().enumerate() {
        let due = start_at + Duration::from_secs_f64(at);
        if !wait_until(due, phase, resolution) {
            report.aborted = true;
            break;
        }
        let next = match segments.get(k) {
            Some(seg) if seg.target_load >= BUSY_THRESHOLD => BUSY,
            Some(_) => IDLE,
            None => STOP,
        };
        // A concurrent abort wins over the scheduled phase.
        if phase
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |p| {
                (p != STOP).then_some(next)
            })
            .is_err()
        {
            report.aborted = true;
            break;
        }
        report
            .boundary_errors_s
            .push(Instant::now().saturating_duration_since(due).as_secs_f64());
        if k > 0 {
            report.segments_executed += 1;
        }
    }
    phase.store(STOP, Ordering::SeqCst);
    for w in workers {
        let _ = w.join();
    }
    report
}

/// Sleep until `due` in slices no longer than `slice`; false if stopped meanwhile.
fn wait_until(due: Instant, phase: &AtomicU8, slice: Duration) -> bool {
    loop {
        if phase.load(Ordering::SeqCst) == STOP {
            return false;
        }
        let now = Instant::now();
        if now >= due {
            return true;
        }
        thread::sleep((due - now).min(slice));
    }
}

fn worker_loop(phase: &AtomicU8, dim: usize, resolution: Duration) {
    let a: Vec<f64> = (0..dim * dim).map(|i| (i % 7) as f64 * 0.5).collect();
    let b: Vec<f64> = (0..dim * dim).map(|i| (i % 5) as f64 * 0.25).collect();
    let mut c = vec![0.0; dim * dim];
    loop {
        match phase.load(Ordering::Relaxed) {
            BUSY => {
                matmul(&a, &b, &mut c, dim);
                black_box(&mut c);
            }
            STOP => return,
            _ => thread::sleep(resolution),
        }
    }
}

fn matmul(a: &[f64], b: &[f64], c: &mut [f64], n: usize) {
    c.fill(0.0);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
}
