//! Pure signal layer: bits to ideal workload waveforms and sampled traces back to bits.

mod demod;
mod schedule;
mod spectrum;

pub use demod::{demodulate, demodulate_ask, demodulate_fsk, DemodConfig};
pub use schedule::{
    modulate, required_sample_rate, ModulationConfig, Scheme, Segment, WaveformSchedule,
};
pub use spectrum::{power_spectrum, spectral_peak, SpectralPeak};

use crate::trace::{sample_count, Metric, WorkloadTrace};

/// Exact interval averages of a schedule, as an ideal sensor would report them.
pub fn sample_ideal(schedule: &WaveformSchedule, sample_rate_hz: f64) -> WorkloadTrace {
    let n = sample_count(schedule.total_duration_s(), sample_rate_hz);
    let dt = 1.0 / sample_rate_hz;
    let mut samples = vec![0.0; n];
    let mut seg_start = 0.0;
    for seg in schedule.segments() {
        let seg_end = seg_start + seg.duration_s;
        let first = (seg_start * sample_rate_hz).floor() as usize;
        for (i, slot) in samples.iter_mut().enumerate().skip(first) {
            let lo = i as f64 * dt;
            let hi = lo + dt;
            if lo >= seg_end {
                break;
            }
            let overlap = hi.min(seg_end) - lo.max(seg_start);
            if overlap > 0.0 {
                *slot += seg.target_load * overlap / dt;
            }
        }
        seg_start = seg_end;
    }
    for s in &mut samples {
        *s = s.clamp(0.0, 1.0);
    }
    WorkloadTrace::new(Metric::TimeLoad, sample_rate_hz, 0.0, samples).expect("clamped samples")
}
