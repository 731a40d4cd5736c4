use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Residuals below this after mean removal are treated as exact zeros.
const FLAT_EPS: f64 = 1e-12;
/// Powers within this relative distance of the maximum count as a tie.
const TIE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency_hz: f64,
    pub power: f64,
    /// Bin index m, with frequency m / window duration.
    pub bin: usize,
}

/// One-sided periodogram `|X_m|^2 / n` of the mean-removed window for bins
/// `m = 1 ..= n/2`. Element `k` of the result is bin `k + 1`.
pub fn power_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n < 2 {
        return Vec::new();
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| {
            let r = x - mean;
            Complex::new(if r.abs() <= FLAT_EPS { 0.0 } else { r }, 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    buf[1..=n / 2]
        .iter()
        .map(|c| c.norm_sqr() / n as f64)
        .collect()
}

/// Strongest non-DC frequency in a window spanning `window_duration_s`.
/// Ties go to the lower frequency, so a silent window reports the lowest bin.
pub fn spectral_peak(samples: &[f64], window_duration_s: f64) -> Result<SpectralPeak> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            available: samples.len(),
        });
    }
    if !(window_duration_s > 0.0 && window_duration_s.is_finite()) {
        return Err(Error::invalid(format!(
            "window duration must be positive, got {window_duration_s}"
        )));
    }
    let spectrum = power_spectrum(samples);
    let max = spectrum.iter().copied().fold(0.0, f64::max);
    let floor = max * (1.0 - TIE_REL);
    let k = spectrum.iter().position(|&p| p >= floor).unwrap_or(0);
    let bin = k + 1;
    Ok(SpectralPeak {
        frequency_hz: bin as f64 / window_duration_s,
        power: spectrum[k],
        bin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct O(n^2) DFT power at bin m after mean removal.
    fn dft_power(x: &[f64], m: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            let a = -2.0 * PI * (m * k) as f64 / n as f64;
            re += (v - mean) * a.cos();
            im += (v - mean) * a.sin();
        }
        (re * re + im * im) / n as f64
    }

    #[test]
    fn matches_brute_force_dft() {
        let x: Vec<f64> = (0..20).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
        let fast = power_spectrum(&x);
        for m in 1..=10 {
            assert!((fast[m - 1] - dft_power(&x, m)).abs() < 1e-9, "bin {m}");
        }
    }

    #[test]
    fn cosine_at_five_cycles() {
        let t = 3.0;
        let x: Vec<f64> = (0..20)
            .map(|k| 0.5 + 0.5 * (2.0 * PI * 5.0 * k as f64 / 20.0).cos())
            .collect();
        let peak = spectral_peak(&x, t).unwrap();
        assert_eq!(peak.bin, 5);
        assert!((peak.frequency_hz - 5.0 / t).abs() < 1e-12);
        // Closed form for a sampled cosine of amplitude a on an exact bin: (a*n/2)^2 / n.
        let expected = (0.5 * 20.0 / 2.0f64).powi(2) / 20.0;
        assert!((peak.power - expected).abs() < 1e-9);
    }

    #[test]
    fn flat_window_has_zero_power_at_lowest_bin() {
        let peak = spectral_peak(&[0.1; 20], 1.0).unwrap();
        assert_eq!(peak.bin, 1);
        assert_eq!(peak.power, 0.0);
    }

    #[test]
    fn stronger_low_tone_wins() {
        let x: Vec<f64> = (0..20)
            .map(|k| {
                let p = k as f64 / 20.0;
                (2.0 * PI * p).sin() + 0.2 * (2.0 * PI * 5.0 * p).sin()
            })
            .collect();
        let brute = (1..=10)
            .map(|m| (m, dft_power(&x, m)))
            .fold(
                (0, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        let peak = spectral_peak(&x, 2.0).unwrap();
        assert_eq!(peak.bin, brute.0);
        assert_eq!(peak.bin, 1);
        assert!((peak.frequency_hz - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            spectral_peak(&[0.0, 1.0, 0.0], 1.0),
            Err(Error::InsufficientData {
                needed: 4,
                available: 3
            })
        ));
    }
}
