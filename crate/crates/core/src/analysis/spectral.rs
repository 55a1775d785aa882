use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AnalysisError, Result};

/// One-sided power spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Hann-windowed power spectrum of `x` sampled at `fs` Hz, bins `0..=n/2`.
pub fn power_spectrum(x: &[f64], fs: f64) -> Result<Spectrum> {
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::ZeroSignal);
    }
    let w = hann(n);
    let mut buf: Vec<Complex<f64>> = x.iter().zip(&w).map(|(v, w)| Complex::new(v * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * fs / n as f64).collect(),
        power: buf[..bins].iter().map(|c| c.norm_sqr()).collect(),
    })
}

impl Spectrum {
    fn total(&self) -> Result<f64> {
        let total: f64 = self.power.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(AnalysisError::ZeroSignal);
        }
        Ok(total)
    }

    /// Lowest frequency below which at least `fraction` of the power lies.
    pub fn rolloff(&self, fraction: f64) -> Result<f64> {
        let total = self.total()?;
        let target = fraction * total;
        let mut acc = 0.0;
        for (f, p) in self.freqs.iter().zip(&self.power) {
            acc += p;
            if acc >= target {
                return Ok(*f);
            }
        }
        Ok(*self.freqs.last().expect("non-empty spectrum"))
    }

    /// Power-weighted centroid.
    pub fn centroid(&self) -> Result<f64> {
        let total = self.total()?;
        Ok(self.freqs.iter().zip(&self.power).map(|(f, p)| f * p).sum::<f64>() / total)
    }

    /// Power-weighted standard deviation of frequency about the centroid.
    pub fn spread(&self) -> Result<f64> {
        let total = self.total()?;
        let c = self.centroid()?;
        let var = self.freqs.iter().zip(&self.power).map(|(f, p)| (f - c).powi(2) * p).sum::<f64>() / total;
        Ok(var.sqrt())
    }
}

/// 85 % rolloff frequency of a signal sampled at `fs` Hz.
pub fn spectral_rolloff(x: &[f64], fs: f64) -> Result<f64> {
    power_spectrum(x, fs)?.rolloff(0.85)
}

pub fn spectral_spread(x: &[f64], fs: f64) -> Result<f64> {
    power_spectrum(x, fs)?.spread()
}
