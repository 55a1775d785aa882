use serde::{Deserialize, Serialize};

use super::{BaselineError, Result};

/// A complex number, just enough for pole placement and responses.
#[derive(Debug, Clone, Copy, PartialEq)]
struct C {
    re: f64,
    im: f64,
}

impl C {
    fn new(re: f64, im: f64) -> C {
        C { re, im }
    }
    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn scale(self, k: f64) -> C {
        C::new(self.re * k, self.im * k)
    }
    fn div(self, o: C) -> C {
        let d = o.re * o.re + o.im * o.im;
        C::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sqrt(self) -> C {
        let r = self.abs();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt().copysign(self.im);
        C::new(re, im)
    }
    fn expi(theta: f64) -> C {
        C::new(theta.cos(), theta.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: BandName,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Order of the lowpass prototype; the bandpass has twice as many poles.
    pub order: usize,
}

impl BandSpec {
    /// Clinical EEG bands with order-4 prototypes.
    pub fn default_bands() -> [BandSpec; 5] {
        let b = |name, low_hz, high_hz| BandSpec {
            name,
            low_hz,
            high_hz,
            order: 4,
        };
        [
            b(BandName::Delta, 0.5, 4.0),
            b(BandName::Theta, 4.0, 8.0),
            b(BandName::Alpha, 8.0, 13.0),
            b(BandName::Beta, 13.0, 30.0),
            b(BandName::Gamma, 30.0, 49.9),
        ]
    }
}

/// One second-order section, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: C) -> C {
        let z2 = z_inv.mul(z_inv);
        let num = C::new(self.b0, 0.0).add(z_inv.scale(self.b1)).add(z2.scale(self.b2));
        let den = C::new(1.0, 0.0).add(z_inv.scale(self.a1)).add(z2.scale(self.a2));
        num.div(den)
    }

    /// Largest pole modulus.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.abs().sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.a1 + r) / 2.0).abs().max(((-self.a1 - r) / 2.0).abs())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadChain {
    pub sections: Vec<Biquad>,
}

impl BiquadChain {
    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let z_inv = C::expi(-std::f64::consts::TAU * freq_hz / fs);
        self.sections.iter().map(|s| s.response(z_inv).abs()).product()
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections.iter().map(Biquad::pole_radius).fold(0.0, f64::max)
    }
}

/// Butterworth bandpass as a cascade of second-order sections.
///
/// The analog lowpass prototype is shifted to the band with the
/// lowpass-to-bandpass substitution, with band edges pre-warped, and then
/// mapped by the bilinear transform. Each section takes one conjugate pole
/// pair and the zero pair at `z = +1, -1`; gains are normalised to unity at
/// the band centre.
pub fn design_bandpass(spec: &BandSpec, fs: f64) -> Result<BiquadChain> {
    let nyquist = fs / 2.0;
    if !(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < nyquist) || spec.order == 0 {
        return Err(BaselineError::InvalidBand(format!(
            "{}: {}-{} Hz, order {} at fs {fs}",
            spec.name.as_str(),
            spec.low_hz,
            spec.high_hz,
            spec.order
        )));
    }
    let k = 2.0 * fs;
    let wl = k * (std::f64::consts::PI * spec.low_hz / fs).tan();
    let wh = k * (std::f64::consts::PI * spec.high_hz / fs).tan();
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;
    let n = spec.order;

    let mut upper = Vec::new();
    let mut real = Vec::new();
    for i in 0..n {
        let p = C::expi(std::f64::consts::PI * (2 * i + n + 1) as f64 / (2 * n) as f64);
        let half = p.scale(bw / 2.0);
        let root = half.mul(half).sub(C::new(w0 * w0, 0.0)).sqrt();
        for s in [half.add(root), half.sub(root)] {
            let z = C::new(k, 0.0).add(s).div(C::new(k, 0.0).sub(s));
            if z.im > 1e-12 {
                upper.push(z);
            } else if z.im.abs() <= 1e-12 {
                real.push(z.re);
            }
        }
    }
    real.sort_by(f64::total_cmp);
    let mut sections: Vec<Biquad> = upper
        .iter()
        .map(|p| Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -2.0 * p.re,
            a2: p.re * p.re + p.im * p.im,
        })
        .collect();
    for pair in real.chunks(2) {
        let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
        sections.push(Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -(r1 + r2),
            a2: r1 * r2,
        });
    }
    if sections.len() != n {
        return Err(BaselineError::UnstableDesign(format!(
            "{}: {} sections for order {n}",
            spec.name.as_str(),
            sections.len()
        )));
    }
    let centre = 2.0 * (w0 / k).atan();
    let z_inv = C::expi(-centre);
    for s in &mut sections {
        let g = s.response(z_inv).abs();
        s.b0 /= g;
        s.b2 /= g;
    }
    let chain = BiquadChain { sections };
    let radius = chain.max_pole_radius();
    if !(radius < 1.0) {
        return Err(BaselineError::UnstableDesign(format!(
            "{}: pole radius {radius}",
            spec.name.as_str()
        )));
    }
    Ok(chain)
}

/// Causal cascade in direct form II transposed, zero initial state.
pub fn filter_signal(x: &[f64], chain: &BiquadChain) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in &chain.sections {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in &mut y {
            let input = *v;
            let out = s.b0 * input + z1;
            z1 = s.b1 * input - s.a1 * out + z2;
            z2 = s.b2 * input - s.a2 * out;
            *v = out;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, n: usize) -> Vec<f64> {
        (0..n).map(|t| (std::f64::consts::TAU * freq * t as f64 / 100.0).sin()).collect()
    }

    fn steady_amplitude(y: &[f64]) -> f64 {
        y[y.len() / 2..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn alpha_band_passes_10_hz_and_rejects_40_hz() {
        let chain = design_bandpass(&BandSpec::default_bands()[2], 100.0).unwrap();
        assert_eq!(chain.sections.len(), 4);
        assert!(steady_amplitude(&filter_signal(&tone(10.0, 3000), &chain)) >= 0.7);
        assert!(steady_amplitude(&filter_signal(&tone(40.0, 3000), &chain)) < 0.1);
    }

    #[test]
    fn every_default_band_is_stable_and_blocks_dc() {
        for band in BandSpec::default_bands() {
            let chain = design_bandpass(&band, 100.0).unwrap();
            assert!(chain.max_pole_radius() < 1.0);
            assert!(chain.magnitude(0.0, 100.0) < 1e-9);
            let centre = (band.low_hz * band.high_hz).sqrt();
            let peak = (1..500)
                .map(|i| chain.magnitude(i as f64 * 0.1, 100.0))
                .fold(0.0, f64::max);
            assert!(chain.magnitude(centre, 100.0) >= peak / 2f64.sqrt(), "{:?}", band.name);
            let y = filter_signal(&vec![1.0; 6000], &chain);
            assert!(y[5999].abs() < 1e-3, "{:?} {}", band.name, y[5999]);
        }
    }

    #[test]
    fn impulse_response_of_one_section() {
        let s = Biquad {
            b0: 0.3,
            b1: -0.2,
            b2: 0.5,
            a1: -0.4,
            a2: 0.25,
        };
        let chain = BiquadChain { sections: vec![s] };
        let y = filter_signal(&[1.0, 0.0, 0.0, 0.0], &chain);
        assert!((y[0] - s.b0).abs() < 1e-15);
        assert!((y[1] - (s.b1 - s.b0 * s.a1)).abs() < 1e-15);
        assert!((y[2] - (s.b2 - s.b1 * s.a1 - s.b0 * (s.a2 - s.a1 * s.a1))).abs() < 1e-15);
    }

    #[test]
    fn zero_and_linearity() {
        let chain = design_bandpass(&BandSpec::default_bands()[3], 100.0).unwrap();
        assert!(filter_signal(&[0.0; 64], &chain).iter().all(|&v| v == 0.0));
        let x = tone(17.0, 500);
        let a = filter_signal(&x.iter().map(|v| 3.5 * v).collect::<Vec<_>>(), &chain);
        let b = filter_signal(&x, &chain);
        assert!(a.iter().zip(&b).all(|(u, v)| (u - 3.5 * v).abs() < 1e-10));
    }

    #[test]
    fn rejects_bands_outside_nyquist() {
        let mut band = BandSpec::default_bands()[4];
        band.high_hz = 50.0;
        assert!(matches!(design_bandpass(&band, 100.0), Err(BaselineError::InvalidBand(_))));
    }
}
