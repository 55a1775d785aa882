use serde::Serialize;

use super::{AnalysisError, Result};

/// Outcome of a one-way analysis of variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    /// Set when the within-group variance is zero: `f` is infinite and `p_value` is 0.
    pub zero_within: bool,
}

pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(AnalysisError::GroupTooSmall { group: groups.len(), size: 0 });
    }
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(AnalysisError::GroupTooSmall { group: i, size: g.len() });
        }
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let k = groups.len();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let (df_b, df_w) = (k - 1, n - k);
    let scale = groups.iter().flat_map(|g| g.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let negligible = |ss: f64| ss <= (scale * f64::EPSILON).powi(2) * n as f64;
    if negligible(ssb) {
        return Ok(AnovaResult { f: 0.0, df_between: df_b, df_within: df_w, p_value: 1.0, zero_within: negligible(ssw) });
    }
    if negligible(ssw) {
        return Ok(AnovaResult { f: f64::INFINITY, df_between: df_b, df_within: df_w, p_value: 0.0, zero_within: true });
    }
    let f = (ssb / df_b as f64) / (ssw / df_w as f64);
    Ok(AnovaResult { f, df_between: df_b, df_within: df_w, p_value: f_survival(f, df_b as f64, df_w as f64), zero_within: false })
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    // P(F > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
    let x = d2 / (d2 + d1 * f);
    regularized_beta(x, d2 / 2.0, d1 / 2.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(x, a, b) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b).clamp(0.0, 1.0)
    }
}

/// Continued fraction for the incomplete beta, modified Lentz evaluation.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Gaussian kernel density estimate evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

/// Silverman's rule of thumb, `1.06 sd n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(AnalysisError::DegenerateSamples);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(AnalysisError::DegenerateSamples);
    }
    Ok(1.06 * sd * (n as f64).powf(-0.2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// Sample range widened by four bandwidths on each side.
    Auto { points: usize },
    Range { lo: f64, hi: f64, points: usize },
}

/// Gaussian kernel density estimate.
pub fn kde(samples: &[f64], bandwidth: Bandwidth, grid: Grid) -> Result<KdeCurve> {
    let h = match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(samples)?,
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() && samples.len() >= 2 => h,
        Bandwidth::Fixed(_) => return Err(AnalysisError::DegenerateSamples),
    };
    let (lo, hi, points) = match grid {
        Grid::Auto { points } => (
            samples.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * h,
            samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h,
            points,
        ),
        Grid::Range { lo, hi, points } => (lo, hi, points),
    };
    let points = points.max(2);
    let grid = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    Ok(kde_on(samples, h, grid))
}

pub fn kde_on(samples: &[f64], bandwidth: f64, grid: Vec<f64>) -> KdeCurve {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| norm * samples.iter().map(|&s| (-0.5 * ((g - s) / bandwidth).powi(2)).exp()).sum::<f64>())
        .collect();
    KdeCurve { grid, density, bandwidth }
}

impl KdeCurve {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }

    pub fn peak(&self) -> f64 {
        let i = (0..self.density.len()).fold(0, |b, i| if self.density[i] > self.density[b] { i } else { b });
        self.grid[i]
    }
}

/// Scales values linearly onto `[0, 1]`; a constant input maps to zeros.
pub fn min_max_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    values.iter().map(|v| if range > 0.0 { (v - lo) / range } else { 0.0 }).collect()
}
