//! Damped Fourier transforms of observable records and the response
//! functions built from them.
//!
//! Convention: `F(ω) = Σ_k y_k e^{-γ t_k} e^{iω t_k} dt`, so a tone `e^{-iω₀t}`
//! becomes a Lorentzian of half-width `γ` centred on `ω = ω₀`. Series are
//! zero-padded to [`PAD_FACTOR`] times their length and the grid is
//! `ω_m = 2π m / (N_pad dt)` for `|m| < N_pad / 2`, symmetric about zero.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cis, exp, C64, PI};

pub const PAD_FACTOR: usize = 8;

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999;

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211386245988;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("a time series needs at least two samples".into()));
        }
        Ok(TimeSeries { t0, dt, values, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time(k))
    }

    /// `y(t) - y(t0)`
    pub fn deviation(&self) -> TimeSeries {
        let y0 = self.values[0];
        TimeSeries { values: self.values.iter().map(|y| y - y0).collect(), ..self.clone() }
    }

    pub fn scaled(&self, factor: f64) -> TimeSeries {
        TimeSeries { values: self.values.iter().map(|y| y * factor).collect(), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<C64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Grid spacing.
    pub fn bin(&self) -> f64 {
        if self.omegas.len() < 2 {
            0.0
        } else {
            self.omegas[1] - self.omegas[0]
        }
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }

    /// Largest `|F(ω) - conj F(-ω)|` over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n).map(|i| (self.values[i] - self.values[n - 1 - i].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Real-valued spectrum, e.g. an absorption cross-section.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSpectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

/// Number of grid points and spacing for `n` samples at step `dt`.
pub fn grid(n: usize, dt: f64) -> (usize, f64) {
    let n_pad = PAD_FACTOR * n;
    (n_pad, 2.0 * PI / (n_pad as f64 * dt))
}

fn grid_indices(n_pad: usize) -> core::ops::RangeInclusive<i64> {
    let half = (n_pad / 2) as i64;
    -(half - 1)..=(half - 1)
}

/// `F(ω)` of a real series.
pub fn damped_dft(series: &TimeSeries, gamma: f64) -> Result<Spectrum> {
    let values: Vec<C64> = series.values.iter().map(|&y| C64::new(y, 0.0)).collect();
    damped_dft_complex(series.t0, series.dt, &values, gamma)
}

/// `F(ω)` of a complex series, FFT-backed with the `std` feature.
pub fn damped_dft_complex(t0: f64, dt: f64, values: &[C64], gamma: f64) -> Result<Spectrum> {
    #[cfg(feature = "std")]
    {
        damped_dft_fft(t0, dt, values, gamma)
    }
    #[cfg(not(feature = "std"))]
    {
        damped_dft_direct(t0, dt, values, gamma)
    }
}

fn check_transform(dt: f64, values: &[C64], gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("damping must be nonnegative".into()));
    }
    if !(dt > 0.0) || values.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples with a positive step".into()));
    }
    Ok(())
}

fn damped_samples(t0: f64, dt: f64, values: &[C64], gamma: f64) -> Vec<C64> {
    values.iter().enumerate().map(|(k, &y)| y * exp(-gamma * (t0 + dt * k as f64))).collect()
}

/// Direct `O(N · N_pad)` evaluation on the canonical grid.
pub fn damped_dft_direct(t0: f64, dt: f64, values: &[C64], gamma: f64) -> Result<Spectrum> {
    check_transform(dt, values, gamma)?;
    let (n_pad, dw) = grid(values.len(), dt);
    let damped = damped_samples(t0, dt, values, gamma);
    let mut omegas = Vec::new();
    let mut out = Vec::new();
    for m in grid_indices(n_pad) {
        let w = dw * m as f64;
        // e^{iω t_k} = e^{iω t0} (e^{iω dt})^k, accumulated with exact twiddles
        let mut acc = C64::new(0.0, 0.0);
        for (k, &y) in damped.iter().enumerate() {
            let phase = 2.0 * PI * ((m * k as i64).rem_euclid(n_pad as i64)) as f64 / n_pad as f64;
            acc += y * cis(phase);
        }
        omegas.push(w);
        out.push(acc * cis(w * t0) * dt);
    }
    Ok(Spectrum { omegas, values: out })
}

#[cfg(feature = "std")]
fn damped_dft_fft(t0: f64, dt: f64, values: &[C64], gamma: f64) -> Result<Spectrum> {
    check_transform(dt, values, gamma)?;
    let (n_pad, dw) = grid(values.len(), dt);
    let mut buf = damped_samples(t0, dt, values, gamma);
    buf.resize(n_pad, C64::new(0.0, 0.0));
    // the inverse direction uses e^{+2πi mk/N}, matching e^{iωt}
    rustfft::FftPlanner::new().plan_fft_inverse(n_pad).process(&mut buf);
    let mut omegas = Vec::new();
    let mut out = Vec::new();
    for m in grid_indices(n_pad) {
        let w = dw * m as f64;
        omegas.push(w);
        out.push(buf[m.rem_euclid(n_pad as i64) as usize] * cis(w * t0) * dt);
    }
    Ok(Spectrum { omegas, values: out })
}

/// `α(ω) = d(ω) / E(ω)`. Points where `|E(ω)| < 1e-12 · e0` are masked to zero.
pub fn polarizability(d: &Spectrum, e: &Spectrum, e0: f64) -> Result<Spectrum> {
    if d.omegas.len() != e.omegas.len() {
        return Err(Error::DimensionMismatch { expected: d.omegas.len(), got: e.omegas.len() });
    }
    let floor = 1e-12 * e0.abs();
    let values = d
        .values
        .iter()
        .zip(&e.values)
        .map(|(&dv, &ev)| if ev.norm() < floor || ev.norm() == 0.0 { C64::new(0.0, 0.0) } else { dv / ev })
        .collect();
    Ok(Spectrum { omegas: d.omegas.clone(), values })
}

/// `σ(ω) = (4πω / c) Im α(ω)` in atomic units, with the frequency axis moved by `shift`.
pub fn absorption_cross_section(alpha: &Spectrum, shift: f64) -> RealSpectrum {
    let values = alpha.omegas.iter().zip(&alpha.values).map(|(&w, a)| 4.0 * PI * w / SPEED_OF_LIGHT_AU * a.im).collect();
    RealSpectrum { omegas: alpha.omegas.iter().map(|w| w + shift).collect(), values }
}

/// `χ(ω) = δS(ω) / E₀`
pub fn susceptibility(d_sz: &Spectrum, e0: f64) -> Result<Spectrum> {
    if e0 == 0.0 || !e0.is_finite() {
        return Err(Error::InvalidArgument("field strength must be nonzero".into()));
    }
    Ok(Spectrum { omegas: d_sz.omegas.clone(), values: d_sz.values.iter().map(|z| z / e0).collect() })
}

/// `Re C = Re χ`, `Im C = sgn(ω) Im χ`.
pub fn correlation_from_susceptibility(chi: &Spectrum) -> Spectrum {
    let values = chi
        .omegas
        .iter()
        .zip(&chi.values)
        .map(|(&w, z)| {
            let s = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            C64::new(z.re, s * z.im)
        })
        .collect();
    Spectrum { omegas: chi.omegas.clone(), values }
}

/// Momentum-resolved spectra from pair records `C_ij(t)`: the spatial
/// transform `Σ e^{-iq(r_i - r_j)} C_ij(t)` averaged over the source sites
/// `j`, then the damped temporal transform. Every source site present must
/// come with all `N` response sites. `q = 2π m / N`.
pub fn magnon_spectrum(
    correlations: &BTreeMap<(usize, usize), TimeSeries>,
    positions: &[f64],
    gamma: f64,
) -> Result<Vec<(f64, Spectrum)>> {
    let n = positions.len();
    let sources: Vec<usize> = {
        let mut s: Vec<usize> = correlations.keys().map(|&(_, j)| j).collect();
        s.dedup();
        s.sort_unstable();
        s.dedup();
        s
    };
    let Some(first) = sources.first().and_then(|&j| correlations.get(&(0, j)).or_else(|| correlations.values().next())) else {
        return Err(Error::IncompleteCorrelations(0, 0));
    };
    for &j in &sources {
        for i in 0..n {
            let Some(series) = correlations.get(&(i, j)) else {
                return Err(Error::IncompleteCorrelations(i, j));
            };
            if series.len() != first.len() || series.dt != first.dt || series.t0 != first.t0 {
                return Err(Error::InvalidArgument(alloc::format!("record ({i}, {j}) is on a different time grid")));
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let q = 2.0 * PI * m as f64 / n as f64;
        let mut sq = vec![C64::new(0.0, 0.0); first.len()];
        for &j in &sources {
            for i in 0..n {
                let w = cis(-q * (positions[i] - positions[j])) / sources.len() as f64;
                for (acc, &y) in sq.iter_mut().zip(&correlations[&(i, j)].values) {
                    *acc += w * y;
                }
            }
        }
        out.push((q, damped_dft_complex(first.t0, first.dt, &sq, gamma)?));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    /// Full width at half maximum, when both half-height crossings lie in the window.
    pub fwhm: Option<f64>,
}

/// Highest point of `values` with `lo ≤ ω ≤ hi`, refined by a parabola
/// through the maximum bin and its neighbours.
pub fn find_peak(omegas: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<Peak> {
    let idx: Vec<usize> = (0..omegas.len()).filter(|&i| omegas[i] >= lo && omegas[i] <= hi).collect();
    let &best = idx.iter().max_by(|&&a, &&b| values[a].total_cmp(&values[b]))?;
    Some(refine_peak(omegas, values, best, lo, hi))
}

fn refine_peak(omegas: &[f64], values: &[f64], i: usize, lo: f64, hi: f64) -> Peak {
    let (mut omega, mut height) = (omegas[i], values[i]);
    if i > 0 && i + 1 < values.len() {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let x = 0.5 * (a - c) / denom;
            omega += x * (omegas[i + 1] - omegas[i]);
            height = b - 0.25 * (a - c) * x;
        }
    }
    let half = 0.5 * height;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = i;
        for j in range {
            if omegas[j] < lo || omegas[j] > hi {
                return None;
            }
            if values[j] < half {
                let t = (values[prev] - half) / (values[prev] - values[j]);
                return Some(omegas[prev] + t * (omegas[j] - omegas[prev]));
            }
            prev = j;
        }
        None
    };
    let left = crossing(&mut (0..i).rev());
    let right = crossing(&mut (i + 1..values.len()));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    Peak { omega, height, fwhm }
}

/// Interior local maxima in `[lo, hi]` whose height is at least `rel_threshold`
/// times the largest value in the window, highest first.
pub fn local_maxima(omegas: &[f64], values: &[f64], lo: f64, hi: f64, rel_threshold: f64) -> Vec<Peak> {
    let idx: Vec<usize> = (1..omegas.len().saturating_sub(1)).filter(|&i| omegas[i] >= lo && omegas[i] <= hi).collect();
    let top = idx.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut peaks: Vec<Peak> = idx
        .into_iter()
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] >= rel_threshold * top)
        .map(|i| refine_peak(omegas, values, i, lo, hi))
        .collect();
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
    peaks
}
