//! Field diagnostics: radially averaged power spectrum and roughness.

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::{fft2d, fft_frequencies, Field2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    /// Mean radial frequency (cycles per field) of the frequencies in the bin.
    pub k: f64,
    /// Mean squared DFT magnitude, divided by the pixel count.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialSpectrum {
    pub bins: Vec<SpectrumBin>,
}

/// Averages `|F(k)|^2` over `bin_count` equal-width annuli spanning
/// `(0, k_max]`. DC is excluded and empty annuli are dropped.
pub fn radial_power_spectrum(field: &Field2D, bin_count: usize) -> RadialSpectrum {
    let bin_count = bin_count.max(1);
    let (w, h) = (field.width(), field.height());
    let mut data: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2d(&mut data, w, h, FftDirection::Forward);

    let fx = fft_frequencies(w);
    let fy = fft_frequencies(h);
    let radius = |x: usize, y: usize| ((fx[x] * fx[x] + fy[y] * fy[y]) as f64).sqrt();
    let k_max = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| radius(x, y)).fold(0.0, f64::max);
    let width = k_max / bin_count as f64;

    let mut k_sum = vec![0.0; bin_count];
    let mut p_sum = vec![0.0; bin_count];
    let mut counts = vec![0usize; bin_count];
    let n = (w * h) as f64;
    for y in 0..h {
        for x in 0..w {
            if x == 0 && y == 0 {
                continue;
            }
            let r = radius(x, y);
            let idx = ((r / width).ceil() as usize).saturating_sub(1).min(bin_count - 1);
            k_sum[idx] += r;
            p_sum[idx] += data[y * w + x].norm_sqr() / n;
            counts[idx] += 1;
        }
    }

    let bins = (0..bin_count)
        .filter(|&b| counts[b] > 0)
        .map(|b| SpectrumBin { k: k_sum[b] / counts[b] as f64, power: p_sum[b] / counts[b] as f64 })
        .collect();
    RadialSpectrum { bins }
}

/// Least-squares slope of `ln power` against `ln k` over bins with
/// `k_min <= k <= k_max`. `None` if fewer than two bins qualify.
pub fn fit_loglog_slope(spectrum: &RadialSpectrum, k_min: f64, k_max: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = spectrum
        .bins
        .iter()
        .filter(|b| b.k >= k_min && b.k <= k_max && b.power > 0.0)
        .map(|b| (b.k.ln(), b.power.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean absolute difference over all horizontal and vertical neighbour pairs.
pub fn tv_per_pixel(field: &Field2D) -> f64 {
    let (w, h) = (field.width(), field.height());
    let v = field.values();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for y in 0..h {
        for x in 0..w {
            let here = v[y * w + x];
            if x + 1 < w {
                total += (v[y * w + x + 1] - here).abs();
                pairs += 1;
            }
            if y + 1 < h {
                total += (v[(y + 1) * w + x] - here).abs();
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sinusoid_peaks_in_its_bin() {
        let (w, h) = (64, 64);
        let (k0x, k0y) = (6.0, 8.0); // radius 10
        let field = Field2D::from_fn(w, h, |x, y| {
            (2.0 * PI * (k0x * x as f64 / w as f64 + k0y * y as f64 / h as f64)).cos()
        })
        .unwrap();
        let spectrum = radial_power_spectrum(&field, 45);
        let peak = spectrum.bins.iter().max_by(|a, b| a.power.total_cmp(&b.power)).unwrap();
        let k_max = (32f64 * 32.0 * 2.0).sqrt();
        let bin_width = k_max / 45.0;
        let bin_of = |k: f64| (k / bin_width).ceil() as usize;
        assert_eq!(bin_of(peak.k), bin_of(10.0));
    }

    #[test]
    fn k_strictly_increasing_power_non_negative() {
        let field = Field2D::from_fn(20, 12, |x, y| ((x * 7 + y * 3) % 5) as f64).unwrap();
        let s = radial_power_spectrum(&field, 8);
        assert!(s.bins.windows(2).all(|w| w[0].k < w[1].k));
        assert!(s.bins.iter().all(|b| b.power >= 0.0));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let spectrum = RadialSpectrum {
            bins: (1..50).map(|k| SpectrumBin { k: k as f64, power: 3.0 * (k as f64).powf(-2.5) }).collect(),
        };
        let slope = fit_loglog_slope(&spectrum, 4.0, 40.0).unwrap();
        assert!((slope + 2.5).abs() < 1e-12);
        assert!(fit_loglog_slope(&spectrum, 100.0, 200.0).is_none());
    }

    #[test]
    fn tv_of_ramp() {
        let field = Field2D::from_fn(3, 2, |x, _| x as f64).unwrap();
        // 4 horizontal pairs with |1|, 3 vertical pairs with 0
        assert!((tv_per_pixel(&field) - 4.0 / 7.0).abs() < 1e-15);
    }
}
