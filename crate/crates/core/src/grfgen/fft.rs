//! Row/column 2D DFT over a row-major complex grid.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Unnormalised in-place 2D transform.
pub(crate) fn fft2d(data: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), width * height);
    let mut planner = FftPlanner::new();

    let rows = planner.plan_fft(width, direction);
    let mut scratch = vec![Complex64::default(); rows.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(width) {
        rows.process_with_scratch(row, &mut scratch);
    }

    let cols = planner.plan_fft(height, direction);
    let mut scratch = vec![Complex64::default(); cols.get_inplace_scratch_len()];
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        cols.process_with_scratch(&mut column, &mut scratch);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(input: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); input.len()];
        for v in 0..height {
            for u in 0..width {
                let mut acc = Complex64::default();
                for y in 0..height {
                    for x in 0..width {
                        let phase = -2.0 * PI * ((u * x) as f64 / width as f64 + (v * y) as f64 / height as f64);
                        acc += input[y * width + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[v * width + u] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_on_odd_grid() {
        let (w, h) = (5, 3);
        let input: Vec<Complex64> =
            (0..w * h).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())).collect();
        let mut fast = input.clone();
        fft2d(&mut fast, w, h, FftDirection::Forward);
        for (a, b) in fast.iter().zip(naive_dft(&input, w, h)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let (w, h) = (8, 6);
        let input: Vec<Complex64> = (0..w * h).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut data = input.clone();
        fft2d(&mut data, w, h, FftDirection::Forward);
        fft2d(&mut data, w, h, FftDirection::Inverse);
        let n = (w * h) as f64;
        for (a, b) in data.iter().zip(&input) {
            assert!((a / n - b).norm() < 1e-12);
        }
    }
}
