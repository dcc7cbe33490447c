//! Exact Euclidean distance transforms and ensemble averaging of binary masks.
//!
//! Distances are computed as exact integer squared distances with the
//! two-phase separable algorithm of Meijster, Roerdink and Hesselink. Masks
//! are fused by averaging their signed distance maps and thresholding at zero.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 8-bit mask pixels at or above this value are foreground.
pub const FOREGROUND_THRESHOLD: u8 = 128;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("dimension mismatch: mask {index} is {found_width}x{found_height}, expected {width}x{height}")]
    Dimensions { index: usize, width: usize, height: usize, found_width: usize, found_height: usize },
    #[error("at least one mask is required")]
    EmptyEnsemble,
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (width > 0 && height > 0 && bits.len() == width * height).then_some(BinaryMask { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryMask { width, height, bits: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Option<Self> {
        let bits = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, bits)
    }

    /// Parses rows of `0`/`1` characters; other characters are ignored.
    pub fn from_rows(rows: &[&str]) -> Option<Self> {
        let height = rows.len();
        let parsed: Vec<Vec<bool>> =
            rows.iter().map(|r| r.chars().filter_map(|c| matches!(c, '0' | '1').then_some(c == '1')).collect()).collect();
        let width = parsed.first()?.len();
        if parsed.iter().any(|r| r.len() != width) {
            return None;
        }
        Self::new(width, height, parsed.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask { width: self.width, height: self.height, bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Empty-set distance used in place of infinity.
    pub fn clamp_distance(&self) -> usize {
        self.width + self.height
    }

    pub fn load_png(path: &Path) -> Result<Self, MaskError> {
        let buf = image::open(path)?.to_luma8();
        let (w, h) = buf.dimensions();
        let bits = buf.into_raw().into_iter().map(|v| v >= FOREGROUND_THRESHOLD).collect();
        Ok(BinaryMask { width: w as usize, height: h as usize, bits })
    }

    /// Writes foreground as 255 and background as 0.
    pub fn save_png(&self, path: &Path) -> Result<(), MaskError> {
        let pixels: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::save_buffer_with_format(
            path,
            &pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }
}

/// Unsigned distance to the nearest foreground pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    width: usize,
    height: usize,
    squared: Vec<u64>,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Exact squared distances.
    pub fn squared(&self) -> &[u64] {
        &self.squared
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        (self.squared[y * self.width + x] as f64).sqrt()
    }

    pub fn values(&self) -> Vec<f64> {
        self.squared.iter().map(|&d| (d as f64).sqrt()).collect()
    }
}

/// Exact Euclidean distance from every pixel to the nearest foreground pixel.
/// With no foreground at all, every value is `width + height`.
pub fn distance_transform(mask: &BinaryMask) -> DistanceMap {
    let (w, h) = (mask.width, mask.height);
    let clamp = mask.clamp_distance() as u64;
    let squared = if mask.bits.iter().any(|&b| b) {
        squared_edt(mask)
    } else {
        vec![clamp * clamp; w * h]
    };
    DistanceMap { width: w, height: h, squared }
}

fn squared_edt(mask: &BinaryMask) -> Vec<u64> {
    let (w, h) = (mask.width, mask.height);
    let inf = (w + h) as i64;

    // Column pass: vertical distance to the nearest foreground pixel.
    let mut g = vec![0i64; w * h];
    for x in 0..w {
        g[x] = if mask.bits[x] { 0 } else { inf };
        for y in 1..h {
            let i = y * w + x;
            g[i] = if mask.bits[i] { 0 } else { (g[i - w] + 1).min(inf) };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            let i = y * w + x;
            if g[i + w] < g[i] {
                g[i] = g[i + w] + 1;
            }
        }
    }

    // Row pass: lower envelope of parabolas (x - i)^2 + g(i)^2.
    let mut out = vec![0u64; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i] * row[i];
        let sep = |i: usize, u: usize| {
            let (i64_i, i64_u) = (i as i64, u as i64);
            (i64_u * i64_u - i64_i * i64_i + row[u] * row[u] - row[i] * row[i]).div_euclid(2 * (i64_u - i64_i))
        };

        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let next = 1 + sep(s[q as usize], u);
                if next < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = next;
                }
            }
        }
        for u in (0..w).rev() {
            out[y * w + u] = f(u as i64, s[q as usize]) as u64;
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    out
}

/// Positive inside the foreground (distance to the nearest background pixel),
/// negative outside (distance to the nearest foreground pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistanceMap {
    width: usize,
    height: usize,
    /// Squared distance carrying the sign of the value.
    signed_squared: Vec<i64>,
}

impl SignedDistanceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn signed_squared(&self) -> &[i64] {
        &self.signed_squared
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        signed_sqrt(self.signed_squared[y * self.width + x])
    }

    pub fn values(&self) -> Vec<f64> {
        self.signed_squared.iter().map(|&d| signed_sqrt(d)).collect()
    }
}

fn signed_sqrt(d: i64) -> f64 {
    (d.unsigned_abs() as f64).sqrt().copysign(d as f64)
}

pub fn signed_distance(mask: &BinaryMask) -> SignedDistanceMap {
    let (w, h) = (mask.width, mask.height);
    let fg = mask.count_foreground();
    let clamp = mask.clamp_distance() as i64;
    let signed_squared = if fg == 0 {
        vec![-clamp * clamp; w * h]
    } else if fg == w * h {
        vec![clamp * clamp; w * h]
    } else {
        let inside = squared_edt(&mask.complement());
        let outside = squared_edt(mask);
        mask.bits
            .iter()
            .zip(inside.iter().zip(&outside))
            .map(|(&b, (&i, &o))| if b { i as i64 } else { -(o as i64) })
            .collect()
    };
    SignedDistanceMap { width: w, height: h, signed_squared }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Mean of signed distance maps, foreground where the mean is `>= 0`.
    #[default]
    SdfMean,
    /// Mean of 0/1 masks, foreground where the mean is `>= 0.5`.
    PixelMean,
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::SdfMean => "sdf_mean",
            FusionMode::PixelMean => "pixel_mean",
        })
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sdf_mean" => Ok(FusionMode::SdfMean),
            "pixel_mean" => Ok(FusionMode::PixelMean),
            other => Err(format!("unknown fusion mode `{other}` (expected sdf_mean or pixel_mean)")),
        }
    }
}

/// Fuses an ensemble of equally sized masks.
pub fn average_merge(masks: &[BinaryMask], mode: FusionMode) -> Result<BinaryMask, MaskError> {
    let first = masks.first().ok_or(MaskError::EmptyEnsemble)?;
    let (w, h) = (first.width, first.height);
    for (index, m) in masks.iter().enumerate() {
        if m.width != w || m.height != h {
            return Err(MaskError::Dimensions {
                index,
                width: w,
                height: h,
                found_width: m.width,
                found_height: m.height,
            });
        }
    }

    let bits = match mode {
        FusionMode::PixelMean => (0..w * h)
            .map(|p| 2 * masks.iter().filter(|m| m.bits[p]).count() >= masks.len())
            .collect(),
        FusionMode::SdfMean => {
            let maps: Vec<SignedDistanceMap> = masks.iter().map(signed_distance).collect();
            let max_sq = masks[0].clamp_distance().pow(2) as u64;
            let radicals = Radicals::new(max_sq);
            let mut terms: Vec<(u64, i64)> = Vec::with_capacity(masks.len());
            (0..w * h)
                .map(|p| {
                    terms.clear();
                    terms.extend(maps.iter().map(|m| radicals.decompose(m.signed_squared[p])));
                    sum_of_roots_is_non_negative(&mut terms)
                })
                .collect()
        }
    };
    Ok(BinaryMask { width: w, height: h, bits })
}

/// Decides `sum(c * sqrt(s)) >= 0` for terms `(s, c)` with squarefree `s`.
///
/// Square roots of distinct squarefree integers are linearly independent over
/// the rationals, so the sum is exactly zero iff every merged coefficient is.
/// Otherwise its sign is taken from a float sum in ascending `s` order, which
/// depends only on the multiset of terms.
fn sum_of_roots_is_non_negative(terms: &mut [(u64, i64)]) -> bool {
    terms.sort_unstable();
    let mut total = 0.0f64;
    let mut all_zero = true;
    let mut i = 0;
    while i < terms.len() {
        let s = terms[i].0;
        let mut coeff = 0i64;
        while i < terms.len() && terms[i].0 == s {
            coeff += terms[i].1;
            i += 1;
        }
        if coeff != 0 {
            all_zero = false;
            total += coeff as f64 * (s as f64).sqrt();
        }
    }
    all_zero || total >= 0.0
}

/// `n = a^2 * s` with `s` squarefree, via a smallest-prime-factor sieve.
struct Radicals {
    spf: Vec<u32>,
}

impl Radicals {
    fn new(limit: u64) -> Self {
        let limit = limit as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Radicals { spf }
    }

    /// Maps a signed squared distance `±n` to `(s, ±a)` with `sqrt(n) = a * sqrt(s)`.
    fn decompose(&self, signed: i64) -> (u64, i64) {
        let sign = signed.signum();
        let mut n = signed.unsigned_abs() as usize;
        if n == 0 {
            return (1, 0);
        }
        let (mut a, mut s) = (1i64, 1u64);
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            a *= (p as i64).pow(e / 2);
            if e % 2 == 1 {
                s *= p as u64;
            }
        }
        (s, sign * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_squared(mask: &BinaryMask) -> Vec<u64> {
        let (w, h) = (mask.width(), mask.height());
        let mut out = vec![u64::MAX; w * h];
        for y in 0..h {
            for x in 0..w {
                for qy in 0..h {
                    for qx in 0..w {
                        if mask.get(qx, qy) {
                            let d = (x as i64 - qx as i64).pow(2) + (y as i64 - qy as i64).pow(2);
                            out[y * w + x] = out[y * w + x].min(d as u64);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn single_center_pixel() {
        let mask = BinaryMask::from_rows(&["000", "010", "000"]).unwrap();
        let dt = distance_transform(&mask);
        assert_eq!(dt.squared(), brute_squared(&mask).as_slice());
        assert_eq!(dt.get(1, 1), 0.0);
        assert_eq!(dt.get(1, 0), 1.0);
        assert_eq!(dt.get(0, 0), 2f64.sqrt());
    }

    #[test]
    fn uniform_masks() {
        let full = BinaryMask::filled(4, 3, true);
        assert!(distance_transform(&full).values().iter().all(|&v| v == 0.0));
        let empty = BinaryMask::filled(4, 3, false);
        assert!(distance_transform(&empty).values().iter().all(|&v| v == 7.0));

        assert!(signed_distance(&full).values().iter().all(|&v| v == 7.0));
        assert!(signed_distance(&empty).values().iter().all(|&v| v == -7.0));
    }

    #[test]
    fn matches_brute_force_on_awkward_shapes() {
        for rows in [
            &["1000000", "0000000", "0000001"][..],
            &["0", "0", "1", "0"][..],
            &["0001000"][..],
            &["10", "00", "00", "00", "01"][..],
        ] {
            let mask = BinaryMask::from_rows(rows).unwrap();
            assert_eq!(distance_transform(&mask).squared(), brute_squared(&mask).as_slice(), "{rows:?}");
        }
    }

    #[test]
    fn signed_center_pixel() {
        let mask = BinaryMask::from_rows(&["000", "010", "000"]).unwrap();
        let sd = signed_distance(&mask);
        assert_eq!(sd.get(1, 1), 1.0);
        assert_eq!(sd.get(0, 1), -1.0);
        assert_eq!(sd.get(0, 0), -(2f64.sqrt()));
    }

    #[test]
    fn worked_one_by_four_example() {
        let a = BinaryMask::from_rows(&["1100"]).unwrap();
        let c = BinaryMask::from_rows(&["0110"]).unwrap();
        assert_eq!(signed_distance(&a).values(), vec![2.0, 1.0, -1.0, -2.0]);
        assert_eq!(signed_distance(&c).values(), vec![-1.0, 1.0, 1.0, -1.0]);
        let fused = average_merge(&[a.clone(), a.clone(), c], FusionMode::SdfMean).unwrap();
        assert_eq!(fused, a);
    }

    #[test]
    fn merge_errors() {
        assert!(matches!(average_merge(&[], FusionMode::SdfMean), Err(MaskError::EmptyEnsemble)));
        let a = BinaryMask::filled(2, 2, true);
        let b = BinaryMask::filled(3, 2, true);
        assert!(matches!(average_merge(&[a, b], FusionMode::PixelMean), Err(MaskError::Dimensions { index: 1, .. })));
    }

    #[test]
    fn pixel_mean_majority() {
        let a = BinaryMask::from_rows(&["1100"]).unwrap();
        let b = BinaryMask::from_rows(&["1010"]).unwrap();
        let c = BinaryMask::from_rows(&["0001"]).unwrap();
        let fused = average_merge(&[a.clone(), b.clone(), c], FusionMode::PixelMean).unwrap();
        assert_eq!(fused, BinaryMask::from_rows(&["1000"]).unwrap());
        // two-way tie counts as foreground
        let fused = average_merge(&[a, b], FusionMode::PixelMean).unwrap();
        assert_eq!(fused, BinaryMask::from_rows(&["1110"]).unwrap());
    }

    #[test]
    fn exact_tie_is_foreground() {
        // sqrt(8) and -2*sqrt(2) cancel exactly
        let mut terms = vec![Radicals::new(16).decompose(8), Radicals::new(16).decompose(-2)];
        terms.push(Radicals::new(16).decompose(-2));
        assert!(sum_of_roots_is_non_negative(&mut terms));
        let mut terms = vec![(2, 1), (3, -1)];
        assert!(!sum_of_roots_is_non_negative(&mut terms));
    }

    #[test]
    fn radical_decomposition() {
        let r = Radicals::new(1000);
        assert_eq!(r.decompose(72), (2, 6));
        assert_eq!(r.decompose(-49), (1, -7));
        assert_eq!(r.decompose(30), (30, 1));
        assert_eq!(r.decompose(1), (1, 1));
    }

    #[test]
    fn mask_png_round_trip_and_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        image::save_buffer_with_format(
            &path,
            &[0, 127, 128, 255],
            4,
            1,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
        .unwrap();
        let mask = BinaryMask::load_png(&path).unwrap();
        assert_eq!(mask.bits(), &[false, false, true, true]);
        mask.save_png(&path).unwrap();
        assert_eq!(BinaryMask::load_png(&path).unwrap(), mask);
    }
}
