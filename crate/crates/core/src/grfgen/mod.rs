//! Gaussian random field synthesis.
//!
//! Seeded complex white noise is shaped in the frequency domain by a radial
//! power law, inverse transformed, standardised and quantised to 8-bit
//! greyscale. The exponent of the power law is `-(i + f)`, where `i` picks the
//! smoothness regime and `f` carries one normalised metadata value.

mod fft;
pub mod spectrum;

use std::collections::BTreeMap;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metadata::{encode_gender, Category, MetadataError, MetadataRecord, NormalizationStats};
use crate::rng::NormalSampler;

pub(crate) use fft::fft2d;
pub use spectrum::{fit_loglog_slope, radial_power_spectrum, tv_per_pixel, RadialSpectrum, SpectrumBin};

/// Guards the `k = 0` singularity of the amplitude law.
pub const DC_EPSILON: f64 = 1e-10;

/// Stored GRF image size.
pub const DEFAULT_WIDTH: usize = 640;
pub const DEFAULT_HEIGHT: usize = 480;

#[derive(Debug, Error)]
pub enum GrfError {
    #[error("invalid GRF parameters: {0}")]
    InvalidParams(String),
    #[error("no normalisation statistics supplied for continuous category `{0}`")]
    MissingStats(Category),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Fixed per-category seed.
pub fn category_seed(category: Category) -> u64 {
    match category {
        Category::Dob => 76_539_635,
        Category::Gender => 88_118_546,
        Category::Hdd => 41_094_303,
    }
}

/// Power-law exponent `-|i + f|`.
pub fn power_exponent(i: u32, f: f64) -> f64 {
    -(f64::from(i) + f).abs()
}

/// Everything needed to reproduce one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfParams {
    pub seed: u64,
    pub i: u32,
    pub f: f64,
    pub width: usize,
    pub height: usize,
}

impl GrfParams {
    pub fn new(seed: u64, i: u32, f: f64, width: usize, height: usize) -> Result<Self, GrfError> {
        let params = GrfParams { seed, i, f, width, height };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GrfError> {
        if self.i < 1 {
            return Err(GrfError::InvalidParams(format!("i must be >= 1, got {}", self.i)));
        }
        if !(0.0..=1.0).contains(&self.f) {
            return Err(GrfError::InvalidParams(format!("f must lie in [0, 1], got {}", self.f)));
        }
        if self.width < 2 || self.height < 2 {
            return Err(GrfError::InvalidParams(format!(
                "dimensions must be at least 2x2, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        power_exponent(self.i, self.f)
    }
}

/// Dense row-major grid of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Field2D {
    /// Returns `None` if the length does not match or any value is non-finite.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == width * height && values.iter().all(|v| v.is_finite()))
            .then_some(Field2D { width, height, values })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Option<Self> {
        let values = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// 8-bit single-channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GreyImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        (width > 0 && height > 0 && pixels.len() == width * height).then_some(GreyImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn save_png(&self, path: &Path) -> Result<(), image::ImageError> {
        image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
            image::ImageFormat::Png,
        )
    }

    /// Loads any image, converting colour inputs with BT.601 luma.
    pub fn load(path: &Path) -> Result<Self, image::ImageError> {
        let img = image::open(path)?;
        Ok(match img {
            image::DynamicImage::ImageLuma8(buf) => {
                let (w, h) = buf.dimensions();
                GreyImage { width: w as usize, height: h as usize, pixels: buf.into_raw() }
            }
            other => crate::tensorfuse::to_greyscale(&crate::tensorfuse::RgbImage::from(other.to_rgb8())),
        })
    }
}

/// Signed DFT frequency indices for an axis of length `n`:
/// `0, 1, .., ceil(n/2) - 1, -floor(n/2), .., -1`.
pub fn fft_frequencies(n: usize) -> Vec<i64> {
    let positive = n.div_ceil(2);
    (0..n).map(|j| if j < positive { j as i64 } else { j as i64 - n as i64 }).collect()
}

/// Frequency indices broadcast over the full grid.
pub fn frequency_grid(width: usize, height: usize) -> (Field2D, Field2D) {
    let fx = fft_frequencies(width);
    let fy = fft_frequencies(height);
    let kx = Field2D::from_fn(width, height, |x, _| fx[x] as f64).expect("finite");
    let ky = Field2D::from_fn(width, height, |_, y| fy[y] as f64).expect("finite");
    (kx, ky)
}

/// Synthesises the field described by `params`.
pub fn synthesize_field(params: &GrfParams) -> Field2D {
    synthesize_with_exponent(params.seed, params.width, params.height, params.exponent())
}

/// Spectral synthesis with an arbitrary power exponent; `0.0` gives white noise.
pub fn synthesize_with_exponent(seed: u64, width: usize, height: usize, exponent: f64) -> Field2D {
    let mut sampler = NormalSampler::from_seed(seed);
    let mut grid: Vec<Complex64> = (0..width * height)
        .map(|_| {
            let re = sampler.sample();
            let im = sampler.sample();
            Complex64::new(re, im)
        })
        .collect();

    let fx = fft_frequencies(width);
    let fy = fft_frequencies(height);
    let power = exponent / 4.0;
    for (y, row) in grid.chunks_exact_mut(width).enumerate() {
        let ky2 = (fy[y] * fy[y]) as f64;
        for (x, c) in row.iter_mut().enumerate() {
            let k2 = (fx[x] * fx[x]) as f64 + ky2;
            *c *= (k2 + DC_EPSILON).powf(power);
        }
    }
    grid[0] = Complex64::default();

    fft2d(&mut grid, width, height, FftDirection::Inverse);
    let scale = 1.0 / (width * height) as f64;
    let values: Vec<f64> = grid.iter().map(|c| c.re * scale).collect();
    Field2D { width, height, values: standardize(values) }
}

/// Zero mean, unit (population) variance. A constant input becomes all zeros.
fn standardize(mut values: Vec<f64>) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in &mut values {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
    values
}

/// Per-field min-max scaling to `[0, 255]`, rounding half away from zero.
/// A constant field maps to 128.
pub fn field_to_greyscale(field: &Field2D) -> GreyImage {
    let (lo, hi) = field
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let pixels = if hi > lo {
        let scale = 255.0 / (hi - lo);
        field.values.iter().map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8).collect()
    } else {
        vec![128; field.values.len()]
    };
    GreyImage { width: field.width, height: field.height, pixels }
}

/// Run-wide generation settings shared by every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSettings {
    pub i: u32,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed_overrides: BTreeMap<Category, u64>,
}

impl Default for GrfSettings {
    fn default() -> Self {
        GrfSettings { i: 2, width: DEFAULT_WIDTH, height: DEFAULT_HEIGHT, seed_overrides: BTreeMap::new() }
    }
}

impl GrfSettings {
    pub fn base_seed(&self, category: Category) -> u64 {
        self.seed_overrides.get(&category).copied().unwrap_or_else(|| category_seed(category))
    }
}

/// Parameters for one record's GRF in `category`.
///
/// Continuous categories use the normalised value as `f` and the category
/// seed. Gender uses `f = 0` and offsets the seed by the encoded value so
/// that the two genders produce different fields.
pub fn grf_params_for_record(
    category: Category,
    record: &MetadataRecord,
    norm: Option<&NormalizationStats>,
    settings: &GrfSettings,
) -> Result<GrfParams, GrfError> {
    let base = settings.base_seed(category);
    let (seed, f) = match category {
        Category::Gender => (base.wrapping_add(encode_gender(record.gender).value() as u64), 0.0),
        Category::Dob | Category::Hdd => {
            let norm = norm.ok_or(GrfError::MissingStats(category))?;
            (base, norm.apply(record.scalar(category)?)?)
        }
    };
    GrfParams::new(seed, settings.i, f, settings.width, settings.height)
}

pub fn grf_for_record(
    category: Category,
    record: &MetadataRecord,
    norm: Option<&NormalizationStats>,
    settings: &GrfSettings,
) -> Result<GreyImage, GrfError> {
    let params = grf_params_for_record(category, record, norm, settings)?;
    Ok(field_to_greyscale(&synthesize_field(&params)))
}

/// Provenance written next to every GRF image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSidecar {
    pub seed: u64,
    pub i: u32,
    pub f: f64,
    pub width: usize,
    pub height: usize,
    pub toolkit_version: String,
}

impl From<&GrfParams> for GrfSidecar {
    fn from(p: &GrfParams) -> Self {
        GrfSidecar {
            seed: p.seed,
            i: p.i,
            f: p.f,
            width: p.width,
            height: p.height,
            toolkit_version: crate::VERSION.to_string(),
        }
    }
}

impl GrfSidecar {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sidecar serialises");
        s.push('\n');
        s
    }
}

/// `<image_id>.<category>.grf.png`
pub fn grf_png_name(image_id: &str, category: Category) -> String {
    format!("{image_id}.{category}.grf.png")
}

/// `<image_id>.<category>.grf.json`
pub fn grf_sidecar_name(image_id: &str, category: Category) -> String {
    format!("{image_id}.{category}.grf.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{minmax_fit, Gender};
    use chrono::NaiveDate;

    #[test]
    fn seeds() {
        assert_eq!(category_seed(Category::Dob), 76_539_635);
        assert_eq!(category_seed(Category::Gender), 88_118_546);
        assert_eq!(category_seed(Category::Hdd), 41_094_303);
    }

    #[test]
    fn exponents() {
        assert_eq!(power_exponent(2, 0.0), -2.0);
        assert_eq!(power_exponent(5, 0.5), -5.5);
        assert_eq!(power_exponent(2, 1.0), -3.0);
    }

    #[test]
    fn frequency_indices() {
        assert_eq!(fft_frequencies(4), vec![0, 1, -2, -1]);
        assert_eq!(fft_frequencies(5), vec![0, 1, 2, -2, -1]);
        let (kx, ky) = frequency_grid(2, 2);
        // Nyquist index is negative, as for n = 4
        assert_eq!(kx.values(), &[0.0, -1.0, 0.0, -1.0]);
        assert_eq!(ky.values(), &[0.0, 0.0, -1.0, -1.0]);
    }

    #[test]
    fn params_validation() {
        assert!(GrfParams::new(1, 0, 0.0, 4, 4).is_err());
        assert!(GrfParams::new(1, 2, 1.5, 4, 4).is_err());
        assert!(GrfParams::new(1, 2, -0.1, 4, 4).is_err());
        assert!(GrfParams::new(1, 2, 0.5, 1, 4).is_err());
        assert!(GrfParams::new(1, 7, 1.0, 2, 2).is_ok());
    }

    #[test]
    fn synthesis_is_deterministic_and_standardised() {
        let p = GrfParams::new(76_539_635, 2, 0.37, 64, 48).unwrap();
        let a = synthesize_field(&p);
        let b = synthesize_field(&p);
        assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let n = a.values().len() as f64;
        let mean = a.values().iter().sum::<f64>() / n;
        let var = a.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);

        let other = synthesize_field(&GrfParams { seed: 1, ..p });
        assert_ne!(a, other);
    }

    #[test]
    fn greyscale_examples() {
        let g = field_to_greyscale(&Field2D::new(2, 1, vec![0.0, 1.0]).unwrap());
        assert_eq!(g.pixels(), &[0, 255]);
        let g = field_to_greyscale(&Field2D::new(3, 1, vec![0.0, 0.5, 1.0]).unwrap());
        assert_eq!(g.pixels(), &[0, 128, 255]);
        let g = field_to_greyscale(&Field2D::new(2, 2, vec![3.3; 4]).unwrap());
        assert_eq!(g.pixels(), &[128; 4]);
    }

    #[test]
    fn field_rejects_non_finite() {
        assert!(Field2D::new(2, 1, vec![0.0, f64::NAN]).is_none());
        assert!(Field2D::new(2, 2, vec![0.0; 3]).is_none());
    }

    fn record(gender: Gender, dob: (i32, u32, u32), hdd: Option<u8>) -> MetadataRecord {
        MetadataRecord {
            image_id: "x".into(),
            patient_id: "p".into(),
            dob: NaiveDate::from_ymd_opt(dob.0, dob.1, dob.2).unwrap(),
            gender,
            postcode: None,
            hdd,
        }
    }

    fn small() -> GrfSettings {
        GrfSettings { i: 2, width: 32, height: 24, ..GrfSettings::default() }
    }

    #[test]
    fn gender_params_and_distinct_images() {
        let female = grf_params_for_record(Category::Gender, &record(Gender::Female, (1960, 1, 1), None), None, &small())
            .unwrap();
        let male =
            grf_params_for_record(Category::Gender, &record(Gender::Male, (1960, 1, 1), None), None, &small()).unwrap();
        assert_eq!((female.seed, female.f), (88_118_546, 0.0));
        assert_eq!((male.seed, male.f), (88_118_547, 0.0));
        let a = grf_for_record(Category::Gender, &record(Gender::Female, (1960, 1, 1), None), None, &small()).unwrap();
        let b = grf_for_record(Category::Gender, &record(Gender::Male, (1960, 1, 1), None), None, &small()).unwrap();
        assert_ne!(a.pixels(), b.pixels());
    }

    #[test]
    fn continuous_params_use_normalised_value() {
        let stats = minmax_fit(&[1.0, 10.0]).unwrap();
        let r = record(Gender::Female, (1960, 1, 1), Some(4));
        let p = grf_params_for_record(Category::Hdd, &r, Some(&stats), &small()).unwrap();
        assert_eq!(p.seed, 41_094_303);
        assert!((p.f - 3.0 / 9.0).abs() < 1e-15);

        assert!(matches!(
            grf_params_for_record(Category::Hdd, &r, None, &small()),
            Err(GrfError::MissingStats(Category::Hdd))
        ));
        let missing = record(Gender::Female, (1960, 1, 1), None);
        assert!(matches!(
            grf_params_for_record(Category::Hdd, &missing, Some(&stats), &small()),
            Err(GrfError::Metadata(MetadataError::MissingField { .. }))
        ));
    }

    #[test]
    fn equal_dob_gives_identical_images() {
        let a = record(Gender::Female, (1955, 6, 1), None);
        let b = MetadataRecord { image_id: "y".into(), gender: Gender::Male, ..a.clone() };
        let lo = crate::metadata::dob_to_scalar(NaiveDate::from_ymd_opt(1930, 1, 1).unwrap()).unwrap();
        let hi = crate::metadata::dob_to_scalar(NaiveDate::from_ymd_opt(1990, 1, 1).unwrap()).unwrap();
        let stats = minmax_fit(&[lo, hi]).unwrap();
        let ia = grf_for_record(Category::Dob, &a, Some(&stats), &small()).unwrap();
        let ib = grf_for_record(Category::Dob, &b, Some(&stats), &small()).unwrap();
        assert_eq!(ia, ib);
    }

    #[test]
    fn seed_override_applies() {
        let mut s = small();
        s.seed_overrides.insert(Category::Gender, 10);
        let p = grf_params_for_record(Category::Gender, &record(Gender::Male, (1960, 1, 1), None), None, &s).unwrap();
        assert_eq!(p.seed, 11);
    }

    #[test]
    fn sidecar_json_fields() {
        let p = GrfParams::new(76_539_635, 2, 0.25, 640, 480).unwrap();
        let json: serde_json::Value = serde_json::from_str(&GrfSidecar::from(&p).to_json()).unwrap();
        assert_eq!(json["seed"], 76_539_635);
        assert_eq!(json["i"], 2);
        assert_eq!(json["f"], 0.25);
        assert_eq!(json["width"], 640);
        assert_eq!(json["height"], 480);
        assert_eq!(json["toolkit_version"], crate::VERSION);
    }

    #[test]
    fn grey_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = GreyImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        img.save_png(&path).unwrap();
        assert_eq!(GreyImage::load(&path).unwrap(), img);
    }
}
