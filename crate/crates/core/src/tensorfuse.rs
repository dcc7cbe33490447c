//! Early fusion of an RGB image and a GRF into a four-channel tensor, and the
//! two interchange formats for it (RGBA PNG and the raw `.grf4` float file).

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::grfgen::GreyImage;

/// Magic bytes at the start of a `.grf4` file.
pub const RAW_MAGIC: &[u8; 4] = b"GRF4";
pub const RAW_VERSION: u16 = 1;
pub const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FuseError {
    #[error("shape mismatch: rgb image is {rgb_width}x{rgb_height}, grf image is {grf_width}x{grf_height}")]
    Shape { rgb_width: usize, rgb_height: usize, grf_width: usize, grf_height: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// 8-bit interleaved RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        (width > 0 && height > 0 && pixels.len() == 3 * width * height)
            .then_some(RgbImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Option<Self> {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
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

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Loads a PNG or JPEG, converting to 8-bit RGB.
    pub fn load(path: &Path) -> Result<Self, FuseError> {
        Ok(RgbImage::from(image::open(path)?.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), FuseError> {
        image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }
}

impl From<image::RgbImage> for RgbImage {
    fn from(buf: image::RgbImage) -> Self {
        let (w, h) = buf.dimensions();
        RgbImage { width: w as usize, height: h as usize, pixels: buf.into_raw() }
    }
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_greyscale(rgb: &RgbImage) -> GreyImage {
    let pixels = rgb
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let l = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            l.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GreyImage::new(rgb.width, rgb.height, pixels).expect("dimensions carried over")
}

/// Four planes (R, G, B, GRF) of values in `[0, 1]`, stored plane by plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FourChannelTensor {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FourChannelTensor {
    pub const CHANNELS: usize = 4;

    /// `data` is channel-major. Returns `None` on a length mismatch or any
    /// value outside `[0, 1]`.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Option<Self> {
        let ok = width > 0
            && height > 0
            && data.len() == Self::CHANNELS * width * height
            && data.iter().all(|v| (0.0..=1.0).contains(v));
        ok.then_some(FourChannelTensor { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Plane values as 8-bit intensities.
    pub fn quantized_plane(&self, channel: usize) -> Vec<u8> {
        self.plane(channel).iter().map(|&v| quantize(v)).collect()
    }
}

#[inline]
fn quantize(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

#[inline]
fn dequantize(v: u8) -> f32 {
    f32::from(v) / 255.0
}

/// Scales RGB and GRF by 1/255 and appends the GRF as the last plane.
pub fn merge_rgb_grf(rgb: &RgbImage, grf: &GreyImage) -> Result<FourChannelTensor, FuseError> {
    if rgb.width != grf.width() || rgb.height != grf.height() {
        return Err(FuseError::Shape {
            rgb_width: rgb.width,
            rgb_height: rgb.height,
            grf_width: grf.width(),
            grf_height: grf.height(),
        });
    }
    let n = rgb.width * rgb.height;
    let mut data = Vec::with_capacity(4 * n);
    for c in 0..3 {
        data.extend(rgb.pixels.iter().skip(c).step_by(3).map(|&v| dequantize(v)));
    }
    data.extend(grf.pixels().iter().map(|&v| dequantize(v)));
    Ok(FourChannelTensor { width: rgb.width, height: rgb.height, data })
}

/// Writes an 8-bit RGBA PNG with the GRF plane in alpha.
pub fn write_fused_png(tensor: &FourChannelTensor, path: &Path) -> Result<(), FuseError> {
    let n = tensor.width * tensor.height;
    let mut rgba = Vec::with_capacity(4 * n);
    for p in 0..n {
        for c in 0..4 {
            rgba.push(quantize(tensor.data[c * n + p]));
        }
    }
    image::save_buffer_with_format(
        path,
        &rgba,
        tensor.width as u32,
        tensor.height as u32,
        image::ExtendedColorType::Rgba8,
        image::ImageFormat::Png,
    )?;
    Ok(())
}

pub fn read_fused_png(path: &Path) -> Result<FourChannelTensor, FuseError> {
    let img = image::open(path)?;
    let channels = img.color().channel_count();
    if channels != 4 {
        return Err(FuseError::Format(format!("expected 4 channels, found {channels}")));
    }
    let image::DynamicImage::ImageRgba8(buf) = img else {
        return Err(FuseError::Format(format!("expected 8-bit RGBA, found {:?}", img.color())));
    };
    let (w, h) = buf.dimensions();
    let (width, height) = (w as usize, h as usize);
    let raw = buf.into_raw();
    let n = width * height;
    let mut data = vec![0.0f32; 4 * n];
    for (p, px) in raw.chunks_exact(4).enumerate() {
        for c in 0..4 {
            data[c * n + p] = dequantize(px[c]);
        }
    }
    Ok(FourChannelTensor { width, height, data })
}

/// Serialises the `.grf4` layout: 16-byte little-endian header
/// (`GRF4`, u16 version, u16 reserved, u32 width, u32 height) followed by
/// `4 * width * height` f32 values, channel-major, rows top to bottom.
pub fn encode_raw_tensor(tensor: &FourChannelTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 4 * tensor.data.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(tensor.width as u32).to_le_bytes());
    out.extend_from_slice(&(tensor.height as u32).to_le_bytes());
    for v in &tensor.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raw_tensor(bytes: &[u8]) -> Result<FourChannelTensor, FuseError> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(FuseError::Format(format!("file too short for header: {} bytes", bytes.len())));
    }
    if &bytes[0..4] != RAW_MAGIC {
        return Err(FuseError::Format("bad magic, expected GRF4".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != RAW_VERSION {
        return Err(FuseError::Format(format!("unsupported version {version}")));
    }
    let (width, height) = (u32_at(8) as usize, u32_at(12) as usize);
    let expected = RAW_HEADER_LEN + 16 * width * height;
    if bytes.len() != expected {
        return Err(FuseError::Format(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let data = bytes[RAW_HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    FourChannelTensor::new(width, height, data)
        .ok_or_else(|| FuseError::Format("tensor values outside [0, 1] or zero-sized".into()))
}

pub fn export_raw_tensor(tensor: &FourChannelTensor, path: &Path) -> Result<(), FuseError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_raw_tensor(tensor))?;
    Ok(())
}

pub fn read_raw_tensor(path: &Path) -> Result<FourChannelTensor, FuseError> {
    decode_raw_tensor(&fs::read(path)?)
}
