//! Row-major gray and RGB rasters with the PNG conventions used on disk:
//! 16-bit gray for height maps, 8-bit gray for AO and curvature, 8-bit RGB
//! for normal maps.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use thiserror::Error;

use crate::geom::Rect;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("raster data length {len} does not match {width}x{height}")]
    Shape { width: usize, height: usize, len: usize },
}

/// Bit depth of a stored gray PNG.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Eight,
    Sixteen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayRaster<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> GrayRaster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::Shape { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Clamped-coordinate read.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.get(cx, cy)
    }

    /// All values finite and within `[0, 1]`.
    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| v.is_finite() && *v >= T::zero() && *v <= T::one())
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Self {
        Self::from_fn(w, h, |i, j| self.get(x + i, y + j))
    }

    /// Bilinear sample at continuous pixel coordinates where pixel `(i, j)`
    /// has its center at `(i + 0.5, j + 0.5)`. Edges are clamped.
    pub fn sample_bilinear(&self, fx: T, fy: T) -> T {
        let half = T::lit(0.5);
        let sx = fx - half;
        let sy = fy - half;
        let x0 = sx.floor();
        let y0 = sy.floor();
        let tx = sx - x0;
        let ty = sy - y0;
        let (xi, yi) = (x0.to_isize().unwrap_or(0), y0.to_isize().unwrap_or(0));
        let a = self.get_clamped(xi, yi);
        let b = self.get_clamped(xi + 1, yi);
        let c = self.get_clamped(xi, yi + 1);
        let d = self.get_clamped(xi + 1, yi + 1);
        let top = a + (b - a) * tx;
        let bot = c + (d - c) * tx;
        top + (bot - top) * ty
    }

    /// Resamples the pixel-space rectangle `rect` (y down) to `out_w × out_h`.
    pub fn resample_rect(&self, rect: &Rect<T>, out_w: usize, out_h: usize) -> Self {
        let sx = rect.w / T::nat(out_w);
        let sy = rect.h / T::nat(out_h);
        let half = T::lit(0.5);
        Self::from_fn(out_w, out_h, |i, j| {
            let fx = rect.x + (T::nat(i) + half) * sx;
            let fy = rect.y + (T::nat(j) + half) * sy;
            self.sample_bilinear(fx, fy)
        })
    }

    pub fn resize_bilinear(&self, w: usize, h: usize) -> Self {
        let full = Rect::new(T::zero(), T::zero(), T::nat(self.width), T::nat(self.height));
        self.resample_rect(&full, w, h)
    }

    /// Pixel replication by an integer factor.
    pub fn upsample_nearest(&self, k: usize) -> Self {
        Self::from_fn(self.width * k, self.height * k, |x, y| self.get(x / k, y / k))
    }

    /// Quarter turn clockwise.
    pub fn rotate90_cw(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, self.height - 1 - x))
    }

    /// Quarter turn counter-clockwise.
    pub fn rotate90_ccw(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(self.width - 1 - y, x))
    }

    pub fn cast<U: Real>(&self) -> GrayRaster<U> {
        GrayRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Linearly rescales `[min, max]` to `[0, 1]` (viewing only).
    pub fn normalized_min_max(&self) -> Self {
        let lo = self.data.iter().copied().fold(T::infinity(), T::min);
        let hi = self.data.iter().copied().fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        let data = self
            .data
            .iter()
            .map(|&v| if span > T::zero() { (v - lo) / span } else { T::zero() })
            .collect();
        Self { width: self.width, height: self.height, data }
    }

    /// Rounds every value to the grid a PNG of `depth` can hold.
    pub fn quantized(&self, depth: Depth) -> Self {
        let scale = depth.max_value();
        let data = self
            .data
            .iter()
            .map(|&v| T::lit(quantize(v, scale) as f64 / scale))
            .collect();
        Self { width: self.width, height: self.height, data }
    }

    pub fn to_png(&self, depth: Depth) -> Result<Vec<u8>, RasterError> {
        let (w, h) = (self.width as u32, self.height as u32);
        let img = match depth {
            Depth::Sixteen => {
                let px: Vec<u16> = self.data.iter().map(|&v| quantize(v, 65535.0) as u16).collect();
                DynamicImage::ImageLuma16(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, px).expect("size"))
            }
            Depth::Eight => {
                let px: Vec<u8> = self.data.iter().map(|&v| quantize(v, 255.0) as u8).collect();
                DynamicImage::ImageLuma8(ImageBuffer::<Luma<u8>, _>::from_raw(w, h, px).expect("size"))
            }
        };
        encode_png(&img)
    }

    pub fn save_png(&self, path: &Path, depth: Depth) -> Result<(), RasterError> {
        write_file(path, &self.to_png(depth)?)
    }

    /// Decodes any PNG as gray in `[0, 1]`; 16-bit sources keep full precision.
    pub fn from_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = match &img {
            DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&q| T::lit(q as f64 / 255.0)).collect(),
            DynamicImage::ImageLuma16(buf) => {
                buf.as_raw().iter().map(|&q| T::lit(q as f64 / 65535.0)).collect()
            }
            other => other.to_luma16().as_raw().iter().map(|&q| T::lit(q as f64 / 65535.0)).collect(),
        };
        Ok(Self { width: w, height: h, data })
    }

    pub fn load_png(path: &Path) -> Result<Self, RasterError> {
        Self::from_png(&read_file(path)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbRaster<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[T; 3]>,
}

impl<T: Real> RgbRaster<T> {
    pub fn filled(width: usize, height: usize, value: [T; 3]) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [T; 3]) {
        self.data[y * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> GrayRaster<T> {
        GrayRaster { width: self.width, height: self.height, data: self.data.iter().map(|p| p[c]).collect() }
    }

    /// Gray promoted to RGB.
    pub fn from_gray(g: &GrayRaster<T>) -> Self {
        Self { width: g.width, height: g.height, data: g.data.iter().map(|&v| [v, v, v]).collect() }
    }

    pub fn is_unit_range(&self) -> bool {
        self.data
            .iter()
            .flatten()
            .all(|v| v.is_finite() && *v >= T::zero() && *v <= T::one())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let px: Vec<u8> = self.data.iter().flatten().map(|&v| quantize(v, 255.0) as u8).collect();
        let img = DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(self.width as u32, self.height as u32, px).expect("size"),
        );
        encode_png(&img)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        write_file(path, &self.to_png()?)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img
            .pixels()
            .map(|p| [0, 1, 2].map(|c| T::lit(p.0[c] as f64 / 255.0)))
            .collect();
        Ok(Self { width: w, height: h, data })
    }

    pub fn load_png(path: &Path) -> Result<Self, RasterError> {
        Self::from_png(&read_file(path)?)
    }
}

impl Depth {
    pub fn max_value(self) -> f64 {
        match self {
            Depth::Eight => 255.0,
            Depth::Sixteen => 65535.0,
        }
    }
}

/// Clamps to `[0, 1]` and rounds onto `0..=scale`.
#[inline]
pub fn quantize<T: Real>(v: T, scale: f64) -> u32 {
    let v = v.as_f64();
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * scale).round() as u32
}

fn encode_png(img: &DynamicImage) -> Result<Vec<u8>, RasterError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RasterError> {
    std::fs::write(path, bytes).map_err(|source| RasterError::Io { path: path.display().to_string(), source })
}

fn read_file(path: &Path) -> Result<Vec<u8>, RasterError> {
    std::fs::read(path).map_err(|source| RasterError::Io { path: path.display().to_string(), source })
}
