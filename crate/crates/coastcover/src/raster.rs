//! Georeferenced raster types and color<->label conversion.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scheme::ClassScheme;

/// Axis-aligned affine transform from pixel space to map space.
///
/// Pixel sizes are stored positive; rows advance southward, so map y
/// decreases with increasing row. Rotation terms are fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size_x: f64,
    pub pixel_size_y: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size_x: f64, pixel_size_y: f64) -> Result<Self> {
        if !(pixel_size_x > 0.0 && pixel_size_y > 0.0) {
            return Err(Error::DegenerateGeo);
        }
        Ok(GeoTransform { origin_x, origin_y, pixel_size_x, pixel_size_y })
    }

    /// Unit transform: origin (0, 0), 1 m/pixel.
    pub fn unit() -> Self {
        GeoTransform { origin_x: 0.0, origin_y: 0.0, pixel_size_x: 1.0, pixel_size_y: 1.0 }
    }

    /// Map coordinate of the pixel center at (col, row).
    pub fn pixel_center_to_map(&self, col: u32, row: u32) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.pixel_size_x,
            self.origin_y - (row as f64 + 0.5) * self.pixel_size_y,
        )
    }

    /// Fractional pixel coordinate of a map point; exact inverse of
    /// `pixel_center_to_map` at pixel centers.
    pub fn map_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.pixel_size_x - 0.5,
            (self.origin_y - y) / self.pixel_size_y - 0.5,
        )
    }

    /// Area of one pixel in square meters.
    pub fn pixel_area_m2(&self) -> f64 {
        self.pixel_size_x * self.pixel_size_y
    }

    /// Transform for a sub-window whose top-left pixel is (col0, row0).
    pub fn offset(&self, col0: u32, row0: u32) -> GeoTransform {
        GeoTransform {
            origin_x: self.origin_x + col0 as f64 * self.pixel_size_x,
            origin_y: self.origin_y - row0 as f64 * self.pixel_size_y,
            ..*self
        }
    }
}

/// Multi-band 8-bit imagery with affine georeferencing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: u32,
    height: u32,
    bands: u8,
    samples: Vec<u8>,
    pub geo: GeoTransform,
}

impl ImageRaster {
    pub fn new(width: u32, height: u32, bands: u8, samples: Vec<u8>, geo: GeoTransform) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroSizedRaster);
        }
        let expected = width as usize * height as usize * bands as usize;
        if samples.len() != expected {
            return Err(Error::Parse(format!(
                "sample buffer length {} does not match {}x{}x{}",
                samples.len(),
                width,
                height,
                bands
            )));
        }
        Ok(ImageRaster { width, height, bands, samples, geo })
    }

    /// Constant-color raster, mostly for tests and fixtures.
    pub fn filled(width: u32, height: u32, bands: u8, value: &[u8], geo: GeoTransform) -> Result<Self> {
        assert_eq!(value.len(), bands as usize);
        let mut samples = Vec::with_capacity(width as usize * height as usize * bands as usize);
        for _ in 0..width as usize * height as usize {
            samples.extend_from_slice(value);
        }
        ImageRaster::new(width, height, bands, samples, geo)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bands(&self) -> u8 {
        self.bands
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn has_alpha(&self) -> bool {
        self.bands == 4 || self.bands == 2
    }

    #[inline]
    pub fn sample(&self, col: u32, row: u32, band: u8) -> u8 {
        let idx = (row as usize * self.width as usize + col as usize) * self.bands as usize
            + band as usize;
        self.samples[idx]
    }

    /// First three bands at (col, row); grayscale images replicate band 0.
    #[inline]
    pub fn rgb(&self, col: u32, row: u32) -> [u8; 3] {
        if self.bands >= 3 {
            [
                self.sample(col, row, 0),
                self.sample(col, row, 1),
                self.sample(col, row, 2),
            ]
        } else {
            let v = self.sample(col, row, 0);
            [v, v, v]
        }
    }

    /// Alpha at (col, row); fully opaque when no alpha band is present.
    #[inline]
    pub fn alpha(&self, col: u32, row: u32) -> u8 {
        match self.bands {
            4 => self.sample(col, row, 3),
            2 => self.sample(col, row, 1),
            _ => 255,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Per-pixel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskRaster {
    width: u32,
    height: u32,
    valid: Vec<bool>,
}

impl MaskRaster {
    pub fn new(width: u32, height: u32, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != width as usize * height as usize {
            return Err(Error::Parse("mask buffer length does not match dimensions".into()));
        }
        Ok(MaskRaster { width, height, valid })
    }

    pub fn all_valid(width: u32, height: u32) -> Self {
        MaskRaster { width, height, valid: vec![true; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn is_valid(&self, col: u32, row: u32) -> bool {
        self.valid[row as usize * self.width as usize + col as usize]
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Per-pixel class-id map sharing a grid with the imagery it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRaster {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    pub geo: GeoTransform,
    scheme: Arc<ClassScheme>,
}

impl LabelRaster {
    pub fn new(
        width: u32,
        height: u32,
        labels: Vec<u8>,
        geo: GeoTransform,
        scheme: Arc<ClassScheme>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroSizedRaster);
        }
        if labels.len() != width as usize * height as usize {
            return Err(Error::Parse("label buffer length does not match dimensions".into()));
        }
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l != scheme.masked_id() && !scheme.contains(l))
        {
            return Err(Error::LabelOutOfScheme(bad));
        }
        Ok(LabelRaster { width, height, labels, geo, scheme })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn scheme(&self) -> &Arc<ClassScheme> {
        &self.scheme
    }

    #[inline]
    pub fn label(&self, col: u32, row: u32) -> u8 {
        self.labels[row as usize * self.width as usize + col as usize]
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Assign every valid pixel the class whose scheme color is nearest in RGB
/// (squared Euclidean distance, ties to the lowest class id). Pixels invalid
/// under the mask, or with alpha 0, become `masked_id`.
pub fn decode_labels(
    image: &ImageRaster,
    scheme: &Arc<ClassScheme>,
    mask: Option<&MaskRaster>,
) -> Result<LabelRaster> {
    if scheme.classes().is_empty() {
        return Err(Error::EmptyScheme);
    }
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::ZeroSizedRaster);
    }
    if image.bands() < 3 {
        return Err(Error::TooFewBands(image.bands()));
    }
    if let Some(m) = mask {
        if m.width() != image.width() || m.height() != image.height() {
            return Err(Error::DimensionMismatch(
                image.width(),
                image.height(),
                m.width(),
                m.height(),
            ));
        }
    }

    let masked = scheme.masked_id();
    let mut labels = Vec::with_capacity(image.pixel_count());
    for row in 0..image.height() {
        for col in 0..image.width() {
            let invalid = image.alpha(col, row) == 0
                || mask.map(|m| !m.is_valid(col, row)).unwrap_or(false);
            if invalid {
                labels.push(masked);
                continue;
            }
            labels.push(scheme.nearest_class(image.rgb(col, row)));
        }
    }
    LabelRaster::new(image.width(), image.height(), labels, image.geo, Arc::clone(scheme))
}

/// Paint each pixel its class color; masked pixels get the scheme's mask
/// color (default transparent black). Output is RGBA on the same grid.
pub fn encode_labels(labels: &LabelRaster) -> Result<ImageRaster> {
    let scheme = labels.scheme();
    let mask_color = scheme.mask_color();
    let mut samples = Vec::with_capacity(labels.pixel_count() * 4);
    for &l in labels.labels() {
        if l == scheme.masked_id() {
            samples.extend_from_slice(&mask_color);
        } else {
            let c = scheme.color_of(l).ok_or(Error::LabelOutOfScheme(l))?;
            samples.extend_from_slice(&[c[0], c[1], c[2], 255]);
        }
    }
    ImageRaster::new(labels.width(), labels.height(), 4, samples, labels.geo)
}
