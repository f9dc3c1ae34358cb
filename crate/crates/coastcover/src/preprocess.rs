//! Grid and radiometric preparation: resampling, per-band histogram
//! matching, and validity masks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::raster::{GeoTransform, ImageRaster, LabelRaster, MaskRaster};

fn output_dims(width: u32, height: u32, geo: &GeoTransform, target: f64) -> (u32, u32) {
    let out_w = (width as f64 * geo.pixel_size_x / target).ceil() as u32;
    let out_h = (height as f64 * geo.pixel_size_y / target).ceil() as u32;
    (out_w.max(1), out_h.max(1))
}

/// Bilinear resampling of imagery to a square target resolution.
/// Same origin; output dims = ceil(extent / target).
pub fn resample_image(img: &ImageRaster, target: f64) -> Result<ImageRaster> {
    if !(target > 0.0) {
        return Err(Error::NonPositiveResolution(target));
    }
    if img.geo.pixel_size_x == target && img.geo.pixel_size_y == target {
        return Ok(img.clone());
    }
    let (out_w, out_h) = output_dims(img.width(), img.height(), &img.geo, target);
    let bands = img.bands() as usize;
    let mut samples = vec![0u8; out_w as usize * out_h as usize * bands];
    for row in 0..out_h {
        // fractional source position of the output pixel center
        let sy = ((row as f64 + 0.5) * target / img.geo.pixel_size_y - 0.5)
            .clamp(0.0, (img.height() - 1) as f64);
        let r0 = sy.floor() as u32;
        let r1 = (r0 + 1).min(img.height() - 1);
        let fy = sy - r0 as f64;
        for col in 0..out_w {
            let sx = ((col as f64 + 0.5) * target / img.geo.pixel_size_x - 0.5)
                .clamp(0.0, (img.width() - 1) as f64);
            let c0 = sx.floor() as u32;
            let c1 = (c0 + 1).min(img.width() - 1);
            let fx = sx - c0 as f64;
            let out_idx = (row as usize * out_w as usize + col as usize) * bands;
            for b in 0..bands {
                let v00 = img.sample(c0, r0, b as u8) as f64;
                let v10 = img.sample(c1, r0, b as u8) as f64;
                let v01 = img.sample(c0, r1, b as u8) as f64;
                let v11 = img.sample(c1, r1, b as u8) as f64;
                let top = v00 + (v10 - v00) * fx;
                let bot = v01 + (v11 - v01) * fx;
                samples[out_idx + b] = (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let geo = GeoTransform::new(img.geo.origin_x, img.geo.origin_y, target, target)?;
    ImageRaster::new(out_w, out_h, img.bands(), samples, geo)
}

/// Nearest-neighbor resampling of a label map; output labels are a
/// subset of the input labels.
pub fn resample_labels(labels: &LabelRaster, target: f64) -> Result<LabelRaster> {
    if !(target > 0.0) {
        return Err(Error::NonPositiveResolution(target));
    }
    if labels.geo.pixel_size_x == target && labels.geo.pixel_size_y == target {
        return Ok(labels.clone());
    }
    let (out_w, out_h) = output_dims(labels.width(), labels.height(), &labels.geo, target);
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize);
    for row in 0..out_h {
        let sr = (((row as f64 + 0.5) * target / labels.geo.pixel_size_y) as u32)
            .min(labels.height() - 1);
        for col in 0..out_w {
            let sc = (((col as f64 + 0.5) * target / labels.geo.pixel_size_x) as u32)
                .min(labels.width() - 1);
            out.push(labels.label(sc, sr));
        }
    }
    let geo = GeoTransform::new(labels.geo.origin_x, labels.geo.origin_y, target, target)?;
    LabelRaster::new(out_w, out_h, out, geo, Arc::clone(labels.scheme()))
}

/// 256-bin histogram of one band over valid pixels.
fn band_histogram(img: &ImageRaster, band: u8, mask: Option<&MaskRaster>) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for row in 0..img.height() {
        for col in 0..img.width() {
            let valid = img.alpha(col, row) != 0
                && mask.map(|m| m.is_valid(col, row)).unwrap_or(true);
            if valid {
                hist[img.sample(col, row, band) as usize] += 1;
            }
        }
    }
    hist
}

/// Monotone lookup mapping source levels onto reference levels so the
/// remapped source CDF tracks the reference CDF.
pub fn histogram_match_lookup(src_hist: &[u64; 256], ref_hist: &[u64; 256]) -> Result<[u8; 256]> {
    let src_total: u64 = src_hist.iter().sum();
    let ref_total: u64 = ref_hist.iter().sum();
    if src_total == 0 {
        return Err(Error::EmptyHistogram("source"));
    }
    if ref_total == 0 {
        return Err(Error::EmptyHistogram("reference"));
    }
    let mut src_cdf = [0f64; 256];
    let mut ref_cdf = [0f64; 256];
    let (mut sa, mut ra) = (0u64, 0u64);
    for i in 0..256 {
        sa += src_hist[i];
        ra += ref_hist[i];
        src_cdf[i] = sa as f64 / src_total as f64;
        ref_cdf[i] = ra as f64 / ref_total as f64;
    }
    let mut lut = [0u8; 256];
    let mut g = 0usize;
    for (v, entry) in lut.iter_mut().enumerate() {
        while g < 255 && ref_cdf[g] < src_cdf[v] {
            g += 1;
        }
        *entry = g as u8;
    }
    Ok(lut)
}

/// Per-band histogram matching of `source` onto `reference`'s empirical
/// CDFs. Alpha bands are copied unchanged; masked pixels are excluded
/// from the histograms but still remapped.
pub fn match_color_levels(
    source: &ImageRaster,
    reference: &ImageRaster,
    source_mask: Option<&MaskRaster>,
    reference_mask: Option<&MaskRaster>,
) -> Result<ImageRaster> {
    if source.bands() != reference.bands() {
        return Err(Error::BandMismatch(source.bands(), reference.bands()));
    }
    let color_bands = match source.bands() {
        1 | 2 => 1u8,
        _ => 3u8,
    };
    let mut luts = Vec::with_capacity(color_bands as usize);
    for b in 0..color_bands {
        let sh = band_histogram(source, b, source_mask);
        let rh = band_histogram(reference, b, reference_mask);
        luts.push(histogram_match_lookup(&sh, &rh)?);
    }
    let bands = source.bands() as usize;
    let mut samples = Vec::with_capacity(source.samples().len());
    for (i, &v) in source.samples().iter().enumerate() {
        let b = i % bands;
        if b < color_bands as usize {
            samples.push(luts[b][v as usize]);
        } else {
            samples.push(v); // alpha untouched
        }
    }
    ImageRaster::new(source.width(), source.height(), source.bands(), samples, source.geo)
}

/// Pixel invalid iff alpha = 0 (when present) or the sample equals
/// `nodata_color` (when given); valid otherwise.
pub fn build_mask(image: &ImageRaster, nodata_color: Option<[u8; 3]>) -> MaskRaster {
    let mut valid = Vec::with_capacity(image.pixel_count());
    for row in 0..image.height() {
        for col in 0..image.width() {
            let mut ok = image.alpha(col, row) != 0;
            if ok {
                if let Some(nd) = nodata_color {
                    ok = image.rgb(col, row) != nd;
                }
            }
            valid.push(ok);
        }
    }
    MaskRaster::new(image.width(), image.height(), valid).expect("dims match by construction")
}
