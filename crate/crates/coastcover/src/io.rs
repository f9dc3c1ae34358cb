//! File I/O: PNG/PPM imagery, ESRI world file sidecars, label maps,
//! masks, and scheme configs.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{DynamicImage, ImageBuffer};

use crate::error::{Error, Result};
use crate::raster::{decode_labels, GeoTransform, ImageRaster, LabelRaster, MaskRaster};
use crate::scheme::ClassScheme;

fn file_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::InvalidFile { path: path.display().to_string(), reason: reason.into() }
}

/// World-file sidecar path for a raster (`.pgw` for PNG, `.ppw` for PPM,
/// `.wld` otherwise).
pub fn world_file_path(raster_path: &Path) -> PathBuf {
    let ext = raster_path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let world_ext = match ext.as_str() {
        "png" => "pgw",
        "ppm" => "ppw",
        _ => "wld",
    };
    raster_path.with_extension(world_ext)
}

/// Write the 6-line world file: pixel_size_x, 0, 0, -pixel_size_y,
/// origin_x, origin_y.
pub fn write_world_file(raster_path: &Path, geo: &GeoTransform) -> Result<()> {
    let path = world_file_path(raster_path);
    let mut f = BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "{}", geo.pixel_size_x)?;
    writeln!(f, "0.0")?;
    writeln!(f, "0.0")?;
    writeln!(f, "{}", -geo.pixel_size_y)?;
    writeln!(f, "{}", geo.origin_x)?;
    writeln!(f, "{}", geo.origin_y)?;
    Ok(())
}

/// Read the world file next to a raster; unit transform when absent.
pub fn read_world_file(raster_path: &Path) -> Result<GeoTransform> {
    let path = world_file_path(raster_path);
    if !path.exists() {
        return Ok(GeoTransform::unit());
    }
    let text = fs::read_to_string(&path)?;
    let vals: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|_| file_err(&path, format!("bad world-file line {:?}", l))))
        .collect::<Result<Vec<f64>>>()?;
    if vals.len() != 6 {
        return Err(file_err(&path, format!("world file must have 6 lines, found {}", vals.len())));
    }
    if vals[1] != 0.0 || vals[2] != 0.0 {
        return Err(file_err(&path, "rotated grids are not supported"));
    }
    GeoTransform::new(vals[4], vals[5], vals[0], -vals[3])
        .map_err(|_| file_err(&path, "pixel sizes must be positive (line 4 negative)"))
}

/// Load 8-bit PNG or binary PPM imagery plus its world file.
pub fn load_image(path: &Path) -> Result<ImageRaster> {
    let geo = read_world_file(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "ppm" {
        return load_ppm(path, geo);
    }
    let dynimg = image::open(path).map_err(|e| file_err(path, e.to_string()))?;
    let (w, h) = (dynimg.width(), dynimg.height());
    let (bands, samples): (u8, Vec<u8>) = match dynimg {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw()),
        DynamicImage::ImageLumaA8(b) => (2, b.into_raw()),
        DynamicImage::ImageRgb8(b) => (3, b.into_raw()),
        DynamicImage::ImageRgba8(b) => (4, b.into_raw()),
        other => (4, other.to_rgba8().into_raw()),
    };
    ImageRaster::new(w, h, bands, samples, geo)
}

fn load_ppm(path: &Path, geo: GeoTransform) -> Result<ImageRaster> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    // Header: "P6" <w> <h> <maxval> separated by whitespace/comments.
    let mut pos = 0usize;
    let mut fields = Vec::new();
    while fields.len() < 4 && pos < buf.len() {
        while pos < buf.len() && (buf[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !(buf[pos] as char).is_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&buf[start..pos]).to_string());
    }
    if fields.len() != 4 || fields[0] != "P6" {
        return Err(file_err(path, "not a binary PPM (P6) file"));
    }
    let w: u32 = fields[1].parse().map_err(|_| file_err(path, "bad PPM width"))?;
    let h: u32 = fields[2].parse().map_err(|_| file_err(path, "bad PPM height"))?;
    if fields[3] != "255" {
        return Err(file_err(path, "only 8-bit PPM (maxval 255) supported"));
    }
    pos += 1; // single whitespace after maxval
    let expected = w as usize * h as usize * 3;
    if buf.len() < pos + expected {
        return Err(file_err(path, "PPM pixel data truncated"));
    }
    ImageRaster::new(w, h, 3, buf[pos..pos + expected].to_vec(), geo)
}

/// Save imagery as PNG or binary PPM (by extension), with world file.
pub fn save_image(path: &Path, img: &ImageRaster) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "ppm" {
        if img.bands() != 3 {
            return Err(file_err(path, "PPM output requires 3-band imagery"));
        }
        let mut f = BufWriter::new(fs::File::create(path)?);
        write!(f, "P6\n{} {}\n255\n", img.width(), img.height())?;
        f.write_all(img.samples())?;
    } else {
        save_png(path, img)?;
    }
    write_world_file(path, &img.geo)
}

fn save_png(path: &Path, img: &ImageRaster) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let data = img.samples().to_vec();
    match img.bands() {
        1 => ImageBuffer::<image::Luma<u8>, _>::from_raw(w, h, data).unwrap().save(path)?,
        2 => ImageBuffer::<image::LumaA<u8>, _>::from_raw(w, h, data).unwrap().save(path)?,
        3 => ImageBuffer::<image::Rgb<u8>, _>::from_raw(w, h, data).unwrap().save(path)?,
        4 => ImageBuffer::<image::Rgba<u8>, _>::from_raw(w, h, data).unwrap().save(path)?,
        b => return Err(file_err(path, format!("unsupported band count {}", b))),
    }
    Ok(())
}

/// Load a label map: single-channel PNG of raw class ids, or an RGB(A)
/// image decoded through the scheme by nearest color.
pub fn load_labels(path: &Path, scheme: &Arc<ClassScheme>) -> Result<LabelRaster> {
    let img = load_image(path)?;
    if img.bands() <= 2 {
        let masked = scheme.masked_id();
        let mut labels = Vec::with_capacity(img.pixel_count());
        for row in 0..img.height() {
            for col in 0..img.width() {
                let v = img.sample(col, row, 0);
                if v != masked && !scheme.contains(v) {
                    return Err(file_err(path, format!("class id {} not in scheme", v)));
                }
                labels.push(if img.alpha(col, row) == 0 { masked } else { v });
            }
        }
        LabelRaster::new(img.width(), img.height(), labels, img.geo, Arc::clone(scheme))
    } else {
        decode_labels(&img, scheme, None)
    }
}

/// Save a label map as a single-channel PNG of raw class ids, with world file.
pub fn save_labels(path: &Path, labels: &LabelRaster) -> Result<()> {
    let img = ImageRaster::new(
        labels.width(),
        labels.height(),
        1,
        labels.labels().to_vec(),
        labels.geo,
    )?;
    save_image(path, &img)
}

/// Save a mask as a single-channel PNG (255 valid, 0 invalid).
pub fn save_mask(path: &Path, mask: &MaskRaster) -> Result<()> {
    let samples: Vec<u8> = mask.valid().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let img = ImageRaster::new(mask.width(), mask.height(), 1, samples, GeoTransform::unit())?;
    save_png(path, &img)
}

/// Load a mask from a single-channel PNG (nonzero = valid).
pub fn load_mask(path: &Path) -> Result<MaskRaster> {
    let img = load_image(path)?;
    let mut valid = Vec::with_capacity(img.pixel_count());
    for row in 0..img.height() {
        for col in 0..img.width() {
            valid.push(img.sample(col, row, 0) != 0);
        }
    }
    MaskRaster::new(img.width(), img.height(), valid)
}

pub fn load_scheme(path: &Path) -> Result<ClassScheme> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e.to_string()))?;
    ClassScheme::parse(&text).map_err(|e| file_err(path, e.to_string()))
}
