//! Pluggable segmentation backends: a trainable windowed-moment baseline,
//! import of external label rasters, confidence handling, and majority-
//! filter cleanup.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io;
use crate::raster::{GeoTransform, ImageRaster, LabelRaster, MaskRaster};
use crate::scheme::ClassScheme;
use crate::tiling::{mosaic_tiles, tile_image, Tile, TilePair, TilePayload};

/// R, G, B plus windowed mean and stddev per band.
pub const FEATURE_COUNT: usize = 9;
const SPREAD_EPS: f64 = 1e-6;

/// Per-pixel class scores, normalized to sum 1. Padding/masked pixels
/// carry a marker flag instead of scores.
#[derive(Debug, Clone)]
pub struct ScoreMap {
    pub width: u32,
    pub height: u32,
    pub class_ids: Vec<u8>,
    /// width*height*k, pixel-major.
    pub scores: Vec<f64>,
    /// Pixels that carry no class mass (tile padding).
    pub masked: Vec<bool>,
    pub geo: GeoTransform,
}

impl ScoreMap {
    #[inline]
    pub fn pixel_scores(&self, col: u32, row: u32) -> &[f64] {
        let k = self.class_ids.len();
        let base = (row as usize * self.width as usize + col as usize) * k;
        &self.scores[base..base + k]
    }
}

/// Nearest-centroid classifier over windowed color/texture moments.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub window: u32,
    pub classes: Vec<u8>,
    /// One centroid of FEATURE_COUNT values per trained class.
    pub centroids: Vec<Vec<f64>>,
    /// Per-feature spread (stddev over training pixels), floored at epsilon.
    pub spreads: Vec<Vec<f64>>,
}

impl BaselineModel {
    pub fn is_trained(&self) -> bool {
        !self.classes.is_empty()
    }
}

/// Feature vectors for every pixel of an image, via summed-area tables.
/// Windows are clamped to the image extent.
pub fn pixel_features(img: &ImageRaster, window: u32) -> Vec<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let radius = (window / 2) as i64;
    // integral images of sum and sum of squares per band, (w+1)x(h+1)
    let stride = w + 1;
    let mut sum = vec![[0f64; 3]; stride * (h + 1)];
    let mut sq = vec![[0f64; 3]; stride * (h + 1)];
    for r in 0..h {
        for c in 0..w {
            let px = img.rgb(c as u32, r as u32);
            let i = (r + 1) * stride + (c + 1);
            for b in 0..3 {
                let v = px[b] as f64;
                sum[i][b] = v + sum[i - 1][b] + sum[i - stride][b] - sum[i - stride - 1][b];
                sq[i][b] = v * v + sq[i - 1][b] + sq[i - stride][b] - sq[i - stride - 1][b];
            }
        }
    }
    let mut feats = vec![0f64; w * h * FEATURE_COUNT];
    for r in 0..h {
        let r0 = (r as i64 - radius).max(0) as usize;
        let r1 = ((r as i64 + radius + 1).min(h as i64)) as usize;
        for c in 0..w {
            let c0 = (c as i64 - radius).max(0) as usize;
            let c1 = ((c as i64 + radius + 1).min(w as i64)) as usize;
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            let px = img.rgb(c as u32, r as u32);
            let out = (r * w + c) * FEATURE_COUNT;
            for b in 0..3 {
                let s = sum[r1 * stride + c1][b] - sum[r0 * stride + c1][b]
                    - sum[r1 * stride + c0][b]
                    + sum[r0 * stride + c0][b];
                let s2 = sq[r1 * stride + c1][b] - sq[r0 * stride + c1][b]
                    - sq[r1 * stride + c0][b]
                    + sq[r0 * stride + c0][b];
                let mean = s / count;
                let var = (s2 / count - mean * mean).max(0.0);
                feats[out + b] = px[b] as f64;
                feats[out + 3 + b] = mean;
                feats[out + 6 + b] = var.sqrt();
            }
        }
    }
    feats
}

/// Train per-class centroids and spreads over all non-masked,
/// non-padding labeled pixels of the given tile pairs.
pub fn train_baseline(pairs: &[TilePair], window: u32) -> Result<BaselineModel> {
    if window < 1 || window % 2 == 0 {
        return Err(Error::InvalidWindow(window));
    }
    if pairs.is_empty() {
        return Err(Error::NoTrainingPixels);
    }
    // class id -> (count, sum[f], sumsq[f])
    let mut acc: Vec<Option<(u64, [f64; FEATURE_COUNT], [f64; FEATURE_COUNT])>> = vec![None; 256];
    for pair in pairs {
        let img = pair
            .image_tile
            .payload
            .as_image()
            .ok_or(Error::MixedTileKinds)?;
        let lab = pair
            .label_tile
            .payload
            .as_labels()
            .ok_or(Error::MixedTileKinds)?;
        let masked = lab.scheme().masked_id();
        let feats = pixel_features(img, window);
        let ts = img.width();
        for row in 0..ts {
            for col in 0..ts {
                let l = lab.label(col, row);
                if l == masked || pair.image_tile.is_pad(col, row) {
                    continue;
                }
                let slot = acc[l as usize].get_or_insert((0, [0.0; FEATURE_COUNT], [0.0; FEATURE_COUNT]));
                slot.0 += 1;
                let base = (row as usize * ts as usize + col as usize) * FEATURE_COUNT;
                for f in 0..FEATURE_COUNT {
                    let v = feats[base + f];
                    slot.1[f] += v;
                    slot.2[f] += v * v;
                }
            }
        }
    }
    let mut classes = Vec::new();
    let mut centroids = Vec::new();
    let mut spreads = Vec::new();
    for (id, slot) in acc.iter().enumerate() {
        if let Some((n, sum, sumsq)) = slot {
            let n = *n as f64;
            let mut mu = vec![0f64; FEATURE_COUNT];
            let mut sd = vec![0f64; FEATURE_COUNT];
            for f in 0..FEATURE_COUNT {
                mu[f] = sum[f] / n;
                sd[f] = (sumsq[f] / n - mu[f] * mu[f]).max(0.0).sqrt().max(SPREAD_EPS);
            }
            classes.push(id as u8);
            centroids.push(mu);
            spreads.push(sd);
        }
    }
    if classes.is_empty() {
        return Err(Error::NoTrainingPixels);
    }
    Ok(BaselineModel { window, classes, centroids, spreads })
}

/// Score one imagery tile: softmax over negated spread-normalized
/// distances to each class centroid. Padding pixels are flagged masked.
pub fn predict_tile(model: &BaselineModel, tile: &Tile) -> Result<ScoreMap> {
    if !model.is_trained() {
        return Err(Error::UntrainedModel);
    }
    let img = tile.payload.as_image().ok_or(Error::MixedTileKinds)?;
    let k = model.classes.len();
    let feats = pixel_features(img, model.window);
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut scores = vec![0f64; w * h * k];
    let mut dists = vec![0f64; k];
    for p in 0..w * h {
        if tile.pad_mask[p] {
            continue;
        }
        let base = p * FEATURE_COUNT;
        for (ci, (mu, sd)) in model.centroids.iter().zip(&model.spreads).enumerate() {
            let mut d2 = 0.0;
            for f in 0..FEATURE_COUNT {
                let z = (feats[base + f] - mu[f]) / sd[f];
                d2 += z * z;
            }
            dists[ci] = d2.sqrt();
        }
        let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for ci in 0..k {
            let e = (-(dists[ci] - dmin)).exp();
            scores[p * k + ci] = e;
            total += e;
        }
        for ci in 0..k {
            scores[p * k + ci] /= total;
        }
    }
    Ok(ScoreMap {
        width: img.width(),
        height: img.height(),
        class_ids: model.classes.clone(),
        scores,
        masked: tile.pad_mask.clone(),
        geo: img.geo,
    })
}

/// Per-pixel argmax over scores; a max below `confidence_floor` falls back
/// to the scheme's not-classified class. Ties go to the lowest class id.
pub fn scores_to_labels(
    scores: &ScoreMap,
    scheme: &Arc<ClassScheme>,
    confidence_floor: f64,
) -> Result<LabelRaster> {
    if !(0.0..1.0).contains(&confidence_floor) {
        return Err(Error::InvalidFloor(confidence_floor));
    }
    for &id in &scores.class_ids {
        if !scheme.contains(id) {
            return Err(Error::ScoreSchemeMismatch(format!("class id {} unknown", id)));
        }
    }
    let unclassified = scheme.unclassified_id();
    if confidence_floor > 0.0 && unclassified.is_none() {
        return Err(Error::MissingUnclassifiedClass);
    }
    let k = scores.class_ids.len();
    let masked = scheme.masked_id();
    let mut labels = Vec::with_capacity(scores.width as usize * scores.height as usize);
    for p in 0..scores.width as usize * scores.height as usize {
        if scores.masked[p] {
            labels.push(masked);
            continue;
        }
        let s = &scores.scores[p * k..(p + 1) * k];
        let mut best = 0usize;
        for ci in 1..k {
            if s[ci] > s[best] {
                best = ci;
            }
        }
        if s[best] < confidence_floor {
            labels.push(unclassified.unwrap());
        } else {
            labels.push(scores.class_ids[best]);
        }
    }
    LabelRaster::new(scores.width, scores.height, labels, scores.geo, Arc::clone(scheme))
}

/// Full-raster classification: tile, predict per tile, label, mosaic,
/// then force masked pixels to `masked_id`. Per-tile work runs in
/// parallel; the result is independent of thread count.
pub fn classify_raster(
    model: &BaselineModel,
    image: &ImageRaster,
    scheme: &Arc<ClassScheme>,
    mask: Option<&MaskRaster>,
    tile_size: u32,
    confidence_floor: f64,
) -> Result<LabelRaster> {
    if !model.is_trained() {
        return Err(Error::UntrainedModel);
    }
    let tiles = tile_image(image, tile_size)?;
    let label_tiles: Vec<Tile> = tiles
        .par_iter()
        .map(|t| -> Result<Tile> {
            let sm = predict_tile(model, t)?;
            let lab = scores_to_labels(&sm, scheme, confidence_floor)?;
            Ok(Tile {
                grid_col: t.grid_col,
                grid_row: t.grid_row,
                pixel_origin: t.pixel_origin,
                payload: TilePayload::Labels(lab),
                pad_mask: t.pad_mask.clone(),
            })
        })
        .collect::<Result<Vec<Tile>>>()?;
    let merged = mosaic_tiles(&label_tiles, image.width(), image.height())?;
    let merged = match merged {
        TilePayload::Labels(l) => l,
        _ => unreachable!(),
    };
    apply_mask(&merged, image, mask)
}

fn apply_mask(
    labels: &LabelRaster,
    image: &ImageRaster,
    mask: Option<&MaskRaster>,
) -> Result<LabelRaster> {
    let scheme = labels.scheme();
    let masked = scheme.masked_id();
    let mut data = labels.labels().to_vec();
    for row in 0..labels.height() {
        for col in 0..labels.width() {
            let invalid = image.alpha(col, row) == 0
                || mask.map(|m| !m.is_valid(col, row)).unwrap_or(false);
            if invalid {
                data[row as usize * labels.width() as usize + col as usize] = masked;
            }
        }
    }
    LabelRaster::new(labels.width(), labels.height(), data, labels.geo, Arc::clone(scheme))
}

/// Load an externally produced label raster (e.g. colored model output)
/// and integrate noisy colors by nearest-color decoding.
pub fn import_external_labels(
    path: &Path,
    scheme: &Arc<ClassScheme>,
    expected_dims: Option<(u32, u32)>,
) -> Result<LabelRaster> {
    let labels = io::load_labels(path, scheme)?;
    if let Some((w, h)) = expected_dims {
        if labels.width() != w || labels.height() != h {
            return Err(Error::DimensionMismatch(labels.width(), labels.height(), w, h));
        }
    }
    Ok(labels)
}

/// Replace each non-masked pixel by the modal class of the non-masked
/// neighbors in its (2r+1)^2 window; ties keep the original label.
/// Masked pixels are unchanged and excluded from neighbor counts.
pub fn majority_filter(labels: &LabelRaster, radius: u32, iterations: u32) -> LabelRaster {
    assert!(radius >= 1, "radius must be >= 1");
    let scheme = labels.scheme();
    let masked = scheme.masked_id();
    let (w, h) = (labels.width() as i64, labels.height() as i64);
    let r = radius as i64;
    let n_classes = scheme.len();
    let mut current = labels.labels().to_vec();
    let mut next = current.clone();
    for _ in 0..iterations {
        next.par_chunks_mut(labels.width() as usize)
            .enumerate()
            .for_each(|(row, out_row)| {
                let row = row as i64;
                let mut counts = vec![0u32; n_classes];
                for col in 0..w {
                    let idx = (row * w + col) as usize;
                    let original = current[idx];
                    if original == masked {
                        out_row[col as usize] = masked;
                        continue;
                    }
                    counts.iter_mut().for_each(|c| *c = 0);
                    for nr in (row - r).max(0)..=(row + r).min(h - 1) {
                        for nc in (col - r).max(0)..=(col + r).min(w - 1) {
                            let l = current[(nr * w + nc) as usize];
                            if l != masked {
                                counts[l as usize] += 1;
                            }
                        }
                    }
                    let max = *counts.iter().max().unwrap();
                    let winners: Vec<usize> = counts
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c == max)
                        .map(|(i, _)| i)
                        .collect();
                    out_row[col as usize] = if winners.len() == 1 {
                        winners[0] as u8
                    } else {
                        original
                    };
                }
            });
        std::mem::swap(&mut current, &mut next);
    }
    LabelRaster::new(labels.width(), labels.height(), current, labels.geo, Arc::clone(scheme))
        .expect("filter output stays within the scheme")
}

/// Persist a model as versioned plain text: header, window line, then one
/// class per line with centroid and spread values.
pub fn save_model(path: &Path, model: &BaselineModel) -> Result<()> {
    let mut out = String::from("baseline-model v1\n");
    out.push_str(&format!("window {}\n", model.window));
    for (i, &c) in model.classes.iter().enumerate() {
        out.push_str(&format!("class {}", c));
        for v in &model.centroids[i] {
            out.push_str(&format!(" {:.17e}", v));
        }
        for v in &model.spreads[i] {
            out.push_str(&format!(" {:.17e}", v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<BaselineModel> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |reason: &str| Error::InvalidFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if lines.next() != Some("baseline-model v1") {
        return Err(bad("missing baseline-model v1 header"));
    }
    let window = lines
        .next()
        .and_then(|l| l.strip_prefix("window "))
        .and_then(|w| w.parse::<u32>().ok())
        .ok_or_else(|| bad("missing window line"))?;
    let mut model = BaselineModel { window, classes: vec![], centroids: vec![], spreads: vec![] };
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 + 2 * FEATURE_COUNT || fields[0] != "class" {
            return Err(bad("malformed class line"));
        }
        let id: u8 = fields[1].parse().map_err(|_| bad("bad class id"))?;
        let vals: Vec<f64> = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad("bad float")))
            .collect::<Result<Vec<f64>>>()?;
        model.classes.push(id);
        model.centroids.push(vals[..FEATURE_COUNT].to_vec());
        model.spreads.push(vals[FEATURE_COUNT..].to_vec());
    }
    if model.classes.is_empty() {
        return Err(bad("model has no classes"));
    }
    Ok(model)
}
