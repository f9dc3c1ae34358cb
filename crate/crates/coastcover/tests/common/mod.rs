//! Synthetic two-epoch coastal fixtures with known class geometry.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coastcover::raster::{GeoTransform, ImageRaster, LabelRaster, MaskRaster};
use coastcover::scheme::ClassScheme;

pub const BORDER: u32 = 16;

#[derive(Clone, Copy)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        (self.x1 - self.x0) as u64 * (self.y1 - self.y0) as u64
    }
}

pub struct EpochLayout {
    pub dense: Vec<Rect>,
    pub sparse: Vec<Rect>,
    pub rafts: Vec<Rect>,
    pub debris: Vec<Rect>,
}

fn raft_row(x_start: u32, y: u32, count: u32, width: u32, gap: u32) -> Vec<Rect> {
    (0..count)
        .map(|k| Rect {
            x0: x_start + k * (width + gap),
            y0: y,
            x1: x_start + k * (width + gap) + width,
            y1: y + 50,
        })
        .collect()
}

/// Shared training-quadrant layout (top-left 1024x1024): one region of
/// every class so a model trained there can label the rest.
fn quadrant_layout() -> EpochLayout {
    EpochLayout {
        dense: vec![Rect { x0: 100, y0: 100, x1: 600, y1: 600 }],
        sparse: vec![Rect { x0: 650, y0: 100, x1: 1000, y1: 450 }],
        rafts: raft_row(100, 650, 3, 150, 150),
        debris: vec![Rect { x0: 800, y0: 800, x1: 900, y1: 900 }],
    }
}

/// Held-out layout for the earlier epoch.
pub fn layout_t0() -> EpochLayout {
    let mut l = quadrant_layout();
    l.dense.push(Rect { x0: 1100, y0: 100, x1: 1800, y1: 800 });
    l.sparse.push(Rect { x0: 100, y0: 1100, x1: 800, y1: 1700 });
    l.rafts.extend(raft_row(1100, 1200, 5, 150, 10));
    l.rafts.extend(raft_row(1100, 1400, 5, 150, 10));
    l.debris.push(Rect { x0: 1950, y0: 1950, x1: 2000, y1: 2000 });
    l
}

/// Held-out layout for the later epoch: dense and sparse vegetation and
/// rafts shrink, debris and sand grow (paper-like change signs).
pub fn layout_t1() -> EpochLayout {
    let mut l = quadrant_layout();
    l.dense.push(Rect { x0: 1100, y0: 100, x1: 1500, y1: 500 });
    l.sparse.push(Rect { x0: 100, y0: 1100, x1: 600, y1: 1500 });
    l.rafts.extend(raft_row(1100, 1200, 4, 150, 10));
    l.debris.push(Rect { x0: 1850, y0: 1850, x1: 2000, y1: 2000 });
    l
}

fn paint(labels: &mut [u8], size: u32, rects: &[Rect], class: u8) {
    for r in rects {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                labels[(y * size + x) as usize] = class;
            }
        }
    }
}

/// Ground-truth label raster for a layout; border pixels are masked.
pub fn truth_labels(layout: &EpochLayout, size: u32, scheme: &Arc<ClassScheme>) -> LabelRaster {
    let mut labels = vec![0u8; (size * size) as usize]; // sand background
    paint(&mut labels, size, &layout.dense, 1);
    paint(&mut labels, size, &layout.sparse, 2);
    paint(&mut labels, size, &layout.rafts, 3);
    paint(&mut labels, size, &layout.debris, 4);
    let masked = scheme.masked_id();
    for y in 0..size {
        for x in 0..size {
            if x < BORDER || y < BORDER || x >= size - BORDER || y >= size - BORDER {
                labels[(y * size + x) as usize] = masked;
            }
        }
    }
    let geo = GeoTransform::new(0.0, 0.0, 0.4, 0.4).unwrap();
    LabelRaster::new(size, size, labels, geo, Arc::clone(scheme)).unwrap()
}

/// Noisy imagery for a label map: per-class base color plus seeded
/// uniform noise, stronger for vegetation textures.
pub fn render_epoch(truth: &LabelRaster, seed: u64) -> ImageRaster {
    let scheme = truth.scheme();
    let masked = scheme.masked_id();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: [[i32; 3]; 5] = [
        [210, 180, 140], // sand
        [0, 100, 0],     // dense vegetation
        [144, 238, 144], // sparse vegetation
        [139, 69, 19],   // oyster raft
        [255, 0, 0],     // debris
    ];
    let spread: [i32; 5] = [10, 30, 12, 8, 8];
    let mut samples = Vec::with_capacity(truth.pixel_count() * 3);
    for &l in truth.labels() {
        if l == masked {
            samples.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let base = bases[l as usize];
        let s = spread[l as usize];
        for channel in base {
            let noisy = channel + rng.gen_range(-s..=s);
            samples.push(noisy.clamp(0, 255) as u8);
        }
    }
    ImageRaster::new(truth.width(), truth.height(), 3, samples, truth.geo).unwrap()
}

/// Border mask matching `truth_labels`.
pub fn border_mask(size: u32) -> MaskRaster {
    let valid: Vec<bool> = (0..size as u64 * size as u64)
        .map(|i| {
            let (y, x) = ((i / size as u64) as u32, (i % size as u64) as u32);
            x >= BORDER && y >= BORDER && x < size - BORDER && y < size - BORDER
        })
        .collect();
    MaskRaster::new(size, size, valid).unwrap()
}
