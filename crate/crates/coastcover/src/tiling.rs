//! Fixed-grid tile slicing, image/label pairing, and mosaic merge.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io;
use crate::raster::{GeoTransform, ImageRaster, LabelRaster};
use crate::scheme::ClassScheme;

pub const DEFAULT_TILE_SIZE: u32 = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum TilePayload {
    Image(ImageRaster),
    Labels(LabelRaster),
}

impl TilePayload {
    pub fn width(&self) -> u32 {
        match self {
            TilePayload::Image(i) => i.width(),
            TilePayload::Labels(l) => l.width(),
        }
    }

    pub fn height(&self) -> u32 {
        match self {
            TilePayload::Image(i) => i.height(),
            TilePayload::Labels(l) => l.height(),
        }
    }

    pub fn as_image(&self) -> Option<&ImageRaster> {
        match self {
            TilePayload::Image(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_labels(&self) -> Option<&LabelRaster> {
        match self {
            TilePayload::Labels(l) => Some(l),
            _ => None,
        }
    }
}

/// One tile of the slicing grid. Edge tiles are padded out to the full
/// tile size; `pad_mask` marks exactly the pixels outside the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub grid_col: u32,
    pub grid_row: u32,
    pub pixel_origin: (u32, u32),
    pub payload: TilePayload,
    pub pad_mask: Vec<bool>,
}

impl Tile {
    pub fn tile_size(&self) -> u32 {
        self.payload.width()
    }

    #[inline]
    pub fn is_pad(&self, col: u32, row: u32) -> bool {
        self.pad_mask[row as usize * self.tile_size() as usize + col as usize]
    }
}

/// A training pair of one image tile and its label tile on the same grid cell.
#[derive(Debug, Clone)]
pub struct TilePair {
    pub image_tile: Tile,
    pub label_tile: Tile,
}

fn grid_dims(width: u32, height: u32, tile_size: u32) -> (u32, u32) {
    (width.div_ceil(tile_size), height.div_ceil(tile_size))
}

fn tile_grid<F>(width: u32, height: u32, tile_size: u32, mut make: F) -> Result<Vec<Tile>>
where
    F: FnMut(u32, u32, u32, u32, &[bool]) -> Result<TilePayload>,
{
    if tile_size < 1 {
        return Err(Error::InvalidTileSize);
    }
    if width == 0 || height == 0 {
        return Err(Error::ZeroSizedRaster);
    }
    let (cols, rows) = grid_dims(width, height, tile_size);
    let ts = tile_size as usize;
    let mut tiles = Vec::with_capacity(cols as usize * rows as usize);
    for gr in 0..rows {
        for gc in 0..cols {
            let origin = (gc * tile_size, gr * tile_size);
            let mut pad = vec![false; ts * ts];
            for tr in 0..tile_size {
                for tc in 0..tile_size {
                    let (pc, pr) = (origin.0 + tc, origin.1 + tr);
                    if pc >= width || pr >= height {
                        pad[tr as usize * ts + tc as usize] = true;
                    }
                }
            }
            let payload = make(gc, gr, origin.0, origin.1, &pad)?;
            tiles.push(Tile { grid_col: gc, grid_row: gr, pixel_origin: origin, payload, pad_mask: pad });
        }
    }
    Ok(tiles)
}

/// Slice imagery into row-major tiles; padding pixels are zero.
pub fn tile_image(img: &ImageRaster, tile_size: u32) -> Result<Vec<Tile>> {
    let bands = img.bands() as usize;
    tile_grid(img.width(), img.height(), tile_size, |_, _, oc, or, _| {
        let ts = tile_size as usize;
        let mut samples = vec![0u8; ts * ts * bands];
        for tr in 0..tile_size {
            let pr = or + tr;
            if pr >= img.height() {
                break;
            }
            for tc in 0..tile_size {
                let pc = oc + tc;
                if pc >= img.width() {
                    break;
                }
                let dst = (tr as usize * ts + tc as usize) * bands;
                for b in 0..bands {
                    samples[dst + b] = img.sample(pc, pr, b as u8);
                }
            }
        }
        let geo = img.geo.offset(oc, or);
        Ok(TilePayload::Image(ImageRaster::new(tile_size, tile_size, img.bands(), samples, geo)?))
    })
}

/// Slice a label map into row-major tiles; padding pixels are `masked_id`.
pub fn tile_labels(labels: &LabelRaster, tile_size: u32) -> Result<Vec<Tile>> {
    let masked = labels.scheme().masked_id();
    tile_grid(labels.width(), labels.height(), tile_size, |_, _, oc, or, _| {
        let ts = tile_size as usize;
        let mut data = vec![masked; ts * ts];
        for tr in 0..tile_size {
            let pr = or + tr;
            if pr >= labels.height() {
                break;
            }
            for tc in 0..tile_size {
                let pc = oc + tc;
                if pc >= labels.width() {
                    break;
                }
                data[tr as usize * ts + tc as usize] = labels.label(pc, pr);
            }
        }
        let geo = labels.geo.offset(oc, or);
        Ok(TilePayload::Labels(LabelRaster::new(
            tile_size,
            tile_size,
            data,
            geo,
            Arc::clone(labels.scheme()),
        )?))
    })
}

/// Match image and label tiles by grid index. Both inputs must come from
/// the same tiling geometry.
pub fn pair_tiles(image_tiles: Vec<Tile>, label_tiles: Vec<Tile>) -> Result<Vec<TilePair>> {
    if image_tiles.len() != label_tiles.len() {
        return Err(Error::TileGeometryMismatch(format!(
            "{} image tiles vs {} label tiles",
            image_tiles.len(),
            label_tiles.len()
        )));
    }
    let mut by_index: HashMap<(u32, u32), Tile> = HashMap::new();
    for t in label_tiles {
        by_index.insert((t.grid_row, t.grid_col), t);
    }
    let mut pairs = Vec::with_capacity(image_tiles.len());
    for img in image_tiles {
        let lab = by_index
            .remove(&(img.grid_row, img.grid_col))
            .ok_or(Error::MissingTile { row: img.grid_row, col: img.grid_col })?;
        if img.tile_size() != lab.tile_size() || img.pixel_origin != lab.pixel_origin {
            return Err(Error::TileGeometryMismatch(format!(
                "tile ({}, {}): size {} at {:?} vs size {} at {:?}",
                img.grid_row,
                img.grid_col,
                img.tile_size(),
                img.pixel_origin,
                lab.tile_size(),
                lab.pixel_origin
            )));
        }
        pairs.push(TilePair { image_tile: img, label_tile: lab });
    }
    Ok(pairs)
}

/// Merge tiles back into the parent raster. Tiles may arrive in any
/// order but must cover the parent grid exactly once.
pub fn mosaic_tiles(tiles: &[Tile], parent_width: u32, parent_height: u32) -> Result<TilePayload> {
    let first = tiles.first().ok_or(Error::ZeroSizedRaster)?;
    let tile_size = first.tile_size();
    let (cols, rows) = grid_dims(parent_width, parent_height, tile_size);

    let mut seen = vec![false; cols as usize * rows as usize];
    for t in tiles {
        if t.tile_size() != tile_size {
            return Err(Error::TileGeometryMismatch("mixed tile sizes".into()));
        }
        if t.grid_col >= cols || t.grid_row >= rows {
            return Err(Error::TileOutOfRange { row: t.grid_row, col: t.grid_col });
        }
        let idx = (t.grid_row * cols + t.grid_col) as usize;
        if seen[idx] {
            return Err(Error::DuplicateTile { row: t.grid_row, col: t.grid_col });
        }
        seen[idx] = true;
    }
    if let Some(idx) = seen.iter().position(|s| !s) {
        return Err(Error::MissingTile { row: idx as u32 / cols, col: idx as u32 % cols });
    }

    match &first.payload {
        TilePayload::Image(img0) => {
            let bands = img0.bands() as usize;
            let parent_geo = img0.geo.offset_back(first.pixel_origin);
            let mut samples =
                vec![0u8; parent_width as usize * parent_height as usize * bands];
            for t in tiles {
                let img = t.payload.as_image().ok_or(Error::MixedTileKinds)?;
                for tr in 0..tile_size {
                    let pr = t.pixel_origin.1 + tr;
                    if pr >= parent_height {
                        break;
                    }
                    for tc in 0..tile_size {
                        let pc = t.pixel_origin.0 + tc;
                        if pc >= parent_width {
                            break;
                        }
                        let dst = (pr as usize * parent_width as usize + pc as usize) * bands;
                        for b in 0..bands {
                            samples[dst + b] = img.sample(tc, tr, b as u8);
                        }
                    }
                }
            }
            Ok(TilePayload::Image(ImageRaster::new(
                parent_width,
                parent_height,
                img0.bands(),
                samples,
                parent_geo,
            )?))
        }
        TilePayload::Labels(lab0) => {
            let scheme = Arc::clone(lab0.scheme());
            let parent_geo = lab0.geo.offset_back(first.pixel_origin);
            let mut data =
                vec![scheme.masked_id(); parent_width as usize * parent_height as usize];
            for t in tiles {
                let lab = t.payload.as_labels().ok_or(Error::MixedTileKinds)?;
                for tr in 0..tile_size {
                    let pr = t.pixel_origin.1 + tr;
                    if pr >= parent_height {
                        break;
                    }
                    for tc in 0..tile_size {
                        let pc = t.pixel_origin.0 + tc;
                        if pc >= parent_width {
                            break;
                        }
                        data[pr as usize * parent_width as usize + pc as usize] =
                            lab.label(tc, tr);
                    }
                }
            }
            Ok(TilePayload::Labels(LabelRaster::new(
                parent_width,
                parent_height,
                data,
                parent_geo,
                scheme,
            )?))
        }
    }
}

impl GeoTransform {
    /// Parent transform recovered from a tile's transform and its pixel origin.
    fn offset_back(&self, origin: (u32, u32)) -> GeoTransform {
        GeoTransform {
            origin_x: self.origin_x - origin.0 as f64 * self.pixel_size_x,
            origin_y: self.origin_y + origin.1 as f64 * self.pixel_size_y,
            ..*self
        }
    }
}

/// Persist a tile set as `tile_{row}_{col}.png` files plus a manifest.
pub fn save_tileset(dir: &Path, tiles: &[Tile], parent_width: u32, parent_height: u32) -> Result<()> {
    let first = tiles.first().ok_or(Error::ZeroSizedRaster)?;
    fs::create_dir_all(dir)?;
    let kind = match &first.payload {
        TilePayload::Image(_) => "image",
        TilePayload::Labels(_) => "labels",
    };
    let geo = match &first.payload {
        TilePayload::Image(i) => i.geo,
        TilePayload::Labels(l) => l.geo,
    }
    .offset_back(first.pixel_origin);
    let manifest = format!(
        "parent {} {}\ntile_size {}\nkind {}\ngeo {} {} {} {}\n",
        parent_width,
        parent_height,
        first.tile_size(),
        kind,
        geo.pixel_size_x,
        geo.pixel_size_y,
        geo.origin_x,
        geo.origin_y,
    );
    fs::write(dir.join("manifest.txt"), manifest)?;
    for t in tiles {
        let path = dir.join(format!("tile_{}_{}.png", t.grid_row, t.grid_col));
        match &t.payload {
            TilePayload::Image(img) => io::save_image(&path, img)?,
            TilePayload::Labels(lab) => io::save_labels(&path, lab)?,
        }
    }
    Ok(())
}

/// Manifest contents of a persisted tile set.
pub struct TilesetManifest {
    pub parent_width: u32,
    pub parent_height: u32,
    pub tile_size: u32,
    pub kind: String,
    pub geo: GeoTransform,
}

pub fn read_manifest(dir: &Path) -> Result<TilesetManifest> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path)?;
    let mut parent = None;
    let mut tile_size = None;
    let mut kind = None;
    let mut geo = None;
    for line in text.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["parent", w, h] => parent = Some((w.parse(), h.parse())),
            ["tile_size", ts] => tile_size = Some(ts.parse()),
            ["kind", k] => kind = Some(k.to_string()),
            ["geo", px, py, ox, oy] => {
                geo = Some(GeoTransform::new(
                    ox.parse().map_err(|_| Error::Parse("bad manifest geo".into()))?,
                    oy.parse().map_err(|_| Error::Parse("bad manifest geo".into()))?,
                    px.parse().map_err(|_| Error::Parse("bad manifest geo".into()))?,
                    py.parse().map_err(|_| Error::Parse("bad manifest geo".into()))?,
                )?)
            }
            _ => {}
        }
    }
    let bad = || Error::Parse(format!("{}: incomplete tileset manifest", path.display()));
    let (w, h) = parent.ok_or_else(bad)?;
    Ok(TilesetManifest {
        parent_width: w.map_err(|_| bad())?,
        parent_height: h.map_err(|_| bad())?,
        tile_size: tile_size.ok_or_else(bad)?.map_err(|_| bad())?,
        kind: kind.ok_or_else(bad)?,
        geo: geo.ok_or_else(bad)?,
    })
}

/// Load a persisted tile set back into memory.
pub fn load_tileset(dir: &Path, scheme: &Arc<ClassScheme>) -> Result<(Vec<Tile>, TilesetManifest)> {
    let manifest = read_manifest(dir)?;
    let (cols, rows) = grid_dims(manifest.parent_width, manifest.parent_height, manifest.tile_size);
    let ts = manifest.tile_size as usize;
    let mut tiles = Vec::with_capacity(cols as usize * rows as usize);
    for gr in 0..rows {
        for gc in 0..cols {
            let path = dir.join(format!("tile_{}_{}.png", gr, gc));
            if !path.exists() {
                return Err(Error::MissingTile { row: gr, col: gc });
            }
            let origin = (gc * manifest.tile_size, gr * manifest.tile_size);
            let mut pad = vec![false; ts * ts];
            for tr in 0..manifest.tile_size {
                for tc in 0..manifest.tile_size {
                    if origin.0 + tc >= manifest.parent_width || origin.1 + tr >= manifest.parent_height {
                        pad[tr as usize * ts + tc as usize] = true;
                    }
                }
            }
            let payload = if manifest.kind == "labels" {
                TilePayload::Labels(io::load_labels(&path, scheme)?)
            } else {
                TilePayload::Image(io::load_image(&path)?)
            };
            tiles.push(Tile { grid_col: gc, grid_row: gr, pixel_origin: origin, payload, pad_mask: pad });
        }
    }
    Ok((tiles, manifest))
}
