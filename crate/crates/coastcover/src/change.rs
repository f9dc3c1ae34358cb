//! Per-class area accounting and before/after change tables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::LabelRaster;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaRow {
    pub class_name: String,
    pub pixel_count: Option<u64>,
    pub area_ha: f64,
    /// True for rows synthesized from a merge group.
    pub merged: bool,
}

/// Per-class pixel counts and hectares for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaTable {
    pub epoch: String,
    pub pixel_area_m2: f64,
    pub rows: Vec<AreaRow>,
    pub masked_pixels: u64,
}

impl AreaTable {
    /// Table built directly from per-class hectares (no pixel counts),
    /// e.g. when loading a rendered CSV.
    pub fn from_areas(epoch: &str, rows: Vec<(String, f64)>) -> Self {
        AreaTable {
            epoch: epoch.to_string(),
            pixel_area_m2: 0.0,
            rows: rows
                .into_iter()
                .map(|(class_name, area_ha)| AreaRow {
                    class_name,
                    pixel_count: None,
                    area_ha,
                    merged: false,
                })
                .collect(),
            masked_pixels: 0,
        }
    }

    pub fn area_of(&self, class_name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.class_name == class_name).map(|r| r.area_ha)
    }
}

/// Count non-masked pixels per class and convert to hectares via the
/// raster's pixel area. `merge` optionally appends a merged row (member
/// areas summed) named after one of the scheme's merge groups.
pub fn class_areas(labels: &LabelRaster, epoch: &str, merge: Option<&str>) -> Result<AreaTable> {
    let scheme = labels.scheme();
    let pixel_area = labels.geo.pixel_area_m2();
    if !(pixel_area > 0.0) {
        return Err(Error::DegenerateGeo);
    }
    let mut counts = vec![0u64; scheme.len()];
    let mut masked_pixels = 0u64;
    for &l in labels.labels() {
        if l == scheme.masked_id() {
            masked_pixels += 1;
        } else {
            counts[l as usize] += 1;
        }
    }
    let to_ha = |n: u64| n as f64 * pixel_area / 10_000.0;
    let mut rows: Vec<AreaRow> = scheme
        .classes()
        .iter()
        .map(|c| AreaRow {
            class_name: c.name.clone(),
            pixel_count: Some(counts[c.id as usize]),
            area_ha: to_ha(counts[c.id as usize]),
            merged: false,
        })
        .collect();
    if let Some(group_name) = merge {
        let group = scheme
            .merge_group(group_name)
            .ok_or_else(|| Error::Parse(format!("unknown merge group {:?}", group_name)))?;
        let n: u64 = group.members.iter().map(|&m| counts[m as usize]).sum();
        rows.push(AreaRow {
            class_name: group.name.clone(),
            pixel_count: Some(n),
            area_ha: to_ha(n),
            merged: true,
        });
    }
    Ok(AreaTable { epoch: epoch.to_string(), pixel_area_m2: pixel_area, rows, masked_pixels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRow {
    pub class_name: String,
    pub area_t0: f64,
    pub area_t1: f64,
    pub delta_ha: f64,
    /// delta / area_t0; `None` when the earlier epoch had zero area.
    pub relative_change: Option<f64>,
}

/// Per-class area change between two epochs (Table-shaped report).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaChangeReport {
    pub method: String,
    pub epoch_t0: String,
    pub epoch_t1: String,
    pub rows: Vec<ChangeRow>,
}

/// Per-class deltas and relative change between two epochs. Classes
/// absent in one epoch are treated as area 0.
pub fn change_table(t0: &AreaTable, t1: &AreaTable, method: &str) -> AreaChangeReport {
    let mut names: Vec<String> = t0.rows.iter().map(|r| r.class_name.clone()).collect();
    for r in &t1.rows {
        if !names.contains(&r.class_name) {
            names.push(r.class_name.clone());
        }
    }
    let rows = names
        .into_iter()
        .map(|name| {
            let a0 = t0.area_of(&name).unwrap_or(0.0);
            let a1 = t1.area_of(&name).unwrap_or(0.0);
            let delta = a1 - a0;
            let relative = if a0 == 0.0 { None } else { Some(delta / a0) };
            ChangeRow { class_name: name, area_t0: a0, area_t1: a1, delta_ha: delta, relative_change: relative }
        })
        .collect();
    AreaChangeReport {
        method: method.to_string(),
        epoch_t0: t0.epoch.clone(),
        epoch_t1: t1.epoch.clone(),
        rows,
    }
}

fn fmt_ha(v: f64) -> String {
    format!("{:.1}", v)
}

fn fmt_rel(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.3}", x),
        None => "NA".into(),
    }
}

/// CSV: `class,pixel_count,area_ha` with hectares at 1 decimal.
pub fn render_area_csv(table: &AreaTable) -> String {
    let mut out = String::from("class,pixel_count,area_ha\n");
    for r in &table.rows {
        let n = r.pixel_count.map(|n| n.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", r.class_name, n, fmt_ha(r.area_ha)));
    }
    out
}

pub fn render_area_json(table: &AreaTable) -> String {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "class": r.class_name,
                "pixel_count": r.pixel_count,
                "area_ha": rounded1(r.area_ha),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "epoch": table.epoch,
        "pixel_area_m2": table.pixel_area_m2,
        "masked_pixels": table.masked_pixels,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}

/// Parse an area CSV back into a table. `pixel_count` may be blank.
pub fn parse_area_csv(epoch: &str, text: &str) -> Result<AreaTable> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() < 2 {
            return Err(Error::Parse(format!("area CSV line {}: need class,area", i + 1)));
        }
        let (name, count, area) = if f.len() == 2 {
            (f[0], None, f[1])
        } else {
            let c = if f[1].is_empty() {
                None
            } else {
                Some(f[1].parse::<u64>().map_err(|_| {
                    Error::Parse(format!("area CSV line {}: bad pixel count", i + 1))
                })?)
            };
            (f[0], c, f[2])
        };
        let area_ha: f64 = area
            .parse()
            .map_err(|_| Error::Parse(format!("area CSV line {}: bad area", i + 1)))?;
        rows.push(AreaRow { class_name: name.to_string(), pixel_count: count, area_ha, merged: false });
    }
    Ok(AreaTable { epoch: epoch.to_string(), pixel_area_m2: 0.0, rows, masked_pixels: 0 })
}

fn rounded1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn rounded3(v: Option<f64>) -> Option<f64> {
    v.map(|x| (x * 1000.0).round() / 1000.0)
}

/// CSV: `class,area_ha_t0,area_ha_t1,delta_ha,relative_change`;
/// hectares at 1 decimal, ratios at 3 decimals, undefined as NA.
pub fn render_change_csv(report: &AreaChangeReport) -> String {
    let mut out = String::from("class,area_ha_t0,area_ha_t1,delta_ha,relative_change\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.class_name,
            fmt_ha(r.area_t0),
            fmt_ha(r.area_t1),
            fmt_ha(r.delta_ha),
            fmt_rel(r.relative_change),
        ));
    }
    out
}

pub fn render_change_json(report: &AreaChangeReport) -> String {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "class": r.class_name,
                "area_ha_t0": rounded1(r.area_t0),
                "area_ha_t1": rounded1(r.area_t1),
                "delta_ha": rounded1(r.delta_ha),
                "relative_change": rounded3(r.relative_change),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "method": report.method,
        "epoch_t0": report.epoch_t0,
        "epoch_t1": report.epoch_t1,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}
