//! Subcommand-driven orchestration of the coastal land-cover pipeline.
//!
//! Each subcommand reads and writes plain files (PNG/PPM rasters, world
//! files, CSV/JSON reports); there is no hidden state between steps.
//! Randomized steps require an explicit --seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use coastcover::assess::{assessment_report, build_confusion, render_assessment_csv, render_assessment_json, sample_points};
use coastcover::change::{change_table, class_areas, parse_area_csv, render_area_csv, render_area_json, render_change_csv, render_change_json};
use coastcover::classify::{classify_raster, import_external_labels, load_model, majority_filter, save_model, train_baseline};
use coastcover::io;
use coastcover::preprocess::{build_mask, match_color_levels, resample_image};
use coastcover::raster::{encode_labels, MaskRaster};
use coastcover::scheme::ClassScheme;
use coastcover::tiling::{pair_tiles, save_tileset, tile_image, tile_labels};

const SCHEME_ENV: &str = "COASTCOVER_SCHEME";

#[derive(Parser)]
#[command(name = "coastcover", version, about = "Coastal land-cover classification, accuracy assessment, and change analysis")]
struct Cli {
    /// Bound per-tile parallelism; outputs are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run-config file of `flag value` lines; CLI flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SchemeArg {
    /// Class scheme config (`id,name,R,G,B` lines); defaults to the
    /// COASTCOVER_SCHEME env var, then the built-in coastal palette.
    #[arg(long)]
    scheme: Option<PathBuf>,
}

impl SchemeArg {
    fn load(&self) -> Result<Arc<ClassScheme>> {
        let path = self
            .scheme
            .clone()
            .or_else(|| std::env::var(SCHEME_ENV).ok().map(PathBuf::from));
        Ok(Arc::new(match path {
            Some(p) => io::load_scheme(&p)?,
            None => ClassScheme::default_coastal(),
        }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Resample to a target resolution, match color levels to a
    /// reference image, and write a validity mask.
    Prep {
        #[arg(long, value_name = "IMAGE")]
        r#in: PathBuf,
        /// Radiometric reference image.
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Target resolution in m/pixel (e.g. 0.4); skip to keep the grid.
        #[arg(long)]
        resolution: Option<f64>,
        /// Treat this RGB value as nodata, e.g. `0,0,0`.
        #[arg(long, value_parser = parse_rgb)]
        nodata: Option<[u8; 3]>,
        /// Write the derived validity mask here.
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Slice a raster into fixed-size tiles on disk.
    Tile {
        #[arg(long, value_name = "IMAGE")]
        r#in: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
        size: u32,
        /// Input is a label raster (decoded through the scheme).
        #[arg(long)]
        labels: bool,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Train the native baseline classifier from an image/label pair.
    Train {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9)]
        window: u32,
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
        tile_size: u32,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Classify imagery with a trained baseline model.
    Classify {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
        tile_size: u32,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, value_parser = parse_rgb)]
        nodata: Option<[u8; 3]>,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Import an externally produced label raster (nearest-color decode).
    Import {
        #[arg(long, value_name = "IMAGE")]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Expected dimensions `WxH`; mismatches fail.
        #[arg(long, value_parser = parse_dims)]
        expect: Option<(u32, u32)>,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Majority-filter cleanup of a classified map.
    Filter {
        #[arg(long, value_name = "LABELS")]
        r#in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        radius: u32,
        #[arg(long, default_value_t = 1)]
        iterations: u32,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Random-point accuracy assessment against a reference map.
    Assess {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a JSON mirror of the report here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Per-class area table for one classified map.
    Area {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "epoch")]
        epoch: String,
        /// Append a merged row for this scheme merge group.
        #[arg(long)]
        merge: Option<String>,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        scheme: SchemeArg,
    },
    /// Before/after change table from two area CSVs.
    Change {
        #[arg(long)]
        t0: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "manual")]
        method: String,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Render label rasters to color maps; with --t0/--t1, write a
    /// triptych of both epochs plus a change mask.
    Render {
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        t0: Option<PathBuf>,
        #[arg(long)]
        t1: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArg,
    },
}

fn parse_rgb(s: &str) -> std::result::Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected R,G,B".into());
    }
    let mut rgb = [0u8; 3];
    for (i, p) in parts.iter().enumerate() {
        rgb[i] = p.trim().parse().map_err(|_| format!("bad color component {:?}", p))?;
    }
    Ok(rgb)
}

fn parse_dims(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((
        w.parse().map_err(|_| "bad width")?,
        h.parse().map_err(|_| "bad height")?,
    ))
}

/// Append `--flag value` pairs from a run-config file for flags not
/// already present on the command line.
fn apply_config(mut argv: Vec<String>, path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("{}: cannot read config", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(|c: char| c == '=' || c.is_whitespace())
            .with_context(|| format!("{}:{}: expected `flag value`", path.display(), lineno + 1))?;
        let flag = format!("--{}", key.trim());
        if !argv.iter().any(|a| a == &flag) {
            argv.push(flag);
            argv.push(value.trim().to_string());
        }
    }
    Ok(argv)
}

fn load_mask_arg(path: &Option<PathBuf>) -> Result<Option<MaskRaster>> {
    Ok(match path {
        Some(p) => Some(io::load_mask(p)?),
        None => None,
    })
}

fn write_report(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("{}: cannot write", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("failed to configure thread pool")?;
    }
    match cli.command {
        Command::Prep { r#in, r#ref, out, resolution, nodata, mask_out } => {
            let mut src = io::load_image(&r#in)?;
            let reference = io::load_image(&r#ref)?;
            if let Some(res) = resolution {
                src = resample_image(&src, res)?;
            }
            let src_mask = build_mask(&src, nodata);
            let ref_mask = build_mask(&reference, nodata);
            let matched = match_color_levels(&src, &reference, Some(&src_mask), Some(&ref_mask))?;
            io::save_image(&out, &matched)?;
            if let Some(mp) = mask_out {
                io::save_mask(&mp, &src_mask)?;
            }
        }
        Command::Tile { r#in, out_dir, size, labels, scheme } => {
            if labels {
                let s = scheme.load()?;
                let lab = io::load_labels(&r#in, &s)?;
                let tiles = tile_labels(&lab, size)?;
                save_tileset(&out_dir, &tiles, lab.width(), lab.height())?;
            } else {
                let img = io::load_image(&r#in)?;
                let tiles = tile_image(&img, size)?;
                save_tileset(&out_dir, &tiles, img.width(), img.height())?;
            }
        }
        Command::Train { image, labels, out, window, tile_size, scheme } => {
            let s = scheme.load()?;
            let img = io::load_image(&image)?;
            let lab = io::load_labels(&labels, &s)?;
            let pairs = pair_tiles(tile_image(&img, tile_size)?, tile_labels(&lab, tile_size)?)?;
            let model = train_baseline(&pairs, window)?;
            save_model(&out, &model)?;
        }
        Command::Classify { image, model, out, floor, tile_size, mask, nodata, scheme } => {
            let s = scheme.load()?;
            let img = io::load_image(&image)?;
            let m = load_model(&model)?;
            let explicit = load_mask_arg(&mask)?;
            let derived = nodata.map(|nd| build_mask(&img, Some(nd)));
            let effective = explicit.or(derived);
            let labels = classify_raster(&m, &img, &s, effective.as_ref(), tile_size, floor)?;
            io::save_labels(&out, &labels)?;
        }
        Command::Import { r#in, out, expect, scheme } => {
            let s = scheme.load()?;
            let labels = import_external_labels(&r#in, &s, expect)?;
            io::save_labels(&out, &labels)?;
        }
        Command::Filter { r#in, out, radius, iterations, scheme } => {
            let s = scheme.load()?;
            let labels = io::load_labels(&r#in, &s)?;
            io::save_labels(&out, &majority_filter(&labels, radius, iterations))?;
        }
        Command::Assess { r#ref, pred, mask, n, seed, out, json, scheme } => {
            let s = scheme.load()?;
            let reference = io::load_labels(&r#ref, &s)?;
            let predicted = io::load_labels(&pred, &s)?;
            let m = match load_mask_arg(&mask)? {
                Some(m) => m,
                None => MaskRaster::all_valid(reference.width(), reference.height()),
            };
            let sample = sample_points(&m, n, seed)?;
            let cm = build_confusion(&reference, &predicted, &sample)?;
            let report = assessment_report(&cm, &s, n)?;
            write_report(&out, &render_assessment_csv(&report))?;
            if let Some(jp) = json {
                write_report(&jp, &render_assessment_json(&report))?;
            }
        }
        Command::Area { labels, out, epoch, merge, format, scheme } => {
            let s = scheme.load()?;
            let lab = io::load_labels(&labels, &s)?;
            let table = class_areas(&lab, &epoch, merge.as_deref())?;
            let rendered = match format.as_str() {
                "csv" => render_area_csv(&table),
                "json" => render_area_json(&table),
                other => bail!("unknown report format: {}", other),
            };
            write_report(&out, &rendered)?;
        }
        Command::Change { t0, t1, out, method, format } => {
            let read = |p: &Path, epoch: &str| -> Result<_> {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("{}: cannot read area table", p.display()))?;
                Ok(parse_area_csv(epoch, &text)?)
            };
            let a0 = read(&t0, "t0")?;
            let a1 = read(&t1, "t1")?;
            let report = change_table(&a0, &a1, &method);
            let rendered = match format.as_str() {
                "csv" => render_change_csv(&report),
                "json" => render_change_json(&report),
                other => bail!("unknown report format: {}", other),
            };
            write_report(&out, &rendered)?;
        }
        Command::Render { labels, t0, t1, out, out_dir, scheme } => {
            let s = scheme.load()?;
            match (labels, t0, t1) {
                (Some(lp), None, None) => {
                    let out = out.context("--out is required with --labels")?;
                    let lab = io::load_labels(&lp, &s)?;
                    io::save_image(&out, &encode_labels(&lab)?)?;
                }
                (None, Some(p0), Some(p1)) => {
                    let dir = out_dir.context("--out-dir is required with --t0/--t1")?;
                    fs::create_dir_all(&dir)?;
                    let l0 = io::load_labels(&p0, &s)?;
                    let l1 = io::load_labels(&p1, &s)?;
                    if l0.width() != l1.width() || l0.height() != l1.height() {
                        bail!("epoch rasters have different dimensions");
                    }
                    io::save_image(&dir.join("t0.png"), &encode_labels(&l0)?)?;
                    io::save_image(&dir.join("t1.png"), &encode_labels(&l1)?)?;
                    let changed: Vec<bool> = l0
                        .labels()
                        .iter()
                        .zip(l1.labels())
                        .map(|(a, b)| a != b)
                        .collect();
                    let mask = MaskRaster::new(l0.width(), l0.height(), changed)?;
                    io::save_mask(&dir.join("change.png"), &mask)?;
                }
                _ => bail!("use either --labels with --out, or --t0 and --t1 with --out-dir"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut argv: Vec<String> = std::env::args().collect();
    if let Some(pos) = argv.iter().position(|a| a == "--config") {
        if let Some(path) = argv.get(pos + 1).cloned() {
            match apply_config(argv, Path::new(&path)) {
                Ok(expanded) => argv = expanded,
                Err(e) => {
                    eprintln!("error: {:#}", e);
                    return ExitCode::from(1);
                }
            }
        }
    }
    let cli = Cli::parse_from(argv);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
