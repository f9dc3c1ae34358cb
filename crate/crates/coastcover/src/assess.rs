//! Random-point accuracy assessment: seeded sampling, confusion matrix,
//! overall accuracy, Cohen's kappa, producer's/user's/rand accuracy, and
//! class-merged views.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{LabelRaster, MaskRaster};
use crate::scheme::{ClassScheme, MergeGroup};

/// Deterministic set of distinct valid pixel coordinates, sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSample {
    pub points: Vec<(u32, u32)>,
    pub seed: u64,
    pub n_requested: usize,
}

/// Draw `n` distinct valid pixels uniformly without replacement using a
/// seeded generator. The canonical row-major ordering makes downstream
/// tallies independent of draw order.
pub fn sample_points(mask: &MaskRaster, n: usize, seed: u64) -> Result<PointSample> {
    let valid: Vec<u32> = (0..mask.width() * mask.height())
        .filter(|&i| mask.valid()[i as usize])
        .collect();
    if n < 1 || n > valid.len() {
        return Err(Error::SampleTooLarge { requested: n, available: valid.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<u32> = rand::seq::index::sample(&mut rng, valid.len(), n)
        .into_iter()
        .map(|i| valid[i])
        .collect();
    chosen.sort_unstable();
    let points = chosen
        .into_iter()
        .map(|i| (i % mask.width(), i / mask.width()))
        .collect();
    Ok(PointSample { points, seed, n_requested: n })
}

/// Reference-vs-predicted counts over scheme classes; the masked sentinel
/// is excluded and skipped points are reported separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    /// k*k counts, row = reference class, column = predicted class.
    pub counts: Vec<u64>,
    pub total: u64,
    pub skipped: u64,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix { class_names, counts: vec![0; k * k], total: 0, skipped: 0 }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    #[inline]
    pub fn count(&self, reference: usize, predicted: usize) -> u64 {
        self.counts[reference * self.n_classes() + predicted]
    }

    #[inline]
    pub fn add(&mut self, reference: usize, predicted: usize, n: u64) {
        let k = self.n_classes();
        self.counts[reference * k + predicted] += n;
        self.total += n;
    }

    pub fn row_sum(&self, r: usize) -> u64 {
        (0..self.n_classes()).map(|c| self.count(r, c)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n_classes()).map(|r| self.count(r, c)).sum()
    }
}

/// Tally reference vs predicted labels at the sampled points. Points
/// masked in either raster are skipped and counted in `skipped`.
pub fn build_confusion(
    reference: &LabelRaster,
    predicted: &LabelRaster,
    sample: &PointSample,
) -> Result<ConfusionMatrix> {
    if reference.width() != predicted.width() || reference.height() != predicted.height() {
        return Err(Error::DimensionMismatch(
            reference.width(),
            reference.height(),
            predicted.width(),
            predicted.height(),
        ));
    }
    if reference.scheme().classes() != predicted.scheme().classes() {
        return Err(Error::SchemeMismatch);
    }
    let scheme = reference.scheme();
    let masked = scheme.masked_id();
    let mut cm = ConfusionMatrix::new(
        scheme.classes().iter().map(|c| c.name.clone()).collect(),
    );
    for &(col, row) in &sample.points {
        let r = reference.label(col, row);
        let p = predicted.label(col, row);
        if r == masked || p == masked {
            cm.skipped += 1;
            continue;
        }
        cm.add(r as usize, p as usize, 1);
    }
    Ok(cm)
}

/// Fraction of assessed points on the diagonal.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let diag: u64 = (0..cm.n_classes()).map(|i| cm.count(i, i)).sum();
    Ok(diag as f64 / cm.total as f64)
}

/// Cohen's kappa; `None` when expected agreement is 1 (undefined).
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<Option<f64>> {
    if cm.total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let p_o = overall_accuracy(cm)?;
    let total = cm.total as f64;
    let p_e: f64 = (0..cm.n_classes())
        .map(|i| cm.row_sum(i) as f64 * cm.col_sum(i) as f64)
        .sum::<f64>()
        / (total * total);
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(None);
    }
    Ok(Some((p_o - p_e) / (1.0 - p_e)))
}

/// Producer's (recall), user's (precision), and rand accuracy of one class.
/// `None` marks an undefined metric (zero denominator), never 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class_name: String,
    pub producers_accuracy: Option<f64>,
    pub users_accuracy: Option<f64>,
    pub rand_accuracy: Option<f64>,
}

/// Per-class one-vs-rest metrics:
/// producers = TP/(TP+FN), users = TP/(TP+FP), rand = (TP+TN)/total.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> Result<Vec<ClassMetrics>> {
    if cm.total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut out = Vec::with_capacity(cm.n_classes());
    for c in 0..cm.n_classes() {
        let tp = cm.count(c, c);
        let fneg = cm.row_sum(c) - tp;
        let fpos = cm.col_sum(c) - tp;
        let tn = cm.total - tp - fneg - fpos;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        out.push(ClassMetrics {
            class_name: cm.class_names[c].clone(),
            producers_accuracy: ratio(tp, tp + fneg),
            users_accuracy: ratio(tp, tp + fpos),
            rand_accuracy: ratio(tp + tn, cm.total),
        });
    }
    Ok(out)
}

/// Sum the rows and columns of the group's member classes into a single
/// class named after the group. The total is preserved.
pub fn merge_classes(cm: &ConfusionMatrix, group: &MergeGroup) -> Result<ConfusionMatrix> {
    for &m in &group.members {
        if m as usize >= cm.n_classes() {
            return Err(Error::InvalidMergeMember(m));
        }
    }
    let k = cm.n_classes();
    // old index -> new index; members collapse onto the slot of the
    // smallest member id
    let anchor = *group.members.iter().min().unwrap() as usize;
    let mut names = Vec::new();
    let mut remap = vec![0usize; k];
    for old in 0..k {
        if group.members.contains(&(old as u8)) && old != anchor {
            continue;
        }
        remap[old] = names.len();
        if old == anchor && group.members.len() > 1 {
            names.push(group.name.clone());
        } else if old == anchor {
            names.push(group.name.clone());
        } else {
            names.push(cm.class_names[old].clone());
        }
    }
    for &m in &group.members {
        remap[m as usize] = remap[anchor];
    }
    let mut merged = ConfusionMatrix::new(names);
    for r in 0..k {
        for c in 0..k {
            let n = cm.count(r, c);
            if n > 0 {
                merged.add(remap[r], remap[c], n);
            }
        }
    }
    merged.skipped = cm.skipped;
    Ok(merged)
}

/// Table-shaped assessment report: overall + kappa + per-class metrics,
/// for the raw class view and every merged view.
#[derive(Debug, Clone, Serialize)]
pub struct AssessmentView {
    pub view: String,
    pub overall_accuracy: f64,
    pub kappa: Option<f64>,
    pub classes: Vec<ClassMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssessmentReport {
    pub n_requested: usize,
    pub used: u64,
    pub skipped: u64,
    pub views: Vec<AssessmentView>,
}

/// Build the full report: an "all_classes" view plus one view per merge
/// group of the scheme.
pub fn assessment_report(
    cm: &ConfusionMatrix,
    scheme: &ClassScheme,
    n_requested: usize,
) -> Result<AssessmentReport> {
    let mut views = vec![AssessmentView {
        view: "all_classes".into(),
        overall_accuracy: overall_accuracy(cm)?,
        kappa: cohen_kappa(cm)?,
        classes: per_class_metrics(cm)?,
    }];
    for group in scheme.merge_groups() {
        let merged = merge_classes(cm, group)?;
        views.push(AssessmentView {
            view: format!("merged_{}", group.name),
            overall_accuracy: overall_accuracy(&merged)?,
            kappa: cohen_kappa(&merged)?,
            classes: per_class_metrics(&merged)?,
        });
    }
    Ok(AssessmentReport { n_requested, used: cm.total, skipped: cm.skipped, views })
}

fn fmt_ratio(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.3}", x),
        None => "NA".into(),
    }
}

/// CSV rendering: one row per (view, class, metric) plus overall/kappa rows.
pub fn render_assessment_csv(report: &AssessmentReport) -> String {
    let mut out = String::from("view,class,metric,value\n");
    for v in &report.views {
        out.push_str(&format!("{},,overall_accuracy,{}\n", v.view, fmt_ratio(Some(v.overall_accuracy))));
        out.push_str(&format!("{},,kappa,{}\n", v.view, fmt_ratio(v.kappa)));
        for c in &v.classes {
            out.push_str(&format!("{},{},producers_accuracy,{}\n", v.view, c.class_name, fmt_ratio(c.producers_accuracy)));
            out.push_str(&format!("{},{},users_accuracy,{}\n", v.view, c.class_name, fmt_ratio(c.users_accuracy)));
            out.push_str(&format!("{},{},rand_accuracy,{}\n", v.view, c.class_name, fmt_ratio(c.rand_accuracy)));
        }
    }
    out.push_str(&format!("summary,,points_used,{}\n", report.used));
    out.push_str(&format!("summary,,points_skipped,{}\n", report.skipped));
    out
}

fn round3(v: Option<f64>) -> Option<f64> {
    v.map(|x| (x * 1000.0).round() / 1000.0)
}

/// JSON mirror of the CSV rendering: identical (3-decimal) numbers,
/// undefined metrics as null.
pub fn render_assessment_json(report: &AssessmentReport) -> String {
    let views: Vec<serde_json::Value> = report
        .views
        .iter()
        .map(|v| {
            serde_json::json!({
                "view": v.view,
                "overall_accuracy": round3(Some(v.overall_accuracy)),
                "kappa": round3(v.kappa),
                "classes": v.classes.iter().map(|c| serde_json::json!({
                    "class": c.class_name,
                    "producers_accuracy": round3(c.producers_accuracy),
                    "users_accuracy": round3(c.users_accuracy),
                    "rand_accuracy": round3(c.rand_accuracy),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "n_requested": report.n_requested,
        "points_used": report.used,
        "points_skipped": report.skipped,
        "views": views,
    });
    serde_json::to_string_pretty(&doc).expect("json serialization cannot fail") + "\n"
}
