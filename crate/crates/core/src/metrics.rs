//! Segmentation metrics from pixel confusion counts.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maskfusion::BinaryMask;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch for `{image_id}`: prediction {pred_width}x{pred_height}, ground truth {gt_width}x{gt_height}")]
    Dimensions { image_id: String, pred_width: usize, pred_height: usize, gt_width: usize, gt_height: usize },
    #[error("no prediction/ground-truth pairs to evaluate")]
    Empty,
    #[error("unpaired images: missing ground truth for {missing_gt:?}, missing prediction for {missing_pred:?}")]
    Pairing { missing_gt: Vec<String>, missing_pred: Vec<String> },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialisation error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts, MetricsError> {
    confusion_named("", pred, gt)
}

fn confusion_named(image_id: &str, pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts, MetricsError> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(MetricsError::Dimensions {
            image_id: image_id.to_string(),
            pred_width: pred.width(),
            pred_height: pred.height(),
            gt_width: gt.width(),
            gt_height: gt.height(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `tp / (tp + fp + fn)`; 1.0 when both masks are empty.
pub fn iou(c: &ConfusionCounts) -> f64 {
    let denom = c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// `2 tp / (2 tp + fp + fn)`; 1.0 when both masks are empty.
pub fn dsc(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// `fp / (fp + tn)`; 0.0 on a zero denominator.
pub fn fpe(c: &ConfusionCounts) -> f64 {
    let denom = c.fp + c.tn;
    if denom == 0 {
        0.0
    } else {
        c.fp as f64 / denom as f64
    }
}

/// `fn / (fn + tp)`; 0.0 on a zero denominator.
pub fn fne(c: &ConfusionCounts) -> f64 {
    let denom = c.fn_ + c.tp;
    if denom == 0 {
        0.0
    } else {
        c.fn_ as f64 / denom as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub image_id: String,
    pub counts: ConfusionCounts,
    pub iou: f64,
    pub dsc: f64,
    pub fpe: f64,
    pub fne: f64,
}

impl EvalRecord {
    pub fn new(image_id: impl Into<String>, counts: ConfusionCounts) -> Self {
        EvalRecord {
            image_id: image_id.into(),
            counts,
            iou: iou(&counts),
            dsc: dsc(&counts),
            fpe: fpe(&counts),
            fne: fne(&counts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub count: usize,
    pub mean_iou: f64,
    pub mean_dsc: f64,
    pub mean_fpe: f64,
    pub mean_fne: f64,
}

/// Per-image records, sorted by image id, with unweighted means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub summary: EvalSummary,
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    pub fn from_records(mut records: Vec<EvalRecord>) -> Result<Self, MetricsError> {
        if records.is_empty() {
            return Err(MetricsError::Empty);
        }
        records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let n = records.len() as f64;
        let mean = |f: fn(&EvalRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let summary = EvalSummary {
            count: records.len(),
            mean_iou: mean(|r| r.iou),
            mean_dsc: mean(|r| r.dsc),
            mean_fpe: mean(|r| r.fpe),
            mean_fne: mean(|r| r.fne),
        };
        Ok(EvalReport { summary, records })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// Header, one row per record, and a closing `__mean__` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,tp,fp,fn,tn,iou,dsc,fpe,fne\n");
        let quote = |s: &str| {
            if s.contains([',', '"', '\n', '\r']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        for r in &self.records {
            let c = &r.counts;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                quote(&r.image_id),
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                r.iou,
                r.dsc,
                r.fpe,
                r.fne
            ));
        }
        let totals = self.records.iter().fold(ConfusionCounts::default(), |acc, r| ConfusionCounts {
            tp: acc.tp + r.counts.tp,
            fp: acc.fp + r.counts.fp,
            fn_: acc.fn_ + r.counts.fn_,
            tn: acc.tn + r.counts.tn,
        });
        let s = &self.summary;
        out.push_str(&format!(
            "__mean__,{},{},{},{},{},{},{},{}\n",
            totals.tp, totals.fp, totals.fn_, totals.tn, s.mean_iou, s.mean_dsc, s.mean_fpe, s.mean_fne
        ));
        out
    }
}

/// Evaluates `(image_id, pred, gt)` triples.
pub fn evaluate_dataset(pairs: &[(String, BinaryMask, BinaryMask)]) -> Result<EvalReport, MetricsError> {
    let records = pairs
        .iter()
        .map(|(id, pred, gt)| Ok(EvalRecord::new(id.clone(), confusion_named(id, pred, gt)?)))
        .collect::<Result<Vec<_>, MetricsError>>()?;
    EvalReport::from_records(records)
}

/// Matches two id sets, failing with every unmatched id on either side.
pub fn pair_ids<'a>(
    pred_ids: impl IntoIterator<Item = &'a str>,
    gt_ids: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<String>, MetricsError> {
    let pred: BTreeSet<&str> = pred_ids.into_iter().collect();
    let gt: BTreeSet<&str> = gt_ids.into_iter().collect();
    let missing_gt: Vec<String> = pred.difference(&gt).map(|s| s.to_string()).collect();
    let missing_pred: Vec<String> = gt.difference(&pred).map(|s| s.to_string()).collect();
    if !missing_gt.is_empty() || !missing_pred.is_empty() {
        return Err(MetricsError::Pairing { missing_gt, missing_pred });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(pred.into_iter().map(str::to_string).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (expected json or csv)")),
        }
    }
}

pub fn write_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<(), MetricsError> {
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    fs::write(path, body)?;
    Ok(())
}
