use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use grfkit::metrics::{evaluate_dataset, pair_ids, write_report};
use grfkit::{BinaryMask, ReportFormat};

use super::{create_dir, file_stem, list_files, run_parallel};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub fn default_report_name(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Json => "eval.json",
        ReportFormat::Csv => "eval.csv",
    }
}

pub fn run(cfg: &PipelineConfig) -> Result<(), CliError> {
    let pred_dir = cfg.pred_dir.as_deref().ok_or_else(|| CliError::Usage("--pred is required".into()))?;
    let gt_dir = cfg.gt_dir.as_deref().ok_or_else(|| CliError::Usage("--gt is required".into()))?;
    let report_path: PathBuf = match (&cfg.report_path, &cfg.output_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(default_report_name(cfg.report_format)),
        (None, None) => return Err(CliError::Usage("eval needs --out or --output".into())),
    };

    let pred = list_files(pred_dir, &["png"])?;
    let gt = list_files(gt_dir, &["png"])?;
    let names = pair_ids(pred.keys().map(String::as_str), gt.keys().map(String::as_str))?;

    let loaded = run_parallel(cfg.jobs, &names, |name| -> Result<(String, BinaryMask, BinaryMask), CliError> {
        let load = |files: &BTreeMap<String, PathBuf>| {
            let path = &files[name];
            BinaryMask::load_png(path).map_err(|e| CliError::input(path, e))
        };
        Ok((file_stem(name).to_string(), load(&pred)?, load(&gt)?))
    });
    let pairs = loaded.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = evaluate_dataset(&pairs)?;

    let report_dir = cfg
        .output_dir
        .clone()
        .or_else(|| report_path.parent().filter(|p| !p.as_os_str().is_empty()).map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    create_dir(&report_dir)?;
    if let Some(parent) = report_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_report(&report, cfg.report_format, &report_path)?;

    let s = &report.summary;
    println!(
        "eval: {} images  mean IoU {:.4}  DSC {:.4}  FPE {:.4}  FNE {:.4} -> {}",
        s.count,
        s.mean_iou,
        s.mean_dsc,
        s.mean_fpe,
        s.mean_fne,
        report_path.display()
    );
    cfg.write_run_config(&report_dir)
}
