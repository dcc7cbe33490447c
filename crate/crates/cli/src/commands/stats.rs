use std::collections::BTreeMap;

use grfkit::metadata::distribution_report;
use grfkit::{Category, NormalizationStats};

use super::{create_dir, fit_stats, load_records, write_json};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub const NORMALIZATION_FILE: &str = "normalization.json";

pub fn histogram_file(category: Category) -> String {
    format!("{category}.histogram.json")
}

/// Writes `<category>.histogram.json` for each continuous category plus
/// `normalization.json` with every fitted group.
pub fn run(cfg: &PipelineConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let records = load_records(cfg)?;
    create_dir(out)?;

    let fitted = fit_stats(&records, &cfg.categories)?;
    let mut norm: BTreeMap<Category, NormalizationStats> = BTreeMap::new();
    for (cat, (values, stats)) in &fitted {
        let report = distribution_report(values, cfg.bins)?;
        write_json(&out.join(histogram_file(*cat)), &report)?;
        println!(
            "stats: {cat}: n={} min={} max={} skewness={:.4} excess_kurtosis={:.4}",
            stats.count, stats.min, stats.max, stats.skewness, stats.excess_kurtosis
        );
        norm.insert(*cat, *stats);
    }
    write_json(&out.join(NORMALIZATION_FILE), &norm)?;
    cfg.write_run_config(out)
}
