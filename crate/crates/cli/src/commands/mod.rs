pub mod eval;
pub mod fuse;
pub mod gen_grf;
pub mod merge_masks;
pub mod stats;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use grfkit::metadata::{minmax_fit, parse_metadata_csv, resolve_hdd, MetadataSchema};
use grfkit::{Category, MetadataRecord, NormalizationStats, PostcodeTable};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::CliError;

/// Files in `dir` whose extension is one of `extensions` (case-insensitive),
/// keyed by file name.
pub fn list_files(dir: &Path, extensions: &[&str]) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                files.insert(name.to_string(), path.clone());
            }
        }
    }
    Ok(files)
}

pub fn file_stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(stem, _)| stem)
}

/// Runs `f` over `items` on a pool of `jobs` threads, keeping input order.
pub fn run_parallel<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("falling back to sequential execution: {e}");
            items.iter().map(f).collect()
        }
    }
}

/// Reads and validates the metadata CSV, filling hdd from the postcode table
/// when hdd is one of the requested categories.
pub fn load_records(cfg: &PipelineConfig) -> Result<Vec<MetadataRecord>, CliError> {
    let path = cfg.metadata_csv()?;
    let file = fs::File::open(path).map_err(|e| CliError::input(path, e))?;
    let mut records = parse_metadata_csv(file, &MetadataSchema::default())
        .map_err(|e| CliError::input(path, e))?;
    if records.is_empty() {
        return Err(CliError::input(path, "no data rows"));
    }

    if cfg.categories.contains(&Category::Hdd) && records.iter().any(|r| r.hdd.is_none()) {
        let table_path = cfg.postcode_table.as_deref().ok_or_else(|| {
            let missing: Vec<&str> = records.iter().filter(|r| r.hdd.is_none()).map(|r| r.image_id.as_str()).collect();
            CliError::Ingest(format!(
                "lookup miss: no hdd value and no postcode table for records {missing:?}"
            ))
        })?;
        let table_file = fs::File::open(table_path).map_err(|e| CliError::input(table_path, e))?;
        let table = PostcodeTable::from_csv(table_file).map_err(|e| CliError::input(table_path, e))?;
        resolve_hdd(&mut records, &table)?;
    }
    log::info!("loaded {} metadata records from {}", records.len(), path.display());
    Ok(records)
}

/// Min-max statistics for every continuous category in the config, fitted on
/// the whole input group.
pub fn fit_stats(
    records: &[MetadataRecord],
    categories: &[Category],
) -> Result<BTreeMap<Category, (Vec<f64>, NormalizationStats)>, CliError> {
    let mut out = BTreeMap::new();
    for &cat in categories.iter().filter(|c| c.is_continuous()) {
        let values = records.iter().map(|r| r.scalar(cat)).collect::<Result<Vec<f64>, _>>()?;
        let stats = minmax_fit(&values)?;
        out.insert(cat, (values, stats));
    }
    Ok(out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value).expect("serialisable");
    body.push('\n');
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Prints collected per-item failures and turns them into one validation error.
pub fn finish_with_failures(command: &str, failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("{command}: {f}");
    }
    Err(CliError::Validation(format!("{command}: {} item(s) failed", failures.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem("a.b.png"), "a.b");
        assert_eq!(file_stem("plain"), "plain");
    }
}
