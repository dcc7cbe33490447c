use std::fs;
use std::path::PathBuf;

use grfkit::grfgen::{grf_png_name, grf_sidecar_name};
use grfkit::{field_to_greyscale, grf_params_for_record, synthesize_field, Category, GrfSidecar, MetadataRecord};

use super::{create_dir, finish_with_failures, fit_stats, load_records, run_parallel};
use crate::config::PipelineConfig;
use crate::error::CliError;

enum Outcome {
    Written,
    Skipped,
}

pub fn run(cfg: &PipelineConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let records = load_records(cfg)?;
    let fitted = fit_stats(&records, &cfg.categories)?;
    let settings = cfg.grf_settings();
    let grf_dir: PathBuf = cfg.grf_dir()?;
    create_dir(&grf_dir)?;

    let items: Vec<(&MetadataRecord, Category)> =
        records.iter().flat_map(|r| cfg.categories.iter().map(move |&c| (r, c))).collect();

    let results = run_parallel(cfg.jobs, &items, |&(record, category)| -> Result<Outcome, String> {
        let png = grf_dir.join(grf_png_name(&record.image_id, category));
        let sidecar = grf_dir.join(grf_sidecar_name(&record.image_id, category));
        if !cfg.force && png.is_file() && sidecar.is_file() {
            return Ok(Outcome::Skipped);
        }
        let norm = fitted.get(&category).map(|(_, s)| s);
        let params = grf_params_for_record(category, record, norm, &settings)
            .map_err(|e| format!("{}.{category}: {e}", record.image_id))?;
        let image = field_to_greyscale(&synthesize_field(&params));
        image.save_png(&png).map_err(|e| format!("{}: {e}", png.display()))?;
        fs::write(&sidecar, GrfSidecar::from(&params).to_json()).map_err(|e| format!("{}: {e}", sidecar.display()))?;
        log::debug!("wrote {}", png.display());
        Ok(Outcome::Written)
    });

    let (mut written, mut skipped, mut failures) = (0, 0, Vec::new());
    for r in results {
        match r {
            Ok(Outcome::Written) => written += 1,
            Ok(Outcome::Skipped) => skipped += 1,
            Err(e) => failures.push(e),
        }
    }
    println!("gen-grf: {written} written, {skipped} skipped, {} failed -> {}", failures.len(), grf_dir.display());
    cfg.write_run_config(out)?;
    finish_with_failures("gen-grf", failures)
}
