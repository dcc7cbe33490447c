use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use grfkit::tensorfuse::{export_raw_tensor, merge_rgb_grf, write_fused_png};
use grfkit::{Category, GreyImage, RgbImage};

use super::{create_dir, file_stem, finish_with_failures, list_files, run_parallel};
use crate::config::PipelineConfig;
use crate::error::CliError;

const GRF_SUFFIX: &str = ".grf.png";

pub fn fused_png_name(image_id: &str, category: Category) -> String {
    format!("{image_id}.{category}.fused.png")
}

pub fn fused_raw_name(image_id: &str, category: Category) -> String {
    format!("{image_id}.{category}.grf4")
}

/// `<image_id>.<category>.grf.png` back to its parts.
fn parse_grf_name(name: &str) -> Option<(&str, Category)> {
    let stem = name.strip_suffix(GRF_SUFFIX)?;
    let (id, cat) = stem.rsplit_once('.')?;
    Some((id, cat.parse().ok()?))
}

struct Job {
    image_id: String,
    category: Category,
    rgb: PathBuf,
    grf: PathBuf,
}

pub fn run(cfg: &PipelineConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let image_dir = cfg.image_dir.as_deref().ok_or_else(|| CliError::Usage("--image-dir (or image_dir) is required".into()))?;
    let grf_dir = cfg.grf_dir()?;
    let fused_dir = out.join("fused");
    create_dir(&fused_dir)?;

    let mut rgb: BTreeMap<String, PathBuf> = BTreeMap::new();
    for (name, path) in list_files(image_dir, &["png", "jpg", "jpeg"])? {
        let id = file_stem(&name).to_string();
        if let Some(previous) = rgb.insert(id.clone(), path) {
            return Err(CliError::Validation(format!(
                "image id `{id}` has more than one RGB file (e.g. {})",
                previous.display()
            )));
        }
    }
    let mut grfs: BTreeMap<(String, Category), PathBuf> = BTreeMap::new();
    for (name, path) in list_files(&grf_dir, &["png"])? {
        if let Some((id, cat)) = parse_grf_name(&name) {
            if cfg.categories.contains(&cat) {
                grfs.insert((id.to_string(), cat), path);
            }
        }
    }

    let mut unmatched = Vec::new();
    let mut jobs = Vec::new();
    for (id, rgb_path) in &rgb {
        for &cat in &cfg.categories {
            match grfs.get(&(id.clone(), cat)) {
                Some(grf) => jobs.push(Job { image_id: id.clone(), category: cat, rgb: rgb_path.clone(), grf: grf.clone() }),
                None => unmatched.push(format!("{id}: no {cat} GRF image in {}", grf_dir.display())),
            }
        }
    }
    let orphan_ids: BTreeSet<&str> = grfs.keys().map(|(id, _)| id.as_str()).filter(|id| !rgb.contains_key(*id)).collect();
    for id in orphan_ids {
        unmatched.push(format!("{id}: GRF image without an RGB image in {}", image_dir.display()));
    }

    let format = cfg.fused_format;
    let results = run_parallel(cfg.jobs, &jobs, |job| -> Result<bool, String> {
        let png = fused_dir.join(fused_png_name(&job.image_id, job.category));
        let raw = fused_dir.join(fused_raw_name(&job.image_id, job.category));
        let done = (!format.png() || png.is_file()) && (!format.raw() || raw.is_file());
        if !cfg.force && done {
            return Ok(false);
        }
        let label = format!("{}.{}", job.image_id, job.category);
        let rgb = RgbImage::load(&job.rgb).map_err(|e| format!("{label}: {e}"))?;
        let grf = GreyImage::load(&job.grf).map_err(|e| format!("{label}: {e}"))?;
        let tensor = merge_rgb_grf(&rgb, &grf).map_err(|e| format!("{label}: {e}"))?;
        if format.png() {
            write_fused_png(&tensor, &png).map_err(|e| format!("{label}: {e}"))?;
        }
        if format.raw() {
            export_raw_tensor(&tensor, &raw).map_err(|e| format!("{label}: {e}"))?;
        }
        Ok(true)
    });

    let mut failures = unmatched;
    let (mut written, mut skipped) = (0, 0);
    for r in results {
        match r {
            Ok(true) => written += 1,
            Ok(false) => skipped += 1,
            Err(e) => failures.push(e),
        }
    }
    println!("fuse: {written} written, {skipped} skipped, {} failed -> {}", failures.len(), fused_dir.display());
    cfg.write_run_config(out)?;
    finish_with_failures("fuse", failures)
}
