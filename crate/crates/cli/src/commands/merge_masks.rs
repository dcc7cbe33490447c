use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use grfkit::{average_merge, BinaryMask};

use super::{create_dir, finish_with_failures, list_files, run_parallel};
use crate::config::PipelineConfig;
use crate::error::CliError;

/// Fuses same-named masks across every input directory into the output directory.
pub fn run(cfg: &PipelineConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    if cfg.mask_inputs.is_empty() {
        return Err(CliError::Usage("merge-masks needs at least one --input directory".into()));
    }
    let listings: Vec<BTreeMap<String, PathBuf>> =
        cfg.mask_inputs.iter().map(|d| list_files(d, &["png"])).collect::<Result<_, _>>()?;

    let union: BTreeSet<&String> = listings.iter().flat_map(|l| l.keys()).collect();
    let mut differences = Vec::new();
    for (dir, listing) in cfg.mask_inputs.iter().zip(&listings) {
        let missing: Vec<&str> = union.iter().filter(|n| !listing.contains_key(**n)).map(|n| n.as_str()).collect();
        if !missing.is_empty() {
            differences.push(format!("{} is missing {missing:?}", dir.display()));
        }
    }
    if !differences.is_empty() {
        return Err(CliError::Validation(format!("mask directories differ: {}", differences.join("; "))));
    }
    create_dir(out)?;

    let names: Vec<&String> = union.into_iter().collect();
    let results = run_parallel(cfg.jobs, &names, |name| -> Result<(), String> {
        let masks = listings
            .iter()
            .map(|l| BinaryMask::load_png(&l[*name]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("{name}: {e}"))?;
        let fused = average_merge(&masks, cfg.fusion_mode).map_err(|e| format!("{name}: {e}"))?;
        fused.save_png(&out.join(name.as_str())).map_err(|e| format!("{name}: {e}"))
    });
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    println!(
        "merge-masks: {} of {} masks fused from {} director{} ({}) -> {}",
        names.len() - failures.len(),
        names.len(),
        cfg.mask_inputs.len(),
        if cfg.mask_inputs.len() == 1 { "y" } else { "ies" },
        cfg.fusion_mode,
        out.display()
    );
    cfg.write_run_config(out)?;
    finish_with_failures("merge-masks", failures)
}
