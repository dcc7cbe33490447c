//! Effective run configuration: defaults, then the config file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use grfkit::grfgen::{GrfSettings, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use grfkit::{Category, FusionMode, ReportFormat};
use serde::{Deserialize, Serialize};

use crate::cli::{FusedFormatArg, GlobalArgs, ModeArg, ReportFormatArg};
use crate::error::CliError;

pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const DEFAULT_BINS: usize = 10;

/// Flat key-value config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub metadata_csv: Option<PathBuf>,
    pub postcode_table: Option<PathBuf>,
    pub image_dir: Option<PathBuf>,
    pub grf_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub categories: Option<Vec<String>>,
    pub i: Option<u32>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub bins: Option<usize>,
    pub fusion_mode: Option<String>,
    pub fused_format: Option<String>,
    pub report_format: Option<String>,
    pub jobs: Option<usize>,
    pub seed_dob: Option<u64>,
    pub seed_gender: Option<u64>,
    pub seed_hdd: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusedFormat {
    Png,
    Raw,
    Both,
}

impl FusedFormat {
    pub fn png(self) -> bool {
        matches!(self, FusedFormat::Png | FusedFormat::Both)
    }

    pub fn raw(self) -> bool {
        matches!(self, FusedFormat::Raw | FusedFormat::Both)
    }
}

impl From<FusedFormatArg> for FusedFormat {
    fn from(a: FusedFormatArg) -> Self {
        match a {
            FusedFormatArg::Png => FusedFormat::Png,
            FusedFormatArg::Raw => FusedFormat::Raw,
            FusedFormatArg::Both => FusedFormat::Both,
        }
    }
}

/// Resolved settings, echoed as `run_config.json`.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub command: String,
    pub metadata_csv: Option<PathBuf>,
    pub postcode_table: Option<PathBuf>,
    pub image_dir: Option<PathBuf>,
    pub grf_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub categories: Vec<Category>,
    pub i: u32,
    pub width: usize,
    pub height: usize,
    pub bins: usize,
    pub fusion_mode: FusionMode,
    pub fused_format: FusedFormat,
    pub report_format: ReportFormat,
    pub seed_overrides: BTreeMap<Category, u64>,
    pub mask_inputs: Vec<PathBuf>,
    pub pred_dir: Option<PathBuf>,
    pub gt_dir: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    /// Worker count never affects outputs, so it is not echoed.
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub force: bool,
}

impl PipelineConfig {
    /// Defaults overlaid with the config file and global flags.
    pub fn from_sources(command: &str, global: &GlobalArgs) -> Result<(Self, FileConfig), CliError> {
        let file = match &global.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let mut seed_overrides = BTreeMap::new();
        for (cat, seed) in [(Category::Dob, file.seed_dob), (Category::Gender, file.seed_gender), (Category::Hdd, file.seed_hdd)] {
            if let Some(seed) = seed {
                seed_overrides.insert(cat, seed);
            }
        }
        for arg in &global.seed_overrides {
            let (cat, seed) = parse_seed_override(arg)?;
            seed_overrides.insert(cat, seed);
        }

        let categories = match &file.categories {
            Some(list) => parse_categories(list)?,
            None => Category::ALL.to_vec(),
        };
        let fusion_mode = match (global.mode, &file.fusion_mode) {
            (Some(ModeArg::SdfMean), _) => FusionMode::SdfMean,
            (Some(ModeArg::PixelMean), _) => FusionMode::PixelMean,
            (None, Some(s)) => s.parse().map_err(CliError::Usage)?,
            (None, None) => FusionMode::default(),
        };
        let fused_format = match file.fused_format.as_deref() {
            None | Some("both") => FusedFormat::Both,
            Some("png") => FusedFormat::Png,
            Some("raw") => FusedFormat::Raw,
            Some(other) => return Err(CliError::Usage(format!("unknown fused_format `{other}`"))),
        };
        let report_format = match &file.report_format {
            Some(s) => s.parse().map_err(CliError::Usage)?,
            None => ReportFormat::Json,
        };
        let jobs = global.jobs.or(file.jobs).unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        });

        let config = PipelineConfig {
            command: command.to_string(),
            metadata_csv: file.metadata_csv.clone(),
            postcode_table: file.postcode_table.clone(),
            image_dir: file.image_dir.clone(),
            grf_dir: file.grf_dir.clone(),
            output_dir: global.output.clone().or_else(|| file.output_dir.clone()),
            categories,
            i: global.i.or(file.i).unwrap_or(2),
            width: file.width.unwrap_or(DEFAULT_WIDTH),
            height: file.height.unwrap_or(DEFAULT_HEIGHT),
            bins: file.bins.unwrap_or(DEFAULT_BINS),
            fusion_mode,
            fused_format,
            report_format,
            seed_overrides,
            mask_inputs: Vec::new(),
            pred_dir: None,
            gt_dir: None,
            report_path: None,
            jobs: jobs.max(1),
            force: global.force,
        };
        Ok((config, file))
    }

    pub fn set_categories(&mut self, list: &Option<Vec<String>>) -> Result<(), CliError> {
        if let Some(list) = list {
            self.categories = parse_categories(list)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.categories.is_empty() {
            return Err(CliError::Usage("at least one category is required".into()));
        }
        if self.i < 1 {
            return Err(CliError::Usage("--i must be at least 1".into()));
        }
        if self.width < 2 || self.height < 2 {
            return Err(CliError::Usage(format!("GRF size must be at least 2x2, got {}x{}", self.width, self.height)));
        }
        if self.bins < 1 {
            return Err(CliError::Usage("bins must be at least 1".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Result<&Path, CliError> {
        self.output_dir.as_deref().ok_or_else(|| CliError::Usage("--output (or output_dir) is required".into()))
    }

    pub fn metadata_csv(&self) -> Result<&Path, CliError> {
        self.metadata_csv.as_deref().ok_or_else(|| CliError::Usage("--metadata (or metadata_csv) is required".into()))
    }

    pub fn grf_settings(&self) -> GrfSettings {
        GrfSettings { i: self.i, width: self.width, height: self.height, seed_overrides: self.seed_overrides.clone() }
    }

    /// GRF directory: explicit, else `<output>/grf`.
    pub fn grf_dir(&self) -> Result<PathBuf, CliError> {
        match &self.grf_dir {
            Some(d) => Ok(d.clone()),
            None => Ok(self.output_dir()?.join("grf")),
        }
    }

    pub fn write_run_config(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(RUN_CONFIG_FILE);
        let mut body = serde_json::to_string_pretty(self).expect("config serialises");
        body.push('\n');
        fs::write(&path, body).map_err(|e| CliError::io(path, e))
    }
}

pub fn report_format(arg: Option<ReportFormatArg>, fallback: ReportFormat) -> ReportFormat {
    match arg {
        Some(ReportFormatArg::Json) => ReportFormat::Json,
        Some(ReportFormatArg::Csv) => ReportFormat::Csv,
        None => fallback,
    }
}

fn parse_categories(list: &[String]) -> Result<Vec<Category>, CliError> {
    let mut cats: Vec<Category> =
        list.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect::<Result<_, _>>().map_err(CliError::Usage)?;
    cats.sort();
    cats.dedup();
    Ok(cats)
}

fn parse_seed_override(arg: &str) -> Result<(Category, u64), CliError> {
    let (cat, seed) =
        arg.split_once('=').ok_or_else(|| CliError::Usage(format!("seed override `{arg}` is not CAT=U64")))?;
    let cat: Category = cat.parse().map_err(CliError::Usage)?;
    let seed = seed.trim().parse().map_err(|_| CliError::Usage(format!("seed `{seed}` is not an unsigned integer")))?;
    Ok((cat, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_override_parsing() {
        assert_eq!(parse_seed_override("dob=5").unwrap(), (Category::Dob, 5));
        assert!(parse_seed_override("dob").is_err());
        assert!(parse_seed_override("age=5").is_err());
        assert!(parse_seed_override("hdd=-1").is_err());
    }

    #[test]
    fn categories_are_sorted_and_deduplicated() {
        let list = vec!["hdd".to_string(), "dob".into(), "HDD".into()];
        assert_eq!(parse_categories(&list).unwrap(), vec![Category::Dob, Category::Hdd]);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "i = 5\noutput_dir = \"from_file\"\nseed_dob = 9\nfusion_mode = \"pixel_mean\"\n").unwrap();
        let global = GlobalArgs {
            config: Some(path.clone()),
            i: Some(2),
            seed_overrides: vec!["dob=11".into()],
            ..GlobalArgs::default()
        };
        let (cfg, _) = PipelineConfig::from_sources("stats", &global).unwrap();
        assert_eq!(cfg.i, 2);
        assert_eq!(cfg.output_dir.as_deref(), Some(Path::new("from_file")));
        assert_eq!(cfg.seed_overrides[&Category::Dob], 11);
        assert_eq!(cfg.fusion_mode, FusionMode::PixelMean);
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "colour = 3\n").unwrap();
        let global = GlobalArgs { config: Some(path), ..GlobalArgs::default() };
        assert!(matches!(PipelineConfig::from_sources("stats", &global), Err(CliError::Usage(_))));
    }
}
