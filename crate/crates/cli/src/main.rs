mod cli;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command, GenArgs, MetadataArgs};
use config::{report_format, PipelineConfig};
use error::{CliError, EXIT_OK, EXIT_USAGE};

const LOG_ENV: &str = "GRF_TOOLKIT_LOG";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            return ExitCode::from(code as u8);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grf-toolkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn apply_metadata(cfg: &mut PipelineConfig, args: &MetadataArgs) -> Result<(), CliError> {
    if let Some(p) = &args.metadata {
        cfg.metadata_csv = Some(p.clone());
    }
    if let Some(p) = &args.postcode_table {
        cfg.postcode_table = Some(p.clone());
    }
    if let Some(b) = args.bins {
        cfg.bins = b;
    }
    cfg.set_categories(&args.categories)
}

fn apply_gen(cfg: &mut PipelineConfig, args: &GenArgs) -> Result<(), CliError> {
    apply_metadata(cfg, &args.metadata)?;
    if let Some(w) = args.width {
        cfg.width = w;
    }
    if let Some(h) = args.height {
        cfg.height = h;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = match &cli.command {
        Command::Stats(_) => "stats",
        Command::GenGrf(_) => "gen-grf",
        Command::Fuse(_) => "fuse",
        Command::MergeMasks(_) => "merge-masks",
        Command::Eval(_) => "eval",
        Command::Pipeline(_) => "pipeline",
    };
    let (mut cfg, _) = PipelineConfig::from_sources(name, &cli.global)?;

    match &cli.command {
        Command::Stats(args) => apply_metadata(&mut cfg, args)?,
        Command::GenGrf(args) => apply_gen(&mut cfg, args)?,
        Command::Fuse(args) => {
            if let Some(d) = &args.image_dir {
                cfg.image_dir = Some(d.clone());
            }
            if let Some(d) = &args.grf_dir {
                cfg.grf_dir = Some(d.clone());
            }
            if let Some(f) = args.format {
                cfg.fused_format = f.into();
            }
            cfg.set_categories(&args.categories)?;
        }
        Command::MergeMasks(args) => cfg.mask_inputs = args.inputs.clone(),
        Command::Eval(args) => {
            cfg.pred_dir = args.pred.clone();
            cfg.gt_dir = args.gt.clone();
            cfg.report_path = args.out.clone();
            cfg.report_format = report_format(args.format, cfg.report_format);
        }
        Command::Pipeline(args) => {
            apply_gen(&mut cfg, &args.gen)?;
            if let Some(d) = &args.image_dir {
                cfg.image_dir = Some(d.clone());
            }
            if let Some(f) = args.format {
                cfg.fused_format = f.into();
            }
        }
    }
    cfg.validate()?;
    log::info!("{name}: jobs={} force={}", cfg.jobs, cfg.force);

    match cli.command {
        Command::Stats(_) => commands::stats::run(&cfg),
        Command::GenGrf(_) => commands::gen_grf::run(&cfg),
        Command::Fuse(_) => commands::fuse::run(&cfg),
        Command::MergeMasks(_) => commands::merge_masks::run(&cfg),
        Command::Eval(_) => commands::eval::run(&cfg),
        Command::Pipeline(_) => {
            commands::stats::run(&cfg)?;
            commands::gen_grf::run(&cfg)?;
            commands::fuse::run(&cfg)
        }
    }
}
