//! Command-line front end: argument parsing, config layering, run manifests.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;
use config::FileConfig;
use manifest::RunManifest;

/// Parses `argv` and runs the chosen command. Every successful run leaves a
/// `<command>.manifest.json` in the output directory.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    let name = match &cli.command {
        Command::Generate(_) => "generate",
        Command::Sample(_) => "sample",
        Command::Train(_) => "train",
        Command::Sweep(_) => "sweep",
        Command::Baseline(_) => "baseline",
        Command::Cluster(_) => "cluster",
    };
    std::fs::create_dir_all(&cli.common.out_dir)
        .with_context(|| format!("creating {}", cli.common.out_dir.display()))?;
    let args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut ctx = Ctx {
        file: FileConfig::load(cli.common.config.as_deref())?,
        manifest: RunManifest::start(name, args),
        common: cli.common.clone(),
    };
    if let Some(p) = &cli.common.config {
        ctx.manifest.input(p)?;
    }
    match &cli.command {
        Command::Generate(a) => commands::generate(&mut ctx, a),
        Command::Sample(a) => commands::sample(&mut ctx, a),
        Command::Train(a) => commands::train_cmd(&mut ctx, a),
        Command::Sweep(a) => commands::sweep(&mut ctx, a),
        Command::Baseline(a) => commands::baseline(&mut ctx, a),
        Command::Cluster(a) => commands::cluster(&mut ctx, a),
    }?;
    let path = ctx.common.out_dir.join(format!("{name}.manifest.json"));
    ctx.manifest.finish(&path)
}
