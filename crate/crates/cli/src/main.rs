//! `clothflat`: synthetic wrinkle datasets, wrinkle extraction, PCA,
//! action regression and rendering from the command line.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use clothflat::model::OptimizerKind;
use clothflat::Rect;

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(author, version, about, long_about = None)]
struct Cli {
    /// key = value settings file; unspecified keys keep their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// print the effective configuration and exit
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic dataset: scenes, wrinkle maps and manifest
    Generate {
        /// output directory [default: data_dir]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the wrinkle map of one scene
    Process {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// x,y,width,height of the cloth [default: the frame's cloth area for
        /// scene-sized images, otherwise the whole image]
        #[arg(long, value_parser = parse_crop)]
        crop: Option<Rect>,
    },
    /// Fit PCA on a dataset's wrinkle maps
    Pca {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// force the component count instead of the variance rule
        #[arg(long)]
        k: Option<usize>,
    },
    /// Fit PCA and train the action network
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// directory for pca.pca1, model.mlp1 and history.csv [default: run_dir]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        optimizer: Option<OptimizerArg>,
    },
    /// Score a trained model and write a per-sample report
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        pca: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Subset::Val)]
        subset: Subset,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict the pull action for one scene, printed as `x y d theta`
    Predict {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        pca: Option<PathBuf>,
        #[arg(long, value_parser = parse_crop)]
        crop: Option<Rect>,
    },
    /// Draw actual and predicted actions from a report as SVG
    Render {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Rmsprop,
    Adam,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Rmsprop => OptimizerKind::RmsProp,
            OptimizerArg::Adam => OptimizerKind::Adam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    Train,
    Val,
    All,
}

fn parse_crop(s: &str) -> Result<Rect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad crop field {p:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Rect::new(x, y, w, h)),
        _ => Err("crop must be x,y,width,height with positive size".into()),
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::parse(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_ref())?;
    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(());
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no command given; see --help");
    };
    match command {
        Command::Generate { out } => {
            let out = out.unwrap_or_else(|| cfg.data_dir.clone());
            commands::generate(&cfg, &out)
        }
        Command::Process { image, out, crop } => commands::process(&cfg, &image, &out, crop),
        Command::Pca { manifest, out, k } => {
            if k.is_some() {
                cfg.k = k;
            }
            let manifest = manifest.unwrap_or_else(|| commands::default_manifest(&cfg));
            let out = out.unwrap_or_else(|| cfg.run_dir.join(commands::PCA_FILE));
            commands::pca(&cfg, &manifest, &out)
        }
        Command::Train { manifest, out, k, optimizer } => {
            if k.is_some() {
                cfg.k = k;
            }
            if let Some(o) = optimizer {
                cfg.hyper.optimizer = o.into();
            }
            let manifest = manifest.unwrap_or_else(|| commands::default_manifest(&cfg));
            let out = out.unwrap_or_else(|| cfg.run_dir.clone());
            commands::train(&cfg, &manifest, &out)
        }
        Command::Eval { model, pca, manifest, subset, report } => {
            let model = model.unwrap_or_else(|| cfg.run_dir.join(commands::MODEL_FILE));
            let pca = pca.unwrap_or_else(|| cfg.run_dir.join(commands::PCA_FILE));
            let manifest = manifest.unwrap_or_else(|| commands::default_manifest(&cfg));
            let report = report.unwrap_or_else(|| cfg.run_dir.join(commands::REPORT_FILE));
            commands::eval(&cfg, &model, &pca, &manifest, subset, &report)
        }
        Command::Predict { image, model, pca, crop } => {
            let model = model.unwrap_or_else(|| cfg.run_dir.join(commands::MODEL_FILE));
            let pca = pca.unwrap_or_else(|| cfg.run_dir.join(commands::PCA_FILE));
            commands::predict(&cfg, &model, &pca, &image, crop)
        }
        Command::Render { report, out } => {
            let report = report.unwrap_or_else(|| cfg.run_dir.join(commands::REPORT_FILE));
            let out = out.unwrap_or_else(|| cfg.run_dir.join(commands::SVG_FILE));
            commands::render(&cfg, &report, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
