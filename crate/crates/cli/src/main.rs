mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::AblationMode;
use crate::config::{ClassifierChoice, RunConfig};

/// Road surface condition classifier: synthetic data, CNN training,
/// ablation sweeps and weather fusion.
#[derive(Parser)]
#[command(name = "rsc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic labeled dataset with its weather table.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the CNN on an image directory.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the channel growth factor or the dense widths.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: AblationMode,
    },
    /// Compare image-only and weather-fused classification.
    Fuse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `fusion.classifier`.
        #[arg(long, value_enum)]
        classifier: Option<ClassifierChoice>,
    },
    /// Class counts, null rates and weather moments of a dataset.
    Summary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> rsc_core::Result<()> {
    let config = |c: &Common| RunConfig::load(c.config.as_deref()).map(|r| r.resolve(c.seed));
    match cli.command {
        Command::Generate { common, out } => commands::cmd_generate(&config(&common)?, &out),
        Command::Train { common, data, out } => commands::cmd_train(&config(&common)?, &data, &out),
        Command::Ablate { common, data, out, mode } => commands::cmd_ablate(&config(&common)?, &data, &out, mode),
        Command::Fuse {
            common,
            model,
            data,
            out,
            classifier,
        } => commands::cmd_fuse(&config(&common)?, &model, &data, &out, classifier),
        Command::Summary { common, data, out } => commands::cmd_summary(&config(&common)?, &data, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RSC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
