//! Command-line pipeline: one subcommand per stage with on-disk handoff.

pub mod config;
pub mod stages;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{ModelKind, PipelineConfig, SynthMode};
pub use stages::{cmd_explain, cmd_features, cmd_fexai, cmd_ingest, cmd_report, cmd_synth, cmd_train, Layout};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing input {path}: run `cdo-xai {producer}` first")]
    MissingInput { path: PathBuf, producer: &'static str },
    #[error("{0}")]
    Data(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        })*
    };
}

data_error!(
    crate::ingest::IngestError,
    crate::features::FeatureError,
    crate::forest::ForestError,
    crate::shapley::ShapError,
    crate::fexai::FexaiError,
    crate::synth::SynthError,
    serde_json::Error,
    csv::Error
);

#[derive(Debug, Parser)]
#[command(
    name = "cdo-xai",
    version,
    about = "Arrival CDO adherence pipeline with SHAP and fuzzy rule explanations"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Terminal area as `center_lat,center_lon,radius_nm`.
    #[arg(long, global = true)]
    pub tma: Option<String>,
    #[arg(long, global = true)]
    pub floor_ft: Option<f64>,
    /// Positive class of the High vs Not High scenario: `high` or `not-high`.
    #[arg(long, global = true)]
    pub positive_class: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic fleet: tracks, weather and ground truth.
    Synth {
        #[arg(long)]
        n_flights: Option<usize>,
        /// `geometric` or `rule`.
        #[arg(long)]
        mode: Option<String>,
        /// Rule file driving labels in rule mode (default: the built-in 14 rules).
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Clip raw tracks to the terminal area.
    Ingest {
        #[arg(long)]
        tracks: Option<PathBuf>,
    },
    /// Extract features, join weather and label adherence.
    Features {
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        weather: Option<PathBuf>,
    },
    /// Cross-validate the tree ensembles for each scenario.
    Train {
        #[arg(long)]
        scenario: Option<String>,
        /// Comma-separated subset of `rf,gb`.
        #[arg(long)]
        models: Option<String>,
    },
    /// Compute SHAP attributions, global importance and separability.
    Explain {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        models: Option<String>,
    },
    /// Extract and evaluate the fuzzy rule base.
    Fexai,
    /// Assemble metric tables, rule text and plots.
    Report,
}

/// Resolves the configuration: defaults, then the config file, then flags.
pub fn resolve_config(global: &GlobalArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &global.config {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        cfg.apply_text(&text)?;
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &global.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(tma) = &global.tma {
        let parts: Vec<&str> = tma.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "--tma expects `lat,lon,radius_nm`, got `{tma}`"
            )));
        }
        cfg.set("tma.center_lat", parts[0])?;
        cfg.set("tma.center_lon", parts[1])?;
        cfg.set("tma.radius_nm", parts[2])?;
    }
    if let Some(floor) = global.floor_ft {
        cfg.tma.altitude_floor_ft = floor;
    }
    if let Some(p) = &global.positive_class {
        cfg.high_positive = config::parse_positive(p)?;
    }
    Ok(cfg)
}

fn apply_selection(
    cfg: &mut PipelineConfig,
    scenario: &Option<String>,
    models: &Option<String>,
) -> Result<(), CliError> {
    if let Some(s) = scenario {
        cfg.set("scenario", s)?;
    }
    if let Some(m) = models {
        cfg.set("models", m)?;
    }
    Ok(())
}

/// Runs one parsed invocation and returns its one-line summary.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    let mut cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Synth { n_flights, mode, .. } => {
            if let Some(n) = n_flights {
                cfg.synth_n_flights = *n;
            }
            if let Some(m) = mode {
                cfg.set("synth.mode", m)?;
            }
        }
        Command::Train { scenario, models } | Command::Explain { scenario, models } => {
            apply_selection(&mut cfg, scenario, models)?
        }
        _ => {}
    }
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    match cli.command {
        Command::Synth { rules, .. } => cmd_synth(&cfg, &layout, rules.as_deref()),
        Command::Ingest { tracks } => cmd_ingest(&cfg, &layout, tracks.as_deref()),
        Command::Features { tracks, weather } => cmd_features(&cfg, &layout, tracks.as_deref(), weather.as_deref()),
        Command::Train { .. } => cmd_train(&cfg, &layout),
        Command::Explain { .. } => cmd_explain(&cfg, &layout),
        Command::Fexai => cmd_fexai(&cfg, &layout),
        Command::Report => cmd_report(&cfg, &layout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
