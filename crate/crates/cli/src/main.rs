mod commands;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cinefx::config::GlobalConfig;

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "cinefx", version, about = "Photographic effect simulation, curation and scoring")]
struct Cli {
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Shorthand per-effect parameters, applied to every frame.
#[derive(Args, Debug, Default, Clone, Copy)]
pub struct EffectFlags {
    #[arg(long, value_name = "K")]
    pub bokeh: Option<f64>,
    #[arg(long, value_name = "D")]
    pub focus: Option<f64>,
    #[arg(long, value_name = "F")]
    pub zoom: Option<f64>,
    #[arg(long, value_name = "S", allow_negative_numbers = true)]
    pub exposure: Option<f64>,
    #[arg(long = "color-temp", value_name = "T", allow_negative_numbers = true)]
    pub color_temp: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render one target clip from a source clip and a signal.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Signal JSON; a single-frame signal is held for the whole clip.
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Disparity frame directory, needed when K > 0.
        #[arg(long)]
        disparity: Option<PathBuf>,
        #[command(flatten)]
        effects: EffectFlags,
    },
    /// Cut, partition and filter the videos of a manifest.
    Curate {
        #[arg(long)]
        manifest: PathBuf,
        /// Verdict log, one line per clip.
        #[arg(long)]
        out: PathBuf,
        /// Also write the kept clips as a `pairs` input manifest.
        #[arg(long)]
        kept: Option<PathBuf>,
    },
    /// Displacement between two frames, or the information scores of a clip directory.
    Score {
        a: PathBuf,
        b: Option<PathBuf>,
    },
    /// Build a paired dataset from a manifest of clips.
    Pairs {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sampling strategy TOML, replacing the config's `sampling` table.
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Per-effect correlation of an output clip against a pair record.
    Eval {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        source: PathBuf,
        /// Record file (one JSON record per line).
        #[arg(long)]
        record: PathBuf,
        /// Record id, when the file holds several.
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        disparity: Option<PathBuf>,
        /// Correlate against the unquantized pseudo ground truth.
        #[arg(long)]
        no_quantize: bool,
    },
    /// Run the attention invariant suite.
    AttnCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn load_config(cli: &Cli) -> CliResult<GlobalConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => GlobalConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Simulate {
            input,
            out,
            signal,
            disparity,
            effects,
        } => commands::simulate(&cfg, &input, &out, signal.as_deref(), disparity.as_deref(), effects),
        Command::Curate { manifest, out, kept } => commands::curate(&cfg, &manifest, &out, kept.as_deref()),
        Command::Score { a, b } => commands::score(&cfg, &a, b.as_deref()),
        Command::Pairs {
            manifest,
            out,
            strategy,
        } => commands::pairs(&cfg, &manifest, &out, strategy.as_deref()),
        Command::Eval {
            output,
            source,
            record,
            id,
            disparity,
            no_quantize,
        } => commands::eval(
            &cfg,
            &output,
            &source,
            &record,
            id.as_deref(),
            disparity.as_deref(),
            !no_quantize,
        ),
        Command::AttnCheck { trials } => commands::attn_check(&cfg, trials),
    }
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
