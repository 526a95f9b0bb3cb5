use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfbm::app::{self, CliError, RunOptions};
use sfbm::config::{
    constants_preset, simulate_preset, validate_preset, ConstantsConfig, SimulateConfig, ValidateConfig,
};

#[derive(Parser)]
#[command(name = "sfbm", version, about = "Excursion probabilities of spherical fractional Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration instead of a file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Overrides the configuration's seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "INT")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            workers: self.workers.unwrap_or_else(app::default_workers),
            out: self.out.clone(),
        }
    }

    fn load<T: serde::de::DeserializeOwned>(&self, preset: fn(&str) -> Option<T>) -> Result<T, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => app::load_config(path),
            (None, Some(name)) => preset(name).ok_or_else(|| CliError::Config(format!("--preset: unknown preset {name:?}"))),
            (None, None) => Err(CliError::Config("--config or --preset is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate path maxima on a grid (presets: circle-small).
    Simulate(Common),
    /// Estimate a Pickands, Piterbarg, M or M_hat constant (presets: pickands-quick,
    /// pickands-h1, piterbarg-steep, piterbarg-circle, m-hat-arc).
    Constants(Common),
    /// Compare simulated excursion probabilities with the asymptotic formula (presets:
    /// circle, arc).
    Validate {
        #[command(flatten)]
        common: Common,
        /// Tabulate the formula without simulating.
        #[arg(long)]
        asymptotics_only: bool,
    },
    /// Check the one-dimensional disc formula against the arc formula.
    Consistency {
        /// Random (beta, a) pairs on top of the two fixed cases.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn config_dir(path: &Option<PathBuf>) -> PathBuf {
    path.as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut log = io::stdout().lock();
    match cli.command {
        Command::Simulate(c) => {
            let cfg: SimulateConfig = c.load(simulate_preset)?;
            app::simulate(cfg, &c.options(), &mut log)
        }
        Command::Constants(c) => {
            let cfg: ConstantsConfig = c.load(constants_preset)?;
            app::constants(cfg, &c.options(), &mut log)
        }
        Command::Validate {
            common,
            asymptotics_only,
        } => {
            let mut cfg: ValidateConfig = common.load(validate_preset)?;
            cfg.resolve_paths(&config_dir(&common.config));
            cfg.asymptotics_only |= asymptotics_only;
            app::validate(cfg, &common.options(), &mut log)
        }
        Command::Consistency { pairs, seed, out } => {
            let opts = RunOptions { seed, workers: 1, out };
            app::consistency(pairs, &opts, &mut log)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
