use clap::{Parser, Subcommand};
use slipwave::config::{RunConfig, ScenarioKind};
use slipwave::error::{Error, Result};
use slipwave::{io, runner};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "slipwave", version, about = "Finite-wave-speed contact closures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario in the config and write its artifacts.
    Run {
        config: PathBuf,
        /// Output root; overrides SLIPWAVE_OUT_ROOT.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Tabulate the memory kernels for a string_kernels config.
    Kernels {
        config: PathBuf,
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", io::error_record(&err));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, out_root } => run(&config, out_root, None),
        Cmd::Kernels { config, out_root } => {
            run(&config, out_root, Some(ScenarioKind::StringKernels))
        }
        Cmd::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            runner::validate_config(&cfg)?;
            println!("ok: {}", cfg.scenario.as_str());
            Ok(())
        }
    }
}

fn run(config: &PathBuf, out_root: Option<PathBuf>, expect: Option<ScenarioKind>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    if let Some(kind) = expect {
        if cfg.scenario != kind {
            return Err(Error::Config(format!(
                "this command needs scenario = '{}', config has '{}'",
                kind.as_str(),
                cfg.scenario.as_str()
            )));
        }
    }
    let root = runner::resolve_out_root(out_root);
    match runner::execute(&cfg, &root) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", outcome.out_dir.join(f).display());
            }
            Ok(())
        }
        Err(err) => {
            runner::record_error(Some(&cfg), &root, &err);
            Err(err)
        }
    }
}
