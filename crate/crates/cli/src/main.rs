use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fnls::analysis::{FitWindow, RateModel};
use fnls::Integrator;
use fnls_cli::commands::{execute, preset_listing_json};
use fnls_cli::config::{self, Command, FitJob, GroundStateJob, RunConfig};
use fnls_cli::report::EXIT_CONFIG;

#[derive(Parser)]
#[command(name = "fnls", version, about = "Fractional NLS solver: ground states, evolution and blow-up fits")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    /// Output directory (default: $FNLS_OUTPUT_ROOT/<name>).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Resolution factor: 1, 0.5, 0.25 or 0.125.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, value_parser = parse_integrator)]
    integrator: Option<Integrator>,
    /// Write SVG figures.
    #[arg(long)]
    plots: bool,
    /// Ground-state snapshot to use instead of computing one.
    #[arg(long)]
    ground_state: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a run configuration file.
    Run { config: PathBuf },
    /// Compute a ground state by continuation in s.
    Groundstate {
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long = "n-modes", short = 'n')]
        n_modes: usize,
        #[arg(long = "half-width", short = 'd')]
        half_width: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Evolve a scenario file.
    Evolve {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Fit blow-up rates to a recorded series.
    Fit {
        series: PathBuf,
        /// `all`, `last:<n>` or `<a>..<b>`.
        #[arg(long, default_value = "last:1000", value_parser = parse_window)]
        window: FitWindow,
        #[arg(long, default_value = "pure_log", value_parser = parse_model)]
        model: RateModel,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// List the preset catalogue.
    PresetList {
        #[arg(long)]
        json: bool,
    },
    /// Run a preset.
    PresetRun {
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn parse_integrator(s: &str) -> Result<Integrator, String> {
    match s {
        "splitting4" => Ok(Integrator::Splitting4),
        "stiff_rk4" | "rk4" => Ok(Integrator::StiffRk4),
        _ => Err(format!("unknown integrator `{s}` (splitting4, stiff_rk4)")),
    }
}

fn parse_model(s: &str) -> Result<RateModel, String> {
    match s {
        "pure_log" => Ok(RateModel::PureLog),
        "log_log" => Ok(RateModel::LogLog),
        _ => Err(format!("unknown model `{s}` (pure_log, log_log)")),
    }
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    if s == "all" {
        return Ok(FitWindow::All);
    }
    if let Some(n) = s.strip_prefix("last:") {
        return n.parse().map(FitWindow::Last).map_err(|e| format!("{e}"));
    }
    if let Some((a, b)) = s.split_once("..") {
        let a = a.parse().map_err(|e| format!("{e}"))?;
        let b = b.parse().map_err(|e| format!("{e}"))?;
        return Ok(FitWindow::Range(a, b));
    }
    Err(format!("bad window `{s}`"))
}

fn apply(cfg: &mut RunConfig, f: RunFlags) {
    cfg.output = f.output;
    cfg.scale = f.scale;
    cfg.integrator = f.integrator;
    cfg.plots = f.plots;
    cfg.ground_state_file = f.ground_state;
}

fn build(cli: Cli) -> Result<Option<RunConfig>, String> {
    let cfg = match cli.command {
        Cmd::Run { config } => config::load_config(&config).map_err(|e| e.to_string())?,
        Cmd::Groundstate { s, p, n_modes, half_width, tol, omega, output } => {
            let mut c = RunConfig::new(Command::Groundstate);
            c.output = output;
            c.groundstate = Some(GroundStateJob { s, p, n_modes, half_width, schedule: None, tol, omega });
            c
        }
        Cmd::Evolve { scenario, flags } => {
            let mut c = RunConfig::new(Command::Evolve);
            apply(&mut c, flags);
            c.scenario_file = Some(scenario);
            c
        }
        Cmd::Fit { series, window, model, output } => {
            let mut c = RunConfig::new(Command::Fit);
            c.output = output;
            c.fit = Some(FitJob { series, window, model });
            c
        }
        Cmd::PresetList { json } => {
            if json {
                println!("{}", preset_listing_json());
                return Ok(None);
            }
            RunConfig::new(Command::PresetList)
        }
        Cmd::PresetRun { name, flags } => {
            let mut c = RunConfig::new(Command::PresetRun);
            apply(&mut c, flags);
            c.preset = Some(name);
            c
        }
    };
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build(cli) {
        Ok(Some(c)) => c,
        Ok(None) => return ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match execute(&cfg) {
        Ok(out) => {
            print!("{}", out.text);
            if let Some(d) = out.output_dir {
                println!("output: {}", d.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
