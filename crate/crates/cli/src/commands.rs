//! Command execution. Every command that produces files writes them into one
//! output directory together with the resolved `config.toml`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fnls::ground_state::{self as profile, continuation_in_s, GroundState, NewtonOptions};
use fnls::scenarios::{
    self, fit_norms, run_scenario, ContinuationProvider, FitConfig, FixedGroundState, GroundStateProvider,
    RunOptions, ScenarioReport,
};
use fnls::{Grid, ModelParams};
use serde::Serialize;

use crate::config::{self, Command, ConfigError, RunConfig};
use crate::io::{write_atomic, IoError};
use crate::report::{self, EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_RUNTIME};
use crate::series::{read_series, write_series, SeriesError};
use crate::snapshot::{read_snapshot, write_snapshot, ReadError, SnapshotHeader};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] IoError),
    #[error("{0}")]
    Snapshot(#[from] ReadError),
    #[error("{0}")]
    Series(#[from] SeriesError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failed(_) => EXIT_FAILED,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub text: String,
    pub output_dir: Option<PathBuf>,
}

pub fn execute(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    config::validate(cfg, "config")?;
    match cfg.command {
        Command::PresetList => {
            if let Some(dir) = &cfg.output {
                write_atomic(&dir.join("presets.json"), preset_listing_json().as_bytes())?;
            }
            Ok(CommandOutcome {
                exit_code: EXIT_OK,
                text: preset_listing_text(),
                output_dir: cfg.output.clone(),
            })
        }
        Command::Evolve | Command::PresetRun => run_evolve(cfg),
        Command::Groundstate => run_groundstate(cfg),
        Command::Fit => run_fit(cfg),
    }
}

#[derive(Serialize)]
struct PresetEntry<'a> {
    name: &'a str,
    description: &'a str,
    s: f64,
    p: f64,
    gamma: f64,
    epsilon: f64,
    n_modes: usize,
    half_width: f64,
    n_steps: usize,
    t_end: f64,
    expectations: usize,
}

pub fn preset_listing_json() -> String {
    let all = scenarios::presets();
    let entries: Vec<PresetEntry> = all
        .iter()
        .map(|s| PresetEntry {
            name: &s.name,
            description: &s.description,
            s: s.params.s(),
            p: s.params.p(),
            gamma: s.params.gamma(),
            epsilon: s.params.epsilon(),
            n_modes: s.grid.n_modes(),
            half_width: s.grid.half_width(),
            n_steps: s.time.n_steps(),
            t_end: s.time.t_end(),
            expectations: s.expected.len(),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("serializable")
}

pub fn preset_listing_text() -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<40} {:>5} {:>3} {:>5} {:>5} {:>7} {:>5} {:>6} {:>5}",
        "name", "s", "p", "γ", "ε", "N", "D", "N_t", "t_end"
    );
    for s in scenarios::presets() {
        let _ = writeln!(
            out,
            "{:<40} {:>5} {:>3} {:>5} {:>5} {:>7} {:>5} {:>6} {:>5}",
            s.name,
            s.params.s(),
            s.params.p(),
            s.params.gamma(),
            s.params.epsilon(),
            s.grid.n_modes(),
            s.grid.half_width(),
            s.time.n_steps(),
            s.time.t_end()
        );
    }
    out
}

fn ground_state_from_snapshot(path: &Path) -> Result<GroundState, CliError> {
    let (field, header) = read_snapshot(path)?;
    let residual_norm = header.residual_norm.ok_or_else(|| {
        CliError::Failed(format!("{}: snapshot does not hold a ground state", path.display()))
    })?;
    Ok(GroundState {
        field,
        residual_norm,
        s: header.s,
        p: header.p,
        omega: 1.0,
        residual_history: vec![residual_norm],
        gmres_iterations: 0,
        symmetry_defect: 0.0,
    })
}

fn ground_state_header(gs: &GroundState) -> SnapshotHeader {
    SnapshotHeader::new(gs.field.grid(), &gs.params(), 0.0, Some(gs.residual_norm))
}

fn write_report_files(dir: &Path, r: &ScenarioReport, plots: bool) -> Result<Vec<String>, CliError> {
    let run = &r.run;
    let params = &r.scenario.params;
    let grid = &r.scenario.grid;
    write_series(&dir.join("series.csv"), &run.series)?;
    write_snapshot(
        &dir.join("initial.fnls"),
        &r.initial,
        &SnapshotHeader::new(grid, params, 0.0, None),
    )?;
    write_snapshot(
        &dir.join("final.fnls"),
        &run.final_state,
        &SnapshotHeader::new(grid, params, run.stop_time, None),
    )?;
    for (i, snap) in run.snapshots.iter().enumerate() {
        write_snapshot(
            &dir.join("snapshots").join(format!("snap_{i:04}.fnls")),
            &snap.field,
            &SnapshotHeader::new(grid, params, snap.t, None),
        )?;
    }
    let mut warnings = Vec::new();
    if plots {
        let (_, w) = crate::plots::emit_plots(
            &dir.join("plots"),
            &run.series,
            &run.snapshots,
            &run.final_state,
            run.last_fit.as_ref(),
        );
        warnings = w;
    }
    Ok(warnings)
}

fn run_evolve(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let scenario = config::resolve_scenario(cfg)?;
    let dir = config::output_dir(cfg, &scenario.name);
    let options = RunOptions {
        scale: cfg.effective_scale(),
        integrator: cfg.integrator,
    };
    let mut provider: Box<dyn GroundStateProvider> = match &cfg.ground_state_file {
        Some(p) => Box::new(FixedGroundState(ground_state_from_snapshot(p)?)),
        None => Box::new(ContinuationProvider::new(NewtonOptions::default())),
    };
    let report = match run_scenario(&scenario, &options, provider.as_mut()) {
        Ok(r) => r,
        Err(e) => {
            write_atomic(&dir.join("report.txt"), format!("{e}\n").as_bytes())?;
            return Err(CliError::Failed(e.to_string()));
        }
    };

    let mut resolved = RunConfig::new(Command::Evolve);
    resolved.plots = cfg.plots;
    resolved.scenario = Some(report.scenario.clone());
    if let Some(gs) = &report.ground_state {
        write_snapshot(&dir.join("ground_state.fnls"), &gs.field, &ground_state_header(gs))?;
        resolved.ground_state_file = Some(PathBuf::from("ground_state.fnls"));
    }
    write_atomic(&dir.join("config.toml"), config::to_toml(&resolved).as_bytes())?;

    let plot_warnings = write_report_files(&dir, &report, cfg.plots)?;
    let mut text = report::render_text(&report);
    for w in plot_warnings {
        let _ = writeln!(text, "warning    {w}");
    }
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    write_atomic(&dir.join("report.json"), report::render_json(&report).as_bytes())?;
    Ok(CommandOutcome {
        exit_code: report::exit_code(&report.outcomes, report.run.status),
        text,
        output_dir: Some(dir),
    })
}

fn run_groundstate(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let job = cfg.groundstate.as_ref().expect("validated");
    let name = format!("groundstate_s{}_p{}", job.s, job.p);
    let dir = config::output_dir(cfg, &name);
    let grid = Grid::new(job.n_modes, job.half_width).map_err(|e| ConfigError::new("groundstate", e.to_string()))?;
    let opts = NewtonOptions {
        tol: job.tol,
        ..NewtonOptions::default()
    };
    let chain = continuation_in_s(job.s, job.p, &grid, job.schedule.as_deref(), &opts)
        .map_err(|e| CliError::Failed(format!("ground state: {e}")))?;
    let gs = chain.last().expect("non-empty chain");

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["s", "residual_norm", "mass", "energy", "sup_norm", "newton_iterations", "gmres_iterations", "tail_exponent"])
        .expect("in-memory");
    let mut text = String::new();
    let _ = writeln!(text, "ground states on N = {}, D = {}", grid.n_modes(), grid.half_width());
    for g in &chain {
        let tail = profile::tail_exponent(g).ok().filter(|t| t.reliable).map(|t| t.exponent);
        let sup = fnls::spectral::sup_norm(&g.field);
        csv.write_record([
            format!("{}", g.s),
            format!("{:.16e}", g.residual_norm),
            format!("{:.16e}", g.mass()),
            format!("{:.16e}", g.energy()),
            format!("{sup:.16e}"),
            format!("{}", g.newton_iterations()),
            format!("{}", g.gmres_iterations),
            tail.map_or("NaN".into(), |t| format!("{t:.16e}")),
        ])
        .expect("in-memory");
        let _ = writeln!(
            text,
            "s = {:<6} residual {:.2e}  M = {:.6}  E = {:+.6e}  ‖Q‖∞ = {:.6}  Newton {}  tail {}",
            g.s,
            g.residual_norm,
            g.mass(),
            g.energy(),
            sup,
            g.newton_iterations(),
            tail.map_or("n/a".into(), |t| format!("{t:.3}"))
        );
    }
    write_atomic(&dir.join("chain.csv"), &csv.into_inner().expect("in-memory"))?;
    write_snapshot(&dir.join("ground_state.fnls"), &gs.field, &ground_state_header(gs))?;
    if let Some(omega) = job.omega {
        let r = profile::rescale_omega(gs, omega).map_err(|e| CliError::Failed(e.to_string()))?;
        let params = ModelParams::focusing(gs.s, gs.p).expect("solved");
        write_snapshot(&dir.join("ground_state_omega.fnls"), &r.field, &SnapshotHeader::new(&grid, &params, 0.0, None))?;
        let _ = writeln!(
            text,
            "rescaled to ω = {omega}: ‖Q_ω‖∞ = {:.6}, spectral tail {:.2e}{}",
            fnls::spectral::sup_norm(&r.field),
            r.tail_ratio,
            if r.under_resolved { " (under-resolved)" } else { "" }
        );
    }
    let mut resolved = cfg.clone();
    resolved.output = None;
    write_atomic(&dir.join("config.toml"), config::to_toml(&resolved).as_bytes())?;
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    let exit_code = if gs.residual_norm <= job.tol { EXIT_OK } else { EXIT_FAILED };
    Ok(CommandOutcome {
        exit_code,
        text,
        output_dir: Some(dir),
    })
}

fn run_fit(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let job = cfg.fit.as_ref().expect("validated");
    let series = read_series(&job.series)?;
    let fits = fit_norms(
        &series,
        &FitConfig {
            window: job.window,
            model: job.model,
        },
    );
    let mut text = format!("fit of {} ({} samples, {:?}, {:?})\n", job.series.display(), series.len(), job.window, job.model);
    for (name, f) in [("gradient", &fits.gradient), ("sup", &fits.sup)] {
        match f {
            Some(f) => {
                let _ = writeln!(
                    text,
                    "  {name:<9} t* = {:.10}  κ₁ = {:.8}  κ₂ = {:.8}  Δ₂ = {:.3e}",
                    f.t_star, f.kappa1, f.kappa2, f.delta2
                );
            }
            None => {
                let _ = writeln!(text, "  {name:<9} failed");
            }
        }
    }
    for e in &fits.errors {
        let _ = writeln!(text, "  error: {e}");
    }
    let exit_code = if fits.errors.is_empty() { EXIT_OK } else { EXIT_FAILED };
    if let Some(dir) = &cfg.output {
        write_atomic(&dir.join("fit.json"), serde_json::to_string_pretty(&fits).expect("serializable").as_bytes())?;
        let mut resolved = cfg.clone();
        resolved.output = None;
        write_atomic(&dir.join("config.toml"), config::to_toml(&resolved).as_bytes())?;
        write_atomic(&dir.join("fit.txt"), text.as_bytes())?;
    }
    Ok(CommandOutcome {
        exit_code,
        text,
        output_dir: cfg.output.clone(),
    })
}

/// Recomputes the ground-state residual of a stored state.
pub fn recompute_residual(gs: &GroundState) -> fnls::Result<f64> {
    let problem = profile::GroundStateProblem::new(gs.field.grid(), gs.s, gs.p)?;
    let f = profile::residual(&gs.field.to_spectral(), &problem)?;
    Ok(profile::residual_norm(&f))
}

pub fn load_ground_state(path: &Path) -> Result<GroundState, CliError> {
    ground_state_from_snapshot(path)
}
