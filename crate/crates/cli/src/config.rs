//! Run configuration files.
//!
//! TOML with a fixed key set; unknown keys are errors. Top-level keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `command` | `groundstate`, `evolve`, `fit`, `preset-list`, `preset-run` | required |
//! | `output` | output directory | `$FNLS_OUTPUT_ROOT/<name>` |
//! | `scale` | resolution factor, one of 1, 0.5, 0.25, 0.125 | 1 (0.25 for `preset-run`) |
//! | `integrator` | `splitting4` or `stiff_rk4`, overrides the scenario | scenario value |
//! | `plots` | write SVG figures | false |
//! | `preset` | preset name for `preset-run` | |
//! | `scenario_file` | path of a scenario file for `evolve` | |
//! | `ground_state_file` | snapshot holding the ground state to use | computed |
//!
//! Sections: `[scenario]` (inline scenario for `evolve`), `[groundstate]`
//! and `[fit]`.

use std::path::{Path, PathBuf};

use fnls::analysis::{FitWindow, RateModel};
use fnls::scenarios::{self, Scenario, SCALES};
use fnls::Integrator;
use serde::{Deserialize, Serialize};

pub const OUTPUT_ROOT_VAR: &str = "FNLS_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Groundstate,
    Evolve,
    Fit,
    PresetList,
    PresetRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateJob {
    pub s: f64,
    #[serde(default = "one")]
    pub p: f64,
    pub n_modes: usize,
    pub half_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Also write the state rescaled to this frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitJob {
    pub series: PathBuf,
    #[serde(default = "default_window")]
    pub window: FitWindow,
    #[serde(default = "default_model")]
    pub model: RateModel,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-12
}

fn default_window() -> FitWindow {
    FitWindow::LAST_1000
}

fn default_model() -> RateModel {
    RateModel::PureLog
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default)]
    pub plots: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_state_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groundstate: Option<GroundStateJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitJob>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            output: None,
            scale: None,
            integrator: None,
            plots: false,
            preset: None,
            scenario_file: None,
            ground_state_file: None,
            scenario: None,
            groundstate: None,
            fit: None,
        }
    }

    pub fn effective_scale(&self) -> f64 {
        self.scale.unwrap_or(match self.command {
            Command::PresetRun => scenarios::DEFAULT_SCALE,
            _ => 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub source_name: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.source_name, self.message),
            None => write!(f, "{}: {}", self.source_name, self.message),
        }
    }
}

impl ConfigError {
    pub fn new(source_name: &str, message: impl Into<String>) -> Self {
        ConfigError {
            source_name: source_name.to_string(),
            line: None,
            message: message.into(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn from_toml<T: serde::de::DeserializeOwned>(text: &str, source_name: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError {
        source_name: source_name.to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })
}

/// Parses and validates a run configuration. Relative paths inside are kept
/// as written.
pub fn parse_config(text: &str, source_name: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = from_toml(text, source_name)?;
    validate(&cfg, source_name)?;
    Ok(cfg)
}

pub fn parse_scenario(text: &str, source_name: &str) -> Result<Scenario, ConfigError> {
    let sc: Scenario = from_toml(text, source_name)?;
    sc.validate().map_err(|e| ConfigError::new(source_name, e.to_string()))?;
    Ok(sc)
}

pub fn validate(cfg: &RunConfig, source_name: &str) -> Result<(), ConfigError> {
    let err = |m: String| Err(ConfigError::new(source_name, m));
    if let Some(scale) = cfg.scale {
        if !SCALES.contains(&scale) {
            return err(format!("scale must be one of 1, 0.5, 0.25, 0.125; got {scale}"));
        }
    }
    match cfg.command {
        Command::Evolve => {
            if cfg.scenario.is_some() == cfg.scenario_file.is_some() {
                return err("evolve needs exactly one of [scenario] or scenario_file".into());
            }
            if let Some(sc) = &cfg.scenario {
                sc.validate().map_err(|e| ConfigError::new(source_name, e.to_string()))?;
            }
        }
        Command::PresetRun => match &cfg.preset {
            None => return err("preset-run needs `preset`".into()),
            Some(name) => {
                scenarios::preset(name).map_err(|e| ConfigError::new(source_name, e.to_string()))?;
            }
        },
        Command::Groundstate => match &cfg.groundstate {
            None => return err("groundstate needs a [groundstate] section".into()),
            Some(job) => {
                fnls::Grid::new(job.n_modes, job.half_width)
                    .map_err(|e| ConfigError::new(source_name, e.to_string()))?;
                fnls::ground_state::GroundStateProblem::new(
                    &fnls::Grid::new(job.n_modes, job.half_width).expect("checked"),
                    job.s,
                    job.p,
                )
                .map_err(|e| ConfigError::new(source_name, e.to_string()))?;
                if !(job.tol > 0.0) {
                    return err("groundstate.tol must be positive".into());
                }
            }
        },
        Command::Fit => {
            if cfg.fit.is_none() {
                return err("fit needs a [fit] section".into());
            }
        }
        Command::PresetList => {}
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&name, e.to_string()))?;
    let mut cfg = parse_config(&text, &name)?;
    // Paths inside a config file are relative to the file.
    let base = path.parent().unwrap_or(Path::new("."));
    let rebase = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let Some(p) = cfg.scenario_file.as_mut() {
        rebase(p);
    }
    if let Some(p) = cfg.ground_state_file.as_mut() {
        rebase(p);
    }
    if let Some(f) = cfg.fit.as_mut() {
        rebase(&mut f.series);
    }
    Ok(cfg)
}

/// The scenario a config refers to, before scaling.
pub fn resolve_scenario(cfg: &RunConfig) -> Result<Scenario, ConfigError> {
    if let Some(sc) = &cfg.scenario {
        return Ok(sc.clone());
    }
    if let Some(path) = &cfg.scenario_file {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&name, e.to_string()))?;
        return parse_scenario(&text, &name);
    }
    if let Some(name) = &cfg.preset {
        return scenarios::preset(name).map_err(|e| ConfigError::new("preset", e.to_string()));
    }
    Err(ConfigError::new("config", "no scenario given"))
}

pub fn output_dir(cfg: &RunConfig, default_name: &str) -> PathBuf {
    if let Some(o) = &cfg.output {
        return o.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fnls-output"));
    root.join(default_name)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configs serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "evolve"

[scenario]
name = "minimal"
params = { s = 0.9 }
grid = { n_modes = 256, half_width = 10.0 }
time = { t_end = 1.0, n_steps = 100 }
data = { kind = "sech" }
"#;

    #[test]
    fn minimal_evolve_defaults() {
        let cfg = parse_config(MINIMAL, "m.toml").unwrap();
        let sc = cfg.scenario.unwrap();
        assert_eq!(sc.params.epsilon(), 1.0);
        assert_eq!(sc.params.gamma(), -1.0);
        assert_eq!(sc.params.p(), 1.0);
        assert_eq!(sc.integrator, Integrator::Splitting4);
        assert_eq!(cfg.command, Command::Evolve);
        assert!(!cfg.plots);
    }

    #[test]
    fn s_out_of_range_is_rejected_with_line() {
        let text = MINIMAL.replace("s = 0.9", "s = 1.5");
        let e = parse_config(&text, "m.toml").unwrap_err();
        assert_eq!(e.line, Some(6), "{e}");
        assert!(e.message.contains("(0, 1]"), "{e}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = MINIMAL.replace("data = {", "colour = 3\ndata = {");
        let e = parse_config(&text, "m.toml").unwrap_err();
        assert_eq!(e.line, Some(9), "{e}");
        assert!(e.message.contains("colour"), "{e}");
        let e = parse_config("command = \"evolve\"\nfoo = 1\n", "x").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn syntax_error_has_line() {
        let e = parse_config("command = \"evolve\"\n\nscale = = 1\n", "x").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
    }

    #[test]
    fn preset_resolution() {
        let cfg = parse_config("command = \"preset-run\"\npreset = \"septic_nls_blowup\"\n", "x").unwrap();
        let sc = resolve_scenario(&cfg).unwrap();
        assert_eq!(sc, scenarios::preset("septic_nls_blowup").unwrap());
        assert_eq!(cfg.effective_scale(), 0.25);
        let e = parse_config("command = \"preset-run\"\npreset = \"nope\"\n", "x").unwrap_err();
        assert!(e.message.contains("septic_nls_blowup"));
    }

    #[test]
    fn invariants() {
        assert!(parse_config("command = \"preset-list\"\nscale = 0.3\n", "x").is_err());
        assert!(parse_config("command = \"evolve\"\n", "x").is_err());
        assert!(parse_config("command = \"fit\"\n", "x").is_err());
        let gs = "command = \"groundstate\"\n[groundstate]\ns = 0.4\np = 4.5\nn_modes = 256\nhalf_width = 10.0\n";
        assert!(parse_config(gs, "x").is_err());
        assert!(parse_config(&gs.replace("4.5", "1"), "x").is_ok());
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = parse_config(MINIMAL, "m.toml").unwrap();
        cfg.integrator = Some(Integrator::StiffRk4);
        cfg.scale = Some(0.5);
        let back = parse_config(&to_toml(&cfg), "r").unwrap();
        assert_eq!(back, cfg);
    }
}
