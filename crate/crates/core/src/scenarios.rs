//! Initial data catalogue and preset experiments.
//!
//! A [`Scenario`] bundles everything needed to reproduce one run: model
//! parameters, grid, time grid, initial data, monitors, the blow-up fit to
//! perform and the values the run is expected to produce. Presets are
//! available by name through [`preset`]; [`run_scenario`] executes a scenario
//! and checks its expectations.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_blowup_rate, BlowupFit, FitWindow, RateModel};
use crate::error::{Error, Result};
use crate::evolution::{evolve, Integrator, MonitorConfig, RunResult, RunStatus, Sample, TimeGrid};
use crate::ground_state::{
    closed_form_soliton, continuation_in_s, GroundState, NewtonOptions,
};
use crate::params::ModelParams;
use crate::spectral::{Grid, PhysicalField};

/// Scale factors accepted by [`Scenario::scaled`].
pub const SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

pub const DEFAULT_SCALE: f64 = 0.25;

/// Initial data kinds. Ground-state based kinds use the ground state at the
/// scenario's `(s, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `α Q(x)`.
    AlphaGroundState { alpha: f64 },
    /// `Q(x) e^{icx}`.
    BoostedGroundState {
        #[serde(default = "one")]
        c: f64,
    },
    /// `Q(x) + ε e^{−x²}`.
    GaussianPerturbedGroundState {
        #[serde(default = "default_pert")]
        epsilon_pert: f64,
    },
    /// `β sech x`.
    Sech {
        #[serde(default = "one")]
        beta: f64,
    },
    /// `β e^{ibx²} sech x`.
    ChirpedSech {
        b: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    /// The exact `s = 1` soliton moving with speed `c`.
    BoostedSolitonS1 {
        #[serde(default = "one")]
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_pert() -> f64 {
    0.1
}

impl InitialDataSpec {
    pub fn needs_ground_state(&self) -> bool {
        matches!(
            self,
            InitialDataSpec::AlphaGroundState { .. }
                | InitialDataSpec::BoostedGroundState { .. }
                | InitialDataSpec::GaussianPerturbedGroundState { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            InitialDataSpec::AlphaGroundState { alpha } => ("alpha", alpha),
            InitialDataSpec::BoostedGroundState { c } => ("c", c),
            InitialDataSpec::GaussianPerturbedGroundState { epsilon_pert } => ("epsilon_pert", epsilon_pert),
            InitialDataSpec::Sech { beta } => ("beta", beta),
            InitialDataSpec::ChirpedSech { b, beta } => {
                if !b.is_finite() {
                    return Err(Error::param("b", "must be finite"));
                }
                ("beta", beta)
            }
            InitialDataSpec::BoostedSolitonS1 { c } => ("c", c),
        };
        if !v.is_finite() {
            return Err(Error::param(name, "must be finite"));
        }
        Ok(())
    }
}

/// Source of ground states for the data kinds that need one.
pub trait GroundStateProvider {
    fn ground_state(&mut self, grid: &Grid, s: f64, p: f64) -> Result<GroundState>;
}

/// Computes ground states by continuation in `s` and caches them.
#[derive(Debug, Default)]
pub struct ContinuationProvider {
    pub options: NewtonOptions,
    cache: Vec<GroundState>,
}

impl ContinuationProvider {
    pub fn new(options: NewtonOptions) -> Self {
        ContinuationProvider {
            options,
            cache: Vec::new(),
        }
    }
}

impl GroundStateProvider for ContinuationProvider {
    fn ground_state(&mut self, grid: &Grid, s: f64, p: f64) -> Result<GroundState> {
        if let Some(gs) = self
            .cache
            .iter()
            .find(|g| g.s == s && g.p == p && g.field.grid() == grid)
        {
            return Ok(gs.clone());
        }
        let chain = continuation_in_s(s, p, grid, None, &self.options)?;
        let gs = chain.last().cloned().expect("continuation returns its target");
        self.cache.push(gs.clone());
        Ok(gs)
    }
}

/// A single precomputed ground state, e.g. loaded from disk.
#[derive(Debug, Clone)]
pub struct FixedGroundState(pub GroundState);

impl GroundStateProvider for FixedGroundState {
    fn ground_state(&mut self, grid: &Grid, s: f64, p: f64) -> Result<GroundState> {
        let gs = &self.0;
        if gs.field.grid() != grid {
            return Err(Error::param("ground_state", "stored state lives on a different grid"));
        }
        if gs.s != s || gs.p != p {
            return Err(Error::param(
                "ground_state",
                format!("stored state has s={}, p={}; need s={s}, p={p}", gs.s, gs.p),
            ));
        }
        Ok(gs.clone())
    }
}

/// Refuses every request.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoGroundState;

impl GroundStateProvider for NoGroundState {
    fn ground_state(&mut self, _grid: &Grid, s: f64, p: f64) -> Result<GroundState> {
        Err(Error::param(
            "ground_state",
            format!("initial data needs the ground state at s={s}, p={p} but none is available"),
        ))
    }
}

#[derive(Debug, Clone)]
pub struct BuiltData {
    pub field: PhysicalField,
    pub ground_state: Option<GroundState>,
    pub warnings: Vec<String>,
}

/// Samples `spec` on `grid` for the model `params`.
pub fn build_initial_data(
    spec: &InitialDataSpec,
    grid: &Grid,
    params: &ModelParams,
    provider: &mut dyn GroundStateProvider,
) -> Result<BuiltData> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let ground_state = if spec.needs_ground_state() {
        Some(provider.ground_state(grid, params.s(), params.p())?)
    } else {
        None
    };
    let q = || &ground_state.as_ref().expect("fetched above").field;
    let sech = |x: f64| 1.0 / x.cosh();
    let field = match *spec {
        InitialDataSpec::AlphaGroundState { alpha } => q().scaled(alpha),
        InitialDataSpec::BoostedGroundState { c } => {
            let values = q()
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(v, x)| v * Complex64::from_polar(1.0, c * x))
                .collect();
            PhysicalField::new(grid.clone(), values)?
        }
        InitialDataSpec::GaussianPerturbedGroundState { epsilon_pert } => {
            let values = q()
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(v, x)| v + epsilon_pert * (-x * x).exp())
                .collect();
            PhysicalField::new(grid.clone(), values)?
        }
        InitialDataSpec::Sech { beta } => PhysicalField::from_real_fn(grid, |x| beta * sech(x)),
        InitialDataSpec::ChirpedSech { b, beta } => {
            let x_max = std::f64::consts::PI * grid.half_width();
            let phase_step = b.abs() * grid.dx() * x_max;
            if phase_step > std::f64::consts::FRAC_PI_4 {
                warnings.push(format!(
                    "chirp under-resolved at the domain edge: b·dx·x_max = {phase_step:.3} > π/4"
                ));
            }
            PhysicalField::from_fn(grid, |x| Complex64::from_polar(beta * sech(x), b * x * x))
        }
        InitialDataSpec::BoostedSolitonS1 { c } => {
            let soliton = closed_form_soliton(params.p(), grid)?;
            let values = soliton
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(v, x)| v * Complex64::from_polar(1.0, c * x))
                .collect();
            PhysicalField::new(grid.clone(), values)?
        }
    };
    if !field.is_finite() {
        return Err(Error::param("initial data", "produced non-finite samples"));
    }
    Ok(BuiltData {
        field,
        ground_state,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// `‖∂_x ψ‖₂²`, normalized to 1 at `t = 0`.
    Gradient,
    /// `‖ψ‖_∞`, normalized to 1 at `t = 0`.
    Sup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub window: FitWindow,
    #[serde(default = "pure_log")]
    pub model: RateModel,
}

fn pure_log() -> RateModel {
    RateModel::PureLog
}

/// Scalar extracted from a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quantity {
    BlowupTime { norm: Norm },
    RateExponent { norm: Norm },
    /// `|t*_gradient − t*_sup| / t*_gradient`.
    BlowupTimeAgreement,
    /// Largest `max_x |ψ(t) − ψ₀ e^{it}|` over the snapshots.
    StandingWaveError,
    MaxEnergyDrift,
    /// Mean of `‖ψ‖_∞` over samples with `t ≥ from_fraction · t_end`.
    LateSupMean { from_fraction: f64 },
    /// Largest increase of `‖ψ‖_∞` between consecutive samples, relative to
    /// its initial value. Non-positive for a monotonically decreasing norm.
    SupMaxRise,
    /// `‖ψ‖_∞` at the last sample over its initial value.
    SupRatioFinal,
    /// `max_t ‖ψ‖_{Ḣ^σ} / ‖ψ₀‖_{Ḣ^σ}`.
    MaxHdotRatio,
    /// Local maxima of `|ψ|²` at the final state that exceed
    /// `min_fraction · max |ψ|²`.
    HumpCount { min_fraction: f64 },
    FloorWarningTime,
    StopTime,
    Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Near { value: f64, rel_tol: f64 },
    Range { min: f64, max: f64 },
    AtMost { value: f64 },
    AtLeast { value: f64 },
    StatusIn { statuses: Vec<RunStatus> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// A number reported for the original experiment.
    Published,
    /// Computed from a reported number or from theory.
    Derived,
    /// A described behavior without a reported number.
    Qualitative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub quantity: Quantity,
    pub check: Check,
    pub provenance: Provenance,
    #[serde(default)]
    pub note: String,
}

impl Expectation {
    fn new(quantity: Quantity, check: Check, provenance: Provenance, note: &str) -> Self {
        Expectation {
            quantity,
            check,
            provenance,
            note: note.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub params: ModelParams,
    pub grid: Grid,
    pub time: TimeGrid,
    pub data: InitialDataSpec,
    #[serde(default)]
    pub monitors: MonitorConfig,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub expected: Vec<Expectation>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::param("name", "must not be empty"));
        }
        self.data.validate()?;
        self.monitors.validate(&self.time)?;
        let needs_fit = self.expected.iter().any(|e| {
            matches!(
                e.quantity,
                Quantity::BlowupTime { .. } | Quantity::RateExponent { .. } | Quantity::BlowupTimeAgreement
            )
        });
        if needs_fit && self.fit.is_none() {
            return Err(Error::param("fit", "blow-up expectations need a fit section"));
        }
        for e in &self.expected {
            let ok = match &e.check {
                Check::Near { value, rel_tol } => value.is_finite() && *rel_tol > 0.0,
                Check::Range { min, max } => min <= max,
                Check::AtMost { value } | Check::AtLeast { value } => value.is_finite(),
                Check::StatusIn { statuses } => !statuses.is_empty(),
            };
            if !ok {
                return Err(Error::param("expected", format!("malformed check {:?}", e.check)));
            }
            let status_pair = matches!(e.quantity, Quantity::Status) == matches!(e.check, Check::StatusIn { .. });
            if !status_pair {
                return Err(Error::param(
                    "expected",
                    "`status` quantities pair with `status_in` checks and only with those",
                ));
            }
        }
        Ok(())
    }

    /// Desk-scale copy: `N` and `N_t` multiplied by `scale`, relative
    /// tolerances doubled per halving and `last(n)` fit windows shrunk with the
    /// sample count.
    pub fn scaled(&self, scale: f64) -> Result<Scenario> {
        if !SCALES.contains(&scale) {
            return Err(Error::param("scale", format!("must be one of 1, 1/2, 1/4, 1/8; got {scale}")));
        }
        if scale == 1.0 {
            return Ok(self.clone());
        }
        let n = (self.grid.n_modes() as f64 * scale) as usize;
        let nt = ((self.time.n_steps() as f64 * scale).round() as usize).max(1);
        let widen = 1.0 / scale;
        let mut out = self.clone();
        out.grid = Grid::new(n, self.grid.half_width())?;
        out.time = TimeGrid::new(self.time.t_end(), nt)?;
        if let Some(fit) = &mut out.fit {
            if let FitWindow::Last(k) = fit.window {
                fit.window = FitWindow::Last(((k as f64 * scale).round() as usize).max(10));
            }
        }
        for e in &mut out.expected {
            if let Check::Near { rel_tol, .. } = &mut e.check {
                *rel_tol *= widen;
            }
        }
        Ok(out)
    }
}

fn status_check(statuses: &[RunStatus]) -> Check {
    Check::StatusIn {
        statuses: statuses.to_vec(),
    }
}

fn near(value: f64, rel_tol: f64) -> Check {
    Check::Near { value, rel_tol }
}

const BLOWUP_STOPS: [RunStatus; 3] = [
    RunStatus::StoppedSingularity,
    RunStatus::StoppedOverflow,
    RunStatus::StoppedEnergyDrift,
];

struct Builder {
    sc: Scenario,
}

impl Builder {
    fn new(name: &str, params: ModelParams, n: usize, d: f64, t_end: f64, nt: usize, data: InitialDataSpec) -> Self {
        Builder {
            sc: Scenario {
                name: name.to_string(),
                description: String::new(),
                params,
                grid: Grid::new(n, d).expect("preset grid"),
                time: TimeGrid::new(t_end, nt).expect("preset time grid"),
                data,
                monitors: MonitorConfig::default(),
                integrator: if params.is_focusing() {
                    Integrator::StiffRk4
                } else {
                    Integrator::Splitting4
                },
                fit: None,
                expected: Vec::new(),
            },
        }
    }

    fn describe(mut self, text: &str) -> Self {
        self.sc.description = text.to_string();
        self
    }

    fn monitors(mut self, f: impl FnOnce(&mut MonitorConfig)) -> Self {
        f(&mut self.sc.monitors);
        self
    }

    fn fit(mut self, window: FitWindow) -> Self {
        self.sc.fit = Some(FitConfig {
            window,
            model: RateModel::PureLog,
        });
        self
    }

    fn expect(mut self, quantity: Quantity, check: Check, provenance: Provenance, note: &str) -> Self {
        self.sc.expected.push(Expectation::new(quantity, check, provenance, note));
        self
    }

    fn done(self) -> Scenario {
        self.sc
    }
}

fn focusing(s: f64, p: f64) -> ModelParams {
    ModelParams::focusing(s, p).expect("preset parameters")
}

fn semiclassical(s: f64, gamma: f64, eps: f64) -> ModelParams {
    ModelParams::new(s, 1.0, gamma, eps).expect("preset parameters")
}

fn tag(x: f64) -> String {
    format!("{x}")
}

use Provenance::{Derived, Published, Qualitative};

fn blowup_preset(name: &str, s: f64, p: f64, t_end: f64, singularity_stop: bool) -> Builder {
    Builder::new(name, focusing(s, p), 1 << 17, 10.0, t_end, 50_000, InitialDataSpec::Sech { beta: 1.0 })
        .monitors(|m| m.singularity_stop = singularity_stop)
        .fit(FitWindow::LAST_1000)
        .expect(Quantity::Status, status_check(&BLOWUP_STOPS), Qualitative, "the run ends by a blow-up stop")
}

fn blowup_rates(b: Builder, t_star: f64, grad: f64, sup: f64, t_tol: f64, k_tol: f64, src: Provenance) -> Builder {
    b.expect(Quantity::BlowupTime { norm: Norm::Gradient }, near(t_star, t_tol), src, "t* from the gradient fit")
        .expect(Quantity::BlowupTime { norm: Norm::Sup }, near(t_star, t_tol), src, "t* from the sup-norm fit")
        .expect(Quantity::RateExponent { norm: Norm::Gradient }, near(grad, k_tol), Derived, "predicted rate")
        .expect(Quantity::RateExponent { norm: Norm::Sup }, near(sup, k_tol), Derived, "predicted rate")
}

fn all_presets() -> Vec<Scenario> {
    let mut out = Vec::new();

    out.push(
        Builder::new("groundstate_test", focusing(0.6, 1.0), 1 << 16, 100.0, 6.0, 20_000, InitialDataSpec::AlphaGroundState { alpha: 1.0 })
            .describe("ground state at s = 0.6 propagated as a standing wave")
            .monitors(|m| {
                m.series_stride = 100;
                m.snapshot_times = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
            })
            .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "")
            .expect(Quantity::StandingWaveError, Check::AtMost { value: 1e-10 }, Published, "errors of order 1e-12, one decade of slack")
            .expect(Quantity::MaxEnergyDrift, Check::AtMost { value: 1e-12 }, Published, "")
            .done(),
    );

    for (alpha, sup) in [(0.9, 1.146), (1.1, 1.8)] {
        out.push(
            Builder::new(&format!("perturbed_gs_alpha{}", tag(alpha)), focusing(0.9, 1.0), 1 << 16, 100.0, 30.0, 10_000, InitialDataSpec::AlphaGroundState { alpha })
                .describe("scaled ground state at s = 0.9 relaxing to a nearby standing wave")
                .monitors(|m| m.series_stride = 10)
                .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "")
                .expect(Quantity::LateSupMean { from_fraction: 0.5 }, near(sup, 0.05), Published, "amplitude of the ground state with the same mass")
                .done(),
        );
    }

    out.push(
        Builder::new("boosted_gs", focusing(0.9, 1.0), 1 << 16, 100.0, 30.0, 10_000, InitialDataSpec::BoostedGroundState { c: 1.0 })
            .describe("ground state at s = 0.9 with a Galilei boost")
            .monitors(|m| m.series_stride = 10)
            .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "approximate solitary wave")
            .expect(Quantity::HumpCount { min_fraction: 0.5 }, Check::Range { min: 1.0, max: 1.0 }, Qualitative, "a single travelling hump")
            .done(),
    );

    out.push(
        Builder::new("mass_critical_decay", focusing(0.5, 1.0), 1 << 16, 100.0, 10.0, 5_000, InitialDataSpec::AlphaGroundState { alpha: 0.9 })
            .describe("undercritical mass at s = 0.5 decays")
            .monitors(|m| m.series_stride = 10)
            .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "")
            .expect(Quantity::SupMaxRise, Check::AtMost { value: 1e-9 }, Qualitative, "monotonically decreasing sup norm")
            .done(),
    );

    out.push(
        Builder::new("mass_critical_blowup", focusing(0.5, 1.0), 1 << 16, 100.0, 3.0, 10_000, InitialDataSpec::AlphaGroundState { alpha: 1.1 })
            .describe("overcritical mass at s = 0.5 blows up")
            .monitors(|m| m.singularity_stop = true)
            .expect(Quantity::Status, status_check(&[RunStatus::StoppedSingularity]), Qualitative, "resolution is lost near t = 1")
            .done(),
    );

    out.push(
        blowup_rates(
            blowup_preset("septic_nls_blowup", 1.0, 3.0, 1.5, false).describe("septic NLS, sech data"),
            1.4789, -5.0 / 6.0, -1.0 / 6.0, 0.01, 0.1, Published,
        )
        .expect(Quantity::BlowupTimeAgreement, Check::AtMost { value: 0.01 }, Published, "")
        .done(),
    );
    out.push(
        blowup_rates(
            blowup_preset("quintic_nls_blowup", 1.0, 2.0, 5.0, false).describe("quintic NLS, sech data"),
            4.9711, -1.0, -0.25, 0.01, 0.1, Published,
        )
        .expect(Quantity::BlowupTimeAgreement, Check::AtMost { value: 0.01 }, Published, "")
        .done(),
    );
    for (s, t_end, t_star, grad) in [(0.5, 3.0, 2.994, -2.0), (0.4, 3.2, 3.1396, -2.25)] {
        out.push(
            blowup_rates(
                blowup_preset(&format!("fnls_blowup_s{}", tag(s)), s, 1.0, t_end, true).describe("cubic fNLS, sech data"),
                t_star, grad, -0.5, 0.01, 0.1, Published,
            )
            .expect(Quantity::BlowupTimeAgreement, Check::AtMost { value: 0.01 }, Published, "")
            .done(),
        );
    }

    out.push(
        Builder::new("chirped_defocusing_like", focusing(0.4, 1.0), 1 << 17, 10.0, 4.0, 50_000, InitialDataSpec::ChirpedSech { b: 1.0, beta: 1.0 })
            .describe("chirped sech data at s = 0.4 spread out instead of blowing up")
            .monitors(|m| m.singularity_stop = true)
            .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "no blow-up")
            .expect(Quantity::SupRatioFinal, Check::AtMost { value: 1.0 }, Qualitative, "decreasing sup norm")
            .done(),
    );

    out.push(
        Builder::new("energy_super_small", focusing(0.2, 1.0), 1 << 17, 10.0, 10.0, 50_000, InitialDataSpec::Sech { beta: 0.1 })
            .describe("small sech data at s = 0.2 decay")
            .monitors(|m| {
                m.singularity_stop = true;
                m.series_stride = 10;
            })
            .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "")
            .expect(Quantity::SupMaxRise, Check::AtMost { value: 1e-9 }, Qualitative, "monotonically decreasing sup norm")
            .expect(Quantity::MaxHdotRatio, Check::AtMost { value: 2.0 }, Qualitative, "bounded critical Sobolev norm")
            .done(),
    );
    out.push(
        blowup_preset("energy_super_blowup", 0.2, 1.0, 6.5, true)
            .describe("energy supercritical fNLS, sech data")
            .expect(Quantity::BlowupTime { norm: Norm::Gradient }, near(6.2788, 0.02), Published, "mean of the two published fits")
            .expect(Quantity::BlowupTime { norm: Norm::Sup }, near(6.2788, 0.02), Published, "mean of the two published fits")
            .expect(Quantity::RateExponent { norm: Norm::Gradient }, near(-3.5, 0.15), Derived, "predicted rate")
            .done(),
    );

    for s in [0.9, 0.2] {
        out.push(
            Builder::new(&format!("defocusing_s{}", tag(s)), ModelParams::defocusing(s, 1.0).expect("preset"), 1 << 15, 50.0, 10.0, 10_000, InitialDataSpec::Sech { beta: 1.0 })
                .describe("defocusing fNLS, sech data")
                .monitors(|m| {
                    m.singularity_stop = true;
                    m.series_stride = 10;
                })
                .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "no stop triggered")
                .expect(
                    if s == 0.9 { Quantity::SupMaxRise } else { Quantity::MaxHdotRatio },
                    Check::AtMost { value: if s == 0.9 { 1e-9 } else { 2.0 } },
                    Qualitative,
                    if s == 0.9 { "monotonically decreasing sup norm" } else { "bounded critical Sobolev norm" },
                )
                .done(),
        );
    }

    for (eps, s, n, nt) in [(0.1, 1.0, 1 << 16, 20_000), (0.1, 0.9, 1 << 16, 20_000), (0.08, 0.9, 1 << 16, 20_000), (0.1, 0.8, 1 << 18, 50_000)] {
        out.push(
            Builder::new(&format!("semiclassical_focusing_eps{}_s{}", tag(eps), tag(s)), semiclassical(s, -1.0, eps), n, 7.0, 0.8, nt, InitialDataSpec::Sech { beta: 1.0 })
                .describe("semiclassical focusing fNLS, sech data")
                .monitors(|m| m.series_stride = 10)
                .expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "")
                .expect(Quantity::HumpCount { min_fraction: 0.05 }, Check::AtLeast { value: 3.0 }, Qualitative, "oscillatory zone after the peak")
                .done(),
        );
    }
    for (eps, s, n, d, t_end, nt) in [
        (0.1, 1.0, 1 << 14, 7.0, 1.0, 10_000),
        (0.1, 0.9, 1 << 14, 7.0, 1.0, 10_000),
        (0.01, 0.9, 1 << 14, 7.0, 1.0, 10_000),
        (0.1, 0.25, 1 << 14, 7.0, 3.0, 10_000),
        (0.1, 0.2, 1 << 17, 7.0, 3.8, 50_000),
    ] {
        let mut b = Builder::new(&format!("semiclassical_defocusing_eps{}_s{}", tag(eps), tag(s)), semiclassical(s, 1.0, eps), n, d, t_end, nt, InitialDataSpec::Sech { beta: 1.0 })
            .describe("semiclassical defocusing fNLS, sech data")
            .monitors(|m| m.series_stride = 10);
        if s == 0.2 {
            b = b
                // sech(7π) ≈ 6e-10 leaves a kink in the periodic extension, so the
                // spectrum ends in a k⁻² tail and δ says nothing here. Resolution
                // loss is tracked by the floor monitor instead.
                .monitors(|m| {
                    m.spectrum_floor_check = true;
                    m.series_stride = 1;
                })
                .expect(Quantity::FloorWarningTime, Check::Range { min: 3.2, max: 3.7 }, Qualitative, "resolution is lost near t = 3.5");
        } else {
            b = b.expect(Quantity::Status, status_check(&[RunStatus::Completed]), Qualitative, "");
            if s < 1.0 {
                b = b.expect(Quantity::HumpCount { min_fraction: 0.5 }, Check::AtLeast { value: 2.0 }, Qualitative, "the initial hump splits");
            }
        }
        out.push(b.done());
    }
    out
}

pub fn preset_names() -> Vec<String> {
    all_presets().into_iter().map(|s| s.name).collect()
}

pub fn presets() -> Vec<Scenario> {
    all_presets()
}

pub fn preset(name: &str) -> Result<Scenario> {
    let all = all_presets();
    let names: Vec<&str> = all.iter().map(|s| s.name.as_str()).collect();
    let listing = names.join(", ");
    all.iter()
        .find(|s| s.name == name)
        .cloned()
        .ok_or_else(|| Error::param("preset", format!("unknown preset `{name}`; available: {listing}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Scale,
    InitialData,
    Evolve,
    Fit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Validate => "validate",
            Stage::Scale => "scale",
            Stage::InitialData => "initial data",
            Stage::Evolve => "evolve",
            Stage::Fit => "fit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("scenario `{scenario}` failed at stage {stage}: {source}")]
pub struct ScenarioError {
    pub scenario: String,
    pub stage: Stage,
    pub source: Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measured {
    Value(f64),
    Status(RunStatus),
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measured::Value(v) => write!(f, "{v:.6e}"),
            Measured::Status(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub expectation: Expectation,
    pub measured: Option<Measured>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormFits {
    pub gradient: Option<BlowupFit>,
    pub sup: Option<BlowupFit>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    /// The scenario as actually run, after scaling.
    pub scenario: Scenario,
    pub scale: f64,
    pub run: RunResult,
    pub initial: PhysicalField,
    pub ground_state: Option<GroundState>,
    pub fits: Option<NormFits>,
    pub outcomes: Vec<Outcome>,
    pub warnings: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub scale: f64,
    pub integrator: Option<Integrator>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            scale: DEFAULT_SCALE,
            integrator: None,
        }
    }
}

/// Normalized log series `ln(g²/g₀²)` or `ln(m/m₀)`.
pub fn normalized_log_series(series: &[Sample], norm: Norm) -> Vec<f64> {
    let first = series.first();
    match norm {
        Norm::Gradient => {
            let g0 = first.map_or(1.0, |s| s.grad_l2);
            series.iter().map(|s| 2.0 * (s.grad_l2 / g0).ln()).collect()
        }
        Norm::Sup => {
            let m0 = first.map_or(1.0, |s| s.sup_norm);
            series.iter().map(|s| (s.sup_norm / m0).ln()).collect()
        }
    }
}

/// Gradient and sup-norm blow-up fits of a recorded series.
pub fn fit_norms(series: &[Sample], fit: &FitConfig) -> NormFits {
    let t: Vec<f64> = series.iter().map(|s| s.t).collect();
    let mut errors = Vec::new();
    let mut one = |norm: Norm| match fit_blowup_rate(&t, &normalized_log_series(series, norm), fit.model, fit.window) {
        Ok(f) => Some(f),
        Err(e) => {
            errors.push(format!("{norm:?}: {e}"));
            None
        }
    };
    let gradient = one(Norm::Gradient);
    let sup = one(Norm::Sup);
    NormFits { gradient, sup, errors }
}

fn count_humps(u: &PhysicalField, min_fraction: f64) -> usize {
    let a: Vec<f64> = u.values().iter().map(|z| z.norm_sqr()).collect();
    let n = a.len();
    let peak = a.iter().cloned().fold(0.0, f64::max);
    let level = min_fraction * peak;
    (0..n)
        .filter(|&j| {
            let (l, r) = (a[(j + n - 1) % n], a[(j + 1) % n]);
            a[j] > l && a[j] >= r && a[j] >= level
        })
        .count()
}

fn measure(q: &Quantity, run: &RunResult, initial: &PhysicalField, fits: Option<&NormFits>) -> Result<Measured, String> {
    let fit_of = |norm: Norm| -> Result<&BlowupFit, String> {
        let fits = fits.ok_or("no fit was performed")?;
        let f = match norm {
            Norm::Gradient => fits.gradient.as_ref(),
            Norm::Sup => fits.sup.as_ref(),
        };
        f.ok_or_else(|| format!("{norm:?} fit failed"))
    };
    let series = &run.series;
    let first = series.first().ok_or("empty series")?;
    let last = series.last().expect("non-empty");
    let v = match *q {
        Quantity::Status => return Ok(Measured::Status(run.status)),
        Quantity::BlowupTime { norm } => fit_of(norm)?.t_star,
        Quantity::RateExponent { norm } => fit_of(norm)?.kappa1,
        Quantity::BlowupTimeAgreement => {
            let (g, s) = (fit_of(Norm::Gradient)?.t_star, fit_of(Norm::Sup)?.t_star);
            (g - s).abs() / g.abs()
        }
        Quantity::StandingWaveError => {
            if run.snapshots.is_empty() {
                return Err("no snapshots recorded".into());
            }
            run.snapshots
                .iter()
                .map(|snap| {
                    let phase = Complex64::from_polar(1.0, snap.t);
                    snap.field
                        .values()
                        .iter()
                        .zip(initial.values())
                        .fold(0.0f64, |m, (a, b)| m.max((a - b * phase).norm()))
                })
                .fold(0.0, f64::max)
        }
        Quantity::MaxEnergyDrift => series.iter().map(|s| s.delta_e).fold(0.0, f64::max),
        Quantity::LateSupMean { from_fraction } => {
            let t0 = from_fraction * run.stop_time;
            let late: Vec<f64> = series.iter().filter(|s| s.t >= t0).map(|s| s.sup_norm).collect();
            if late.is_empty() {
                return Err("no samples in the late window".into());
            }
            late.iter().sum::<f64>() / late.len() as f64
        }
        Quantity::SupMaxRise => series
            .windows(2)
            .map(|w| (w[1].sup_norm - w[0].sup_norm) / first.sup_norm)
            .fold(f64::NEG_INFINITY, f64::max),
        Quantity::SupRatioFinal => last.sup_norm / first.sup_norm,
        Quantity::MaxHdotRatio => {
            if !(first.hdot_sigma > 0.0) {
                return Err("initial critical norm vanishes".into());
            }
            series.iter().map(|s| s.hdot_sigma).fold(0.0, f64::max) / first.hdot_sigma
        }
        Quantity::HumpCount { min_fraction } => count_humps(&run.final_state, min_fraction) as f64,
        Quantity::FloorWarningTime => run.floor_warning_time.ok_or("no spectral floor warning was raised")?,
        Quantity::StopTime => run.stop_time,
    };
    Ok(Measured::Value(v))
}

fn judge(check: &Check, m: Measured) -> (bool, String) {
    match (check, m) {
        (Check::StatusIn { statuses }, Measured::Status(s)) => (statuses.contains(&s), format!("status {s:?}")),
        (Check::Near { value, rel_tol }, Measured::Value(v)) => {
            let rel = (v - value).abs() / value.abs();
            (rel <= *rel_tol, format!("relative error {rel:.3e} (tolerance {rel_tol:.3e})"))
        }
        (Check::Range { min, max }, Measured::Value(v)) => (v >= *min && v <= *max, format!("range [{min}, {max}]")),
        (Check::AtMost { value }, Measured::Value(v)) => (v <= *value, format!("at most {value:e}")),
        (Check::AtLeast { value }, Measured::Value(v)) => (v >= *value, format!("at least {value:e}")),
        (c, m) => (false, format!("check {c:?} does not apply to {m}")),
    }
}

/// Builds the data, evolves, fits and checks every expectation.
pub fn run_scenario(
    scenario: &Scenario,
    options: &RunOptions,
    provider: &mut dyn GroundStateProvider,
) -> std::result::Result<ScenarioReport, ScenarioError> {
    let fail = |stage: Stage| {
        let name = scenario.name.clone();
        move |source: Error| ScenarioError {
            scenario: name,
            stage,
            source,
        }
    };
    scenario.validate().map_err(fail(Stage::Validate))?;
    let mut sc = scenario.scaled(options.scale).map_err(fail(Stage::Scale))?;
    if let Some(i) = options.integrator {
        sc.integrator = i;
    }
    let built = build_initial_data(&sc.data, &sc.grid, &sc.params, provider).map_err(fail(Stage::InitialData))?;
    let run = evolve(&sc.params, &built.field, &sc.time, &sc.monitors, sc.integrator).map_err(fail(Stage::Evolve))?;

    let mut warnings = built.warnings;
    let fits = sc.fit.as_ref().map(|f| fit_norms(&run.series, f));
    if let Some(f) = &fits {
        warnings.extend(f.errors.iter().map(|e| format!("fit: {e}")));
    }
    if let Some(t) = run.floor_warning_time {
        warnings.push(format!("spectral tail rose above the floor threshold at t = {t}"));
    }

    let outcomes = sc
        .expected
        .iter()
        .map(|e| match measure(&e.quantity, &run, &built.field, fits.as_ref()) {
            Ok(m) => {
                let (passed, detail) = judge(&e.check, m);
                Outcome {
                    expectation: e.clone(),
                    measured: Some(m),
                    passed,
                    detail,
                }
            }
            Err(why) => Outcome {
                expectation: e.clone(),
                measured: None,
                passed: false,
                detail: why,
            },
        })
        .collect();

    Ok(ScenarioReport {
        scenario: sc,
        scale: options.scale,
        run,
        initial: built.field,
        ground_state: built.ground_state,
        fits,
        outcomes,
        warnings,
    })
}
