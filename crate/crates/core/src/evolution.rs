//! Time integration of `∂_t ψ̂ = L ψ̂ + N(ψ)` with
//! `L = −i ε^{2s−1}|k|^{2s}/2` and `N(ψ) = −iγ ε^{−1} (|ψ|^{2p}ψ)^`.
//!
//! Two fourth-order integrators are provided: a triple-jump composition of
//! Strang splitting steps, and an integrating-factor RK4. Both keep the
//! state in Fourier space between steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::spectrum::{self, SpectrumFit, WindowPolicy};
use crate::error::{Error, Result};
use crate::par;
use crate::params::ModelParams;
use crate::spectral::{self, Grid, PhysicalField, SpectralField};

/// Triple-jump weight `1/(2 − 2^{1/3})`.
pub fn triple_jump_weight() -> f64 {
    1.0 / (2.0 - 2f64.cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeGrid", into = "RawTimeGrid")]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TryFrom<RawTimeGrid> for TimeGrid {
    type Error = Error;
    fn try_from(r: RawTimeGrid) -> Result<Self> {
        TimeGrid::new(r.t_end, r.n_steps)
    }
}

impl From<TimeGrid> for RawTimeGrid {
    fn from(t: TimeGrid) -> Self {
        RawTimeGrid {
            t_end: t.t_end,
            n_steps: t.n_steps,
        }
    }
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be at least 1"));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        if step == self.n_steps {
            self.t_end
        } else {
            step as f64 * self.dt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Relative energy drift above which the run is abandoned.
    pub energy_drift_threshold: f64,
    /// Stop once the traced singularity is closer than `2πD/N`.
    pub singularity_stop: bool,
    /// Steps between recorded samples (and spectrum fits).
    pub series_stride: usize,
    pub snapshot_times: Vec<f64>,
    /// Record when the spectral tail rises above `floor_ratio_threshold`.
    pub spectrum_floor_check: bool,
    pub floor_ratio_threshold: f64,
    /// Zero modes with `|m| > N/3` after each step.
    pub dealias: bool,
    pub window: WindowPolicy,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            energy_drift_threshold: 1e-3,
            singularity_stop: false,
            series_stride: 1,
            snapshot_times: Vec::new(),
            spectrum_floor_check: false,
            floor_ratio_threshold: 1e-4,
            dealias: false,
            window: WindowPolicy::default(),
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self, tg: &TimeGrid) -> Result<()> {
        if self.series_stride == 0 {
            return Err(Error::param("series_stride", "must be at least 1"));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= tg.t_end()))
        {
            return Err(Error::param(
                "snapshot_times",
                format!("{t} lies outside [0, {}]", tg.t_end()),
            ));
        }
        if !(self.energy_drift_threshold > 0.0) {
            return Err(Error::param("energy_drift_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Splitting4,
    #[serde(alias = "rk4")]
    StiffRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    StoppedSingularity,
    StoppedOverflow,
    StoppedEnergyDrift,
}

/// One row of the diagnostic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub delta_e: f64,
    pub sup_norm: f64,
    pub grad_l2: f64,
    /// Ḣ^σ seminorm at the scaling-critical index (clamped at 0).
    pub hdot_sigma: f64,
    /// Traced singularity distance; NaN when the spectrum cannot be fitted.
    pub delta: f64,
    pub mu: f64,
    /// Spectral tail ratio, see [`spectrum::spectral_tail_ratio`].
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: PhysicalField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub stop_time: f64,
    pub steps_taken: usize,
    pub series: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    /// `σ_c = 1/2 − s/p`.
    pub sigma_c: f64,
    /// Index actually used for `hdot_sigma`: `max(σ_c, 0)`.
    pub sigma_used: f64,
    pub final_state: PhysicalField,
    pub last_fit: Option<SpectrumFit>,
    pub floor_warning_time: Option<f64>,
    pub integrator: Integrator,
}

impl RunResult {
    pub fn times(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.series.iter().map(f).collect()
    }
}

/// Reusable single-step machinery: multiplier tables, work buffers and FFT
/// scratch for one `(grid, params, Δt, integrator)` combination.
pub struct Stepper {
    grid: Grid,
    params: ModelParams,
    dt: f64,
    integrator: Integrator,
    table_a: Vec<Complex64>,
    table_b: Vec<Complex64>,
    work: [Vec<Complex64>; 5],
    scratch: Vec<Complex64>,
    dealias: bool,
}

fn linear_multipliers(grid: &Grid, params: &ModelParams, tau: f64) -> Vec<Complex64> {
    let scale = 0.5 * params.dispersion_scale() * tau;
    let e = 2.0 * params.s();
    grid.wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -scale * k.abs().powf(e)))
        .collect()
}

fn nonlinear_rotate(values: &mut [Complex64], params: &ModelParams, tau: f64) {
    let rate = -params.gamma() * tau / params.epsilon();
    let p = params.p();
    par::for_each_indexed(values, |_, z| {
        *z *= Complex64::from_polar(1.0, rate * spectral::pow_p(z.norm_sqr(), p));
    });
}

fn all_finite(values: &[Complex64]) -> bool {
    par::all(values, |z| z.re.is_finite() && z.im.is_finite())
}

impl Stepper {
    pub fn new(grid: &Grid, params: &ModelParams, dt: f64, integrator: Integrator) -> Self {
        let (table_a, table_b) = match integrator {
            Integrator::Splitting4 => {
                let c = triple_jump_weight();
                (
                    linear_multipliers(grid, params, 0.5 * c * dt),
                    linear_multipliers(grid, params, 0.5 * (1.0 - c) * dt),
                )
            }
            // e^{LΔt/2} and e^{LΔt}
            Integrator::StiffRk4 => (
                linear_multipliers(grid, params, 0.5 * dt),
                linear_multipliers(grid, params, dt),
            ),
        };
        let n = grid.n_modes();
        let zero = || vec![Complex64::new(0.0, 0.0); n];
        Stepper {
            grid: grid.clone(),
            params: *params,
            dt,
            integrator,
            table_a,
            table_b,
            work: [zero(), zero(), zero(), zero(), zero()],
            scratch: grid.fft_scratch(),
            dealias: false,
        }
    }

    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances spectral coefficients by one step. Returns `false` if a
    /// non-finite value appeared; the contents of `state` are then undefined.
    pub fn step(&mut self, state: &mut [Complex64]) -> bool {
        let ok = match self.integrator {
            Integrator::Splitting4 => self.step_splitting(state),
            Integrator::StiffRk4 => self.step_rk4(state),
        };
        if ok && self.dealias {
            let n = self.grid.n_modes() as i64;
            let grid = &self.grid;
            par::for_each_indexed(state, |j, z| {
                if 3 * grid.mode(j).abs() > n {
                    *z = Complex64::new(0.0, 0.0);
                }
            });
        }
        ok
    }

    fn multiply(state: &mut [Complex64], table: &[Complex64]) {
        par::zip_for_each(state, table, |z, m| *z *= m);
    }

    fn step_splitting(&mut self, state: &mut [Complex64]) -> bool {
        let c = triple_jump_weight();
        let weights = [c, 1.0 - 2.0 * c, c];
        let grid = &self.grid;
        Self::multiply(state, &self.table_a);
        for (i, w) in weights.iter().enumerate() {
            grid.inverse_in_place(state, &mut self.scratch);
            nonlinear_rotate(state, &self.params, w * self.dt);
            grid.forward_in_place(state, &mut self.scratch);
            let table = if i == 2 { &self.table_a } else { &self.table_b };
            Self::multiply(state, table);
        }
        all_finite(state)
    }

    /// `out ← N(v̂)·h` with `N(v̂) = −iγ/ε F(|v|^{2p} v)`.
    fn nonlinear_term(
        grid: &Grid,
        params: &ModelParams,
        h: f64,
        input: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        out.copy_from_slice(input);
        grid.inverse_in_place(out, scratch);
        let factor = Complex64::new(0.0, -params.gamma() * h / params.epsilon());
        let p = params.p();
        par::for_each_indexed(out, |_, z| *z *= factor * spectral::pow_p(z.norm_sqr(), p));
        grid.forward_in_place(out, scratch);
    }

    fn step_rk4(&mut self, u: &mut [Complex64]) -> bool {
        let h = self.dt;
        let e1 = &self.table_a;
        let e2 = &self.table_b;
        let [a, b, c, d, tmp] = &mut self.work;
        let grid = &self.grid;
        let params = &self.params;

        Self::nonlinear_term(grid, params, h, u, a, &mut self.scratch);
        {
            let (u, a) = (&*u, &*a);
            par::for_each_indexed(tmp, |j, z| *z = e1[j] * (u[j] + 0.5 * a[j]));
        }
        Self::nonlinear_term(grid, params, h, tmp, b, &mut self.scratch);
        {
            let (u, b) = (&*u, &*b);
            par::for_each_indexed(tmp, |j, z| *z = e1[j] * u[j] + 0.5 * b[j]);
        }
        Self::nonlinear_term(grid, params, h, tmp, c, &mut self.scratch);
        {
            let (u, c) = (&*u, &*c);
            par::for_each_indexed(tmp, |j, z| *z = e2[j] * u[j] + e1[j] * c[j]);
        }
        Self::nonlinear_term(grid, params, h, tmp, d, &mut self.scratch);
        {
            let (a, b, c, d) = (&*a, &*b, &*c, &*d);
            par::for_each_indexed(u, |j, z| {
                *z = e2[j] * *z + (e2[j] * a[j] + 2.0 * e1[j] * (b[j] + c[j]) + d[j]) / 6.0;
            });
        }
        all_finite(u)
    }
}

/// Exact flow of the linear part over `Δt`: unitary, diagonal in `k`.
pub fn linear_flow(u_hat: &SpectralField, params: &ModelParams, dt: f64) -> SpectralField {
    let table = linear_multipliers(u_hat.grid(), params, dt);
    let mut out = u_hat.clone();
    par::zip_for_each(out.coefficients_mut(), &table, |z, m| *z *= m);
    out
}

/// Exact flow of the nonlinear part: a pointwise phase rotation.
pub fn nonlinear_flow(u: &PhysicalField, params: &ModelParams, dt: f64) -> Result<PhysicalField> {
    let mut out = u.clone();
    nonlinear_rotate(out.values_mut(), params, dt);
    if !out.is_finite() {
        return Err(Error::Overflow { time: dt });
    }
    Ok(out)
}

/// One fourth-order splitting step.
pub fn step_splitting4(u: &PhysicalField, params: &ModelParams, dt: f64) -> Result<PhysicalField> {
    let grid = u.grid();
    let mut stepper = Stepper::new(grid, params, dt, Integrator::Splitting4);
    let mut state = u.to_spectral().into_coefficients();
    if !stepper.step(&mut state) {
        return Err(Error::Overflow { time: dt });
    }
    let mut scratch = grid.fft_scratch();
    grid.inverse_in_place(&mut state, &mut scratch);
    PhysicalField::new(grid.clone(), state)
}

/// One integrating-factor RK4 step.
pub fn step_stiff_rk4(u_hat: &SpectralField, params: &ModelParams, dt: f64) -> Result<SpectralField> {
    let mut stepper = Stepper::new(u_hat.grid(), params, dt, Integrator::StiffRk4);
    let mut state = u_hat.coefficients().to_vec();
    if !stepper.step(&mut state) {
        return Err(Error::Overflow { time: dt });
    }
    SpectralField::new(u_hat.grid().clone(), state)
}

struct Diagnostics<'a> {
    grid: &'a Grid,
    params: &'a ModelParams,
    mon: &'a MonitorConfig,
    kinetic_table: Vec<f64>,
    gradient_table: Vec<f64>,
    sigma_table: Vec<f64>,
    e0: Option<f64>,
    phys: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Diagnostics<'_> {
    fn sample(&mut self, t: f64, state: &[Complex64]) -> (Sample, Option<SpectrumFit>) {
        let grid = self.grid;
        self.phys.copy_from_slice(state);
        grid.inverse_in_place(&mut self.phys, &mut self.scratch);
        let values = &self.phys;
        let energy =
            spectral::energy_from_parts(values, state, grid, self.params, &self.kinetic_table);
        let e0 = *self.e0.get_or_insert(energy);
        let fit = spectrum::fit_coefficients(state, grid, self.mon.window).ok();
        let sample = Sample {
            t,
            mass: spectral::mass_of(values, grid.dx()),
            energy,
            delta_e: spectral::relative_energy_drift(energy, e0).value,
            sup_norm: spectral::sup_of(values),
            grad_l2: spectral::weighted_sum_sq(state, &self.gradient_table, grid).sqrt(),
            hdot_sigma: spectral::weighted_sum_sq(state, &self.sigma_table, grid).sqrt(),
            delta: fit.map_or(f64::NAN, |f| f.delta),
            mu: fit.map_or(f64::NAN, |f| f.mu),
            tail_ratio: spectrum::spectral_tail_ratio(state),
        };
        (sample, fit)
    }
}

/// Advances `u0` over `tg`, recording diagnostics and applying the stop rules
/// of `mon`.
pub fn evolve(
    params: &ModelParams,
    u0: &PhysicalField,
    tg: &TimeGrid,
    mon: &MonitorConfig,
    integrator: Integrator,
) -> Result<RunResult> {
    evolve_observed(params, u0, tg, mon, integrator, |_| {})
}

/// [`evolve`] with a callback invoked after every recorded sample.
pub fn evolve_observed(
    params: &ModelParams,
    u0: &PhysicalField,
    tg: &TimeGrid,
    mon: &MonitorConfig,
    integrator: Integrator,
    mut observer: impl FnMut(&Sample),
) -> Result<RunResult> {
    mon.validate(tg)?;
    if !u0.is_finite() {
        return Err(Error::param("u0", "initial data contains non-finite samples"));
    }
    let grid = u0.grid();
    let m = spectrum::min_resolved_distance(grid);
    let sigma_c = params.critical_sigma();
    let sigma_used = sigma_c.max(0.0);

    let mut stepper = Stepper::new(grid, params, tg.dt(), integrator).with_dealiasing(mon.dealias);
    let mut state = u0.to_spectral().into_coefficients();
    let mut previous = state.clone();
    let mut diag = Diagnostics {
        grid,
        params,
        mon,
        kinetic_table: spectral::symbol_table(grid, 2.0 * params.s()),
        gradient_table: spectral::symbol_table(grid, 2.0),
        sigma_table: spectral::symbol_table(grid, 2.0 * sigma_used),
        e0: None,
        phys: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
        scratch: grid.fft_scratch(),
    };

    let mut snapshot_times = mon.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut next_snapshot = 0usize;
    let mut snapshots = Vec::new();
    let mut series = Vec::new();
    let mut last_fit = None;
    let mut floor_warning_time = None;
    let mut status = RunStatus::Completed;
    let mut steps_taken = 0usize;
    let mut last_recorded = None;
    let half_dt = 0.5 * tg.dt();

    let mut take_snapshots = |t: f64, state: &[Complex64], snapshots: &mut Vec<Snapshot>, force: bool| {
        while next_snapshot < snapshot_times.len()
            && (t >= snapshot_times[next_snapshot] - half_dt || force)
        {
            let mut values = state.to_vec();
            let mut scratch = grid.fft_scratch();
            grid.inverse_in_place(&mut values, &mut scratch);
            snapshots.push(Snapshot {
                t,
                field: PhysicalField::new(grid.clone(), values).expect("grid length"),
            });
            next_snapshot += 1;
            if force {
                break;
            }
        }
    };

    for step in 0..=tg.n_steps() {
        let t = tg.time(step);
        if step > 0 {
            previous.copy_from_slice(&state);
            if !stepper.step(&mut state) {
                state.copy_from_slice(&previous);
                status = RunStatus::StoppedOverflow;
                break;
            }
            steps_taken = step;
        }
        take_snapshots(t, &state, &mut snapshots, false);

        if step % mon.series_stride == 0 || step == tg.n_steps() {
            let (sample, fit) = diag.sample(t, &state);
            last_recorded = Some(step);
            if fit.is_some() {
                last_fit = fit;
            }
            if mon.spectrum_floor_check
                && floor_warning_time.is_none()
                && sample.tail_ratio > mon.floor_ratio_threshold
            {
                floor_warning_time = Some(t);
            }
            let non_finite = !(sample.mass.is_finite()
                && sample.energy.is_finite()
                && sample.sup_norm.is_finite());
            if non_finite {
                // Finite coefficients whose quadratic quantities overflow:
                // fall back to the previous step.
                if step > 0 {
                    state.copy_from_slice(&previous);
                    steps_taken = step - 1;
                    last_recorded = None;
                }
                status = RunStatus::StoppedOverflow;
                break;
            }
            series.push(sample);
            observer(&sample);
            if sample.delta_e > mon.energy_drift_threshold {
                status = RunStatus::StoppedEnergyDrift;
                break;
            }
            if mon.singularity_stop {
                if let Some(f) = fit.filter(|f| f.reliable) {
                    if spectrum::singularity_stop_check(&f, m) {
                        status = RunStatus::StoppedSingularity;
                        break;
                    }
                }
            }
        }
    }

    // Keep the last finite state in the series after an overflow.
    if status == RunStatus::StoppedOverflow && last_recorded != Some(steps_taken) {
        let t = tg.time(steps_taken);
        let (sample, fit) = diag.sample(t, &state);
        if sample.sup_norm.is_finite() && series.last().is_none_or(|s: &Sample| s.t < t) {
            series.push(sample);
            observer(&sample);
            if fit.is_some() {
                last_fit = fit;
            }
        }
    }

    let stop_time = match status {
        RunStatus::Completed => tg.t_end(),
        _ => tg.time(steps_taken),
    };
    let mut scratch = grid.fft_scratch();
    let mut values = state;
    grid.inverse_in_place(&mut values, &mut scratch);
    let final_state = PhysicalField::new(grid.clone(), values)?;

    Ok(RunResult {
        status,
        stop_time,
        steps_taken,
        series,
        snapshots,
        sigma_c,
        sigma_used,
        final_state,
        last_fit,
        floor_warning_time,
        integrator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{mass, sup_norm, to_spectral};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.n_modes())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        PhysicalField::new(grid.clone(), v).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        let tg = TimeGrid::new(6.0, 20000).unwrap();
        assert_relative_eq!(tg.dt(), 3e-4);
        assert_eq!(tg.time(20000), 6.0);
    }

    #[test]
    fn linear_flow_identity_and_phase() {
        let g = Grid::new(64, 2.0).unwrap();
        let params = ModelParams::focusing(0.7, 1.0).unwrap();
        let u = random_field(&g, 1).to_spectral();
        let same = linear_flow(&u, &params, 0.0);
        assert_eq!(same, u);

        let k0 = 3.0 / 2.0;
        let mode = PhysicalField::from_fn(&g, |x| Complex64::from_polar(1.0, k0 * x)).to_spectral();
        let dt = 0.37;
        let out = linear_flow(&mode, &params, dt);
        let j = g.index_of_mode(3);
        let expected = mode.coefficients()[j] * Complex64::from_polar(1.0, -k0.powf(1.4) * dt / 2.0);
        assert!((out.coefficients()[j] - expected).norm() < 1e-11);
        assert_relative_eq!(out.coefficients()[j].norm(), mode.coefficients()[j].norm(), epsilon = 1e-12);
    }

    #[test]
    fn linear_flow_semigroup() {
        let g = Grid::new(128, 3.0).unwrap();
        let params = ModelParams::new(0.45, 1.0, 1.0, 0.1).unwrap();
        let u = random_field(&g, 2).to_spectral();
        let dt = 0.013;
        let mut stepped = u.clone();
        for _ in 0..10 {
            stepped = linear_flow(&stepped, &params, dt);
        }
        let once = linear_flow(&u, &params, 10.0 * dt);
        let scale = once.coefficients().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max_diff(stepped.coefficients(), once.coefficients()) <= 1e-12 * scale);
    }

    #[test]
    fn nonlinear_flow_cases() {
        let g = Grid::new(32, 1.0).unwrap();
        let params = ModelParams::focusing(0.5, 1.0).unwrap();
        let u = PhysicalField::from_fn(&g, |x| Complex64::from_polar(1.0, x));
        assert_eq!(nonlinear_flow(&u, &params, 0.0).unwrap(), u);
        let v = nonlinear_flow(&u, &params, std::f64::consts::PI).unwrap();
        assert!(max_diff(v.values(), u.scaled(-1.0).values()) < 1e-14);

        let r = random_field(&g, 3);
        let w = nonlinear_flow(&r, &params, 0.8).unwrap();
        assert_relative_eq!(mass(&w), mass(&r), max_relative = 1e-13);
        for (a, b) in w.values().iter().zip(r.values()) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-14);
        }
    }

    #[test]
    fn splitting_time_reversal() {
        let g = Grid::new(128, 5.0).unwrap();
        let params = ModelParams::focusing(0.6, 1.0).unwrap();
        let u = PhysicalField::from_fn(&g, |x| Complex64::new(1.2 / x.cosh(), 0.3 * (-x * x).exp()));
        let fwd = step_splitting4(&u, &params, 0.01).unwrap();
        let back = step_splitting4(&fwd, &params, -0.01).unwrap();
        assert!(max_diff(back.values(), u.values()) < 1e-12);
    }

    #[test]
    fn tiny_step_is_near_identity() {
        let g = Grid::new(64, 5.0).unwrap();
        let params = ModelParams::focusing(0.8, 1.0).unwrap();
        let u = PhysicalField::from_real_fn(&g, |x| 1.0 / x.cosh());
        let v = step_splitting4(&u, &params, 1e-12).unwrap();
        assert!(max_diff(v.values(), u.values()) < 1e-10);
        let w = step_stiff_rk4(&u.to_spectral(), &params, 1e-12).unwrap().to_physical();
        assert!(max_diff(w.values(), u.values()) < 1e-10);
    }

    #[test]
    fn rk4_integrates_linear_problem_exactly() {
        let g = Grid::new(64, 4.0).unwrap();
        let params = ModelParams::focusing(0.5, 1.0).unwrap();
        let mut u = random_field(&g, 4);
        // Amplitude so small that the cubic term is below rounding.
        u = u.scaled(1e-120);
        let uh = u.to_spectral();
        let dt = 0.05;
        let mut v = uh.clone();
        for _ in 0..20 {
            v = step_stiff_rk4(&v, &params, dt).unwrap();
        }
        let exact = linear_flow(&uh, &params, 20.0 * dt);
        let scale = exact.coefficients().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(max_diff(v.coefficients(), exact.coefficients()) <= 1e-12 * scale);
    }

    #[test]
    fn overflow_is_reported() {
        let g = Grid::new(32, 1.0).unwrap();
        let params = ModelParams::focusing(1.0, 3.0).unwrap();
        let u = PhysicalField::from_real_fn(&g, |_| 1e80);
        assert!(matches!(
            step_stiff_rk4(&u.to_spectral(), &params, 1.0),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn evolve_records_series_and_snapshots() {
        let g = Grid::new(256, 10.0).unwrap();
        let params = ModelParams::defocusing(0.9, 1.0).unwrap();
        let u0 = PhysicalField::from_real_fn(&g, |x| 1.0 / x.cosh());
        let tg = TimeGrid::new(1.0, 200).unwrap();
        let mon = MonitorConfig {
            series_stride: 20,
            snapshot_times: vec![0.0, 0.5, 1.0],
            ..MonitorConfig::default()
        };
        let run = evolve(&params, &u0, &tg, &mon, Integrator::Splitting4).unwrap();
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(run.stop_time, 1.0);
        assert_eq!(run.series.len(), 11);
        assert!(run.series.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(run.snapshots.len(), 3);
        assert_relative_eq!(run.snapshots[1].t, 0.5);
        assert!(run.series.iter().all(|s| (s.mass - 2.0).abs() < 1e-12));
        assert!(run.series.iter().all(|s| s.delta_e < 1e-9));
        assert_relative_eq!(run.sigma_c, 0.5 - 0.9, epsilon = 1e-15);
        assert_eq!(run.sigma_used, 0.0);
        assert!(sup_norm(&run.final_state) < 1.0);
    }

    #[test]
    fn evolve_rejects_bad_input() {
        let g = Grid::new(32, 1.0).unwrap();
        let params = ModelParams::focusing(1.0, 1.0).unwrap();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let bad = PhysicalField::from_real_fn(&g, |_| f64::NAN);
        assert!(evolve(&params, &bad, &tg, &MonitorConfig::default(), Integrator::Splitting4).is_err());
        let ok = PhysicalField::from_real_fn(&g, |_| 0.1);
        let mon = MonitorConfig {
            snapshot_times: vec![2.0],
            ..MonitorConfig::default()
        };
        assert!(evolve(&params, &ok, &tg, &mon, Integrator::Splitting4).is_err());
    }

    #[test]
    fn evolve_is_deterministic() {
        let g = Grid::new(128, 6.0).unwrap();
        let params = ModelParams::focusing(0.7, 1.0).unwrap();
        let u0 = PhysicalField::from_real_fn(&g, |x| 1.3 / x.cosh());
        let tg = TimeGrid::new(0.5, 50).unwrap();
        let mon = MonitorConfig::default();
        for integ in [Integrator::Splitting4, Integrator::StiffRk4] {
            let a = evolve(&params, &u0, &tg, &mon, integ).unwrap();
            let b = evolve(&params, &u0, &tg, &mon, integ).unwrap();
            for (x, y) in a.series.iter().zip(&b.series) {
                assert_eq!(x.energy.to_bits(), y.energy.to_bits());
                assert_eq!(x.sup_norm.to_bits(), y.sup_norm.to_bits());
            }
        }
        let _ = to_spectral(&u0);
    }

    #[test]
    fn overflow_keeps_last_finite_state() {
        // Septic focusing NLS from large data blows up quickly; RK4 overflows.
        let g = Grid::new(256, 2.0).unwrap();
        let params = ModelParams::focusing(1.0, 3.0).unwrap();
        let u0 = PhysicalField::from_real_fn(&g, |x| 3.0 / x.cosh());
        let tg = TimeGrid::new(1.0, 100).unwrap();
        let mon = MonitorConfig {
            energy_drift_threshold: f64::INFINITY,
            ..MonitorConfig::default()
        };
        let run = evolve(&params, &u0, &tg, &mon, Integrator::StiffRk4).unwrap();
        assert_eq!(run.status, RunStatus::StoppedOverflow);
        assert!(run.final_state.is_finite());
        assert!(run.series.iter().all(|s| s.sup_norm.is_finite()));
        assert!(run.stop_time < 1.0);
        assert_relative_eq!(run.series.last().unwrap().t, run.stop_time);
    }
}
