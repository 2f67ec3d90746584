//! Periodic grid, discrete Fourier transforms, fractional operators, norms and
//! conserved quantities.
//!
//! Conventions:
//! * nodes `x_j = D(−π + 2πj/N)`, `j = 0..N`;
//! * coefficient index `j` carries the integer mode `m = j` for `j < N/2`
//!   and `m = j − N` otherwise (standard FFT ordering), with wavenumber
//!   `k = m/D`; the unpaired Nyquist mode is `m = −N/2`;
//! * the forward transform is the unnormalized DFT `û_m = Σ_j u_j e^{−2πi jm/N}`,
//!   the inverse carries `1/N`.
//!
//! All integral quantities carry the Parseval weight so that they approximate
//! continuum integrals: `Δx Σ_j |u_j|² = (Δx/N) Σ_m |û_m|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::params::ModelParams;

struct GridInner {
    n: usize,
    half_width: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `x ∈ D[−π, π]` with `N` nodes.
///
/// Cloning is cheap: FFT plans and the wavenumber table are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_modes: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(n_modes: usize, half_width: f64) -> Result<Self> {
        if n_modes < 8 || !n_modes.is_power_of_two() {
            return Err(Error::param(
                "n_modes",
                format!("must be a power of two >= 8, got {n_modes}"),
            ));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::param(
                "half_width",
                format!("must be positive, got {half_width}"),
            ));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_modes);
        let inverse = planner.plan_fft_inverse(n_modes);
        let wavenumbers = (0..n_modes)
            .map(|j| mode_number(j, n_modes) as f64 / half_width)
            .collect();
        Ok(Grid {
            inner: Arc::new(GridInner {
                n: n_modes,
                half_width,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_modes: self.n_modes(),
            half_width: self.half_width(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.inner.n
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    /// Domain length `2πD`.
    pub fn length(&self) -> f64 {
        2.0 * PI * self.inner.half_width
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.inner.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.inner.half_width * (-PI + 2.0 * PI * j as f64 / self.inner.n as f64)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.inner.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers `k_j = m_j / D` in coefficient order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Integer mode carried by coefficient index `j`.
    pub fn mode(&self, j: usize) -> i64 {
        mode_number(j, self.inner.n)
    }

    /// Coefficient index of integer mode `m`, `−N/2 <= m < N/2`.
    pub fn index_of_mode(&self, m: i64) -> usize {
        let n = self.inner.n as i64;
        debug_assert!(-n / 2 <= m && m < n / 2);
        m.rem_euclid(n) as usize
    }

    /// Index of the node mirrored through `x = 0`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.inner.n - j) % self.inner.n
    }

    /// Scratch buffer large enough for either transform direction.
    pub fn fft_scratch(&self) -> Vec<Complex64> {
        let len = self
            .inner
            .forward
            .get_inplace_scratch_len()
            .max(self.inner.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// In-place unnormalized forward DFT.
    pub fn forward_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.inner.n);
        self.inner.forward.process_with_scratch(buf, scratch);
    }

    /// In-place inverse DFT including the `1/N` factor.
    pub fn inverse_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.inner.n);
        self.inner.inverse.process_with_scratch(buf, scratch);
        let scale = 1.0 / self.inner.n as f64;
        par::for_each_indexed(buf, |_, z| *z *= scale);
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_n: self.n_modes(),
                expected_d: self.half_width(),
                found_n: other.n_modes(),
                found_d: other.half_width(),
            })
        }
    }
}

fn mode_number(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.half_width == other.inner.half_width)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_modes", &self.inner.n)
            .field("half_width", &self.inner.half_width)
            .finish()
    }
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.n_modes, spec.half_width)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        g.spec()
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        let spec = GridSpec::deserialize(d)?;
        Grid::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// Samples `ψ(x_j)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Discrete Fourier coefficients of a field, in FFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_modes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes(),
                found: values.len(),
            });
        }
        Ok(PhysicalField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        PhysicalField {
            values: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n_modes()).map(|j| f(grid.node(j))).collect();
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        par::all(&self.values, |z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        par::for_each_indexed(&mut out.values, |_, z| *z *= factor);
        out
    }

    pub fn to_spectral(&self) -> SpectralField {
        to_spectral(self)
    }
}

impl SpectralField {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n_modes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_modes(),
                found: coefficients.len(),
            });
        }
        Ok(SpectralField { grid, coefficients })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coefficients: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    pub fn to_physical(&self) -> PhysicalField {
        to_physical(self)
    }
}

pub fn to_spectral(u: &PhysicalField) -> SpectralField {
    let mut buf = u.values.clone();
    let mut scratch = u.grid.fft_scratch();
    u.grid.forward_in_place(&mut buf, &mut scratch);
    SpectralField {
        grid: u.grid.clone(),
        coefficients: buf,
    }
}

pub fn to_physical(u_hat: &SpectralField) -> PhysicalField {
    let mut buf = u_hat.coefficients.clone();
    let mut scratch = u_hat.grid.fft_scratch();
    u_hat.grid.inverse_in_place(&mut buf, &mut scratch);
    PhysicalField {
        grid: u_hat.grid.clone(),
        values: buf,
    }
}

fn check_order(name: &'static str, s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in (0, 1], got {s}")))
    }
}

/// Multiplies coefficients in place by `|k|^{2s}`.
pub(crate) fn apply_symbol_in_place(coeffs: &mut [Complex64], grid: &Grid, exponent: f64) {
    let k = grid.wavenumbers();
    par::for_each_indexed(coeffs, |j, z| *z *= k[j].abs().powf(exponent));
}

/// `(−Δ)^s u = F⁻¹(|k|^{2s} F u)`.
pub fn apply_fractional_laplacian(u: &PhysicalField, s: f64) -> Result<PhysicalField> {
    check_order("s", s)?;
    let grid = &u.grid;
    let mut buf = u.values.clone();
    let mut scratch = grid.fft_scratch();
    grid.forward_in_place(&mut buf, &mut scratch);
    // |0|^{2s} = 0 for s > 0, so the mean is annihilated.
    apply_symbol_in_place(&mut buf, grid, 2.0 * s);
    grid.inverse_in_place(&mut buf, &mut scratch);
    Ok(PhysicalField {
        grid: grid.clone(),
        values: buf,
    })
}

/// `|k|^e` per mode, with the `k = 0` entry set to 0 (or 1 when `e = 0`).
pub(crate) fn symbol_table(grid: &Grid, exponent: f64) -> Vec<f64> {
    grid.wavenumbers()
        .iter()
        .map(|k| {
            let a = k.abs();
            if exponent == 0.0 {
                1.0
            } else if a == 0.0 {
                0.0
            } else if exponent == 2.0 {
                a * a
            } else {
                a.powf(exponent)
            }
        })
        .collect()
}

/// `Δx/N Σ_m w_m |û_m|²`.
pub(crate) fn weighted_sum_sq(coeffs: &[Complex64], table: &[f64], grid: &Grid) -> f64 {
    let weight = grid.dx() / grid.n_modes() as f64;
    weight * par::sum_indexed(coeffs, |j, z| table[j] * z.norm_sqr())
}

/// Squared Ḣ^σ seminorm computed from coefficients.
pub(crate) fn seminorm_sq_from_coefficients(coeffs: &[Complex64], grid: &Grid, sigma: f64) -> f64 {
    weighted_sum_sq(coeffs, &symbol_table(grid, 2.0 * sigma), grid)
}

/// `a^p` for `a = |u|²`, using repeated multiplication for integer `p`.
#[inline]
pub(crate) fn pow_p(a: f64, p: f64) -> f64 {
    if p == 1.0 {
        a
    } else if p.fract() == 0.0 && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// Discrete homogeneous Sobolev seminorm `‖u‖_{Ḣ^σ}`. `σ = 0` is the L² norm.
pub fn sobolev_seminorm(u: &PhysicalField, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
    }
    let u_hat = to_spectral(u);
    Ok(seminorm_sq_from_coefficients(&u_hat.coefficients, &u.grid, sigma).sqrt())
}

/// Same seminorm evaluated directly from spectral data.
pub fn sobolev_seminorm_spectral(u_hat: &SpectralField, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
    }
    Ok(seminorm_sq_from_coefficients(&u_hat.coefficients, &u_hat.grid, sigma).sqrt())
}

/// `‖∂_x u‖₂`.
pub fn gradient_l2(u: &PhysicalField) -> f64 {
    let u_hat = to_spectral(u);
    seminorm_sq_from_coefficients(&u_hat.coefficients, &u.grid, 1.0).sqrt()
}

pub(crate) fn mass_of(values: &[Complex64], dx: f64) -> f64 {
    dx * par::sum_indexed(values, |_, z| z.norm_sqr())
}

/// `M = ∫|u|² dx` by the periodic trapezoidal rule.
pub fn mass(u: &PhysicalField) -> f64 {
    mass_of(&u.values, u.grid.dx())
}

/// Potential part `Δx Σ |u|^{2p+2}`.
pub(crate) fn potential_integral(values: &[Complex64], dx: f64, p: f64) -> f64 {
    dx * par::sum_indexed(values, |_, z| pow_p(z.norm_sqr(), p + 1.0))
}

/// Energy from a matching pair of physical samples and coefficients.
pub(crate) fn energy_from_parts(
    values: &[Complex64],
    coeffs: &[Complex64],
    grid: &Grid,
    params: &ModelParams,
    kinetic_table: &[f64],
) -> f64 {
    let eps_2s = params.epsilon().powf(2.0 * params.s());
    let kinetic = 0.5 * eps_2s * weighted_sum_sq(coeffs, kinetic_table, grid);
    let potential = potential_integral(values, grid.dx(), params.p());
    kinetic + params.gamma() / (params.p() + 1.0) * potential
}

/// `E = ε^{2s}/2 ‖u‖²_{Ḣ^s} + γ/(p+1) ∫|u|^{2p+2} dx`, conserved by the
/// flow for every `ε`.
pub fn energy(u: &PhysicalField, params: &ModelParams) -> f64 {
    let u_hat = to_spectral(u);
    let table = symbol_table(&u.grid, 2.0 * params.s());
    energy_from_parts(&u.values, &u_hat.coefficients, &u.grid, params, &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    Relative,
    /// Used when the reference energy vanishes.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDrift {
    pub value: f64,
    pub mode: DriftMode,
}

/// `|E_t/E_0 − 1|`, or `|E_t − E_0|` if `E_0 = 0`.
pub fn relative_energy_drift(e_t: f64, e_0: f64) -> EnergyDrift {
    if e_0 == 0.0 {
        EnergyDrift {
            value: (e_t - e_0).abs(),
            mode: DriftMode::Absolute,
        }
    } else {
        EnergyDrift {
            value: (e_t / e_0 - 1.0).abs(),
            mode: DriftMode::Relative,
        }
    }
}

pub(crate) fn sup_of(values: &[Complex64]) -> f64 {
    par::max_indexed(values, |_, z| z.norm())
}

/// `max_j |u_j|`.
pub fn sup_norm(u: &PhysicalField) -> f64 {
    sup_of(&u.values)
}
