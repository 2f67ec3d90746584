//! Ground states of `½(−Δ)^s Q + Q = Q^{2p+1}`.
//!
//! The equation is solved on Fourier coefficients,
//! `F(Q̂) = (½|k|^{2s} + 1) Q̂ − (Q^{2p+1})^ = 0`, by inexact Newton iteration
//! with GMRES inner solves, and continued in `s` from the explicit soliton
//! at `s = 1`.

mod continuation;
pub mod gmres;
mod profile;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{critical_power, ModelParams};
use crate::spectral::{self, Grid, PhysicalField, SpectralField};

pub use continuation::{continuation_in_s, default_schedule, MIN_CONTINUATION_STEP};
pub use gmres::{gmres_solve, GmresFailure, GmresOptions, GmresSolution};
pub use profile::{rescale_omega, tail_exponent, Rescaled, TailFit};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateProblem {
    grid: Grid,
    s: f64,
    p: f64,
}

impl GroundStateProblem {
    pub fn new(grid: &Grid, s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::param("s", format!("must lie in (0, 1], got {s}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::param("p", format!("must be positive, got {p}")));
        }
        let p_star = critical_power(s);
        if p >= p_star {
            return Err(Error::param(
                "p",
                format!("ground states require p < {p_star} at s = {s}, got {p}"),
            ));
        }
        Ok(GroundStateProblem {
            grid: grid.clone(),
            s,
            p,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    /// Real, positive, even profile.
    pub field: PhysicalField,
    /// `max_k |F̂(k)| / N` at the returned state.
    pub residual_norm: f64,
    pub s: f64,
    pub p: f64,
    pub omega: f64,
    pub residual_history: Vec<f64>,
    pub gmres_iterations: usize,
    /// Largest imaginary or odd part removed by the final projection.
    pub symmetry_defect: f64,
}

impl GroundState {
    pub fn params(&self) -> ModelParams {
        ModelParams::focusing(self.s, self.p).expect("validated when solved")
    }

    pub fn mass(&self) -> f64 {
        spectral::mass(&self.field)
    }

    pub fn energy(&self) -> f64 {
        spectral::energy(&self.field, &self.params())
    }

    pub fn newton_iterations(&self) -> usize {
        self.residual_history.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    /// Iterates collapsed onto `Q = 0`.
    TrivialState,
    Diverged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub gmres: GmresOptions,
    pub trivial_threshold: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_newton: 30,
            gmres: GmresOptions::default(),
            trivial_threshold: 1e-6,
        }
    }
}

/// `((p+1) sech²(√2 p x))^{1/(2p)}`, the exact ground state at `s = 1`.
pub fn closed_form_soliton(p: f64, grid: &Grid) -> Result<PhysicalField> {
    if !(p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    let a = 2f64.sqrt() * p;
    Ok(PhysicalField::from_real_fn(grid, |x| {
        let sech = 1.0 / (a * x).cosh();
        ((p + 1.0) * sech * sech).powf(0.5 / p)
    }))
}

/// `max|F̂|/N`, the sup-norm of the normalized coefficients.
pub fn residual_norm(f_hat: &SpectralField) -> f64 {
    let n = f_hat.grid().n_modes() as f64;
    f_hat.coefficients().iter().fold(0.0f64, |m, z| m.max(z.norm())) / n
}

struct Operators {
    grid: Grid,
    p: f64,
    symbol: Vec<f64>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl Operators {
    fn new(problem: &GroundStateProblem) -> Self {
        let grid = problem.grid.clone();
        let e = 2.0 * problem.s;
        let symbol = grid
            .wavenumbers()
            .iter()
            .map(|k| 0.5 * k.abs().powf(e) + 1.0)
            .collect();
        Operators {
            scratch: grid.fft_scratch(),
            work: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
            grid,
            p: problem.p,
            symbol,
        }
    }

    /// Writes `Q = F⁻¹Q̂` into `phys` and `F(Q̂)` into `out`.
    fn residual(&mut self, q_hat: &[Complex64], phys: &mut [Complex64], out: &mut [Complex64]) {
        phys.copy_from_slice(q_hat);
        self.grid.inverse_in_place(phys, &mut self.scratch);
        let p = self.p;
        for (o, q) in out.iter_mut().zip(phys.iter()) {
            *o = q * spectral::pow_p(q.norm_sqr(), p);
        }
        self.grid.forward_in_place(out, &mut self.scratch);
        for ((o, q), l) in out.iter_mut().zip(q_hat).zip(&self.symbol) {
            *o = l * q - *o;
        }
    }

    /// `out ← (½|k|^{2s}+1) v̂ − (weight · v)^` with `weight = (2p+1)Q^{2p}`.
    fn jacobian(&mut self, weight: &[f64], v_hat: &[Complex64], out: &mut [Complex64]) {
        self.work.copy_from_slice(v_hat);
        self.grid.inverse_in_place(&mut self.work, &mut self.scratch);
        for (w, c) in self.work.iter_mut().zip(weight) {
            *w *= c;
        }
        self.grid.forward_in_place(&mut self.work, &mut self.scratch);
        for (((o, v), w), l) in out.iter_mut().zip(v_hat).zip(&self.work).zip(&self.symbol) {
            *o = l * v - w;
        }
    }

    fn weight(&self, phys: &[Complex64]) -> Vec<f64> {
        let c = 2.0 * self.p + 1.0;
        phys.iter().map(|q| c * spectral::pow_p(q.norm_sqr(), self.p)).collect()
    }
}

/// Replaces `values` by the even part of their real part; returns the size
/// of what was removed.
fn project_real_even(values: &mut [Complex64], grid: &Grid) -> f64 {
    let original = values.to_vec();
    let mut defect = 0.0f64;
    for (j, v) in values.iter_mut().enumerate() {
        let a = original[j];
        let b = original[grid.mirror(j)];
        let even = 0.5 * (a.re + b.re);
        defect = defect.max(a.im.abs()).max((a.re - even).abs());
        *v = Complex64::new(even, 0.0);
    }
    defect
}

pub fn residual(q_hat: &SpectralField, problem: &GroundStateProblem) -> Result<SpectralField> {
    q_hat.grid().check_same(&problem.grid)?;
    let mut ops = Operators::new(problem);
    let n = problem.grid.n_modes();
    let mut phys = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    ops.residual(q_hat.coefficients(), &mut phys, &mut out);
    SpectralField::new(problem.grid.clone(), out)
}

/// Linearization of [`residual`] about a real state `Q`.
pub fn jacobian_vector_product(
    q_hat: &SpectralField,
    v_hat: &SpectralField,
    problem: &GroundStateProblem,
) -> Result<SpectralField> {
    q_hat.grid().check_same(&problem.grid)?;
    v_hat.grid().check_same(&problem.grid)?;
    let mut ops = Operators::new(problem);
    let q = q_hat.to_physical();
    let weight = ops.weight(q.values());
    let mut out = vec![Complex64::new(0.0, 0.0); problem.grid.n_modes()];
    ops.jacobian(&weight, v_hat.coefficients(), &mut out);
    SpectralField::new(problem.grid.clone(), out)
}

fn sup_norm_normalized(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm())) / coeffs.len() as f64
}

fn newton_failed(reason: NewtonFailure, residual: f64, iterations: usize) -> Error {
    Error::NewtonFailed {
        reason,
        residual,
        iterations,
    }
}

/// Inexact Newton–Krylov solve started from `initial`.
///
/// The inner GMRES is right-preconditioned by `(½|k|^{2s}+1)^{-1}` and run to
/// the relative tolerance `min(opts.gmres.tol, ‖F‖)`, which keeps the outer
/// convergence quadratic. Each iterate is projected onto real even functions.
pub fn newton_krylov(
    problem: &GroundStateProblem,
    initial: &PhysicalField,
    opts: &NewtonOptions,
) -> Result<GroundState> {
    initial.grid().check_same(&problem.grid)?;
    if !initial.is_finite() {
        return Err(Error::param("initial", "contains non-finite values"));
    }
    let grid = &problem.grid;
    let n = grid.n_modes();
    let zero = Complex64::new(0.0, 0.0);
    let mut ops = Operators::new(problem);

    let mut q_phys = initial.values().to_vec();
    let mut defect = project_real_even(&mut q_phys, grid);
    if spectral::sup_of(&q_phys) < opts.trivial_threshold {
        return Err(Error::param("initial", "initial iterate is (numerically) zero"));
    }
    let mut q_hat = q_phys.clone();
    let mut scratch = grid.fft_scratch();
    grid.forward_in_place(&mut q_hat, &mut scratch);

    let mut f_hat = vec![zero; n];
    ops.residual(&q_hat, &mut q_phys, &mut f_hat);
    let mut r = sup_norm_normalized(&f_hat);
    let mut history = vec![r];
    let mut gmres_total = 0usize;

    let mut trial_hat = vec![zero; n];
    let mut trial_phys = vec![zero; n];
    let mut trial_f = vec![zero; n];

    while r > opts.tol {
        if history.len() > opts.max_newton {
            return Err(newton_failed(NewtonFailure::MaxIterations, r, history.len() - 1));
        }
        let weight = ops.weight(&q_phys);
        let inner = GmresOptions {
            tol: opts.gmres.tol.min(r).max(1e-14),
            ..opts.gmres
        };
        let symbol = ops.symbol.clone();
        let mut precond = vec![zero; n];
        let solve = gmres_solve(
            |y, out| {
                for ((pc, yi), l) in precond.iter_mut().zip(y).zip(&symbol) {
                    *pc = yi / l;
                }
                ops.jacobian(&weight, &precond, out);
            },
            &f_hat,
            &inner,
        );
        // A budget-limited inner solve still gives a usable direction.
        let sol = match solve {
            Ok(s) => s,
            Err(fail) => fail.best,
        };
        gmres_total += sol.iterations;
        let step: Vec<Complex64> = sol.x.iter().zip(&symbol).map(|(y, l)| y / l).collect();

        // Backtracking on the residual norm.
        let mut lambda = 1.0;
        let (r_new, defect_new) = loop {
            for ((t, q), d) in trial_hat.iter_mut().zip(&q_hat).zip(&step) {
                *t = q - lambda * d;
            }
            trial_phys.copy_from_slice(&trial_hat);
            grid.inverse_in_place(&mut trial_phys, &mut scratch);
            let dfct = project_real_even(&mut trial_phys, grid);
            trial_hat.copy_from_slice(&trial_phys);
            grid.forward_in_place(&mut trial_hat, &mut scratch);
            ops.residual(&trial_hat, &mut trial_phys, &mut trial_f);
            let rn = sup_norm_normalized(&trial_f);
            if (rn.is_finite() && rn < r) || lambda < 1.0 / 32.0 {
                break (rn, dfct);
            }
            lambda *= 0.5;
        };
        if !r_new.is_finite() || r_new > 1e6 * history[0].max(1.0) {
            return Err(newton_failed(NewtonFailure::Diverged, r_new, history.len()));
        }
        std::mem::swap(&mut q_hat, &mut trial_hat);
        std::mem::swap(&mut q_phys, &mut trial_phys);
        std::mem::swap(&mut f_hat, &mut trial_f);
        r = r_new;
        defect = defect_new;
        history.push(r);
        if spectral::sup_of(&q_phys) < opts.trivial_threshold {
            return Err(newton_failed(NewtonFailure::TrivialState, r, history.len() - 1));
        }
        // Stagnation at the rounding level above the requested tolerance.
        if history.len() > 3 && r >= history[history.len() - 2] && lambda < 1.0 / 16.0 {
            return Err(newton_failed(NewtonFailure::MaxIterations, r, history.len() - 1));
        }
    }

    // `q_phys` was recomputed from coefficients; drop the rounding-level
    // imaginary part once more.
    project_real_even(&mut q_phys, grid);
    let field = PhysicalField::new(grid.clone(), q_phys)?;
    Ok(GroundState {
        field,
        residual_norm: r,
        s: problem.s,
        p: problem.p,
        omega: 1.0,
        residual_history: history,
        gmres_iterations: gmres_total,
        symmetry_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_fractional_laplacian, sup_norm, to_spectral};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_real_field(grid: &Grid, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.n_modes())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        PhysicalField::new(grid.clone(), v).unwrap()
    }

    #[test]
    fn problem_validation() {
        let g = Grid::new(64, 10.0).unwrap();
        assert!(GroundStateProblem::new(&g, 0.6, 3.0).is_ok());
        assert!(GroundStateProblem::new(&g, 0.4, 4.5).is_err());
        assert!(GroundStateProblem::new(&g, 0.4, 3.5).is_ok());
        assert!(GroundStateProblem::new(&g, 0.0, 1.0).is_err());
        assert!(GroundStateProblem::new(&g, 0.5, -1.0).is_err());
    }

    #[test]
    fn soliton_values() {
        let g = Grid::new(256, 10.0).unwrap();
        let q = closed_form_soliton(1.0, &g).unwrap();
        let j0 = g.n_modes() / 2;
        assert_eq!(g.node(j0), 0.0);
        assert_relative_eq!(q.values()[j0].re, 2f64.sqrt(), epsilon = 1e-15);
        for (x, v) in g.nodes().iter().zip(q.values()) {
            let expect = 2f64.sqrt() / (2f64.sqrt() * x).cosh();
            assert_relative_eq!(v.re, expect, epsilon = 1e-14);
        }
        let q3 = closed_form_soliton(3.0, &g).unwrap();
        assert_relative_eq!(q3.values()[j0].re, 4f64.powf(1.0 / 6.0), epsilon = 1e-15);
        assert!(closed_form_soliton(0.0, &g).is_err());
    }

    #[test]
    fn soliton_satisfies_ode_pointwise() {
        let g = Grid::new(1024, 10.0).unwrap();
        let q = closed_form_soliton(1.0, &g).unwrap();
        let lq = apply_fractional_laplacian(&q, 1.0).unwrap();
        for (l, v) in lq.values().iter().zip(q.values()) {
            let r = 0.5 * l + v - v * v * v;
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn soliton_residuals() {
        let g = Grid::new(2048, 10.0).unwrap();
        for p in [1.0, 2.0] {
            let prob = GroundStateProblem::new(&g, 1.0, p).unwrap();
            let q = closed_form_soliton(p, &g).unwrap();
            let f = residual(&to_spectral(&q), &prob).unwrap();
            assert!(residual_norm(&f) <= 1e-10, "p = {p}: {}", residual_norm(&f));
        }
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let g = Grid::new(64, 3.0).unwrap();
        let prob = GroundStateProblem::new(&g, 0.7, 1.0).unwrap();
        let f = residual(&SpectralField::zeros(&g), &prob).unwrap();
        assert_eq!(residual_norm(&f), 0.0);
    }

    #[test]
    fn residual_matches_physical_space_oracle() {
        let g = Grid::new(128, 2.0).unwrap();
        let (s, p) = (0.65, 1.5);
        let prob = GroundStateProblem::new(&g, s, p).unwrap();
        let q = random_real_field(&g, 5);
        let lq = apply_fractional_laplacian(&q, s).unwrap();
        let oracle: Vec<Complex64> = lq
            .values()
            .iter()
            .zip(q.values())
            .map(|(l, v)| 0.5 * l + v - v * v.norm().powf(2.0 * p))
            .collect();
        let oracle = to_spectral(&PhysicalField::new(g.clone(), oracle).unwrap());
        let f = residual(&to_spectral(&q), &prob).unwrap();
        for (a, b) in f.coefficients().iter().zip(oracle.coefficients()) {
            assert!((a - b).norm() / (g.n_modes() as f64) < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let g = Grid::new(128, 4.0).unwrap();
        let prob = GroundStateProblem::new(&g, 0.8, 1.0).unwrap();
        let q = closed_form_soliton(1.0, &g).unwrap();
        let v = random_real_field(&g, 9);
        let (qh, vh) = (to_spectral(&q), to_spectral(&v));
        let jv = jacobian_vector_product(&qh, &vh, &prob).unwrap();
        let h = 1e-6;
        let plus = residual(&to_spectral(&PhysicalField::new(
            g.clone(),
            q.values().iter().zip(v.values()).map(|(a, b)| a + h * b).collect(),
        ).unwrap()), &prob).unwrap();
        let minus = residual(&to_spectral(&PhysicalField::new(
            g.clone(),
            q.values().iter().zip(v.values()).map(|(a, b)| a - h * b).collect(),
        ).unwrap()), &prob).unwrap();
        let scale = jv.coefficients().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for ((a, b), c) in jv.coefficients().iter().zip(plus.coefficients()).zip(minus.coefficients()) {
            let fd = (b - c) / (2.0 * h);
            assert!((a - fd).norm() <= 1e-6 * scale);
        }
    }

    #[test]
    fn jacobian_at_zero_is_diagonal() {
        let g = Grid::new(64, 3.0).unwrap();
        let s = 0.55;
        let prob = GroundStateProblem::new(&g, s, 1.0).unwrap();
        let v = to_spectral(&random_real_field(&g, 2));
        let jv = jacobian_vector_product(&SpectralField::zeros(&g), &v, &prob).unwrap();
        for ((a, b), k) in jv.coefficients().iter().zip(v.coefficients()).zip(g.wavenumbers()) {
            assert!((a - b * (0.5 * k.abs().powf(2.0 * s) + 1.0)).norm() < 1e-12 * (1.0 + b.norm()));
        }
        let zero = jacobian_vector_product(&to_spectral(&closed_form_soliton(1.0, &g).unwrap()), &SpectralField::zeros(&g), &prob).unwrap();
        assert_eq!(residual_norm(&zero), 0.0);
    }

    #[test]
    fn newton_at_the_root() {
        let g = Grid::new(2048, 10.0).unwrap();
        let prob = GroundStateProblem::new(&g, 1.0, 1.0).unwrap();
        let q0 = closed_form_soliton(1.0, &g).unwrap();
        let gs = newton_krylov(&prob, &q0, &NewtonOptions::default()).unwrap();
        assert!(gs.newton_iterations() <= 3);
        assert!(gs.residual_norm <= 1e-12);
    }

    #[test]
    fn newton_converges_quadratically_from_perturbation() {
        let g = Grid::new(1024, 12.0).unwrap();
        let prob = GroundStateProblem::new(&g, 0.9, 1.0).unwrap();
        let q0 = closed_form_soliton(1.0, &g).unwrap();
        let gs = newton_krylov(&prob, &q0, &NewtonOptions::default()).unwrap();
        assert!(gs.residual_norm <= 1e-12);
        let v = gs.field.values();
        for j in 0..g.n_modes() {
            assert_eq!(v[j].im, 0.0);
            assert!((v[j].re - v[g.mirror(j)].re).abs() < 1e-10);
        }
        let h = &gs.residual_history;
        assert!(h.len() >= 3);
        let (a, b) = (h[h.len() - 3], h[h.len() - 2]);
        // r_{n+1} ≤ C r_n² on the last contraction with a modest C.
        assert!(b <= 1e3 * a * a || b < 1e-11, "{h:?}");
        // Fractional state: taller than the soliton.
        assert!(sup_norm(&gs.field) > 2f64.sqrt());
    }

    #[test]
    fn zero_initial_rejected() {
        let g = Grid::new(64, 3.0).unwrap();
        let prob = GroundStateProblem::new(&g, 0.9, 1.0).unwrap();
        assert!(newton_krylov(&prob, &PhysicalField::zeros(&g), &NewtonOptions::default()).is_err());
    }

    #[test]
    fn tiny_initial_collapses_to_trivial_state() {
        let g = Grid::new(256, 10.0).unwrap();
        let prob = GroundStateProblem::new(&g, 0.9, 1.0).unwrap();
        let q0 = closed_form_soliton(1.0, &g).unwrap().scaled(1e-3);
        match newton_krylov(&prob, &q0, &NewtonOptions::default()) {
            Err(Error::NewtonFailed { reason, .. }) => assert_eq!(reason, NewtonFailure::TrivialState),
            other => panic!("expected trivial-state failure, got {other:?}"),
        }
    }
}
