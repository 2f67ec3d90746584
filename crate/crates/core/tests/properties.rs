use std::f64::consts::PI;

use fnls::analysis::{fit_blowup_rate, fit_fourier_asymptotics, FitWindow, RateModel, WindowPolicy};
use fnls::evolution::{linear_flow, nonlinear_flow, step_splitting4};
use fnls::spectral::{apply_fractional_laplacian, mass, sobolev_seminorm, to_physical, to_spectral};
use fnls::{Grid, ModelParams, PhysicalField, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

mod common;
use common::*;

fn field_strategy(max_log2: u32) -> impl Strategy<Value = (usize, f64, Vec<Complex64>)> {
    (3..=max_log2, 0.5f64..20.0).prop_flat_map(|(l, d)| {
        let n = 1usize << l;
        (
            Just(n),
            Just(d),
            prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b)), n),
        )
    })
}

/// Random trigonometric polynomial with a few low modes, smooth enough for
/// integrator checks.
fn smooth_strategy() -> impl Strategy<Value = Vec<(i64, f64, f64)>> {
    prop::collection::vec((-6i64..=6, -0.8f64..0.8, -0.8f64..0.8), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip((n, d, v) in field_strategy(10)) {
        let g = Grid::new(n, d).unwrap();
        let u = PhysicalField::new(g, v).unwrap();
        let back = to_physical(&to_spectral(&u));
        prop_assert!(max_diff(back.values(), u.values()) <= 1e-12 * max_abs(u.values()));
    }

    #[test]
    fn transform_matches_direct_sum((n, d, v) in field_strategy(7)) {
        let g = Grid::new(n, d).unwrap();
        let u = PhysicalField::new(g.clone(), v.clone()).unwrap();
        let u_hat = to_spectral(&u);
        let scale = max_abs(u_hat.coefficients());
        for (m, c) in naive_dft(&v) {
            prop_assert!((u_hat.coefficients()[g.index_of_mode(m)] - c).norm() <= 1e-12 * scale * n as f64);
        }
    }

    #[test]
    fn parseval((n, d, v) in field_strategy(8)) {
        let g = Grid::new(n, d).unwrap();
        let coeffs = naive_dft(&v);
        let spectral_side: f64 = 2.0 * PI * d / (n * n) as f64 * coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>();
        let u = PhysicalField::new(g, v).unwrap();
        let m = mass(&u);
        prop_assert!((m - spectral_side).abs() <= 1e-12 * spectral_side);
    }

    #[test]
    fn fractional_laplacian_matches_oracle((n, d, v) in field_strategy(8), s in 0.05f64..=1.0) {
        let g = Grid::new(n, d).unwrap();
        let coeffs: Vec<_> = naive_dft(&v)
            .into_iter()
            .map(|(m, c)| (m, c * (m as f64 / d).abs().powf(2.0 * s)))
            .collect();
        let expected = naive_inverse(n, &coeffs);
        let u = PhysicalField::new(g, v).unwrap();
        let got = apply_fractional_laplacian(&u, s).unwrap();
        prop_assert!(max_diff(got.values(), &expected) <= 1e-10 * max_abs(&expected).max(1.0));
    }

    #[test]
    fn s_one_is_minus_second_derivative(modes in smooth_strategy(), d in 0.5f64..5.0) {
        let g = Grid::new(64, d).unwrap();
        let u = smooth_field(&g, &modes);
        // Analytic −u'' of the trigonometric polynomial.
        let expected = smooth_field(
            &g,
            &modes.iter().map(|&(m, a, b)| {
                let k2 = (m as f64 / d).powi(2);
                (m, a * k2, b * k2)
            }).collect::<Vec<_>>(),
        );
        let got = apply_fractional_laplacian(&u, 1.0).unwrap();
        prop_assert!(max_diff(got.values(), expected.values()) <= 1e-12 * max_abs(expected.values()).max(1.0));
    }

    #[test]
    fn seminorm_is_monotone_in_sigma(modes in smooth_strategy(), s1 in 0.0f64..2.0, ds in 0.0f64..1.0) {
        // D = 1 puts every nonzero mode at |k| ≥ 1.
        let g = Grid::new(64, 1.0).unwrap();
        let modes: Vec<_> = modes.into_iter().filter(|m| m.0 != 0).collect();
        let u = smooth_field(&g, &modes);
        let a = sobolev_seminorm(&u, s1).unwrap();
        let b = sobolev_seminorm(&u, s1 + ds).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-14));
    }

    #[test]
    fn nonlinear_flow_preserves_modulus((n, d, v) in field_strategy(9), dt in -1.0f64..1.0, p in 0.5f64..3.0) {
        let g = Grid::new(n, d).unwrap();
        let u = PhysicalField::new(g, v).unwrap();
        let params = ModelParams::new(0.7, p, -1.0, 0.3).unwrap();
        let w = nonlinear_flow(&u, &params, dt).unwrap();
        for (a, b) in u.values().iter().zip(w.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-13 * a.norm().max(1.0));
        }
        prop_assert!((mass(&w) - mass(&u)).abs() <= 1e-13 * mass(&u));
    }

    #[test]
    fn linear_flow_is_unitary((n, d, v) in field_strategy(9), dt in -1.0f64..1.0, s in 0.1f64..=1.0) {
        let g = Grid::new(n, d).unwrap();
        let u = PhysicalField::new(g, v).unwrap();
        let params = ModelParams::focusing(s, 1.0).unwrap();
        let w = linear_flow(&u.to_spectral(), &params, dt).to_physical();
        prop_assert!((mass(&w) - mass(&u)).abs() <= 1e-13 * mass(&u));
    }

    #[test]
    fn splitting_conserves_mass_and_reverses(
        modes in smooth_strategy(),
        s in 0.2f64..=1.0,
        gamma in prop::sample::select(vec![-1.0, 1.0]),
    ) {
        let g = Grid::new(128, 3.0).unwrap();
        let params = ModelParams::new(s, 1.0, gamma, 1.0).unwrap();
        let u0 = smooth_field(&g, &modes);
        let m0 = mass(&u0);
        let dt = 1e-2;
        let mut u = u0.clone();
        for _ in 0..100 {
            u = step_splitting4(&u, &params, dt).unwrap();
        }
        prop_assert!((mass(&u) - m0).abs() <= 1e-12 * m0);
        let back = step_splitting4(&step_splitting4(&u, &params, dt).unwrap(), &params, -dt).unwrap();
        prop_assert!(max_diff(back.values(), u.values()) <= 1e-12 * max_abs(u.values()).max(1.0));
    }

    #[test]
    fn splitting_is_exact_on_plane_waves(
        m in -8i64..=8,
        amp in 0.1f64..1.0,
        s in 0.1f64..=1.0,
        p in 0.5f64..3.0,
        gamma in prop::sample::select(vec![-1.0, 1.0]),
        eps in 0.3f64..=1.0,
    ) {
        // Focusing plane waves are modulationally unstable; rounding noise grows
        // like e^{|A|^{2p} t/ε}, so amplitudes stay moderate.
        let d = 2.0;
        let g = Grid::new(64, d).unwrap();
        let params = ModelParams::new(s, p, gamma, eps).unwrap();
        let k = m as f64 / d;
        let u0 = PhysicalField::from_fn(&g, |x| Complex64::from_polar(amp, k * x));
        let omega = (0.5 * eps.powf(2.0 * s) * k.abs().powf(2.0 * s) + gamma * amp.powf(2.0 * p)) / eps;
        let (dt, steps) = (0.01, 50);
        let mut u = u0.clone();
        for _ in 0..steps {
            u = step_splitting4(&u, &params, dt).unwrap();
        }
        let t = dt * steps as f64;
        let exact = PhysicalField::from_fn(&g, |x| Complex64::from_polar(amp, k * x - omega * t));
        prop_assert!(max_diff(u.values(), exact.values()) <= 1e-10 * amp);
    }

    #[test]
    fn pure_log_fit_recovers_generator(
        t_star in 0.5f64..10.0,
        k1 in -4.0f64..-0.05,
        k2 in -3.0f64..3.0,
        shift in -100.0f64..100.0,
        log_a in -5.0f64..5.0,
    ) {
        let times: Vec<f64> = (0..200).map(|i| t_star * (0.5 + 0.49 * i as f64 / 199.0)).collect();
        let y: Vec<f64> = times.iter().map(|t| k1 * (t_star - t).ln() + k2).collect();
        let fit = fit_blowup_rate(&times, &y, RateModel::PureLog, FitWindow::All).unwrap();
        prop_assert!((fit.t_star - t_star).abs() <= 1e-6 * t_star);
        prop_assert!((fit.kappa1 - k1).abs() <= 1e-6 * k1.abs().max(1.0));
        prop_assert!((fit.kappa2 - k2).abs() <= 1e-6 * k2.abs().max(1.0));
        prop_assert!(fit.delta2 <= 1e-8);
        prop_assert!(fit.t_star > times[times.len() - 1]);

        let shifted: Vec<f64> = times.iter().map(|t| t + shift).collect();
        let g = fit_blowup_rate(&shifted, &y, RateModel::PureLog, FitWindow::All).unwrap();
        prop_assert!((g.t_star - (fit.t_star + shift)).abs() <= 1e-8 * (1.0 + shift.abs()));
        prop_assert!((g.kappa1 - fit.kappa1).abs() <= 1e-8);
        prop_assert!((g.kappa2 - fit.kappa2).abs() <= 1e-8);
        prop_assert!((g.delta2 - fit.delta2).abs() <= 1e-8);

        let scaled: Vec<f64> = y.iter().map(|v| v + log_a).collect();
        let h = fit_blowup_rate(&times, &scaled, RateModel::PureLog, FitWindow::All).unwrap();
        prop_assert!((h.t_star - fit.t_star).abs() <= 1e-8);
        prop_assert!((h.kappa1 - fit.kappa1).abs() <= 1e-8);
        prop_assert!((h.kappa2 - fit.kappa2 - log_a).abs() <= 1e-8);
    }

    #[test]
    fn log_log_fit_recovers_generator(t_star in 0.5f64..10.0, k1 in -2.0f64..-0.1, k2 in -3.0f64..3.0) {
        // τ runs from 1e-3 to 1e-6, so |ln τ| > 1 everywhere.
        let times: Vec<f64> = (0..200)
            .map(|i| t_star - 10f64.powf(-3.0 - 3.0 * i as f64 / 199.0))
            .collect();
        let y: Vec<f64> = times
            .iter()
            .map(|t| {
                let l = (t_star - t).ln();
                k1 * (l - l.abs().ln().ln()) + k2
            })
            .collect();
        let fit = fit_blowup_rate(&times, &y, RateModel::LogLog, FitWindow::All).unwrap();
        prop_assert!((fit.t_star - t_star).abs() <= 1e-6 * t_star);
        prop_assert!((fit.kappa1 - k1).abs() <= 1e-6);
        prop_assert!((fit.kappa2 - k2).abs() <= 1e-6 * k2.abs().max(1.0));
        prop_assert!(fit.delta2 <= 1e-8);
    }

    #[test]
    fn spectrum_fit_recovers_distance(delta in 0.05f64..0.5, mu in 0.0f64..2.0, log_c in -2.0f64..2.0) {
        let n = 1024;
        let g = Grid::new(n, 10.0).unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let k = g.wavenumbers()[j].abs().max(0.1);
            // Slowly varying prefactor on top of the pure model.
            let slow = 1.0 + 0.1 / (1.0 + k);
            coeffs[j] = Complex64::new(n as f64 * (log_c - (mu + 1.0) * k.ln() - delta * k).exp() * slow, 0.0);
        }
        let u_hat = SpectralField::new(g, coeffs).unwrap();
        let fit = fit_fourier_asymptotics(&u_hat, WindowPolicy::default()).unwrap();
        prop_assert!(fit.delta >= 0.0);
        prop_assert!(fit.k_window.0 < fit.k_window.1);
        prop_assert!((fit.delta - delta).abs() <= 0.02 * delta, "{} vs {}", fit.delta, delta);
    }
}
