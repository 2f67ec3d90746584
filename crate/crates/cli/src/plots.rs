//! SVG figures: one curve per norm, a waterfall of `|ψ|²` snapshots and the
//! final spectrum with the fitted asymptote.

use std::path::{Path, PathBuf};

use fnls::analysis::SpectrumFit;
use fnls::evolution::Snapshot;
use fnls::{PhysicalField, Sample};

/// Writes every figure into `dir`. Failures come back as warnings.
pub fn emit_plots(
    dir: &Path,
    series: &[Sample],
    snapshots: &[Snapshot],
    final_state: &PhysicalField,
    fit: Option<&SpectrumFit>,
) -> (Vec<PathBuf>, Vec<String>) {
    imp::emit(dir, series, snapshots, final_state, fit)
}

#[cfg(not(feature = "plots"))]
mod imp {
    use super::*;

    pub fn emit(
        _dir: &Path,
        _series: &[Sample],
        _snapshots: &[Snapshot],
        _final_state: &PhysicalField,
        _fit: Option<&SpectrumFit>,
    ) -> (Vec<PathBuf>, Vec<String>) {
        (Vec::new(), vec!["plots requested but this build has no plot support".into()])
    }
}

#[cfg(feature = "plots")]
mod imp {
    use super::*;
    use plotters::prelude::*;

    const SIZE: (u32, u32) = (800, 500);
    const MAX_POINTS: usize = 4000;

    type PlotResult = Result<(), Box<dyn std::error::Error>>;

    fn thin<T: Copy>(v: &[T]) -> Vec<T> {
        let stride = v.len().div_ceil(MAX_POINTS).max(1);
        v.iter().step_by(stride).copied().collect()
    }

    fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
        let (lo, hi) = v
            .filter(|x| x.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        if hi - lo < 1e-300 {
            return (lo - 0.5, hi + 0.5);
        }
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }

    fn curve(path: &Path, title: &str, y_label: &str, pts: &[(f64, f64)]) -> PlotResult {
        let root = SVGBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().x_desc("t").y_desc(y_label).draw()?;
        chart.draw_series(LineSeries::new(pts.iter().copied().filter(|p| p.1.is_finite()), &BLUE))?;
        root.present()?;
        Ok(())
    }

    fn waterfall(path: &Path, snapshots: &[Snapshot]) -> PlotResult {
        let root = SVGBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let peak = snapshots
            .iter()
            .flat_map(|s| s.field.values().iter().map(|z| z.norm_sqr()))
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let offset = 0.3 * peak;
        let grid = snapshots[0].field.grid();
        let x_max = std::f64::consts::PI * grid.half_width();
        let y_max = peak + offset * snapshots.len() as f64;
        let mut chart = ChartBuilder::on(&root)
            .caption("|ψ|² snapshots", ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(-x_max..x_max, 0.0..y_max)?;
        chart.configure_mesh().x_desc("x").y_desc("|ψ|² (offset by t)").draw()?;
        for (i, snap) in snapshots.iter().enumerate() {
            let xs = snap.field.grid().nodes();
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .zip(snap.field.values())
                .map(|(x, z)| (*x, z.norm_sqr() + offset * i as f64))
                .collect();
            chart
                .draw_series(LineSeries::new(thin(&pts), &Palette99::pick(i)))?
                .label(format!("t = {:.4}", snap.t));
        }
        root.present()?;
        Ok(())
    }

    fn spectrum(path: &Path, u: &PhysicalField, fit: Option<&SpectrumFit>) -> PlotResult {
        let spec = u.to_spectral();
        let grid = spec.grid();
        let n = grid.n_modes();
        let k = grid.wavenumbers();
        let pts: Vec<(f64, f64)> = (1..n / 2)
            .map(|j| (k[j], (spec.coefficients()[j].norm() / n as f64).max(1e-300).log10()))
            .collect();
        let root = SVGBackend::new(path, SIZE).into_drawing_area();
        root.fill(&WHITE)?;
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let mut chart = ChartBuilder::on(&root)
            .caption("final spectrum", ("sans-serif", 20))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().x_desc("k").y_desc("log10 |û|/N").draw()?;
        chart.draw_series(LineSeries::new(thin(&pts), &BLUE))?;
        if let Some(f) = fit {
            let (ka, kb) = f.k_window;
            let line: Vec<(f64, f64)> = pts
                .iter()
                .filter(|p| p.0 >= ka && p.0 <= kb)
                .map(|&(kk, _)| {
                    let ln = f.log_amplitude - (f.mu + 1.0) * kk.ln() - f.delta * kk;
                    (kk, (ln - (n as f64).ln()) / std::f64::consts::LN_10)
                })
                .collect();
            chart.draw_series(LineSeries::new(thin(&line), &RED))?;
        }
        root.present()?;
        Ok(())
    }

    pub fn emit(
        dir: &Path,
        series: &[Sample],
        snapshots: &[Snapshot],
        final_state: &PhysicalField,
        fit: Option<&SpectrumFit>,
    ) -> (Vec<PathBuf>, Vec<String>) {
        let mut written = Vec::new();
        let mut warnings = Vec::new();
        if let Err(e) = std::fs::create_dir_all(dir) {
            return (written, vec![format!("plots: {}: {e}", dir.display())]);
        }
        let mut attempt = |name: &str, r: &dyn Fn(&Path) -> PlotResult| {
            let path = dir.join(name);
            match r(&path) {
                Ok(()) => written.push(path),
                Err(e) => warnings.push(format!("plot {name}: {e}")),
            }
        };
        let norms: [(&str, &str, fn(&Sample) -> f64); 4] = [
            ("sup_norm.svg", "‖ψ‖∞", |s| s.sup_norm),
            ("grad_l2.svg", "‖ψ_x‖₂", |s| s.grad_l2),
            ("hdot_sigma.svg", "critical Sobolev norm", |s| s.hdot_sigma),
            ("energy_drift.svg", "log10 Δ_E", |s| s.delta_e.max(1e-300).log10()),
        ];
        for (file, label, f) in norms {
            let pts: Vec<(f64, f64)> = series.iter().map(|s| (s.t, f(s))).collect();
            attempt(file, &|p| curve(p, label, label, &thin(&pts)));
        }
        if !snapshots.is_empty() {
            attempt("waterfall.svg", &|p| waterfall(p, snapshots));
        }
        attempt("spectrum.svg", &|p| spectrum(p, final_state, fit));
        (written, warnings)
    }
}
