//! Text and JSON reports, exit codes.

use std::fmt::Write;

use fnls::analysis::BlowupFit;
use fnls::scenarios::{Check, Outcome, ScenarioReport};
use fnls::RunStatus;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_SINGULARITY: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// 3 if any expectation fails, 2 for a singularity stop with nothing to
/// check, 0 otherwise.
pub fn exit_code(outcomes: &[Outcome], status: RunStatus) -> i32 {
    if outcomes.iter().any(|o| !o.passed) {
        EXIT_FAILED
    } else if outcomes.is_empty() && status == RunStatus::StoppedSingularity {
        EXIT_SINGULARITY
    } else {
        EXIT_OK
    }
}

pub fn describe_check(c: &Check) -> String {
    match c {
        Check::Near { value, rel_tol } => format!("{value} ± {:.3}%", rel_tol * 100.0),
        Check::Range { min, max } => format!("in [{min}, {max}]"),
        Check::AtMost { value } => format!("≤ {value:e}"),
        Check::AtLeast { value } => format!("≥ {value}"),
        Check::StatusIn { statuses } => {
            let s: Vec<String> = statuses.iter().map(|s| format!("{s:?}")).collect();
            s.join(" | ")
        }
    }
}

fn fit_line(name: &str, f: &BlowupFit) -> String {
    format!(
        "  {name:<9} t* = {:.6}  κ₁ = {:.5}  κ₂ = {:.5}  Δ₂ = {:.3e}  ({} samples)\n",
        f.t_star, f.kappa1, f.kappa2, f.delta2, f.samples_used
    )
}

pub fn outcome_table(outcomes: &[Outcome]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<34} {:<26} {:<26} {:<12} result",
        "quantity", "expected", "measured", "provenance"
    );
    for o in outcomes {
        let q = serde_json::to_value(o.expectation.quantity).expect("serializable");
        let mut name = q["kind"].as_str().unwrap_or("?").to_string();
        if let Some(n) = q.get("norm").and_then(|v| v.as_str()) {
            name = format!("{name}({n})");
        }
        let measured = o.measured.map_or_else(|| "n/a".to_string(), |m| m.to_string());
        let _ = writeln!(
            out,
            "{:<34} {:<26} {:<26} {:<12} {}  {}",
            name,
            describe_check(&o.expectation.check),
            measured,
            format!("{:?}", o.expectation.provenance).to_lowercase(),
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    out
}

pub fn render_text(r: &ScenarioReport) -> String {
    let sc = &r.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "scenario   {}", sc.name);
    if !sc.description.is_empty() {
        let _ = writeln!(out, "           {}", sc.description);
    }
    let p = &sc.params;
    let _ = writeln!(
        out,
        "model      s = {}, p = {}, γ = {}, ε = {}",
        p.s(),
        p.p(),
        p.gamma(),
        p.epsilon()
    );
    let _ = writeln!(
        out,
        "grid       N = {}, D = {}, N_t = {}, t_end = {} (scale {})",
        sc.grid.n_modes(),
        sc.grid.half_width(),
        sc.time.n_steps(),
        sc.time.t_end(),
        r.scale
    );
    let _ = writeln!(out, "integrator {:?}", r.run.integrator);
    let _ = writeln!(
        out,
        "status     {:?} at t = {} after {} steps",
        r.run.status, r.run.stop_time, r.run.steps_taken
    );
    if r.run.status == RunStatus::StoppedSingularity {
        let _ = writeln!(
            out,
            "note       stopped because the traced singularity came closer than the resolved distance"
        );
    }
    if let Some(last) = r.run.series.last() {
        let _ = writeln!(
            out,
            "final      ‖ψ‖∞ = {:.6e}, ‖ψ_x‖₂ = {:.6e}, Δ_E = {:.3e}, δ = {:.3e}",
            last.sup_norm, last.grad_l2, last.delta_e, last.delta
        );
    }
    if let Some(f) = &r.fits {
        let _ = writeln!(out, "fits");
        if let Some(g) = &f.gradient {
            out.push_str(&fit_line("gradient", g));
        }
        if let Some(s) = &f.sup {
            out.push_str(&fit_line("sup", s));
        }
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning    {w}");
    }
    if !r.outcomes.is_empty() {
        out.push('\n');
        out.push_str(&outcome_table(&r.outcomes));
    }
    let code = exit_code(&r.outcomes, r.run.status);
    let _ = writeln!(
        out,
        "\n{}",
        match code {
            EXIT_OK => "all expectations met",
            EXIT_SINGULARITY => "stopped by the singularity criterion",
            _ => "expectation failures",
        }
    );
    out
}

#[derive(Serialize)]
pub struct JsonReport<'a> {
    pub scenario: &'a str,
    pub scale: f64,
    pub status: RunStatus,
    pub stop_time: f64,
    pub steps_taken: usize,
    pub fits: Option<&'a fnls::scenarios::NormFits>,
    pub outcomes: &'a [Outcome],
    pub warnings: &'a [String],
    pub exit_code: i32,
}

pub fn render_json(r: &ScenarioReport) -> String {
    let j = JsonReport {
        scenario: &r.scenario.name,
        scale: r.scale,
        status: r.run.status,
        stop_time: r.run.stop_time,
        steps_taken: r.run.steps_taken,
        fits: r.fits.as_ref(),
        outcomes: &r.outcomes,
        warnings: &r.warnings,
        exit_code: exit_code(&r.outcomes, r.run.status),
    };
    serde_json::to_string_pretty(&j).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use fnls::scenarios::{Expectation, Measured, Provenance, Quantity};

    fn outcome(passed: bool) -> Outcome {
        Outcome {
            expectation: Expectation {
                quantity: Quantity::BlowupTime {
                    norm: fnls::scenarios::Norm::Gradient,
                },
                check: Check::Near { value: 1.4789, rel_tol: 0.01 },
                provenance: Provenance::Published,
                note: String::new(),
            },
            measured: Some(Measured::Value(if passed { 1.479 } else { 1.63 })),
            passed,
            detail: String::new(),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&[outcome(true)], RunStatus::Completed), 0);
        assert_eq!(exit_code(&[outcome(true)], RunStatus::StoppedSingularity), 0);
        assert_eq!(exit_code(&[outcome(true), outcome(false)], RunStatus::Completed), 3);
        assert_eq!(exit_code(&[], RunStatus::StoppedSingularity), 2);
        assert_eq!(exit_code(&[], RunStatus::Completed), 0);
    }

    #[test]
    fn table_shows_offending_row() {
        let t = outcome_table(&[outcome(true), outcome(false)]);
        let fail = t.lines().find(|l| l.contains("FAIL")).unwrap();
        assert!(fail.contains("blowup_time(gradient)") && fail.contains("1.63"), "{t}");
        assert!(fail.contains("published"));
    }
}
