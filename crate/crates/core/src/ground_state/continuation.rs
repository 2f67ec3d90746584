use super::{closed_form_soliton, newton_krylov, GroundState, GroundStateProblem, NewtonOptions};
use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Smallest decrement in `s` tried before giving up.
pub const MIN_CONTINUATION_STEP: f64 = 1e-4;

/// Steps of 0.1 from `s = 1` down to 0.6, then steps of 0.05, ending at
/// `s_target`.
pub fn default_schedule(s_target: f64) -> Vec<f64> {
    let coarse = (6..10).rev().map(|i| i as f64 / 10.0);
    let fine = (1..12).rev().map(|i| i as f64 / 20.0);
    let mut out: Vec<f64> = coarse
        .chain(fine)
        .filter(|&s| s > s_target + 1e-12)
        .collect();
    out.push(s_target);
    out
}

fn validate_schedule(schedule: &[f64], s_target: f64) -> Result<()> {
    let Some(&last) = schedule.last() else {
        return Err(Error::param("schedule", "is empty"));
    };
    if last != s_target {
        return Err(Error::param("schedule", format!("must end at {s_target}, ends at {last}")));
    }
    if schedule.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::param("schedule", "values must lie in (0, 1]"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("schedule", "must be strictly decreasing"));
    }
    Ok(())
}

/// Ground states along a decreasing chain of `s`, starting from the explicit
/// soliton at `s = 1`. A failed solve halves the step; intermediate states
/// reached that way are included in the output.
pub fn continuation_in_s(
    s_target: f64,
    p: f64,
    grid: &Grid,
    schedule: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<Vec<GroundState>> {
    GroundStateProblem::new(grid, s_target, p)?;
    let schedule = match schedule {
        Some(s) => s.to_vec(),
        None => default_schedule(s_target),
    };
    validate_schedule(&schedule, s_target)?;

    let start = GroundStateProblem::new(grid, 1.0, p)?;
    let mut current = newton_krylov(&start, &closed_form_soliton(p, grid)?, opts)?;
    if s_target == 1.0 {
        return Ok(vec![current]);
    }

    let mut out = Vec::new();
    for &target in schedule.iter().filter(|&&s| s < 1.0) {
        while current.s > target {
            let mut h = current.s - target;
            loop {
                let s_try = if h == current.s - target { target } else { current.s - h };
                let attempt = GroundStateProblem::new(grid, s_try, p)
                    .and_then(|prob| newton_krylov(&prob, &current.field, opts));
                match attempt {
                    Ok(gs) => {
                        current = gs;
                        out.push(current.clone());
                        break;
                    }
                    Err(_) => {
                        h *= 0.5;
                        if h < MIN_CONTINUATION_STEP {
                            return Err(Error::ContinuationStalled {
                                s_failed: s_try,
                                last: Box::new(current),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sup_norm;
    use approx::assert_relative_eq;

    #[test]
    fn schedules() {
        let s = default_schedule(0.4);
        let expect = [0.9, 0.8, 0.7, 0.6, 0.55, 0.5, 0.45, 0.4];
        assert_eq!(s.len(), expect.len());
        for (a, b) in s.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(default_schedule(0.9), vec![0.9]);
        assert_eq!(default_schedule(0.95), vec![0.95]);
        assert!(validate_schedule(&[0.9, 0.9, 0.8], 0.8).is_err());
        assert!(validate_schedule(&[0.9, 0.7], 0.8).is_err());
        assert!(validate_schedule(&[], 0.8).is_err());
    }

    #[test]
    fn identity_continuation() {
        let g = Grid::new(1024, 10.0).unwrap();
        let chain = continuation_in_s(1.0, 1.0, &g, None, &NewtonOptions::default()).unwrap();
        assert_eq!(chain.len(), 1);
        let exact = closed_form_soliton(1.0, &g).unwrap();
        let diff = chain[0]
            .field
            .values()
            .iter()
            .zip(exact.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn direct_step_to_point_nine() {
        let g = Grid::new(2048, 20.0).unwrap();
        let chain = continuation_in_s(0.9, 1.0, &g, Some(&[0.9]), &NewtonOptions::default()).unwrap();
        assert_eq!(chain.len(), 1);
        let gs = &chain[0];
        assert_eq!(gs.s, 0.9);
        assert!(gs.residual_norm <= 1e-12);
        assert!(sup_norm(&gs.field) > 2f64.sqrt());
    }
}
