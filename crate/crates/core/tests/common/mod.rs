#![allow(dead_code)]

use std::f64::consts::PI;

use fnls::{Grid, PhysicalField};
use num_complex::Complex64;

/// Direct O(N²) transform, mode `m` in `[-N/2, N/2)`.
pub fn naive_dft(u: &[Complex64]) -> Vec<(i64, Complex64)> {
    let n = u.len() as i64;
    (-n / 2..n / 2)
        .map(|m| {
            let c = u.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, z)| {
                acc + z * Complex64::from_polar(1.0, -2.0 * PI * (m * j as i64) as f64 / n as f64)
            });
            (m, c)
        })
        .collect()
}

pub fn naive_inverse(n: usize, coeffs: &[(i64, Complex64)]) -> Vec<Complex64> {
    (0..n)
        .map(|j| {
            coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, (m, c)| {
                acc + c * Complex64::from_polar(1.0, 2.0 * PI * (*m * j as i64) as f64 / n as f64)
            }) / n as f64
        })
        .collect()
}

pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn smooth_field(grid: &Grid, modes: &[(i64, f64, f64)]) -> PhysicalField {
    let d = grid.half_width();
    PhysicalField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|&(m, a, b)| Complex64::new(a, b) * Complex64::from_polar(1.0, m as f64 * x / d))
            .sum()
    })
}
