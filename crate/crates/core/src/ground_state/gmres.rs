//! Restarted GMRES for complex systems, accessed only through `x ↦ Ax`.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Relative residual target `‖Ax − b‖ ≤ tol·‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-3,
            restart: 50,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresSolution {
    pub x: Vec<Complex64>,
    /// Final relative residual.
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Returned when the iteration budget runs out; carries the best iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct GmresFailure {
    pub best: GmresSolution,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let phase = a / a.norm();
    (a.norm() / r, phase * b.conj() / r)
}

fn rotate(c: f64, s: Complex64, a: &mut Complex64, b: &mut Complex64) {
    let (x, y) = (*a, *b);
    *a = c * x + s * y;
    *b = -s.conj() * x + c * y;
}

pub fn gmres_solve<A>(
    mut apply: A,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<GmresSolution, GmresFailure>
where
    A: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(GmresSolution {
            x,
            relative_residual: 0.0,
            iterations: 0,
        });
    }
    let target = opts.tol * b_norm;
    let m = opts.restart.max(1);
    let mut iterations = 0usize;
    let mut r = vec![zero; n];
    let mut w = vec![zero; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![zero; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![zero; m];
    let mut g = vec![zero; m + 1];

    loop {
        apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta <= target || iterations >= opts.max_iter {
            let sol = GmresSolution {
                x,
                relative_residual: beta / b_norm,
                iterations,
            };
            return if beta <= target {
                Ok(sol)
            } else {
                Err(GmresFailure { best: sol })
            };
        }

        basis.clear();
        basis.push(r.iter().map(|z| z / beta).collect());
        g.iter_mut().for_each(|z| *z = zero);
        g[0] = Complex64::new(beta, 0.0);
        let mut cols = 0;
        for j in 0..m {
            apply(&basis[j], &mut w);
            iterations += 1;
            // Modified Gram–Schmidt, applied twice for orthogonality.
            for hij in h.iter_mut().take(j + 2) {
                hij[j] = zero;
            }
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i][j] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let h_next = norm(&w);
            h[j + 1][j] = Complex64::new(h_next, 0.0);
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (mut a, mut bb) = (h[i][j], h[i + 1][j]);
                rotate(c, s, &mut a, &mut bb);
                h[i][j] = a;
                h[i + 1][j] = bb;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            let (mut a, mut bb) = (h[j][j], h[j + 1][j]);
            rotate(c, s, &mut a, &mut bb);
            h[j][j] = a;
            h[j + 1][j] = zero;
            let (mut g0, mut g1) = (g[j], g[j + 1]);
            rotate(c, s, &mut g0, &mut g1);
            g[j] = g0;
            g[j + 1] = g1;
            cols = j + 1;

            let breakdown = h_next <= 1e-14 * beta;
            if g[j + 1].norm() <= target || iterations >= opts.max_iter || breakdown {
                break;
            }
            basis.push(w.iter().map(|z| z / h_next).collect());
        }

        // Back substitution on the triangular block.
        let mut y = vec![zero; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in i + 1..cols {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn identity_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_vec(&mut rng, 20);
        let sol = gmres_solve(|x, y| y.copy_from_slice(x), &b, &GmresOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        for (x, bi) in sol.x.iter().zip(&b) {
            assert!((x - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn scaled_identity() {
        let b: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let opts = GmresOptions {
            tol: 1e-14,
            ..GmresOptions::default()
        };
        let sol = gmres_solve(
            |x, y| {
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = 2.0 * xi;
                }
            },
            &b,
            &opts,
        )
        .unwrap();
        for (x, bi) in sol.x.iter().zip(&b) {
            assert!((x - bi / 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let b = vec![Complex64::new(0.0, 0.0); 5];
        let sol = gmres_solve(|_, _| unreachable!(), &b, &GmresOptions::default()).unwrap();
        assert!(sol.x.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn matches_dense_solve() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[(i, j)] = z * 0.3 / (n as f64).sqrt();
            }
            a[(i, i)] += Complex64::new(2.0, 0.5);
        }
        let b = random_vec(&mut rng, n);
        let oracle = a.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let opts = GmresOptions {
            tol: 1e-13,
            restart: 20,
            max_iter: 500,
        };
        let sol = gmres_solve(
            |x, y| {
                let v = &a * DVector::from_column_slice(x);
                y.copy_from_slice(v.as_slice());
            },
            &b,
            &opts,
        )
        .unwrap();
        let err = sol
            .x
            .iter()
            .zip(oracle.iter())
            .fold(0.0f64, |m, (x, o)| m.max((x - o).norm()));
        assert!(err < 1e-10, "error {err}");
    }

    #[test]
    fn budget_exhaustion_returns_best_iterate() {
        let n = 50;
        // Badly conditioned diagonal system with a tiny budget.
        let d: Vec<f64> = (0..n).map(|i| 10f64.powf(-6.0 * i as f64 / n as f64)).collect();
        let b = vec![Complex64::new(1.0, 0.0); n];
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 5,
            max_iter: 10,
        };
        let fail = gmres_solve(
            |x, y| {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(&d) {
                    *yi = xi * di;
                }
            },
            &b,
            &opts,
        )
        .unwrap_err();
        assert_eq!(fail.best.iterations, 10);
        assert!(fail.best.relative_residual < 1.0);
    }
}
