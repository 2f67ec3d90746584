//! Data-parallel kernels over sample vectors.
//!
//! Every hot pointwise loop in the solver (nonlinear phase rotation, Fourier
//! multipliers, norm accumulation) goes through this module. With the
//! `parallel` feature the work is spread over the rayon pool; without it the
//! same kernels run sequentially.
//!
//! Reductions are always computed over fixed [`CHUNK`]-sized blocks whose
//! partial sums are then combined left to right. The summation order is thus
//! independent of the number of worker threads and of the feature flag, which
//! keeps diagnostics bit-identical between the two backends.

/// Block length used for reductions.
pub const CHUNK: usize = 4096;

/// Sequential backend. Always compiled; the benches use it as the baseline.
pub mod seq {
    use super::CHUNK;

    pub fn for_each_indexed<T, F>(xs: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        for (i, x) in xs.iter_mut().enumerate() {
            f(i, x);
        }
    }

    pub fn zip_for_each<A, B, F>(xs: &mut [A], ys: &[B], f: F)
    where
        A: Send,
        B: Sync,
        F: Fn(&mut A, &B) + Sync + Send,
    {
        assert_eq!(xs.len(), ys.len());
        for (x, y) in xs.iter_mut().zip(ys) {
            f(x, y);
        }
    }

    pub fn sum_indexed<T, F>(xs: &[T], f: F) -> f64
    where
        T: Sync,
        F: Fn(usize, &T) -> f64 + Sync + Send,
    {
        xs.chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * CHUNK;
                chunk
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, x)| acc + f(base + i, x))
            })
            .fold(0.0, |acc, s| acc + s)
    }

    pub fn max_indexed<T, F>(xs: &[T], f: F) -> f64
    where
        T: Sync,
        F: Fn(usize, &T) -> f64 + Sync + Send,
    {
        xs.iter()
            .enumerate()
            .map(|(i, x)| f(i, x))
            .fold(0.0, f64_max)
    }

    pub fn all<T, F>(xs: &[T], f: F) -> bool
    where
        T: Sync,
        F: Fn(&T) -> bool + Sync + Send,
    {
        xs.iter().all(f)
    }

    /// Max that propagates NaN, so non-finite data is never hidden.
    pub(crate) fn f64_max(a: f64, b: f64) -> f64 {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    }
}

/// Rayon backend.
#[cfg(feature = "parallel")]
pub mod par {
    use super::CHUNK;
    use rayon::prelude::*;

    pub fn for_each_indexed<T, F>(xs: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        xs.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (i, x) in chunk.iter_mut().enumerate() {
                    f(base + i, x);
                }
            });
    }

    pub fn zip_for_each<A, B, F>(xs: &mut [A], ys: &[B], f: F)
    where
        A: Send,
        B: Sync,
        F: Fn(&mut A, &B) + Sync + Send,
    {
        assert_eq!(xs.len(), ys.len());
        xs.par_chunks_mut(CHUNK)
            .zip(ys.par_chunks(CHUNK))
            .for_each(|(xc, yc)| {
                for (x, y) in xc.iter_mut().zip(yc) {
                    f(x, y);
                }
            });
    }

    pub fn sum_indexed<T, F>(xs: &[T], f: F) -> f64
    where
        T: Sync,
        F: Fn(usize, &T) -> f64 + Sync + Send,
    {
        let partials: Vec<f64> = xs
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * CHUNK;
                chunk
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, x)| acc + f(base + i, x))
            })
            .collect();
        partials.into_iter().fold(0.0, |acc, s| acc + s)
    }

    pub fn max_indexed<T, F>(xs: &[T], f: F) -> f64
    where
        T: Sync,
        F: Fn(usize, &T) -> f64 + Sync + Send,
    {
        xs.par_iter()
            .enumerate()
            .map(|(i, x)| f(i, x))
            .reduce(|| 0.0, super::seq::f64_max)
    }

    pub fn all<T, F>(xs: &[T], f: F) -> bool
    where
        T: Sync,
        F: Fn(&T) -> bool + Sync + Send,
    {
        xs.par_iter().all(f)
    }
}

#[cfg(feature = "parallel")]
pub use par::*;
#[cfg(not(feature = "parallel"))]
pub use seq::*;
