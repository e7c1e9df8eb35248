//! Batched DFT kernels shared by the Fourier substeps.
//!
//! Forward transforms follow `Ŵ_j = Σ_m W_m e^{-2πi jm/n}` (unnormalized);
//! callers fold the `1/n` factor into their mode multipliers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Relative bound on the imaginary residue left after a spectral step on real data.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

type PlanKey = (usize, bool);
type PlanCache = (FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    let lock = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = lock.lock().expect("fft planner poisoned");
    let (planner, cache) = &mut *guard;
    Arc::clone(cache.entry((n, inverse)).or_insert_with(|| {
        let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
        planner.plan_fft(n, dir)
    }))
}

/// Transforms every contiguous length-`n` row of `buf` in place.
pub fn fft_rows(buf: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len() % n, 0);
    let fft = plan(n, inverse);
    let rows = buf.len() / n;
    let per_task = (rows / (4 * rayon::current_num_threads())).max(1);
    buf.par_chunks_mut(per_task * n).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Row-major transpose of a `rows × cols` buffer.
pub fn transpose<T: Copy + Default + Send + Sync>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::default(); src.len()];
    out.par_chunks_mut(rows).enumerate().for_each(|(c, dst)| {
        for (r, v) in dst.iter_mut().enumerate() {
            *v = src[r * cols + c];
        }
    });
    out
}

pub fn complexify(values: &Array2<f64>) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Largest `|Im|` and `|Re|` over a buffer.
pub fn residue(buf: &[Complex64]) -> (f64, f64) {
    buf.par_iter()
        .fold(|| (0.0_f64, 0.0_f64), |(im, re), z| (im.max(z.im.abs()), re.max(z.re.abs())))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// Drops the imaginary part of a spectral result after checking it is roundoff.
pub fn into_real(buf: Vec<Complex64>, shape: (usize, usize), context: &str) -> Array2<f64> {
    if cfg!(debug_assertions) {
        let (im, re) = residue(&buf);
        debug_assert!(
            im <= IMAG_RESIDUE_TOL * re,
            "{context}: imaginary residue {im:e} exceeds tolerance (max |Re| = {re:e})"
        );
    }
    let data: Vec<f64> = buf.into_iter().map(|z| z.re).collect();
    Array2::from_shape_vec(shape, data).expect("buffer length matches shape")
}

/// Normalized forward DFT `(1/n) Σ_m f_m e^{-2πi jm/n}` of a real sequence.
pub fn dft_real(f: &[f64]) -> Vec<Complex64> {
    let n = f.len();
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Synthesis `Σ_j ĉ_j e^{2πi jm/n}` (no normalization).
pub fn idft(coef: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coef.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// Configures the global rayon pool from `WPFP_THREADS`, if set.
///
/// Returns the number of worker threads in use. Safe to call more than once;
/// later calls leave the already-initialized pool alone.
pub fn init_threads_from_env() -> usize {
    if let Some(n) = std::env::var("WPFP_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    rayon::current_num_threads()
}
