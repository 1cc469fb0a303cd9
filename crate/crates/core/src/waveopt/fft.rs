//! Square 2D FFTs on row-major buffers.
//!
//! Rows are transformed independently (in parallel), then the buffer is
//! transposed and the rows transformed again. Each row is processed by the
//! same plan regardless of which thread picks it up, so results are
//! bit-identical for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub struct Fft2 {
    n: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize, direction: Direction) -> Self {
        let mut planner = FftPlanner::new();
        let plan = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        Self { n, plan }
    }

    /// Unnormalized transform in place.
    pub fn process(&self, data: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        self.rows(data);
        transpose(data, n);
        self.rows(data);
        transpose(data, n);
    }

    fn rows(&self, data: &mut [Complex64]) {
        let n = self.n;
        let scratch_len = self.plan.get_inplace_scratch_len();
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, row| self.plan.process_with_scratch(row, scratch),
        );
    }
}

/// In-place transpose of an n×n matrix, blocked for cache locality.
pub fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Multiply by (−1)^(i+j). For even n, conjugating an FFT by this
/// checkerboard moves the zero frequency (and the spatial origin) to index n/2.
pub fn checkerboard(data: &mut [Complex64], n: usize) {
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let start = (i & 1) ^ 1;
        for v in row.iter_mut().skip(start).step_by(2) {
            *v = -*v;
        }
    });
}

/// Unitary centered transform: origin at index n/2 on input and output.
pub fn centered_unitary(data: &mut [Complex64], n: usize, direction: Direction) {
    checkerboard(data, n);
    Fft2::new(n, direction).process(data);
    checkerboard(data, n);
    let scale = 1.0 / n as f64;
    data.par_iter_mut().for_each(|v| *v *= scale);
}

/// Signed frequency index of FFT bin `k` on an n-point transform.
#[inline]
pub fn signed_bin(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
