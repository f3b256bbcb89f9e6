//! Multi-dimensional FFTs on `N^d` grids stored row-major (last axis fastest).

use num_complex::Complex64 as c64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct FftNd {
    n: usize,
    d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub(crate) fn new(n: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, d, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    fn run(&self, data: &mut [c64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        let total = data.len();
        let mut line = vec![c64::new(0.0, 0.0); n];
        let mut scratch = vec![c64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform `Σ_j u_j e^{−2πi k·j/N}`.
    pub(crate) fn forward(&self, data: &mut [c64]) {
        self.run(data, &self.fwd);
    }

    /// Unnormalized inverse transform `Σ_k u_k e^{2πi k·j/N}`.
    pub(crate) fn inverse(&self, data: &mut [c64]) {
        self.run(data, &self.inv);
    }

    /// Normalized inverse (divides by `N^d`).
    pub(crate) fn inverse_normalized(&self, data: &mut [c64]) {
        self.inverse(data);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Flat index of the negated multi-index (mod `n` per axis).
pub(crate) fn negate_index(p: usize, n: usize, d: usize) -> usize {
    let mut rem = p;
    let mut out = 0;
    let mut mult = 1;
    for _ in 0..d {
        let i = rem % n;
        rem /= n;
        out += ((n - i) % n) * mult;
        mult *= n;
    }
    out
}

/// Flat index of `p − q` (mod `n` per axis).
pub(crate) fn diff_index(p: usize, q: usize, n: usize, d: usize) -> usize {
    let (mut a, mut b) = (p, q);
    let mut out = 0;
    let mut mult = 1;
    for _ in 0..d {
        let (i, j) = (a % n, b % n);
        a /= n;
        b /= n;
        out += ((i + n - j) % n) * mult;
        mult *= n;
    }
    out
}
