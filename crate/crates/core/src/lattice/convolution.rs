//! Zero-padded FFT convolution of node vectors with an even stencil.

use super::grid::GridDomain;
use super::weights::StencilWeights;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest integer `≥ n` with no prime factor above 5.
fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub struct ConvolutionPlan {
    sizes: Vec<usize>,
    extent: Vec<usize>,
    strides: Vec<usize>,
    kernel_hat: Vec<Complex64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Padded-array position of each node.
    positions: Vec<usize>,
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("sizes", &self.sizes)
            .finish()
    }
}

impl ConvolutionPlan {
    pub fn new(grid: &GridDomain, weights: &StencilWeights) -> Self {
        let dim = grid.dim;
        let extent = grid.extent().to_vec();
        let span: Vec<usize> = extent
            .iter()
            .map(|e| (weights.reach as usize).min(e - 1))
            .collect();
        let sizes: Vec<usize> = extent
            .iter()
            .zip(&span)
            .map(|(e, l)| fast_size(e + l))
            .collect();
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * sizes[k + 1];
        }
        let total: usize = sizes.iter().product();

        let mut kernel = vec![Complex64::new(0.0, 0.0); total];
        for i in 0..weights.len() {
            let z = weights.offset(i);
            if z.iter()
                .zip(&span)
                .any(|(c, l)| c.unsigned_abs() as usize > *l)
            {
                continue;
            }
            let pos: usize = z
                .iter()
                .zip(&sizes)
                .zip(&strides)
                .map(|((c, n), s)| (c.rem_euclid(*n as i32) as usize) * s)
                .sum();
            kernel[pos].re = weights.total(z);
        }
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = sizes.iter().map(|n| planner.plan_fft_forward(*n)).collect();
        let inverse: Vec<_> = sizes.iter().map(|n| planner.plan_fft_inverse(*n)).collect();
        let full = vec![usize::MAX; dim];
        transform(&mut kernel, &sizes, &strides, &forward, &full, false);

        let positions = (0..grid.len())
            .map(|i| grid.local(i).iter().zip(&strides).map(|(c, s)| c * s).sum())
            .collect();
        ConvolutionPlan {
            sizes,
            extent,
            strides,
            kernel_hat: kernel,
            forward,
            inverse,
            positions,
        }
    }

    /// `(W u)_i = Σ_{j ≠ i} w_total(x_j - x_i) u_j` over interior nodes.
    pub fn convolve(&self, u: &[f64]) -> Vec<f64> {
        let total: usize = self.sizes.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (p, v) in self.positions.iter().zip(u) {
            buf[*p].re = *v;
        }
        transform(
            &mut buf,
            &self.sizes,
            &self.strides,
            &self.forward,
            &self.extent,
            false,
        );
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= *k;
        }
        transform(
            &mut buf,
            &self.sizes,
            &self.strides,
            &self.inverse,
            &self.extent,
            true,
        );
        let scale = 1.0 / total as f64;
        self.positions.iter().map(|p| buf[*p].re * scale).collect()
    }
}

/// Per-axis 1-D transforms. Lines whose untransformed coordinates lie outside
/// `support` are zero (forward) or never read (inverse) and are skipped.
fn transform(
    data: &mut [Complex64],
    sizes: &[usize],
    strides: &[usize],
    plans: &[Arc<dyn Fft<f64>>],
    support: &[usize],
    inverse: bool,
) {
    let dim = sizes.len();
    let order: Vec<usize> = if inverse {
        (0..dim).collect()
    } else {
        (0..dim).rev().collect()
    };
    let max_len = *sizes.iter().max().unwrap();
    let mut line = vec![Complex64::new(0.0, 0.0); max_len];
    let scratch_len = plans
        .iter()
        .map(|p| p.get_inplace_scratch_len())
        .max()
        .unwrap_or(0);
    let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
    for (step, &axis) in order.iter().enumerate() {
        // axes handled before this one are full; those after are restricted.
        let done: Vec<usize> = order[..step].to_vec();
        let bounds: Vec<usize> = (0..dim)
            .map(|k| {
                if k == axis {
                    1
                } else if done.contains(&k) {
                    if inverse {
                        support[k].min(sizes[k])
                    } else {
                        sizes[k]
                    }
                } else if inverse {
                    sizes[k]
                } else {
                    support[k].min(sizes[k])
                }
            })
            .collect();
        let n = sizes[axis];
        let stride = strides[axis];
        let buf = &mut line[..n];
        let count: usize = bounds.iter().product();
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let base: usize = idx.iter().zip(strides).map(|(i, s)| i * s).sum();
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + j * stride];
            }
            plans[axis].process_with_scratch(buf, &mut scratch);
            for (j, b) in buf.iter().enumerate() {
                data[base + j * stride] = *b;
            }
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < bounds[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_sizes() {
        assert_eq!(fast_size(7), 8);
        assert_eq!(fast_size(61), 64);
        assert_eq!(fast_size(83), 90);
        assert_eq!(fast_size(1), 1);
    }
}
