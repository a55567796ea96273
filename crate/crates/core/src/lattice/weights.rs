use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelInstance, OffsetSymmetry};
use crate::quadrature::{adaptive_box, subsampled_box, tensor_box, GaussLegendre};
use crate::special::sphere_area;
use rayon::prelude::*;
use std::collections::HashMap;

/// Sub-points per axis for cells cut by an indicator set.
const SUBSAMPLE: usize = 16;

/// Lattice stencil of a translation-invariant kernel at spacing `h`.
///
/// `w(z)` is the second-moment-matched cell weight
/// `|zh|^{-2} ∫_{cell(z)} |y|² k(0, y) dy`, so that
/// `Σ_z w(z)|zh|² + 2d·c_loc` is exactly the second moment of `k` over the
/// stencil cells plus the central cell.
#[derive(Debug, Clone)]
pub struct StencilWeights {
    pub dim: usize,
    pub h: f64,
    pub alpha: f64,
    /// Largest coordinate of any offset, `⌊R_trunc/h⌋`.
    pub reach: i32,
    /// Offsets `z ≠ 0` with `|z|h ≤ R_trunc`, `dim` integers each.
    pub offsets: Vec<i32>,
    /// Cell weight per offset (without the local correction).
    pub w: Vec<f64>,
    /// `(1/2d) ∫_{[-h/2,h/2]^d} |y|² k(0, y) dy`.
    pub c_loc: f64,
    pub r_trunc: f64,
    /// `∫_{|y| > R_trunc} k(0, y) dy`.
    pub tail_constant: f64,
    /// Dense lookup of `w(z) + [|z| = 1]·c_loc/h²` over `[-reach, reach]^d`.
    table: Vec<f64>,
}

impl StencilWeights {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn offset(&self, i: usize) -> &[i32] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }

    fn slot(&self, z: &[i32]) -> Option<usize> {
        let side = (2 * self.reach + 1) as usize;
        let mut s = 0usize;
        for &c in z {
            if c.abs() > self.reach {
                return None;
            }
            s = s * side + (c + self.reach) as usize;
        }
        Some(s)
    }

    /// Weight coupling two nodes at offset `z`, including the local stencil;
    /// zero outside the stencil and at `z = 0`.
    pub fn total(&self, z: &[i32]) -> f64 {
        self.slot(z).map_or(0.0, |s| self.table[s])
    }

    pub fn local_weight(&self) -> f64 {
        self.c_loc / (self.h * self.h)
    }

    /// `Σ_z` of the total weights.
    pub fn total_sum(&self) -> f64 {
        self.w.iter().sum::<f64>() + 2.0 * self.dim as f64 * self.local_weight()
    }
}

fn canonical(z: &[i32], sym: OffsetSymmetry) -> Vec<i32> {
    match sym {
        OffsetSymmetry::Hyperoctahedral => {
            let mut a: Vec<i32> = z.iter().map(|v| v.abs()).collect();
            a.sort_unstable();
            a
        }
        OffsetSymmetry::AxisAligned(axis) => {
            let mut rest: Vec<i32> = z
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != axis)
                .map(|(_, v)| v.abs())
                .collect();
            rest.sort_unstable();
            rest.insert(axis, z[axis].abs());
            rest
        }
        OffsetSymmetry::Central => {
            let neg: Vec<i32> = z.iter().map(|v| -v).collect();
            if neg.as_slice() > z {
                neg
            } else {
                z.to_vec()
            }
        }
    }
}

/// `∫_{center ± hw} |y|² k(0, y) dy` for a cell away from the origin.
fn cell_moment(
    k: &KernelInstance,
    center: &[f64],
    hw: f64,
    near: bool,
    rules: &(GaussLegendre, GaussLegendre),
) -> f64 {
    let f = |y: &[f64]| {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        r2 * k.eval_offset(y)
    };
    if !k.cell_is_uniform(center, hw) {
        subsampled_box(center, hw, SUBSAMPLE, f)
    } else if near {
        adaptive_box(&rules.0, center, hw, 1e-8, 4, &f)
    } else {
        tensor_box(&rules.1, center, hw, f)
    }
}

fn base_is_homogeneous(k: &KernelInstance) -> bool {
    k.is_homogeneous() || matches!(k.family(), KernelFamily::BoundedCoeff { .. })
}

/// `(1/2d) ∫_{[-h/2,h/2]^d} |y|² k(0, y) dy`.
fn local_coefficient(k: &KernelInstance, h: f64) -> Result<f64> {
    let dim = k.dim();
    let alpha = k.alpha();
    let rules = (GaussLegendre::new(4), GaussLegendre::new(3));
    let total = if base_is_homogeneous(k) {
        // The cube is a geometric series of shells Q \ Q/2, each scaled by 2^{α-2}.
        let hw = h / 8.0;
        let n = 4usize.pow(dim as u32);
        let mut shell = 0.0;
        for slot in 0..n {
            let mut rem = slot;
            let mut c = vec![0.0; dim];
            let mut inner = true;
            for ck in c.iter_mut() {
                let i = rem % 4;
                rem /= 4;
                *ck = (2.0 * i as f64 - 3.0) * hw;
                inner &= i == 1 || i == 2;
            }
            if !inner {
                shell += cell_moment(k, &c, hw, true, &rules);
            }
        }
        shell / (1.0 - 2f64.powf(alpha - 2.0))
    } else {
        let ball = k.radial_power_integral(&vec![0.0; dim], 2.0, 0.0, 0.5 * h)?;
        let r2 = 0.25 * h * h;
        let corners = subsampled_box(&vec![0.0; dim], 0.5 * h, 32, |y| {
            let n: f64 = y.iter().map(|v| v * v).sum();
            if n > r2 {
                n * k.eval_offset(y)
            } else {
                0.0
            }
        });
        ball + corners
    };
    Ok(total / (2.0 * dim as f64))
}

/// Stencil weights of `k` at spacing `h` over offsets with `|z|h ≤ r_trunc`.
/// For the bounded-coefficient family the weights are those of `a ≡ 1`.
pub fn quadrature_weights(k: &KernelInstance, h: f64, r_trunc: f64) -> Result<StencilWeights> {
    if !(h > 0.0) {
        return Err(Error::config(format!(
            "lattice spacing must be positive, got {h}"
        )));
    }
    if !(r_trunc >= 3.0 * h * (1.0 - 1e-12)) {
        return Err(Error::config(format!(
            "truncation radius {r_trunc} must be at least 3h = {}",
            3.0 * h
        )));
    }
    let dim = k.dim();
    let reach = (r_trunc / h * (1.0 + 1e-12)).floor() as i32;
    let limit = (r_trunc / h).powi(2) * (1.0 + 1e-12);
    let sym = k.offset_symmetry();

    let side = (2 * reach + 1) as usize;
    let count = side.pow(dim as u32);
    let mut offsets = Vec::new();
    let mut keys = Vec::new();
    let mut z = vec![0i32; dim];
    for slot in 0..count {
        let mut rem = slot;
        for c in z.iter_mut().rev() {
            *c = (rem % side) as i32 - reach;
            rem /= side;
        }
        let n2: i64 = z.iter().map(|v| (*v as i64) * (*v as i64)).sum();
        if n2 == 0 || n2 as f64 > limit {
            continue;
        }
        offsets.extend_from_slice(&z);
        keys.push(canonical(&z, sym));
    }

    let mut unique: Vec<Vec<i32>> = keys.clone();
    unique.sort_unstable();
    unique.dedup();
    let rules = (GaussLegendre::new(4), GaussLegendre::new(3));
    let values: Vec<Result<f64>> = unique
        .par_iter()
        .map(|rep| {
            let center: Vec<f64> = rep.iter().map(|c| *c as f64 * h).collect();
            let near = rep.iter().map(|c| c.abs()).max().unwrap_or(0) <= 3;
            let m = cell_moment(k, &center, 0.5 * h, near, &rules);
            let r2: f64 = center.iter().map(|v| v * v).sum();
            let w = m / r2;
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::numeric(format!(
                    "cell weight {w} at offset {rep:?} is not a nonnegative number"
                )));
            }
            Ok(w)
        })
        .collect();
    let mut lookup = HashMap::with_capacity(unique.len());
    for (rep, v) in unique.into_iter().zip(values) {
        lookup.insert(rep, v?);
    }
    let w: Vec<f64> = keys.iter().map(|key| lookup[key]).collect();

    let c_loc = local_coefficient(k, h)?;
    if !(c_loc >= 0.0) {
        return Err(Error::numeric(format!(
            "local coefficient {c_loc} is negative"
        )));
    }
    let origin = vec![0.0; dim];
    let tail_constant = match k.family() {
        KernelFamily::BoundedCoeff { .. } => {
            k.normalization * sphere_area(dim) * r_trunc.powf(-k.alpha()) / k.alpha()
        }
        _ => k.tail_mass(&origin, r_trunc)?,
    };

    let mut out = StencilWeights {
        dim,
        h,
        alpha: k.alpha(),
        reach,
        offsets,
        w,
        c_loc,
        r_trunc,
        tail_constant,
        table: vec![0.0; count],
    };
    let local = out.local_weight();
    for i in 0..out.len() {
        let s = out.slot(out.offset(i)).expect("offset within reach");
        let unit = out.offset(i).iter().map(|c| c.abs()).sum::<i32>() == 1;
        out.table[s] = out.w[i] + if unit { local } else { 0.0 };
    }
    Ok(out)
}
