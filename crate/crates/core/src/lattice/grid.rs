use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Bounded open set sampled by the lattice.
#[derive(Clone)]
pub enum Shape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Open set given by a membership test, contained in the box `lo..hi`.
    Predicate {
        inside: Membership,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { center, radius } => {
                write!(f, "Ball {{ center: {center:?}, radius: {radius} }}")
            }
            Shape::Box { lo, hi } => write!(f, "Box {{ lo: {lo:?}, hi: {hi:?} }}"),
            Shape::Predicate { lo, hi, .. } => write!(f, "Predicate {{ lo: {lo:?}, hi: {hi:?} }}"),
        }
    }
}

const BOUNDARY_EPS: f64 = 1e-12;

impl Shape {
    pub fn unit_ball(dim: usize) -> Self {
        Shape::Ball {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lo, .. } | Shape::Predicate { lo, .. } => lo.len(),
        }
    }

    /// Strict interior membership; points within a relative `1e-12` of the
    /// boundary count as boundary.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 < radius * radius * (1.0 - BOUNDARY_EPS)
            }
            Shape::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| {
                let eps = BOUNDARY_EPS * (h - l);
                *v > l + eps && *v < h - eps
            }),
            Shape::Predicate { inside, lo, hi } => {
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| v > l && v < h)
                    && inside(x)
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Box { lo, hi } | Shape::Predicate { lo, hi, .. } => (lo.clone(), hi.clone()),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } => 2.0 * radius,
            _ => {
                let (lo, hi) = self.bounding_box();
                lo.iter()
                    .zip(&hi)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Distance from `x` to the boundary, where it has a closed form.
    pub fn boundary_distance(&self, x: &[f64]) -> Option<f64> {
        match self {
            Shape::Ball { center, radius } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                Some((radius - r).max(0.0))
            }
            Shape::Box { lo, hi } => Some(
                x.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (l, h))| (v - l).min(h - v))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0),
            ),
            Shape::Predicate { .. } => None,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::config(format!(
                "shape dimension {} does not match {dim}",
                self.dim()
            )));
        }
        match self {
            Shape::Ball { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::config(format!(
                    "ball radius must be positive and finite, got {radius}"
                )))
            }
            Shape::Box { lo, hi } | Shape::Predicate { lo, hi, .. } => {
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(l, h)| !(h > l) || !l.is_finite() || !h.is_finite())
                {
                    Err(Error::config(
                        "box bounds must satisfy lo < hi and be finite",
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Interior nodes of `Ω ∩ h·Z^d` in lexicographic order (first axis slowest).
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub dim: usize,
    pub h: f64,
    pub shape: Shape,
    /// Integer coordinates, `dim` per node.
    cells: Vec<i64>,
    /// Lowest integer coordinate per axis of the dense slot array.
    origin: Vec<i64>,
    extent: Vec<usize>,
    /// Node index per bounding-box slot, `u32::MAX` outside.
    slots: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

pub fn build_grid(shape: Shape, h: f64, dim: usize) -> Result<GridDomain> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config(format!(
            "lattice spacing must be positive, got {h}"
        )));
    }
    if dim == 0 {
        return Err(Error::config("dimension must be positive"));
    }
    shape.validate(dim)?;
    let (lo, hi) = shape.bounding_box();
    let origin: Vec<i64> = lo.iter().map(|l| (l / h).floor() as i64).collect();
    let top: Vec<i64> = hi.iter().map(|u| (u / h).ceil() as i64).collect();
    let extent: Vec<usize> = origin
        .iter()
        .zip(&top)
        .map(|(a, b)| (b - a + 1) as usize)
        .collect();
    let total: usize = extent.iter().product();
    if total > 200_000_000 {
        return Err(Error::config(format!(
            "lattice bounding box has {total} slots; increase h"
        )));
    }
    let mut slots = vec![EMPTY; total];
    let mut cells = Vec::new();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut count = 0u32;
    for slot in 0..total {
        // slot order is lexicographic with the first axis slowest
        let mut rem = slot;
        for k in (0..dim).rev() {
            idx[k] = rem % extent[k];
            rem /= extent[k];
        }
        for k in 0..dim {
            point[k] = (origin[k] + idx[k] as i64) as f64 * h;
        }
        if shape.contains(&point) {
            slots[slot] = count;
            count += 1;
            cells.extend(idx.iter().zip(&origin).map(|(i, o)| *i as i64 + o));
        }
    }
    if count == 0 {
        return Err(Error::config(format!(
            "no lattice node lies strictly inside the domain at h = {h}"
        )));
    }
    Ok(GridDomain {
        dim,
        h,
        shape,
        cells,
        origin,
        extent,
        slots,
    })
}

impl GridDomain {
    pub fn len(&self) -> usize {
        self.cells.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Integer coordinates of node `i`.
    pub fn cell(&self, i: usize) -> &[i64] {
        &self.cells[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.cell(i).iter().map(|c| *c as f64 * self.h).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    /// Position of node `i` relative to the slot array origin.
    pub fn local(&self, i: usize) -> Vec<usize> {
        self.cell(i)
            .iter()
            .zip(&self.origin)
            .map(|(c, o)| (c - o) as usize)
            .collect()
    }

    /// Node index of an integer lattice point, if it is interior.
    pub fn index_of(&self, cell: &[i64]) -> Option<usize> {
        let mut slot = 0usize;
        for k in 0..self.dim {
            let off = cell[k] - self.origin[k];
            if off < 0 || off as usize >= self.extent[k] {
                return None;
            }
            slot = slot * self.extent[k] + off as usize;
        }
        match self.slots[slot] {
            EMPTY => None,
            n => Some(n as usize),
        }
    }

    /// Node index of `cell(i) + offset`, if interior.
    pub fn shifted(&self, i: usize, offset: &[i32]) -> Option<usize> {
        let mut slot = 0usize;
        let base = self.cell(i);
        for k in 0..self.dim {
            let off = base[k] + offset[k] as i64 - self.origin[k];
            if off < 0 || off as usize >= self.extent[k] {
                return None;
            }
            slot = slot * self.extent[k] + off as usize;
        }
        match self.slots[slot] {
            EMPTY => None,
            n => Some(n as usize),
        }
    }

    /// Node closest to `x` (ties broken by lowest index).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let d: f64 = self
                .cell(i)
                .iter()
                .zip(x)
                .map(|(c, v)| (*c as f64 * self.h - v).powi(2))
                .sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn diameter(&self) -> f64 {
        self.shape.diameter()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape.contains(x)
    }
}
