//! Torus-wrapped uniform grid over a point cloud, with exact k-NN distances and
//! exact open-ball counts.
//!
//! Buckets are stored in CSR form: points are sorted by cell, `cell_start[c]..
//! cell_start[c+1]` is the slice of cell `c`, and coordinates are copied into
//! bucket order so a bucket scan is a linear walk.

use crate::error::{Error, Result};
use crate::geometry::{dist2, TorusPoint, MAX_DIM, R_CONV, TOL_GEO};
use crate::sampling::PointCloud;

/// Upper bound on the number of grid cells.
const MAX_CELLS: usize = 1 << 26;

/// Default grid resolution: about `k` points per cell, never coarser than 1/4.
pub fn default_cell_size(n: f64, k: usize, d: usize) -> f64 {
    if n <= 0.0 {
        return R_CONV;
    }
    (k.max(1) as f64 / n).powf(1.0 / d as f64).min(R_CONV)
}

/// Result of classifying cloud points against a sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallCensus {
    /// Points strictly inside (distance `< rho - TOL_GEO`).
    pub strict: usize,
    /// Non-excluded points within `TOL_GEO` of the sphere.
    pub marginal: usize,
    /// One of the marginal points, for error reporting.
    pub first_marginal: Option<usize>,
}

#[derive(Debug)]
pub struct SpatialIndex<'a> {
    cloud: &'a PointCloud,
    dim: usize,
    cell_size: f64,
    cells_per_axis: usize,
    cell_width: f64,
    cell_start: Vec<u32>,
    order: Vec<u32>,
    coords: Vec<[f64; MAX_DIM]>,
}

impl<'a> SpatialIndex<'a> {
    pub fn build(cloud: &'a PointCloud, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size <= R_CONV) {
            return Err(Error::CellSizeOutOfRange(cell_size));
        }
        let dim = cloud.dim();
        let m = (1.0 / cell_size).floor() as usize;
        let total = m
            .checked_pow(dim as u32)
            .filter(|&t| t <= MAX_CELLS)
            .ok_or(Error::CellSizeOutOfRange(cell_size))?;

        let cell_of = |p: &TorusPoint| -> usize {
            let mut id = 0;
            for &c in p.coords().iter().rev() {
                id = id * m + ((c * m as f64) as usize).min(m - 1);
            }
            id
        };
        let mut counts = vec![0u32; total + 1];
        let ids: Vec<usize> = cloud.points().iter().map(cell_of).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let cell_start = counts.clone();
        let mut fill = counts;
        let mut order = vec![0u32; cloud.len()];
        for (pi, &c) in ids.iter().enumerate() {
            order[fill[c] as usize] = pi as u32;
            fill[c] += 1;
        }
        let coords = order.iter().map(|&pi| *cloud.points()[pi as usize].raw()).collect();
        Ok(SpatialIndex {
            cloud,
            dim,
            cell_size,
            cells_per_axis: m,
            cell_width: 1.0 / m as f64,
            cell_start,
            order,
            coords,
        })
    }

    /// Builds with [`default_cell_size`] for the cloud's size and `k`.
    pub fn with_default_cells(cloud: &'a PointCloud, k: usize) -> Result<Self> {
        Self::build(cloud, default_cell_size(cloud.len() as f64, k, cloud.dim()))
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Point ids stored in the bucket with the given (wrapped) cell coordinates.
    pub fn bucket(&self, cell: &[usize]) -> &[u32] {
        let id = self.linear(cell);
        &self.order[self.cell_start[id] as usize..self.cell_start[id + 1] as usize]
    }

    fn linear(&self, cell: &[usize]) -> usize {
        cell.iter().rev().fold(0, |acc, &c| acc * self.cells_per_axis + c % self.cells_per_axis)
    }

    fn check_dim(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(())
    }

    #[inline]
    fn scan_cell(&self, id: usize, mut f: impl FnMut(usize, &[f64; MAX_DIM])) {
        for slot in self.cell_start[id] as usize..self.cell_start[id + 1] as usize {
            f(slot, &self.coords[slot]);
        }
    }

    /// Distance from `x` to its `k`-th nearest cloud point.
    pub fn knn_distance(&self, x: &TorusPoint, k: usize) -> Result<f64> {
        Ok(self.k_nearest(x, k)?.last().map(|&(_, d)| d).unwrap_or(0.0))
    }

    /// The `k` nearest cloud points as `(point id, distance)`, nearest first.
    /// Ties are broken by bucket order.
    pub fn k_nearest(&self, x: &TorusPoint, k: usize) -> Result<Vec<(usize, f64)>> {
        self.check_dim(x)?;
        if k == 0 || self.cloud.len() < k {
            return Err(Error::InsufficientPoints { needed: k.max(1), available: self.cloud.len() });
        }
        let m = self.cells_per_axis;
        let dim = self.dim;
        let xr = x.raw();
        let mut center = [0usize; MAX_DIM];
        for i in 0..dim {
            center[i] = ((xr[i] * m as f64) as usize).min(m - 1);
        }
        // (squared distance, slot), ascending
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut s = 0usize;
        loop {
            if 2 * s + 1 >= m {
                // the shell would wrap onto itself; fall back to a full scan
                best.clear();
                for (slot, c) in self.coords.iter().enumerate() {
                    push_best(&mut best, k, dist2(xr, c, dim), slot);
                }
                break;
            }
            self.for_each_shell_cell(&center, s, |id| {
                self.scan_cell(id, |slot, c| push_best(&mut best, k, dist2(xr, c, dim), slot))
            });
            let reach = s as f64 * self.cell_width;
            if best.len() == k && best[k - 1].0 <= reach * reach {
                break;
            }
            s += 1;
        }
        Ok(best
            .into_iter()
            .map(|(d2, slot)| (self.order[slot] as usize, d2.sqrt()))
            .collect())
    }

    /// Cells at Chebyshev distance exactly `s` from `center`.
    fn for_each_shell_cell(&self, center: &[usize; MAX_DIM], s: usize, mut f: impl FnMut(usize)) {
        let m = self.cells_per_axis as isize;
        let dim = self.dim;
        let s = s as isize;
        let mut off = [-s; MAX_DIM];
        loop {
            if off[..dim].iter().any(|o| o.abs() == s) {
                let mut id = 0isize;
                for i in (0..dim).rev() {
                    id = id * m + (center[i] as isize + off[i]).rem_euclid(m);
                }
                f(id as usize);
            }
            let mut i = 0;
            loop {
                if i == dim {
                    return;
                }
                off[i] += 1;
                if off[i] > s {
                    off[i] = -s;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Visits every cloud point at distance `<= radius` from `x` with
    /// `(point id, distance)`.
    pub fn for_each_within(&self, x: &TorusPoint, radius: f64, mut f: impl FnMut(usize, f64)) {
        let m = self.cells_per_axis;
        let dim = self.dim;
        let xr = x.raw();
        let r2 = radius * radius;
        let mut lo = [0isize; MAX_DIM];
        let mut span = [0usize; MAX_DIM];
        for i in 0..dim {
            let a = ((xr[i] - radius) * m as f64).floor() as isize;
            let b = ((xr[i] + radius) * m as f64).floor() as isize;
            let len = (b - a + 1) as usize;
            if len >= m {
                lo[i] = 0;
                span[i] = m;
            } else {
                lo[i] = a;
                span[i] = len;
            }
        }
        let mut step = [0usize; MAX_DIM];
        loop {
            let mut id = 0usize;
            for i in (0..dim).rev() {
                id = id * m + (lo[i] + step[i] as isize).rem_euclid(m as isize) as usize;
            }
            self.scan_cell(id, |slot, c| {
                let d2 = dist2(xr, c, dim);
                if d2 <= r2 {
                    f(self.order[slot] as usize, d2.sqrt());
                }
            });
            let mut i = 0;
            loop {
                if i == dim {
                    return;
                }
                step[i] += 1;
                if step[i] == span[i] {
                    step[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Strict/marginal classification of the cloud against the sphere of
    /// radius `rho` about `c`, ignoring the points in `exclude`.
    pub fn ball_census(&self, c: &TorusPoint, rho: f64, exclude: &[usize]) -> Result<BallCensus> {
        self.check_dim(c)?;
        let mut census = BallCensus { strict: 0, marginal: 0, first_marginal: None };
        self.for_each_within(c, rho + TOL_GEO, |id, d| {
            if exclude.contains(&id) {
                return;
            }
            if d < rho - TOL_GEO {
                census.strict += 1;
            } else {
                census.marginal += 1;
                census.first_marginal.get_or_insert(id);
            }
        });
        Ok(census)
    }

    /// Number of points in the open ball `B(c, rho)`, excluding `exclude`.
    /// A non-excluded point within `TOL_GEO` of the boundary is an error.
    pub fn count_in_ball(&self, c: &TorusPoint, rho: f64, exclude: &[usize]) -> Result<usize> {
        if !(rho > 0.0 && rho <= R_CONV) {
            return Err(Error::config(format!("ball radius {rho} outside (0, 1/4]")));
        }
        let census = self.ball_census(c, rho, exclude)?;
        match census.first_marginal {
            Some(point) => Err(Error::Marginal { point }),
            None => Ok(census.strict),
        }
    }
}

#[inline]
fn push_best(best: &mut Vec<(f64, usize)>, k: usize, d2: f64, slot: usize) {
    if best.len() == k && d2 >= best[k - 1].0 {
        return;
    }
    let pos = best.partition_point(|&(b, _)| b <= d2);
    best.insert(pos, (d2, slot));
    best.truncate(k);
}
