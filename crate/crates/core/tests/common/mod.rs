//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use kcover::geometry::torus_distance;
use kcover::{PointCloud, SpatialIndex, TorusPoint};

/// `k`-th smallest distance by a full scan.
pub fn brute_knn(cloud: &PointCloud, x: &TorusPoint, k: usize) -> f64 {
    let mut d: Vec<f64> = cloud.points().iter().map(|p| torus_distance(x, p).unwrap()).collect();
    d.sort_by(f64::total_cmp);
    d[k - 1]
}

/// Points strictly inside `rho - tol` by a full scan, or `None` when a
/// point other than `exclude` sits in the tolerance band.
pub fn brute_count(cloud: &PointCloud, c: &TorusPoint, rho: f64, exclude: &[usize], tol: f64) -> Option<usize> {
    let mut count = 0;
    for (i, p) in cloud.points().iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let d = torus_distance(c, p).unwrap();
        if d < rho - tol {
            count += 1;
        } else if d <= rho + tol {
            return None;
        }
    }
    Some(count)
}

fn wrap(i: isize, m: usize) -> usize {
    i.rem_euclid(m as isize) as usize
}

/// `d_k` at every node of the `m^d` lattice, `d` in {1, 2}.
pub struct DenseGrid {
    pub dim: usize,
    pub per_axis: usize,
    pub values: Vec<f64>,
}

impl DenseGrid {
    pub fn new(index: &SpatialIndex<'_>, k: usize, per_axis: usize) -> DenseGrid {
        let dim = index.cloud().dim();
        assert!(dim == 1 || dim == 2, "dense grid oracle supports d = 1, 2");
        let h = 1.0 / per_axis as f64;
        let total = per_axis.pow(dim as u32);
        let values = (0..total)
            .map(|l| {
                let coords: Vec<f64> = if dim == 1 {
                    vec![l as f64 * h]
                } else {
                    vec![(l % per_axis) as f64 * h, (l / per_axis) as f64 * h]
                };
                index.knn_distance(&TorusPoint::new(&coords).unwrap(), k).unwrap()
            })
            .collect();
        DenseGrid { dim, per_axis, values }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let m = self.per_axis;
        if self.dim == 1 {
            self.values[wrap(i, m)]
        } else {
            self.values[wrap(j, m) * m + wrap(i, m)]
        }
    }

    fn location(&self, i: isize, j: isize) -> Vec<f64> {
        let h = self.spacing();
        if self.dim == 1 {
            vec![wrap(i, self.per_axis) as f64 * h]
        } else {
            vec![wrap(i, self.per_axis) as f64 * h, wrap(j, self.per_axis) as f64 * h]
        }
    }

    /// Nodes strictly above all `3^d - 1` neighbours.
    pub fn discrete_maxima(&self) -> Vec<(isize, isize)> {
        let m = self.per_axis as isize;
        let mut out = Vec::new();
        let jr = if self.dim == 1 { 0..1 } else { 0..m };
        for j in jr {
            for i in 0..m {
                let c = self.at(i, j);
                let dj: &[isize] = if self.dim == 1 { &[0] } else { &[-1, 0, 1] };
                let higher = dj
                    .iter()
                    .any(|&b| [-1isize, 0, 1].iter().any(|&a| (a, b) != (0, 0) && self.at(i + a, j + b) >= c));
                if !higher {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Smallest box half-width (in nodes) proving a local maximum of the
    /// continuous `d_k` inside the open box around `(i, j)`. The node must
    /// be the box maximum and exceed a Lipschitz bound on the boundary.
    pub fn certify(&self, i: isize, j: isize, widths: &[isize]) -> Option<isize> {
        let c = self.at(i, j);
        let h = self.spacing();
        for &w in widths {
            if self.dim == 1 {
                let inner = (1..w).flat_map(|a| [self.at(i - a, 0), self.at(i + a, 0)]).fold(f64::MIN, f64::max);
                if inner >= c {
                    return None;
                }
                if c > self.at(i - w, 0).max(self.at(i + w, 0)) {
                    return Some(w);
                }
                continue;
            }
            let mut inner = f64::MIN;
            for b in -(w - 1)..w {
                for a in -(w - 1)..w {
                    if (a, b) != (0, 0) {
                        inner = inner.max(self.at(i + a, j + b));
                    }
                }
            }
            if inner >= c {
                return None;
            }
            let ring = square_ring(w);
            let mut bound = f64::MIN;
            for t in 0..ring.len() {
                let (a0, b0) = ring[t];
                let (a1, b1) = ring[(t + 1) % ring.len()];
                let (f0, f1) = (self.at(i + a0, j + b0), self.at(i + a1, j + b1));
                bound = bound.max((f0 + f1 + h) / 2.0);
            }
            if c > bound {
                return Some(w);
            }
        }
        None
    }
}

/// Offsets on the boundary of the `[-w, w]^2` square, in cyclic order.
fn square_ring(w: isize) -> Vec<(isize, isize)> {
    let mut out = Vec::with_capacity(8 * w as usize);
    for a in -w..w {
        out.push((a, -w));
    }
    for b in -w..w {
        out.push((w, b));
    }
    for a in (-w + 1..=w).rev() {
        out.push((a, w));
    }
    for b in (-w + 1..=w).rev() {
        out.push((-w, b));
    }
    out
}

/// Proves that `c` is a strict local maximum of `d_k` with value `value`:
/// on a box of half-size `L` around `c` the boundary's Lipschitz bound stays
/// below `value`. Tries shrinking boxes, then finer boundaries for maxima
/// with a shallow side.
pub fn certify_local_max(index: &SpatialIndex<'_>, k: usize, c: &TorusPoint, value: f64) -> bool {
    let dim = c.dim();
    let f = |v: &[f64]| {
        let x: Vec<f64> = c.coords().iter().zip(v).map(|(a, b)| a + b).collect();
        index.knn_distance(&TorusPoint::new(&x).unwrap(), k).unwrap()
    };
    for &w in &[64isize, 1024, 16384, 262144] {
        for j in 3..=7 {
            let big_l = value.max(1e-3) * 10f64.powi(-j);
            if dim == 1 {
                if value > f(&[-big_l]).max(f(&[big_l])) {
                    return true;
                }
                continue;
            }
            let s = big_l / w as f64;
            let ring = square_ring(w);
            let vals: Vec<f64> = ring.iter().map(|&(a, b)| f(&[a as f64 * s, b as f64 * s])).collect();
            let bound = (0..vals.len()).map(|t| (vals[t] + vals[(t + 1) % vals.len()] + s) / 2.0).fold(f64::MIN, f64::max);
            if value > bound {
                return true;
            }
        }
    }
    false
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MaximaCheck {
    pub enumerated: usize,
    pub discrete: usize,
    pub certified: usize,
    /// Certified grid maxima with no enumerated maximum inside.
    pub missed: usize,
    /// Certified boxes whose largest enumerated value falls outside the
    /// grid bracket `[v, v + h sqrt(d) / 2]`.
    pub value_mismatch: usize,
    /// Enumerated maxima that fail the local certificate or whose value
    /// disagrees with `d_k` at the center.
    pub spurious: usize,
    /// Enumerated maxima not inside any certified grid box.
    pub unseen_by_grid: usize,
}

/// Compares enumerated index-`d` critical points `(center, rho)` with the
/// certified local maxima of `d_k` on a dense lattice.
pub fn check_maxima(index: &SpatialIndex<'_>, k: usize, maxima: &[(TorusPoint, f64)], per_axis: usize) -> MaximaCheck {
    let grid = DenseGrid::new(index, k, per_axis);
    let dim = grid.dim;
    let h = grid.spacing();
    let discrete = grid.discrete_maxima();
    let widths = [2isize, 4, 8, 16, 32, 64];
    let mut out = MaximaCheck { enumerated: maxima.len(), discrete: discrete.len(), ..Default::default() };
    let mut seen = vec![false; maxima.len()];
    for &(i, j) in &discrete {
        let Some(w) = grid.certify(i, j, &widths) else { continue };
        out.certified += 1;
        let center = grid.location(i, j);
        let half = w as f64 * h;
        let mut best = f64::MIN;
        for (m, (c, rho)) in maxima.iter().enumerate() {
            let inside = c.coords().iter().zip(&center).all(|(x, y)| {
                let t = (x - y).rem_euclid(1.0);
                t.min(1.0 - t) < half
            });
            if inside {
                seen[m] = true;
                best = best.max(*rho);
            }
        }
        let v = grid.at(i, j);
        if best == f64::MIN {
            out.missed += 1;
        } else if best < v - 1e-12 || best > v + h * (dim as f64).sqrt() / 2.0 + 1e-12 {
            out.value_mismatch += 1;
        }
    }
    for (m, (c, rho)) in maxima.iter().enumerate() {
        let at_center = index.knn_distance(c, k).unwrap();
        if (at_center - rho).abs() > 1e-8 || !certify_local_max(index, k, c, *rho) {
            out.spurious += 1;
        }
        if !seen[m] {
            out.unseen_by_grid += 1;
        }
    }
    out
}
