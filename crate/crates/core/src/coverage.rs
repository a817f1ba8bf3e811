//! k-coverage decisions: the Morse criterion and grid oracles.
//!
//! The grid oracles work on the implicit lattice of `N^d` nodes at spacing
//! `1/N`. Node blocks are evaluated top-down: a block whose center value `D`
//! and half-diagonal `δ` satisfy `D + δ <= t` has every node at or below `t`
//! (`d_k` is 1-Lipschitz), so it is skipped without visiting its nodes. The
//! result is identical to evaluating every node.

use serde::{Deserialize, Serialize};

use crate::critical::{enumerate_with_index, CriticalPoint, Enumeration, EnumerationWindow};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{TorusPoint, MAX_DIM, R_CONV, TOL_GEO};
use crate::index::{default_cell_size, SpatialIndex};
use crate::sampling::PointCloud;

/// Refinement depth used when certifying the maximum of `d_k`.
const CERTIFY_DEPTH: u32 = 40;
/// Refuse to materialize more vacant nodes than this.
const MAX_VACANT_NODES: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Covered {
    Yes,
    No,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Morse,
    Grid,
}

/// An uncovered location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    CriticalPoint(CriticalPoint),
    GridNode { location: TorusPoint, value: f64 },
}

impl Witness {
    pub fn location(&self) -> &TorusPoint {
        match self {
            Witness::CriticalPoint(c) => &c.center,
            Witness::GridNode { location, .. } => location,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageVerdict {
    pub covered: Covered,
    pub method: Method,
    pub witness: Option<Witness>,
}

fn check_args(cloud: &PointCloud, k: usize, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::config(format!("radius {r} must be positive")));
    }
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if cloud.len() < k {
        return Err(Error::InsufficientPoints { needed: k, available: cloud.len() });
    }
    Ok(())
}

/// Decides whether `max d_k <= t`. `None` if refinement runs out before the
/// question is settled.
pub fn certify_max_below(index: &SpatialIndex<'_>, k: usize, t: f64) -> Result<Option<bool>> {
    let dim = index.cloud().dim();
    let side = default_cell_size(index.cloud().len() as f64, k, dim);
    let top = ((1.0 / side).ceil() as u64).max(4);
    let total = top.pow(dim as u32) as usize;
    let results = exec::map_indexed(total, |linear| -> Result<Option<bool>> {
        let mut cell = [0u64; MAX_DIM];
        let mut rest = linear as u64;
        for c in cell.iter_mut().take(dim) {
            *c = rest % top;
            rest /= top;
        }
        let mut stack = vec![(cell, 0u32)];
        let mut undecided = false;
        while let Some((cell, level)) = stack.pop() {
            let per_axis = top << level;
            let w = 1.0 / per_axis as f64;
            let mut raw = [0.0; MAX_DIM];
            for i in 0..dim {
                raw[i] = (cell[i] as f64 + 0.5) * w;
            }
            let delta = 0.5 * w * (dim as f64).sqrt();
            let value = index.knn_distance(&TorusPoint::from_raw(raw, dim), k)?;
            if value > t {
                return Ok(Some(false));
            }
            if value + delta <= t {
                continue;
            }
            if level >= CERTIFY_DEPTH {
                undecided = true;
                continue;
            }
            for bits in 0..1u32 << dim {
                let mut child = [0u64; MAX_DIM];
                for i in 0..dim {
                    child[i] = 2 * cell[i] + u64::from((bits >> i) & 1);
                }
                stack.push((child, level + 1));
            }
        }
        Ok(if undecided { None } else { Some(true) })
    });
    let mut all = Some(true);
    for r in results {
        match r? {
            Some(false) => return Ok(Some(false)),
            None => all = None,
            Some(true) => {}
        }
    }
    Ok(all)
}

/// Morse decision: covered at `r` iff there is no index-`d` critical point
/// with value in `(r, 1/4]` and `max d_k <= 1/4`. For `r >= 1/4` only the
/// second condition is checked.
pub fn is_covered_morse(cloud: &PointCloud, k: usize, r: f64) -> Result<CoverageVerdict> {
    check_args(cloud, k, r)?;
    let index = SpatialIndex::with_default_cells(cloud, k)?;
    is_covered_morse_with(&index, k, r)
}

pub fn is_covered_morse_with(index: &SpatialIndex<'_>, k: usize, r: f64) -> Result<CoverageVerdict> {
    let cloud = index.cloud();
    check_args(cloud, k, r)?;
    let d = cloud.dim();
    let window = EnumerationWindow { r_min: r.min(R_CONV), r_max: R_CONV, mu_filter: Some(d) };
    let e = enumerate_with_index(index, k, window)?;
    certify_regime(index, k, &e)?;
    Ok(morse_verdict(&e, r))
}

/// Checks that `max d_k <= 1/4`, so that every vacancy is seen by an
/// enumeration reaching up to the convexity radius.
pub fn certify_regime(index: &SpatialIndex<'_>, k: usize, e: &Enumeration) -> Result<()> {
    if e.sup_lower > R_CONV {
        return Err(Error::OutOfRegime);
    }
    if e.sup_upper > R_CONV + TOL_GEO {
        match certify_max_below(index, k, R_CONV + TOL_GEO)? {
            Some(true) => {}
            _ => return Err(Error::OutOfRegime),
        }
    }
    Ok(())
}

/// Morse verdict at `r` read off an index-`d` enumeration of `(r_min, 1/4]`
/// with `r_min <= r`, once the regime is certified. One enumeration serves
/// every radius above its lower bound.
pub fn morse_verdict(e: &Enumeration, r: f64) -> CoverageVerdict {
    let top = e
        .points
        .iter()
        .filter(|c| c.rho > r && c.mu == c.center.dim())
        .max_by(|a, b| a.rho.total_cmp(&b.rho));
    match top {
        Some(c) => CoverageVerdict {
            covered: Covered::No,
            method: Method::Morse,
            witness: Some(Witness::CriticalPoint(c.clone())),
        },
        None => CoverageVerdict { covered: Covered::Yes, method: Method::Morse, witness: None },
    }
}

/// The implicit node lattice used by the grid oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeGrid {
    pub dim: usize,
    pub per_axis: u64,
}

impl NodeGrid {
    /// Spacing `1/ceil(1/h)`, never coarser than `h`.
    pub fn with_spacing(dim: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::config(format!("grid spacing {h} outside (0, 1]")));
        }
        let per_axis = (1.0 / h).ceil() as u64;
        if (per_axis as f64).powi(dim as i32) > 1.8e19 {
            return Err(Error::config(format!("grid spacing {h} too fine for dimension {dim}")));
        }
        Ok(NodeGrid { dim, per_axis })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    /// Every point of the torus lies within this distance of a node.
    pub fn covering_radius(&self) -> f64 {
        0.5 * self.spacing() * (self.dim as f64).sqrt()
    }

    pub fn node_count(&self) -> u64 {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn coords(&self, linear: u64) -> [u64; MAX_DIM] {
        let mut c = [0u64; MAX_DIM];
        let mut rest = linear;
        for x in c.iter_mut().take(self.dim) {
            *x = rest % self.per_axis;
            rest /= self.per_axis;
        }
        c
    }

    pub fn linear(&self, coords: &[u64; MAX_DIM]) -> u64 {
        (0..self.dim).rev().fold(0, |acc, i| acc * self.per_axis + coords[i])
    }

    pub fn location(&self, linear: u64) -> TorusPoint {
        let c = self.coords(linear);
        let mut raw = [0.0; MAX_DIM];
        for i in 0..self.dim {
            raw[i] = c[i] as f64 * self.spacing();
        }
        TorusPoint::from_raw(raw, self.dim)
    }

    /// Linear ids of every node whose `d_k` value exceeds `floor`, sorted.
    /// Stops early once `limit` nodes are found.
    pub fn nodes_above(&self, index: &SpatialIndex<'_>, k: usize, floor: f64, limit: usize) -> Result<Vec<u64>> {
        let dim = self.dim;
        let cloud = index.cloud();
        let side = default_cell_size(cloud.len() as f64, k, dim);
        let mut block = 1u64;
        while ((2 * block) as f64) * self.spacing() <= side && 2 * block <= self.per_axis {
            block *= 2;
        }
        let blocks = self.per_axis.div_ceil(block);
        let total = blocks.pow(dim as u32) as usize;
        let parts = exec::map_indexed(total, |t| -> Result<Vec<u64>> {
            let mut lo = [0u64; MAX_DIM];
            let mut hi = [0u64; MAX_DIM];
            let mut rest = t as u64;
            for i in 0..dim {
                lo[i] = (rest % blocks) * block;
                hi[i] = (lo[i] + block).min(self.per_axis);
                rest /= blocks;
            }
            let mut found = Vec::new();
            self.descend(index, k, floor, lo, hi, limit, &mut found)?;
            Ok(found)
        });
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
            if out.len() >= limit {
                break;
            }
        }
        out.sort_unstable();
        out.truncate(limit);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        index: &SpatialIndex<'_>,
        k: usize,
        floor: f64,
        lo: [u64; MAX_DIM],
        hi: [u64; MAX_DIM],
        limit: usize,
        found: &mut Vec<u64>,
    ) -> Result<()> {
        if found.len() >= limit {
            return Ok(());
        }
        let h = self.spacing();
        let mut raw = [0.0; MAX_DIM];
        let mut half2 = 0.0;
        for i in 0..self.dim {
            let a = lo[i] as f64 * h;
            let b = (hi[i] - 1) as f64 * h;
            raw[i] = 0.5 * (a + b);
            half2 += (0.5 * (b - a)).powi(2);
        }
        let delta = half2.sqrt();
        let value = index.knn_distance(&TorusPoint::from_raw(raw, self.dim), k)?;
        if value + delta <= floor {
            return Ok(());
        }
        if value - delta > floor {
            self.push_block(&lo, &hi, limit, found)?;
            return Ok(());
        }
        // split along every axis with more than one node
        let mut halves: Vec<([u64; MAX_DIM], [u64; MAX_DIM])> = vec![(lo, hi)];
        for i in 0..self.dim {
            if hi[i] - lo[i] < 2 {
                continue;
            }
            let mid = lo[i] + (hi[i] - lo[i]) / 2;
            halves = halves
                .into_iter()
                .flat_map(|(l, u)| {
                    let mut u1 = u;
                    u1[i] = mid;
                    let mut l2 = l;
                    l2[i] = mid;
                    [(l, u1), (l2, u)]
                })
                .collect();
        }
        for (l, u) in halves {
            self.descend(index, k, floor, l, u, limit, found)?;
        }
        Ok(())
    }

    fn push_block(&self, lo: &[u64; MAX_DIM], hi: &[u64; MAX_DIM], limit: usize, found: &mut Vec<u64>) -> Result<()> {
        let mut c = *lo;
        loop {
            if found.len() >= limit {
                return Ok(());
            }
            if found.len() >= MAX_VACANT_NODES {
                return Err(Error::config("vacant region too large for the requested grid spacing"));
            }
            found.push(self.linear(&c));
            let mut i = 0;
            loop {
                if i == self.dim {
                    return Ok(());
                }
                c[i] += 1;
                if c[i] == hi[i] {
                    c[i] = lo[i];
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }
}

/// Grid decision at spacing at most `h`: yes if every node value is at most
/// `r - s`, no if some node exceeds `r + s` (`s` the covering radius of the
/// lattice), marginal otherwise.
pub fn is_covered_grid(cloud: &PointCloud, k: usize, r: f64, h: f64) -> Result<CoverageVerdict> {
    check_args(cloud, k, r)?;
    let index = SpatialIndex::with_default_cells(cloud, k)?;
    is_covered_grid_with(&index, k, r, h)
}

pub fn is_covered_grid_with(index: &SpatialIndex<'_>, k: usize, r: f64, h: f64) -> Result<CoverageVerdict> {
    check_args(index.cloud(), k, r)?;
    let grid = NodeGrid::with_spacing(index.cloud().dim(), h)?;
    let band = grid.covering_radius();
    let above = grid.nodes_above(index, k, r + band, 1)?;
    if let Some(&node) = above.first() {
        let location = grid.location(node);
        let value = index.knn_distance(&location, k)?;
        return Ok(CoverageVerdict {
            covered: Covered::No,
            method: Method::Grid,
            witness: Some(Witness::GridNode { location, value }),
        });
    }
    let near = grid.nodes_above(index, k, r - band, 1)?;
    let covered = if near.is_empty() { Covered::Yes } else { Covered::Marginal };
    Ok(CoverageVerdict { covered, method: Method::Grid, witness: None })
}

/// Grid decision that resolves the marginal band by local refinement: cells
/// around band nodes are split until `d_k` is certified below `r` or a point
/// above `r` is found. Marginal only if refinement reaches `CERTIFY_DEPTH`.
pub fn is_covered_grid_refined(index: &SpatialIndex<'_>, k: usize, r: f64, h: f64) -> Result<CoverageVerdict> {
    check_args(index.cloud(), k, r)?;
    let plain = is_covered_grid_with(index, k, r, h)?;
    if plain.covered != Covered::Marginal {
        return Ok(plain);
    }
    let grid = NodeGrid::with_spacing(index.cloud().dim(), h)?;
    let dim = grid.dim;
    let band = grid.covering_radius();
    let nodes = grid.nodes_above(index, k, r - band, MAX_VACANT_NODES)?;
    let w = grid.spacing();
    let mut undecided = false;
    for node in nodes {
        // the cell of side w centered on the node
        let base = grid.location(node);
        let mut start = [0.0; MAX_DIM];
        start[..dim].copy_from_slice(base.coords());
        let mut stack = vec![(start, w)];
        while let Some((center, side)) = stack.pop() {
            let y = TorusPoint::from_raw(center, dim);
            let value = index.knn_distance(&y, k)?;
            let delta = 0.5 * side * (dim as f64).sqrt();
            if value > r {
                return Ok(CoverageVerdict {
                    covered: Covered::No,
                    method: Method::Grid,
                    witness: Some(Witness::GridNode { location: y, value }),
                });
            }
            if value + delta <= r {
                continue;
            }
            if side < w / (1u64 << CERTIFY_DEPTH.min(60)) as f64 {
                undecided = true;
                continue;
            }
            for bits in 0..1u32 << dim {
                let mut c = center;
                for i in 0..dim {
                    c[i] += if (bits >> i) & 1 == 1 { 0.25 * side } else { -0.25 * side };
                }
                stack.push((c, 0.5 * side));
            }
        }
    }
    let covered = if undecided { Covered::Marginal } else { Covered::Yes };
    Ok(CoverageVerdict { covered, method: Method::Grid, witness: None })
}

/// One connected component of the vacant lattice nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacancyComponent {
    /// Sorted linear node ids (see [`NodeGrid::coords`]).
    pub nodes: Vec<u64>,
    /// Node count times the cell volume.
    pub area: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacancyReport {
    pub component_count: usize,
    pub nodes_per_axis: u64,
    pub components: Vec<VacancyComponent>,
}

/// Which lattice nodes count as neighbors in the vacancy flood fill.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    /// The `2d` nodes one step along an axis.
    #[default]
    Faces,
    /// All `3^d - 1` nodes of the surrounding block. Keeps narrow corners of a
    /// component attached that the face rule can cut off.
    Full,
}

impl Adjacency {
    /// Offsets modulo `per_axis`.
    fn offsets(self, dim: usize, per_axis: u64) -> Vec<[u64; MAX_DIM]> {
        let back = per_axis - 1;
        let mut out = Vec::new();
        match self {
            Adjacency::Faces => {
                for i in 0..dim {
                    for step in [1, back] {
                        let mut o = [0u64; MAX_DIM];
                        o[i] = step;
                        out.push(o);
                    }
                }
            }
            Adjacency::Full => {
                for code in 0..3usize.pow(dim as u32) {
                    let mut o = [0u64; MAX_DIM];
                    let mut rest = code;
                    for x in o.iter_mut().take(dim) {
                        *x = [0, 1, back][rest % 3];
                        rest /= 3;
                    }
                    if code != 0 {
                        out.push(o);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Connected components of `{node : d_k(node) > r}` under the `2d`-neighbor
/// adjacency with wrap-around.
pub fn vacancy_components(cloud: &PointCloud, k: usize, r: f64, h: f64) -> Result<VacancyReport> {
    check_args(cloud, k, r)?;
    let index = SpatialIndex::with_default_cells(cloud, k)?;
    vacancy_components_with(&index, k, r, h, Adjacency::Faces)
}

pub fn vacancy_components_with(
    index: &SpatialIndex<'_>,
    k: usize,
    r: f64,
    h: f64,
    adjacency: Adjacency,
) -> Result<VacancyReport> {
    check_args(index.cloud(), k, r)?;
    let grid = NodeGrid::with_spacing(index.cloud().dim(), h)?;
    let offsets = adjacency.offsets(grid.dim, grid.per_axis);
    let vacant = grid.nodes_above(index, k, r, MAX_VACANT_NODES)?;
    let cell_volume = grid.spacing().powi(grid.dim as i32);
    let mut label = vec![usize::MAX; vacant.len()];
    let mut components = Vec::new();
    let mut queue = Vec::new();
    for start in 0..vacant.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        label[start] = id;
        queue.clear();
        queue.push(start);
        let mut members = Vec::new();
        while let Some(at) = queue.pop() {
            members.push(vacant[at]);
            let c = grid.coords(vacant[at]);
            for off in &offsets {
                let mut nb = c;
                for i in 0..grid.dim {
                    nb[i] = (nb[i] + off[i]) % grid.per_axis;
                }
                if let Ok(pos) = vacant.binary_search(&grid.linear(&nb)) {
                    if label[pos] == usize::MAX {
                        label[pos] = id;
                        queue.push(pos);
                    }
                }
            }
        }
        members.sort_unstable();
        let area = members.len() as f64 * cell_volume;
        components.push(VacancyComponent { nodes: members, area });
    }
    Ok(VacancyReport { component_count: components.len(), nodes_per_axis: grid.per_axis, components })
}
