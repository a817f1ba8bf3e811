//! Critical points of the k-NN distance function `d_k`.
//!
//! A subset `X` of the sample with `2 <= |X| <= d+1` generates a critical
//! point at its circumcenter `c` exactly when `c` lies in the open simplex of
//! `X` and the open circumball holds between `k-|X|` and `k-1` further sample
//! points. The index is `|X| + I - k`.
//!
//! [`enumerate_critical_points`] localizes centers with an adaptive tree of
//! grid cells. For a cell of half-diagonal `δ` around `y` with `D = d_k(y)`,
//! any center `c` in the cell has `|d_k(c) - D| <= δ`, so its generators lie
//! in the annulus `D-2δ <= |x-y| <= D+2δ` and every point nearer than `D-2δ`
//! is interior. Crowded cells are split; a leaf tries the subsets of its
//! annulus and keeps only centers that fall inside the leaf, so each critical
//! point is produced once. [`enumerate_by_owner`] is the plain
//! smallest-index-owns-the-subset enumeration, kept as a cross-check.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{
    circumradius_estimate, circumsphere, circumsphere_about, dist2, Circumsphere, TorusPoint, MAX_DIM, R_CONV,
    TOL_GEO,
};
use crate::index::{default_cell_size, BallCensus, SpatialIndex};
use crate::sampling::PointCloud;

/// Cells deeper than this are treated as leaves whatever their annulus holds.
const MAX_LEVEL: u32 = 24;
/// Top-level cells handed to one worker at a time.
const CELLS_PER_TASK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub center: TorusPoint,
    pub rho: f64,
    pub mu: usize,
    /// Sorted point ids of the generating subset.
    pub generators: Vec<usize>,
    pub interior_count: usize,
    /// Number of homology changes, `C(|X|-1, mu)`.
    pub delta: u64,
}

impl CriticalPoint {
    /// `(-1)^mu * delta`, this point's contribution to the Euler characteristic.
    pub fn euler_weight(&self) -> i64 {
        let d = self.delta as i64;
        if self.mu.is_multiple_of(2) {
            d
        } else {
            -d
        }
    }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(points: &[CriticalPoint], mut w: W) -> Result<()> {
    for p in points {
        serde_json::to_writer(&mut w, p)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Radius range `(r_min, r_max]` and optional index filter for an enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub mu_filter: Option<usize>,
}

impl EnumerationWindow {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_min < r_max && r_max <= R_CONV) {
            return Err(Error::config(format!(
                "enumeration window ({r_min}, {r_max}] must satisfy 0 <= r_min < r_max <= 1/4"
            )));
        }
        Ok(EnumerationWindow { r_min, r_max, mu_filter: None })
    }

    /// Every critical value up to the convexity radius.
    pub fn full() -> Self {
        EnumerationWindow { r_min: 0.0, r_max: R_CONV, mu_filter: None }
    }

    pub fn with_mu(mut self, mu: usize) -> Self {
        self.mu_filter = Some(mu);
        self
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho > self.r_min && rho <= self.r_max
    }

    /// Subset sizes that can generate a point of index `mu` (all sizes
    /// without a filter).
    fn sizes(&self, d: usize, k: usize) -> (usize, usize) {
        match self.mu_filter {
            Some(mu) => ((mu + 1).max(2), (d + 1).min(mu + k)),
            None => (2, d + 1),
        }
    }
}

/// Output of an enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub window: EnumerationWindow,
    pub k: usize,
    /// Sorted by generator ids.
    pub points: Vec<CriticalPoint>,
    /// Certified upper bound on `max d_k` over the torus.
    pub sup_upper: f64,
    /// A value of `d_k` actually attained (a lower bound on the maximum).
    pub sup_lower: f64,
    /// Subsets whose circumsphere was solved.
    pub subsets_tested: u64,
}

impl Enumeration {
    pub fn count_by_index(&self, mu: usize, r: f64) -> Result<usize> {
        count_by_index(self, mu, r)
    }

    pub fn of_index(&self, mu: usize) -> impl Iterator<Item = &CriticalPoint> + '_ {
        self.points.iter().filter(move |c| c.mu == mu)
    }
}

/// Number of index-`mu` critical points with `rho >= r`.
pub fn count_by_index(crits: &Enumeration, mu: usize, r: f64) -> Result<usize> {
    if r < crits.window.r_min {
        return Err(Error::BelowWindow { r, r_min: crits.window.r_min });
    }
    Ok(crits.points.iter().filter(|c| c.mu == mu && c.rho >= r).count())
}

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Circumsphere of a candidate subset, in the chart around `anchor` when one
/// is given. Ill-conditioned subsets whose sphere is clearly larger than
/// `reach` cannot matter and are dropped; otherwise the degeneracy is reported.
fn candidate_sphere(
    anchor: Option<&TorusPoint>,
    pts: &[TorusPoint],
    reach: f64,
) -> Result<Option<Circumsphere>> {
    let solved = match anchor {
        Some(a) => circumsphere_about(a, pts),
        None => circumsphere(pts),
    };
    match solved {
        Ok(s) => Ok(Some(s)),
        Err(Error::DiameterTooLarge { .. }) | Err(Error::NotLiftable) => Ok(None),
        Err(e @ Error::Degenerate { .. }) => match circumradius_estimate(anchor.unwrap_or(&pts[0]), pts) {
            Some(r) if r > reach + 1e-6 => Ok(None),
            None if min_pair_distance(pts) > TOL_GEO => Ok(None),
            _ => Err(e),
        },
        Err(e) => Err(e),
    }
}

fn min_pair_distance(pts: &[TorusPoint]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min(dist2(pts[i].raw(), pts[j].raw(), pts[i].dim()).sqrt());
        }
    }
    best
}

/// Interior count from a census, if the Theorem-1 outcome is unambiguous.
fn decide_interior(m: usize, census: &BallCensus, k: usize) -> Result<Option<usize>> {
    let ok = |i: usize| i + m >= k && i < k;
    let lo = census.strict;
    let hi = census.strict + census.marginal;
    if census.marginal == 0 {
        return Ok(ok(lo).then_some(lo));
    }
    if lo >= k || hi + m < k {
        return Ok(None);
    }
    Err(Error::Marginal { point: census.first_marginal.unwrap_or(usize::MAX) })
}

fn make_point(sphere: &Circumsphere, ids: &[usize], interior: usize, k: usize) -> CriticalPoint {
    let m = ids.len();
    let mu = m + interior - k;
    CriticalPoint {
        center: sphere.center,
        rho: sphere.radius,
        mu,
        generators: ids.to_vec(),
        interior_count: interior,
        delta: binom(m - 1, mu),
    }
}

/// Applies the critical-point characterization to the subset `ids`.
pub fn classify_subset(ids: &[usize], index: &SpatialIndex<'_>, k: usize) -> Result<Option<CriticalPoint>> {
    let cloud = index.cloud();
    let d = cloud.dim();
    if ids.len() < 2 || ids.len() > d + 1 {
        return Err(Error::config(format!("subset size {} outside 2..={}", ids.len(), d + 1)));
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let pts: Vec<TorusPoint> = sorted.iter().map(|&i| cloud.points()[i]).collect();
    let Some(sphere) = candidate_sphere(None, &pts, R_CONV)? else {
        return Ok(None);
    };
    if sphere.radius > R_CONV || !sphere.center_in_open_simplex() {
        return Ok(None);
    }
    let census = index.ball_census(&sphere.center, sphere.radius, &sorted)?;
    Ok(decide_interior(sorted.len(), &census, k)?.map(|i| make_point(&sphere, &sorted, i, k)))
}

/// Visits every `m`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, m: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if m > n || m == 0 {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        f(&idx)?;
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] != i + n - m {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    id: usize,
    pos: TorusPoint,
}

struct Node {
    cell: [u64; MAX_DIM],
    level: u32,
    /// Points certainly inside every relevant ball of this cell.
    inner: usize,
    /// Points that may sit on such a ball, sorted by id.
    cands: Vec<Candidate>,
    knn: f64,
}

#[derive(Default)]
struct Partial {
    points: Vec<CriticalPoint>,
    sup_upper: f64,
    sup_lower: f64,
    subsets: u64,
}

struct Tree<'a> {
    dim: usize,
    k: usize,
    window: EnumerationWindow,
    top: u64,
    split_above: usize,
    index: &'a SpatialIndex<'a>,
}

impl Tree<'_> {
    fn width(&self, level: u32) -> f64 {
        1.0 / (self.top as f64 * (1u64 << level) as f64)
    }

    fn half_diagonal(&self, level: u32) -> f64 {
        0.5 * self.width(level) * (self.dim as f64).sqrt()
    }

    fn center(&self, cell: &[u64; MAX_DIM], level: u32) -> TorusPoint {
        let w = self.width(level);
        let mut raw = [0.0; MAX_DIM];
        for i in 0..self.dim {
            raw[i] = (cell[i] as f64 + 0.5) * w;
        }
        TorusPoint::from_raw(raw, self.dim)
    }

    fn top_node(&self, linear: u64) -> Result<Node> {
        let mut cell = [0u64; MAX_DIM];
        let mut rest = linear;
        for c in cell.iter_mut().take(self.dim) {
            *c = rest % self.top;
            rest /= self.top;
        }
        let y = self.center(&cell, 0);
        let delta = self.half_diagonal(0);
        let knn = self.index.knn_distance(&y, self.k)?;
        let mut inner = 0;
        let mut cands = Vec::new();
        if knn + delta + TOL_GEO > self.window.r_min && knn - delta - TOL_GEO <= self.window.r_max {
            let lo = knn - 2.0 * delta - TOL_GEO;
            let points = self.index.cloud().points();
            self.index.for_each_within(&y, knn + 2.0 * delta + TOL_GEO, |id, dist| {
                if dist < lo {
                    inner += 1;
                } else {
                    cands.push(Candidate { id, pos: points[id] });
                }
            });
            cands.sort_unstable_by_key(|c| c.id);
        }
        Ok(Node { cell, level: 0, inner, cands, knn })
    }

    fn run(&self, node: Node, out: &mut Partial) -> Result<()> {
        let mut stack = vec![node];
        while let Some(node) = stack.pop() {
            let delta = self.half_diagonal(node.level);
            out.sup_upper = out.sup_upper.max(node.knn + delta);
            out.sup_lower = out.sup_lower.max(node.knn);
            if node.knn + delta + TOL_GEO <= self.window.r_min
                || node.knn - delta - TOL_GEO > self.window.r_max
            {
                continue;
            }
            if node.cands.len() > self.split_above && node.level < MAX_LEVEL {
                self.split(&node, &mut stack);
            } else {
                self.leaf(&node, out)?;
            }
        }
        Ok(())
    }

    fn split(&self, node: &Node, stack: &mut Vec<Node>) {
        let level = node.level + 1;
        let delta = self.half_diagonal(level);
        let rank = self.k - node.inner;
        let mut dists = vec![0.0; node.cands.len()];
        let mut scratch = Vec::with_capacity(node.cands.len());
        for bits in 0..1u32 << self.dim {
            let mut cell = [0u64; MAX_DIM];
            for i in 0..self.dim {
                cell[i] = 2 * node.cell[i] + u64::from((bits >> i) & 1);
            }
            let y = self.center(&cell, level);
            for (d, c) in dists.iter_mut().zip(&node.cands) {
                *d = dist2(y.raw(), c.pos.raw(), self.dim).sqrt();
            }
            scratch.clear();
            scratch.extend_from_slice(&dists);
            let (_, &mut knn, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
            let lo = knn - 2.0 * delta - TOL_GEO;
            let hi = knn + 2.0 * delta + TOL_GEO;
            let mut inner = node.inner;
            let mut cands = Vec::new();
            for (c, &d) in node.cands.iter().zip(&dists) {
                if d < lo {
                    inner += 1;
                } else if d <= hi {
                    cands.push(*c);
                }
            }
            stack.push(Node { cell, level, inner, cands, knn });
        }
    }

    fn owns(&self, node: &Node, c: &TorusPoint) -> bool {
        let scale = self.top as f64 * (1u64 << node.level) as f64;
        let side = self.top << node.level;
        (0..self.dim).all(|i| ((c.coords()[i] * scale) as u64).min(side - 1) == node.cell[i])
    }

    fn leaf(&self, node: &Node, out: &mut Partial) -> Result<()> {
        let delta = self.half_diagonal(node.level);
        let reach = (node.knn + delta).min(self.window.r_max);
        let anchor = self.center(&node.cell, node.level);
        let (m_lo, m_hi) = self.window.sizes(self.dim, self.k);
        let mut pts = [TorusPoint::from_raw([0.0; MAX_DIM], self.dim); MAX_DIM + 1];
        let mut ids = [0usize; MAX_DIM + 1];
        for m in m_lo..=m_hi {
            for_each_combination(node.cands.len(), m, |sel| {
                for (j, &s) in sel.iter().enumerate() {
                    pts[j] = node.cands[s].pos;
                    ids[j] = node.cands[s].id;
                }
                out.subsets += 1;
                let Some(sphere) = candidate_sphere(Some(&anchor), &pts[..m], reach)? else {
                    return Ok(());
                };
                if !self.window.contains(sphere.radius)
                    || !self.owns(node, &sphere.center)
                    || !sphere.center_in_open_simplex()
                {
                    return Ok(());
                }
                let census = self.local_census(node, &sphere, &ids[..m]);
                if let Some(i) = decide_interior(m, &census, self.k)? {
                    let cp = make_point(&sphere, &ids[..m], i, self.k);
                    if self.window.mu_filter.is_none_or(|mu| mu == cp.mu) {
                        out.points.push(cp);
                    }
                }
                Ok(())
            })?;
        }
        Ok(())
    }

    fn local_census(&self, node: &Node, sphere: &Circumsphere, ids: &[usize]) -> BallCensus {
        let mut census = BallCensus { strict: node.inner, marginal: 0, first_marginal: None };
        let rho = sphere.radius;
        for c in &node.cands {
            if ids.contains(&c.id) {
                continue;
            }
            let d = dist2(sphere.center.raw(), c.pos.raw(), self.dim).sqrt();
            if d < rho - TOL_GEO {
                census.strict += 1;
            } else if d <= rho + TOL_GEO {
                census.marginal += 1;
                census.first_marginal.get_or_insert(c.id);
            }
        }
        census
    }
}

fn check_k(cloud: &PointCloud, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if cloud.len() < k {
        return Err(Error::InsufficientPoints { needed: k, available: cloud.len() });
    }
    Ok(())
}

fn finish(window: EnumerationWindow, k: usize, parts: Vec<Result<Partial>>) -> Result<Enumeration> {
    let mut all = Enumeration {
        window,
        k,
        points: Vec::new(),
        sup_upper: 0.0,
        sup_lower: 0.0,
        subsets_tested: 0,
    };
    for part in parts {
        let part = part.map_err(|e| if e.is_degenerate() { Error::DegenerateTrial(Box::new(e)) } else { e })?;
        all.points.extend(part.points);
        all.sup_upper = all.sup_upper.max(part.sup_upper);
        all.sup_lower = all.sup_lower.max(part.sup_lower);
        all.subsets_tested += part.subsets;
    }
    all.points.sort_by(|a, b| a.generators.cmp(&b.generators));
    Ok(all)
}

/// All critical points of `d_k` with value in the window, via the cell tree.
pub fn enumerate_with_index(index: &SpatialIndex<'_>, k: usize, window: EnumerationWindow) -> Result<Enumeration> {
    let cloud = index.cloud();
    check_k(cloud, k)?;
    let dim = cloud.dim();
    let side = default_cell_size(cloud.len() as f64, k, dim);
    let tree = Tree {
        dim,
        k,
        window,
        top: ((1.0 / side).ceil() as u64).max(4),
        split_above: dim + 3,
        index,
    };
    let total = tree.top.pow(dim as u32) as usize;
    let tasks = total.div_ceil(CELLS_PER_TASK);
    let parts = exec::map_indexed(tasks, |t| {
        let mut out = Partial::default();
        for linear in t * CELLS_PER_TASK..((t + 1) * CELLS_PER_TASK).min(total) {
            tree.run(tree.top_node(linear as u64)?, &mut out)?;
        }
        Ok(out)
    });
    finish(window, k, parts)
}

/// Builds a default index and enumerates.
pub fn enumerate_critical_points(cloud: &PointCloud, k: usize, window: EnumerationWindow) -> Result<Enumeration> {
    check_k(cloud, k)?;
    let index = SpatialIndex::with_default_cells(cloud, k)?;
    enumerate_with_index(&index, k, window)
}

/// Upper bound on `max d_k` from a coarse cell cover: `max(d_k(y) + δ)`.
fn coarse_sup_bound(index: &SpatialIndex<'_>, k: usize) -> Result<f64> {
    let dim = index.cloud().dim();
    let side = default_cell_size(index.cloud().len() as f64, k, dim);
    let top = ((1.0 / side).ceil() as u64).max(4);
    let w = 1.0 / top as f64;
    let delta = 0.5 * w * (dim as f64).sqrt();
    let total = top.pow(dim as u32) as usize;
    let vals = exec::map_indexed(total, |linear| {
        let mut raw = [0.0; MAX_DIM];
        let mut rest = linear as u64;
        for r in raw.iter_mut().take(dim) {
            *r = ((rest % top) as f64 + 0.5) * w;
            rest /= top;
        }
        index.knn_distance(&TorusPoint::from_raw(raw, dim), k)
    });
    let mut best: f64 = 0.0;
    for v in vals {
        best = best.max(v? + delta);
    }
    Ok(best)
}

/// Reference enumeration: each point owns the subsets in which it has the
/// smallest id, drawn from its neighbors within twice the largest possible
/// critical value. Quadratic in the neighborhood size; intended for small
/// clouds and cross-checks.
pub fn enumerate_by_owner(index: &SpatialIndex<'_>, k: usize, window: EnumerationWindow) -> Result<Enumeration> {
    let cloud = index.cloud();
    check_k(cloud, k)?;
    let dim = cloud.dim();
    let sup = coarse_sup_bound(index, k)?;
    let reach = window.r_max.min(sup);
    let (m_lo, m_hi) = window.sizes(dim, k);
    let points = cloud.points();
    let parts = exec::map_indexed(cloud.len(), |p| {
        let mut out = Partial { sup_upper: sup, ..Partial::default() };
        let mut nbrs = Vec::new();
        index.for_each_within(&points[p], 2.0 * reach + TOL_GEO, |q, _| {
            if q > p {
                nbrs.push(q);
            }
        });
        nbrs.sort_unstable();
        let mut ids = [p; MAX_DIM + 1];
        let mut pts = [points[p]; MAX_DIM + 1];
        for m in m_lo..=m_hi {
            for_each_combination(nbrs.len(), m - 1, |sel| {
                for (j, &s) in sel.iter().enumerate() {
                    ids[j + 1] = nbrs[s];
                    pts[j + 1] = points[nbrs[s]];
                }
                for a in 1..m {
                    for b in a + 1..m {
                        if dist2(pts[a].raw(), pts[b].raw(), dim) > (2.0 * reach + TOL_GEO).powi(2) {
                            return Ok(());
                        }
                    }
                }
                out.subsets += 1;
                let Some(sphere) = candidate_sphere(None, &pts[..m], reach)? else {
                    return Ok(());
                };
                if !window.contains(sphere.radius) || !sphere.center_in_open_simplex() {
                    return Ok(());
                }
                let census = index.ball_census(&sphere.center, sphere.radius, &ids[..m])?;
                if let Some(i) = decide_interior(m, &census, k)? {
                    let cp = make_point(&sphere, &ids[..m], i, k);
                    if window.mu_filter.is_none_or(|mu| mu == cp.mu) {
                        out.points.push(cp);
                    }
                }
                Ok(())
            })?;
        }
        Ok(out)
    });
    let mut e = finish(window, k, parts)?;
    e.sup_lower = 0.0;
    Ok(e)
}
