//! Flat-torus geometry kernel.
//!
//! Points live in `[0,1)^d` with opposite faces identified. Everything that
//! needs Euclidean structure (circumspheres, barycentric coordinates, simplex
//! volumes) works in a lifted chart: the configuration is unrolled around its
//! first point using minimal displacements, which is only meaningful while
//! the configuration has diameter below 1/2.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;
/// Absolute geometric tolerance on the unit torus.
pub const TOL_GEO: f64 = 1e-9;
/// Strictness margin for the open-simplex test.
pub const TOL_BARY: f64 = 1e-9;
/// Configurations whose Gram system is worse conditioned than this are rejected.
pub const COND_MAX: f64 = 1e12;
/// Radius of convexity of the flat torus.
pub const R_CONV: f64 = 0.25;

/// Wrap a real coordinate into `[0,1)`.
#[inline]
pub fn canonicalize(x: f64) -> f64 {
    let y = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Minimal representative of a coordinate difference, in `(-1/2, 1/2]`.
#[inline]
pub(crate) fn wrap_delta(v: f64) -> f64 {
    if v > 0.5 {
        v - 1.0
    } else if v <= -0.5 {
        v + 1.0
    } else {
        v
    }
}

/// Squared toroidal distance between canonical coordinate arrays.
#[inline]
pub(crate) fn dist2(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        let mut t = (a[i] - b[i]).abs();
        if t > 0.5 {
            t = 1.0 - t;
        }
        s += t * t;
    }
    s
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        _ => {
            let dh = d as f64 / 2.0;
            PI.powf(dh) / statrs::function::gamma::gamma(dh + 1.0)
        }
    }
}

/// A point of the flat torus `T^d = R^d / Z^d`.
#[derive(Clone, Copy, PartialEq)]
pub struct TorusPoint {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl TorusPoint {
    /// Builds a point from arbitrary real coordinates, wrapping them into `[0,1)`.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite coordinate".into()));
        }
        let mut raw = [0.0; MAX_DIM];
        for (r, c) in raw.iter_mut().zip(coords) {
            *r = canonicalize(*c);
        }
        Ok(TorusPoint { coords: raw, dim: dim as u8 })
    }

    /// Caller guarantees `dim` is in range; coordinates are wrapped.
    #[inline]
    pub(crate) fn from_raw(raw: [f64; MAX_DIM], dim: usize) -> Self {
        let mut coords = [0.0; MAX_DIM];
        for i in 0..dim {
            coords[i] = canonicalize(raw[i]);
        }
        TorusPoint { coords, dim: dim as u8 }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub(crate) fn raw(&self) -> &[f64; MAX_DIM] {
        &self.coords
    }

    /// `canonicalize(self + v)`.
    pub fn translated(&self, v: &[f64]) -> Self {
        let mut raw = self.coords;
        for (r, dv) in raw.iter_mut().zip(v).take(self.dim()) {
            *r += dv;
        }
        TorusPoint::from_raw(raw, self.dim())
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for TorusPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        TorusPoint::new(&v).map_err(serde::de::Error::custom)
    }
}

/// A vector of R^d (a displacement or a lifted position).
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Offset {
    v: [f64; MAX_DIM],
    dim: u8,
}

impl Offset {
    pub fn zero(dim: usize) -> Self {
        Offset { v: [0.0; MAX_DIM], dim: dim as u8 }
    }

    pub(crate) fn from_raw(v: [f64; MAX_DIM], dim: usize) -> Self {
        Offset { v, dim: dim as u8 }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.dim as usize]
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for Offset {
    fn as_ref(&self) -> &[f64] {
        self.as_slice()
    }
}

fn check_dims(x: &TorusPoint, y: &TorusPoint) -> Result<()> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    Ok(())
}

/// Toroidal metric `min over integer shifts of |x - y + shift|`.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    check_dims(x, y)?;
    Ok(dist2(&x.coords, &y.coords, x.dim()).sqrt())
}

/// Minimal representative of `y - x`. Each coordinate lies in `(-1/2, 1/2]`;
/// an exact half-period difference resolves to `+1/2`.
pub fn displacement(x: &TorusPoint, y: &TorusPoint) -> Result<Offset> {
    check_dims(x, y)?;
    let mut v = [0.0; MAX_DIM];
    for i in 0..x.dim() {
        v[i] = wrap_delta(y.coords[i] - x.coords[i]);
    }
    Ok(Offset::from_raw(v, x.dim()))
}

/// A configuration unrolled into R^d around its first point.
#[derive(Clone, Debug)]
pub struct LiftedConfig {
    pub base: TorusPoint,
    pub offsets: Vec<Offset>,
    pub diameter: f64,
}

/// Lift a configuration around `points[0]`. Fails if any pair is at distance
/// `>= 1/2`, or if the minimal displacements from the base do not reproduce the
/// toroidal pairwise distances (the configuration winds around the torus).
pub fn lift(points: &[TorusPoint]) -> Result<LiftedConfig> {
    let base = *points.first().ok_or_else(|| Error::config("cannot lift an empty configuration"))?;
    let dim = base.dim();
    let mut offsets = Vec::with_capacity(points.len());
    for p in points {
        offsets.push(displacement(&base, p)?);
    }
    let mut raw: Vec<[f64; MAX_DIM]> = offsets.iter().map(|o| o.v).collect();
    let diameter = check_lift(points, &mut raw, dim)?;
    Ok(LiftedConfig { base, offsets, diameter })
}

/// Validates lifted offsets against the torus metric; returns the diameter.
fn check_lift(points: &[TorusPoint], off: &mut [[f64; MAX_DIM]], dim: usize) -> Result<f64> {
    let mut diam2: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let t2 = dist2(&points[i].coords, &points[j].coords, dim);
            if t2 >= 0.25 {
                return Err(Error::DiameterTooLarge { diameter: t2.sqrt() });
            }
            for c in 0..dim {
                if (off[i][c] - off[j][c]).abs() > 0.5 {
                    return Err(Error::NotLiftable);
                }
            }
            diam2 = diam2.max(t2);
        }
    }
    Ok(diam2.sqrt())
}

/// Lift without allocation into `out`; returns the diameter.
#[inline]
fn lift_into(points: &[TorusPoint], out: &mut [[f64; MAX_DIM]]) -> Result<f64> {
    let base = &points[0];
    let dim = base.dim();
    for (o, p) in out.iter_mut().zip(points) {
        if p.dim != base.dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        for c in 0..dim {
            o[c] = wrap_delta(p.coords[c] - base.coords[c]);
        }
    }
    check_lift(points, &mut out[..points.len()], dim)
}

/// Circumsphere of `m` points, `2 <= m <= d + 1`: the unique `(m-2)`-sphere
/// through them whose center lies in their affine hull.
#[derive(Clone, Copy, Debug)]
pub struct Circumsphere {
    pub center: TorusPoint,
    /// Center in the chart lifted around the first generator (not wrapped).
    pub center_lifted: Offset,
    pub radius: f64,
    /// 1-norm condition estimate of the Gram system that defines the center.
    pub cond: f64,
    bary: [f64; MAX_DIM + 1],
    m: u8,
}

impl Circumsphere {
    /// Barycentric coordinates of the center with respect to the generators.
    pub fn barycentric(&self) -> &[f64] {
        &self.bary[..self.m as usize]
    }

    /// Whether the center lies in the open simplex spanned by the generators.
    pub fn center_in_open_simplex(&self) -> bool {
        self.barycentric().iter().all(|&b| b > TOL_BARY)
    }
}

/// Orthonormal frame of the edges `off[1..m]` (vertex 0 at the origin):
/// `e_i = sum_j lower[i][j] q_j` with `lower` lower triangular. Working in
/// this frame avoids squaring the conditioning as the normal equations do.
struct EdgeFrame {
    q: [[f64; MAX_DIM]; MAX_DIM],
    lower: [[f64; MAX_DIM]; MAX_DIM],
    n: usize,
    cond: f64,
}

impl EdgeFrame {
    fn new(off: &[[f64; MAX_DIM]], m: usize, dim: usize) -> Result<Self> {
        let n = m - 1;
        let mut gram = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in 0..n {
                gram[i][j] = (0..dim).map(|c| off[i + 1][c] * off[j + 1][c]).sum();
            }
        }
        let (inv, cond) = linalg::invert_with_cond(&gram, n);
        if inv.is_none() || cond > COND_MAX {
            return Err(Error::Degenerate { cond });
        }
        let mut q = [[0.0; MAX_DIM]; MAX_DIM];
        let mut lower = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            let mut v = off[i + 1];
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for j in 0..i {
                    let p: f64 = (0..dim).map(|c| v[c] * q[j][c]).sum();
                    lower[i][j] += p;
                    for c in 0..dim {
                        v[c] -= p * q[j][c];
                    }
                }
            }
            let norm = (0..dim).map(|c| v[c] * v[c]).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Degenerate { cond: f64::INFINITY });
            }
            lower[i][i] = norm;
            for c in 0..dim {
                q[i][c] = v[c] / norm;
            }
        }
        Ok(EdgeFrame { q, lower, n, cond })
    }

    /// Solves `lower * z = b`.
    fn forward(&self, b: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut z = [0.0; MAX_DIM];
        for i in 0..self.n {
            let s: f64 = (0..i).map(|j| self.lower[i][j] * z[j]).sum();
            z[i] = (b[i] - s) / self.lower[i][i];
        }
        z
    }

    /// Weights `a` of the vertices `1..m` for the hull point `sum_j z_j q_j`,
    /// i.e. solves `lower^T a = z`.
    fn weights(&self, z: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut a = [0.0; MAX_DIM];
        for i in (0..self.n).rev() {
            let s: f64 = (i + 1..self.n).map(|j| self.lower[j][i] * a[j]).sum();
            a[i] = (z[i] - s) / self.lower[i][i];
        }
        a
    }

    /// Coordinates of `v` along the frame.
    fn project(&self, v: &[f64; MAX_DIM], dim: usize) -> [f64; MAX_DIM] {
        let mut z = [0.0; MAX_DIM];
        for j in 0..self.n {
            z[j] = (0..dim).map(|c| v[c] * self.q[j][c]).sum();
        }
        z
    }
}

/// Circumsphere of `points` in the lifted chart around `points[0]`.
pub fn circumsphere(points: &[TorusPoint]) -> Result<Circumsphere> {
    let (m, dim) = check_arity(points)?;
    let mut off = [[0.0; MAX_DIM]; MAX_DIM + 2];
    lift_into(points, &mut off)?;
    solve_circumsphere(&off, m, dim, points[0].coords)
}

/// Circumsphere in the chart centered at `anchor`: each point is replaced by
/// `anchor + displacement(anchor, p)`. Unlike [`circumsphere`] this resolves
/// configurations containing a half-period pair, choosing the sphere whose
/// center is near `anchor`. Only meaningful while every point is within 1/2
/// of `anchor` and the resulting radius is at most 1/4.
pub fn circumsphere_about(anchor: &TorusPoint, points: &[TorusPoint]) -> Result<Circumsphere> {
    let (m, dim) = check_arity(points)?;
    let mut abs = [[0.0; MAX_DIM]; MAX_DIM + 1];
    for (a, p) in abs.iter_mut().zip(points) {
        if p.dim != anchor.dim {
            return Err(Error::DimensionMismatch { expected: anchor.dim(), found: p.dim() });
        }
        for c in 0..dim {
            a[c] = anchor.coords[c] + wrap_delta(p.coords[c] - anchor.coords[c]);
        }
    }
    let mut off = [[0.0; MAX_DIM]; MAX_DIM + 2];
    for i in 0..m {
        for c in 0..dim {
            off[i][c] = abs[i][c] - abs[0][c];
        }
    }
    solve_circumsphere(&off, m, dim, abs[0])
}

fn check_arity(points: &[TorusPoint]) -> Result<(usize, usize)> {
    let m = points.len();
    let dim = points.first().map(|p| p.dim()).unwrap_or(0);
    if m < 2 || m > dim + 1 {
        return Err(Error::config(format!(
            "circumsphere needs 2..=d+1 points, got {m} in dimension {dim}"
        )));
    }
    Ok((m, dim))
}

/// `off[0..m]` are vertices relative to vertex 0, which sits at `origin`.
fn solve_circumsphere(
    off: &[[f64; MAX_DIM]],
    m: usize,
    dim: usize,
    origin: [f64; MAX_DIM],
) -> Result<Circumsphere> {
    // |c - v_i|^2 = |c|^2  <=>  v_i . c = |v_i|^2 / 2, with c in the edge span
    let frame = EdgeFrame::new(off, m, dim)?;
    let cond = frame.cond;
    let mut rhs = [0.0; MAX_DIM];
    for i in 0..m - 1 {
        rhs[i] = 0.5 * (0..dim).map(|c| off[i + 1][c] * off[i + 1][c]).sum::<f64>();
    }
    let z = frame.forward(&rhs);
    let alpha = frame.weights(&z);
    let mut center = [0.0; MAX_DIM];
    for j in 0..m - 1 {
        for c in 0..dim {
            center[c] += z[j] * frame.q[j][c];
        }
    }
    let radius = (0..dim).map(|c| center[c] * center[c]).sum::<f64>().sqrt();
    for v in off.iter().take(m) {
        let r: f64 = (0..dim).map(|c| (center[c] - v[c]).powi(2)).sum::<f64>().sqrt();
        if (r - radius).abs() > TOL_GEO {
            return Err(Error::Degenerate { cond });
        }
    }

    let mut bary = [0.0; MAX_DIM + 1];
    bary[0] = 1.0 - alpha[..m - 1].iter().sum::<f64>();
    bary[1..m].copy_from_slice(&alpha[..m - 1]);

    let mut lifted = [0.0; MAX_DIM];
    for c in 0..dim {
        lifted[c] = origin[c] + center[c];
    }
    Ok(Circumsphere {
        center: TorusPoint::from_raw(lifted, dim),
        center_lifted: Offset::from_raw(lifted, dim),
        radius,
        cond,
        bary,
        m: m as u8,
    })
}

/// Circumradius computed without the conditioning guard, in the chart around
/// `anchor`, for deciding whether a rejected configuration could matter at
/// all. `None` when the configuration is singular.
pub(crate) fn circumradius_estimate(anchor: &TorusPoint, points: &[TorusPoint]) -> Option<f64> {
    let m = points.len();
    let dim = anchor.dim();
    if m < 2 || m > dim + 1 {
        return None;
    }
    let mut off = [[0.0; MAX_DIM]; MAX_DIM + 1];
    for i in 1..m {
        for c in 0..dim {
            off[i][c] = wrap_delta(points[i].coords[c] - anchor.coords[c])
                - wrap_delta(points[0].coords[c] - anchor.coords[c]);
        }
    }
    let q = m - 1;
    let mut gram = [[0.0; MAX_DIM]; MAX_DIM];
    let mut rhs = [0.0; MAX_DIM];
    for i in 0..q {
        for j in 0..q {
            gram[i][j] = (0..dim).map(|c| off[i + 1][c] * off[j + 1][c]).sum();
        }
        rhs[i] = 0.5 * gram[i][i];
    }
    let alpha = linalg::mat_vec(&linalg::invert(&gram, q)?, &rhs, q);
    let mut center = [0.0; MAX_DIM];
    for j in 0..q {
        for c in 0..dim {
            center[c] += alpha[j] * off[j + 1][c];
        }
    }
    let r = (0..dim).map(|c| center[c] * center[c]).sum::<f64>().sqrt();
    r.is_finite().then_some(r)
}

/// Whether `c` lies in the open simplex spanned by `x` (within `TOL_BARY`).
/// `c` is assumed to lie in the affine hull of `x`; the weights are the
/// least-squares barycentric coordinates otherwise.
pub fn in_open_simplex(x: &[TorusPoint], c: &TorusPoint) -> Result<bool> {
    let m = x.len();
    if !(2..=MAX_DIM + 1).contains(&m) {
        return Err(Error::config("open-simplex test needs 2..=d+1 vertices"));
    }
    let dim = x[0].dim();
    let mut pts = [x[0]; MAX_DIM + 2];
    pts[..m].copy_from_slice(x);
    pts[m] = *c;
    let mut off = [[0.0; MAX_DIM]; MAX_DIM + 2];
    lift_into(&pts[..m + 1], &mut off)?;
    let target = off[m];
    let frame = EdgeFrame::new(&off, m, dim)?;
    let alpha = frame.weights(&frame.project(&target, dim));
    let first = 1.0 - alpha[..m - 1].iter().sum::<f64>();
    Ok(first > TOL_BARY && alpha[..m - 1].iter().all(|&a| a > TOL_BARY))
}

/// `(m-1)`-dimensional volume of the simplex with the given vertices, by the
/// Gram determinant. Degenerate simplices give 0.
pub fn simplex_volume<V: AsRef<[f64]>>(vertices: &[V]) -> f64 {
    let m = vertices.len();
    if m < 2 {
        return 0.0;
    }
    let o = vertices[0].as_ref();
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.as_ref().iter().zip(o).map(|(a, b)| a - b).collect())
        .collect();
    let gram: Vec<Vec<f64>> = edges
        .iter()
        .map(|a| edges.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let det = linalg::determinant(gram).max(0.0);
    let fact: f64 = (1..m).map(|i| i as f64).product();
    det.sqrt() / fact
}

/// Centroid of a liftable configuration, wrapped back onto the torus.
pub fn centroid(points: &[TorusPoint]) -> Result<TorusPoint> {
    let lifted = lift(points)?;
    let dim = lifted.base.dim();
    let mut mean = [0.0; MAX_DIM];
    for o in &lifted.offsets {
        for c in 0..dim {
            mean[c] += o.v[c] / points.len() as f64;
        }
    }
    Ok(lifted.base.translated(&mean[..dim]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c).unwrap()
    }

    /// Brute force over all shifts in {-1,0,1}^d.
    fn brute_distance(x: &[f64], y: &[f64]) -> f64 {
        let d = x.len();
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut s = 0.0;
            for i in 0..d {
                let shift = (c % 3) as f64 - 1.0;
                c /= 3;
                s += (x[i] - y[i] + shift).powi(2);
            }
            best = best.min(s.sqrt());
        }
        best
    }

    #[test]
    fn distance_examples() {
        assert!((torus_distance(&p(&[0.1]), &p(&[0.9])).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance(&p(&[0.3, 0.3]), &p(&[0.3, 0.3])).unwrap(), 0.0);
        let expect = brute_distance(&[0.05, 0.05], &[0.95, 0.95]);
        assert!((expect - 0.141421356237).abs() < 1e-9);
        let got = torus_distance(&p(&[0.05, 0.05]), &p(&[0.95, 0.95])).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_dimension_mismatch() {
        assert!(matches!(
            torus_distance(&p(&[0.1]), &p(&[0.1, 0.2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn displacement_examples() {
        let v = displacement(&p(&[0.9]), &p(&[0.1])).unwrap();
        assert!((v.as_slice()[0] - 0.2).abs() < 1e-15);
        let v = displacement(&p(&[0.2, 0.2]), &p(&[0.5, 0.2])).unwrap();
        assert!((v.as_slice()[0] - 0.3).abs() < 1e-15 && v.as_slice()[1] == 0.0);
        let v = displacement(&p(&[0.1, 0.9]), &p(&[0.9, 0.1])).unwrap();
        assert!((v.as_slice()[0] + 0.2).abs() < 1e-15);
        assert!((v.as_slice()[1] - 0.2).abs() < 1e-15);
        // half-period tie resolves toward +1/2
        let v = displacement(&p(&[0.75]), &p(&[0.25])).unwrap();
        assert_eq!(v.as_slice()[0], 0.5);
    }

    #[test]
    fn lift_examples() {
        let l = lift(&[p(&[0.3, 0.7])]).unwrap();
        assert_eq!(l.offsets[0].as_slice(), &[0.0, 0.0]);
        assert_eq!(l.diameter, 0.0);

        let l = lift(&[p(&[0.95]), p(&[0.05])]).unwrap();
        assert!((l.offsets[1].as_slice()[0] - 0.1).abs() < 1e-15);
        assert!((l.diameter - 0.1).abs() < 1e-15);

        let pts = [p(&[0.98, 0.5]), p(&[0.03, 0.52]), p(&[0.99, 0.56])];
        let l = lift(&pts).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let lifted: f64 = l.offsets[i]
                    .as_slice()
                    .iter()
                    .zip(l.offsets[j].as_slice())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let t = torus_distance(&pts[i], &pts[j]).unwrap();
                assert!((lifted - t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lift_rejects_large_or_winding_configurations() {
        assert!(matches!(
            lift(&[p(&[0.0]), p(&[0.5])]),
            Err(Error::DiameterTooLarge { .. })
        ));
        // pairwise distances 0.3, 0.3, 0.4 but the three points wrap the circle
        assert!(matches!(lift(&[p(&[0.0]), p(&[0.3]), p(&[0.6])]), Err(Error::NotLiftable)));
    }

    #[test]
    fn circumsphere_examples() {
        let s = circumsphere(&[p(&[0.4, 0.5]), p(&[0.6, 0.5])]).unwrap();
        assert!((s.center.coords()[0] - 0.5).abs() < 1e-12);
        assert!((s.center.coords()[1] - 0.5).abs() < 1e-12);
        assert!((s.radius - 0.1).abs() < 1e-12);

        let x = [p(&[0.5, 0.6]), p(&[0.4, 0.5]), p(&[0.6, 0.5])];
        let s = circumsphere(&x).unwrap();
        assert!((s.center.coords()[0] - 0.5).abs() < 1e-12);
        assert!((s.center.coords()[1] - 0.5).abs() < 1e-12);
        assert!((s.radius - 0.1).abs() < 1e-12);
        for q in &x {
            let dq = brute_distance(s.center.coords(), q.coords());
            assert!((dq - s.radius).abs() < TOL_GEO);
        }

        let s = circumsphere(&[p(&[0.98]), p(&[0.04])]).unwrap();
        assert!((s.center.coords()[0] - 0.01).abs() < 1e-12);
        assert!((s.radius - 0.03).abs() < 1e-12);
        assert!((brute_distance(&[0.01], &[0.98]) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn circumsphere_rejects_collinear_triangle() {
        let x = [p(&[0.1, 0.1]), p(&[0.2, 0.2]), p(&[0.3, 0.3])];
        assert!(matches!(circumsphere(&x), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn circumsphere_arity_is_checked() {
        assert!(circumsphere(&[p(&[0.1])]).is_err());
        assert!(circumsphere(&[p(&[0.1]), p(&[0.2]), p(&[0.3])]).is_err());
    }

    #[test]
    fn open_simplex_examples() {
        let x = [p(&[0.4]), p(&[0.6])];
        assert!(in_open_simplex(&x, &p(&[0.5])).unwrap());
        assert!(!in_open_simplex(&x, &p(&[0.4])).unwrap());

        // obtuse triangle: circumcenter outside the triangle
        let x = [p(&[0.40, 0.50]), p(&[0.60, 0.50]), p(&[0.50, 0.52])];
        let s = circumsphere(&x).unwrap();
        assert!(!in_open_simplex(&x, &s.center).unwrap());
        assert!(!s.center_in_open_simplex());

        // acute triangle: circumcenter inside
        let x = [p(&[0.40, 0.50]), p(&[0.60, 0.50]), p(&[0.50, 0.65])];
        let s = circumsphere(&x).unwrap();
        assert!(in_open_simplex(&x, &s.center).unwrap());
        assert!(s.center_in_open_simplex());
    }

    #[test]
    fn simplex_volume_examples() {
        assert!((simplex_volume(&[[0.0, 0.0], [1.0, 0.0]]) - 1.0).abs() < 1e-15);
        assert!((simplex_volume(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) - 0.5).abs() < 1e-15);

        let tri: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        // shoelace
        let shoelace = 0.5
            * ((tri[0][0] * tri[1][1] - tri[1][0] * tri[0][1])
                + (tri[1][0] * tri[2][1] - tri[2][0] * tri[1][1])
                + (tri[2][0] * tri[0][1] - tri[0][0] * tri[2][1]))
                .abs();
        assert!((shoelace - 1.299038105676658).abs() < 1e-12);
        assert!((simplex_volume(&tri) - shoelace).abs() < 1e-12);

        // flat simplex
        assert_eq!(simplex_volume(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), 0.0);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_handles_tiny_negatives() {
        assert_eq!(canonicalize(-1e-18), 0.0);
        assert_eq!(canonicalize(1.0), 0.0);
        assert!((canonicalize(-0.25) - 0.75).abs() < 1e-15);
    }
}
