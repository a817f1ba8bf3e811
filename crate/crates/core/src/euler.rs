//! Euler characteristic of the k-coverage set from its critical points.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::critical::{enumerate_with_index, CriticalPoint, Enumeration, EnumerationWindow};
use crate::error::{Error, Result};
use crate::exec;
use crate::format::sig17;
use crate::geometry::R_CONV;
use crate::index::SpatialIndex;
use crate::sampling::{sample_poisson, PointCloud, SeedSpec};
use crate::stats::{self, LinearFit};
use crate::window::radius_for_lambda;

/// `sum (-1)^mu Δ_c` over critical points with `rho <= r`.
pub fn euler_characteristic(crits: &[CriticalPoint], r: f64) -> i64 {
    crits.iter().filter(|c| c.rho <= r).map(CriticalPoint::euler_weight).sum()
}

/// Euler characteristic of the coverage set at `r` from a complete
/// enumeration of `(0, r_max]`. For `k = 1` the sample points themselves are
/// the minima (value 0) and are added here.
pub fn euler_of_enumeration(e: &Enumeration, point_count: usize, r: f64) -> Result<i64> {
    if e.window.r_min != 0.0 || e.window.mu_filter.is_some() {
        return Err(Error::config("Euler characteristic needs an unfiltered enumeration from radius 0"));
    }
    if r > e.window.r_max {
        return Err(Error::config(format!("radius {r} above the enumerated range {}", e.window.r_max)));
    }
    let minima = if e.k == 1 && r >= 0.0 { point_count as i64 } else { 0 };
    Ok(minima + euler_characteristic(&e.points, r))
}

/// Number of circle gaps longer than `2r`, that is the number of arcs of
/// the union of radius-`r` balls (zero when the circle is covered).
pub fn circle_gap_count(cloud: &PointCloud, r: f64) -> Result<usize> {
    if cloud.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: cloud.dim() });
    }
    let mut xs: Vec<f64> = cloud.points().iter().map(|p| p.coords()[0]).collect();
    if xs.is_empty() {
        return Ok(0);
    }
    xs.sort_by(f64::total_cmp);
    let wrap = xs[0] + 1.0 - xs[xs.len() - 1];
    Ok(xs.windows(2).map(|w| w[1] - w[0]).chain([wrap]).filter(|&g| g > 2.0 * r).count())
}

/// One row of an Euler curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerRow {
    pub lambda: f64,
    pub r: f64,
    pub mean_chi: f64,
    pub se: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCurve {
    pub n: f64,
    pub d: usize,
    pub k: usize,
    pub rows: Vec<EulerRow>,
    pub degenerate: usize,
    /// Per trial, `χ` at every `Λ` in row order.
    pub chi: Vec<Vec<i64>>,
}

/// Monte Carlo mean of `χ` over a grid of `Λ = n ω_d r^d`. Each trial is
/// enumerated once and read at every radius.
pub fn expected_euler_curve(n: f64, d: usize, k: usize, lambdas: &[f64], trials: usize, master_seed: u64) -> Result<EulerCurve> {
    if lambdas.is_empty() || trials == 0 {
        return Err(Error::config("need at least one Λ value and one trial"));
    }
    let radii: Vec<f64> = lambdas.iter().map(|&l| radius_for_lambda(n, d, l)).collect();
    if radii.iter().any(|&r| !(r > 0.0 && r <= R_CONV)) {
        return Err(Error::config("every Λ must map to a radius in (0, 1/4]"));
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let window = EnumerationWindow::new(0.0, r_max)?;
    let outcomes = exec::map_indexed(trials, |t| -> Result<Vec<i64>> {
        let cloud = sample_poisson(n, d, SeedSpec::new(master_seed, t as u64))?;
        if cloud.len() < k {
            // Nothing is k-covered: the coverage set is empty.
            return Ok(vec![0; radii.len()]);
        }
        let index = SpatialIndex::with_default_cells(&cloud, k)?;
        let e = enumerate_with_index(&index, k, window)?;
        radii.iter().map(|&r| euler_of_enumeration(&e, cloud.len(), r)).collect()
    });
    let mut chi = Vec::with_capacity(trials);
    let mut degenerate = 0;
    for o in outcomes {
        match o {
            Ok(v) => chi.push(v),
            Err(e) if e.is_degenerate() => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    let rows = lambdas
        .iter()
        .zip(&radii)
        .enumerate()
        .map(|(j, (&lambda, &r))| {
            let xs: Vec<f64> = chi.iter().map(|v| v[j] as f64).collect();
            EulerRow { lambda, r, mean_chi: stats::mean(&xs), se: stats::std_error(&xs), trials: xs.len() }
        })
        .collect();
    Ok(EulerCurve { n, d, k, rows, degenerate, chi })
}

impl EulerCurve {
    /// CSV with columns `Lambda, mean_chi, se, trials`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "Lambda,mean_chi,se,trials")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", sig17(r.lambda), sig17(r.mean_chi), sig17(r.se), r.trials)?;
        }
        Ok(())
    }

    /// Weighted fit of `mean_chi = n e^-Λ (A_0 + A_1 Λ + ... + A_p Λ^p)`.
    /// Rows with zero spread carry no error estimate and are left out.
    pub fn fit(&self, degree: usize) -> Result<LinearFit> {
        let used: Vec<&EulerRow> = self.rows.iter().filter(|r| r.se > 0.0).collect();
        let design: Vec<Vec<f64>> = used
            .iter()
            .map(|r| {
                let base = self.n * (-r.lambda).exp();
                (0..=degree).map(|i| base * r.lambda.powi(i as i32)).collect()
            })
            .collect();
        let y: Vec<f64> = used.iter().map(|r| r.mean_chi).collect();
        let sigma: Vec<f64> = used.iter().map(|r| r.se).collect();
        stats::weighted_least_squares(&design, &y, &sigma)
    }
}

/// `E χ = n e^-Λ` for `d = 1, k = 1` at `Λ = 2 n r`.
pub fn circle_expected_euler(n: f64, lambda: f64) -> f64 {
    n * (-lambda).exp()
}
