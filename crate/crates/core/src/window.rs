//! Index-`d` critical points in the critical window, as a marked point
//! process, and the tests of its Poisson limit.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ui;

use crate::coverage::{certify_regime, morse_verdict, Covered};
use crate::critical::{enumerate_with_index, Enumeration, EnumerationWindow};
use crate::error::{Error, Result};
use crate::exec;
use crate::format::sig17;
use crate::geometry::{unit_ball_volume, TorusPoint, R_CONV};
use crate::index::SpatialIndex;
use crate::sampling::{sample_poisson, PointCloud, SeedSpec};
use crate::stats::{self, Estimate, TestResult};

/// Fewest trials `gof_poisson` accepts.
pub const MIN_GOF_TRIALS: usize = 500;
/// Tolerance on the mark identity.
const MARK_TOL: f64 = 1e-9;

/// `log n + (d + k - 2) log log n`, the centering of `Λ` in the window.
pub fn window_shift(n: f64, d: usize, k: usize) -> f64 {
    n.ln() + (d as f64 + k as f64 - 2.0) * n.ln().ln()
}

/// Radius with `n ω_d r^d = big_lambda`.
pub fn radius_for_lambda(n: f64, d: usize, big_lambda: f64) -> f64 {
    (big_lambda / (n * unit_ball_volume(d))).powf(1.0 / d as f64)
}

/// `n ω_d r^d`.
pub fn lambda_for_radius(n: f64, d: usize, r: f64) -> f64 {
    n * unit_ball_volume(d) * r.powi(d as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub n: f64,
    pub d: usize,
    pub k: usize,
    pub lambda0: f64,
}

impl WindowConfig {
    pub fn new(n: f64, d: usize, k: usize, lambda0: f64) -> Result<Self> {
        let cfg = WindowConfig { n, d, k, lambda0 };
        if !(n >= 3.0 && n.is_finite()) {
            return Err(Error::config(format!("window needs n >= 3, got {n}")));
        }
        if d == 0 || d > crate::MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        if k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if !lambda0.is_finite() || cfg.big_lambda() <= 0.0 {
            return Err(Error::config(format!("lambda0 = {lambda0} gives a non-positive window radius")));
        }
        let (r0, r1) = (cfg.r0(), cfg.upper());
        if !(r0 < r1 && r1 <= R_CONV) {
            return Err(Error::config(format!(
                "window (r0, sqrt r0] = ({r0}, {r1}] must satisfy r0 < sqrt r0 <= 1/4"
            )));
        }
        Ok(cfg)
    }

    pub fn shift(&self) -> f64 {
        window_shift(self.n, self.d, self.k)
    }

    /// `Λ_0 = n ω_d r0^d`.
    pub fn big_lambda(&self) -> f64 {
        self.shift() + self.lambda0
    }

    pub fn r0(&self) -> f64 {
        radius_for_lambda(self.n, self.d, self.big_lambda())
    }

    /// Upper edge `R0 = sqrt r0`.
    pub fn upper(&self) -> f64 {
        self.r0().sqrt()
    }

    /// `λ_c` of a critical value `rho`.
    pub fn mark(&self, rho: f64) -> f64 {
        lambda_for_radius(self.n, self.d, rho) - self.shift()
    }

    /// Largest mark the window can hold.
    pub fn mark_ceiling(&self) -> f64 {
        self.mark(self.upper())
    }

    /// Index-`d` enumeration over `(r0, R0]`.
    pub fn enumeration_window(&self) -> EnumerationWindow {
        EnumerationWindow { r_min: self.r0(), r_max: self.upper(), mu_filter: Some(self.d) }
    }

    /// Mean window count implied by a constant `c` at this finite `n`: the
    /// intensity `c n Λ^(d+k-2) e^-Λ dΛ` integrated over the window.
    pub fn expected_count(&self, c: f64) -> f64 {
        let p = (self.d + self.k - 1) as f64;
        let lam_r = lambda_for_radius(self.n, self.d, self.upper());
        c * self.n * (gamma_ui(p, self.big_lambda()) - gamma_ui(p, lam_r))
    }

    /// CDF of `λ - λ0` for a single window mark under that intensity.
    pub fn finite_mark_cdf(&self, x: f64) -> f64 {
        let p = (self.d + self.k - 1) as f64;
        let lam0 = self.big_lambda();
        let lam_r = lambda_for_radius(self.n, self.d, self.upper());
        let top = gamma_ui(p, lam0);
        let mass = top - gamma_ui(p, lam_r);
        if x <= 0.0 {
            0.0
        } else if lam0 + x >= lam_r {
            1.0
        } else {
            (top - gamma_ui(p, lam0 + x)) / mass
        }
    }
}

/// One atom of the window process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub location: TorusPoint,
    /// `λ_c`.
    pub mark: f64,
    pub rho: f64,
}

fn marked(cfg: &WindowConfig, e: &Enumeration) -> Vec<MarkedPoint> {
    let (r0, r1) = (cfg.r0(), cfg.upper());
    e.points
        .iter()
        .filter(|c| c.mu == cfg.d && c.rho > r0 && c.rho <= r1)
        .map(|c| MarkedPoint { location: c.center, mark: cfg.mark(c.rho), rho: c.rho })
        .collect()
}

/// The window process of one cloud.
pub fn collect_xi(cloud: &PointCloud, cfg: &WindowConfig) -> Result<Vec<MarkedPoint>> {
    let index = SpatialIndex::with_default_cells(cloud, cfg.k)?;
    let e = enumerate_with_index(&index, cfg.k, cfg.enumeration_window())?;
    Ok(marked(cfg, &e))
}

/// Everything one window trial yields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowTrial {
    pub trial_id: u64,
    pub point_count: usize,
    pub marks: Vec<MarkedPoint>,
    /// Index-`d` points above `R0` (the KS truncation).
    pub above_window: usize,
    /// Morse coverage at `r0`; `None` when the vacancy outlives the
    /// convexity radius.
    pub covered: Option<bool>,
}

/// Samples a cloud and records its window process and coverage at `r0`
/// from a single enumeration of `(r0, 1/4]`.
pub fn observe_window(cfg: &WindowConfig, seed: SeedSpec) -> Result<WindowTrial> {
    let cloud = sample_poisson(cfg.n, cfg.d, seed)?;
    if cloud.len() < cfg.k {
        return Ok(WindowTrial { trial_id: seed.trial_id, point_count: cloud.len(), marks: Vec::new(), above_window: 0, covered: None });
    }
    let index = SpatialIndex::with_default_cells(&cloud, cfg.k)?;
    let window = EnumerationWindow { r_min: cfg.r0(), r_max: R_CONV, mu_filter: Some(cfg.d) };
    let e = enumerate_with_index(&index, cfg.k, window)?;
    let covered = match certify_regime(&index, cfg.k, &e) {
        Ok(()) => Some(morse_verdict(&e, cfg.r0()).covered == Covered::Yes),
        Err(Error::OutOfRegime) => None,
        Err(err) => return Err(err),
    };
    let marks = marked(cfg, &e);
    let above_window = e.points.iter().filter(|c| c.rho > cfg.upper()).count();
    Ok(WindowTrial { trial_id: seed.trial_id, point_count: cloud.len(), marks, above_window, covered })
}

/// Trials of one window experiment; degenerate trials are counted and dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRun {
    pub config: WindowConfig,
    pub trials: Vec<WindowTrial>,
    pub degenerate: usize,
}

pub fn run_window(cfg: &WindowConfig, trials: usize, master_seed: u64) -> Result<WindowRun> {
    let outcomes = exec::map_indexed(trials, |t| observe_window(cfg, SeedSpec::new(master_seed, t as u64)));
    let mut run = WindowRun { config: *cfg, trials: Vec::with_capacity(trials), degenerate: 0 };
    for o in outcomes {
        match o {
            Ok(t) => run.trials.push(t),
            Err(e) if e.is_degenerate() => run.degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

impl WindowRun {
    pub fn samples(&self) -> Vec<Vec<MarkedPoint>> {
        self.trials.iter().map(|t| t.marks.clone()).collect()
    }

    /// Fraction of trials covered at `r0`; out-of-regime trials count as
    /// uncovered, since their vacancy persists at `1/4 > r0`.
    pub fn coverage_fraction(&self) -> Estimate {
        let hits = self.trials.iter().filter(|t| t.covered == Some(true)).count();
        stats::proportion(hits, self.trials.len())
    }

    pub fn out_of_regime(&self) -> usize {
        self.trials.iter().filter(|t| t.covered.is_none()).count()
    }

    /// Marked points as CSV: `x1..xd, lambda, rho, trial_id`.
    pub fn write_marks_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.config.d;
        let head: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},lambda,rho,trial_id", head.join(","))?;
        for t in &self.trials {
            for m in &t.marks {
                let xs: Vec<String> = m.location.coords().iter().map(|&x| sig17(x)).collect();
                writeln!(w, "{},{},{},{}", xs.join(","), sig17(m.mark), sig17(m.rho), t.trial_id)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub trial_count: usize,
    /// `counts[j]` trials had exactly `j` window points.
    pub counts: Vec<u64>,
    pub mean_count: f64,
    pub dispersion: f64,
    /// Counts binned `{0, 1, 2, >=3}` against Poisson(mean).
    pub count_chi2: TestResult,
    /// Shifted marks against Exp(1).
    pub ks_marks: TestResult,
    /// Marks at or above this value are left out of `ks_marks`.
    pub ks_truncation: f64,
    pub ks_excluded: usize,
    /// Shifted marks against the finite-`n` window law.
    pub ks_marks_finite_n: TestResult,
    /// Locations over `4^d` equal cells against uniform.
    pub chi2_spatial: TestResult,
    /// Pooled mean count, the empirical `C_d e^-λ0`.
    pub c_hat: Estimate,
    /// `C_d` implied by the pooled mean through the finite-`n` window integral.
    pub c_finite_n: Estimate,
}

pub fn gof_poisson(samples: &[Vec<MarkedPoint>], cfg: &WindowConfig) -> Result<GofReport> {
    if samples.len() < MIN_GOF_TRIALS {
        return Err(Error::InsufficientTrials { needed: MIN_GOF_TRIALS, got: samples.len() });
    }
    let per_trial: Vec<u64> = samples.iter().map(|s| s.len() as u64).collect();
    let xs: Vec<f64> = per_trial.iter().map(|&c| c as f64).collect();
    let dispersion = stats::dispersion(&xs)?;
    let mean_count = stats::mean(&xs);
    let max = per_trial.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &c in &per_trial {
        counts[c as usize] += 1;
    }
    let count_chi2 = stats::poisson_chi_square(&per_trial, mean_count, 3);

    let ceiling = cfg.mark_ceiling();
    let all: Vec<&MarkedPoint> = samples.iter().flatten().collect();
    let kept: Vec<f64> = all.iter().filter(|m| m.mark < ceiling).map(|m| m.mark - cfg.lambda0).collect();
    let ks_excluded = all.len() - kept.len();
    let ks_marks = stats::ks_test(&kept, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() });
    let ks_marks_finite_n = stats::ks_test(&kept, |x| cfg.finite_mark_cdf(x));

    let per_axis = 4usize;
    let mut cells = vec![0u64; per_axis.pow(cfg.d as u32)];
    for m in &all {
        let mut linear = 0;
        for &x in m.location.coords().iter().rev() {
            linear = linear * per_axis + ((x * per_axis as f64) as usize).min(per_axis - 1);
        }
        cells[linear] += 1;
    }
    let chi2_spatial = stats::uniform_chi_square(&cells);

    let c_hat = Estimate { value: mean_count, std_error: stats::std_error(&xs) };
    let unit = cfg.expected_count(1.0);
    let c_finite_n = Estimate { value: c_hat.value / unit, std_error: c_hat.std_error / unit };
    Ok(GofReport {
        trial_count: samples.len(),
        counts,
        mean_count,
        dispersion,
        count_chi2,
        ks_marks,
        ks_truncation: ceiling,
        ks_excluded,
        ks_marks_finite_n,
        chi2_spatial,
        c_hat,
        c_finite_n,
    })
}

/// Checks the mark identity on every point.
pub fn marks_consistent(cfg: &WindowConfig, marks: &[MarkedPoint]) -> bool {
    marks.iter().all(|m| (m.mark - cfg.mark(m.rho)).abs() <= MARK_TOL * m.mark.abs().max(1.0) && m.mark >= cfg.lambda0 - MARK_TOL)
}

/// One row of the coverage-probability table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub lambda0: f64,
    pub trials: usize,
    pub covered: Estimate,
    /// `exp(-c e^-λ0)`.
    pub predicted: f64,
    pub out_of_regime: usize,
    pub degenerate: usize,
}

/// Coverage frequency at `r0` against the void probability, per `λ0`.
/// `c` is the estimate of `C_d` (the pooled mean count at `λ0 = 0`).
pub fn coverage_probability_check(
    n: f64,
    d: usize,
    k: usize,
    lambda0s: &[f64],
    trials: usize,
    master_seed: u64,
    c: f64,
) -> Result<Vec<CoverageRow>> {
    lambda0s
        .iter()
        .enumerate()
        .map(|(i, &lambda0)| {
            let cfg = WindowConfig::new(n, d, k, lambda0)?;
            let run = run_window(&cfg, trials, SeedSpec::derive(master_seed, i as u64))?;
            Ok(CoverageRow {
                lambda0,
                trials: run.trials.len(),
                covered: run.coverage_fraction(),
                predicted: (-c * (-lambda0).exp()).exp(),
                out_of_regime: run.out_of_regime(),
                degenerate: run.degenerate,
            })
        })
        .collect()
}
