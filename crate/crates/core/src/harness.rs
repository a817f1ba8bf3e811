//! Threshold sweeps over `(n, w, μ)` and their per-trial records.
//!
//! Within one `n` every trial samples a single cloud, enumerates it once
//! from the smallest requested radius up to `1/4`, and reads every `(w, μ)`
//! cell off that enumeration, so neighbouring cells share their randomness.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coverage::{certify_regime, is_covered_grid_with, morse_verdict, Covered};
use crate::critical::{enumerate_with_index, EnumerationWindow};
use crate::error::{Error, Result};
use crate::euler::euler_of_enumeration;
use crate::exec;
use crate::format::sig17;
use crate::geometry::{R_CONV, MAX_DIM};
use crate::index::SpatialIndex;
use crate::sampling::{sample_poisson, SeedSpec};
use crate::stats::{self, Estimate};
use crate::window::radius_for_lambda;

pub const SCHEMA_VERSION: u32 = 1;
/// Largest tolerated fraction of degenerate trials.
pub const MAX_DEGENERATE_FRACTION: f64 = 1e-3;
/// Below this mean count the dispersion ratio is not reported.
pub const MIN_MEAN_FOR_RATIO: f64 = 0.05;

fn default_grid_divisor() -> f64 {
    16.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub d: usize,
    pub k: usize,
    pub n_values: Vec<f64>,
    /// Offsets `w` in `Λ = log n + (μ + k - 2) log log n + w`.
    pub w_values: Vec<f64>,
    pub mu_targets: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Also run the grid oracle on index-`d` cells.
    #[serde(default)]
    pub grid_oracle: bool,
    /// Grid spacing is `r / grid_divisor`.
    #[serde(default = "default_grid_divisor")]
    pub grid_divisor: f64,
    /// Also record `χ` (needs a complete enumeration from radius 0).
    #[serde(default)]
    pub euler: bool,
    /// Record wall-clock time per trial. Makes record output nondeterministic.
    #[serde(default)]
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn new(d: usize, k: usize, n_values: Vec<f64>, w_values: Vec<f64>, mu_targets: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        SweepConfig {
            schema_version: SCHEMA_VERSION,
            d,
            k,
            n_values,
            w_values,
            mu_targets,
            trials,
            master_seed,
            grid_oracle: false,
            grid_divisor: default_grid_divisor(),
            euler: false,
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.d == 0 || self.d > MAX_DIM {
            return Err(Error::UnsupportedDimension(self.d));
        }
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.n_values.is_empty() || self.w_values.is_empty() || self.mu_targets.is_empty() {
            return Err(Error::config("n_values, w_values and mu_targets must be non-empty"));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| !(n >= 3.0 && n.is_finite())) {
            return Err(Error::config(format!("every n must be >= 3, got {n}")));
        }
        if let Some(mu) = self.mu_targets.iter().find(|&&mu| mu > self.d || (self.k == 1 && mu == 0)) {
            return Err(Error::config(format!("index {mu} impossible for d = {}, k = {}", self.d, self.k)));
        }
        if !(self.grid_divisor >= 8.0) {
            return Err(Error::config("grid_divisor must be at least 8"));
        }
        for &n in &self.n_values {
            for &w in &self.w_values {
                for &mu in &self.mu_targets {
                    let r = self.radius(n, w, mu);
                    if !(r > 0.0 && r <= R_CONV) {
                        return Err(Error::config(format!("n = {n}, w = {w}, mu = {mu} gives radius {r} outside (0, 1/4]")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Λ` of a sweep cell.
    pub fn lambda(&self, n: f64, w: f64, mu: usize) -> f64 {
        n.ln() + (mu as f64 + self.k as f64 - 2.0) * n.ln().ln() + w
    }

    pub fn radius(&self, n: f64, w: f64, mu: usize) -> f64 {
        let l = self.lambda(n, w, mu);
        if l <= 0.0 {
            return f64::NAN;
        }
        radius_for_lambda(n, self.d, l)
    }

    fn cells(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for &w in &self.w_values {
            for &mu in &self.mu_targets {
                out.push((w, mu));
            }
        }
        out
    }
}

/// One trial of one sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: f64,
    pub w: f64,
    pub mu: usize,
    pub r: f64,
    pub trial_id: u64,
    pub seed: u64,
    pub point_count: usize,
    /// `N^j_{k,r}` for `j = 0..=d`; `None` for degenerate trials.
    pub counts: Option<Vec<usize>>,
    /// Morse verdict at `r`; `None` when degenerate or out of regime.
    pub morse: Option<Covered>,
    pub out_of_regime: bool,
    pub grid: Option<Covered>,
    pub chi: Option<i64>,
    pub degenerate: bool,
    pub wall_time_s: Option<f64>,
}

/// Aggregates of one `(n, w, μ)` cell over its non-degenerate trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    pub w: f64,
    pub mu: usize,
    pub lambda: f64,
    pub r: f64,
    pub trials: usize,
    pub degenerate: usize,
    /// `P(N^μ = 0)`.
    pub p_zero: Estimate,
    pub mean: Estimate,
    pub variance: f64,
    /// Morse coverage frequency at `r`; out-of-regime trials count as uncovered.
    pub p_covered: Estimate,
    pub out_of_regime: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub records: Vec<TrialRecord>,
}

struct TrialOutcome {
    records: Vec<TrialRecord>,
}

fn run_trial(cfg: &SweepConfig, n: f64, seed: SeedSpec, cells: &[(f64, usize, f64)]) -> Result<TrialOutcome> {
    let start = Instant::now();
    let cloud = sample_poisson(n, cfg.d, seed)?;
    let blank = |w: f64, mu: usize, r: f64| TrialRecord {
        n,
        w,
        mu,
        r,
        trial_id: seed.trial_id,
        seed: seed.stream_seed(),
        point_count: cloud.len(),
        counts: None,
        morse: None,
        out_of_regime: false,
        grid: None,
        chi: None,
        degenerate: false,
        wall_time_s: None,
    };
    let r_min = if cfg.euler { 0.0 } else { cells.iter().map(|c| c.2).fold(R_CONV, f64::min) };
    let analysed = (|| -> Result<Vec<TrialRecord>> {
        if cloud.len() < cfg.k {
            // Nothing is k-covered and the distance function is undefined.
            return Ok(cells
                .iter()
                .map(|&(w, mu, r)| TrialRecord { counts: Some(vec![0; cfg.d + 1]), morse: Some(Covered::No), chi: cfg.euler.then_some(0), ..blank(w, mu, r) })
                .collect());
        }
        let index = SpatialIndex::with_default_cells(&cloud, cfg.k)?;
        let window = if r_min == 0.0 { EnumerationWindow::full() } else { EnumerationWindow::new(r_min.min(R_CONV * 0.999_999), R_CONV)? };
        let e = enumerate_with_index(&index, cfg.k, window)?;
        let regime = match certify_regime(&index, cfg.k, &e) {
            Ok(()) => true,
            Err(Error::OutOfRegime) => false,
            Err(err) => return Err(err),
        };
        cells
            .iter()
            .map(|&(w, mu, r)| {
                let counts = (0..=cfg.d).map(|j| e.points.iter().filter(|c| c.mu == j && c.rho >= r).count()).collect();
                let morse = regime.then(|| morse_verdict(&e, r).covered);
                let grid = if cfg.grid_oracle && mu == cfg.d {
                    Some(is_covered_grid_with(&index, cfg.k, r, r / cfg.grid_divisor)?.covered)
                } else {
                    None
                };
                let chi = if cfg.euler { Some(euler_of_enumeration(&e, cloud.len(), r)?) } else { None };
                Ok(TrialRecord { counts: Some(counts), morse, out_of_regime: !regime, grid, chi, ..blank(w, mu, r) })
            })
            .collect()
    })();
    let mut records = match analysed {
        Ok(r) => r,
        Err(e) if e.is_degenerate() => cells.iter().map(|&(w, mu, r)| TrialRecord { degenerate: true, ..blank(w, mu, r) }).collect(),
        Err(e) => return Err(e),
    };
    if cfg.record_timing {
        let t = start.elapsed().as_secs_f64();
        records.iter_mut().for_each(|r| r.wall_time_s = Some(t));
    }
    Ok(TrialOutcome { records })
}

/// Aggregates a cell from its records.
pub fn summarize(n: f64, w: f64, mu: usize, lambda: f64, r: f64, records: &[&TrialRecord]) -> SweepRow {
    let valid: Vec<&&TrialRecord> = records.iter().filter(|t| !t.degenerate).collect();
    let counts: Vec<f64> = valid.iter().map(|t| t.counts.as_ref().map_or(0, |c| c[mu]) as f64).collect();
    let zeros = counts.iter().filter(|&&c| c == 0.0).count();
    let covered = valid.iter().filter(|t| t.morse == Some(Covered::Yes)).count();
    SweepRow {
        n,
        w,
        mu,
        lambda,
        r,
        trials: valid.len(),
        degenerate: records.len() - valid.len(),
        p_zero: stats::proportion(zeros, valid.len()),
        mean: Estimate { value: stats::mean(&counts), std_error: stats::std_error(&counts) },
        variance: stats::variance(&counts),
        p_covered: stats::proportion(covered, valid.len()),
        out_of_regime: valid.iter().filter(|t| t.out_of_regime).count(),
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        let cells: Vec<(f64, usize, f64)> = cfg.cells().into_iter().map(|(w, mu)| (w, mu, cfg.radius(n, w, mu))).collect();
        let master = SeedSpec::derive(cfg.master_seed, ni as u64);
        let outcomes = exec::map_indexed(cfg.trials, |t| run_trial(cfg, n, SeedSpec::new(master, t as u64), &cells));
        let mut per_trial = Vec::with_capacity(cfg.trials);
        for o in outcomes {
            per_trial.push(o?.records);
        }
        for (ci, &(w, mu, r)) in cells.iter().enumerate() {
            let cell: Vec<&TrialRecord> = per_trial.iter().map(|t| &t[ci]).collect();
            rows.push(summarize(n, w, mu, cfg.lambda(n, w, mu), r, &cell));
        }
        for (ci, _) in cells.iter().enumerate() {
            records.extend(per_trial.iter().map(|t| t[ci].clone()));
        }
    }
    Ok(SweepResult { config: cfg.clone(), rows, records })
}

impl SweepResult {
    pub fn degenerate_fraction(&self) -> f64 {
        let total = self.records.len();
        if total == 0 {
            return 0.0;
        }
        self.records.iter().filter(|r| r.degenerate).count() as f64 / total as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "n,w,mu,lambda,r,trials,degenerate,p_zero,p_zero_se,mean,mean_se,variance,p_covered,p_covered_se,out_of_regime"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sig17(r.n),
                sig17(r.w),
                r.mu,
                sig17(r.lambda),
                sig17(r.r),
                r.trials,
                r.degenerate,
                sig17(r.p_zero.value),
                sig17(r.p_zero.std_error),
                sig17(r.mean.value),
                sig17(r.mean.std_error),
                sig17(r.variance),
                sig17(r.p_covered.value),
                sig17(r.p_covered.std_error),
                r.out_of_regime
            )?;
        }
        Ok(())
    }

    /// One JSON object per record.
    pub fn write_records_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Mean, variance and their ratio for one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: f64,
    pub w: f64,
    pub mu: usize,
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    /// Jackknifed variance-to-mean ratio; skipped when the mean is below
    /// [`MIN_MEAN_FOR_RATIO`].
    pub ratio: Option<Estimate>,
}

/// Variance-to-mean summary of a list of counts.
pub fn variance_row(n: f64, w: f64, mu: usize, counts: &[f64]) -> VarianceRow {
    let mean = stats::mean(counts);
    let ratio = if mean >= MIN_MEAN_FOR_RATIO { stats::dispersion_jackknife(counts).ok() } else { None };
    VarianceRow { n, w, mu, trials: counts.len(), mean, variance: stats::variance(counts), ratio }
}

pub fn run_variance_check(cfg: &SweepConfig) -> Result<Vec<VarianceRow>> {
    let result = run_sweep(cfg)?;
    Ok(result
        .rows
        .iter()
        .map(|row| {
            let counts: Vec<f64> = result
                .records
                .iter()
                .filter(|t| !t.degenerate && t.n == row.n && t.w == row.w && t.mu == row.mu)
                .map(|t| t.counts.as_ref().map_or(0, |c| c[row.mu]) as f64)
                .collect();
            variance_row(row.n, row.w, row.mu, &counts)
        })
        .collect())
}
