use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use kcover::constants::{estimate_cd_with, Normalization};
use kcover::coverage::{is_covered_grid_refined, is_covered_grid_with, is_covered_morse_with, CoverageVerdict, Covered};
use kcover::critical::{enumerate_with_index, write_jsonl, CriticalPoint, EnumerationWindow};
use kcover::euler::expected_euler_curve;
use kcover::format::sig17;
use kcover::harness::{run_sweep, SweepConfig};
use kcover::sampling::{sample_fixed, sample_poisson};
use kcover::window::{gof_poisson, run_window, WindowConfig};
use kcover::{Error, PointCloud, SeedSpec, SpatialIndex};

use crate::args::{
    CloudSource, ConstantsArgs, CoverageArgs, CoverageMethod, CriticalArgs, EulerArgs, Format, NormalizationArg,
    OracleArgs, SampleArgs, SweepArgs, WindowArgs,
};

/// Why a command did not finish normally.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    /// A single-instance command hit a degenerate configuration.
    Degenerate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_degenerate() {
            Failure::Degenerate(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

pub type Outcome = Result<TrialTally, Failure>;

/// Degenerate trials out of all trials run.
#[derive(Debug, Default, Clone, Copy)]
pub struct TrialTally {
    pub trials: usize,
    pub degenerate: usize,
}

impl TrialTally {
    fn single() -> Self {
        TrialTally { trials: 1, degenerate: 0 }
    }
}

/// Shared global options.
pub struct Context {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Context {
    fn writer(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn create(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(ctx: &Context, value: &T) -> Result<(), Failure> {
    let mut w = ctx.writer()?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_cloud(src: &CloudSource, seed: u64) -> Result<PointCloud, Failure> {
    if let Some(text) = &src.points {
        let values = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Failure::Config(format!("bad coordinate {s:?}: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if src.d == 0 || values.len() % src.d != 0 {
            return Err(Failure::Config(format!("{} coordinates do not split into points of dimension {}", values.len(), src.d)));
        }
        let rows: Vec<Vec<f64>> = values.chunks(src.d).map(<[f64]>::to_vec).collect();
        return Ok(PointCloud::from_coords(src.d, &rows)?);
    }
    if let Some(path) = &src.input {
        let file = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let cloud = PointCloud::read_jsonl(BufReader::new(file))?;
        if cloud.dim() != src.d {
            return Err(Failure::Config(format!("cloud has dimension {}, --d is {}", cloud.dim(), src.d)));
        }
        return Ok(cloud);
    }
    if let Some(n) = src.n {
        return Ok(sample_poisson(n, src.d, SeedSpec::new(seed, src.trial_id))?);
    }
    Err(Failure::Config("give the cloud with --points, --input or --n".into()))
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Outcome {
    let seed = SeedSpec::new(ctx.seed, a.trial_id);
    let cloud = match (a.count, a.n) {
        (Some(count), _) => sample_fixed(count, a.d, seed)?,
        (None, Some(n)) => sample_poisson(n, a.d, seed)?,
        (None, None) => return Err(Failure::Config("give --n or --count".into())),
    };
    let mut w = ctx.writer()?;
    match ctx.format_or(Format::Json) {
        Format::Json => cloud.write_jsonl(&mut w)?,
        Format::Csv => {
            let head: Vec<String> = (1..=a.d).map(|i| format!("x{i}")).collect();
            writeln!(w, "{}", head.join(","))?;
            for p in cloud.points() {
                let xs: Vec<String> = p.coords().iter().map(|&x| sig17(x)).collect();
                writeln!(w, "{}", xs.join(","))?;
            }
        }
    }
    w.flush()?;
    Ok(TrialTally::single())
}

fn write_critical_csv(w: &mut dyn Write, d: usize, points: &[CriticalPoint]) -> Result<(), Failure> {
    let head: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},rho,mu,generators,interior_count,delta", head.join(","))?;
    for c in points {
        let xs: Vec<String> = c.center.coords().iter().map(|&x| sig17(x)).collect();
        let gens: Vec<String> = c.generators.iter().map(usize::to_string).collect();
        writeln!(w, "{},{},{},{},{},{}", xs.join(","), sig17(c.rho), c.mu, gens.join(" "), c.interior_count, c.delta)?;
    }
    Ok(())
}

pub fn critical_points(ctx: &Context, a: &CriticalArgs) -> Outcome {
    let cloud = load_cloud(&a.cloud, ctx.seed)?;
    let index = SpatialIndex::with_default_cells(&cloud, a.k)?;
    let mut window = EnumerationWindow::new(a.r_min, a.r_max)?;
    if let Some(mu) = a.mu {
        window = window.with_mu(mu);
    }
    let e = enumerate_with_index(&index, a.k, window)?;
    let mut w = ctx.writer()?;
    match ctx.format_or(Format::Json) {
        Format::Json => write_jsonl(&e.points, &mut w)?,
        Format::Csv => write_critical_csv(&mut w, cloud.dim(), &e.points)?,
    }
    w.flush()?;
    Ok(TrialTally::single())
}

fn covered_label(c: Covered) -> &'static str {
    match c {
        Covered::Yes => "yes",
        Covered::No => "no",
        Covered::Marginal => "marginal",
    }
}

pub fn coverage(ctx: &Context, a: &CoverageArgs) -> Outcome {
    let cloud = load_cloud(&a.cloud, ctx.seed)?;
    let index = SpatialIndex::with_default_cells(&cloud, a.k)?;
    let h = a.h.unwrap_or(a.r / 16.0);
    let grid = || is_covered_grid_with(&index, a.k, a.r, h);
    // Past the convexity radius the Morse criterion does not apply and the
    // grid decides.
    let morse = || match is_covered_morse_with(&index, a.k, a.r) {
        Err(Error::OutOfRegime) => grid(),
        other => other,
    };
    let verdicts: Vec<CoverageVerdict> = match a.method {
        CoverageMethod::Morse => vec![morse()?],
        CoverageMethod::Grid => vec![grid()?],
        CoverageMethod::Both => vec![morse()?, grid()?],
    };
    match ctx.format_or(Format::Json) {
        Format::Json => match verdicts.as_slice() {
            [one] => write_json(ctx, one)?,
            [m, g] => {
                let agree = m.covered == g.covered || g.covered == Covered::Marginal;
                write_json(ctx, &json!({ "morse": m, "grid": g, "agree": agree }))?;
            }
            _ => unreachable!(),
        },
        Format::Csv => {
            let mut w = ctx.writer()?;
            let head: Vec<String> = (1..=cloud.dim()).map(|i| format!("witness_x{i}")).collect();
            writeln!(w, "method,covered,{},witness_value", head.join(","))?;
            for v in &verdicts {
                let method = serde_json::to_value(v.method)?;
                let (xs, value) = match &v.witness {
                    Some(wit) => {
                        let loc = wit.location();
                        let xs: Vec<String> = loc.coords().iter().map(|&x| sig17(x)).collect();
                        (xs, sig17(index.knn_distance(loc, a.k)?))
                    }
                    None => (vec![String::new(); cloud.dim()], String::new()),
                };
                writeln!(w, "{},{},{},{}", method.as_str().unwrap_or_default(), covered_label(v.covered), xs.join(","), value)?;
            }
            w.flush()?;
        }
    }
    Ok(TrialTally::single())
}

pub fn sweep(ctx: &Context, a: &SweepArgs, explicit_seed: Option<u64>) -> Outcome {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let mut cfg = SweepConfig::from_json(&text)?;
            if let Some(seed) = explicit_seed {
                cfg.master_seed = seed;
            }
            cfg
        }
        None => SweepConfig::new(
            a.d.unwrap_or_default(),
            a.k.unwrap_or_default(),
            a.n.clone(),
            a.w.clone(),
            a.mu.clone(),
            a.trials.unwrap_or_default(),
            ctx.seed,
        ),
    };
    cfg.grid_oracle |= a.grid_oracle;
    cfg.euler |= a.euler;
    let result = run_sweep(&cfg)?;
    let mut w = ctx.writer()?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => result.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &json!({ "config": result.config, "rows": result.rows }))?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    if let Some(path) = &a.records {
        let mut r = BufWriter::new(create(path)?);
        result.write_records_jsonl(&mut r)?;
        r.flush()?;
    }
    let per_trial = (result.records.len() / result.config.trials.max(1)).max(1);
    let degenerate = result.records.iter().filter(|r| r.degenerate).count() / per_trial;
    Ok(TrialTally { trials: result.records.len() / per_trial, degenerate })
}

fn marks_path(a: &WindowArgs, out: Option<&Path>) -> Option<PathBuf> {
    a.marks.clone().or_else(|| out.map(|p| p.with_extension("marks.csv")))
}

pub fn window(ctx: &Context, a: &WindowArgs) -> Outcome {
    if ctx.format == Some(Format::Csv) {
        return Err(Failure::Config("window writes its report as JSON; marks go to the --marks CSV".into()));
    }
    let cfg = WindowConfig::new(a.n, a.d, a.k, a.lambda0)?;
    let run = run_window(&cfg, a.trials, ctx.seed)?;
    if let Some(path) = marks_path(a, ctx.out.as_deref()) {
        let mut w = BufWriter::new(create(&path)?);
        run.write_marks_csv(&mut w)?;
        w.flush()?;
    }
    let report = gof_poisson(&run.samples(), &cfg)?;
    write_json(
        ctx,
        &json!({
            "config": cfg,
            "trials": a.trials,
            "degenerate": run.degenerate,
            "out_of_regime": run.out_of_regime(),
            "coverage_fraction": run.coverage_fraction(),
            "report": report,
        }),
    )?;
    Ok(TrialTally { trials: a.trials, degenerate: run.degenerate })
}

pub fn euler(ctx: &Context, a: &EulerArgs) -> Outcome {
    let curve = expected_euler_curve(a.n, a.d, a.k, &a.lambdas, a.trials, ctx.seed)?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut w = ctx.writer()?;
            curve.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => {
            let fit = a.fit_degree.map(|deg| curve.fit(deg)).transpose()?;
            write_json(
                ctx,
                &json!({ "n": curve.n, "d": curve.d, "k": curve.k, "rows": curve.rows, "degenerate": curve.degenerate, "fit": fit }),
            )?;
        }
    }
    Ok(TrialTally { trials: a.trials, degenerate: curve.degenerate })
}

pub fn constants(ctx: &Context, a: &ConstantsArgs) -> Outcome {
    let normalization = match a.normalization {
        NormalizationArg::Counting => Normalization::Counting,
        NormalizationArg::AsPrinted => Normalization::AsPrinted,
    };
    let est = estimate_cd_with(a.d, a.k, a.samples, ctx.seed, normalization, a.rotate)?;
    match ctx.format_or(Format::Json) {
        Format::Json => write_json(ctx, &est)?,
        Format::Csv => {
            let mut w = ctx.writer()?;
            writeln!(w, "d,k,normalization,value,std_error,samples,integrand_mean")?;
            let norm = serde_json::to_value(est.normalization)?;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                est.d,
                est.k,
                norm.as_str().unwrap_or_default(),
                sig17(est.value),
                sig17(est.std_error),
                est.samples,
                sig17(est.integrand_mean)
            )?;
            w.flush()?;
        }
    }
    Ok(TrialTally::single())
}

pub fn oracle_compare(ctx: &Context, a: &OracleArgs) -> Outcome {
    if ctx.format == Some(Format::Json) {
        return Err(Failure::Config("oracle-compare writes CSV only".into()));
    }
    if a.lambda0.is_empty() || a.trials == 0 {
        return Err(Failure::Config("need at least one λ0 and one trial".into()));
    }
    let configs = a.lambda0.iter().map(|&l| WindowConfig::new(a.n, a.d, a.k, l)).collect::<Result<Vec<_>, _>>()?;
    let rows = kcover::exec::map_indexed(a.trials, |t| -> Result<String, Error> {
        let cfg = &configs[t % configs.len()];
        let r = cfg.r0();
        let cloud = sample_poisson(a.n, a.d, SeedSpec::new(ctx.seed, t as u64))?;
        let index = SpatialIndex::with_default_cells(&cloud, a.k)?;
        let morse = match is_covered_morse_with(&index, a.k, r) {
            Ok(v) => Some(v.covered),
            Err(Error::OutOfRegime) => None,
            Err(e) if e.is_degenerate() => return Ok(format!("{t},{},{},{},degenerate,,", sig17(cfg.lambda0), sig17(r), cloud.len())),
            Err(e) => return Err(e),
        };
        let h = r / a.h_divisor;
        let grid = if a.refine { is_covered_grid_refined(&index, a.k, r, h)? } else { is_covered_grid_with(&index, a.k, r, h)? }.covered;
        let morse_label = morse.map_or("out_of_regime", covered_label);
        let agree = match morse {
            Some(m) if grid != Covered::Marginal => u8::from(m == grid).to_string(),
            _ => String::new(),
        };
        Ok(format!("{t},{},{},{},{morse_label},{},{agree}", sig17(cfg.lambda0), sig17(r), cloud.len(), covered_label(grid)))
    });
    let mut w = ctx.writer()?;
    writeln!(w, "trial_id,lambda0,r,point_count,morse,grid,agree")?;
    let mut degenerate = 0;
    for row in rows {
        let row = row?;
        degenerate += usize::from(row.contains(",degenerate,"));
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(TrialTally { trials: a.trials, degenerate })
}
