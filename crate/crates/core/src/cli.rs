//! Command-line surface. [`run`] parses arguments, dispatches and maps
//! failures to exit codes: 0 success, 1 computation error, 2 usage error.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimate::{
    detect_scale_intervals, hurst_prime_all, scale_from_breakpoints, summarize_axis, PartitionSamples,
    QuadraticVariationTable, QvMode, Reporting,
};
use crate::io::{self, fmt_fixed, parse_grid, parse_table, read_input, rows_to_csv, FIXTURES};
use crate::model::{Axis, Breakpoints, MsiModel, ScaleVector};
use crate::predict::{lewis_class, mape, PredictionReport, RectKey, RectangleTotals};
use crate::simulate::{simulate_gaussian, CovarianceKernel, Kernel, SfbsMode, SimulationPlan};
use crate::spectral::{density_from_r, lag_window, r_from_q, r_h_from_q, LagTable, PeriodLattice, DEFAULT_RESOLUTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "msi", version, about = "Multi-scale-invariant random field toolkit")]
pub struct Cli {
    /// Decimal places in numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    pub digits: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one exact Gaussian realization on a regular grid.
    Simulate(SimulateArgs),
    /// Fourier coefficients and spectral densities of a model's periodic counterpart.
    Spectrum(SpectrumArgs),
    /// Scale intervals, scale ratios and Hurst estimates for one axis.
    Estimate(EstimateArgs),
    /// Predict rectangle totals from an initial rectangle and score them.
    Predict(PredictArgs),
    /// MAPE and Lewis class of paired actual/predicted values.
    Evaluate(EvaluateArgs),
    /// List, validate or export the bundled tables.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Single,
    PerRectangle,
}

impl From<ModeArg> for SfbsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => SfbsMode::Single,
            ModeArg::PerRectangle => SfbsMode::PerRectangle,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Vertical,
    Horizontal,
    Time,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Vertical => Axis::Vertical,
            AxisArg::Horizontal => Axis::Horizontal,
            AxisArg::Time => Axis::Time,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QvModeArg {
    Raw,
    Increment,
}

impl From<QvModeArg> for QvMode {
    fn from(m: QvModeArg) -> Self {
        match m {
            QvModeArg::Raw => QvMode::Raw,
            QvModeArg::Increment => QvMode::Increment,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model file; a plain fractional Brownian sheet is used with --hprime instead.
    #[arg(long, conflicts_with = "hprime", required_unless_present = "hprime")]
    pub model: Option<PathBuf>,
    /// `H'₁,H'₂` of a fractional Brownian sheet.
    #[arg(long, value_parser = parse_pair_f64)]
    pub hprime: Option<[f64; 2]>,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: ModeArg,
    /// Grid size as ROWSxCOLS.
    #[arg(long, value_parser = parse_dims)]
    pub grid: [usize; 2],
    #[arg(long, value_parser = parse_pair_f64, default_value = "1,1")]
    pub origin: [f64; 2],
    #[arg(long, value_parser = parse_pair_f64, default_value = "1,1")]
    pub step: [f64; 2],
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: ModeArg,
    /// Sampling period per scale step as U1xU2; the lattice base is `λ^{1/U}`.
    #[arg(long, value_parser = parse_dims, default_value = "1x1")]
    pub period: [usize; 2],
    /// Largest lag per axis as M1xM2.
    #[arg(long, value_parser = parse_dims, default_value = "2x2")]
    pub lags: [usize; 2],
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Use the MSI-weighted coefficients instead of the periodic ones.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Heat map of the real density of component (0,0).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// One-row (or one-column) CSV of strip sums or a time series.
    #[arg(long)]
    pub series: String,
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value = "vertical")]
    pub axis: AxisArg,
    /// Only the first N values enter interval detection.
    #[arg(long)]
    pub end: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub segments: usize,
    /// Use these breakpoints instead of detecting them.
    #[arg(long, value_delimiter = ',')]
    pub breakpoints: Option<Vec<f64>>,
    /// Print the scale ratios.
    #[arg(long)]
    pub lambda_out: bool,
    /// Print the dyadic `H'` estimate of every interval.
    #[arg(long)]
    pub hprime: bool,
    /// Subinterval samples, rows ordered (n,1), (n,2), ...
    #[arg(long)]
    pub partitions: Option<String>,
    /// Scale ratios for the Hurst step; defaults to those of the breakpoints.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "raw")]
    pub mode: QvModeArg,
    /// Round as in the published tables before averaging.
    #[arg(long)]
    pub published: bool,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sub-rectangle values, one row per rectangle in order (1,1), (1,2), ...
    #[arg(long)]
    pub rects: String,
    /// Rectangles per row of the rectangle grid.
    #[arg(long, default_value_t = 3)]
    pub cols: usize,
    #[arg(long, value_parser = parse_key, default_value = "1,1")]
    pub initial: RectKey,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Two-row CSV: actual values, then predicted values.
    #[arg(long, conflicts_with_all = ["actual", "predicted"], required_unless_present_all = ["actual", "predicted"])]
    pub table: Option<String>,
    #[arg(long, requires = "predicted")]
    pub actual: Option<String>,
    #[arg(long, requires = "actual")]
    pub predicted: Option<String>,
    /// 1-based positions left out of the average.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum FixtureAction {
    List,
    Validate,
    /// Write every table plus the published model to a directory.
    Export { dir: PathBuf },
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected AxB, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad size {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad size {b:?}"))?;
    if a == 0 || b == 0 {
        return Err("sizes must be positive".into());
    }
    Ok([a, b])
}

fn parse_pair_f64(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got {s:?}"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok([a, b])
}

fn parse_key(s: &str) -> std::result::Result<RectKey, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected k1,k2, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad index {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad index {b:?}"))?;
    if a == 0 || b == 0 {
        return Err("rectangle indices are 1-based".into());
    }
    Ok((a, b))
}

/// The model fitted in the published case study.
pub fn published_model() -> MsiModel {
    MsiModel {
        lambda: [1.224, 1.303],
        hurst: [1.435, 1.765],
        hprime1: vec![0.36, 0.70, 0.59],
        hprime2: vec![0.90, 1.14, 0.84],
        breakpoints_a: Breakpoints::new(vec![0.0, 14.0, 31.0, 52.0]).expect("increasing"),
        breakpoints_b: Breakpoints::new(vec![0.0, 10.0, 23.0, 40.0]).expect("increasing"),
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_COMPUTE,
            }
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let d = cli.digits;
    match &cli.command {
        Command::Simulate(a) => simulate(a, d, out),
        Command::Spectrum(a) => spectrum(a, d, out),
        Command::Estimate(a) => estimate(a, d, out),
        Command::Predict(a) => predict(a, d, out),
        Command::Evaluate(a) => evaluate(a, d, out),
        Command::Fixtures { action } => fixtures(action, d, out),
    }
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn join(values: &[f64], d: usize) -> String {
    values.iter().map(|v| fmt_fixed(*v, d)).collect::<Vec<_>>().join(",")
}

fn kernel_from(model: Option<&Path>, hprime: Option<[f64; 2]>, mode: SfbsMode) -> Result<CovarianceKernel> {
    match (model, hprime) {
        (Some(p), _) => CovarianceKernel::sfbs(io::read_model(p)?, mode),
        (None, Some(h)) => CovarianceKernel::fbs(h),
        (None, None) => Err(Error::InvalidArgument("either --model or --hprime is required".into())),
    }
}

fn simulate(a: &SimulateArgs, d: usize, out: &mut dyn Write) -> Result<()> {
    let kernel = kernel_from(a.model.as_deref(), a.hprime, a.mode.into())?;
    let [rows, cols] = a.grid;
    let plan = SimulationPlan::grid(rows, cols, a.origin, a.step, a.seed);
    let values = simulate_gaussian(&kernel, &plan)?;
    let grid: Vec<Vec<f64>> = values.chunks(cols).map(<[f64]>::to_vec).collect();
    write_or_print(a.out.as_deref(), &rows_to_csv(&grid, d), out)?;
    if let Some(p) = &a.svg {
        std::fs::write(p, io::svg_heat("simulated field", rows, cols, &values))?;
    }
    Ok(())
}

/// Covariance table of the periodic counterpart `Y(n) = α^{−n·H} X(α^n)`
/// of an MSI kernel sampled on the lattice with base `α = λ^{1/U}`.
pub fn pc_table_from_kernel(
    kernel: &impl Kernel,
    hurst: [f64; 2],
    alpha: [f64; 2],
    lattice: PeriodLattice,
    lags: Vec<[i64; 2]>,
) -> Result<LagTable<f64>> {
    // shift n by whole periods so every sampled exponent is non-negative
    let reach: [i64; 2] = [0, 1].map(|i| lags.iter().map(|t| (-t[i]).max(0)).max().unwrap_or(0));
    let shift: [i64; 2] = [0, 1].map(|i| {
        let u = lattice.period[i] as i64;
        (reach[i] + u - 1) / u * u
    });
    let mut failure = None;
    let table = LagTable::from_fn(lattice, lags, |n, tau| {
        let a = [n[0] as i64 + shift[0], n[1] as i64 + shift[1]];
        let b = [a[0] + tau[0], a[1] + tau[1]];
        let t = [alpha[0].powi(a[0] as i32), alpha[1].powi(a[1] as i32)];
        let s = [alpha[0].powi(b[0] as i32), alpha[1].powi(b[1] as i32)];
        let w = (0..2)
            .map(|i| alpha[i].powf(-((a[i] + b[i]) as f64) * hurst[i]))
            .product::<f64>();
        match kernel.cov(t, s) {
            Ok(c) => w * c,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

fn spectrum(a: &SpectrumArgs, d: usize, out: &mut dyn Write) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let kernel = CovarianceKernel::sfbs(model.clone(), a.mode.into())?;
    let lattice = PeriodLattice::new(a.period[0], a.period[1])?;
    let alpha = [0, 1].map(|i| model.lambda[i].powf(1.0 / a.period[i] as f64));
    let lags = lag_window(a.lags[0] as i64, a.lags[1] as i64);
    let q = pc_table_from_kernel(&kernel, model.hurst, alpha, lattice, lags)?;
    let r = if a.weighted { r_h_from_q(&q, model.hurst, alpha)? } else { r_from_q(&q) };
    let dens = density_from_r(&r, a.resolution)?;
    let mut text = String::from("j1,j2,omega1,omega2,re,im\n");
    for j in lattice.indices() {
        for (ia, w1) in dens.frequencies.iter().enumerate() {
            for (ib, w2) in dens.frequencies.iter().enumerate() {
                let v = dens.get(j, ia, ib);
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    j[0],
                    j[1],
                    fmt_fixed(*w1, d),
                    fmt_fixed(*w2, d),
                    fmt_fixed(v.re, d),
                    fmt_fixed(v.im, d)
                ));
            }
        }
    }
    write_or_print(a.out.as_deref(), &text, out)?;
    if let Some(p) = &a.svg {
        let res = dens.resolution();
        let vals: Vec<f64> = (0..res * res).map(|k| dens.get([0, 0], k / res, k % res).re).collect();
        std::fs::write(p, io::svg_heat("spectral density, component (0,0)", res, res, &vals))?;
    }
    Ok(())
}

fn estimate(a: &EstimateArgs, d: usize, out: &mut dyn Write) -> Result<()> {
    let grid = parse_grid(&read_input(&a.series)?, a.header)?;
    let full = io::series_from_grid(&grid, a.axis.into())?;
    let series = match a.end {
        Some(end) => full.slice(0, end)?,
        None => full,
    };
    let breakpoints = match &a.breakpoints {
        Some(p) => Breakpoints::new(p.clone())?,
        None => detect_scale_intervals(&series, a.segments)?,
    };
    writeln!(out, "breakpoints: {}", join(breakpoints.points(), d))?;
    let scales = scale_from_breakpoints(&breakpoints)?;
    if a.lambda_out {
        writeln!(out, "lambda: {}", join(scales.values(), d))?;
        writeln!(out, "lambda_mean: {}", fmt_fixed(scales.mean(), d))?;
    }
    if a.hprime {
        writeln!(out, "hprime: {}", join(&hurst_prime_all(&series, &breakpoints)?, d))?;
    }
    if let Some(part) = &a.partitions {
        let rows = parse_table(&read_input(part)?, false)?;
        let samples = PartitionSamples::from_rows(&rows)?;
        let table = QuadraticVariationTable::from_samples(&samples, a.mode.into())?;
        let scales = match &a.scales {
            Some(s) => ScaleVector::new(s.clone())?,
            None => scales.clone(),
        };
        let reporting = if a.published { Reporting::PUBLISHED } else { Reporting::EXACT };
        let ratios = table.ratios()?;
        let sub = table.subinterval_hurst(&reporting.scales(&scales)?)?;
        for (n, (r, h)) in ratios.iter().zip(&sub).enumerate() {
            writeln!(
                out,
                "transition {}: ratio {} {} hurst {} {}",
                n + 1,
                fmt_fixed(r[0], d),
                fmt_fixed(r[1], d),
                fmt_fixed(h[0], d),
                fmt_fixed(h[1], d)
            )?;
        }
        let summary = summarize_axis(&scales, &sub, reporting)?;
        writeln!(out, "interval_hurst: {}", join(&summary.interval_hurst, d))?;
        writeln!(out, "hurst: {}", fmt_fixed(summary.hurst, d))?;
        writeln!(out, "lambda_axis: {}", fmt_fixed(summary.lambda, d))?;
    }
    if let Some(p) = &a.svg {
        let markers: Vec<f64> = breakpoints.points().iter().map(|b| b - 0.5).collect();
        std::fs::write(p, io::svg_lines(a.axis_name(), &[("sums", series.values())], &markers))?;
    }
    Ok(())
}

impl EstimateArgs {
    fn axis_name(&self) -> &'static str {
        Axis::from(self.axis).name()
    }
}

fn predict(a: &PredictArgs, d: usize, out: &mut dyn Write) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let rows = parse_table(&read_input(&a.rects)?, false)?;
    let y = RectangleTotals::from_rows(&rows, a.cols)?;
    let report = PredictionReport::evaluate(&y, &model, a.initial)?;
    writeln!(out, "rect,actual,predicted,abs_rel_error")?;
    for (k, act) in &report.actual {
        let err = report.per_rect_abs_rel_error.get(k).copied().unwrap_or(0.0);
        writeln!(
            out,
            "A{}{},{},{},{}",
            k.0,
            k.1,
            fmt_fixed(*act, d),
            fmt_fixed(report.predicted[k], d),
            fmt_fixed(err, d)
        )?;
    }
    writeln!(out, "mape: {}", fmt_fixed(report.mape, d))?;
    writeln!(out, "lewis: {}", report.lewis)?;
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json()? + "\n")?;
    }
    Ok(())
}

fn single_row(path: &str) -> Result<Vec<f64>> {
    let g = parse_grid(&read_input(path)?, false)?;
    if g.rows() != 1 && g.cols() != 1 {
        return Err(Error::InvalidField(format!("{path}: expected a single row or column")));
    }
    Ok(g.values().to_vec())
}

fn evaluate(a: &EvaluateArgs, d: usize, out: &mut dyn Write) -> Result<()> {
    let (actual, predicted) = match (&a.table, &a.actual, &a.predicted) {
        (Some(t), _, _) => {
            let rows = parse_table(&read_input(t)?, false)?;
            if rows.len() != 2 {
                return Err(Error::InvalidField(format!("{t}: expected 2 rows, got {}", rows.len())));
            }
            (rows[0].clone(), rows[1].clone())
        }
        (None, Some(x), Some(y)) => (single_row(x)?, single_row(y)?),
        _ => return Err(Error::InvalidArgument("--table or --actual with --predicted is required".into())),
    };
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "predicted values",
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    let key = |i: usize| (1, i + 1);
    let am = actual.iter().enumerate().map(|(i, v)| (key(i), *v)).collect();
    let pm = predicted.iter().enumerate().map(|(i, v)| (key(i), *v)).collect();
    let exclude: BTreeSet<RectKey> = a.exclude.iter().map(|&i| (1, i)).collect();
    let gamma = mape(&am, &pm, &exclude)?;
    writeln!(out, "mape: {}", fmt_fixed(gamma, d))?;
    writeln!(out, "lewis: {}", lewis_class(gamma))?;
    Ok(())
}

fn fixtures(action: &FixtureAction, _d: usize, out: &mut dyn Write) -> Result<()> {
    match action {
        FixtureAction::List => {
            for f in FIXTURES {
                writeln!(out, "{}\t{}x{}\t{}", f.name, f.rows, f.cols, f.description)?;
            }
        }
        FixtureAction::Validate => {
            let mut bad = 0;
            for f in FIXTURES {
                match f.validate() {
                    Ok(()) => writeln!(out, "ok\t{}", f.name)?,
                    Err(e) => {
                        bad += 1;
                        writeln!(out, "FAILED\t{}\t{e}", f.name)?;
                    }
                }
            }
            if bad > 0 {
                return Err(Error::InvalidField(format!("{bad} fixture(s) failed validation")));
            }
        }
        FixtureAction::Export { dir } => {
            std::fs::create_dir_all(dir)?;
            for f in FIXTURES {
                std::fs::write(dir.join(format!("{}.csv", f.name)), f.text()?)?;
            }
            io::write_model(dir.join("published.json"), &published_model())?;
            writeln!(out, "wrote {} fixtures and published.json to {}", FIXTURES.len(), dir.display())?;
        }
    }
    Ok(())
}
