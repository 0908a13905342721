//! Estimation of the MSI structure from accumulated strip or time series:
//! scale intervals, scale ratios, quadratic-variation Hurst exponents, the
//! dyadic within-interval `H'`, and assembly of an [`MsiModel`].

use crate::error::{Error, Result};
use crate::model::{mean, Breakpoints, MsiModel, ScaleVector, StripSeries};

/// Shortest segment accepted by [`detect_scale_intervals`].
pub const MIN_SEGMENT: usize = 3;

/// Sum of squared residuals of the least-squares quadratic through
/// `y[0..]` at abscissae `0, 1, …`.
///
/// Equally spaced abscissae make `{1, x − x̄, (x − x̄)² − mean}` an
/// orthogonal basis, so the fit reduces to three projections.
fn quadratic_rss(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = y.iter().sum::<f64>() / n;
    let x2bar = y.iter().enumerate().map(|(i, _)| (i as f64 - xbar).powi(2)).sum::<f64>() / n;
    let (mut syy, mut sxy, mut sxx, mut sqy, mut sqq) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let x = i as f64 - xbar;
        let q = x * x - x2bar;
        let d = v - ybar;
        syy += d * d;
        sxy += x * d;
        sxx += x * x;
        sqy += q * d;
        sqq += q * q;
    }
    let mut rss = syy;
    if sxx > 0.0 {
        rss -= sxy * sxy / sxx;
    }
    if sqq > 0.0 {
        rss -= sqy * sqy / sqq;
    }
    rss.max(0.0)
}

/// Splits a series into `segments` consecutive pieces, each fitted by its
/// own least-squares quadratic, minimizing the total squared residual.
///
/// The search is exhaustive (dynamic programming over all integer
/// breakpoints, segments of at least [`MIN_SEGMENT`] points). The returned
/// breakpoints include `0` and the series length; segment `k` covers
/// indices `b[k]..b[k+1]`.
pub fn detect_scale_intervals(series: &StripSeries, segments: usize) -> Result<Breakpoints> {
    let y = series.values();
    let len = y.len();
    if segments == 0 {
        return Err(Error::InvalidArgument("at least one segment is required".into()));
    }
    if len < MIN_SEGMENT * segments {
        return Err(Error::TooShort {
            needed: MIN_SEGMENT * segments,
            got: len,
        });
    }
    // cost[i][j]: residual of the segment i..j
    let mut cost = vec![vec![f64::INFINITY; len + 1]; len + 1];
    for i in 0..len {
        for j in i + MIN_SEGMENT..=len {
            cost[i][j] = quadratic_rss(&y[i..j]);
        }
    }
    // best[k][j]: optimal cost of splitting 0..j into k segments
    let mut best = vec![vec![f64::INFINITY; len + 1]; segments + 1];
    let mut from = vec![vec![0usize; len + 1]; segments + 1];
    best[0][0] = 0.0;
    for k in 1..=segments {
        for j in k * MIN_SEGMENT..=len {
            for i in (k - 1) * MIN_SEGMENT..=j - MIN_SEGMENT {
                let c = best[k - 1][i] + cost[i][j];
                if c < best[k][j] {
                    best[k][j] = c;
                    from[k][j] = i;
                }
            }
        }
    }
    let mut points = vec![len];
    let mut j = len;
    for k in (1..=segments).rev() {
        j = from[k][j];
        points.push(j);
    }
    points.reverse();
    Breakpoints::from_indices(&points)
}

/// Successive length ratios `(b_{n+1} − b_n) / (b_n − b_{n−1})`.
pub fn scale_from_breakpoints(b: &Breakpoints) -> Result<ScaleVector> {
    let p = b.points();
    if p.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: p.len() });
    }
    let mut out = Vec::with_capacity(p.len() - 2);
    for n in 1..p.len() - 1 {
        let prev = p[n] - p[n - 1];
        if prev <= 0.0 || p[n + 1] - p[n] <= 0.0 {
            return Err(Error::DegenerateInterval(n));
        }
        out.push((p[n + 1] - p[n]) / prev);
    }
    ScaleVector::new(out)
}

/// How the terms of a quadratic variation are formed from listed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QvMode {
    /// Square the listed values themselves, all `l_m` of them. This is the
    /// convention that reproduces the published ratio tables.
    #[default]
    Raw,
    /// Square successive increments `x_k − x_{k−1}`, `k = 2..l_m`.
    Increment,
}

impl std::str::FromStr for QvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "increment" => Ok(Self::Increment),
            other => Err(Error::InvalidArgument(format!("unknown quadratic variation mode {other:?}"))),
        }
    }
}

/// `SS = (1/l_m) Σ y_k²` over one subinterval's partition values.
pub fn quadratic_variation(values: &[f64], l_m: usize, mode: QvMode) -> Result<f64> {
    if values.len() != l_m {
        return Err(Error::LengthMismatch {
            what: "partition values",
            expected: l_m,
            found: values.len(),
        });
    }
    if l_m == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let sum: f64 = match mode {
        QvMode::Raw => values.iter().map(|v| v * v).sum(),
        QvMode::Increment => values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum(),
    };
    Ok(sum / l_m as f64)
}

/// `log(ratio) / (2 log λ)`.
pub fn hurst_from_ratio(ratio: f64, lambda: f64) -> Result<f64> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    if !(lambda.is_finite() && lambda > 0.0) || lambda == 1.0 {
        return Err(Error::UnitScale(lambda));
    }
    Ok(ratio.ln() / (2.0 * lambda.ln()))
}

/// Dyadic estimate of `H'` on scale interval `interval` (0-based):
///
/// `log( Σ_k (X_{a+2k+2} − X_{a+2k})² / Σ_k (X_{a+k+1} − X_{a+k})² ) / (2 log 2)`
///
/// with `k = 1..⌊L/2⌋−1`, `a` the interval start, `L` its length, and `X`
/// indexed from 1 as strips are.
pub fn hurst_prime_dyadic(series: &StripSeries, b: &Breakpoints, interval: usize) -> Result<f64> {
    let p = b.points();
    if interval + 1 >= p.len() {
        return Err(Error::InvalidArgument(format!(
            "interval {interval} does not exist; breakpoints delimit {}",
            b.intervals()
        )));
    }
    let start = integral(p[interval])?;
    let end = integral(p[interval + 1])?;
    let length = end - start;
    if length < 4 {
        return Err(Error::TooShort { needed: 4, got: length });
    }
    let x = series.values();
    if end > x.len() {
        return Err(Error::TooShort { needed: end, got: x.len() });
    }
    let at = |i: usize| x[i - 1];
    let terms = length / 2 - 1;
    let (mut coarse, mut fine) = (0.0, 0.0);
    for k in 1..=terms {
        coarse += (at(start + 2 * k + 2) - at(start + 2 * k)).powi(2);
        fine += (at(start + k + 1) - at(start + k)).powi(2);
    }
    if fine == 0.0 || coarse == 0.0 {
        return Err(Error::ZeroDenominator(interval));
    }
    Ok((coarse / fine).ln() / (2.0 * 2f64.ln()))
}

fn integral(p: f64) -> Result<usize> {
    if p < 0.0 || p.fract() != 0.0 {
        return Err(Error::NonIntegralBreakpoint(p));
    }
    Ok(p as usize)
}

/// `H'` for every interval delimited by `b`.
pub fn hurst_prime_all(series: &StripSeries, b: &Breakpoints) -> Result<Vec<f64>> {
    (0..b.intervals()).map(|i| hurst_prime_dyadic(series, b, i)).collect()
}

/// Equally spaced sampling positions for the two halves of one scale
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SubintervalLayout {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl SubintervalLayout {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 samples per subinterval, got {points}")));
        }
        if end - start < 2.0 || (end - start).is_nan() {
            return Err(Error::DegenerateInterval(0));
        }
        Ok(Self { start, end, points })
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + self.end) / 2.0
    }

    /// 0-based series positions of the samples. Each half spans from its
    /// first strip to its last strip, so the positions for the interval
    /// `[start, end)` are `linspace(start, mid − 1)` and
    /// `linspace(mid, end − 1)`.
    pub fn positions(&self) -> [Vec<f64>; 2] {
        let mid = self.midpoint();
        let lin = |a: f64, b: f64| -> Vec<f64> {
            let step = (b - a) / (self.points - 1) as f64;
            (0..self.points).map(|k| a + k as f64 * step).collect()
        };
        [lin(self.start, mid - 1.0), lin(mid, self.end - 1.0)]
    }

    /// Samples the series at [`positions`](Self::positions) by linear
    /// interpolation.
    pub fn sample(&self, series: &StripSeries) -> Result<[Vec<f64>; 2]> {
        let x = series.values();
        let interp = |pos: f64| -> Result<f64> {
            if pos < 0.0 || pos > (x.len() - 1) as f64 {
                return Err(Error::OutOfExtent {
                    value: pos,
                    extent: x.len(),
                });
            }
            let i = pos.floor() as usize;
            let f = pos - i as f64;
            Ok(if f == 0.0 { x[i] } else { x[i] * (1.0 - f) + x[i + 1] * f })
        };
        let [a, b] = self.positions();
        Ok([
            a.into_iter().map(interp).collect::<Result<_>>()?,
            b.into_iter().map(interp).collect::<Result<_>>()?,
        ])
    }
}

/// Partition values `x_{(n,m)k}` for each scale interval `n` and subinterval
/// `m ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSamples {
    pub intervals: Vec<[Vec<f64>; 2]>,
}

impl PartitionSamples {
    pub fn from_layouts(series: &StripSeries, layouts: &[SubintervalLayout]) -> Result<Self> {
        Ok(Self {
            intervals: layouts.iter().map(|l| l.sample(series)).collect::<Result<_>>()?,
        })
    }

    /// Rows ordered `(n=1,m=1), (n=1,m=2), (n=2,m=1), …` as in the fixtures.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if !rows.len().is_multiple_of(2) || rows.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "expected an even number of subinterval rows, got {}",
                rows.len()
            )));
        }
        Ok(Self {
            intervals: rows.chunks(2).map(|c| [c[0].clone(), c[1].clone()]).collect(),
        })
    }
}

/// `SS_{n,m}` for every scale interval and subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariationTable {
    pub ss: Vec<[f64; 2]>,
    pub mode: QvMode,
}

impl QuadraticVariationTable {
    pub fn from_samples(samples: &PartitionSamples, mode: QvMode) -> Result<Self> {
        let ss = samples
            .intervals
            .iter()
            .map(|[a, b]| Ok([quadratic_variation(a, a.len(), mode)?, quadratic_variation(b, b.len(), mode)?]))
            .collect::<Result<_>>()?;
        Ok(Self { ss, mode })
    }

    /// `SS_{n+1,m} / SS_{n,m}` for consecutive intervals.
    pub fn ratios(&self) -> Result<Vec<[f64; 2]>> {
        self.ss
            .windows(2)
            .enumerate()
            .map(|(n, w)| {
                let mut out = [0.0; 2];
                for m in 0..2 {
                    if w[0][m] == 0.0 {
                        return Err(Error::ZeroDenominator(n));
                    }
                    out[m] = w[1][m] / w[0][m];
                }
                Ok(out)
            })
            .collect()
    }

    /// Hurst estimates per transition `n` and subinterval `m`, using the
    /// scale ratio of transition `n` for both subintervals.
    pub fn subinterval_hurst(&self, scales: &ScaleVector) -> Result<Vec<[f64; 2]>> {
        let ratios = self.ratios()?;
        if ratios.len() != scales.values().len() {
            return Err(Error::LengthMismatch {
                what: "scale ratios",
                expected: ratios.len(),
                found: scales.values().len(),
            });
        }
        ratios
            .iter()
            .zip(scales.values())
            .map(|(r, &l)| Ok([hurst_from_ratio(r[0], l)?, hurst_from_ratio(r[1], l)?]))
            .collect()
    }
}

/// Rounding applied between averaging stages.
///
/// The published analysis truncates scale ratios (and their mean) to 3
/// decimals, rounds Hurst values to 2, and averages the reported numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Reporting {
    pub scale_digits: Option<u32>,
    pub hurst_digits: Option<u32>,
}

impl Reporting {
    pub const EXACT: Self = Self {
        scale_digits: None,
        hurst_digits: None,
    };
    pub const PUBLISHED: Self = Self {
        scale_digits: Some(3),
        hurst_digits: Some(2),
    };
}

/// Decimal rounding, halves away from zero. A relative nudge keeps values
/// such as `1.455` (stored just below the half) on the intended side.
pub fn round_half_away(x: f64, digits: u32) -> f64 {
    let p = 10f64.powi(digits as i32);
    let y = x * p;
    let nudged = y + y.signum() * y.abs().max(1.0) * 1e-12;
    nudged.round() / p
}

/// Decimal truncation toward zero, with the same nudge as
/// [`round_half_away`] so that `1.3` stays `1.3`.
pub fn truncate_digits(x: f64, digits: u32) -> f64 {
    let p = 10f64.powi(digits as i32);
    let y = x * p;
    (y + y.signum() * y.abs().max(1.0) * 1e-12).trunc() / p
}

fn maybe_round(x: f64, digits: Option<u32>) -> f64 {
    digits.map_or(x, |d| round_half_away(x, d))
}

fn maybe_truncate(x: f64, digits: Option<u32>) -> f64 {
    digits.map_or(x, |d| truncate_digits(x, d))
}

impl Reporting {
    /// Scale ratios as reported, for use in the Hurst step.
    pub fn scales(&self, scales: &ScaleVector) -> Result<ScaleVector> {
        ScaleVector::new(scales.values().iter().map(|&l| maybe_truncate(l, self.scale_digits)).collect())
    }
}

/// Per-axis inputs to model assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFit {
    pub scales: ScaleVector,
    /// `H_(n,m)` for each transition `n` and subinterval `m`.
    pub subinterval_hurst: Vec<[f64; 2]>,
    pub hprime: Vec<f64>,
    pub breakpoints: Breakpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub lambda: f64,
    /// `H_{i,n}`: mean over the two subintervals of transition `n`.
    pub interval_hurst: Vec<f64>,
    pub hurst: f64,
}

/// Two-stage averaging: subinterval pair → interval `H_{i,n}`, intervals
/// → axis `H_i`; the scale ratios average to the axis `λ_i`.
pub fn summarize_axis(scales: &ScaleVector, subinterval_hurst: &[[f64; 2]], reporting: Reporting) -> Result<AxisSummary> {
    if subinterval_hurst.len() != scales.values().len() {
        return Err(Error::LengthMismatch {
            what: "subinterval Hurst rows",
            expected: scales.values().len(),
            found: subinterval_hurst.len(),
        });
    }
    if subinterval_hurst.is_empty() {
        return Err(Error::EmptySet);
    }
    let scales = reporting.scales(scales)?;
    let interval_hurst: Vec<f64> = subinterval_hurst
        .iter()
        .map(|pair| {
            let a = maybe_round(pair[0], reporting.hurst_digits);
            let b = maybe_round(pair[1], reporting.hurst_digits);
            maybe_round((a + b) / 2.0, reporting.hurst_digits)
        })
        .collect();
    Ok(AxisSummary {
        lambda: maybe_truncate(scales.mean(), reporting.scale_digits),
        hurst: mean(&interval_hurst),
        interval_hurst,
    })
}

/// Packages per-axis fits into an [`MsiModel`]. The model is checked
/// structurally only; `H'` outside (0, 1) is carried through and shows up
/// as `simulatable() == false`.
pub fn assemble_model(vertical: &AxisFit, horizontal: &AxisFit, reporting: Reporting) -> Result<MsiModel> {
    let v = summarize_axis(&vertical.scales, &vertical.subinterval_hurst, reporting)?;
    let h = summarize_axis(&horizontal.scales, &horizontal.subinterval_hurst, reporting)?;
    let model = MsiModel {
        lambda: [v.lambda, h.lambda],
        hurst: [v.hurst, h.hurst],
        hprime1: vertical.hprime.clone(),
        hprime2: horizontal.hprime.clone(),
        breakpoints_a: vertical.breakpoints.clone(),
        breakpoints_b: horizontal.breakpoints.clone(),
    };
    model.check_structure()?;
    Ok(model)
}
