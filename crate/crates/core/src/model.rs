//! Domain types shared by every stage of the pipeline.
//!
//! All types are plain values. Constructors that take raw data check the
//! structural invariants; [`MsiModel`] is the exception because a fitted
//! model may legitimately carry `H'` entries that cannot be simulated.

use crate::error::{Error, Result};

/// Dense row-major grid of non-negative accumulations (mm per cell).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    /// Cell side length in km.
    pub cell_size: f64,
    /// Offset of the grid corner in km.
    pub origin: (f64, f64),
}

impl GridField {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidField("grid must have at least one row and column".into()));
        }
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "grid values",
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidField(format!("grid entry {v} is not a finite non-negative value")));
        }
        Ok(Self {
            rows,
            cols,
            values,
            cell_size: 1.0,
            origin: (0.0, 0.0),
        })
    }

    pub fn with_cell_size(mut self, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidField(format!("cell size {cell_size} must be positive")));
        }
        self.cell_size = cell_size;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Direction along which a one-dimensional series was accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Row sums, one value per vertical strip.
    Vertical,
    /// Column sums, one value per horizontal strip.
    Horizontal,
    Time,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Vertical => "vertical",
            Axis::Horizontal => "horizontal",
            Axis::Time => "time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripSeries {
    pub axis: Axis,
    values: Vec<f64>,
}

impl StripSeries {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("series entry {v} is not finite")));
        }
        Ok(Self { axis, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restricts the series to `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if end > self.values.len() || start >= end {
            return Err(Error::InvalidArgument(format!(
                "range {start}..{end} is not inside a series of length {}",
                self.values.len()
            )));
        }
        Self::new(self.axis, self.values[start..end].to_vec())
    }
}

/// Strictly increasing end points of consecutive scale intervals, in strip
/// (or time-step) units. The first point is the origin of the structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints(Vec<f64>);

impl Breakpoints {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: points.len(),
            });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        if let Some(w) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateInterval(w + 1));
        }
        Ok(Self(points))
    }

    pub fn from_indices(points: &[usize]) -> Result<Self> {
        Self::new(points.iter().map(|&p| p as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of scale intervals delimited by the points.
    pub fn intervals(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Successive scale ratios between adjacent scale intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector(Vec<f64>);

impl ScaleVector {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidArgument(format!("scale ratio {r} must be positive")));
        }
        Ok(Self(ratios))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }
}

/// Hurst exponents. Entries may exceed 1 for MSI fields.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstVector(Vec<f64>);

impl HurstVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidArgument("Hurst exponents must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Fitted simple fractional Brownian sheet: one scale and Hurst exponent per
/// axis plus one `H'` per scale interval on each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MsiModel {
    pub lambda: [f64; 2],
    pub hurst: [f64; 2],
    pub hprime1: Vec<f64>,
    pub hprime2: Vec<f64>,
    pub breakpoints_a: Breakpoints,
    pub breakpoints_b: Breakpoints,
}

impl MsiModel {
    pub fn hprime(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.hprime1,
            _ => &self.hprime2,
        }
    }

    /// Checks everything except the `H' ∈ (0,1)` constraint. Estimation and
    /// prediction only need this much.
    pub fn check_structure(&self) -> Result<()> {
        for (axis, &l) in self.lambda.iter().enumerate() {
            if !(l.is_finite() && l > 1.0) {
                return Err(Error::InvalidScale { axis: axis + 1, value: l });
            }
        }
        for (axis, &h) in self.hurst.iter().enumerate() {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidHurst { axis: axis + 1, value: h });
            }
        }
        for (hp, bp, what) in [
            (&self.hprime1, &self.breakpoints_a, "Hprime1"),
            (&self.hprime2, &self.breakpoints_b, "Hprime2"),
        ] {
            if hp.len() != bp.intervals() {
                return Err(Error::LengthMismatch {
                    what,
                    expected: bp.intervals(),
                    found: hp.len(),
                });
            }
            if hp.iter().any(|h| !h.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} entries must be finite")));
            }
        }
        Ok(())
    }

    /// True when every `H'` lies strictly inside (0, 1), which the
    /// fractional Brownian sheet covariance needs to be positive definite.
    pub fn simulatable(&self) -> bool {
        self.first_invalid_hprime().is_none()
    }

    fn first_invalid_hprime(&self) -> Option<(usize, usize, f64)> {
        [&self.hprime1, &self.hprime2]
            .iter()
            .enumerate()
            .flat_map(|(axis, hp)| hp.iter().enumerate().map(move |(i, &h)| (axis + 1, i + 1, h)))
            .find(|&(_, _, h)| !(h > 0.0 && h < 1.0))
    }
}

/// Strict validation, as required before simulating from a model.
pub fn validate_model(m: MsiModel) -> Result<MsiModel> {
    m.check_structure()?;
    if let Some((axis, index, value)) = m.first_invalid_hprime() {
        return Err(Error::InvalidHurstPrime { axis, index, value });
    }
    Ok(m)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
