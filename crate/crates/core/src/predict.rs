//! Rectangle-to-rectangle prediction across scale rectangles and the MAPE
//! evaluation with the Lewis accuracy bands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MsiModel;

/// Scale-rectangle key `(k₁, k₂)`, 1-based.
pub type RectKey = (usize, usize);

/// Sub-rectangle accumulations `Y_{i,k₁k₂}` keyed by scale rectangle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RectangleTotals {
    subs: BTreeMap<RectKey, Vec<f64>>,
}

impl RectangleTotals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: RectKey, subs: Vec<f64>) -> Result<()> {
        if key.0 == 0 || key.1 == 0 {
            return Err(Error::InvalidArgument(format!("rectangle key {key:?} must be 1-based")));
        }
        if subs.is_empty() {
            return Err(Error::InvalidArgument(format!("rectangle {key:?} has no sub-rectangles")));
        }
        if let Some(v) = subs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "rectangle {key:?} has invalid accumulation {v}"
            )));
        }
        self.subs.insert(key, subs);
        Ok(())
    }

    /// Builds totals from rows ordered `(1,1), (1,2), …, (1,c), (2,1), …`,
    /// one row of sub-rectangle values per scale rectangle.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        if cols == 0 || !rows.len().is_multiple_of(cols) {
            return Err(Error::InvalidArgument(format!(
                "{} rectangle rows do not fill a grid with {cols} columns",
                rows.len()
            )));
        }
        let mut out = Self::new();
        for (i, row) in rows.iter().enumerate() {
            out.insert((i / cols + 1, i % cols + 1), row.clone())?;
        }
        Ok(out)
    }

    pub fn subs(&self, key: RectKey) -> Option<&[f64]> {
        self.subs.get(&key).map(Vec::as_slice)
    }

    pub fn total(&self, key: RectKey) -> Option<f64> {
        self.subs.get(&key).map(|v| v.iter().sum())
    }

    pub fn totals(&self) -> BTreeMap<RectKey, f64> {
        self.subs.iter().map(|(k, v)| (*k, v.iter().sum())).collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = RectKey> + '_ {
        self.subs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            subs: self
                .subs
                .iter()
                .map(|(k, v)| (*k, v.iter().map(|x| x * c).collect()))
                .collect(),
        }
    }
}

/// Multiplier `λ₁^{(l₁−k₁)H₁} λ₂^{(l₂−k₂)H₂}` taking rectangle `from` to `to`.
pub fn prediction_factor(model: &MsiModel, from: RectKey, to: RectKey) -> Result<f64> {
    if to.0 < from.0 || to.1 < from.1 {
        return Err(Error::BackwardPrediction(from.0, from.1, to.0, to.1));
    }
    let d = [(to.0 - from.0) as f64, (to.1 - from.1) as f64];
    Ok(model.lambda[0].powf(d[0] * model.hurst[0]) * model.lambda[1].powf(d[1] * model.hurst[1]))
}

/// Predicted sub-rectangle values of `to` from the observed `initial`.
pub fn predict_subs(y: &RectangleTotals, model: &MsiModel, initial: RectKey, to: RectKey) -> Result<Vec<f64>> {
    model.check_structure()?;
    let subs = y.subs(initial).ok_or(Error::MissingRectangle(initial.0, initial.1))?;
    let f = prediction_factor(model, initial, to)?;
    Ok(subs.iter().map(|v| f * v).collect())
}

/// Predicts the total of every rectangle in `y` from the initial one.
///
/// Every key in `y` must lie forward in scale of `initial`.
pub fn predict_rect(y: &RectangleTotals, model: &MsiModel, initial: RectKey) -> Result<BTreeMap<RectKey, f64>> {
    model.check_structure()?;
    let subs = y.subs(initial).ok_or(Error::MissingRectangle(initial.0, initial.1))?;
    let mut out = BTreeMap::new();
    for key in y.keys() {
        let f = prediction_factor(model, initial, key)?;
        out.insert(key, subs.iter().map(|v| f * v).sum());
    }
    Ok(out)
}

/// `|actual − predicted| / actual` per key, skipping `exclude`.
pub fn relative_errors(
    actual: &BTreeMap<RectKey, f64>,
    predicted: &BTreeMap<RectKey, f64>,
    exclude: &BTreeSet<RectKey>,
) -> Result<BTreeMap<RectKey, f64>> {
    let mut out = BTreeMap::new();
    for (&key, &a) in actual.iter().filter(|(k, _)| !exclude.contains(k)) {
        let p = *predicted.get(&key).ok_or(Error::MissingRectangle(key.0, key.1))?;
        if a == 0.0 {
            return Err(Error::ZeroActual(key.0, key.1));
        }
        out.insert(key, (a - p).abs() / a.abs());
    }
    Ok(out)
}

/// Mean absolute percentage error over the keys of `actual` not in `exclude`.
pub fn mape(
    actual: &BTreeMap<RectKey, f64>,
    predicted: &BTreeMap<RectKey, f64>,
    exclude: &BTreeSet<RectKey>,
) -> Result<f64> {
    let errs = relative_errors(actual, predicted, exclude)?;
    if errs.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(100.0 * errs.values().sum::<f64>() / errs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LewisClass {
    HighlyAccurate,
    Good,
    Reasonable,
    Inaccurate,
}

impl LewisClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::HighlyAccurate => "highly_accurate",
            Self::Good => "good",
            Self::Reasonable => "reasonable",
            Self::Inaccurate => "inaccurate",
        }
    }
}

impl fmt::Display for LewisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lewis bands with closed upper bounds: `≤10`, `≤20`, `≤50`, above.
pub fn lewis_class(gamma: f64) -> LewisClass {
    if gamma <= 10.0 {
        LewisClass::HighlyAccurate
    } else if gamma <= 20.0 {
        LewisClass::Good
    } else if gamma <= 50.0 {
        LewisClass::Reasonable
    } else {
        LewisClass::Inaccurate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub initial: RectKey,
    pub predicted: BTreeMap<RectKey, f64>,
    pub actual: BTreeMap<RectKey, f64>,
    pub per_rect_abs_rel_error: BTreeMap<RectKey, f64>,
    pub mape: f64,
    pub lewis: LewisClass,
}

#[derive(Serialize)]
struct ReportRow {
    k1: usize,
    k2: usize,
    actual: f64,
    predicted: f64,
    abs_rel_error: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    initial: [usize; 2],
    rectangles: Vec<ReportRow>,
    mape: f64,
    lewis: &'a str,
}

impl PredictionReport {
    /// Predicts from `initial`, compares against the observed totals and
    /// scores every other rectangle.
    pub fn evaluate(y: &RectangleTotals, model: &MsiModel, initial: RectKey) -> Result<Self> {
        let predicted = predict_rect(y, model, initial)?;
        let actual = y.totals();
        let exclude = BTreeSet::from([initial]);
        let per_rect_abs_rel_error = relative_errors(&actual, &predicted, &exclude)?;
        let mape = mape(&actual, &predicted, &exclude)?;
        Ok(Self {
            initial,
            predicted,
            actual,
            per_rect_abs_rel_error,
            lewis: lewis_class(mape),
            mape,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let rectangles = self
            .actual
            .iter()
            .map(|(k, a)| ReportRow {
                k1: k.0,
                k2: k.1,
                actual: *a,
                predicted: self.predicted[k],
                abs_rel_error: self.per_rect_abs_rel_error.get(k).copied(),
            })
            .collect();
        let doc = ReportJson {
            initial: [self.initial.0, self.initial.1],
            rectangles,
            mape: self.mape,
            lewis: self.lewis.as_str(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}
