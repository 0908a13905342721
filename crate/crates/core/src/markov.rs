//! Covariance propagation for separable Markov MSI fields.
//!
//! Each axis is a discrete-scale-invariant Gauss–Markov chain sampled at
//! `α^j`, with period `T` in the exponent. Everything is determined by the
//! variances `Q_j(0)` and lag-one covariances `Q_j(1)` for `j = 0..T` in
//! the first scale interval, extended by `Q_{j+T}(τ) = α^{2TH} Q_j(τ)`.
//! The joint covariance is the product of the two axis covariances.

use crate::error::{Error, Result};

/// Relative tolerance of the ratio periodicity check.
pub const PERIODICITY_TOL: f64 = 1e-10;

/// First-scale-interval statistics of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisStats {
    pub period: usize,
    pub var: Vec<f64>,
    pub cov1: Vec<f64>,
    pub hurst: f64,
    pub alpha: f64,
    axis: usize,
}

impl AxisStats {
    pub fn new(period: usize, var: Vec<f64>, cov1: Vec<f64>, hurst: f64, alpha: f64) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("period must be at least 1".into()));
        }
        for (what, v) in [("variances", &var), ("lag-one covariances", &cov1)] {
            if v.len() != period {
                return Err(Error::LengthMismatch {
                    what,
                    expected: period,
                    found: v.len(),
                });
            }
        }
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} must exceed 1")));
        }
        if !hurst.is_finite() {
            return Err(Error::InvalidArgument("Hurst exponent must be finite".into()));
        }
        if let Some(index) = var.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::ZeroVariance { axis: 0, index });
        }
        let stats = Self {
            period,
            var,
            cov1,
            hurst,
            alpha,
            axis: 0,
        };
        for j in 0..period {
            let bound = (stats.variance(j as i64) * stats.variance(j as i64 + 1)).sqrt();
            if stats.cov1[j].is_nan() || stats.cov1[j].abs() > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "lag-one covariance {} at index {j} violates Cauchy-Schwarz bound {bound}",
                    stats.cov1[j]
                )));
            }
        }
        Ok(stats)
    }

    fn scale_power(&self, j: i64) -> f64 {
        let t = self.period as i64;
        let l = j.div_euclid(t);
        self.alpha.powf(2.0 * (l * t) as f64 * self.hurst)
    }

    /// `Q_j(0)` for any integer `j`, via the scale-invariance extension.
    pub fn variance(&self, j: i64) -> f64 {
        self.scale_power(j) * self.var[j.rem_euclid(self.period as i64) as usize]
    }

    /// `Q_j(1)` for any integer `j`.
    pub fn lag_one(&self, j: i64) -> f64 {
        self.scale_power(j) * self.cov1[j.rem_euclid(self.period as i64) as usize]
    }

    /// `Q_j(1) / Q_j(0)`, periodic in `j`.
    pub fn ratio(&self, j: i64) -> f64 {
        let m = j.rem_euclid(self.period as i64) as usize;
        self.cov1[m] / self.var[m]
    }

    /// `h(α^r) = ∏_{j=0}^{r} Q_j(1)/Q_j(0)` with `h(α^{−1}) = 1`, evaluated
    /// through `h(α^{lT+m−1}) = h(α^{T−1})^l h(α^{m−1})`.
    pub fn h(&self, r: i64) -> Result<f64> {
        if r < -1 {
            return Err(Error::InvalidArgument(format!("h is defined for r >= -1, got {r}")));
        }
        let t = self.period as i64;
        let l = (r + 1) / t;
        let m = (r + 1) % t;
        let head: f64 = (0..m).map(|j| self.ratio(j)).product();
        if l == 0 {
            return Ok(head);
        }
        Ok(self.h_period().powi(l as i32) * head)
    }

    fn h_period(&self) -> f64 {
        (0..self.period as i64).map(|j| self.ratio(j)).product()
    }

    fn nonzero_h(&self, r: i64) -> Result<f64> {
        let v = self.h(r)?;
        if v == 0.0 {
            return Err(Error::ZeroVariance {
                axis: self.axis,
                index: r.max(0) as usize,
            });
        }
        Ok(v)
    }

    /// `Q_n(τ) = Cov(X(α^{n+τ}), X(α^n))` by the closed form
    /// `h(α^{T−1})^k h(α^{ν+n−1}) h(α^{n−1})^{−1} Q_n(0)` with
    /// `τ = kT + ν`; negative lags go through
    /// `Q_n(−kT+ν) = α^{−2kTH} Q_{n+ν}(kT−ν)`.
    pub fn cov(&self, n: i64, lag: i64) -> Result<f64> {
        if n < 0 {
            return Err(Error::NegativeIndex(n));
        }
        let t = self.period as i64;
        let k = lag.div_euclid(t);
        let nu = lag.rem_euclid(t);
        if k >= 0 {
            let ratio = self.h(nu + n - 1)? / self.nonzero_h(n - 1)?;
            return Ok(self.h_period().powi(k as i32) * ratio * self.variance(n));
        }
        let kk = -k;
        let back = self.alpha.powf(-2.0 * (kk * t) as f64 * self.hurst);
        Ok(back * self.cov(n + nu, kk * t - nu)?)
    }

    /// Explicit table of `Q_j(0)`, `Q_j(1)` over `periods` full periods.
    pub fn extend(&self, periods: usize) -> ExtendedAxisTable {
        let len = (periods * self.period) as i64;
        ExtendedAxisTable {
            period: self.period,
            var: (0..len).map(|j| self.variance(j)).collect(),
            cov1: (0..len).map(|j| self.lag_one(j)).collect(),
        }
    }
}

/// `Q_j(0)`, `Q_j(1)` listed over several periods.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedAxisTable {
    pub period: usize,
    pub var: Vec<f64>,
    pub cov1: Vec<f64>,
}

/// Statistics of both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstScaleStats {
    pub axes: [AxisStats; 2],
}

impl FirstScaleStats {
    pub fn new(mut axis1: AxisStats, mut axis2: AxisStats) -> Self {
        axis1.axis = 1;
        axis2.axis = 2;
        Self { axes: [axis1, axis2] }
    }
}

/// `h_i(α_i^r)` for axis `i ∈ {0, 1}`.
pub fn h_factor(stats: &FirstScaleStats, axis: usize, r: i64) -> Result<f64> {
    axis_ref(stats, axis)?.h(r)
}

fn axis_ref(stats: &FirstScaleStats, axis: usize) -> Result<&AxisStats> {
    stats
        .axes
        .get(axis)
        .ok_or_else(|| Error::InvalidArgument(format!("axis {axis} out of range")))
}

/// Separable covariance `Q^H_n(τ) = Q_{1,n₁}(τ₁) Q_{2,n₂}(τ₂)`.
pub fn mmsi_cov(stats: &FirstScaleStats, n: [i64; 2], lag: [i64; 2]) -> Result<f64> {
    Ok(stats.axes[0].cov(n[0], lag[0])? * stats.axes[1].cov(n[1], lag[1])?)
}

/// Cross-covariance of the `T₁T₂`-variate self-similar field
/// `Y_k(n) = X(α₁^{n₁T₁+k₁}, α₂^{n₂T₂+k₂})`:
/// `Cov(Y_k(n), Y_j(n+τ)) = α^{2nTH} h(α^{T−1})^τ h(α^{j−1}) h(α^{k−1})^{−1} Q_k(0)`.
///
/// The closed form needs `τT + j − k ≥ 0`; other lags fall back to the
/// negative-lag rule of [`mmsi_cov`].
pub fn cross_cov(stats: &FirstScaleStats, k: [usize; 2], j: [usize; 2], n: [i64; 2], tau: [i64; 2]) -> Result<f64> {
    let mut out = 1.0;
    for i in 0..2 {
        let ax = &stats.axes[i];
        let t = ax.period;
        if k[i] >= t || j[i] >= t {
            return Err(Error::InvalidArgument(format!(
                "component indices ({}, {}) must be below the period {t}",
                k[i], j[i]
            )));
        }
        if n[i] < 0 {
            return Err(Error::NegativeIndex(n[i]));
        }
        let pre = ax.alpha.powf(2.0 * (n[i] * t as i64) as f64 * ax.hurst);
        let (ki, ji) = (k[i] as i64, j[i] as i64);
        let factor = if tau[i] >= 1 || (tau[i] == 0 && ji >= ki) {
            ax.h_period().powi(tau[i] as i32) * ax.h(ji - 1)? / ax.nonzero_h(ki - 1)? * ax.variance(ki)
        } else {
            ax.cov(ki, tau[i] * t as i64 + ji - ki)?
        };
        out *= pre * factor;
    }
    Ok(out)
}

/// True when `Q_j(1)/Q_j(0) = Q_{j+T}(1)/Q_{j+T}(0)` holds across the table.
pub fn check_ratio_periodicity(table: &ExtendedAxisTable) -> bool {
    let t = table.period;
    if t == 0 || table.var.len() != table.cov1.len() {
        return false;
    }
    (0..table.var.len().saturating_sub(t)).all(|j| {
        let a = table.cov1[j] / table.var[j];
        let b = table.cov1[j + t] / table.var[j + t];
        a.is_finite() && b.is_finite() && (a - b).abs() <= PERIODICITY_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    })
}

/// Ratio periodicity on both axes after extending over three periods.
pub fn check_stats_periodicity(stats: &FirstScaleStats) -> bool {
    stats.axes.iter().all(|a| check_ratio_periodicity(&a.extend(3)))
}
