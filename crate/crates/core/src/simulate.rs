//! Covariance kernels for fractional Brownian sheets and their simple
//! (piecewise-modulated) MSI counterparts, plus exact Gaussian simulation by
//! dense Cholesky factorization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{validate_model, MsiModel};

pub type Point = [f64; 2];

/// Largest jitter tried before giving up on a factorization.
pub const MAX_JITTER: f64 = 1e-6;
pub const DEFAULT_JITTER: f64 = 1e-10;

/// Normalized fractional Brownian sheet covariance
/// `¼ ∏ᵢ (|tᵢ|^{2Hᵢ} + |sᵢ|^{2Hᵢ} − |tᵢ − sᵢ|^{2Hᵢ})`.
pub fn fbs_cov(t: Point, s: Point, hprime: [f64; 2]) -> Result<f64> {
    check_hprime(hprime)?;
    Ok(fbs_cov_unchecked(t, s, hprime))
}

#[inline]
fn fbs_cov_unchecked(t: Point, s: Point, hprime: [f64; 2]) -> f64 {
    let mut out = 0.25;
    for i in 0..2 {
        let e = 2.0 * hprime[i];
        out *= t[i].abs().powf(e) + s[i].abs().powf(e) - (t[i] - s[i]).abs().powf(e);
    }
    out
}

fn check_hprime(hprime: [f64; 2]) -> Result<()> {
    for (axis, &h) in hprime.iter().enumerate() {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidHurstPrime { axis: axis + 1, index: 1, value: h });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfbsMode {
    /// One sheet over the whole quadrant, indexed by the first `H'` of each axis.
    Single,
    /// An independent sheet per scale rectangle with that rectangle's `H'`.
    PerRectangle,
}

/// 1-based scale-rectangle index of `t ≥ 1` for ratio `lambda`, using the
/// half-open cells `[λ^{n−1}, λ^n)`.
pub fn rectangle_index(t: f64, lambda: f64) -> usize {
    let mut n = (t.ln() / lambda.ln()).floor() as i64 + 1;
    // floor of a rounded logarithm can land one cell off at the edges
    if t < lambda.powi((n - 1) as i32) {
        n -= 1;
    } else if t >= lambda.powi(n as i32) {
        n += 1;
    }
    n.max(1) as usize
}

/// Simple fractional Brownian sheet covariance.
///
/// In [`SfbsMode::Single`] the prefactor of a point in rectangle `(n₁, n₂)`
/// is `λ₁^{n₁(H₁−H'₁)} λ₂^{n₂(H₂−H'₂)}`; in [`SfbsMode::PerRectangle`] the
/// exponents accumulate `Σ_{k≤n}(H − H'_k)` and points in distinct
/// rectangles are uncorrelated.
pub fn sfbs_cov(t: Point, s: Point, model: &MsiModel, mode: SfbsMode) -> Result<f64> {
    model.check_structure()?;
    if !model.simulatable() {
        validate_model(model.clone())?;
    }
    sfbs_cov_unchecked(t, s, model, mode)
}

fn sfbs_cov_unchecked(t: Point, s: Point, model: &MsiModel, mode: SfbsMode) -> Result<f64> {
    for p in [t, s] {
        if !(p[0] >= 1.0 && p[1] >= 1.0 && p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::OutOfDomain(p[0], p[1]));
        }
    }
    let nt = [rectangle_index(t[0], model.lambda[0]), rectangle_index(t[1], model.lambda[1])];
    let ns = [rectangle_index(s[0], model.lambda[0]), rectangle_index(s[1], model.lambda[1])];
    match mode {
        SfbsMode::Single => {
            let hp = [model.hprime1[0], model.hprime2[0]];
            let pre = |n: [usize; 2]| -> f64 {
                (0..2)
                    .map(|i| model.lambda[i].powf(n[i] as f64 * (model.hurst[i] - hp[i])))
                    .product()
            };
            Ok(pre(nt) * pre(ns) * fbs_cov_unchecked(t, s, hp))
        }
        SfbsMode::PerRectangle => {
            for (p, n) in [(t, nt), (s, ns)] {
                if n[0] > model.hprime1.len() || n[1] > model.hprime2.len() {
                    return Err(Error::OutOfDomain(p[0], p[1]));
                }
            }
            if nt != ns {
                return Ok(0.0);
            }
            let hp = [model.hprime1[nt[0] - 1], model.hprime2[nt[1] - 1]];
            let mut pre = 1.0;
            for (i, &n) in nt.iter().enumerate() {
                let acc: f64 = model.hprime(i)[..n].iter().map(|h| model.hurst[i] - h).sum();
                pre *= model.lambda[i].powf(acc);
            }
            Ok(pre * pre * fbs_cov_unchecked(t, s, hp))
        }
    }
}

/// A symmetric positive semidefinite covariance function.
pub trait Kernel {
    fn cov(&self, t: Point, s: Point) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub enum CovarianceKernel {
    Fbs { hprime: [f64; 2] },
    SfbsSingle(MsiModel),
    SfbsPerRectangle(MsiModel),
}

impl CovarianceKernel {
    pub fn fbs(hprime: [f64; 2]) -> Result<Self> {
        check_hprime(hprime)?;
        Ok(Self::Fbs { hprime })
    }

    pub fn sfbs(model: MsiModel, mode: SfbsMode) -> Result<Self> {
        let model = validate_model(model)?;
        Ok(match mode {
            SfbsMode::Single => Self::SfbsSingle(model),
            SfbsMode::PerRectangle => Self::SfbsPerRectangle(model),
        })
    }
}

impl Kernel for CovarianceKernel {
    fn cov(&self, t: Point, s: Point) -> Result<f64> {
        match self {
            Self::Fbs { hprime } => Ok(fbs_cov_unchecked(t, s, *hprime)),
            Self::SfbsSingle(m) => sfbs_cov_unchecked(t, s, m, SfbsMode::Single),
            Self::SfbsPerRectangle(m) => sfbs_cov_unchecked(t, s, m, SfbsMode::PerRectangle),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub points: Vec<Point>,
    pub seed: u64,
    /// Diagonal regularization relative to the largest variance.
    pub jitter: f64,
}

impl SimulationPlan {
    pub fn new(points: Vec<Point>, seed: u64) -> Self {
        Self {
            points,
            seed,
            jitter: DEFAULT_JITTER,
        }
    }

    /// Regular `rows × cols` grid `t = (origin₁ + r·step₁, origin₂ + c·step₂)`,
    /// row-major.
    pub fn grid(rows: usize, cols: usize, origin: Point, step: Point, seed: u64) -> Self {
        let points = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| [origin[0] + r as f64 * step[0], origin[1] + c as f64 * step[1]]))
            .collect();
        Self::new(points, seed)
    }
}

/// Dense covariance matrix of a kernel over a point list, row-major.
pub fn covariance_matrix(kernel: &impl Kernel, points: &[Point]) -> Result<Vec<f64>> {
    let n = points.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let c = kernel.cov(points[i], points[j])?;
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    Ok(m)
}

/// Lower Cholesky factor of a PSD matrix. Zero pivots are accepted when the
/// remaining column is zero as well, so singular but valid matrices (for
/// example the all-zero kernel) factor without jitter.
fn cholesky_psd(a: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -tol {
            return None;
        }
        if d <= tol {
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if s.abs() > 1e5 * tol {
                    return None;
                }
            }
            continue;
        }
        let piv = d.sqrt();
        l[j * n + j] = piv;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / piv;
        }
    }
    Some(l)
}

/// Factors the covariance over `points`, escalating the relative diagonal
/// jitter by decades from `jitter` up to [`MAX_JITTER`].
pub fn factorize(kernel: &impl Kernel, points: &[Point], jitter: f64) -> Result<Vec<f64>> {
    let n = points.len();
    let cov = covariance_matrix(kernel, points)?;
    let scale = (0..n).map(|i| cov[i * n + i].abs()).fold(0.0, f64::max);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut eps = jitter.max(0.0);
    loop {
        let mut a = cov.clone();
        for i in 0..n {
            a[i * n + i] += eps * scale;
        }
        if let Some(l) = cholesky_psd(&a, n, tol) {
            return Ok(l);
        }
        if eps >= MAX_JITTER {
            return Err(Error::FactorizationFailure { jitter: eps });
        }
        eps = if eps == 0.0 { DEFAULT_JITTER } else { (eps * 10.0).min(MAX_JITTER) };
    }
}

/// Draws one centered Gaussian sample over `plan.points`; the output is
/// aligned with the point list and is a pure function of the seed.
pub fn simulate_gaussian(kernel: &impl Kernel, plan: &SimulationPlan) -> Result<Vec<f64>> {
    let l = factorize(kernel, &plan.points, plan.jitter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    Ok(draw(&l, plan.points.len(), &mut rng))
}

/// Draws `replicates` samples sharing one factorization.
pub fn simulate_replicates(kernel: &impl Kernel, plan: &SimulationPlan, replicates: usize) -> Result<Vec<Vec<f64>>> {
    let n = plan.points.len();
    let l = factorize(kernel, &plan.points, plan.jitter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    Ok((0..replicates).map(|_| draw(&l, n, &mut rng)).collect())
}

fn draw(l: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    (0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect()
}
