//! Finite spectral analysis of periodically correlated lattice fields.
//!
//! Covariances `Q_n(τ)` are stored for every `n` in one period lattice
//! `D_U = {0..U₁} × {0..U₂}` and every lag `τ` in a caller-supplied finite
//! window. The Fourier coefficients `R_j(τ)` over `j ∈ D_U` form an exact
//! discrete duality with `Q`; densities are truncated trigonometric sums
//! over the lag window, so they are estimators rather than exact transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lamperti::LatticeFunction;

/// Imaginary residue tolerated when folding complex sums back to reals.
pub const REAL_TOL: f64 = 1e-10;

pub const DEFAULT_RESOLUTION: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodLattice {
    pub period: [usize; 2],
}

impl PeriodLattice {
    pub fn new(u1: usize, u2: usize) -> Result<Self> {
        if u1 == 0 || u2 == 0 {
            return Err(Error::InvalidArgument("period must be at least 1 on each axis".into()));
        }
        Ok(Self { period: [u1, u2] })
    }

    pub fn size(&self) -> usize {
        self.period[0] * self.period[1]
    }

    /// Position of `j` in the ordering `ω(j) = j₂U₁ + j₁` (0-based).
    pub fn omega(&self, j: [usize; 2]) -> usize {
        j[1] * self.period[0] + j[0]
    }

    /// Inverse of [`omega`](Self::omega).
    pub fn index(&self, omega: usize) -> [usize; 2] {
        [omega % self.period[0], omega / self.period[0]]
    }

    /// All of `D_U` in `ω` order.
    pub fn indices(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        (0..self.size()).map(|w| self.index(w))
    }

    /// Reduces an arbitrary index modulo the period.
    pub fn reduce(&self, n: [i64; 2]) -> [usize; 2] {
        [
            n[0].rem_euclid(self.period[0] as i64) as usize,
            n[1].rem_euclid(self.period[1] as i64) as usize,
        ]
    }

    /// `exp(sign · 2πi (n₁j₁/U₁ + n₂j₂/U₂))`.
    fn character(&self, n: [usize; 2], j: [usize; 2], sign: f64) -> Complex64 {
        let phase = 2.0 * PI
            * ((n[0] * j[0]) as f64 / self.period[0] as f64 + (n[1] * j[1]) as f64 / self.period[1] as f64);
        Complex64::from_polar(1.0, sign * phase)
    }
}

/// Values over `D_U × lags`, indexed by lattice position then lag.
#[derive(Debug, Clone, PartialEq)]
pub struct LagTable<T> {
    pub lattice: PeriodLattice,
    lags: Vec<[i64; 2]>,
    values: Vec<T>,
}

/// `Q_n(τ) = Cov(Y(n), Y(n+τ))`, periodic in `n`.
pub type PcCovarianceTable = LagTable<f64>;
/// Fourier coefficients `R_j(τ)`.
pub type RTable = LagTable<Complex64>;

impl<T: Copy + Default> LagTable<T> {
    pub fn zeros(lattice: PeriodLattice, lags: Vec<[i64; 2]>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidArgument("lag window is empty".into()));
        }
        let mut seen = lags.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != lags.len() {
            return Err(Error::InvalidArgument("lag window has duplicate lags".into()));
        }
        let values = vec![T::default(); lattice.size() * lags.len()];
        Ok(Self { lattice, lags, values })
    }

    pub fn from_fn(lattice: PeriodLattice, lags: Vec<[i64; 2]>, mut f: impl FnMut([usize; 2], [i64; 2]) -> T) -> Result<Self> {
        let mut t = Self::zeros(lattice, lags)?;
        for w in 0..lattice.size() {
            let n = lattice.index(w);
            for l in 0..t.lags.len() {
                let tau = t.lags[l];
                t.values[w * t.lags.len() + l] = f(n, tau);
            }
        }
        Ok(t)
    }

    pub fn lags(&self) -> &[[i64; 2]] {
        &self.lags
    }

    pub fn lag_position(&self, tau: [i64; 2]) -> Option<usize> {
        self.lags.iter().position(|l| *l == tau)
    }

    /// Value at lattice index `n` (reduced mod `U`) and lag `tau`.
    pub fn get(&self, n: [i64; 2], tau: [i64; 2]) -> Option<T> {
        let w = self.lattice.omega(self.lattice.reduce(n));
        self.lag_position(tau).map(|l| self.values[w * self.lags.len() + l])
    }

    pub fn set(&mut self, n: [usize; 2], tau: [i64; 2], value: T) -> Result<()> {
        let l = self
            .lag_position(tau)
            .ok_or_else(|| Error::InvalidArgument(format!("lag {tau:?} is not in the window")))?;
        let w = self.lattice.omega(self.lattice.reduce([n[0] as i64, n[1] as i64]));
        self.values[w * self.lags.len() + l] = value;
        Ok(())
    }

    #[inline]
    fn at(&self, w: usize, l: usize) -> T {
        self.values[w * self.lags.len() + l]
    }

    /// Iterates `(n, τ, value)` in `ω` order then lag order.
    pub fn iter(&self) -> impl Iterator<Item = ([usize; 2], [i64; 2], T)> + '_ {
        (0..self.lattice.size()).flat_map(move |w| {
            let n = self.lattice.index(w);
            self.lags.iter().enumerate().map(move |(l, tau)| (n, *tau, self.at(w, l)))
        })
    }
}

/// Symmetric rectangular lag window `|τ₁| ≤ m₁, |τ₂| ≤ m₂`.
pub fn lag_window(max1: i64, max2: i64) -> Vec<[i64; 2]> {
    (-max1..=max1).flat_map(|a| (-max2..=max2).map(move |b| [a, b])).collect()
}

fn forward(q: &LagTable<f64>, weight: impl Fn([usize; 2], [i64; 2]) -> f64) -> RTable {
    let lat = q.lattice;
    let norm = 1.0 / lat.size() as f64;
    let nl = q.lags.len();
    let mut out = LagTable::<Complex64>::zeros(lat, q.lags.clone()).expect("same window");
    for wj in 0..lat.size() {
        let j = lat.index(wj);
        for l in 0..nl {
            let tau = q.lags[l];
            let mut acc = Complex64::new(0.0, 0.0);
            for wn in 0..lat.size() {
                let n = lat.index(wn);
                acc += lat.character(n, j, 1.0) * (weight(n, tau) * q.at(wn, l));
            }
            out.values[wj * nl + l] = acc * norm;
        }
    }
    out
}

/// `R_j(τ) = (1/U₁U₂) Σ_{n∈D_U} e^{2πi(n₁j₁/U₁ + n₂j₂/U₂)} Q_n(τ)`.
pub fn r_from_q(q: &PcCovarianceTable) -> RTable {
    forward(q, |_, _| 1.0)
}

/// `Q_n(τ) = Σ_{j∈D_U} e^{−2πi(n₁j₁/U₁ + n₂j₂/U₂)} R_j(τ)`, folded to reals.
pub fn q_from_r(r: &RTable) -> Result<PcCovarianceTable> {
    let lat = r.lattice;
    let nl = r.lags.len();
    let mut out = LagTable::<f64>::zeros(lat, r.lags.clone())?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for wn in 0..lat.size() {
        let n = lat.index(wn);
        for l in 0..nl {
            let mut acc = Complex64::new(0.0, 0.0);
            for wj in 0..lat.size() {
                let j = lat.index(wj);
                acc += lat.character(n, j, -1.0) * r.at(wj, l);
            }
            worst = worst.max(acc.im.abs());
            scale = scale.max(acc.re.abs());
            out.values[wn * nl + l] = acc.re;
        }
    }
    if worst > REAL_TOL * scale.max(1.0) {
        return Err(Error::NonRealResidue(worst));
    }
    Ok(out)
}

/// MSI weighting `α₁^{(2m₁+τ₁)H₁} α₂^{(2m₂+τ₂)H₂}` of the sampled field.
pub fn msi_weight(m: [usize; 2], tau: [i64; 2], hurst: [f64; 2], alpha: [f64; 2]) -> f64 {
    (0..2)
        .map(|i| alpha[i].powf((2.0 * m[i] as f64 + tau[i] as f64) * hurst[i]))
        .product()
}

/// `Q^H_m(τ) = α₁^{(2m₁+τ₁)H₁} α₂^{(2m₂+τ₂)H₂} Q_m(τ)` for `m ∈ D_U`.
///
/// The result is indexed by `m ∈ D_U` without periodic reduction: the
/// weighted covariance is not periodic.
pub fn msi_cov_from_pc(q: &PcCovarianceTable, hurst: [f64; 2], alpha: [f64; 2]) -> Result<LagTable<f64>> {
    if alpha.iter().any(|a| a.is_nan() || *a <= 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let mut out = q.clone();
    let nl = q.lags.len();
    for wn in 0..q.lattice.size() {
        let m = q.lattice.index(wn);
        for l in 0..nl {
            out.values[wn * nl + l] *= msi_weight(m, q.lags[l], hurst, alpha);
        }
    }
    Ok(out)
}

/// `R^H_j(τ)`: the Fourier coefficients of the MSI-weighted covariance.
pub fn r_h_from_q(q: &PcCovarianceTable, hurst: [f64; 2], alpha: [f64; 2]) -> Result<RTable> {
    if alpha.iter().any(|a| a.is_nan() || *a <= 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    Ok(forward(q, |n, tau| msi_weight(n, tau, hurst, alpha)))
}

/// Densities `d_j(ω)` on a uniform grid over `[0, 2π]²`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub lattice: PeriodLattice,
    /// Grid nodes per axis.
    pub frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl DensityTable {
    pub fn resolution(&self) -> usize {
        self.frequencies.len()
    }

    /// Density of component `j` at grid node `(a, b)`.
    pub fn get(&self, j: [usize; 2], a: usize, b: usize) -> Complex64 {
        let res = self.resolution();
        self.values[(self.lattice.omega(j) * res + a) * res + b]
    }

    /// Trapezoid-rule integral of `d_j` over `[0, 2π]²`.
    pub fn integrate(&self, j: [usize; 2]) -> Complex64 {
        let res = self.resolution();
        let h = 2.0 * PI / (res - 1) as f64;
        let w = |k: usize| if k == 0 || k == res - 1 { 0.5 } else { 1.0 };
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..res {
            for b in 0..res {
                acc += self.get(j, a, b) * (w(a) * w(b));
            }
        }
        acc * h * h
    }
}

/// Uniform grid of `resolution` nodes over `[0, 2π]`, endpoints included.
pub fn frequency_grid(resolution: usize) -> Vec<f64> {
    let step = 2.0 * PI / (resolution - 1) as f64;
    (0..resolution).map(|k| k as f64 * step).collect()
}

/// `d_j(ω) = (1/4π²) Σ_τ e^{i(τ₁ω₁ + τ₂ω₂)} R_j(τ)` over the stored lag window.
pub fn density_from_r(r: &RTable, resolution: usize) -> Result<DensityTable> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("frequency grid needs at least 2 nodes".into()));
    }
    let lat = r.lattice;
    let freqs = frequency_grid(resolution);
    let nl = r.lags.len();
    let norm = 1.0 / (4.0 * PI * PI);
    let mut values = vec![Complex64::new(0.0, 0.0); lat.size() * resolution * resolution];
    for wj in 0..lat.size() {
        for (a, &w1) in freqs.iter().enumerate() {
            for (b, &w2) in freqs.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..nl {
                    let tau = r.lags[l];
                    let phase = tau[0] as f64 * w1 + tau[1] as f64 * w2;
                    acc += Complex64::from_polar(1.0, phase) * r.at(wj, l);
                }
                values[(wj * resolution + a) * resolution + b] = acc * norm;
            }
        }
    }
    Ok(DensityTable {
        lattice: lat,
        frequencies: freqs,
        values,
    })
}

/// Density of the MSI field from its weighted coefficients `R^H_j`.
pub fn density_h(rh: &RTable, resolution: usize) -> Result<DensityTable> {
    density_from_r(rh, resolution)
}

/// One discrete atom of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAtom {
    pub frequency: [f64; 2],
    pub amplitude: Complex64,
}

/// `X(α₁^{n₁}, α₂^{n₂}) = α₁^{n₁H₁} α₂^{n₂H₂} Σ_atoms e^{−i(n₁ω₁ + n₂ω₂)} φ(ω)`
/// over the exponent rectangle `rows × cols`.
///
/// Atoms whose sum is not real (no conjugate symmetry) yield
/// [`Error::NonRealResidue`].
pub fn harmonic_synthesize(
    atoms: &[SpectralAtom],
    hurst: [f64; 2],
    alpha: [f64; 2],
    rows: std::ops::Range<i64>,
    cols: std::ops::Range<i64>,
) -> Result<LatticeFunction> {
    let mut out = LatticeFunction::new(alpha)?;
    for n1 in rows {
        for n2 in cols.clone() {
            let mut acc = Complex64::new(0.0, 0.0);
            for atom in atoms {
                let phase = -(n1 as f64 * atom.frequency[0] + n2 as f64 * atom.frequency[1]);
                acc += Complex64::from_polar(1.0, phase) * atom.amplitude;
            }
            if acc.im.abs() > REAL_TOL * acc.re.abs().max(1.0) {
                return Err(Error::NonRealResidue(acc.im.abs()));
            }
            let w = alpha[0].powf(n1 as f64 * hurst[0]) * alpha[1].powf(n2 as f64 * hurst[1]);
            out.insert((n1, n2), w * acc.re)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(seed: u64, u: [usize; 2], lags: Vec<[i64; 2]>) -> PcCovarianceTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = PeriodLattice::new(u[0], u[1]).unwrap();
        LagTable::from_fn(lat, lags, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn omega_ordering() {
        let lat = PeriodLattice::new(3, 2).unwrap();
        assert_eq!(lat.omega([0, 0]), 0);
        assert_eq!(lat.omega([2, 0]), 2);
        assert_eq!(lat.omega([0, 1]), 3);
        for w in 0..lat.size() {
            assert_eq!(lat.omega(lat.index(w)), w);
        }
        assert_eq!(lat.reduce([-1, 5]), [2, 1]);
    }

    #[test]
    fn stationary_case_is_identity() {
        let q = random_q(1, [1, 1], lag_window(2, 1));
        let r = r_from_q(&q);
        for (_, tau, v) in q.iter() {
            let c = r.get([0, 0], tau).unwrap();
            assert!((c.re - v).abs() < 1e-15 && c.im == 0.0);
        }
    }

    #[test]
    fn constant_q_concentrates_on_zero_frequency() {
        let lat = PeriodLattice::new(3, 2).unwrap();
        let q = LagTable::from_fn(lat, lag_window(1, 1), |_, _| 2.5).unwrap();
        let r = r_from_q(&q);
        for (j, _, c) in r.iter() {
            let expect = if j == [0, 0] { 2.5 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn delta_coefficient_gives_constant_q() {
        let lat = PeriodLattice::new(2, 3).unwrap();
        let r = LagTable::from_fn(lat, vec![[0, 0], [1, 0]], |j, _| {
            if j == [0, 0] {
                Complex64::new(0.7, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let q = q_from_r(&r).unwrap();
        assert!(q.iter().all(|(_, _, v)| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn single_character_alternates() {
        let lat = PeriodLattice::new(2, 1).unwrap();
        let mut r = RTable::zeros(lat, vec![[0, 0]]).unwrap();
        r.set([1, 0], [0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let q = q_from_r(&r).unwrap();
        assert!((q.get([0, 0], [0, 0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((q.get([1, 0], [0, 0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_coefficients_are_rejected() {
        let lat = PeriodLattice::new(3, 1).unwrap();
        let mut r = RTable::zeros(lat, vec![[0, 0]]).unwrap();
        r.set([1, 0], [0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(q_from_r(&r), Err(Error::NonRealResidue(_))));
    }

    #[test]
    fn round_trip_on_3x2() {
        let q = random_q(7, [3, 2], lag_window(2, 2));
        let back = q_from_r(&r_from_q(&q)).unwrap();
        for ((_, _, a), (_, _, b)) in q.iter().zip(back.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn white_noise_density_is_flat() {
        let lat = PeriodLattice::new(2, 2).unwrap();
        let r = LagTable::from_fn(lat, vec![[0, 0]], |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let d = density_from_r(&r, 16).unwrap();
        let flat = 1.0 / (4.0 * PI * PI);
        for a in 0..16 {
            for b in 0..16 {
                assert!((d.get([1, 0], a, b) - Complex64::new(flat, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn symmetric_lag_pair_gives_cosine_surface() {
        let lat = PeriodLattice::new(1, 1).unwrap();
        let mut r = RTable::zeros(lat, vec![[1, 2], [-1, -2]]).unwrap();
        r.set([0, 0], [1, 2], Complex64::new(0.5, 0.0)).unwrap();
        r.set([0, 0], [-1, -2], Complex64::new(0.5, 0.0)).unwrap();
        let d = density_from_r(&r, 9).unwrap();
        for (a, b) in [(0, 0), (1, 3), (4, 4), (7, 2), (8, 5)] {
            let (w1, w2) = (d.frequencies[a], d.frequencies[b]);
            let closed = (w1 + 2.0 * w2).cos() / (4.0 * PI * PI);
            let got = d.get([0, 0], a, b);
            assert!((got.re - closed).abs() < 1e-15 && got.im.abs() < 1e-15);
        }
    }

    #[test]
    fn density_integrates_to_zero_lag_coefficient() {
        let q = random_q(3, [2, 2], lag_window(2, 2));
        let r = r_from_q(&q);
        let d = density_from_r(&r, DEFAULT_RESOLUTION).unwrap();
        let total = d.integrate([0, 0]);
        let r00 = r.get([0, 0], [0, 0]).unwrap();
        assert!((total - r00).norm() < 1e-3);
    }

    #[test]
    fn msi_weight_arithmetic() {
        let q = random_q(4, [2, 2], lag_window(1, 1));
        let qh = msi_cov_from_pc(&q, [0.5, 0.5], [2.0, 2.0]).unwrap();
        let m = [1i64, 0];
        let expect = 4.0 * q.get(m, [1, 1]).unwrap();
        assert!((qh.get(m, [1, 1]).unwrap() - expect).abs() < 1e-14);
        assert_eq!(qh.get([0, 0], [0, 0]), q.get([0, 0], [0, 0]));
        let flat = msi_cov_from_pc(&q, [0.0, 0.0], [2.0, 2.0]).unwrap();
        assert_eq!(flat, q);
    }

    #[test]
    fn zero_hurst_weighted_coefficients_match_plain() {
        let q = random_q(5, [3, 2], lag_window(1, 2));
        assert_eq!(r_h_from_q(&q, [0.0, 0.0], [2.0, 3.0]).unwrap(), r_from_q(&q));
    }

    #[test]
    fn weighted_coefficient_against_direct_sum() {
        let q = random_q(6, [2, 2], lag_window(1, 1));
        let (h, alpha) = ([0.3, 0.7], [2.0, 3.0]);
        let rh = r_h_from_q(&q, h, alpha).unwrap();
        let (j, tau) = ([1usize, 1usize], [1i64, -1i64]);
        // written out term by term
        let mut direct = Complex64::new(0.0, 0.0);
        for n1 in 0..2usize {
            for n2 in 0..2usize {
                let w = 2f64.powf((2.0 * n1 as f64 + 1.0) * 0.3) * 3f64.powf((2.0 * n2 as f64 - 1.0) * 0.7);
                let phase = 2.0 * PI * (n1 as f64 * 0.5 + n2 as f64 * 0.5);
                direct += Complex64::from_polar(1.0, phase) * w * q.get([n1 as i64, n2 as i64], tau).unwrap();
            }
        }
        direct /= 4.0;
        assert!((rh.get([j[0] as i64, j[1] as i64], tau).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn weighted_consistency() {
        let q = random_q(8, [2, 3], lag_window(2, 1));
        let (h, alpha) = ([0.4, 1.3], [1.5, 2.0]);
        let direct = msi_cov_from_pc(&q, h, alpha).unwrap();
        let via = q_from_r(&r_h_from_q(&q, h, alpha).unwrap()).unwrap();
        for ((_, _, a), (_, _, b)) in direct.iter().zip(via.iter()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn harmonic_single_atom() {
        let atom = [SpectralAtom {
            frequency: [0.0, 0.0],
            amplitude: Complex64::new(1.0, 0.0),
        }];
        let x = harmonic_synthesize(&atom, [0.0, 0.0], [2.0, 2.0], 0..3, 0..3).unwrap();
        assert!(x.iter().all(|(_, v)| v == 1.0));
        let x = harmonic_synthesize(&atom, [1.0, 1.0], [2.0, 2.0], 0..4, 0..4).unwrap();
        for ((n1, n2), v) in x.iter() {
            assert!((v - 2f64.powi((n1 + n2) as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_atoms_give_cosine_field() {
        let w = [0.4, 1.1];
        let c = Complex64::new(0.3, 0.2);
        let atoms = [
            SpectralAtom { frequency: w, amplitude: c },
            SpectralAtom { frequency: [-w[0], -w[1]], amplitude: c.conj() },
        ];
        let (h, alpha) = ([0.5, 0.25], [2.0, 3.0]);
        let x = harmonic_synthesize(&atoms, h, alpha, -2..3, 0..3).unwrap();
        for ((n1, n2), v) in x.iter() {
            let theta = n1 as f64 * w[0] + n2 as f64 * w[1];
            let closed = 2.0 * (c.re * theta.cos() + c.im * theta.sin())
                * 2f64.powf(n1 as f64 * 0.5)
                * 3f64.powf(n2 as f64 * 0.25);
            assert!((v - closed).abs() < 1e-12);
        }
        let lone = [SpectralAtom { frequency: w, amplitude: c }];
        assert!(harmonic_synthesize(&lone, h, alpha, 0..2, 0..2).is_err());
    }
}
