//! Quasi-Lamperti transform on geometric sampling lattices.
//!
//! A [`LatticeFunction`] stores a field sampled at `α^n = (α₁^{n₁}, α₂^{n₂})`
//! keyed by the integer exponent pair `n`. The same container holds the
//! periodic counterpart `Y(n)`, so the forward transform maps
//! `Y(n) ↦ α^{n·H} Y(n)` and the inverse undoes the weight.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance for deciding that `log_α t` is an integer.
pub const LATTICE_TOL: f64 = 1e-9;

pub type LatticeIndex = (i64, i64);

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    base: [f64; 2],
    values: BTreeMap<LatticeIndex, f64>,
}

impl LatticeFunction {
    pub fn new(base: [f64; 2]) -> Result<Self> {
        if base.iter().any(|a| !(a.is_finite() && *a > 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "lattice base ({}, {}) must exceed 1 componentwise",
                base[0], base[1]
            )));
        }
        Ok(Self {
            base,
            values: BTreeMap::new(),
        })
    }

    /// Builds a lattice function by evaluating `f` on the rectangle of
    /// exponents `n₁ ∈ rows`, `n₂ ∈ cols`.
    pub fn from_fn(
        base: [f64; 2],
        rows: std::ops::Range<i64>,
        cols: std::ops::Range<i64>,
        mut f: impl FnMut(LatticeIndex) -> f64,
    ) -> Result<Self> {
        let mut out = Self::new(base)?;
        for n1 in rows {
            for n2 in cols.clone() {
                out.insert((n1, n2), f((n1, n2)))?;
            }
        }
        Ok(out)
    }

    pub fn base(&self) -> [f64; 2] {
        self.base
    }

    pub fn insert(&mut self, n: LatticeIndex, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!("lattice value at {n:?} is not finite")));
        }
        self.values.insert(n, value);
        Ok(())
    }

    pub fn get(&self, n: LatticeIndex) -> Option<f64> {
        self.values.get(&n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticeIndex, f64)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The physical coordinate `α^n` of a lattice index.
    pub fn point(&self, n: LatticeIndex) -> [f64; 2] {
        [self.base[0].powi(n.0 as i32), self.base[1].powi(n.1 as i32)]
    }

    /// Exponent pair of a physical point, if it sits on the lattice.
    pub fn index_of(&self, t: [f64; 2]) -> Option<LatticeIndex> {
        let n1 = lattice_log(t[0], self.base[0])?;
        let n2 = lattice_log(t[1], self.base[1])?;
        Some((n1, n2))
    }

    fn weight(&self, n: LatticeIndex, hurst: [f64; 2]) -> f64 {
        self.base[0].powf(n.0 as f64 * hurst[0]) * self.base[1].powf(n.1 as f64 * hurst[1])
    }
}

fn lattice_log(t: f64, base: f64) -> Option<i64> {
    if !(t > 0.0 && t.is_finite()) {
        return None;
    }
    let x = t.ln() / base.ln();
    let r = x.round();
    ((x - r).abs() < LATTICE_TOL).then_some(r as i64)
}

/// `L Y(t) = t₁^{H₁} t₂^{H₂} Y(log_{α₁} t₁, log_{α₂} t₂)` at a lattice point `t`.
pub fn quasi_lamperti(y: &LatticeFunction, hurst: [f64; 2], t: [f64; 2]) -> Result<f64> {
    let n = y.index_of(t).ok_or(Error::OffLattice(t[0], t[1]))?;
    let v = y.get(n).ok_or(Error::OffLattice(t[0], t[1]))?;
    Ok(t[0].powf(hurst[0]) * t[1].powf(hurst[1]) * v)
}

/// `L⁻¹ X(t) = α₁^{−t₁H₁} α₂^{−t₂H₂} X(α^t)` for an integer exponent pair `t`.
pub fn inverse_quasi_lamperti(x: &LatticeFunction, hurst: [f64; 2], t: LatticeIndex) -> Result<f64> {
    let v = x.get(t).ok_or_else(|| {
        let p = x.point(t);
        Error::OffLattice(p[0], p[1])
    })?;
    Ok(v / x.weight(t, hurst))
}

/// Applies the forward transform on every stored lattice point.
pub fn lamperti_image(y: &LatticeFunction, hurst: [f64; 2]) -> LatticeFunction {
    let mut out = y.clone();
    for (n, v) in out.values.iter_mut() {
        *v *= y.weight(*n, hurst);
    }
    out
}

/// Applies the inverse transform on every stored lattice point.
pub fn inverse_lamperti_image(x: &LatticeFunction, hurst: [f64; 2]) -> LatticeFunction {
    let mut out = x.clone();
    for (n, v) in out.values.iter_mut() {
        *v /= x.weight(*n, hurst);
    }
    out
}

/// Renormalized dilation `D_{H,Λ} X(t) = λ₁^{−H₁} λ₂^{−H₂} X(Λ∘t)`.
///
/// `Λ` must be a non-negative integer power of the lattice base on each
/// axis. The result is defined on the indices `n` for which `n + u` is
/// stored, `u = Log_α Λ`.
pub fn apply_dilation(x: &LatticeFunction, hurst: [f64; 2], scale: [f64; 2]) -> Result<LatticeFunction> {
    let u = x
        .index_of(scale)
        .filter(|u| u.0 >= 0 && u.1 >= 0)
        .ok_or(Error::NonLatticeScale(scale[0], scale[1]))?;
    let norm = scale[0].powf(-hurst[0]) * scale[1].powf(-hurst[1]);
    let mut out = LatticeFunction::new(x.base)?;
    for (n, v) in x.iter() {
        let src = (n.0 - u.0, n.1 - u.1);
        if x.get(src).is_some() {
            out.values.insert(src, norm * v);
        }
    }
    Ok(out)
}

/// Shift `S_u Y(n) = Y(n + u)`, defined where `n + u` is stored.
pub fn shift(y: &LatticeFunction, u: LatticeIndex) -> LatticeFunction {
    let mut out = LatticeFunction {
        base: y.base,
        values: BTreeMap::new(),
    };
    for (n, v) in y.iter() {
        let src = (n.0 - u.0, n.1 - u.1);
        if y.get(src).is_some() {
            out.values.insert(src, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lattice(seed: u64, base: [f64; 2], size: i64) -> LatticeFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LatticeFunction::from_fn(base, 0..size, 0..size, |_| rng.random_range(-2.0..2.0)).unwrap()
    }

    #[test]
    fn zero_hurst_is_reindexing() {
        let y = random_lattice(1, [2.0, 2.0], 5);
        let v = quasi_lamperti(&y, [0.0, 0.0], [4.0, 8.0]).unwrap();
        assert_eq!(v, y.get((2, 3)).unwrap());
        let x = random_lattice(2, [2.0, 2.0], 5);
        assert_eq!(inverse_quasi_lamperti(&x, [0.0, 0.0], (3, 1)).unwrap(), x.get((3, 1)).unwrap());
    }

    #[test]
    fn unit_point_maps_to_origin() {
        let y = random_lattice(3, [2.5, 3.0], 4);
        let v = quasi_lamperti(&y, [1.0, 1.0], [1.0, 1.0]).unwrap();
        assert_eq!(v, y.get((0, 0)).unwrap());
        let x = random_lattice(4, [2.5, 3.0], 4);
        assert_eq!(inverse_quasi_lamperti(&x, [0.8, 0.2], (0, 0)).unwrap(), x.get((0, 0)).unwrap());
    }

    #[test]
    fn off_lattice_points_are_errors() {
        let y = random_lattice(5, [2.0, 2.0], 3);
        assert!(matches!(quasi_lamperti(&y, [0.5, 0.5], [3.0, 2.0]), Err(Error::OffLattice(..))));
        // on the lattice but not stored
        assert!(matches!(quasi_lamperti(&y, [0.5, 0.5], [64.0, 2.0]), Err(Error::OffLattice(..))));
        assert!(inverse_quasi_lamperti(&y, [0.5, 0.5], (7, 0)).is_err());
    }

    #[test]
    fn round_trip_on_seeded_lattice() {
        let base = [2.0, 3.0];
        let h = [0.7, 0.3];
        let y = random_lattice(11, base, 5);
        let x = lamperti_image(&y, h);
        for (n, v) in y.iter() {
            let t = x.point(n);
            let xv = x.get(n).unwrap();
            assert!((quasi_lamperti(&y, h, t).unwrap() - xv).abs() <= 1e-12 * xv.abs().max(1.0));
            let back = inverse_quasi_lamperti(&x, h, n).unwrap();
            assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn identity_dilation() {
        let x = random_lattice(6, [2.0, 2.0], 4);
        assert_eq!(apply_dilation(&x, [0.4, 0.9], [1.0, 1.0]).unwrap(), x);
    }

    #[test]
    fn base_dilation_with_zero_hurst_is_unit_shift() {
        let x = random_lattice(7, [2.0, 3.0], 4);
        let d = apply_dilation(&x, [0.0, 0.0], [2.0, 3.0]).unwrap();
        assert_eq!(d.len(), 9);
        for (n, v) in d.iter() {
            assert_eq!(v, x.get((n.0 + 1, n.1 + 1)).unwrap());
        }
    }

    #[test]
    fn non_lattice_dilation_is_rejected() {
        let x = random_lattice(8, [2.0, 2.0], 3);
        assert!(matches!(apply_dilation(&x, [0.5, 0.5], [3.0, 2.0]), Err(Error::NonLatticeScale(..))));
        assert!(matches!(apply_dilation(&x, [0.5, 0.5], [0.5, 2.0]), Err(Error::NonLatticeScale(..))));
    }

    #[test]
    fn natural_base_matches_classical_lamperti() {
        let e = std::f64::consts::E;
        let h = [0.35, 1.2];
        let y = random_lattice(9, [e, e], 4);
        for (n, v) in y.iter() {
            let t = [(n.0 as f64).exp(), (n.1 as f64).exp()];
            // classical form: t^H Y(ln t)
            let direct = t[0].powf(h[0]) * t[1].powf(h[1]) * v;
            let got = quasi_lamperti(&y, h, t).unwrap();
            assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
}
