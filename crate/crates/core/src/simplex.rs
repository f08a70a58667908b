//! Probability vectors on `{1, ..., q}`.

use std::f64::consts::PI;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum = 1` for a valid simplex point.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector `nu'` over the `q` arcs. Index 0 is arc 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates nonnegativity and unit mass.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid("simplex vector needs at least two entries"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("simplex weight {w} is negative or not finite")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("simplex weights sum to {s}, not 1")));
        }
        Ok(SimplexVector(weights))
    }

    /// Divides nonnegative weights by their sum.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("weight {w} is negative or not finite")));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::invalid("weights have zero total mass"));
        }
        SimplexVector::new(weights.into_iter().map(|w| w / s).collect())
    }

    /// Clamps entries below zero and renormalizes; used to repair roundoff.
    pub(crate) fn project(mut weights: Vec<f64>) -> Self {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let s: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= s;
        }
        SimplexVector(weights)
    }

    pub fn uniform(q: usize) -> Self {
        SimplexVector(vec![1.0 / q as f64; q])
    }

    /// Point mass on arc `k` (1-based).
    pub fn dirac(q: usize, k: usize) -> Result<Self> {
        if k == 0 || k > q {
            return Err(Error::invalid(format!("arc index {k} outside 1..={q}")));
        }
        let mut w = vec![0.0; q];
        w[k - 1] = 1.0;
        Ok(SimplexVector(w))
    }

    /// `(1-t) self + t other`.
    pub fn mix(&self, other: &SimplexVector, t: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::invalid("mixing simplex vectors of different length"));
        }
        SimplexVector::normalized(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| ((1.0 - t) * a + t * b).max(0.0))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min_weight(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Total variation distance, half the l1 distance.
    pub fn tv_distance(&self, other: &SimplexVector) -> f64 {
        tv_distance(&self.0, &other.0)
    }

    /// `out(k) = self(k - shift)`, moving mass `shift` arcs forward.
    pub fn cyclic_shift(&self, shift: isize) -> Self {
        let q = self.len() as isize;
        let mut out = vec![0.0; self.len()];
        for (i, w) in self.0.iter().enumerate() {
            out[((i as isize + shift).rem_euclid(q)) as usize] = *w;
        }
        SimplexVector(out)
    }
}

impl Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Vec<f64> {
        s.0
    }
}

pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Real Fourier mode `rho(k) = cos(2 pi l k / q)`, `k = 1..q`; zero-sum for `l` not a multiple of q.
pub fn fourier_mode(q: usize, l: usize) -> Vec<f64> {
    (1..=q).map(|k| (2.0 * PI * (l * k) as f64 / q as f64).cos()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SimplexVector::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexVector::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexVector::new(vec![1.1, -0.1]).is_err());
        assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexVector::normalized(vec![0.0, 0.0]).is_err());
        assert_eq!(SimplexVector::normalized(vec![1.0, 3.0]).unwrap().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn shift_moves_mass_forward() {
        let d = SimplexVector::dirac(5, 5).unwrap();
        assert_eq!(d.cyclic_shift(1), SimplexVector::dirac(5, 1).unwrap());
        assert_eq!(d.cyclic_shift(-2), SimplexVector::dirac(5, 3).unwrap());
    }

    #[test]
    fn tv_of_distinct_diracs_is_one() {
        let a = SimplexVector::dirac(4, 1).unwrap();
        let b = SimplexVector::dirac(4, 3).unwrap();
        assert_eq!(a.tv_distance(&b), 1.0);
        assert_eq!(a.tv_distance(&a), 0.0);
    }

    #[test]
    fn fourier_modes_are_zero_sum() {
        for l in 1..7 {
            let s: f64 = fourier_mode(7, l).iter().sum();
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn serde_round_trip_validates() {
        let s: SimplexVector = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(s.len(), 2);
        assert!(serde_json::from_str::<SimplexVector>("[0.25,0.25]").is_err());
    }
}
