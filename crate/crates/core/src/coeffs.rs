//! Finite orthonormal expansions `f = sum c_{nk} phi_{nk}`.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisEvaluator, BasisIndex};
use crate::domain::{Domain, Point};
use crate::error::{MzqError, Result};
use crate::io::Real;

/// Dense coefficients in the lexicographic `(degree, within)` column order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub domain: Domain,
    pub max_degree: usize,
    pub coeffs: Vec<f64>,
}

impl CoefficientVector {
    pub fn zeros(domain: Domain, max_degree: usize) -> Self {
        Self {
            domain,
            max_degree,
            coeffs: vec![0.0; domain.poly_dim(max_degree)],
        }
    }

    pub fn from_dense(domain: Domain, max_degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let want = domain.poly_dim(max_degree);
        if coeffs.len() != want {
            return Err(MzqError::LengthMismatch {
                expected: want,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            domain,
            max_degree,
            coeffs,
        })
    }

    pub fn get(&self, idx: BasisIndex) -> f64 {
        match idx.column(&self.domain) {
            Ok(c) if c < self.coeffs.len() => self.coeffs[c],
            _ => 0.0,
        }
    }

    pub fn set(&mut self, idx: BasisIndex, value: f64) -> Result<()> {
        let c = idx.column(&self.domain)?;
        if idx.degree > self.max_degree {
            return Err(MzqError::IndexOutOfRange {
                degree: idx.degree,
                within: idx.within,
            });
        }
        self.coeffs[c] = value;
        Ok(())
    }

    /// `||f||_2` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `(sum c^2)^(1/2) + (sum lambda_n^r c^2)^(1/2)`, the spectral `W^r_2` norm.
    pub fn sobolev_norm(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(MzqError::InvalidParameter(format!("smoothness r must be > 0, got {r}")));
        }
        let mut top = 0.0;
        for n in 1..=self.max_degree {
            let lam = self.domain.eigenvalue(n).powf(r);
            let lo = self.domain.degree_offset(n);
            let hi = self.domain.poly_dim(n);
            top += lam * self.coeffs[lo..hi].iter().map(|c| c * c).sum::<f64>();
        }
        Ok(self.l2_norm() + top.sqrt())
    }

    /// Squared norm of the part of degree greater than `n`.
    pub fn tail_norm_sq(&self, n: usize) -> f64 {
        if n >= self.max_degree {
            return 0.0;
        }
        self.coeffs[self.domain.poly_dim(n)..].iter().map(|c| c * c).sum()
    }

    /// Orthogonal projection onto degree `<= n`.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.max_degree);
        Self {
            domain: self.domain,
            max_degree: n,
            coeffs: self.coeffs[..self.domain.poly_dim(n)].to_vec(),
        }
    }

    /// The same expansion viewed in a space of degree `n >= max_degree`.
    pub fn widen(&self, n: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(self.domain.poly_dim(n.max(self.max_degree)), 0.0);
        Self {
            domain: self.domain,
            max_degree: n.max(self.max_degree),
            coeffs,
        }
    }

    /// Coefficientwise `self - other`, widened to the larger degree.
    pub fn difference(&self, other: &Self) -> Self {
        let n = self.max_degree.max(other.max_degree);
        let mut a = self.widen(n);
        let b = other.widen(n);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        a
    }

    pub fn evaluator(&self) -> BasisEvaluator {
        BasisEvaluator::new(self.domain, self.max_degree)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.evaluator().combine(&self.coeffs, x)
    }

    pub fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        let ev = self.evaluator();
        let mut row = vec![0.0; ev.len()];
        points
            .iter()
            .map(|x| {
                ev.eval_into(x, &mut row);
                row.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Integral against the domain measure: the constant coefficient.
    pub fn integral(&self) -> f64 {
        self.coeffs[0]
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct CoefficientJson {
    pub domain: Domain,
    pub max_degree: usize,
    pub coeffs: Vec<(usize, usize, Real)>,
}

impl From<&CoefficientVector> for CoefficientJson {
    fn from(v: &CoefficientVector) -> Self {
        let coeffs = v
            .coeffs
            .iter()
            .enumerate()
            .map(|(col, &c)| {
                let idx = BasisIndex::from_column(&v.domain, col);
                (idx.degree, idx.within, Real(c))
            })
            .collect();
        Self {
            domain: v.domain,
            max_degree: v.max_degree,
            coeffs,
        }
    }
}

impl TryFrom<CoefficientJson> for CoefficientVector {
    type Error = MzqError;

    fn try_from(j: CoefficientJson) -> Result<Self> {
        let domain = Domain::new(j.domain.kind, j.domain.mu)?;
        let mut v = CoefficientVector::zeros(domain, j.max_degree);
        for (degree, within, value) in j.coeffs {
            v.set(BasisIndex::new(degree, within), value.0)?;
        }
        Ok(v)
    }
}

impl Serialize for CoefficientVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoefficientJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = CoefficientJson::deserialize(d)?;
        CoefficientVector::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_norm_examples() {
        let disk = Domain::disk(0.5);
        let mut c = CoefficientVector::zeros(disk, 4);
        c.set(BasisIndex::new(0, 1), -2.5).unwrap();
        assert_eq!(c.sobolev_norm(1.7).unwrap(), 2.5);

        let mut f = CoefficientVector::zeros(disk, 3);
        f.set(BasisIndex::new(3, 1), 1.0).unwrap();
        assert!((f.sobolev_norm(2.0).unwrap() - 16.0).abs() < 1e-12);
        let r = 1.3;
        assert!((f.sobolev_norm(r).unwrap() - (1.0 + 15f64.powf(r / 2.0))).abs() < 1e-12);
        assert!(f.sobolev_norm(0.0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = Domain::sphere();
        let mut c = CoefficientVector::zeros(s, 2);
        c.coeffs.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * i as f64 - 0.37);
        let text = serde_json::to_string(&c).unwrap();
        let back: CoefficientVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);

        let bad = r#"{"domain":{"kind":"disk","mu":0.5},"max_degree":1,"coeffs":[[2,1,1.0]]}"#;
        assert!(serde_json::from_str::<CoefficientVector>(bad).is_err());
        let bad = r#"{"domain":{"kind":"disk","mu":0.5},"max_degree":2,"coeffs":[[1,3,1.0]]}"#;
        assert!(serde_json::from_str::<CoefficientVector>(bad).is_err());
    }

    #[test]
    fn tails_and_truncation() {
        let d = Domain::interval(0.0);
        let c = CoefficientVector::from_dense(d, 3, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.tail_norm_sq(1), 25.0);
        assert_eq!(c.truncate(1).coeffs, vec![1.0, 2.0]);
        assert_eq!(c.difference(&c.truncate(1)).coeffs, vec![0.0, 0.0, 3.0, 4.0]);
    }
}
