//! Least-squares quadrature built from an L2 MZ layer.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::approx::LeastSquares;
use crate::coeffs::CoefficientVector;
use crate::error::{MzqError, Result};
use crate::io::{reals, unreal, Real};
use crate::mzfamily::{MzLayer, MzLayerJson};
use crate::oracle::{default_order, OracleRule};

/// Nodes of a layer with least-squares quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub layer: MzLayer,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn to_json(&self) -> QuadratureJson {
        QuadratureJson {
            layer: self.layer.to_json(),
            w: reals(&self.weights),
        }
    }
}

/// Serialized rule: the layer fields plus `"w"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureJson {
    #[serde(flatten)]
    pub layer: MzLayerJson,
    pub w: Vec<Real>,
}

impl TryFrom<QuadratureJson> for QuadratureRule {
    type Error = MzqError;

    fn try_from(j: QuadratureJson) -> Result<Self> {
        let layer = MzLayer::try_from(j.layer)?;
        let weights = unreal(&j.w);
        if weights.len() != layer.len() {
            return Err(MzqError::LengthMismatch {
                expected: layer.len(),
                got: weights.len(),
            });
        }
        Ok(Self { layer, weights })
    }
}

/// Weights `w = diag(tau) Phi G^{-1} e_0`, where `e_0` is the moment vector of the
/// orthonormal basis (only the constant has nonzero integral).
pub fn build_rule(layer: &MzLayer) -> Result<QuadratureRule> {
    layer.require_certified()?;
    let system = LeastSquares::new(layer)?;
    Ok(QuadratureRule {
        layer: layer.clone(),
        weights: rule_weights(&system),
    })
}

/// Quadrature weights for an already factored system.
pub fn rule_weights(system: &LeastSquares) -> Vec<f64> {
    let dim = system.columns().nrows();
    let mut moments = DVector::zeros(dim);
    moments[0] = 1.0;
    let y = system.solve_gram(&moments);
    let values = system.columns().tr_mul(&y);
    values.iter().zip(&system.layer().tau).map(|(v, t)| v * t).collect()
}

/// `sum_k w_k f(x_k)`.
pub fn integrate(rule: &QuadratureRule, samples: &[f64]) -> Result<f64> {
    if samples.len() != rule.len() {
        return Err(MzqError::LengthMismatch {
            expected: rule.len(),
            got: samples.len(),
        });
    }
    Ok(rule.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
}

/// The same functional evaluated as the reference-quadrature integral of `L_{n,2} f`.
pub fn integrate_projection(layer: &MzLayer, samples: &[f64]) -> Result<f64> {
    let system = LeastSquares::new(layer)?;
    let coeffs = CoefficientVector::from_dense(layer.domain, layer.n, system.solve(samples)?)?;
    let oracle = OracleRule::new(layer.domain, default_order(layer.n));
    Ok(oracle.integrate(|x| coeffs.eval(x)))
}
