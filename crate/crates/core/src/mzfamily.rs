//! MZ layers: points, sampling weights and degree, with certified (q = 2) or estimated
//! (q != 2) Marcinkiewicz-Zygmund constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::BasisEvaluator;
use crate::domain::{Domain, Point};
use crate::error::{MzqError, Result};
use crate::geometry::{assign_tau, layer_points, PointSet};
use crate::io::{points_from_json, points_to_json, reals, unreal, Real};
use crate::oracle::{default_order, OracleRule};

/// Relative eigenvalue threshold below which a layer is not accepted as MZ.
pub const RANK_THRESHOLD: f64 = 1e-12;

const CHUNK: usize = 2048;

/// The `n`-th layer of a sampling family together with its MZ constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MzLayer {
    pub domain: Domain,
    pub n: usize,
    pub epsilon: f64,
    pub points: Vec<Point>,
    pub tau: Vec<f64>,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    /// True when `a > 0` was established exactly (q = 2 Gram certification).
    pub certified: bool,
}

impl MzLayer {
    /// Certifies `(points, tau)` at degree `n` for q = 2. A rank-deficient layer is returned
    /// with `certified == false` rather than as an error.
    pub fn certify(domain: Domain, n: usize, epsilon: f64, points: Vec<Point>, tau: Vec<f64>) -> Result<Self> {
        let g = weighted_gram(&domain, n, &points, &tau)?;
        let (a, b) = extreme_eigenvalues(&g);
        Ok(Self {
            domain,
            n,
            epsilon,
            points,
            tau,
            q: 2.0,
            a,
            b,
            certified: a > RANK_THRESHOLD * b,
        })
    }

    /// Re-estimates the constants for `q != 2` (exact certification when `q == 2`).
    pub fn with_q(self, q: f64, ensemble_size: usize, seed: u64) -> Result<Self> {
        if q == 2.0 {
            return Self::certify(self.domain, self.n, self.epsilon, self.points, self.tau);
        }
        let (a, b) = estimate_general_q(&self.domain, self.n, &self.points, &self.tau, q, ensemble_size, seed)?;
        Ok(Self {
            q,
            a,
            b,
            certified: false,
            ..self
        })
    }

    pub fn kappa(&self) -> f64 {
        self.b / self.a
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_set(&self) -> PointSet {
        PointSet {
            domain: self.domain,
            epsilon: self.epsilon,
            points: self.points.clone(),
        }
    }

    /// Fails with [`MzqError::NotMzLayer`] unless the layer is an L2 MZ layer.
    pub fn require_certified(&self) -> Result<()> {
        if self.q == 2.0 && self.a > RANK_THRESHOLD * self.b {
            Ok(())
        } else {
            Err(MzqError::NotMzLayer {
                n: self.n,
                a: self.a,
                b: self.b,
            })
        }
    }

    pub fn to_json(&self) -> MzLayerJson {
        MzLayerJson {
            domain: self.domain,
            epsilon: Real(self.epsilon),
            points: points_to_json(&self.domain, &self.points),
            tau: reals(&self.tau),
            n: self.n,
            q: Real(self.q),
            a: Real(self.a),
            b: Real(self.b),
            kappa: Real(self.kappa()),
            certified: self.certified,
        }
    }
}

/// Serialized form of an [`MzLayer`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MzLayerJson {
    pub domain: Domain,
    pub epsilon: Real,
    pub points: Vec<Vec<Real>>,
    pub tau: Vec<Real>,
    pub n: usize,
    pub q: Real,
    #[serde(rename = "A")]
    pub a: Real,
    #[serde(rename = "B")]
    pub b: Real,
    pub kappa: Real,
    pub certified: bool,
}

impl TryFrom<MzLayerJson> for MzLayer {
    type Error = MzqError;

    fn try_from(j: MzLayerJson) -> Result<Self> {
        let domain = Domain::new(j.domain.kind, j.domain.mu)?;
        let points = points_from_json(&domain, &j.points)?;
        let tau = unreal(&j.tau);
        check_weights(points.len(), &tau)?;
        Ok(Self {
            domain,
            n: j.n,
            epsilon: j.epsilon.0,
            points,
            tau,
            q: j.q.0,
            a: j.a.0,
            b: j.b.0,
            certified: j.certified,
        })
    }
}

fn check_weights(len: usize, tau: &[f64]) -> Result<()> {
    if tau.len() != len {
        return Err(MzqError::LengthMismatch {
            expected: len,
            got: tau.len(),
        });
    }
    if let Some(t) = tau.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(MzqError::InvalidParameter(format!("sampling weights must be positive, found {t}")));
    }
    Ok(())
}

/// Builds the layer of degree `n` from a maximal `(gamma / n)`-separated set with Voronoi
/// weights, certified at q = 2.
pub fn build_layer(domain: &Domain, n: usize, gamma: f64, seed: u64) -> Result<MzLayer> {
    if !(gamma > 0.0) {
        return Err(MzqError::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    let set = layer_points(domain, n, gamma, seed)?;
    let tau = assign_tau(&set)?;
    MzLayer::certify(*domain, n, set.epsilon, set.points, tau)
}

/// Transposed basis block: column `i` holds all basis values at `points[i]`.
pub fn basis_columns(domain: &Domain, max_degree: usize, points: &[Point]) -> Result<DMatrix<f64>> {
    for p in points {
        domain.check(p)?;
    }
    let eval = BasisEvaluator::new(*domain, max_degree);
    let mut out = DMatrix::zeros(eval.len(), points.len());
    for (i, p) in points.iter().enumerate() {
        eval.eval_into(p, out.column_mut(i).as_mut_slice());
    }
    Ok(out)
}

/// `G = Phi^T diag(tau) Phi` over all basis functions of degree `<= max_degree`.
pub fn weighted_gram(domain: &Domain, max_degree: usize, points: &[Point], tau: &[f64]) -> Result<DMatrix<f64>> {
    check_weights(points.len(), tau)?;
    let eval = BasisEvaluator::new(*domain, max_degree);
    let dim = eval.len();
    let mut g = DMatrix::zeros(dim, dim);
    for (chunk, weights) in points.chunks(CHUNK).zip(tau.chunks(CHUNK)) {
        let mut block = DMatrix::zeros(dim, chunk.len());
        for (i, (p, t)) in chunk.iter().zip(weights).enumerate() {
            domain.check(p)?;
            let mut col = block.column_mut(i);
            eval.eval_into(p, col.as_mut_slice());
            col *= t.sqrt();
        }
        g.gemm(1.0, &block, &block.transpose(), 1.0);
    }
    Ok(g)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(g: &DMatrix<f64>) -> (f64, f64) {
    let ev = g.clone().symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Exact q = 2 MZ constants: the extreme eigenvalues of the weighted Gram matrix.
pub fn certify_q2(domain: &Domain, n: usize, points: &[Point], tau: &[f64]) -> Result<(f64, f64)> {
    let g = weighted_gram(domain, n, points, tau)?;
    let (a, b) = extreme_eigenvalues(&g);
    if a > RANK_THRESHOLD * b {
        Ok((a, b))
    } else {
        Err(MzqError::NotMzLayer { n, a, b })
    }
}

/// Standard normal coefficients for a random polynomial.
pub fn random_coefficients<R: rand::Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Estimates of the MZ constants for `1 <= q < infinity`: the extreme values of
/// `||P||_(q)^q / ||P||_q^q` over `ensemble_size` random polynomials, the extreme
/// eigenvectors of the q = 2 Gram matrix, and every basis function. The true constants
/// satisfy `A <= A_est` and `B >= B_est`.
pub fn estimate_general_q(
    domain: &Domain,
    n: usize,
    points: &[Point],
    tau: &[f64],
    q: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(MzqError::InvalidParameter(format!("q must lie in [1, inf), got {q}")));
    }
    let g = weighted_gram(domain, n, points, tau)?;
    let dim = g.nrows();
    let eig = SymmetricEigen::new(g);
    let (imin, imax) = extreme_indices(eig.eigenvalues.as_slice());

    let mut ensemble: Vec<DVector<f64>> = Vec::with_capacity(ensemble_size + dim + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ensemble_size {
        ensemble.push(DVector::from_vec(random_coefficients(&mut rng, dim)));
    }
    ensemble.push(eig.eigenvectors.column(imin).into_owned());
    ensemble.push(eig.eigenvectors.column(imax).into_owned());
    for j in 0..dim {
        ensemble.push(DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 }));
    }

    let sample_cols = basis_columns(domain, n, points)?;
    let order = default_order(n).max((q * n as f64).ceil() as usize + 16);
    let oracle = OracleRule::new(*domain, order);
    let oracle_cols = basis_columns(domain, n, &oracle.nodes)?;

    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for c in &ensemble {
        let at_points = sample_cols.tr_mul(c);
        let at_nodes = oracle_cols.tr_mul(c);
        let discrete: f64 = at_points.iter().zip(tau).map(|(v, t)| t * v.abs().powf(q)).sum();
        let continuous = oracle.integrate_values(&at_nodes.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>());
        let r = discrete / continuous;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[imin] {
            imin = i;
        }
        if *v > values[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// Discrete norm `(sum tau_k |f(x_k)|^q)^(1/q)`; `q = infinity` gives `max |f(x_k)|`.
pub fn sampled_norm(layer: &MzLayer, values: &[f64], q: f64) -> Result<f64> {
    weighted_norm(&layer.tau, values, q)
}

pub fn weighted_norm(tau: &[f64], values: &[f64], q: f64) -> Result<f64> {
    if values.len() != tau.len() {
        return Err(MzqError::LengthMismatch {
            expected: tau.len(),
            got: values.len(),
        });
    }
    if q == f64::INFINITY {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if !(q >= 1.0) {
        return Err(MzqError::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    let s: f64 = values.iter().zip(tau).map(|(v, t)| t * v.abs().powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

/// Largest value over `f` in degree-`m` polynomials of `sum tau_k f(x_k)^2 / ||f||_2^2`,
/// divided by `(m / n)^(d + 2 mu)`. For p = 2 the maximum is the top eigenvalue of the
/// degree-`m` Gram matrix and is computed exactly.
pub fn oversampling_check(layer: &MzLayer, m: usize) -> Result<f64> {
    if m < layer.n {
        return Err(MzqError::InvalidParameter(format!(
            "oversampling degree {m} is below the layer degree {}",
            layer.n
        )));
    }
    let g = weighted_gram(&layer.domain, m, &layer.points, &layer.tau)?;
    let (_, top) = extreme_eigenvalues(&g);
    let ratio = if layer.n == 0 {
        // the growth factor is undefined at n = 0
        1.0
    } else {
        (m as f64 / layer.n as f64).powf(layer.domain.effective_dim())
    };
    Ok(top / ratio)
}
