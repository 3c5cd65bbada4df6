//! Weighted least-squares and least-lq approximation from samples on an MZ layer, the
//! filtered approximation, and Lq error evaluation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, QR};

use crate::basis::BasisEvaluator;
use crate::coeffs::CoefficientVector;
use crate::domain::{Domain, Point};
use crate::error::{MzqError, Result};
use crate::filter::Filter;
use crate::mzfamily::{basis_columns, weighted_gram, MzLayer};
use crate::oracle::{default_order, OracleRule};

/// Largest Gram condition number accepted by the solvers.
pub const MAX_CONDITION: f64 = 1e14;
/// Above this condition number the solver factors `sqrt(T) Phi` instead of the Gram matrix.
pub const CHOLESKY_CONDITION: f64 = 1e7;
/// Exactness degree of the grid used to integrate non-polynomial functions.
pub const DENSE_ORDER: usize = 144;

/// A function that can be sampled anywhere on its domain.
pub trait Function: Sync {
    fn eval(&self, x: &Point) -> f64;

    fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|x| self.eval(x)).collect()
    }
}

impl<F: Fn(&Point) -> f64 + Sync> Function for F {
    fn eval(&self, x: &Point) -> f64 {
        self(x)
    }
}

impl Function for CoefficientVector {
    fn eval(&self, x: &Point) -> f64 {
        CoefficientVector::eval(self, x)
    }

    fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        CoefficientVector::eval_many(self, points)
    }
}

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Qr(QR<f64, Dyn, Dyn>),
}

/// Reusable weighted least-squares system for one layer.
pub struct LeastSquares<'a> {
    layer: &'a MzLayer,
    cols: DMatrix<f64>,
    factor: Factor,
}

impl<'a> LeastSquares<'a> {
    pub fn new(layer: &'a MzLayer) -> Result<Self> {
        Self::with_ridge(layer, false)
    }

    /// With `ridge`, an ill-conditioned Gram matrix is regularized by `1e-12 lambda_max`
    /// instead of rejected.
    pub fn with_ridge(layer: &'a MzLayer, ridge: bool) -> Result<Self> {
        let cols = basis_columns(&layer.domain, layer.n, &layer.points)?;
        let mut gram = weighted_gram(&layer.domain, layer.n, &layer.points, &layer.tau)?;
        let (lo, hi) = crate::mzfamily::extreme_eigenvalues(&gram);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        let factor = if condition <= CHOLESKY_CONDITION {
            Factor::Cholesky(Cholesky::new(gram).ok_or(MzqError::IllConditioned { condition })?)
        } else if condition <= MAX_CONDITION {
            let mut scaled = cols.transpose();
            for (mut row, t) in scaled.row_iter_mut().zip(&layer.tau) {
                row *= t.sqrt();
            }
            Factor::Qr(scaled.qr())
        } else if ridge {
            for i in 0..gram.nrows() {
                gram[(i, i)] += 1e-12 * hi;
            }
            Factor::Cholesky(Cholesky::new(gram).ok_or(MzqError::IllConditioned { condition })?)
        } else {
            return Err(MzqError::IllConditioned { condition });
        };
        Ok(Self { layer, cols, factor })
    }

    pub fn layer(&self) -> &MzLayer {
        self.layer
    }

    /// Basis values, one column per layer point.
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.cols
    }

    fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.layer.len() {
            return Err(MzqError::LengthMismatch {
                expected: self.layer.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// Solves `G c = rhs` with the stored factorization.
    pub fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Cholesky(ch) => ch.solve(rhs),
            Factor::Qr(qr) => {
                // G = R^T R
                let r = qr.r();
                let y = r.tr_solve_upper_triangular(rhs).expect("nonsingular R");
                r.solve_upper_triangular(&y).expect("nonsingular R")
            }
        }
    }

    /// Coefficients of the weighted least-squares polynomial `L_{n,2} f`.
    pub fn solve(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_len(samples)?;
        let weighted = DVector::from_iterator(samples.len(), samples.iter().zip(&self.layer.tau).map(|(f, t)| f * t));
        Ok(self.solve_gram(&(&self.cols * weighted)).data.into())
    }

    /// Values of a degree-`n` polynomial at the layer points.
    pub fn values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.cols.tr_mul(&DVector::from_column_slice(coeffs)).data.into()
    }

    /// Weighted least squares with per-point weights `omega` (not the layer's tau).
    fn solve_weighted(&self, omega: &[f64], samples: &[f64]) -> Option<Vec<f64>> {
        let dim = self.cols.nrows();
        let mut scaled = self.cols.clone();
        for (mut col, w) in scaled.column_iter_mut().zip(omega) {
            col *= w.sqrt();
        }
        let gram = &scaled * scaled.transpose();
        let rhs = DVector::from_iterator(dim, (0..dim).map(|j| {
            self.cols.row(j).iter().zip(omega).zip(samples).map(|((p, w), f)| p * w * f).sum()
        }));
        match Cholesky::new(gram.clone()) {
            Some(ch) => Some(ch.solve(&rhs).data.into()),
            None => gram.lu().solve(&rhs).map(|c| c.data.into()),
        }
    }
}

/// `L_{n,2} f` from samples at the layer points.
pub fn least_squares(layer: &MzLayer, samples: &[f64]) -> Result<CoefficientVector> {
    let coeffs = LeastSquares::new(layer)?.solve(samples)?;
    CoefficientVector::from_dense(layer.domain, layer.n, coeffs)
}

/// Settings for the iteratively reweighted least-squares solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    /// For q = 1: relative objective decrease of a full step below which the iteration stops.
    pub tol: f64,
    /// For q > 1: stop once [`first_order_residual`] falls to this value.
    pub stationarity: f64,
    /// Lower clip for residual magnitudes in the weights.
    pub delta: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-12,
            stationarity: 1e-10,
            delta: 1e-10,
        }
    }
}

/// Result of [`least_lq`].
#[derive(Debug, Clone, PartialEq)]
pub struct LqFit {
    pub coeffs: CoefficientVector,
    /// `sum tau_k |f(x_k) - P(x_k)|^q` at the returned polynomial.
    pub objective: f64,
    pub iterations: usize,
}

fn lq_objective(tau: &[f64], samples: &[f64], values: &[f64], q: f64) -> f64 {
    samples.iter().zip(values).zip(tau).map(|((f, p), t)| t * (f - p).abs().powf(q)).sum()
}

/// Weighted least-lq approximation `L_{n,q} f` for `1 <= q < infinity`.
///
/// Starts from the least-squares solution and iterates reweighted least squares with
/// weights `tau_k max(|r_k|, delta)^(q-2)`. The reweighted solution fixes a search direction
/// and the step length minimizes the objective exactly along it (plain reweighting, or its
/// Newton scaling `1/(q-1)`, oscillates when a residual approaches zero). For `q > 1` the
/// iteration stops at first-order stationarity; for `q = 1` (not differentiable) once a step
/// gains less than `tol` relative.
pub fn least_lq(layer: &MzLayer, samples: &[f64], q: f64, opts: &IrlsOptions) -> Result<LqFit> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(MzqError::InvalidParameter(format!("q must lie in [1, inf), got {q}")));
    }
    let system = LeastSquares::new(layer)?;
    least_lq_with(&system, samples, q, opts)
}

pub fn least_lq_with(system: &LeastSquares, samples: &[f64], q: f64, opts: &IrlsOptions) -> Result<LqFit> {
    let layer = system.layer;
    let tau = &layer.tau;
    let mut c = system.solve(samples)?;
    let mut values = system.values(&c);
    let mut obj = lq_objective(tau, samples, &values, q);
    let scale: f64 = lq_objective(tau, samples, &vec![0.0; samples.len()], q);
    let floor = scale * 1e-13f64.powf(q);
    let mut history = vec![obj];
    let mut iterations = 0;
    let step_scale = if q > 1.0 { 1.0 / (q - 1.0) } else { 1.0 };

    if q != 2.0 {
        while iterations < opts.max_iter && obj > floor {
            iterations += 1;
            let omega: Vec<f64> = samples
                .iter()
                .zip(&values)
                .zip(tau)
                .map(|((f, p), t)| t * (f - p).abs().max(opts.delta).powf(q - 2.0))
                .collect();
            let Some(target) = system.solve_weighted(&omega, samples) else {
                break;
            };
            let dir: Vec<f64> = target.iter().zip(&c).map(|(t, c)| t - c).collect();
            let residual: Vec<f64> = samples.iter().zip(&values).map(|(f, p)| f - p).collect();
            let slope = system.values(&dir);
            let Some(t) = line_search(tau, &residual, &slope, q, step_scale) else {
                break;
            };
            let trial: Vec<f64> = c.iter().zip(&dir).map(|(c, d)| c + t * d).collect();
            let trial_values = system.values(&trial);
            // near the minimizer the change is far below the rounding error of the objective
            // itself, so it is accumulated pointwise
            let change: f64 = samples
                .iter()
                .zip(&trial_values)
                .zip(&residual)
                .zip(tau)
                .map(|(((f, p), r), w)| w * ((f - p).abs().powf(q) - r.abs().powf(q)))
                .sum();
            if !(change <= 0.0) {
                break;
            }
            let trial_obj = lq_objective(tau, samples, &trial_values, q);
            let decrease = -change / obj;
            c = trial;
            values = trial_values;
            obj = trial_obj;
            history.push(obj);
            let converged = if q > 1.0 {
                first_order_residual(system, samples, &c, q) <= opts.stationarity
            } else {
                decrease < opts.tol
            };
            if converged {
                break;
            }
        }
        if iterations >= opts.max_iter {
            let tail = &history[history.len().saturating_sub(5)..];
            let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - tail.iter().copied().fold(f64::INFINITY, f64::min);
            if spread > 1e-6 * obj.max(floor) {
                return Err(MzqError::NoConvergence { iterations, history });
            }
        }
    }
    Ok(LqFit {
        coeffs: CoefficientVector::from_dense(layer.domain, layer.n, c)?,
        objective: obj,
        iterations,
    })
}

/// Minimizes the convex function `t -> sum tau_k |r_k - t s_k|^q` over `t >= 0` by bisection
/// on its derivative, starting from the bracket `[0, guess]`. `None` when `t = 0` is already
/// optimal, i.e. the direction is not a descent direction.
fn line_search(tau: &[f64], r: &[f64], s: &[f64], q: f64, guess: f64) -> Option<f64> {
    // derivative up to the positive factor q
    let deriv = |t: f64| -> f64 {
        r.iter()
            .zip(s)
            .zip(tau)
            .map(|((r, s), w)| {
                let e = r - t * s;
                -w * s * e.abs().powf(q - 1.0) * e.signum()
            })
            .sum()
    };
    if !(deriv(0.0) < 0.0) {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = guess;
    while deriv(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Some(lo);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest normalized directional derivative of `sum tau_k |r_k|^q` along the basis
/// directions, `|sum tau |r|^(q-1) sign(r) phi_j| / (||r||_(q)^(q-1) ||phi_j||_(q))`.
/// Zero at the minimizer for `q > 1`.
pub fn first_order_residual(system: &LeastSquares, samples: &[f64], coeffs: &[f64], q: f64) -> f64 {
    let tau = &system.layer.tau;
    let values = system.values(coeffs);
    let r: Vec<f64> = samples.iter().zip(&values).map(|(f, p)| f - p).collect();
    let rnorm = r.iter().zip(tau).map(|(r, t)| t * r.abs().powf(q)).sum::<f64>().powf((q - 1.0) / q);
    if rnorm == 0.0 {
        return 0.0;
    }
    let g: Vec<f64> = r.iter().zip(tau).map(|(r, t)| t * r.abs().powf(q - 1.0) * r.signum()).collect();
    let mut worst: f64 = 0.0;
    for row in system.cols.row_iter() {
        let deriv: f64 = row.iter().zip(&g).map(|(p, g)| p * g).sum();
        let pnorm = row.iter().zip(tau).map(|(p, t)| t * p.abs().powf(q)).sum::<f64>().powf(1.0 / q);
        worst = worst.max(deriv.abs() / (rnorm * pnorm));
    }
    worst
}

/// Filtered approximation `V_n f = sum_k eta(k/n) Proj_k f`, with projections computed by
/// the reference quadrature. The result has degree `2n - 1`.
pub fn filtered_approx<F: Function + ?Sized>(
    f: &F,
    domain: &Domain,
    n: usize,
    filter: &dyn Filter,
) -> Result<CoefficientVector> {
    if n == 0 {
        return Err(MzqError::InvalidParameter("the filtered approximation needs n >= 1".into()));
    }
    let degree = 2 * n - 1;
    let order = default_order(degree);
    if order < 2 * degree {
        return Err(MzqError::OracleTooCoarse { order, degree });
    }
    let rule = OracleRule::new(*domain, order);
    let values = f.eval_many(&rule.nodes);
    let eval = BasisEvaluator::new(*domain, degree);
    let mut coeffs = vec![0.0; eval.len()];
    let mut row = vec![0.0; eval.len()];
    for ((x, w), v) in rule.nodes.iter().zip(&rule.weights).zip(&values) {
        eval.eval_into(x, &mut row);
        for (c, p) in coeffs.iter_mut().zip(&row) {
            *c += w * v * p;
        }
    }
    for k in 0..=degree {
        let eta = filter.eval(k as f64 / n as f64);
        let start = domain.degree_offset(k);
        for c in &mut coeffs[start..start + domain.component_dim(k)] {
            *c *= eta;
        }
    }
    CoefficientVector::from_dense(*domain, degree, coeffs)
}

/// `||f - P||_{q}` under the domain measure, on a grid exact to degree
/// `max(2 deg P + 8, 144)`.
pub fn lq_error<F: Function + ?Sized>(f: &F, approximant: &CoefficientVector, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(MzqError::InvalidParameter(format!("q must lie in [1, inf), got {q}")));
    }
    let rule = OracleRule::new(approximant.domain, default_order(approximant.max_degree).max(DENSE_ORDER));
    let fv = f.eval_many(&rule.nodes);
    let pv = approximant.eval_many(&rule.nodes);
    let s: Vec<f64> = fv.iter().zip(&pv).map(|(a, b)| (a - b).abs().powf(q)).collect();
    Ok(rule.integrate_values(&s).powf(1.0 / q))
}
