//! Orthonormal polynomial bases, reproducing kernels and related spectral quantities.
//!
//! Columns of every basis block are ordered lexicographically by `(degree, within)`.
//! Within a degree the disk and sphere bases are ordered by angular order `m` ascending,
//! with the cosine member of each pair before the sine member.
//!
//! * interval: orthonormal Jacobi polynomials for `(1 - t^2)^(mu - 1/2)`;
//! * disk: `C_m p_j^(mu - 1/2, m)(2|x|^2 - 1) Re/Im (x + iy)^m`, degree `m + 2j`;
//! * sphere: real spherical harmonics from normalized associated Legendre recurrences.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domain::{Domain, DomainKind, Point};
use crate::error::{MzqError, Result};
use crate::filter::Filter;
use crate::jacobi::JacobiRecurrence;

/// Identifies `phi_{nk}`: `degree = n`, `within = k` with `1 <= k <= component_dim(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub degree: usize,
    pub within: usize,
}

impl BasisIndex {
    pub fn new(degree: usize, within: usize) -> Self {
        Self { degree, within }
    }

    /// Flat column of this index in a basis block.
    pub fn column(&self, domain: &Domain) -> Result<usize> {
        if self.within == 0 || self.within > domain.component_dim(self.degree) {
            return Err(MzqError::IndexOutOfRange {
                degree: self.degree,
                within: self.within,
            });
        }
        Ok(domain.degree_offset(self.degree) + self.within - 1)
    }

    /// Inverse of [`BasisIndex::column`].
    pub fn from_column(domain: &Domain, column: usize) -> Self {
        let mut n = 0;
        while domain.poly_dim(n) <= column {
            n += 1;
        }
        Self::new(n, column - domain.degree_offset(n) + 1)
    }
}

/// Angular order and trigonometric member of a disk or sphere basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trig {
    Cos,
    Sin,
}

fn disk_angular(idx: BasisIndex) -> (usize, Trig) {
    let n = idx.degree;
    let k = idx.within;
    if n % 2 == 0 {
        if k == 1 {
            (0, Trig::Cos)
        } else {
            (2 * (k / 2), if k % 2 == 0 { Trig::Cos } else { Trig::Sin })
        }
    } else {
        (2 * ((k - 1) / 2) + 1, if (k - 1) % 2 == 0 { Trig::Cos } else { Trig::Sin })
    }
}

fn disk_position(n: usize, m: usize, trig: Trig) -> usize {
    let i = (m - n % 2) / 2;
    match (n % 2, trig) {
        (0, Trig::Cos) if m == 0 => 0,
        (0, Trig::Cos) => 2 * i - 1,
        (0, Trig::Sin) => 2 * i,
        (_, Trig::Cos) => 2 * i,
        (_, Trig::Sin) => 2 * i + 1,
    }
}

fn sphere_angular(idx: BasisIndex) -> (usize, Trig) {
    let k = idx.within;
    if k == 1 {
        (0, Trig::Cos)
    } else if k % 2 == 0 {
        (k / 2, Trig::Cos)
    } else {
        ((k - 1) / 2, Trig::Sin)
    }
}

fn sphere_position(m: usize, trig: Trig) -> usize {
    match trig {
        Trig::Cos if m == 0 => 0,
        Trig::Cos => 2 * m - 1,
        Trig::Sin => 2 * m,
    }
}

/// Normalizing factor of the disk functions with angular order `m`.
fn disk_norm(alpha: f64, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        let mf = m as f64;
        let ln_beta = ln_gamma(alpha + 1.0) + ln_gamma(mf + 1.0) - ln_gamma(alpha + mf + 2.0);
        (0.5 * (2f64.ln() - (alpha + 1.0).ln() - ln_beta)).exp()
    }
}

/// Powers `(x + iy)^m` for `m = 0..=max`.
fn complex_powers(x: f64, y: f64, max: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(max + 1);
    let (mut re, mut im) = (1.0, 0.0);
    out.push((re, im));
    for _ in 0..max {
        let nre = re * x - im * y;
        im = re * y + im * x;
        re = nre;
        out.push((re, im));
    }
    out
}

/// `Q_n^m(z)` for `n = m..=max`: normalized associated Legendre functions divided by
/// `sin^m(theta)`, so that `Y = Q Re/Im (x + iy)^m` is a polynomial.
fn legendre_column(m: usize, q_mm: f64, z: f64, max: usize, out: &mut Vec<f64>) {
    out.clear();
    if m > max {
        return;
    }
    out.push(q_mm);
    if m + 1 > max {
        return;
    }
    out.push((2.0 * m as f64 + 3.0).sqrt() * z * q_mm);
    let mf = m as f64;
    for n in m + 2..=max {
        let nf = n as f64;
        let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
        let b = (((nf - 1.0).powi(2) - mf * mf) / (4.0 * (nf - 1.0).powi(2) - 1.0)).sqrt();
        let len = out.len();
        let v = a * (z * out[len - 1] - b * out[len - 2]);
        out.push(v);
    }
}

/// `Q_m^m`, independent of the point.
fn legendre_diag(m: usize) -> f64 {
    let mut q = 1.0;
    for k in 1..=m {
        let kf = k as f64;
        q *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt();
    }
    q
}

#[derive(Debug, Clone)]
enum Tables {
    Interval(JacobiRecurrence),
    Disk { recs: Vec<JacobiRecurrence>, norms: Vec<f64> },
    Sphere { diag: Vec<f64> },
}

/// Evaluates every basis function of degree at most `max_degree` at a point.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    domain: Domain,
    max_degree: usize,
    tables: Tables,
}

impl BasisEvaluator {
    pub fn new(domain: Domain, max_degree: usize) -> Self {
        let alpha = domain.alpha();
        let tables = match domain.kind {
            DomainKind::Interval => Tables::Interval(JacobiRecurrence::new(alpha, alpha, max_degree + 1)),
            DomainKind::Disk => {
                let recs = (0..=max_degree)
                    .map(|m| JacobiRecurrence::new(alpha, m as f64, (max_degree - m) / 2 + 1))
                    .collect();
                let norms = (0..=max_degree).map(|m| disk_norm(alpha, m)).collect();
                Tables::Disk { recs, norms }
            }
            DomainKind::Sphere2 => Tables::Sphere {
                diag: (0..=max_degree).map(legendre_diag).collect(),
            },
        };
        Self {
            domain,
            max_degree,
            tables,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of basis functions, i.e. the dimension of the polynomial space.
    pub fn len(&self) -> usize {
        self.domain.poly_dim(self.max_degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fills `out[j] = phi_j(x)`; `out.len()` must equal [`BasisEvaluator::len`].
    /// The point is not validated.
    pub fn eval_into(&self, x: &Point, out: &mut [f64]) {
        assert_eq!(out.len(), self.len());
        let nmax = self.max_degree;
        match &self.tables {
            Tables::Interval(rec) => rec.eval_into(x[0], out),
            Tables::Disk { recs, norms } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let s = 2.0 * r2 - 1.0;
                let pw = complex_powers(x[0], x[1], nmax);
                let mut radial = vec![0.0; nmax / 2 + 1];
                for m in 0..=nmax {
                    let jmax = (nmax - m) / 2;
                    let rad = &mut radial[..=jmax];
                    recs[m].eval_into(s, rad);
                    let (re, im) = pw[m];
                    let c = norms[m];
                    for (j, &p) in rad.iter().enumerate() {
                        let n = m + 2 * j;
                        let base = self.domain.degree_offset(n);
                        out[base + disk_position(n, m, Trig::Cos)] = c * p * re;
                        if m > 0 {
                            out[base + disk_position(n, m, Trig::Sin)] = c * p * im;
                        }
                    }
                }
            }
            Tables::Sphere { diag } => {
                let pw = complex_powers(x[0], x[1], nmax);
                let mut col = Vec::with_capacity(nmax + 1);
                let sqrt2 = std::f64::consts::SQRT_2;
                for m in 0..=nmax {
                    legendre_column(m, diag[m], x[2], nmax, &mut col);
                    let (re, im) = pw[m];
                    for (i, &q) in col.iter().enumerate() {
                        let n = m + i;
                        let base = n * n;
                        if m == 0 {
                            out[base] = q;
                        } else {
                            out[base + sphere_position(m, Trig::Cos)] = sqrt2 * q * re;
                            out[base + sphere_position(m, Trig::Sin)] = sqrt2 * q * im;
                        }
                    }
                }
            }
        }
    }

    pub fn eval(&self, x: &Point) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// Basis block with one row per point.
    pub fn block(&self, points: &[Point]) -> DMatrix<f64> {
        let mut phi = DMatrix::zeros(points.len(), self.len());
        let mut row = vec![0.0; self.len()];
        for (i, x) in points.iter().enumerate() {
            self.eval_into(x, &mut row);
            for (j, v) in row.iter().enumerate() {
                phi[(i, j)] = *v;
            }
        }
        phi
    }

    /// `sum_j coeffs[j] phi_j(x)` for `coeffs.len() <= len()`.
    pub fn combine(&self, coeffs: &[f64], x: &Point) -> f64 {
        let vals = self.eval(x);
        coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum()
    }
}

/// Evaluates a single basis function `phi_{nk}(x)` (ball) or `Y_{nk}(x)` (sphere).
///
/// This path runs only the recurrence for the requested angular order and does not go
/// through [`BasisEvaluator`].
pub fn eval_basis(domain: &Domain, idx: BasisIndex, x: &Point) -> Result<f64> {
    idx.column(domain)?;
    domain.check(x)?;
    let n = idx.degree;
    let alpha = domain.alpha();
    Ok(match domain.kind {
        DomainKind::Interval => JacobiRecurrence::new(alpha, alpha, n + 1).eval(n, x[0]),
        DomainKind::Disk => {
            let (m, trig) = disk_angular(idx);
            let j = (n - m) / 2;
            let r2 = x[0] * x[0] + x[1] * x[1];
            let p = JacobiRecurrence::new(alpha, m as f64, j + 1).eval(j, 2.0 * r2 - 1.0);
            let (re, im) = complex_powers(x[0], x[1], m)[m];
            disk_norm(alpha, m) * p * if trig == Trig::Cos { re } else { im }
        }
        DomainKind::Sphere2 => {
            let (m, trig) = sphere_angular(idx);
            let mut col = Vec::new();
            legendre_column(m, legendre_diag(m), x[2], n, &mut col);
            let q = col[n - m];
            if m == 0 {
                q
            } else {
                let (re, im) = complex_powers(x[0], x[1], m)[m];
                std::f64::consts::SQRT_2 * q * if trig == Trig::Cos { re } else { im }
            }
        }
    })
}

/// Basis block `Phi[i][j] = phi_j(x_i)` over all indices of degree at most `max_degree`.
pub fn eval_basis_block(domain: &Domain, max_degree: usize, points: &[Point]) -> Result<DMatrix<f64>> {
    for p in points {
        domain.check(p)?;
    }
    Ok(BasisEvaluator::new(*domain, max_degree).block(points))
}

/// `P_n(x, y) = sum_k phi_{nk}(x) phi_{nk}(y)`, the reproducing kernel of the degree-`n` component.
pub fn reproducing_kernel(domain: &Domain, n: usize, x: &Point, y: &Point) -> Result<f64> {
    domain.check(x)?;
    domain.check(y)?;
    let ev = BasisEvaluator::new(*domain, n);
    let fx = ev.eval(x);
    let fy = ev.eval(y);
    Ok(component_kernel(domain, n, &fx, &fy))
}

fn component_kernel(domain: &Domain, n: usize, fx: &[f64], fy: &[f64]) -> f64 {
    let lo = domain.degree_offset(n);
    let hi = domain.poly_dim(n);
    (lo..hi).map(|j| fx[j] * fy[j]).sum()
}

/// `K_{n,eta}(x, y) = sum_{k < 2n} eta(k/n) P_k(x, y)`.
pub fn filtered_kernel(domain: &Domain, filter: &dyn Filter, n: usize, x: &Point, y: &Point) -> Result<f64> {
    if n == 0 {
        return Err(MzqError::InvalidParameter("filtered kernel needs n >= 1".into()));
    }
    domain.check(x)?;
    domain.check(y)?;
    let top = 2 * n - 1;
    let ev = BasisEvaluator::new(*domain, top);
    let fx = ev.eval(x);
    let fy = ev.eval(y);
    Ok((0..=top)
        .map(|k| filter.eval(k as f64 / n as f64) * component_kernel(domain, k, &fx, &fy))
        .sum())
}

/// `n(n + 2mu + d - 1)` on the ball, `n(n + d - 1)` on the sphere.
pub fn eigenvalue(domain: &Domain, n: usize) -> f64 {
    domain.eigenvalue(n)
}

/// The ball metric (geodesic distance on the sphere).
pub fn ball_metric(domain: &Domain, x: &Point, y: &Point) -> f64 {
    domain.distance(x, y)
}

/// `W_mu(n; x) = (sqrt(1 - |x|^2) + 1/n)^(2 mu)`.
pub fn weight_envelope(domain: &Domain, n: usize, x: &Point) -> Result<f64> {
    if !domain.is_ball() {
        return Err(MzqError::InvalidParameter("the weight envelope is defined on the ball only".into()));
    }
    if n == 0 {
        return Err(MzqError::InvalidParameter("weight envelope needs n >= 1".into()));
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    Ok(((1.0 - r2).max(0.0).sqrt() + 1.0 / n as f64).powf(2.0 * domain.mu))
}

/// The localization envelope `n^d / (sqrt(W(n;x) W(n;y)) (1 + n d(x,y))^(d + mu + 1))`
/// bounding the filtered kernel on the ball.
pub fn kernel_envelope(domain: &Domain, n: usize, x: &Point, y: &Point) -> Result<f64> {
    let wx = weight_envelope(domain, n, x)?;
    let wy = weight_envelope(domain, n, y)?;
    let d = domain.dim() as f64;
    let nf = n as f64;
    Ok(nf.powf(d) / ((wx * wy).sqrt() * (1.0 + nf * domain.distance(x, y)).powf(d + domain.mu + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_round_trip() {
        for domain in [Domain::interval(0.5), Domain::disk(0.5), Domain::sphere()] {
            for col in 0..domain.poly_dim(9) {
                let idx = BasisIndex::from_column(&domain, col);
                assert_eq!(idx.column(&domain).unwrap(), col);
            }
        }
    }

    #[test]
    fn positions_cover_each_degree_once() {
        for n in 0..10 {
            let mut seen = vec![false; n + 1];
            for k in 1..=n + 1 {
                let (m, t) = disk_angular(BasisIndex::new(n, k));
                let p = disk_position(n, m, t);
                assert_eq!(p, k - 1);
                assert!(!seen[p]);
                seen[p] = true;
            }
            for k in 1..=2 * n + 1 {
                let (m, t) = sphere_angular(BasisIndex::new(n, k));
                assert_eq!(sphere_position(m, t), k - 1);
            }
        }
    }

    #[test]
    fn constant_and_odd_examples() {
        let disk = Domain::disk(0.5);
        let v = eval_basis(&disk, BasisIndex::new(0, 1), &[0.3, -0.2, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let line = Domain::interval(0.5);
        assert_eq!(eval_basis(&line, BasisIndex::new(1, 1), &[0.0; 3]).unwrap(), 0.0);
        let s = Domain::sphere();
        assert!((eval_basis(&s, BasisIndex::new(0, 1), &[0.0, 0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn index_and_domain_errors() {
        let disk = Domain::disk(0.5);
        assert!(matches!(
            eval_basis(&disk, BasisIndex::new(2, 4), &[0.0; 3]),
            Err(MzqError::IndexOutOfRange { .. })
        ));
        assert!(eval_basis(&disk, BasisIndex::new(2, 0), &[0.0; 3]).is_err());
        assert!(matches!(
            eval_basis(&disk, BasisIndex::new(1, 1), &[1.0, 0.1, 0.0]),
            Err(MzqError::OutsideDomain { .. })
        ));
        // boundary within tolerance is accepted
        assert!(eval_basis(&disk, BasisIndex::new(1, 1), &[1.0 + 5e-13, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn block_shapes() {
        let disk = Domain::disk(0.5);
        let phi = eval_basis_block(&disk, 0, &[[0.1, 0.2, 0.0]]).unwrap();
        assert_eq!(phi.shape(), (1, 1));
        assert!((phi[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(eval_basis_block(&disk, 3, &[[0.0; 3]]).unwrap().ncols(), 10);
        assert_eq!(eval_basis_block(&Domain::sphere(), 2, &[[0.0, 0.0, 1.0]]).unwrap().ncols(), 9);
    }

    #[test]
    fn single_and_block_paths_agree() {
        for domain in [Domain::interval(1.5), Domain::disk(0.0), Domain::disk(1.5), Domain::sphere()] {
            let x = match domain.kind {
                DomainKind::Interval => [0.37, 0.0, 0.0],
                DomainKind::Disk => [0.3, -0.55, 0.0],
                DomainKind::Sphere2 => {
                    let v = [0.3f64, -0.55, 0.2];
                    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    [v[0] / r, v[1] / r, v[2] / r]
                }
            };
            let ev = BasisEvaluator::new(domain, 11);
            let all = ev.eval(&x);
            for (col, v) in all.iter().enumerate() {
                let idx = BasisIndex::from_column(&domain, col);
                let w = eval_basis(&domain, idx, &x).unwrap();
                assert!((v - w).abs() <= 1e-12 * (1.0 + v.abs()), "{domain} {idx:?}: {v} vs {w}");
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let disk = Domain::disk(0.5);
        let x = [0.1, 0.2, 0.0];
        let y = [-0.4, 0.5, 0.0];
        assert!((reproducing_kernel(&disk, 0, &x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            reproducing_kernel(&disk, 5, &x, &y).unwrap(),
            reproducing_kernel(&disk, 5, &y, &x).unwrap()
        );
        let k1 = filtered_kernel(&disk, &crate::filter::SmoothStep, 1, &x, &y).unwrap();
        let p1 = reproducing_kernel(&disk, 1, &x, &y).unwrap();
        assert!((k1 - 1.0 - p1).abs() < 1e-14);
        assert!(filtered_kernel(&disk, &crate::filter::SmoothStep, 0, &x, &y).is_err());
    }

    #[test]
    fn envelope_examples() {
        let d0 = Domain::disk(0.0);
        assert_eq!(weight_envelope(&d0, 7, &[0.5, 0.5, 0.0]).unwrap(), 1.0);
        let d = Domain::disk(0.5);
        assert!((weight_envelope(&d, 2, &[0.0; 3]).unwrap() - 1.5).abs() < 1e-15);
        assert!(weight_envelope(&Domain::sphere(), 2, &[0.0, 0.0, 1.0]).is_err());
    }
}
