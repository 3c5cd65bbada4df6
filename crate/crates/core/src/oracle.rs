//! Reference quadrature on each domain, exact for polynomials up to a requested degree.
//!
//! * interval: Gauss-Jacobi for `(1 - t^2)^(mu - 1/2)`;
//! * disk: Gauss-Jacobi in `s = 2r^2 - 1` with weight `(1 - s)^(mu - 1/2)`, times an
//!   equispaced rule in the angle;
//! * sphere: Gauss-Legendre in `z` times an equispaced rule in the azimuth.
//!
//! Weights always sum to one (the measures are probability measures).

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::domain::{Domain, DomainKind, Point};
use crate::error::{MzqError, Result};
use crate::jacobi::gauss_jacobi;

/// Environment variable that replaces every default oracle order.
pub const ORDER_ENV: &str = "MZQ_ORACLE_ORDER";

/// The order forced through [`ORDER_ENV`], if set. Read once per process.
pub fn order_override() -> Result<Option<usize>> {
    static CELL: OnceLock<std::result::Result<Option<usize>, String>> = OnceLock::new();
    let parsed = CELL.get_or_init(|| match std::env::var(ORDER_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(Some(v)),
            _ => Err(format!("{ORDER_ENV} must be a positive integer, got {text:?}")),
        },
    });
    parsed.clone().map_err(MzqError::InvalidParameter)
}

/// Default exactness degree for integrands built from products of degree-`n` polynomials,
/// unless overridden through [`ORDER_ENV`].
pub fn default_order(max_degree: usize) -> usize {
    match order_override() {
        Ok(Some(order)) => order,
        _ => 2 * max_degree + 8,
    }
}

#[derive(Debug, Clone)]
pub struct OracleRule {
    pub domain: Domain,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly (0 for density grids).
    pub order: usize,
}

impl OracleRule {
    /// Rule exact for every polynomial of total degree `<= order`.
    pub fn new(domain: Domain, order: usize) -> Self {
        let (radial, angular) = match domain.kind {
            DomainKind::Interval => (order / 2 + 1, 1),
            DomainKind::Disk => (order / 4 + 2, order + 1),
            DomainKind::Sphere2 => (order / 2 + 1, order + 1),
        };
        let mut rule = Self::tensor(domain, radial, angular);
        rule.order = order;
        rule
    }

    /// Tensor grid with at least `min_nodes` nodes; used for measure estimates.
    pub fn dense(domain: Domain, min_nodes: usize) -> Self {
        let (radial, angular) = match domain.kind {
            DomainKind::Interval => return Self::interval_midpoint(domain, min_nodes.max(1)),
            _ => {
                let r = ((min_nodes as f64 / 2.0).sqrt().ceil() as usize).max(1);
                (r, 2 * r)
            }
        };
        Self::tensor(domain, radial, angular)
    }

    /// Midpoint rule in `theta = arccos t`, where the weight becomes `sin(theta)^(2 mu)`.
    fn interval_midpoint(domain: Domain, count: usize) -> Self {
        let nodes: Vec<Point> = (0..count)
            .map(|k| [(PI * (k as f64 + 0.5) / count as f64).cos(), 0.0, 0.0])
            .collect();
        let raw: Vec<f64> = (0..count)
            .map(|k| (PI * (k as f64 + 0.5) / count as f64).sin().powf(2.0 * domain.mu))
            .collect();
        let total: f64 = raw.iter().sum();
        Self {
            domain,
            nodes,
            weights: raw.into_iter().map(|w| w / total).collect(),
            order: 0,
        }
    }

    fn tensor(domain: Domain, radial: usize, angular: usize) -> Self {
        let alpha = domain.alpha();
        let mut nodes = Vec::with_capacity(radial * angular);
        let mut weights = Vec::with_capacity(radial * angular);
        match domain.kind {
            DomainKind::Interval => {
                let (x, w) = gauss_jacobi(radial, alpha, alpha);
                for (x, w) in x.into_iter().zip(w) {
                    nodes.push([x, 0.0, 0.0]);
                    weights.push(w);
                }
            }
            DomainKind::Disk => {
                let (s, w) = gauss_jacobi(radial, alpha, 0.0);
                for (s, w) in s.into_iter().zip(w) {
                    let r = ((1.0 + s) / 2.0).max(0.0).sqrt();
                    for j in 0..angular {
                        let theta = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                        nodes.push([r * theta.cos(), r * theta.sin(), 0.0]);
                        weights.push(w / angular as f64);
                    }
                }
            }
            DomainKind::Sphere2 => {
                let (z, w) = gauss_jacobi(radial, 0.0, 0.0);
                for (z, w) in z.into_iter().zip(w) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for j in 0..angular {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                        nodes.push([rho * phi.cos(), rho * phi.sin(), z]);
                        weights.push(w / angular as f64);
                    }
                }
            }
        }
        Self {
            domain,
            nodes,
            weights,
            order: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Integral of tabulated values at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for d in [Domain::interval(0.0), Domain::disk(0.0), Domain::disk(1.5), Domain::sphere()] {
            let r = OracleRule::new(d, 20);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let r = OracleRule::dense(d, 5000);
            assert!(r.len() >= 5000);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_moments_match_closed_form() {
        // E|x|^{2k} under b(1-r^2)^alpha dx equals (alpha+1) B(k+1, alpha+1).
        let mu: f64 = 1.5;
        let alpha = mu - 0.5;
        let rule = OracleRule::new(Domain::disk(mu), 16);
        for k in 0..=4 {
            let q = rule.integrate(|x| (x[0] * x[0] + x[1] * x[1]).powi(k));
            let mut exact = 1.0;
            for i in 1..=k {
                exact *= i as f64 / (i as f64 + alpha + 1.0);
            }
            assert!((q - exact).abs() < 1e-13, "k={k}: {q} vs {exact}");
        }
        // odd and anisotropic monomials
        let q = rule.integrate(|x| x[0].powi(3) * x[1]);
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn sphere_moments() {
        let rule = OracleRule::new(Domain::sphere(), 12);
        let q = rule.integrate(|x| x[2] * x[2]);
        assert!((q - 1.0 / 3.0).abs() < 1e-14);
        let q = rule.integrate(|x| x[0] * x[0] * x[1] * x[1]);
        assert!((q - 1.0 / 15.0).abs() < 1e-14);
    }
}
