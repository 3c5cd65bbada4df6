//! Domains: the interval and disk with a Jacobi weight, and the 2-sphere.
//!
//! Every domain embeds isometrically into a unit sphere through [`Domain::lift`]:
//! a ball point `x` goes to `(x, sqrt(1 - |x|^2))` on the upper hemisphere, and the
//! ball metric is the geodesic distance between lifted points.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MzqError, Result};

/// Points are stored with three coordinates. The interval uses `[t, 0, 0]`, the disk
/// `[x, y, 0]` and the sphere `[x, y, z]`.
pub type Point = [f64; 3];

/// Slack allowed when checking that a point lies in its domain.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    /// The ball of dimension 1, i.e. `[-1, 1]`.
    Interval,
    /// The unit disk in the plane.
    Disk,
    /// The unit sphere in three dimensions.
    Sphere2,
}

/// A domain with its probability measure: `b (1 - |x|^2)^(mu - 1/2) dx` on the balls and
/// normalized surface measure on the sphere (where `mu` is ignored).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub mu: f64,
}

impl Domain {
    pub fn new(kind: DomainKind, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(MzqError::InvalidParameter(format!(
                "Jacobi parameter mu must be finite and >= 0, got {mu}"
            )));
        }
        let mu = if kind == DomainKind::Sphere2 { 0.0 } else { mu };
        Ok(Self { kind, mu })
    }

    pub fn interval(mu: f64) -> Self {
        Self::new(DomainKind::Interval, mu).expect("mu must be >= 0")
    }

    pub fn disk(mu: f64) -> Self {
        Self::new(DomainKind::Disk, mu).expect("mu must be >= 0")
    }

    pub fn sphere() -> Self {
        Self {
            kind: DomainKind::Sphere2,
            mu: 0.0,
        }
    }

    pub fn is_ball(&self) -> bool {
        self.kind != DomainKind::Sphere2
    }

    /// Manifold dimension `d`.
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Disk | DomainKind::Sphere2 => 2,
        }
    }

    /// Number of stored coordinates that carry information.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Disk => 2,
            DomainKind::Sphere2 => 3,
        }
    }

    /// Effective dimension `d + 2 mu` on the ball, `d` on the sphere.
    pub fn effective_dim(&self) -> f64 {
        match self.kind {
            DomainKind::Sphere2 => 2.0,
            _ => self.dim() as f64 + 2.0 * self.mu,
        }
    }

    /// Jacobi exponent `alpha = mu - 1/2` of the radial weight.
    pub fn alpha(&self) -> f64 {
        self.mu - 0.5
    }

    /// Dimension of the degree-`n` orthogonal component.
    pub fn component_dim(&self, n: usize) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Disk => n + 1,
            DomainKind::Sphere2 => 2 * n + 1,
        }
    }

    /// Dimension of the polynomial space of degree at most `n`.
    pub fn poly_dim(&self, n: usize) -> usize {
        match self.kind {
            DomainKind::Interval => n + 1,
            DomainKind::Disk => (n + 1) * (n + 2) / 2,
            DomainKind::Sphere2 => (n + 1) * (n + 1),
        }
    }

    /// Column offset of the first degree-`n` basis function.
    pub fn degree_offset(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.poly_dim(n - 1)
        }
    }

    /// Eigenvalue of `-D_mu` (ball) or `-Laplace-Beltrami` (sphere) on degree `n`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.kind {
            DomainKind::Sphere2 => n * (n + 1.0),
            _ => n * (n + 2.0 * self.mu + self.dim() as f64 - 1.0),
        }
    }

    /// Density of the probability measure with respect to Lebesgue measure on the ball.
    pub fn weight(&self, x: &Point) -> f64 {
        match self.kind {
            DomainKind::Sphere2 => 1.0,
            DomainKind::Interval => {
                let b = normalization(self.kind, self.mu);
                b * (1.0 - x[0] * x[0]).max(0.0).powf(self.alpha())
            }
            DomainKind::Disk => {
                let b = normalization(self.kind, self.mu);
                b * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).powf(self.alpha())
            }
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        if !x.iter().all(|c| c.is_finite()) {
            return false;
        }
        match self.kind {
            DomainKind::Interval => x[0].abs() <= 1.0 + DOMAIN_TOL && x[1] == 0.0 && x[2] == 0.0,
            DomainKind::Disk => (x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 + DOMAIN_TOL && x[2] == 0.0,
            DomainKind::Sphere2 => ((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 1.0).abs() <= DOMAIN_TOL,
        }
    }

    pub fn check(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(MzqError::OutsideDomain {
                domain: self.to_string(),
                point: x[..self.ambient_dim()].to_vec(),
            })
        }
    }

    /// Builds a point from its informative coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(MzqError::LengthMismatch {
                expected: self.ambient_dim(),
                got: coords.len(),
            });
        }
        let mut p = [0.0; 3];
        p[..coords.len()].copy_from_slice(coords);
        self.check(&p)?;
        Ok(p)
    }

    /// Embeds a point into the unit sphere so that the domain metric is the geodesic distance.
    pub fn lift(&self, x: &Point) -> [f64; 3] {
        match self.kind {
            DomainKind::Interval => [x[0], (1.0 - x[0] * x[0]).max(0.0).sqrt(), 0.0],
            DomainKind::Disk => [x[0], x[1], (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt()],
            DomainKind::Sphere2 => *x,
        }
    }

    /// Inverse of [`Domain::lift`] for lifted points on the admissible part of the sphere.
    pub fn unlift(&self, v: &[f64; 3]) -> Point {
        match self.kind {
            DomainKind::Interval => [v[0].clamp(-1.0, 1.0), 0.0, 0.0],
            DomainKind::Disk => {
                let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
                if r > 1.0 {
                    [v[0] / r, v[1] / r, 0.0]
                } else {
                    [v[0], v[1], 0.0]
                }
            }
            DomainKind::Sphere2 => {
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / r, v[1] / r, v[2] / r]
            }
        }
    }

    /// Ball metric `arccos(x.y + sqrt(1-|x|^2) sqrt(1-|y|^2))`, geodesic distance on the sphere.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        lifted_distance(&self.lift(x), &self.lift(y))
    }

    /// Metric diameter of the domain.
    pub fn diameter(&self) -> f64 {
        PI
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DomainKind::Interval => write!(f, "interval(mu={})", self.mu),
            DomainKind::Disk => write!(f, "disk(mu={})", self.mu),
            DomainKind::Sphere2 => write!(f, "sphere2"),
        }
    }
}

/// Geodesic distance between unit vectors, `atan2(|u x v|, u.v)`.
///
/// Equal to `arccos(u.v)` clamped to `[-1, 1]`, but accurate for nearly coincident points.
pub fn lifted_distance(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
}

/// Chord length of a geodesic arc of length `d`.
pub fn chord(d: f64) -> f64 {
    2.0 * (d.clamp(0.0, PI) / 2.0).sin()
}

/// The constant `b_d^mu` making the ball weight a probability density.
pub fn normalization(kind: DomainKind, mu: f64) -> f64 {
    let alpha = mu - 0.5;
    match kind {
        // integral of (1-t^2)^alpha over [-1,1] is B(1/2, alpha+1)
        DomainKind::Interval => {
            let lb = statrs::function::gamma::ln_gamma(0.5) + statrs::function::gamma::ln_gamma(alpha + 1.0)
                - statrs::function::gamma::ln_gamma(alpha + 1.5);
            (-lb).exp()
        }
        DomainKind::Disk => (alpha + 1.0) / PI,
        DomainKind::Sphere2 => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let disk = Domain::disk(0.5);
        assert_eq!(disk.poly_dim(3), 10);
        assert_eq!(disk.component_dim(4), 5);
        assert_eq!(Domain::sphere().poly_dim(2), 9);
        assert_eq!(Domain::sphere().component_dim(0), 1);
        assert_eq!(Domain::interval(0.0).poly_dim(5), 6);
        assert_eq!(disk.degree_offset(3), 6);
    }

    #[test]
    fn eigenvalues() {
        let disk = Domain::disk(0.5);
        assert_eq!(disk.eigenvalue(0), 0.0);
        assert_eq!(disk.eigenvalue(3), 15.0);
        assert_eq!(Domain::sphere().eigenvalue(2), 6.0);
    }

    #[test]
    fn metric_examples() {
        let disk = Domain::disk(0.0);
        let x = [1.0, 0.0, 0.0];
        let y = [-1.0, 0.0, 0.0];
        assert_eq!(disk.distance(&x, &x), 0.0);
        assert!((disk.distance(&x, &y) - PI).abs() < 1e-15);
        let z = [0.3, 0.4, 0.0];
        assert_eq!(disk.distance(&z, &z), 0.0);
    }

    #[test]
    fn rejects_negative_mu_and_outside_points() {
        assert!(Domain::new(DomainKind::Disk, -0.1).is_err());
        let disk = Domain::disk(0.5);
        assert!(disk.point(&[0.8, 0.7]).is_err());
        assert!(disk.point(&[0.6, 0.8]).is_ok());
        assert!(Domain::sphere().point(&[1.0, 0.0, 0.1]).is_err());
    }

    #[test]
    fn lift_round_trip() {
        let disk = Domain::disk(1.0);
        let p = [0.2, -0.7, 0.0];
        assert_eq!(disk.unlift(&disk.lift(&p)), p);
    }
}
