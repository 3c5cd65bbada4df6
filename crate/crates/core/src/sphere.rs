//! Sphere specifics: real spherical harmonics and rotations of the sphere.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{eval_basis, BasisIndex};
use crate::domain::{Domain, Point};
use crate::error::Result;

/// Real spherical harmonic `Y_{nk}(x)`, orthonormal for the normalized surface measure.
pub fn sphere_basis(n: usize, k: usize, x: &Point) -> Result<f64> {
    eval_basis(&Domain::sphere(), BasisIndex::new(n, k), x)
}

/// A uniformly distributed rotation matrix (from a normalized Gaussian quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let mut q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= norm);
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], x: &Point) -> Point {
    std::array::from_fn(|i| r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientVector;
    use crate::mzfamily::random_coefficients;
    use crate::oracle::{default_order, OracleRule};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_harmonic_and_addition_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let x = rotate(&r, &[0.0, 0.0, 1.0]);
            assert!((sphere_basis(0, 1, &x).unwrap() - 1.0).abs() < 1e-15);
            for n in 1..8 {
                let s: f64 = (1..=2 * n + 1).map(|k| sphere_basis(n, k, &x).unwrap().powi(2)).sum();
                assert!((s - (2 * n + 1) as f64).abs() < 1e-10);
            }
        }
        assert!(sphere_basis(1, 1, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rotation_preserves_norm() {
        let domain = Domain::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = CoefficientVector::from_dense(domain, 6, random_coefficients(&mut rng, 49)).unwrap();
        let r = random_rotation(&mut rng);
        let rule = OracleRule::new(domain, default_order(6));
        let norm = rule.integrate(|x| f.eval(&rotate(&r, x)).powi(2)).sqrt();
        assert!((norm - f.l2_norm()).abs() < 1e-8);
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert!((det - 1.0).abs() < 1e-12);
    }
}
