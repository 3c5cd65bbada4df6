//! Test functions with known smoothness: random-sign spectral packets with exact Sobolev
//! norms, and a few closed-form witnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::Function;
use crate::basis::{eval_basis, BasisEvaluator, BasisIndex};
use crate::coeffs::CoefficientVector;
use crate::domain::{Domain, DomainKind, Point};
use crate::error::{MzqError, Result};
use crate::geometry::probe_points;
use crate::io::Real;
use crate::mzfamily::random_coefficients;

/// Margin added to the decay exponent so the Sobolev norm stays bounded as the generation
/// degree grows.
pub const DECAY_MARGIN: f64 = 0.05;
/// Default generation degree of a packet.
pub const DEFAULT_PACKET_DEGREE: usize = 64;

/// `f = sum s_{nk} (1 + lambda_n)^(-(r + d_eff/2 + 0.05)/2) phi_{nk}` over degrees `<= M`,
/// with seeded signs `s_{nk}`.
#[derive(Debug, Clone)]
pub struct SobolevPacket {
    pub r: f64,
    pub seed: u64,
    pub coeffs: CoefficientVector,
    evaluator: BasisEvaluator,
}

impl PartialEq for SobolevPacket {
    fn eq(&self, other: &Self) -> bool {
        self.r == other.r && self.seed == other.seed && self.coeffs == other.coeffs
    }
}

/// Builds a packet of smoothness `r` on `domain` with generation degree `max_degree`.
pub fn make_packet(domain: &Domain, r: f64, seed: u64, max_degree: usize) -> Result<SobolevPacket> {
    let d_eff = domain.effective_dim();
    if !(r > d_eff / 2.0) {
        return Err(MzqError::InvalidParameter(format!(
            "smoothness r = {r} must exceed d_eff/2 = {} for point samples to make sense",
            d_eff / 2.0
        )));
    }
    let exponent = (r + d_eff / 2.0 + DECAY_MARGIN) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::with_capacity(domain.poly_dim(max_degree));
    for n in 0..=max_degree {
        let size = (1.0 + domain.eigenvalue(n)).powf(-exponent);
        for _ in 0..domain.component_dim(n) {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            coeffs.push(sign * size);
        }
    }
    SobolevPacket::from_coefficients(r, seed, CoefficientVector::from_dense(*domain, max_degree, coeffs)?)
}

impl SobolevPacket {
    pub fn from_coefficients(r: f64, seed: u64, coeffs: CoefficientVector) -> Result<Self> {
        if !(r > 0.0) {
            return Err(MzqError::InvalidParameter(format!("smoothness r must be > 0, got {r}")));
        }
        let evaluator = coeffs.evaluator();
        Ok(Self {
            r,
            seed,
            coeffs,
            evaluator,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.coeffs.domain
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.max_degree
    }

    /// Exact `W^r_2` norm from the coefficients.
    pub fn sobolev_norm(&self) -> f64 {
        self.coeffs.sobolev_norm(self.r).expect("r > 0 is checked on construction")
    }

    /// `||f - Proj_{<=n} f||_2`, exactly.
    pub fn tail_norm(&self, n: usize) -> f64 {
        self.coeffs.tail_norm_sq(n).sqrt()
    }

    pub fn projection(&self, n: usize) -> CoefficientVector {
        self.coeffs.truncate(n)
    }

    /// Integral against the domain measure.
    pub fn integral(&self) -> f64 {
        self.coeffs.integral()
    }

    /// Evaluation by summing single basis functions, independent of [`BasisEvaluator`].
    pub fn eval_direct(&self, x: &Point) -> Result<f64> {
        let domain = self.domain();
        let mut total = 0.0;
        for (col, c) in self.coeffs.coeffs.iter().enumerate() {
            total += c * eval_basis(domain, BasisIndex::from_column(domain, col), x)?;
        }
        Ok(total)
    }

    pub fn to_json(&self) -> PacketJson {
        PacketJson {
            coefficients: self.coeffs.clone(),
            r: Real(self.r),
            seed: self.seed,
            sobolev_norm: Real(self.sobolev_norm()),
        }
    }
}

impl Function for SobolevPacket {
    fn eval(&self, x: &Point) -> f64 {
        self.evaluator.combine(&self.coeffs.coeffs, x)
    }

    fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        let mut row = vec![0.0; self.evaluator.len()];
        points
            .iter()
            .map(|x| {
                self.evaluator.eval_into(x, &mut row);
                row.iter().zip(&self.coeffs.coeffs).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Serialized packet: the coefficient vector fields plus `r`, `seed` and `sobolev_norm`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketJson {
    #[serde(flatten)]
    pub coefficients: CoefficientVector,
    pub r: Real,
    pub seed: u64,
    pub sobolev_norm: Real,
}

impl TryFrom<PacketJson> for SobolevPacket {
    type Error = MzqError;

    fn try_from(j: PacketJson) -> Result<Self> {
        SobolevPacket::from_coefficients(j.r.0, j.seed, j.coefficients)
    }
}

/// Expected convergence class of a witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    /// A polynomial of the given degree: exact once `n` reaches it.
    Polynomial(usize),
    /// Analytic: faster than any power of `n`.
    Analytic,
    /// Finite smoothness: algebraic decay.
    Algebraic,
}

impl Smoothness {
    pub fn describe(&self) -> String {
        match self {
            Smoothness::Polynomial(d) => format!("polynomial of degree {d}: exact for n >= {d}"),
            Smoothness::Analytic => "analytic: super-algebraic decay".into(),
            Smoothness::Algebraic => "finite smoothness: algebraic decay".into(),
        }
    }
}

/// A named closed-form test function.
pub struct Witness {
    pub name: &'static str,
    pub smoothness: Smoothness,
    f: Box<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Witness")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl Function for Witness {
    fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
}

/// Cusp location used by the `cusp` witness.
pub fn cusp_center(domain: &Domain) -> Point {
    match domain.kind {
        DomainKind::Interval => [0.3, 0.0, 0.0],
        DomainKind::Disk => [0.3, 0.2, 0.0],
        DomainKind::Sphere2 => {
            let v: [f64; 3] = [0.3, 0.2, 0.9];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        }
    }
}

/// Constant, first coordinate, `exp(x . a)` and the cusp `|x - x0|^1.5`.
pub fn analytic_witnesses(domain: &Domain) -> Vec<Witness> {
    let a = [0.7, -0.4, 0.3];
    let x0 = cusp_center(domain);
    vec![
        Witness {
            name: "constant",
            smoothness: Smoothness::Polynomial(0),
            f: Box::new(|_| 1.0),
        },
        Witness {
            name: "x1",
            smoothness: Smoothness::Polynomial(1),
            f: Box::new(|x| x[0]),
        },
        Witness {
            name: "exp",
            smoothness: Smoothness::Analytic,
            f: Box::new(move |x| (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).exp()),
        },
        Witness {
            name: "cusp",
            smoothness: Smoothness::Algebraic,
            f: Box::new(move |x| {
                let d2: f64 = (0..3).map(|i| (x[i] - x0[i]).powi(2)).sum();
                d2.sqrt().powf(1.5)
            }),
        },
    ]
}

/// Looks up a witness by name.
pub fn witness(domain: &Domain, name: &str) -> Option<Witness> {
    analytic_witnesses(domain).into_iter().find(|w| w.name == name)
}

/// Largest `sup |P| / ||P||_2` over `ensemble` random degree-`n` polynomials and the
/// reproducing kernels `K_n(x0, .)` at a few centres, with the supremum taken over the
/// default probes, the centres and a ring of boundary points.
pub fn nikolskii_ratio(domain: &Domain, n: usize, ensemble: usize, seed: u64) -> f64 {
    let centres: Vec<Point> = match domain.kind {
        DomainKind::Interval => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]],
        DomainKind::Disk => vec![[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.8, 0.0], [0.0; 3]],
        DomainKind::Sphere2 => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
    };
    let mut probes = probe_points(domain, crate::geometry::DEFAULT_PROBES);
    probes.extend_from_slice(&centres);
    if domain.kind == DomainKind::Disk {
        probes.extend((0..512).map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 512.0;
            [t.cos(), t.sin(), 0.0]
        }));
    }
    let eval = BasisEvaluator::new(*domain, n);
    let table: Vec<Vec<f64>> = probes.iter().map(|x| eval.eval(x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut polys: Vec<Vec<f64>> = (0..ensemble).map(|_| random_coefficients(&mut rng, eval.len())).collect();
    polys.extend(centres.iter().map(|c| eval.eval(c)));
    let mut worst: f64 = 0.0;
    for c in &polys {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sup = table
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        worst = worst.max(sup / norm);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleRule;

    #[test]
    fn degree_zero_packet_is_constant() {
        let p = make_packet(&Domain::disk(0.5), 3.0, 4, 0).unwrap();
        assert_eq!(p.coeffs.coeffs.len(), 1);
        assert!((p.sobolev_norm() - p.coeffs.coeffs[0].abs()).abs() < 1e-15);
        assert!((p.eval(&[0.3, 0.1, 0.0]) - p.coeffs.coeffs[0]).abs() < 1e-15);
    }

    #[test]
    fn packet_is_deterministic_and_checked() {
        let a = make_packet(&Domain::sphere(), 2.5, 9, 10).unwrap();
        let b = make_packet(&Domain::sphere(), 2.5, 9, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_packet(&Domain::sphere(), 2.5, 10, 10).unwrap());
        // d_eff / 2 = 1.5 on the disk with mu = 0.5
        assert!(make_packet(&Domain::disk(0.5), 1.5, 1, 4).is_err());
        assert!(make_packet(&Domain::sphere(), 0.9, 1, 4).is_err());
    }

    #[test]
    fn two_evaluation_paths_agree() {
        for domain in [Domain::disk(0.5), Domain::sphere(), Domain::interval(1.0)] {
            let p = make_packet(&domain, 3.0, 2, 20).unwrap();
            for x in probe_points(&domain, 20) {
                let a = p.eval(&x);
                let b = p.eval_direct(&x).unwrap();
                assert!((a - b).abs() < 1e-12, "{domain}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tail_matches_quadrature() {
        let domain = Domain::disk(0.5);
        let p = make_packet(&domain, 3.0, 1, 24).unwrap();
        let proj = p.projection(8);
        let e = crate::approx::lq_error(&p, &proj, 2.0).unwrap();
        assert!((e - p.tail_norm(8)).abs() < 1e-9);
    }

    #[test]
    fn witnesses_are_named_and_sane() {
        let domain = Domain::disk(0.5);
        let w = analytic_witnesses(&domain);
        let names: Vec<&str> = w.iter().map(|w| w.name).collect();
        assert_eq!(names, ["constant", "x1", "exp", "cusp"]);
        let rule = OracleRule::new(domain, 20);
        assert!((rule.integrate(|x| w[0].eval(x)) - 1.0).abs() < 1e-14);
        assert!(rule.integrate(|x| w[1].eval(x)).abs() < 1e-14);
        assert!(w[3].eval(&cusp_center(&domain)).abs() < 1e-15);
        assert!(witness(&domain, "exp").is_some() && witness(&domain, "nope").is_none());
    }

    #[test]
    fn json_round_trip() {
        let p = make_packet(&Domain::sphere(), 2.5, 3, 6).unwrap();
        let text = crate::io::to_json_string(&p.to_json()).unwrap();
        assert!(text.contains("\"sobolev_norm\"") && text.contains("\"max_degree\""));
        let back: PacketJson = crate::io::from_json_str(&text).unwrap();
        assert_eq!(SobolevPacket::try_from(back).unwrap(), p);
    }
}
