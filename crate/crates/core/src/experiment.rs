//! Convergence experiments: per-degree layers, errors against a Sobolev packet, log-log
//! slope fits and the frozen CSV table format.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::approx::{filtered_approx, least_lq_with, lq_error, IrlsOptions, LeastSquares};
use crate::coeffs::CoefficientVector;
use crate::domain::Domain;
use crate::error::{MzqError, Result};
use crate::filter::SmoothStep;
use crate::mzfamily::build_layer;
use crate::oracle::{default_order, OracleRule};
use crate::quadrature::rule_weights;
use crate::testfns::{make_packet, SobolevPacket, DEFAULT_PACKET_DEGREE};
use crate::approx::Function;

/// CSV header of every convergence table.
pub const CSV_HEADER: &str = "n,l_n,kappa,error,rate";

/// Which error an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `||f - L_{n,q} f||_q`.
    #[default]
    Approx,
    /// `|int f - I_n f|`.
    Quadrature,
    /// `||f - V_n f||_2` for the filtered approximation.
    Filtered,
}

fn default_gamma() -> f64 {
    0.5
}

fn default_q() -> f64 {
    2.0
}

fn default_seed() -> u64 {
    1
}

fn default_packet_degree() -> usize {
    DEFAULT_PACKET_DEGREE
}

/// A convergence sweep over degrees for one packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub domain: Domain,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub degrees: Vec<usize>,
    #[serde(default = "default_q")]
    pub q: f64,
    pub r: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_packet_degree")]
    pub packet_degree: usize,
    #[serde(default)]
    pub target: Target,
    /// Where to write the CSV table.
    #[serde(default)]
    pub csv: Option<String>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MzqError::InvalidParameter(m));
        let domain = Domain::new(self.domain.kind, self.domain.mu)?;
        if self.degrees.len() < 3 {
            return bad(format!("a convergence run needs at least 3 degrees, got {}", self.degrees.len()));
        }
        if self.degrees.windows(2).any(|w| w[0] >= w[1]) {
            return bad("degrees must be strictly ascending".into());
        }
        if self.degrees[0] == 0 {
            return bad("degrees must be positive".into());
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return bad(format!("q must lie in [1, inf), got {}", self.q));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.r > domain.effective_dim() / 2.0) {
            return bad(format!(
                "r = {} must exceed d_eff/2 = {}",
                self.r,
                domain.effective_dim() / 2.0
            ));
        }
        if self.target == Target::Filtered && self.q != 2.0 {
            return bad("the filtered target measures the L2 error; use q = 2".into());
        }
        Ok(())
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub n: usize,
    pub l_n: usize,
    pub kappa: f64,
    pub error: f64,
    /// Local rate against the previous row.
    pub rate: Option<f64>,
}

/// A finished convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<Row>,
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn from_points(points: Vec<(usize, usize, f64, f64)>) -> Self {
        let mut rows: Vec<Row> = Vec::with_capacity(points.len());
        for (i, &(n, l_n, kappa, error)) in points.iter().enumerate() {
            let rate = (i > 0).then(|| {
                let prev = &points[i - 1];
                (error / prev.3).ln() / (n as f64 / prev.0 as f64).ln()
            });
            rows.push(Row {
                n,
                l_n,
                kappa,
                error,
                rate: rate.filter(|r| r.is_finite()),
            });
        }
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        Self {
            slope: fit_slope(&ns, &errs),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let rate = r.rate.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{:.16e},{:.16e},{}", r.n, r.l_n, r.kappa, r.error, rate);
        }
        out
    }
}

/// Least-squares slope of `log error` against `log n`. With five or more degrees, degrees
/// below 6 are dropped as pre-asymptotic. Zero errors are skipped; `None` when fewer than
/// two usable points remain.
pub fn fit_slope(ns: &[usize], errors: &[f64]) -> Option<f64> {
    let drop_small = ns.len() >= 5;
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(n, e)| (!drop_small || **n >= 6) && **e > 0.0 && e.is_finite())
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Error of one degree for a packet.
fn degree_point(spec: &ExperimentSpec, packet: &SobolevPacket, n: usize) -> Result<(usize, usize, f64, f64)> {
    let domain = &spec.domain;
    if spec.target == Target::Filtered {
        let v = filtered_approx(packet, domain, n, &SmoothStep)?;
        let err = packet.coeffs.difference(&v).l2_norm();
        let nodes = OracleRule::new(*domain, default_order(2 * n - 1)).len();
        return Ok((n, nodes, 1.0, err));
    }
    let layer = build_layer(domain, n, spec.gamma, spec.seed)?;
    layer.require_certified()?;
    let samples = packet.eval_many(&layer.points);
    let system = LeastSquares::new(&layer)?;
    let error = match spec.target {
        Target::Quadrature => {
            let w = rule_weights(&system);
            let approx: f64 = w.iter().zip(&samples).map(|(w, f)| w * f).sum();
            (packet.integral() - approx).abs()
        }
        _ if spec.q == 2.0 => {
            let c = CoefficientVector::from_dense(*domain, n, system.solve(&samples)?)?;
            packet.coeffs.difference(&c).l2_norm()
        }
        _ => {
            let fit = least_lq_with(&system, &samples, spec.q, &IrlsOptions::default())?;
            lq_error(packet, &fit.coeffs, spec.q)?
        }
    };
    Ok((n, layer.len(), layer.kappa(), error))
}

/// Runs the sweep with up to `jobs` degrees in flight; rows come back in degree order.
pub fn run_convergence(spec: &ExperimentSpec, jobs: usize) -> Result<ConvergenceTable> {
    spec.validate()?;
    let packet = make_packet(&spec.domain, spec.r, spec.seed, spec.packet_degree)?;
    let results = run_parallel(&spec.degrees, jobs, |n| degree_point(spec, &packet, n))?;
    Ok(ConvergenceTable::from_points(results))
}

/// Applies `work` to each item with at most `jobs` worker threads, preserving order.
pub fn run_parallel<T, F>(items: &[usize], jobs: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(|&i| work(i)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<T>>> = (0..items.len()).map(|_| None).collect();
    let collected = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let out = work(items[i]);
                collected.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every item is processed")).collect()
}

/// Quadrature errors `|exact - I_n f|` for a function on layers from `layers`.
pub fn quadrature_error_experiment<F, G>(f: &F, exact: f64, degrees: &[usize], layers: G) -> Result<ConvergenceTable>
where
    F: Function + ?Sized,
    G: Fn(usize) -> Result<crate::mzfamily::MzLayer>,
{
    let mut points = Vec::with_capacity(degrees.len());
    for &n in degrees {
        let layer = layers(n)?;
        layer.require_certified()?;
        let system = LeastSquares::new(&layer)?;
        let w = rule_weights(&system);
        let samples = f.eval_many(&layer.points);
        let approx: f64 = w.iter().zip(&samples).map(|(w, f)| w * f).sum();
        points.push((n, layer.len(), layer.kappa(), (exact - approx).abs()));
    }
    Ok(ConvergenceTable::from_points(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfns::witness;

    #[test]
    fn slope_of_exact_power_law() {
        let ns = [4, 6, 8, 12, 16];
        let errs: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-2.5)).collect();
        assert!((fit_slope(&ns, &errs).unwrap() + 2.5).abs() < 1e-12);
        // n = 4 is dropped with five or more degrees
        let mut bent = errs.clone();
        bent[0] = 1.0;
        assert!((fit_slope(&ns, &bent).unwrap() + 2.5).abs() < 1e-12);
        assert_eq!(fit_slope(&[4], &[1.0]), None);
    }

    #[test]
    fn csv_layout() {
        let t = ConvergenceTable::from_points(vec![(4, 10, 1.5, 0.1), (8, 40, 1.25, 0.0125)]);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].ends_with(','));
        assert!(lines[2].starts_with("8,40,1.2500000000000000e0,"));
        assert!((t.rows[1].rate.unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let text = r#"{"domain": {"kind": "disk", "mu": 0.5}, "degrees": [4, 8], "r": 3}"#;
        let spec: ExperimentSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.gamma, 0.5);
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec {
            degrees: vec![4, 6, 8],
            ..spec
        };
        assert!(spec.validate().is_ok());
        assert!(ExperimentSpec { r: 1.0, ..spec.clone() }.validate().is_err());
        assert!(ExperimentSpec { degrees: vec![4, 4, 8], ..spec }.validate().is_err());
    }

    #[test]
    fn polynomial_witness_is_integrated_exactly() {
        let domain = Domain::disk(0.5);
        let f = witness(&domain, "x1").unwrap();
        let t = quadrature_error_experiment(&f, 0.0, &[2, 3, 4], |n| build_layer(&domain, n, 0.5, 1)).unwrap();
        assert!(t.rows.iter().all(|r| r.error < 1e-9));
    }

    #[test]
    fn parallel_matches_serial() {
        let spec = ExperimentSpec {
            domain: Domain::sphere(),
            gamma: 0.5,
            degrees: vec![2, 3, 4],
            q: 2.0,
            r: 2.5,
            seed: 3,
            packet_degree: 12,
            target: Target::Approx,
            csv: None,
        };
        let a = run_convergence(&spec, 1).unwrap();
        let b = run_convergence(&spec, 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
