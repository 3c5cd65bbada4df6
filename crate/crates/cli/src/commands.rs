use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use mzq_core::approx::{least_lq, lq_error, IrlsOptions};
use mzq_core::experiment::run_convergence;
use mzq_core::io::{from_json_str, to_json_string, Real};
use mzq_core::mzfamily::{build_layer, MzLayerJson};
use mzq_core::oracle::default_order;
use mzq_core::quadrature::{build_rule, integrate};
use mzq_core::testfns::{analytic_witnesses, make_packet, witness, SobolevPacket, Witness};
use mzq_core::{approx::DENSE_ORDER, Domain, DomainKind, ExperimentSpec, Function, MzLayer, OracleRule};

use crate::error::{CliError, CliResult};

/// The function selected by `--testfn`.
pub enum TestFn {
    Packet { r: f64, seed: u64, degree: usize },
    Witness(String),
}

impl TestFn {
    pub fn parse(name: &str, r: f64, seed: u64, degree: usize) -> Self {
        if name == "packet" {
            TestFn::Packet { r, seed, degree }
        } else {
            TestFn::Witness(name.to_string())
        }
    }

    fn build(&self, domain: &Domain) -> CliResult<Built> {
        match self {
            TestFn::Packet { r, seed, degree } => Ok(Built::Packet(make_packet(domain, *r, *seed, *degree)?)),
            TestFn::Witness(name) => witness(domain, name)
                .map(Built::Witness)
                .ok_or_else(|| CliError::Invalid(format!("unknown test function {name:?}; see `mzq witness-list`"))),
        }
    }
}

enum Built {
    Packet(SobolevPacket),
    Witness(Witness),
}

impl Built {
    fn function(&self) -> &dyn Function {
        match self {
            Built::Packet(p) => p,
            Built::Witness(w) => w,
        }
    }

    fn sobolev_norm(&self) -> Option<f64> {
        match self {
            Built::Packet(p) => Some(p.sobolev_norm()),
            Built::Witness(_) => None,
        }
    }

    /// Exact integral for packets; a high-order reference rule otherwise.
    fn integral(&self, domain: &Domain) -> f64 {
        match self {
            Built::Packet(p) => p.integral(),
            Built::Witness(w) => {
                let rule = OracleRule::new(*domain, default_order(0).max(DENSE_ORDER));
                rule.integrate_values(&w.eval_many(&rule.nodes))
            }
        }
    }
}

fn check_output(path: &Path, force: bool) -> CliResult<()> {
    if path.exists() && !force {
        return Err(CliError::OutputExists(path.to_path_buf()));
    }
    Ok(())
}

fn write_output(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

fn load_layer(path: &Path) -> CliResult<MzLayer> {
    let text = read_text(path)?;
    let json: MzLayerJson = from_json_str(&text).map_err(|e| CliError::input(path, e))?;
    MzLayer::try_from(json).map_err(|e| CliError::input(path, e))
}

fn check_q(q: f64) -> CliResult<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(CliError::Invalid(format!("q must lie in [1, inf), got {q}")));
    }
    Ok(())
}

pub fn build_family(kind: DomainKind, mu: f64, n: usize, gamma: f64, seed: u64, out: &Path, force: bool) -> CliResult<()> {
    check_output(out, force)?;
    let domain = Domain::new(kind, mu)?;
    let layer = build_layer(&domain, n, gamma, seed)?;
    write_output(out, &to_json_string(&layer.to_json())?)?;
    if !layer.certified {
        return Err(CliError::Certification(format!(
            "layer is not certified: A = {:e}, B = {:e}",
            layer.a, layer.b
        )));
    }
    eprintln!(
        "{} points, A = {:.6}, B = {:.6}, kappa = {:.6}",
        layer.len(),
        layer.a,
        layer.b,
        layer.kappa()
    );
    Ok(())
}

#[derive(Serialize)]
struct CertifyReport {
    n: usize,
    q: Real,
    #[serde(rename = "A")]
    a: Real,
    #[serde(rename = "B")]
    b: Real,
    kappa: Real,
    certified: bool,
}

pub fn certify(family: &Path, q: f64, ensemble: usize, seed: u64, out: Option<&Path>, force: bool) -> CliResult<()> {
    check_q(q)?;
    if let Some(out) = out {
        check_output(out, force)?;
    }
    let layer = load_layer(family)?.with_q(q, ensemble, seed)?;
    let certified = layer.a > 0.0 && (q != 2.0 || layer.certified);
    let report = CertifyReport {
        n: layer.n,
        q: Real(q),
        a: Real(layer.a),
        b: Real(layer.b),
        kappa: Real(if layer.a > 0.0 { layer.kappa() } else { f64::MAX }),
        certified,
    };
    print!("{}", to_json_string(&report)?);
    if let Some(out) = out {
        write_output(out, &to_json_string(&layer.to_json())?)?;
    }
    if !certified {
        return Err(CliError::Certification(format!(
            "not an MZ layer for q = {q}: A = {:e}, B = {:e}",
            layer.a, layer.b
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ApproxRow {
    n: usize,
    error: Real,
    sobolev_norm: Option<Real>,
    kappa: Real,
}

pub fn approx(families: &[std::path::PathBuf], q: f64, testfn: &TestFn, out: Option<&Path>, force: bool) -> CliResult<()> {
    check_q(q)?;
    if let Some(out) = out {
        check_output(out, force)?;
    }
    let layers = families.iter().map(|p| load_layer(p)).collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(layers.len());
    for layer in &layers {
        layer.require_certified()?;
        let f = testfn.build(&layer.domain)?;
        let samples = f.function().eval_many(&layer.points);
        let fit = least_lq(layer, &samples, q, &IrlsOptions::default())?;
        let error = match (&f, q == 2.0) {
            // exact by Parseval
            (Built::Packet(p), true) => p.coeffs.difference(&fit.coeffs).l2_norm(),
            _ => lq_error(f.function(), &fit.coeffs, q)?,
        };
        rows.push(ApproxRow {
            n: layer.n,
            error: Real(error),
            sobolev_norm: f.sobolev_norm().map(Real),
            kappa: Real(layer.kappa()),
        });
    }
    let json = out.is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let text = if json {
        to_json_string(&rows)?
    } else {
        let mut s = String::from("n,error,sobolev_norm,kappa\n");
        for r in &rows {
            let norm = r.sobolev_norm.map(|v| format!("{:.16e}", v.0)).unwrap_or_default();
            let _ = writeln!(s, "{},{:.16e},{norm},{:.16e}", r.n, r.error.0, r.kappa.0);
        }
        s
    };
    match out {
        Some(out) => write_output(out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn quad(family: &Path, testfn: Option<&TestFn>, out: Option<&Path>, force: bool) -> CliResult<()> {
    if let Some(out) = out {
        check_output(out, force)?;
    }
    let layer = load_layer(family)?;
    let rule = build_rule(&layer)?;
    let total: f64 = rule.weights.iter().sum();
    let negative = rule.weights.iter().filter(|w| **w < 0.0).count();
    eprintln!("{} nodes, sum of weights {total:.16e}, {negative} negative", rule.len());
    if let Some(testfn) = testfn {
        let f = testfn.build(&layer.domain)?;
        let estimate = integrate(&rule, &f.function().eval_many(&layer.points))?;
        let exact = f.integral(&layer.domain);
        println!(
            "estimate={estimate:.16e} exact={exact:.16e} error={:.16e}",
            (estimate - exact).abs()
        );
    }
    if let Some(out) = out {
        write_output(out, &to_json_string(&rule.to_json())?)?;
    }
    Ok(())
}

pub fn convergence(spec_path: &Path, out: Option<&Path>, force: bool, jobs: usize) -> CliResult<()> {
    let text = read_text(spec_path)?;
    let spec: ExperimentSpec = from_json_str(&text).map_err(|e| CliError::input(spec_path, e))?;
    spec.validate()?;
    let out = out.map(Path::to_path_buf).or_else(|| spec.csv.as_ref().map(Into::into));
    if let Some(out) = &out {
        check_output(out, force)?;
    }
    let table = run_convergence(&spec, jobs)?;
    match &out {
        Some(out) => write_output(out, &table.to_csv())?,
        None => print!("{}", table.to_csv()),
    }
    match table.slope {
        Some(s) => println!("slope={s:.16e}"),
        None => println!("slope=nan"),
    }
    Ok(())
}

pub fn witness_list(kind: DomainKind, mu: f64) -> CliResult<()> {
    let domain = Domain::new(kind, mu)?;
    for w in analytic_witnesses(&domain) {
        println!("{}\t{}", w.name, w.smoothness.describe());
    }
    Ok(())
}
