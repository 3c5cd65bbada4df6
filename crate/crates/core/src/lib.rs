//! Marcinkiewicz-Zygmund sampling families, weighted least-lq approximation and
//! least-squares quadrature on the weighted interval, the weighted unit disk and the sphere.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod basis;
pub mod coeffs;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod jacobi;
pub mod mzfamily;
pub mod oracle;
pub mod quadrature;
pub mod sphere;
pub mod testfns;

pub use basis::{BasisEvaluator, BasisIndex};
pub use coeffs::CoefficientVector;
pub use domain::{Domain, DomainKind, Point};
pub use error::{MzqError, Result};
pub use experiment::{ConvergenceTable, ExperimentSpec, Target};
pub use filter::{Filter, SmoothStep};
pub use geometry::PointSet;
pub use mzfamily::MzLayer;
pub use oracle::OracleRule;
pub use quadrature::QuadratureRule;
pub use testfns::SobolevPacket;
pub use approx::{Function, LeastSquares};
