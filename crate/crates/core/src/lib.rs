//! Aspect transition graph structure learning: the graph model, perception
//! into aspects, a simulated tagged-cube world, the intrinsically motivated
//! learner and the evaluation harness.

pub mod config;
pub mod error;
pub mod eval;
pub mod gaussian;
pub mod learner;
pub mod linalg;
pub mod model;
pub mod observe;
pub mod scalar;
pub mod sim;

pub use error::{AtgError, Result};
pub use scalar::Real;

pub type Model = model::AtgModel<f64>;
pub type Edge = model::ActionEdge<f64>;
pub type Gaussian = gaussian::GaussianDist<f64>;
pub type Mat = linalg::Matrix<f64>;
pub type Detection = observe::FeatureDetection<f64>;
