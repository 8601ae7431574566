//! Toolkit for robust null space properties of randomly perturbed matrices.
//!
//! The crate covers the full pipeline: scalar noise laws and their moment
//! functionals ([`distributions`]), perturbed ensembles `A = M + R`
//! ([`ensembles`]), the sparse cone geometry ([`sparse`]), exact LP and
//! operator-splitting basis pursuit ([`solvers`]), null space property
//! certificates ([`certify`]), Monte-Carlo checks of the small-ball method
//! ([`mendelson`]), closed-form sample-complexity bounds ([`bounds`]) and
//! the experiment driver behind the `rnsplab` binary ([`experiments`]).

pub mod bounds;
pub mod certify;
pub mod distributions;
pub mod ensembles;
pub mod experiments;
pub mod error;
pub mod matrix;
pub mod mendelson;
pub mod rng;
pub mod solvers;
pub mod sparse;

pub use distributions::{certify_reasonable, k_functionals, DistributionSpec, MomentProfile};
pub use error::{Error, Result};
pub use rng::RngStream;
