//! Reversible-jump MCMC with Birth-or-Death moves over variable-dimension
//! states, with a Bayesian sinusoid-detection model on top.

pub mod birth_death;
pub mod config;
pub mod error;
pub mod experiment;
pub mod mcmc;
pub mod oracle;
pub mod rng;
pub mod sinusoid;
pub mod state;
pub mod validate;

pub use error::{Error, Result};
pub use state::VarDimState;
