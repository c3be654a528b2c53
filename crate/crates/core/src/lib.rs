pub mod analysis;
pub mod analysis2d;
pub mod cli;
pub mod complement;
pub mod config;
pub mod error;
pub mod filter;
pub mod filterbank;
pub mod io;
pub mod likelihood;
pub mod metrics;
pub mod modulation;
pub mod phantom;
pub mod pipeline;
pub mod prior;
pub mod quadrature;
pub mod rng;
pub mod scs;
pub mod signal;
pub mod subband;
pub mod validation;

pub use error::{FbError, Result};
