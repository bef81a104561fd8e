//! Expectile hidden Markov regression.
//!
//! A response is modelled as a state-dependent linear expectile regression
//! whose coefficients switch according to a hidden homogeneous Markov chain.
//! Estimation maximises an asymmetric-normal working likelihood by EM; the
//! crate also provides posterior decoding, information criteria, parametric
//! bootstrap standard errors, a Monte Carlo simulation lab and the data
//! preparation used for daily price series.

pub mod an;
pub mod chain;
pub mod data;
pub mod em;
pub mod error;
pub mod eval;
pub mod numeric;
pub mod rng;
pub mod sim;

pub use an::{an_logpdf, an_sample, asymmetric_loss, expectile_of_sample, AnParams, ExpectileLevel};
pub use chain::{forward_backward, path_sum_loglik, ChainParams, Posteriors};
pub use em::{fit, FitConfig, FitResult, EhmmParams, TimeSeriesDataset};
pub use error::{Error, Result};
