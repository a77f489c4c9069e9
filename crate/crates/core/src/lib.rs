//! Link-level simulator for physical-layer security in multi-LED visible
//! light communication: Lambertian channels, precoded M-PAM, secrecy
//! capacity and BER of the Bob/Eve wiretap link, and a tabular Q-learning
//! controller that adapts modulation order and precoder.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod output;
pub mod qlearn;
pub mod quadrature;
pub mod signal;
pub mod validate;

pub use error::{Error, Result};
