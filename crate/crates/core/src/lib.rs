//! Crosstalk-aware compilation for superconducting devices with always-on ZZ
//! coupling.
//!
//! The pipeline has three layers. [`suppression`] picks, for each scheduling
//! step, a set of qubits to pulse so that the active couplings are few and
//! split into small components. [`scheduler`] turns a circuit into layers that
//! respect such a cut. [`pulse`] designs single- and two-qubit pulses that are
//! insensitive to the couplings that remain, and [`sim`] measures how well the
//! whole thing works on a sampled device.

pub mod circuit;
pub mod error;
pub mod matching;
pub mod paths;
pub mod pulse;
pub mod quantum;
pub mod scheduler;
pub mod sim;
pub mod suppression;
pub mod topology;

pub use error::{Error, Result};
