//! Uniform random multigraphs with a fixed degree sequence.
//!
//! This crate carries the pure algorithmic pieces and needs only `alloc`:
//!
//! - [`degree`]: degree sequences, subpower-law construction and the
//!   scalar functionals `nu`, `d_bar`, offspring law and Molloy-Reed sum;
//! - [`pairing`]: the configuration (pairing) model, exhaustive
//!   enumeration of small instances and loop / parallel-pair counts;
//! - [`exploration`]: the component-exploration Markov chain that
//!   generates the pairing one pair at a time;
//! - [`diagnostics`]: martingale, trajectory, drift, Poisson-limit and
//!   scaling statistics built on the above.
//!
//! Randomness comes in through [`rand::RngCore`]; any seedable generator
//! works and runs are reproducible per seed.
#![no_std]

extern crate alloc;

pub mod degree;
pub mod diagnostics;
pub mod exploration;
pub mod pairing;
pub mod union_find;

pub use degree::{DegreeError, DegreeSequence, EmpiricalDistribution, OffspringLaw, SubpowerParams};
pub use exploration::{ChainSnapshot, ExplorationError, ExplorationState, ExplorationTrace, StepRecord};
pub use pairing::{ComponentReport, Pairing, PairingError, PointSpace};
