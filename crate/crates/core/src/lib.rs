//! Exact solvers for two-player stochastic games with safety and
//! reachability objectives.

pub mod cli;
pub mod error;
pub mod io;
mod graph;
pub mod kuniform;
pub mod lp;
pub mod matrix;
pub mod mdp;
pub mod model;
pub mod qualitative;
pub mod rational;
pub mod reach;
pub mod reduction;
pub mod safety;

pub use error::{Error, Result};
pub use model::*;
pub use rational::Rational;
