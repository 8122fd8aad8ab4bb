//! Wiener-Hammerstein identification by pole/zero allocation.
//!
//! The overall dynamics of a Wiener-Hammerstein system `S(q) f(H(q) u)` are
//! split between the front block `H` and the back block `S` by assigning each
//! real pole/zero or conjugate pair to one side. Every candidate split is
//! scored by a least-squares fit of the static nonlinearity, either
//! exhaustively ([`brute_force`]) or with a bitstring genetic algorithm
//! ([`ga`]).

pub mod allocation;
pub mod benchmark;
pub mod bla;
pub mod brute_force;
pub mod error;
pub mod ga;
pub mod io;
pub mod lti;
pub mod model;
pub mod seeds;

pub use error::{Error, Result};
