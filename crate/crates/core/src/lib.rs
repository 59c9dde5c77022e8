//! Numerical toolkit for metastable transition times of gradient diffusions
//! in smooth multi-well potentials.
//!
//! The library estimates the capacity between two wells three independent
//! ways and lets them check each other:
//!
//! * a geometric formula `eps * V_eps / d_eps * exp(F(z)/eps)` built from the
//!   saddle's one-dimensional downhill profile and its transverse profile,
//! * a discrete elliptic solve for the equilibrium potential (the Dirichlet
//!   energy is the capacity),
//! * lattice shortest-path / min-cut oracles for the geodesic distance
//!   `d_eps` and the separating-surface measure `V_eps`.
//!
//! On top of the capacity sit the classical Eyring-Kramers evaluation,
//! parallel/series saddle-network reduction, and Monte-Carlo simulation of
//! the overdamped Langevin dynamics for end-to-end validation.

pub mod asymptotics;
pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod landscape;
pub mod potential;
pub mod scaled;
pub mod transport;

pub use error::Error;
pub use scaled::ScaledValue;
