//! Game-theoretic learning laboratory.
//!
//! * [`bimatrix`]: two-player games, the generalized rock-paper-scissors
//!   family, payoff evaluation and Nash checks.
//! * [`equilibrium`]: exact enumeration of all equilibria of small games,
//!   Lemke-Howson pivoting and the equilibrium-count laws.
//! * [`replicator`]: coupled replicator learning dynamics with the conserved
//!   Hamiltonian of the zero-sum case.
//! * [`chaos`]: Lyapunov spectra, Poincaré sections and residence times.
//! * [`minority`]: the minority game.
//!
//! Everything numeric is generic over the scalar type; the aliases below fix
//! the common choices (`f64` for dynamics, exact rationals for enumeration).

pub mod bimatrix;
pub mod chaos;
pub mod equilibrium;
pub mod error;
pub mod export;
pub mod linalg;
pub mod minority;
pub mod ode;
pub mod replicator;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Game = bimatrix::BimatrixGame<f64>;
pub type RationalGame = bimatrix::BimatrixGame<Rational>;
pub type Profile = bimatrix::MixedProfile<f64>;
pub type RationalProfile = bimatrix::MixedProfile<Rational>;
pub type Rps = bimatrix::RpsParams<f64>;
pub type Equilibrium = equilibrium::Equilibrium<Rational>;
pub type EnumerationReport = equilibrium::EnumerationReport<Rational>;
pub type Trajectory = replicator::Trajectory<f64>;
pub type IntegratorConfig = replicator::IntegratorConfig<f64>;
