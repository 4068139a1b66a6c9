//! Analysis, tuning and simulation of gradient dynamics on bilinear
//! zero-sum games `min_x max_y x^T E y + b^T x + c^T y`.
//!
//! The crate models the classic first-order saddle-point algorithms
//! (gradient descent, extra-gradient, optimistic gradient, heavy-ball
//! momentum, proximal point) in both simultaneous (Jacobi) and alternating
//! (Gauss-Seidel) forms, and provides
//!
//! * the per-singular-value characteristic polynomials of every method and
//!   the Jacobi-to-Gauss-Seidel polynomial transform ([`charpoly`]),
//! * Schur stability tests, exact convergence conditions and a shrinking
//!   radius search for optimal rates ([`stability`]),
//! * polynomial root finding, spectral radii and heat-map rasterization
//!   ([`spectral`]),
//! * closed-form optimal parameter choices and grid search ([`tuning`]),
//! * construction, simulation and splitting-form cross-checks of the
//!   underlying linear dynamical systems ([`dynamics`]),
//! * the singular-matrix reduction and saddle distance measure ([`game`]),
//! * reproducible experiments including a two-dimensional WGAN toy
//!   ([`experiments`]).

pub mod charpoly;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod game;
pub mod linalg;
pub mod rng;
pub mod spectral;
pub mod stability;
pub mod tuning;
mod util;

pub use charpoly::RealPolynomial;
pub use dynamics::{AlgorithmKind, AlgorithmSpec, LinearDynamicalSystem, Trajectory, UpdateStyle};
pub use error::{Error, Result};
pub use game::BilinearGame;
pub use linalg::Matrix;
