//! Numerical library for systems of N coupled phase oscillators with
//! diagonalizable interactions.
//!
//! The system `θ̇ = ω + ε f(θ)` decouples, after the change of variables
//! `θ = v·1⃗ + W·u`, into a time-like coordinate `v̇ = 1⃗ᵀω` and N−1
//! independent scalar mode equations `u̇_j = a_j + ε p_j(u_j)`. The crate
//! provides the basis construction ([`basis`]), interaction builders
//! ([`interaction`]), scalar mode analysis ([`modes`]), direct ODE
//! simulation ([`dynamics`]), and Monte Carlo coherence experiments
//! ([`stochastic`]).

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod interaction;
pub mod modes;
pub mod ode;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod stochastic;

pub use basis::{BasisMatrix, PhaseDecomposition, ValidationReport};
pub use dynamics::{CoherenceClass, CoherenceTag, FrequencyEstimate, Trajectory};
pub use error::{CoreError, Result};
pub use interaction::{DiagonalizableSystem, KuramotoInteraction, PeriodicFunction};
pub use modes::{FrequencyDensity, ModeFrequencyResult};
pub use ode::StepControl;
pub use stochastic::{CoherenceProbabilityEstimate, FrequencyDistribution};
