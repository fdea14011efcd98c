//! Convergence-preserving augmentation of linearly convergent optimizers.
//!
//! A baseline one-step solver that contracts toward its fixed-point set at a
//! certified linear rate can be perturbed with additive, exponentially
//! decaying "innovation" terms without losing that worst-case guarantee: the
//! rate survives up to a controllable degradation, and conversely any regular
//! linearly convergent method can be written as such a perturbation of the
//! baseline. This crate implements the whole pipeline at desk scale:
//!
//! - [`problems`]: strongly convex and gradient-dominated objectives,
//!   synthetic ill-conditioned regression quadratics, polytopes, and condensed
//!   receding-horizon control programs;
//! - [`baselines`]: gradient descent, an accelerated two-point method, the
//!   proximal point method and projected gradient descent, each carrying a
//!   rate certificate and Lipschitz constant;
//! - [`augment`]: decay envelopes, sparse injection schedules with the
//!   rate-degradation arithmetic, innovation reconstruction from target
//!   trajectories, polytope feasibility correction, and step composition;
//! - [`learned`]: a magnitude-times-direction innovation unit (stable
//!   diagonal recurrence times a squashed gated network) whose decay holds
//!   for any parameter values, trained by evolution strategies on empirical
//!   algorithm cost;
//! - [`verify`]: the empirical certification harness (envelope checks, tail
//!   rate estimation, regularity, fixed-point identities);
//! - [`mpc`]: closed-loop receding-horizon simulation with budgeted solvers.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`, which the command-line tools and test suites use.

pub mod augment;
pub mod baselines;
pub mod io;
pub mod learned;
pub mod linalg;
pub mod mpc;
pub mod poly;
pub mod problems;
pub mod qp;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use scalar::{sc, Scalar};

/// `f64` column vector.
pub type Vector64 = scalar::Vector<f64>;
/// `f64` dense matrix.
pub type Matrix64 = scalar::Matrix<f64>;
pub type QuadraticProblem64 = problems::QuadraticProblem<f64>;
pub type SmoothProblem64 = problems::SmoothProblem<f64>;
pub type Polytope64 = problems::Polytope<f64>;
pub type MpcProblem64 = problems::MpcProblem<f64>;
pub type BaselineSpec64 = baselines::BaselineSpec<f64>;
pub type RateCertificate64 = baselines::RateCertificate<f64>;
pub type DecayEnvelope64 = augment::DecayEnvelope<f64>;
pub type InjectionSchedule64 = augment::InjectionSchedule<f64>;
pub type AugmentedRun64 = augment::AugmentedRun<f64>;
pub type LearnedPerturbation64 = learned::LearnedPerturbation<f64>;
pub type TrainConfig64 = learned::TrainConfig<f64>;
pub type ClosedLoopConfig64 = mpc::ClosedLoopConfig<f64>;
