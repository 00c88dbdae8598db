//! Exact piecewise-linear calculus for ReLU networks.
//!
//! * [`pwl`]: continuous piecewise-linear functions on the real line, the
//!   composed sawtooth family, flap decompositions and exact `L1` distances.
//! * [`network`]: the layered ReLU network model and constructive builders
//!   (2-layer from a PWL function, composition, sums, max-trees, hinge forms).
//! * [`regions`]: exact linear-region enumeration and piece counting in `R^n`
//!   on top of a rational simplex.
//! * [`zonotope`]: zonotope vertices, support functions and the zonotope
//!   hard-function family.
//! * [`trainer`]: globally optimal empirical risk minimization for
//!   one-hidden-layer networks.
//!
//! All combinatorial and geometric work is done in exact rationals; only the
//! convex subproblems of the trainer run in floating point.

pub mod error;
pub mod network;
pub mod pwl;
pub mod random;
pub mod rational;
pub mod regions;
pub mod trainer;
pub mod zonotope;

pub use error::{Error, Result};
pub use network::{AffineMap, HingeForm, HingeTerm, ReluNetwork};
pub use pwl::{PwlFunction1D, SawtoothParams};
pub use rational::Rational;
pub use regions::{LinearConstraint, RegionCell};
pub use trainer::{Dataset, LossKind, TrainResult};
pub use zonotope::{Zonotope, ZonotopeFamilyParams};
