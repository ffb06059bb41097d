//! Random projections of smooth Gaussian random manifolds.
//!
//! The crate samples the Gaussian-process manifold ensemble on a grid,
//! measures how Haar-random orthogonal projections distort chords and
//! tangent planes, evaluates the chordal and tangential cone guarantees,
//! and tabulates the closed-form failure-probability bounds together with
//! the empirical minimum projection dimension they are compared against.
//!
//! Start with [`ManifoldSpec`], draw a [`ManifoldSample`] with
//! [`sample_manifold`], then project it with a [`Projector`].

pub mod cone_guarantees;
pub mod error;
pub mod experiments;
pub mod gp_sampler;
pub mod harness;
pub mod manifold_model;
pub mod projector;
pub mod theory;

pub use error::{Error, Result};
pub use gp_sampler::{sample_manifold, FdOrder, ManifoldSample, TangentFrames};
pub use harness::seed::{derive_seed, Label};
pub use manifold_model::{Form, ManifoldSpec};
pub use projector::{sample_projector, DistortionSummary, PairPolicy, Projector, SubspaceBasis};
