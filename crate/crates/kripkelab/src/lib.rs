//! Finite Kripke frames: exact counting, provably uniform sampling, modal
//! model checking and seeded Monte Carlo experiments over six frame classes
//! (KD5, KD45, K5B, S5, GL.3, Grz.3).
//!
//! The crate is organized around a small immutable [`Frame`] type backed by
//! bitset adjacency rows. Everything above it is pure: property predicates
//! and frame surgery ([`frame`]), the modal language and checker
//! ([`formula`], [`parser`], [`semantics`]), class predicates and axiom
//! fixtures ([`classes`]), exact big-integer censuses ([`count`]), uniform
//! samplers built from the class structure theorems ([`sample`]),
//! p-morphism search and construction ([`morphism`]), and the experiment
//! layer ([`lab`]).

pub mod classes;
pub mod count;
pub mod formula;
pub mod frame;
pub mod lab;
pub mod morphism;
pub mod parser;
pub mod rng;
pub mod sample;
pub mod semantics;

pub use classes::{in_class, reduction_height, ClassId, ClassScope, Fixture, FixtureKind};
pub use formula::Formula;
pub use frame::{ClosureKind, Distance, Frame, Partition, PropertyName, StateSet};
pub use parser::parse;
pub use rng::RngStream;
pub use semantics::{is_valid, truth_set, Validity, Valuation};
