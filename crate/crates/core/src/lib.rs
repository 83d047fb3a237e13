//! Density of parabolic elements, torsion elements and commuting pairs in
//! word-metric balls of free products with designated peripheral factors.
//!
//! * [`presentation`] parses and validates group files.
//! * [`algebra`] implements normal-form arithmetic, classification and
//!   centralizers.
//! * [`census`] counts, enumerates and samples spheres exactly.
//! * [`statistics`] turns counts into density curves, decay fits and audits.

pub mod algebra;
pub mod census;
pub mod presentation;
pub mod statistics;

pub use algebra::{CentralizerDescriptor, ClassTag, Classification, CyclicReduction, Element, Group, Payload, Syllable};
pub use census::{sphere_count_table, BallTable, Census, CensusError};
pub use presentation::{parse_group_spec, validate, FactorKind, FactorSpec, GroupSpec, ValidationReport};
