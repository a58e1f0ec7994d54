//! A finite-scale workbench for strong amalgamation classes whose vocabularies
//! include function symbols. The crate builds term-closed substructures and
//! amalgams, runs class-property audits (HP/JEP/AP and their strong variants),
//! grows pseudo-generic structures from condition posets, probes sunflower
//! combinatorics of those posets, and tests rigidity criteria — all over a
//! small catalog of worked classes plus a text DSL for user-defined ones.

pub mod age;
pub mod amalgam;
pub mod builder;
pub mod catalog;
pub mod error;
pub mod framework;
pub mod io;
pub mod model;
pub mod poset;
pub mod rigidity;

pub use error::Error;
