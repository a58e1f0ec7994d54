//! Worked classes: bare sets, graphs, hypergraphs, two-color graphs,
//! GF(q) vector spaces (plain and oriented), rooted trees (plain and
//! edge-colored), and sequence-naming structures. Each entry publishes the
//! bounds at which its expected verdicts were established.

pub mod field;
pub mod graphs;
pub mod hypergraph;
pub mod seqname;
pub mod tree;
pub mod twocolor;
pub mod vectorspace;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::age::{AgeSpec, EnumBound};
use crate::framework::{
    check_chain_union, check_extended_sap, check_hp, check_jep, check_sap, PropertyReport,
};
use crate::rigidity::{check_distinct_2_types, check_pins};
use crate::Error;

/// A named checker invocation with its published bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Check {
    Hp(EnumBound),
    Jep(EnumBound),
    Sap(EnumBound),
    Esap(EnumBound),
    ChainUnion { size: usize, len: usize },
    Distinct2Types { sort: String, bound: EnumBound },
    Pins { sort: String, bound: EnumBound },
}

impl Check {
    pub fn property(&self) -> &'static str {
        match self {
            Check::Hp(_) => "hp",
            Check::Jep(_) => "jep",
            Check::Sap(_) => "sap",
            Check::Esap(_) => "esap",
            Check::ChainUnion { .. } => "chain-union",
            Check::Distinct2Types { .. } => "2types",
            Check::Pins { .. } => "pins",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpectedVerdict {
    pub check: Check,
    pub pass: bool,
}

pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub age: Arc<AgeSpec>,
    pub expected: Vec<ExpectedVerdict>,
    /// Definition-file form of the entry (round-trip tested).
    pub dsl: String,
}

/// Every registered entry, in stable order.
pub fn all_entries() -> Vec<CatalogEntry> {
    vec![
        graphs::make_bare_set_class(),
        graphs::make_graph_class(),
        hypergraph::make_hypergraph_class(3, false),
        hypergraph::make_hypergraph_class(3, true),
        twocolor::make_two_color_class(),
        vectorspace::make_vector_space_class(2, false).expect("q=2 supported"),
        vectorspace::make_vector_space_class(3, false).expect("q=3 supported"),
        vectorspace::make_vector_space_class(4, false).expect("q=4 supported"),
        vectorspace::make_vector_space_class(2, true).expect("q=2 supported"),
        tree::make_tree_class(false),
        tree::make_tree_class(true),
        seqname::make_seq_name_class(2).expect("n=2 supported"),
        seqname::make_seq_name_class(5).expect("n=5 supported"),
    ]
}

pub fn entry(name: &str) -> Option<CatalogEntry> {
    all_entries().into_iter().find(|e| e.name == name)
}

/// Runs one named checker invocation against a class.
pub fn run_check(k: &AgeSpec, check: &Check) -> Result<PropertyReport, Error> {
    Ok(match check {
        Check::Hp(b) => check_hp(k, *b),
        Check::Jep(b) => check_jep(k, *b),
        Check::Sap(b) => check_sap(k, *b),
        Check::Esap(b) => check_extended_sap(k, *b),
        Check::ChainUnion { size, len } => check_chain_union(k, *size, *len),
        Check::Distinct2Types { sort, bound } => check_distinct_2_types(k, sort, *bound)?,
        Check::Pins { sort, bound } => check_pins(k, sort, *bound)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The master property test: every entry reproduces its published
    /// verdict table at the published bounds.
    #[test]
    fn expected_verdicts_reproduce() {
        for e in all_entries() {
            for ev in &e.expected {
                let rep = run_check(&e.age, &ev.check).expect("checker runs");
                assert_eq!(rep.pass, ev.pass, "{} / {}: {rep}", e.name, ev.check.property());
            }
        }
    }
}
