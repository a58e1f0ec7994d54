//! Bare sets (the empty-signature base class) and finite simple graphs.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::age::{
    brute_force_enumerate, fresh_point_extensions, plain_union_close, AgeSpec, EnumBound,
};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::model::{ElemId, FinStructure, RelId, Signature};

pub fn graph_sig() -> Arc<Signature> {
    Arc::new(
        Signature::new(vec!["v".into()], vec![("E".into(), vec!["v".into(), "v".into()])], vec![])
            .unwrap(),
    )
}

pub fn undirected(s: &FinStructure) -> bool {
    s.rel(0).iter().all(|t| t[0] != t[1] && s.holds(0, &[t[1], t[0]]))
}

pub fn symmetric_pair_orbit(_r: RelId, t: &[ElemId]) -> Vec<Vec<ElemId>> {
    if t[0] == t[1] {
        vec![t.to_vec()]
    } else {
        vec![t.to_vec(), vec![t[1], t[0]]]
    }
}

pub fn make_bare_set_class() -> CatalogEntry {
    let sig = Signature::empty("v");
    let enum_sig = sig.clone();
    let age = AgeSpec {
        name: "bare-set".into(),
        sig,
        bot: None,
        member: Box::new(|_| true),
        universal_ok: Box::new(|_| true),
        enumerate: Box::new(move |b| {
            brute_force_enumerate(&enum_sig, &|_| true, &|_| true, &|_, t| vec![t.to_vec()], b)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: Box::new(fresh_point_extensions),
        dense_first: false,
    };
    CatalogEntry {
        name: "bare-set".into(),
        params: BTreeMap::new(),
        age: Arc::new(age),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(EnumBound::gens(3)), pass: true },
            ExpectedVerdict { check: Check::Jep(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::Sap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::Esap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size: 6, len: 5 }, pass: true },
        ],
        dsl: "\
(signature pure
  (sorts v))
(age bare-set
  (over pure)
  (constraints)
  (builtin bare-set))
"
        .into(),
    }
}

pub fn make_graph_age() -> AgeSpec {
    let sig = graph_sig();
    let enum_sig = sig.clone();
    AgeSpec {
        name: "graphs".into(),
        sig,
        bot: None,
        member: Box::new(undirected),
        universal_ok: Box::new(undirected),
        enumerate: Box::new(move |b| {
            brute_force_enumerate(&enum_sig, &undirected, &undirected, &symmetric_pair_orbit, b)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(symmetric_pair_orbit),
        extend_one: Box::new(fresh_point_extensions),
        dense_first: false,
    }
}

pub fn make_graph_class() -> CatalogEntry {
    CatalogEntry {
        name: "graphs".into(),
        params: BTreeMap::new(),
        age: Arc::new(make_graph_age()),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(EnumBound::gens(4)), pass: true },
            ExpectedVerdict { check: Check::Jep(EnumBound::gens(3)), pass: true },
            ExpectedVerdict { check: Check::Sap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::Esap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size: 6, len: 5 }, pass: true },
        ],
        dsl: "\
(signature graph
  (sorts v)
  (rel E (v v)))
(age graphs
  (over graph)
  (constraints
    (forall ((x v) (y v)) (=> (rel E x y) (not (= x y))))
    (forall ((x v) (y v)) (=> (rel E x y) (rel E y x))))
  (builtin graphs))
"
        .into(),
    }
}
