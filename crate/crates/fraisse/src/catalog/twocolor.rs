//! The two-color class: one sort partitioned by unary U and W, with an
//! edge relation that never crosses the partition. The core signature is
//! {U, W}; E is the decoration relation.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::age::{brute_force_enumerate, plain_union_close, AgeSpec, EnumBound};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::model::{ElemId, FinStructure, Signature};

pub fn colored_set_sig() -> Arc<Signature> {
    Arc::new(
        Signature::new(
            vec!["v".into()],
            vec![("U".into(), vec!["v".into()]), ("W".into(), vec!["v".into()])],
            vec![],
        )
        .unwrap(),
    )
}

pub fn two_color_sig() -> Arc<Signature> {
    Arc::new(
        Signature::new(
            vec!["v".into()],
            vec![
                ("U".into(), vec!["v".into()]),
                ("W".into(), vec!["v".into()]),
                ("E".into(), vec!["v".into(), "v".into()]),
            ],
            vec![],
        )
        .unwrap(),
    )
}

fn partitioned(s: &FinStructure) -> bool {
    s.elems().all(|e| s.holds(0, &[e]) != s.holds(1, &[e]))
}

fn colored_extensions(s: &FinStructure) -> Vec<FinStructure> {
    let next = s.max_raw_id().saturating_add(1);
    let e = ElemId::new(0, next);
    [0usize, 1]
        .into_iter()
        .map(|color| {
            let mut t = s.clone();
            t.add_elem(e);
            t.add_rel(color, vec![e]);
            t
        })
        .collect()
}

pub fn make_colored_set_age() -> AgeSpec {
    let sig = colored_set_sig();
    let enum_sig = sig.clone();
    AgeSpec {
        name: "colored-sets".into(),
        sig,
        bot: None,
        member: Box::new(partitioned),
        universal_ok: Box::new(|_| true),
        enumerate: Box::new(move |b| {
            brute_force_enumerate(&enum_sig, &partitioned, &|_| true, &|_, t| vec![t.to_vec()], b)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: Box::new(colored_extensions),
        dense_first: false,
    }
}

/// Member test over the full signature: partition, symmetric irreflexive E,
/// and no edge across the partition.
pub fn two_color_member(s: &FinStructure) -> bool {
    partitioned(s)
        && s.rel(2).iter().all(|t| {
            t[0] != t[1]
                && s.holds(2, &[t[1], t[0]])
                && (s.holds(0, &[t[0]]) == s.holds(0, &[t[1]]))
        })
}

pub fn make_two_color_age() -> AgeSpec {
    let sig = two_color_sig();
    let enum_sig = sig.clone();
    let orbit = |r: usize, t: &[ElemId]| {
        if r == 2 && t[0] != t[1] {
            vec![t.to_vec(), vec![t[1], t[0]]]
        } else {
            vec![t.to_vec()]
        }
    };
    AgeSpec {
        name: "two-color".into(),
        sig,
        bot: Some(Arc::new(make_colored_set_age())),
        member: Box::new(two_color_member),
        universal_ok: Box::new(two_color_member),
        enumerate: Box::new(move |b| {
            brute_force_enumerate(&enum_sig, &two_color_member, &|_| true, &orbit, b)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(orbit),
        extend_one: Box::new(colored_extensions),
        dense_first: false,
    }
}

pub fn make_two_color_class() -> CatalogEntry {
    CatalogEntry {
        name: "two-color".into(),
        params: BTreeMap::new(),
        age: Arc::new(make_two_color_age()),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(EnumBound::gens(3)), pass: true },
            ExpectedVerdict { check: Check::Jep(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::Sap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::Esap(EnumBound::gens(2)), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size: 6, len: 5 }, pass: true },
            ExpectedVerdict {
                check: Check::Distinct2Types { sort: "v".into(), bound: EnumBound::gens(3) },
                pass: true,
            },
        ],
        dsl: "\
(signature twocol
  (sorts v)
  (rel U (v))
  (rel W (v))
  (rel E (v v)))
(signature colset
  (sorts v)
  (rel U (v))
  (rel W (v)))
(age two-color
  (over twocol)
  (sub colset)
  (constraints
    (forall ((x v)) (=> true (or (rel U x) (rel W x))))
    (forall ((x v)) (=> (rel U x) (not (rel W x))))
    (forall ((x v) (y v)) (=> (rel E x y) (not (= x y))))
    (forall ((x v) (y v)) (=> (rel E x y) (rel E y x)))
    (forall ((x v) (y v)) (=> (and (rel E x y) (rel U x)) (rel U y))))
  (builtin two-color))
"
        .into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{check_extended_sap, check_sap};

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    #[test]
    fn membership_examples() {
        let k = make_two_color_age();
        // U-pair with an edge plus a W-singleton: member.
        let mut s = FinStructure::empty(k.sig.clone());
        for i in 0..3 {
            s.add_elem(v(i));
        }
        s.add_rel(0, vec![v(0)]);
        s.add_rel(0, vec![v(1)]);
        s.add_rel(1, vec![v(2)]);
        s.add_rel(2, vec![v(0), v(1)]);
        s.add_rel(2, vec![v(1), v(0)]);
        assert!(k.is_member(&s));
        // Cross edge breaks membership.
        let mut bad = s.clone();
        bad.add_rel(2, vec![v(1), v(2)]);
        bad.add_rel(2, vec![v(2), v(1)]);
        assert!(!k.is_member(&bad));
        // Doubly-colored element breaks the partition.
        let mut bad2 = s;
        bad2.add_rel(1, vec![v(0)]);
        assert!(!k.is_member(&bad2));
    }

    #[test]
    fn two_color_amalgamation() {
        let k = make_two_color_age();
        assert!(check_sap(&k, EnumBound::gens(2)).pass);
        assert!(check_extended_sap(&k, EnumBound::gens(2)).pass);
    }
}
