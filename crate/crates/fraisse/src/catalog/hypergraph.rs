//! n-ary hypergraphs on one sort: the unconstrained variant (every
//! structure is a member) and the symmetric variant (relation closed under
//! coordinate permutations).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::age::{
    brute_force_enumerate, fresh_point_extensions, plain_union_close, AgeSpec, EnumBound,
};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::model::{ElemId, FinStructure, Signature};

pub fn hypergraph_sig(n: usize) -> Arc<Signature> {
    Arc::new(
        Signature::new(vec!["v".into()], vec![("R".into(), vec!["v".to_string(); n])], vec![])
            .unwrap(),
    )
}

fn permutations(t: &[ElemId]) -> Vec<Vec<ElemId>> {
    if t.len() <= 1 {
        return vec![t.to_vec()];
    }
    let mut out = BTreeSet::new();
    for i in 0..t.len() {
        let mut rest = t.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.insert(p);
        }
    }
    out.into_iter().collect()
}

pub fn symmetric(s: &FinStructure) -> bool {
    s.rel(0).iter().all(|t| permutations(t).iter().all(|p| s.holds(0, p)))
}

pub fn make_hypergraph_age(n: usize, sym: bool) -> AgeSpec {
    let sig = hypergraph_sig(n);
    let enum_sig = sig.clone();
    let member: Box<dyn Fn(&FinStructure) -> bool + Send + Sync> =
        if sym { Box::new(symmetric) } else { Box::new(|_| true) };
    let orbit = move |_: usize, t: &[ElemId]| {
        if sym {
            permutations(t)
        } else {
            vec![t.to_vec()]
        }
    };
    AgeSpec {
        name: if sym { format!("hypergraphs-sym-{n}") } else { format!("hypergraphs-{n}") },
        sig,
        bot: None,
        member,
        universal_ok: Box::new(|_| true),
        enumerate: Box::new(move |b| {
            let m: &dyn Fn(&FinStructure) -> bool =
                if sym { &symmetric } else { &|_| true };
            brute_force_enumerate(&enum_sig, m, &|_| true, &orbit, b)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(move |_, t| if sym { permutations(t) } else { vec![t.to_vec()] }),
        extend_one: Box::new(fresh_point_extensions),
        dense_first: false,
    }
}

pub fn make_hypergraph_class(n: usize, sym: bool) -> CatalogEntry {
    let age = make_hypergraph_age(n, sym);
    let name = age.name.clone();
    let mut params = BTreeMap::new();
    params.insert("arity".into(), n.to_string());
    params.insert("symmetric".into(), sym.to_string());
    let sym_clause = if sym {
        "\n    (symmetric R)".to_string()
    } else {
        String::new()
    };
    let dsl = format!(
        "\
(signature hyper{n}
  (sorts v)
  (rel R ({arity})))
(age {name}
  (over hyper{n})
  (constraints{sym_clause})
  (builtin {name}))
",
        arity = vec!["v"; n].join(" "),
    );
    CatalogEntry {
        name,
        params,
        age: Arc::new(age),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(EnumBound::with_rel(3, 2)), pass: true },
            ExpectedVerdict { check: Check::Jep(EnumBound::with_rel(2, 1)), pass: true },
            ExpectedVerdict { check: Check::Sap(EnumBound::with_rel(2, 1)), pass: true },
            ExpectedVerdict { check: Check::Esap(EnumBound::with_rel(2, 1)), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size: 6, len: 5 }, pass: true },
        ],
        dsl,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    #[test]
    fn symmetric_variant_rejects_asymmetry() {
        let k = make_hypergraph_age(3, true);
        let mut s = FinStructure::empty(k.sig.clone());
        for i in 0..3 {
            s.add_elem(v(i));
        }
        s.add_rel(0, vec![v(0), v(1), v(2)]);
        assert!(!k.is_member(&s));
        for p in permutations(&[v(0), v(1), v(2)]) {
            s.add_rel(0, p);
        }
        assert!(k.is_member(&s));
        // Asymmetric variant accepts anything.
        let plain = make_hypergraph_age(3, false);
        let mut t = FinStructure::empty(plain.sig.clone());
        for i in 0..3 {
            t.add_elem(v(i));
        }
        t.add_rel(0, vec![v(0), v(1), v(2)]);
        assert!(plain.is_member(&t));
        // Empty relation is a member of both.
        let e = FinStructure::empty(k.sig.clone());
        assert!(k.is_member(&e));
    }
}
