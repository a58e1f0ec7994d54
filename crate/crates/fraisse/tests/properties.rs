//! Randomized invariants of the core model and the poset probes, with naive
//! re-implementations as oracles where one exists.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;

use fraisse::model::{
    embeds, find_embeddings, gdcl, is_isomorphism, qftp_equal, ElemId, Embedding, FinStructure,
    Signature,
};
use fraisse::poset::find_sunflower;

/// One sort, a binary relation, a unary function, and a constant: enough to
/// exercise every closure rule.
fn mixed_sig() -> Arc<Signature> {
    Arc::new(
        Signature::new(
            vec!["v".into()],
            vec![("E".into(), vec!["v".into(), "v".into()])],
            vec![("s".into(), vec!["v".into()], "v".into()), ("c".into(), vec![], "v".into())],
        )
        .unwrap(),
    )
}

fn v(i: usize) -> ElemId {
    ElemId::new(0, i as u32)
}

#[derive(Debug, Clone)]
struct RawStructure {
    n: usize,
    succ: Vec<usize>,
    konst: usize,
    edges: Vec<(usize, usize)>,
}

fn raw_structure(max_n: usize) -> impl Strategy<Value = RawStructure> {
    (1..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(0..n, n),
            0..n,
            proptest::collection::vec((0..n, 0..n), 0..2 * n),
        )
            .prop_map(move |(succ, konst, edges)| RawStructure { n, succ, konst, edges })
    })
}

fn build(raw: &RawStructure) -> FinStructure {
    let mut s = FinStructure::empty(mixed_sig());
    for i in 0..raw.n {
        s.add_elem(v(i));
    }
    for (i, &j) in raw.succ.iter().enumerate() {
        s.set_func(0, vec![v(i)], v(j));
    }
    s.set_func(1, vec![], v(raw.konst));
    for &(a, b) in &raw.edges {
        s.add_rel(0, vec![v(a), v(b)]);
    }
    s
}

/// Naive term closure: saturate by applying every function to every argument
/// tuple inside the set until nothing changes.
fn naive_tdcl(s: &FinStructure, seed: &BTreeSet<ElemId>) -> BTreeSet<ElemId> {
    let mut out = seed.clone();
    loop {
        let mut grew = false;
        for (f, decl) in s.sig.funcs().iter().enumerate() {
            let tuples: Vec<Vec<ElemId>> = if decl.domain.is_empty() {
                vec![vec![]]
            } else {
                let mut acc: Vec<Vec<ElemId>> = vec![vec![]];
                for &sort in &decl.domain {
                    acc = acc
                        .into_iter()
                        .flat_map(|t| {
                            out.iter().filter(|e| e.sort == sort).map(move |&e| {
                                let mut u = t.clone();
                                u.push(e);
                                u
                            })
                        })
                        .collect();
                }
                acc
            };
            for t in tuples {
                if let Some(val) = s.apply(f, &t) {
                    if out.insert(val) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return out;
        }
    }
}

/// Exhaustive generator-respecting isomorphism: try every bijection between
/// the generated substructures that maps tuple to tuple.
fn naive_qftp_equal(a: &FinStructure, ta: &[ElemId], b: &FinStructure, tb: &[ElemId]) -> bool {
    if ta.len() != tb.len() {
        return false;
    }
    let ga = a.generated_sub(&ta.iter().copied().collect());
    let gb = b.generated_sub(&tb.iter().copied().collect());
    if ga.size() != gb.size() {
        return false;
    }
    let xs: Vec<ElemId> = ga.elems().collect();
    let ys: Vec<ElemId> = gb.elems().collect();
    fn perms(ys: &[ElemId]) -> Vec<Vec<ElemId>> {
        if ys.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (i, &y) in ys.iter().enumerate() {
            let mut rest = ys.to_vec();
            rest.remove(i);
            for mut p in perms(&rest) {
                p.insert(0, y);
                out.push(p);
            }
        }
        out
    }
    for p in perms(&ys) {
        let map: BTreeMap<ElemId, ElemId> = xs.iter().copied().zip(p).collect();
        let e = Embedding { map };
        let maps_tuple = ta.iter().zip(tb).all(|(x, y)| e.apply(*x) == Some(*y));
        if maps_tuple && is_isomorphism(&ga, &gb, &e) {
            return true;
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tdcl_matches_the_naive_fixpoint(raw in raw_structure(6), seed_bits in 0u32..64) {
        let s = build(&raw);
        let seed: BTreeSet<ElemId> =
            (0..raw.n).filter(|i| seed_bits & (1 << i) != 0).map(v).collect();
        prop_assert_eq!(s.tdcl(&seed), naive_tdcl(&s, &seed));
    }

    #[test]
    fn tdcl_is_a_closure_operator(raw in raw_structure(6), bits_a in 0u32..64, bits_b in 0u32..64) {
        let s = build(&raw);
        let set = |bits: u32| -> BTreeSet<ElemId> {
            (0..raw.n).filter(|i| bits & (1 << i) != 0).map(v).collect()
        };
        let a = set(bits_a);
        let b: BTreeSet<ElemId> = set(bits_a | bits_b);
        let ca = s.tdcl(&a);
        // extensive, monotone, idempotent
        prop_assert!(a.is_subset(&ca));
        prop_assert!(ca.is_subset(&s.tdcl(&b)));
        prop_assert_eq!(s.tdcl(&ca.clone()), ca);
    }

    #[test]
    fn qftp_equality_matches_exhaustive_search(
        raw_a in raw_structure(4),
        raw_b in raw_structure(4),
        ia in 0usize..4,
        ib in 0usize..4,
    ) {
        let a = build(&raw_a);
        let b = build(&raw_b);
        let ta = [v(ia % raw_a.n)];
        let tb = [v(ib % raw_b.n)];
        prop_assert_eq!(
            qftp_equal(&a, &ta, &b, &tb),
            naive_qftp_equal(&a, &ta, &b, &tb)
        );
    }

    #[test]
    fn qftp_equality_is_an_equivalence(raw in raw_structure(5), i in 0usize..5, j in 0usize..5) {
        let s = build(&raw);
        let x = [v(i % raw.n)];
        let y = [v(j % raw.n)];
        prop_assert!(qftp_equal(&s, &x, &s, &x));
        prop_assert_eq!(qftp_equal(&s, &x, &s, &y), qftp_equal(&s, &y, &s, &x));
    }

    #[test]
    fn gdcl_contains_tdcl(raw in raw_structure(5), seed_bits in 0u32..32) {
        let s = build(&raw);
        let seed: BTreeSet<ElemId> =
            (0..raw.n).filter(|i| seed_bits & (1 << i) != 0).map(v).collect();
        let t = s.tdcl(&seed);
        let g = gdcl(&s, &seed, 1_000_000).unwrap();
        prop_assert!(t.is_subset(&g), "tdcl {t:?} escapes gdcl {g:?}");
    }

    #[test]
    fn embeddings_found_are_embeddings(raw_a in raw_structure(3), raw_b in raw_structure(5)) {
        let a = build(&raw_a);
        let b = build(&raw_b);
        for e in find_embeddings(&a, &b, 16) {
            prop_assert!(fraisse::model::is_embedding(&a, &b, &e));
        }
        // Composition with a rename stays an embedding target.
        prop_assert_eq!(embeds(&a, &b), !find_embeddings(&a, &b, 1).is_empty());
    }

    #[test]
    fn sunflower_certificates_replay(
        sets in proptest::collection::vec(
            proptest::collection::btree_set(0usize..12, 1..4),
            1..12,
        ),
        t in 2usize..5,
    ) {
        // Host: a bare 12-element set (every subset is term-closed).
        let sig = Signature::empty("v");
        let mut host = FinStructure::empty(sig);
        for i in 0..12 {
            host.add_elem(v(i));
        }
        let family: Vec<BTreeSet<ElemId>> =
            sets.iter().map(|s| s.iter().map(|&i| v(i)).collect()).collect();
        if let Some(cert) = find_sunflower(&host, &family, t) {
            prop_assert!(cert.indices.len() >= t);
            prop_assert!(cert.replays(&host, &family));
        }
    }

    #[test]
    fn sunflower_certificates_replay_with_functions(
        raw in raw_structure(6),
        sets in proptest::collection::vec(
            proptest::collection::btree_set(0usize..6, 1..4),
            1..8,
        ),
        t in 2usize..4,
    ) {
        let host = build(&raw);
        let family: Vec<BTreeSet<ElemId>> =
            sets.iter().map(|s| s.iter().filter(|&&i| i < raw.n).map(|&i| v(i)).collect()).collect();
        if let Some(cert) = find_sunflower(&host, &family, t) {
            prop_assert!(cert.replays(&host, &family));
        }
    }
}
