//! Rooted trees as structures over {p, r}: p is the parent function, r the
//! root, with p(r) = r and every node reaching r by iterating p. The
//! colored variant adds R with R(a,b) → p(a) = b.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::age::{decorations, iso_classes, plain_union_close, AgeSpec, EnumBound};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::model::{ElemId, FinStructure, Signature};

const P: usize = 0;
const R_CONST: usize = 1;

pub fn tree_sig(colored: bool) -> Arc<Signature> {
    let rels = if colored {
        vec![("R".to_string(), vec!["node".to_string(), "node".to_string()])]
    } else {
        vec![]
    };
    Arc::new(
        Signature::new(
            vec!["node".into()],
            rels,
            vec![("p".into(), vec!["node".into()], "node".into()), ("r".into(), vec![], "node".into())],
        )
        .unwrap(),
    )
}

/// p(r) = r and p-iteration from every node reaches r within carrier size.
pub fn tree_member(s: &FinStructure) -> bool {
    let Some(root) = s.apply(R_CONST, &[]) else { return false };
    if s.apply(P, &[root]) != Some(root) {
        return false;
    }
    let n = s.size();
    s.elems().all(|e| {
        let mut cur = e;
        for _ in 0..n {
            if cur == root {
                return true;
            }
            match s.apply(P, &[cur]) {
                Some(next) => cur = next,
                None => return false,
            }
        }
        cur == root
    })
}

fn colored_ok(s: &FinStructure) -> bool {
    // The root's degenerate self-edge stays uncolorable; allowing R(r,r)
    // would break joint embedding over the shared constant.
    s.rel(0).iter().all(|t| t[0] != t[1] && s.apply(P, &[t[0]]) == Some(t[1]))
}

/// All rooted trees with ≤ n nodes, up to isomorphism, by leaf attachment.
fn enumerate_trees(sig: &Arc<Signature>, n: usize) -> Vec<FinStructure> {
    if n == 0 {
        return vec![];
    }
    let root = ElemId::new(0, 0);
    let mut single = FinStructure::empty(sig.clone());
    single.add_elem(root);
    single.set_func(P, vec![root], root);
    single.set_func(R_CONST, vec![], root);
    let mut layers: Vec<Vec<FinStructure>> = vec![vec![single]];
    for size in 1..n {
        let mut next = Vec::new();
        for t in &layers[size - 1] {
            let fresh = ElemId::new(0, size as u32);
            for parent in t.elems().collect::<Vec<_>>() {
                let mut u = t.clone();
                u.add_elem(fresh);
                u.set_func(P, vec![fresh], parent);
                next.push(u);
            }
        }
        layers.push(iso_classes(next));
    }
    layers.into_iter().flatten().collect()
}

/// Attach a fresh leaf under each node (colored variant: with and without
/// the parent-edge color).
fn tree_extensions(colored: bool, s: &FinStructure) -> Vec<FinStructure> {
    let fresh = ElemId::new(0, s.max_raw_id().saturating_add(1));
    let mut out = Vec::new();
    for parent in s.elems() {
        let mut t = s.clone();
        t.add_elem(fresh);
        t.set_func(P, vec![fresh], parent);
        if colored {
            let mut c = t.clone();
            c.add_rel(0, vec![fresh, parent]);
            out.push(c);
        }
        out.push(t);
    }
    out
}

pub fn make_tree_age(colored: bool) -> AgeSpec {
    let sig = tree_sig(colored);
    let member: Box<dyn Fn(&FinStructure) -> bool + Send + Sync> = if colored {
        Box::new(|s| tree_member(s) && colored_ok(s))
    } else {
        Box::new(tree_member)
    };
    let universal: Box<dyn Fn(&FinStructure) -> bool + Send + Sync> =
        if colored { Box::new(colored_ok) } else { Box::new(|_| true) };
    let enum_sig = sig.clone();
    AgeSpec {
        name: if colored { "k-tree-colored".into() } else { "k-tree".into() },
        sig,
        bot: if colored { Some(Arc::new(make_tree_age(false))) } else { None },
        member,
        universal_ok: universal,
        enumerate: Box::new(move |b| {
            let trees = enumerate_trees(&enum_sig, b.generators);
            if !colored {
                return trees;
            }
            let mut out = Vec::new();
            for t in trees {
                // Colorable edges are exactly the (a, p(a)) pairs.
                let orbits: Vec<(usize, Vec<Vec<ElemId>>)> = t
                    .elems()
                    .filter_map(|a| {
                        let parent = t.apply(P, &[a]).expect("total");
                        (a != parent).then(|| (0usize, vec![vec![a, parent]]))
                    })
                    .collect();
                out.extend(decorations(&t, &orbits, &|_| true, b.max_rel));
            }
            iso_classes(out)
        }),
        close_union: Box::new(plain_union_close),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: Box::new(move |s| tree_extensions(colored, s)),
        dense_first: false,
    }
}

pub fn make_tree_class(colored: bool) -> CatalogEntry {
    let age = make_tree_age(colored);
    let name = age.name.clone();
    let mut params = BTreeMap::new();
    params.insert("colored".into(), colored.to_string());
    let dsl = if colored {
        "\
(signature ctree
  (sorts node)
  (rel R (node node))
  (fun p ((node) -> node))
  (const r node))
(signature tree
  (sorts node)
  (fun p ((node) -> node))
  (const r node))
(age k-tree-colored
  (over ctree)
  (sub tree)
  (constraints
    (forall ((a node) (b node)) (=> (rel R a b) (and (= (p a) b) (not (= a b))))))
  (builtin k-tree-colored))
"
    } else {
        "\
(signature tree
  (sorts node)
  (fun p ((node) -> node))
  (const r node))
(age k-tree
  (over tree)
  (constraints
    (forall () (=> true (= (p (r)) (r)))))
  (builtin k-tree))
"
    };
    CatalogEntry {
        name,
        params,
        age: Arc::new(age),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(EnumBound::with_rel(5, 2)), pass: true },
            ExpectedVerdict { check: Check::Jep(EnumBound::with_rel(3, 1)), pass: true },
            ExpectedVerdict { check: Check::Sap(EnumBound::with_rel(3, 1)), pass: true },
            ExpectedVerdict { check: Check::Esap(EnumBound::with_rel(3, 1)), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size: 8, len: 6 }, pass: true },
        ],
        dsl: dsl.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    #[test]
    fn tree_counts_up_to_iso() {
        let sig = tree_sig(false);
        // Rooted trees with 1..=4 nodes: 1, 1, 2, 4.
        assert_eq!(enumerate_trees(&sig, 4).len(), 8);
    }

    #[test]
    fn root_cycle_outside_r_is_rejected() {
        let k = make_tree_age(false);
        let mut s = FinStructure::empty(k.sig.clone());
        for i in 0..3 {
            s.add_elem(v(i));
        }
        s.set_func(R_CONST, vec![], v(0));
        s.set_func(P, vec![v(0)], v(0));
        // 2-cycle not through the root.
        s.set_func(P, vec![v(1)], v(2));
        s.set_func(P, vec![v(2)], v(1));
        assert!(!k.is_member(&s));
    }

    #[test]
    fn colored_edge_must_point_to_parent() {
        let k = make_tree_age(true);
        let mut s = FinStructure::empty(k.sig.clone());
        for i in 0..3 {
            s.add_elem(v(i));
        }
        s.set_func(R_CONST, vec![], v(0));
        s.set_func(P, vec![v(0)], v(0));
        s.set_func(P, vec![v(1)], v(0));
        s.set_func(P, vec![v(2)], v(0));
        s.add_rel(0, vec![v(1), v(0)]);
        assert!(k.is_member(&s));
        s.add_rel(0, vec![v(1), v(2)]);
        assert!(!k.is_member(&s));
    }
}
