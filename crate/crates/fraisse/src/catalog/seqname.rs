//! Sequence-naming structures: a name sort w labels the n-tuples over u via
//! a bijection f, with projections p0..p(n-1) recovering the coordinates.
//! The class of interest expands this core by an unconstrained n-ary
//! relation R on u.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::age::{all_orbits, decorations, iso_classes, AgeSpec, EnumBound};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::model::{ElemId, FinStructure, Signature, SortId};
use crate::Error;

pub const U: SortId = 0;
pub const W: SortId = 1;
pub const F: usize = 0;

/// Projection p_i has function id 1 + i.
pub fn proj(i: usize) -> usize {
    1 + i
}

pub fn seq_sig(n: usize, with_r: bool) -> Arc<Signature> {
    let rels = if with_r {
        vec![("R".to_string(), vec!["u".to_string(); n])]
    } else {
        vec![]
    };
    let mut funcs = vec![("f".to_string(), vec!["u".to_string(); n], "w".to_string())];
    for i in 0..n {
        funcs.push((format!("p{i}"), vec!["w".to_string()], "u".to_string()));
    }
    Arc::new(Signature::new(vec!["u".into(), "w".into()], rels, funcs).unwrap())
}

/// p_i(f(u⃗)) = u_i for every tuple, and f(p⃗(w)) = w for every name, which
/// together make f a bijection onto the name sort.
pub fn seq_member(n: usize, s: &FinStructure) -> bool {
    for t in s.tuples_over(&vec![U; n]) {
        let Some(w) = s.apply(F, &t) else { return false };
        for (i, &ti) in t.iter().enumerate() {
            if s.apply(proj(i), &[w]) != Some(ti) {
                return false;
            }
        }
    }
    s.carrier(W).iter().all(|&w| {
        let coords: Option<Vec<ElemId>> = (0..n).map(|i| s.apply(proj(i), &[w])).collect();
        coords.and_then(|c| s.apply(F, &c)) == Some(w)
    })
}

/// The canonical member on m points of sort u; names get the lexicographic
/// index of their tuple as raw id.
pub fn make_seq(n: usize, sig: &Arc<Signature>, m: usize) -> FinStructure {
    let mut s = FinStructure::empty(sig.clone());
    for i in 0..m {
        s.add_elem(ElemId::new(U, i as u32));
    }
    for (idx, t) in s.tuples_over(&vec![U; n]).into_iter().enumerate() {
        let w = ElemId::new(W, idx as u32);
        s.add_elem(w);
        for (i, &ti) in t.iter().enumerate() {
            s.set_func(proj(i), vec![w], ti);
        }
        s.set_func(F, t, w);
    }
    s
}

/// The one prescribed amalgam of a normalized core span: union the u-points
/// and name every tuple — leg-internal tuples keep their leg's name, mixed
/// tuples get fresh names.
fn seq_union(n: usize, b: &FinStructure, c: &FinStructure, _a: &FinStructure) -> Vec<FinStructure> {
    let mut d = FinStructure::empty(b.sig.clone());
    for &u in b.carrier(U).iter().chain(c.carrier(U)) {
        d.add_elem(u);
    }
    let mut next = b.max_raw_id().max(c.max_raw_id()).saturating_add(1);
    for t in d.tuples_over(&vec![U; n]) {
        let w = if t.iter().all(|&e| b.contains(e)) {
            b.apply(F, &t).expect("members are f-total")
        } else if t.iter().all(|&e| c.contains(e)) {
            c.apply(F, &t).expect("members are f-total")
        } else {
            let w = ElemId::new(W, next);
            next += 1;
            w
        };
        d.add_elem(w);
        for (i, &ti) in t.iter().enumerate() {
            d.set_func(proj(i), vec![w], ti);
        }
        d.set_func(F, t, w);
    }
    vec![d]
}

/// Adjoin one fresh u-point and names for every tuple it creates.
fn seq_extend(n: usize, s: &FinStructure) -> Vec<FinStructure> {
    let mut t = s.clone();
    let mut next = s.max_raw_id().saturating_add(1);
    t.add_elem(ElemId::new(U, next));
    next += 1;
    for tuple in t.tuples_over(&vec![U; n]) {
        if t.apply(F, &tuple).is_some() {
            continue;
        }
        let w = ElemId::new(W, next);
        next += 1;
        t.add_elem(w);
        for (i, &ti) in tuple.iter().enumerate() {
            t.set_func(proj(i), vec![w], ti);
        }
        t.set_func(F, tuple, w);
    }
    vec![t]
}

pub fn make_seq_name_age(n: usize, with_r: bool) -> AgeSpec {
    let sig = seq_sig(n, with_r);
    let enum_sig = sig.clone();
    AgeSpec {
        name: if with_r { format!("seq-names-{n}") } else { format!("seq-names-{n}-core") },
        sig,
        bot: if with_r { Some(Arc::new(make_seq_name_age(n, false))) } else { None },
        member: Box::new(move |s| seq_member(n, s)),
        universal_ok: Box::new(|_| true),
        enumerate: Box::new(move |b| {
            let mut all = Vec::new();
            for m in 0..=b.generators {
                let base = make_seq(n, &enum_sig, m);
                if !with_r {
                    all.push(base);
                    continue;
                }
                let orbits = all_orbits(&base, &|_, t| vec![t.to_vec()]);
                all.extend(decorations(&base, &orbits, &|_| true, b.max_rel));
            }
            iso_classes(all)
        }),
        close_union: Box::new(move |b, c, a| seq_union(n, b, c, a)),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: Box::new(move |s| seq_extend(n, s)),
        dense_first: false,
    }
}

fn seq_dsl(n: usize) -> String {
    let us = vec!["u"; n].join(" ");
    let mut out = String::new();
    for (name, with_r) in [(format!("seq{n}"), true), (format!("seq{n}core"), false)] {
        out += &format!("(signature {name}\n  (sorts u w)\n");
        if with_r {
            out += &format!("  (rel R ({us}))\n");
        }
        out += &format!("  (fun f (({us}) -> w))");
        for i in 0..n {
            out += &format!("\n  (fun p{i} ((w) -> u))");
        }
        out += ")\n";
    }
    let vars: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let binders: Vec<String> = vars.iter().map(|v| format!("({v} u)")).collect();
    out += &format!("(age seq-names-{n}\n  (over seq{n})\n  (sub seq{n}core)\n  (constraints\n");
    for i in 0..n {
        out += &format!(
            "    (forall ({}) (=> true (= (p{i} (f {})) x{i})))\n",
            binders.join(" "),
            vars.join(" ")
        );
    }
    let projs: Vec<String> = (0..n).map(|i| format!("(p{i} z)")).collect();
    out += &format!("    (forall ((z w)) (=> true (= (f {}) z))))\n", projs.join(" "));
    out += &format!("  (builtin seq-names (n {n})))\n");
    out
}

pub fn make_seq_name_class(n: usize) -> Result<CatalogEntry, Error> {
    if n < 2 {
        return Err(Error::Class("sequence naming needs arity at least 2".into()));
    }
    let age = make_seq_name_age(n, true);
    let mut params = BTreeMap::new();
    params.insert("n".into(), n.to_string());
    // The name sort has |u|^n elements, so bounds shrink as n grows.
    let wide = if n <= 3 { EnumBound::with_rel(3, 1) } else { EnumBound::with_rel(2, 1) };
    let small = EnumBound::with_rel(2, 1);
    let len = if n <= 3 { 4 } else { 3 };
    let size = (len - 1) + (len - 1usize).pow(n as u32);
    Ok(CatalogEntry {
        name: format!("seq-names-{n}"),
        params,
        age: Arc::new(age),
        expected: vec![
            ExpectedVerdict { check: Check::Hp(wide), pass: true },
            ExpectedVerdict { check: Check::Jep(small), pass: true },
            ExpectedVerdict { check: Check::Sap(small), pass: true },
            ExpectedVerdict { check: Check::Esap(small), pass: true },
            ExpectedVerdict { check: Check::ChainUnion { size, len }, pass: true },
            ExpectedVerdict { check: Check::Pins { sort: "w".into(), bound: small }, pass: true },
            ExpectedVerdict {
                check: Check::Distinct2Types { sort: "w".into(), bound: wide },
                pass: n >= 5,
            },
        ],
        dsl: seq_dsl(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_members() {
        for n in [2usize, 3] {
            let sig = seq_sig(n, false);
            for m in 0..=3usize {
                let s = make_seq(n, &sig, m);
                assert_eq!(s.carrier(W).len(), m.pow(n as u32));
                assert!(s.validate().is_empty());
                assert!(seq_member(n, &s));
            }
        }
    }

    #[test]
    fn missing_name_is_rejected() {
        let sig = seq_sig(2, false);
        let mut s = make_seq(2, &sig, 2);
        // A name sitting outside the image of f breaks the bijection law.
        let stray = ElemId::new(W, 99);
        s.add_elem(stray);
        s.set_func(proj(0), vec![stray], ElemId::new(U, 0));
        s.set_func(proj(1), vec![stray], ElemId::new(U, 1));
        assert!(!seq_member(2, &s));
    }

    #[test]
    fn union_names_mixed_tuples_freshly() {
        let n = 2;
        let k = make_seq_name_age(n, false);
        let a = make_seq(n, &k.sig, 0);
        let b = make_seq(n, &k.sig, 1);
        // Disjoint second leg.
        let mut c = make_seq(n, &k.sig, 1);
        let shift: BTreeMap<ElemId, ElemId> = c
            .elems()
            .map(|e| (e, ElemId::new(e.sort, e.id + 100)))
            .collect();
        c = c.rename(&shift);
        let ds = (k.close_union)(&b, &c, &a);
        assert_eq!(ds.len(), 1);
        let d = &ds[0];
        assert_eq!(d.carrier(U).len(), 2);
        assert_eq!(d.carrier(W).len(), 4);
        assert!(k.is_member(d));
        assert!(b.is_substructure_of(d));
        assert!(c.is_substructure_of(d));
    }

    #[test]
    fn extension_adds_point_and_names() {
        let k = make_seq_name_age(2, true);
        let s = make_seq(2, &k.sig, 1);
        let exts = (k.extend_one)(&s);
        assert_eq!(exts.len(), 1);
        assert_eq!(exts[0].carrier(U).len(), 2);
        assert_eq!(exts[0].carrier(W).len(), 4);
        assert!(k.is_member(&exts[0]));
        assert!(s.is_substructure_of(&exts[0]));
    }

    #[test]
    fn enumerate_counts_r_patterns() {
        let k = make_seq_name_age(2, true);
        // m = 0 (1), m = 1 (R on (u,u) or not: 2), m = 2 with ≤ 1 true
        // R-tuple (empty, xx, xy up to swapping the points: 3).
        let got = k.enumerate(EnumBound::with_rel(2, 1));
        assert_eq!(got.len(), 1 + 2 + 3);
        assert!(got.iter().all(|s| k.is_member(s)));
    }
}
