//! Operational representation of an age: membership, bounded enumeration up
//! to isomorphism, and the hooks (prescribed-amalgam construction, orbit
//! structure, one-step extensions) the checkers and the builder consume.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::amalgam::AmalgamProblem;
use crate::model::{find_isomorphism, ElemId, FinStructure, RelId, Signature, SortId};

/// Bound shape for `AgeSpec::enumerate`: number of generators and a cap on
/// how many relation orbits may be set true (keeps high-arity unconstrained
/// relations enumerable; `usize::MAX` = no cap).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumBound {
    pub generators: usize,
    pub max_rel: usize,
}

impl EnumBound {
    pub fn gens(generators: usize) -> EnumBound {
        EnumBound { generators, max_rel: usize::MAX }
    }

    pub fn with_rel(generators: usize, max_rel: usize) -> EnumBound {
        EnumBound { generators, max_rel }
    }
}

type Pred = Box<dyn Fn(&FinStructure) -> bool + Send + Sync>;

/// A class of finite structures, given operationally.
///
/// `member` is the full membership test. `universal_ok` is a necessary
/// condition that is monotone under removing relation tuples; search code
/// uses it to prune partial decorations (`member` implies `universal_ok`).
pub struct AgeSpec {
    pub name: String,
    pub sig: Arc<Signature>,
    /// The function-symbol core the class expands (None for base classes).
    pub bot: Option<Arc<AgeSpec>>,
    pub member: Pred,
    pub universal_ok: Pred,
    /// Members with at most `generators` generators, up to isomorphism.
    pub enumerate: Box<dyn Fn(EnumBound) -> Vec<FinStructure> + Send + Sync>,
    /// Candidate prescribed amalgams over the core signature for a span in
    /// disjointness normal form (arguments are the core reducts b⊥, c⊥, a⊥).
    /// Every candidate contains b⊥ and c⊥ and is generated by their union.
    pub close_union: Box<
        dyn Fn(&FinStructure, &FinStructure, &FinStructure) -> Vec<FinStructure> + Send + Sync,
    >,
    /// Symmetry orbit of a decoration tuple (must contain the tuple).
    pub tuple_orbit: Box<dyn Fn(RelId, &[ElemId]) -> Vec<Vec<ElemId>> + Send + Sync>,
    /// One-step literal extensions of a member, used by chain experiments.
    pub extend_one: Box<dyn Fn(&FinStructure) -> Vec<FinStructure> + Send + Sync>,
    /// Members decorate densely (e.g. exactly-one-per-plane constraints):
    /// decoration searches should try true before false, or they wander
    /// through the exponentially many under-filled assignments first.
    pub dense_first: bool,
}

impl AgeSpec {
    /// The L⊥ signature of the pair (own signature for base classes).
    pub fn subsig(&self) -> &Arc<Signature> {
        self.bot.as_ref().map(|b| &b.sig).unwrap_or(&self.sig)
    }

    pub fn is_member(&self, s: &FinStructure) -> bool {
        s.sig == self.sig && s.validate().is_empty() && (self.member)(s)
    }

    pub fn universal_ok(&self, s: &FinStructure) -> bool {
        (self.universal_ok)(s)
    }

    pub fn enumerate(&self, bound: EnumBound) -> Vec<FinStructure> {
        (self.enumerate)(bound)
    }

    /// Prescribed-amalgam candidates for a normalized span over the full
    /// signature: reduces the span to the core and delegates.
    pub fn close_union(&self, prob: &AmalgamProblem) -> Vec<FinStructure> {
        let bot = self.subsig();
        let b = prob.b.reduct(bot).expect("core is a subsignature");
        let c = prob.c.reduct(bot).expect("core is a subsignature");
        let a = prob.a.reduct(bot).expect("core is a subsignature");
        (self.close_union)(&b, &c, &a)
    }
}

/// Prepends `s` (an iso-class representative) unless an isomorphic copy is
/// already present; fingerprint buckets keep the quadratic scan small.
pub fn iso_insert(seen: &mut BTreeMap<Vec<u64>, Vec<FinStructure>>, s: FinStructure) -> bool {
    let key = fingerprint(&s);
    let bucket = seen.entry(key).or_default();
    if bucket.iter().any(|t| find_isomorphism(t, &s).is_some()) {
        return false;
    }
    bucket.push(s);
    true
}

pub fn iso_classes(items: impl IntoIterator<Item = FinStructure>) -> Vec<FinStructure> {
    let mut seen: BTreeMap<Vec<u64>, Vec<FinStructure>> = BTreeMap::new();
    for s in items {
        iso_insert(&mut seen, s);
    }
    seen.into_values().flatten().collect()
}

/// Isomorphism-invariant bucket key: carrier sizes, relation/function table
/// sizes, and per-relation participation-degree multisets.
pub fn fingerprint(s: &FinStructure) -> Vec<u64> {
    let mut key: Vec<u64> = Vec::new();
    for sort in 0..s.sig.sorts().len() {
        key.push(s.carrier(sort).len() as u64);
    }
    for (r, _) in s.sig.rels().iter().enumerate() {
        key.push(s.rel(r).len() as u64);
        let mut deg: BTreeMap<ElemId, u64> = BTreeMap::new();
        for t in s.rel(r) {
            for &e in t {
                *deg.entry(e).or_default() += 1;
            }
        }
        let mut degs: Vec<u64> = deg.into_values().collect();
        degs.sort_unstable();
        key.extend(degs);
        key.push(u64::MAX); // separator
    }
    for (f, _) in s.sig.funcs().iter().enumerate() {
        // count of fixed points f(x..x) = x-ish data is sort-dependent; use
        // image size, an easy iso invariant.
        let image: BTreeSet<ElemId> = s.func(f).values().copied().collect();
        key.push(image.len() as u64);
    }
    key
}

/// All ways to decorate `base` by setting whole orbits of `rel` tuples true,
/// subject to the pruning predicate, at most `max_true` orbits set.
/// Returns every completed decoration (callers filter with full membership).
pub fn decorations(
    base: &FinStructure,
    orbits: &[(RelId, Vec<Vec<ElemId>>)],
    prune: &dyn Fn(&FinStructure) -> bool,
    max_true: usize,
) -> Vec<FinStructure> {
    let mut out = Vec::new();
    let mut work = base.clone();
    fn rec(
        d: &mut FinStructure,
        orbits: &[(RelId, Vec<Vec<ElemId>>)],
        i: usize,
        used: usize,
        prune: &dyn Fn(&FinStructure) -> bool,
        max_true: usize,
        out: &mut Vec<FinStructure>,
    ) {
        if !prune(d) {
            return;
        }
        if i == orbits.len() {
            out.push(d.clone());
            return;
        }
        let (r, orbit) = &orbits[i];
        rec(d, orbits, i + 1, used, prune, max_true, out);
        if used < max_true {
            for t in orbit {
                d.add_rel(*r, t.clone());
            }
            rec(d, orbits, i + 1, used + 1, prune, max_true, out);
            for t in orbit {
                d.remove_rel(*r, t);
            }
        }
    }
    rec(&mut work, orbits, 0, 0, prune, max_true, &mut out);
    out
}

/// Deduplicated decoration orbits covering every tuple of every relation of
/// `s`'s signature over its carrier.
pub fn all_orbits(
    s: &FinStructure,
    tuple_orbit: &dyn Fn(RelId, &[ElemId]) -> Vec<Vec<ElemId>>,
) -> Vec<(RelId, Vec<Vec<ElemId>>)> {
    let mut claimed: BTreeSet<(RelId, Vec<ElemId>)> = BTreeSet::new();
    let mut orbits = Vec::new();
    for (r, decl) in s.sig.rels().iter().enumerate() {
        for t in s.tuples_over(&decl.arity) {
            if claimed.contains(&(r, t.clone())) {
                continue;
            }
            let orbit = tuple_orbit(r, &t);
            for o in &orbit {
                claimed.insert((r, o.clone()));
            }
            orbits.push((r, orbit));
        }
    }
    orbits
}

/// Brute-force enumerator for relational signatures: every carrier shape up
/// to `generators` total elements, every decoration within the relation cap,
/// filtered by `member`, up to isomorphism. Exponential — audit scale only.
pub fn brute_force_enumerate(
    sig: &Arc<Signature>,
    member: &dyn Fn(&FinStructure) -> bool,
    universal_ok: &dyn Fn(&FinStructure) -> bool,
    tuple_orbit: &dyn Fn(RelId, &[ElemId]) -> Vec<Vec<ElemId>>,
    bound: EnumBound,
) -> Vec<FinStructure> {
    assert!(sig.is_relational(), "brute force enumeration needs a relational signature");
    let nsorts = sig.sorts().len();
    let mut shapes: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..nsorts {
        shapes = shapes
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                let used: usize = v.iter().sum();
                (0..=bound.generators - used).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    let mut all = Vec::new();
    for shape in shapes {
        let mut base = FinStructure::empty(sig.clone());
        for (sort, &k) in shape.iter().enumerate() {
            for i in 0..k {
                base.add_elem(ElemId::new(sort as SortId, i as u32));
            }
        }
        let orbits = all_orbits(&base, tuple_orbit);
        for d in decorations(&base, &orbits, universal_ok, bound.max_rel) {
            if member(&d) {
                all.push(d);
            }
        }
    }
    iso_classes(all)
}

/// One-step extensions that just add a fresh isolated point of each sort;
/// correct as a default only when no function symbol must be extended.
pub fn fresh_point_extensions(s: &FinStructure) -> Vec<FinStructure> {
    if !s.sig.is_relational() {
        return vec![];
    }
    let next = s.max_raw_id().saturating_add(1);
    (0..s.sig.sorts().len())
        .map(|sort| {
            let mut t = s.clone();
            t.add_elem(ElemId::new(sort, next));
            t
        })
        .collect()
}

/// Plain-union prescribed amalgam: the free choice of D⊥ for relational or
/// conflict-free cores. Empty when the tables clash or closure fails.
pub fn plain_union_close(b: &FinStructure, c: &FinStructure, _a: &FinStructure) -> Vec<FinStructure> {
    match b.union(c) {
        Some(d) if d.validate().is_empty() => vec![d],
        _ => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_sig() -> Arc<Signature> {
        Arc::new(
            Signature::new(vec!["v".into()], vec![("E".into(), vec!["v".into(), "v".into()])], vec![])
                .unwrap(),
        )
    }

    fn undirected(s: &FinStructure) -> bool {
        s.rel(0).iter().all(|t| t[0] != t[1] && s.holds(0, &[t[1], t[0]]))
    }

    #[test]
    fn brute_force_counts_graphs() {
        // Graphs on ≤ 3 vertices up to isomorphism: 1 + 1 + 2 + 4 = 8.
        let sig = graph_sig();
        let orbit = |_: RelId, t: &[ElemId]| vec![t.to_vec(), vec![t[1], t[0]]];
        let got = brute_force_enumerate(&sig, &undirected, &undirected, &orbit, EnumBound::gens(3));
        assert_eq!(got.len(), 8);
    }

    #[test]
    fn iso_classes_dedupe() {
        let sig = graph_sig();
        let mut a = FinStructure::empty(sig.clone());
        a.add_elem(ElemId::new(0, 0));
        a.add_elem(ElemId::new(0, 1));
        let mut b = FinStructure::empty(sig);
        b.add_elem(ElemId::new(0, 5));
        b.add_elem(ElemId::new(0, 9));
        assert_eq!(iso_classes([a, b]).len(), 1);
    }
}
