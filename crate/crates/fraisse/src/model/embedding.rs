//! Embedding, isomorphism, and automorphism search.
//!
//! The search branches only where function tables leave a choice: once an
//! element's preimages are mapped, its own image is forced and propagated.
//! That keeps term-generated structures (vector spaces, name algebras)
//! tractable even when their carriers are large.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::model::structure::{ElemId, FinStructure};

/// A sort-respecting injective strong homomorphism, stored as its element map.
/// `source`/`target` stay with the caller; `is_embedding` rechecks the laws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub map: BTreeMap<ElemId, ElemId>,
}

impl Embedding {
    pub fn identity(s: &FinStructure) -> Embedding {
        Embedding { map: s.elems().map(|e| (e, e)).collect() }
    }

    pub fn apply(&self, e: ElemId) -> Option<ElemId> {
        self.map.get(&e).copied()
    }

    pub fn apply_tuple(&self, t: &[ElemId]) -> Option<Vec<ElemId>> {
        t.iter().map(|&e| self.apply(e)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(k, v)| k == v)
    }

    pub fn compose(&self, then: &Embedding) -> Option<Embedding> {
        let mut map = BTreeMap::new();
        for (&k, &v) in &self.map {
            map.insert(k, then.apply(v)?);
        }
        Some(Embedding { map })
    }
}

/// Independent recheck: total, injective per sort, commutes with every
/// function table, preserves and reflects every relation.
pub fn is_embedding(a: &FinStructure, b: &FinStructure, e: &Embedding) -> bool {
    if a.sig != b.sig {
        return false;
    }
    let mut seen: BTreeSet<ElemId> = BTreeSet::new();
    for x in a.elems() {
        match e.apply(x) {
            Some(y) if y.sort == x.sort && b.contains(y) && seen.insert(y) => {}
            _ => return false,
        }
    }
    for (f, decl) in a.sig.funcs().iter().enumerate() {
        for args in a.tuples_over(&decl.domain) {
            let (Some(v), Some(margs)) = (a.apply(f, &args), e.apply_tuple(&args)) else {
                return false;
            };
            if b.apply(f, &margs) != e.apply(v) {
                return false;
            }
        }
    }
    for (r, decl) in a.sig.rels().iter().enumerate() {
        for t in a.tuples_over(&decl.arity) {
            let Some(mt) = e.apply_tuple(&t) else { return false };
            if a.holds(r, &t) != b.holds(r, &mt) {
                return false;
            }
        }
    }
    true
}

pub fn is_isomorphism(a: &FinStructure, b: &FinStructure, e: &Embedding) -> bool {
    a.size() == b.size() && is_embedding(a, b, e)
}

/// Backtracking embedding search. Deterministic given carrier order.
pub struct EmbeddingSearch<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    fixed: BTreeMap<ElemId, ElemId>,
    surjective: bool,
    limit: usize,
    node_cap: Option<u64>,
}

struct SearchState<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    surjective: bool,
    limit: usize,
    node_cap: Option<u64>,
    map: BTreeMap<ElemId, ElemId>,
    used: BTreeSet<ElemId>,
    nodes: u64,
    out: Vec<Embedding>,
}

impl<'a> EmbeddingSearch<'a> {
    pub fn new(a: &'a FinStructure, b: &'a FinStructure) -> EmbeddingSearch<'a> {
        EmbeddingSearch { a, b, fixed: BTreeMap::new(), surjective: false, limit: usize::MAX, node_cap: None }
    }

    /// Pre-assigned element images (generator pinning, extension of a map).
    pub fn fixing(mut self, fixed: BTreeMap<ElemId, ElemId>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn surjective(mut self) -> Self {
        self.surjective = true;
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = n;
        self
    }

    pub fn node_cap(mut self, n: u64) -> Self {
        self.node_cap = Some(n);
        self
    }

    pub fn run(self) -> Result<Vec<Embedding>, Error> {
        if self.a.sig != self.b.sig {
            return Ok(vec![]);
        }
        for s in 0..self.a.sig.sorts().len() {
            let (na, nb) = (self.a.carrier(s).len(), self.b.carrier(s).len());
            if na > nb || (self.surjective && na != nb) {
                return Ok(vec![]);
            }
        }
        let mut st = SearchState {
            a: self.a,
            b: self.b,
            surjective: self.surjective,
            limit: self.limit,
            node_cap: self.node_cap,
            map: BTreeMap::new(),
            used: BTreeSet::new(),
            nodes: 0,
            out: Vec::new(),
        };
        // Seed with fixed pairs, then propagate constants and closures.
        let mut trail = Vec::new();
        let mut ok = true;
        for (&x, &y) in &self.fixed {
            if !st.assign(x, y, &mut trail) {
                ok = false;
                break;
            }
        }
        if ok && !st.propagate(&mut trail) {
            ok = false;
        }
        if ok {
            st.search()?;
        }
        Ok(st.out)
    }
}

impl<'a> SearchState<'a> {
    /// Assign x ↦ y with sort/injectivity/relation checks. Pushes onto the
    /// undo trail; returns false on conflict (caller unwinds via trail).
    fn assign(&mut self, x: ElemId, y: ElemId, trail: &mut Vec<ElemId>) -> bool {
        if let Some(&prev) = self.map.get(&x) {
            return prev == y;
        }
        if x.sort != y.sort || !self.a.contains(x) || !self.b.contains(y) || self.used.contains(&y) {
            return false;
        }
        self.map.insert(x, y);
        self.used.insert(y);
        trail.push(x);
        self.check_rels_at(x)
    }

    /// Relation preservation+reflection over fully-mapped tuples touching x.
    fn check_rels_at(&self, x: ElemId) -> bool {
        for (r, decl) in self.a.sig.rels().iter().enumerate() {
            if !decl.arity.contains(&x.sort) {
                continue;
            }
            for t in self.a.tuples_over(&decl.arity) {
                if !t.contains(&x) {
                    continue;
                }
                let mt: Option<Vec<ElemId>> = t.iter().map(|e| self.map.get(e).copied()).collect();
                if let Some(mt) = mt {
                    if self.a.holds(r, &t) != self.b.holds(r, &mt) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Force images of function values whose arguments are all mapped.
    fn propagate(&mut self, trail: &mut Vec<ElemId>) -> bool {
        loop {
            let mut forced: Vec<(ElemId, ElemId)> = Vec::new();
            for (f, _) in self.a.sig.funcs().iter().enumerate() {
                for (args, v) in self.a.func(f) {
                    let margs: Option<Vec<ElemId>> = args.iter().map(|e| self.map.get(e).copied()).collect();
                    let Some(margs) = margs else { continue };
                    let Some(img) = self.b.apply(f, &margs) else { return false };
                    match self.map.get(v) {
                        Some(&cur) => {
                            if cur != img {
                                return false;
                            }
                        }
                        None => forced.push((*v, img)),
                    }
                }
            }
            if forced.is_empty() {
                return true;
            }
            for (v, img) in forced {
                if !self.assign(v, img, trail) {
                    return false;
                }
            }
        }
    }

    fn next_unmapped(&self) -> Option<ElemId> {
        self.a.elems().find(|e| !self.map.contains_key(e))
    }

    fn search(&mut self) -> Result<(), Error> {
        if self.out.len() >= self.limit {
            return Ok(());
        }
        let Some(x) = self.next_unmapped() else {
            if !self.surjective || self.used.len() == self.b.size() {
                self.out.push(Embedding { map: self.map.clone() });
            }
            return Ok(());
        };
        let candidates: Vec<ElemId> =
            self.b.carrier(x.sort).iter().copied().filter(|y| !self.used.contains(y)).collect();
        for y in candidates {
            self.nodes += 1;
            if let Some(cap) = self.node_cap {
                if self.nodes > cap {
                    return Err(Error::BudgetExceeded { nodes: self.nodes });
                }
            }
            let mut trail = Vec::new();
            if self.assign(x, y, &mut trail) && self.propagate(&mut trail) {
                self.search()?;
            }
            for k in trail.drain(..).rev() {
                let img = self.map.remove(&k).unwrap();
                self.used.remove(&img);
            }
            if self.out.len() >= self.limit {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Up to `limit` embeddings of `a` into `b`, in canonical order.
pub fn find_embeddings(a: &FinStructure, b: &FinStructure, limit: usize) -> Vec<Embedding> {
    EmbeddingSearch::new(a, b).limit(limit).run().expect("uncapped search")
}

pub fn embeds(a: &FinStructure, b: &FinStructure) -> bool {
    !find_embeddings(a, b, 1).is_empty()
}

pub fn find_isomorphism(a: &FinStructure, b: &FinStructure) -> Option<Embedding> {
    EmbeddingSearch::new(a, b).surjective().limit(1).run().expect("uncapped search").pop()
}

pub fn isomorphic(a: &FinStructure, b: &FinStructure) -> bool {
    find_isomorphism(a, b).is_some()
}

/// Full automorphism list, or a budget error beyond the node cap.
pub fn automorphisms(s: &FinStructure, node_cap: u64) -> Result<Vec<Embedding>, Error> {
    EmbeddingSearch::new(s, s).surjective().node_cap(node_cap).run()
}

/// Decides qftp equality of generating tuples: true iff an isomorphism of
/// the generated substructures maps one tuple to the other componentwise.
pub fn qftp_equal(
    host_a: &FinStructure,
    tuple_a: &[ElemId],
    host_b: &FinStructure,
    tuple_b: &[ElemId],
) -> bool {
    if tuple_a.len() != tuple_b.len() {
        return false;
    }
    if tuple_a.iter().zip(tuple_b).any(|(x, y)| x.sort != y.sort) {
        return false;
    }
    let ga = host_a.generated_sub(&tuple_a.iter().copied().collect());
    let gb = host_b.generated_sub(&tuple_b.iter().copied().collect());
    if ga.size() != gb.size() {
        return false;
    }
    // Repeated components must pair up consistently.
    let mut fixed = BTreeMap::new();
    for (&x, &y) in tuple_a.iter().zip(tuple_b) {
        if let Some(&prev) = fixed.get(&x) {
            if prev != y {
                return false;
            }
        }
        fixed.insert(x, y);
    }
    !EmbeddingSearch::new(&ga, &gb)
        .fixing(fixed)
        .surjective()
        .limit(1)
        .run()
        .expect("uncapped search")
        .is_empty()
}

/// Group-theoretic definable closure: elements fixed by every automorphism
/// that fixes the seed pointwise.
pub fn gdcl(s: &FinStructure, seed: &BTreeSet<ElemId>, node_cap: u64) -> Result<BTreeSet<ElemId>, Error> {
    let fixed: BTreeMap<ElemId, ElemId> = seed.iter().map(|&e| (e, e)).collect();
    let autos = EmbeddingSearch::new(s, s).surjective().fixing(fixed).node_cap(node_cap).run()?;
    Ok(s.elems()
        .filter(|&e| autos.iter().all(|g| g.apply(e) == Some(e)))
        .collect())
}
