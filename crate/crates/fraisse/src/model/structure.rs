//! Finite multi-sorted structures with total function tables.
//!
//! Element ids are globally unique and sort-tagged, so carriers of related
//! structures intersect as plain sets. All iteration is over sorted
//! carriers and fixed symbol order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::model::signature::{FuncId, RelId, Signature, SortId};

/// A sort-tagged element id. The raw id is unique across every structure a
/// computation touches; the sort tag travels with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElemId {
    pub sort: SortId,
    pub id: u32,
}

impl ElemId {
    pub fn new(sort: SortId, id: u32) -> ElemId {
        ElemId { sort, id }
    }
}

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.sort, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Function value missing for a carrier tuple.
    NonTotalFunction { func: FuncId, args: Vec<ElemId> },
    /// Function maps into a non-carrier element or wrong sort.
    EscapingFunction { func: FuncId, args: Vec<ElemId>, value: ElemId },
    /// Function table entry whose arguments are outside the carrier.
    StrayTableEntry { func: FuncId, args: Vec<ElemId> },
    /// Relation tuple with non-carrier or ill-sorted components.
    BadRelTuple { rel: RelId, tuple: Vec<ElemId> },
    /// Element stored under the wrong sort.
    SortTagMismatch { elem: ElemId, stored_under: SortId },
}

/// A finite structure. Equality is literal (same carrier ids, same tables);
/// use embedding search for isomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinStructure {
    pub sig: Arc<Signature>,
    carrier: Vec<BTreeSet<ElemId>>,
    funcs: Vec<BTreeMap<Vec<ElemId>, ElemId>>,
    rels: Vec<BTreeSet<Vec<ElemId>>>,
}

impl FinStructure {
    pub fn empty(sig: Arc<Signature>) -> FinStructure {
        let ns = sig.sorts().len();
        let nf = sig.funcs().len();
        let nr = sig.rels().len();
        FinStructure {
            sig,
            carrier: vec![BTreeSet::new(); ns],
            funcs: vec![BTreeMap::new(); nf],
            rels: vec![BTreeSet::new(); nr],
        }
    }

    pub fn add_elem(&mut self, e: ElemId) {
        self.carrier[e.sort].insert(e);
    }

    pub fn set_func(&mut self, f: FuncId, args: Vec<ElemId>, val: ElemId) {
        self.funcs[f].insert(args, val);
    }

    pub fn add_rel(&mut self, r: RelId, tuple: Vec<ElemId>) {
        self.rels[r].insert(tuple);
    }

    pub fn remove_rel(&mut self, r: RelId, tuple: &[ElemId]) {
        self.rels[r].remove(tuple);
    }

    pub fn carrier(&self, sort: SortId) -> &BTreeSet<ElemId> {
        &self.carrier[sort]
    }

    /// All elements, sorted by (sort, id).
    pub fn elems(&self) -> impl Iterator<Item = ElemId> + '_ {
        self.carrier.iter().flat_map(|s| s.iter().copied())
    }

    pub fn elem_set(&self) -> BTreeSet<ElemId> {
        self.elems().collect()
    }

    pub fn size(&self) -> usize {
        self.carrier.iter().map(|s| s.len()).sum()
    }

    pub fn contains(&self, e: ElemId) -> bool {
        e.sort < self.carrier.len() && self.carrier[e.sort].contains(&e)
    }

    pub fn func(&self, f: FuncId) -> &BTreeMap<Vec<ElemId>, ElemId> {
        &self.funcs[f]
    }

    pub fn apply(&self, f: FuncId, args: &[ElemId]) -> Option<ElemId> {
        self.funcs[f].get(args).copied()
    }

    pub fn rel(&self, r: RelId) -> &BTreeSet<Vec<ElemId>> {
        &self.rels[r]
    }

    pub fn holds(&self, r: RelId, tuple: &[ElemId]) -> bool {
        self.rels[r].contains(tuple)
    }

    /// A raw id strictly above everything in this structure. Callers combine
    /// maxima over all structures in play before minting fresh ids.
    pub fn max_raw_id(&self) -> u32 {
        self.elems().map(|e| e.id).max().map_or(0, |m| m)
    }

    /// All sort-correct argument tuples over the carrier for the given sorts.
    pub fn tuples_over(&self, sorts: &[SortId]) -> Vec<Vec<ElemId>> {
        let mut out: Vec<Vec<ElemId>> = vec![vec![]];
        for &s in sorts {
            let mut next = Vec::new();
            for t in &out {
                for &e in &self.carrier[s] {
                    let mut t2 = t.clone();
                    t2.push(e);
                    next.push(t2);
                }
            }
            out = next;
        }
        out
    }

    /// Checks every structure invariant; violations are data, not failures.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (sort, set) in self.carrier.iter().enumerate() {
            for e in set {
                if e.sort != sort {
                    out.push(Violation::SortTagMismatch { elem: *e, stored_under: sort });
                }
            }
        }
        for (f, decl) in self.sig.funcs().iter().enumerate() {
            for args in self.tuples_over(&decl.domain) {
                match self.apply(f, &args) {
                    None => out.push(Violation::NonTotalFunction { func: f, args }),
                    Some(v) => {
                        if v.sort != decl.codomain || !self.contains(v) {
                            out.push(Violation::EscapingFunction { func: f, args, value: v });
                        }
                    }
                }
            }
            for (args, _) in &self.funcs[f] {
                let ok = args.len() == decl.domain.len()
                    && args.iter().zip(&decl.domain).all(|(e, &s)| e.sort == s && self.contains(*e));
                if !ok {
                    out.push(Violation::StrayTableEntry { func: f, args: args.clone() });
                }
            }
        }
        for (r, decl) in self.sig.rels().iter().enumerate() {
            for tuple in &self.rels[r] {
                let ok = tuple.len() == decl.arity.len()
                    && tuple.iter().zip(&decl.arity).all(|(e, &s)| e.sort == s && self.contains(*e));
                if !ok {
                    out.push(Violation::BadRelTuple { rel: r, tuple: tuple.clone() });
                }
            }
        }
        out
    }

    /// Term-definable closure: least superset of `seed` closed under every
    /// function table, including 0-ary constants.
    pub fn tdcl(&self, seed: &BTreeSet<ElemId>) -> BTreeSet<ElemId> {
        let mut closed: BTreeSet<ElemId> = seed.iter().copied().filter(|e| self.contains(*e)).collect();
        loop {
            let mut added = false;
            for (f, decl) in self.sig.funcs().iter().enumerate() {
                if decl.domain.is_empty() {
                    if let Some(v) = self.apply(f, &[]) {
                        added |= closed.insert(v);
                    }
                    continue;
                }
                for (args, v) in &self.funcs[f] {
                    if !closed.contains(v) && args.iter().all(|a| closed.contains(a)) {
                        closed.insert(*v);
                        added = true;
                    }
                }
            }
            if !added {
                return closed;
            }
        }
    }

    pub fn is_term_closed(&self, set: &BTreeSet<ElemId>) -> bool {
        self.tdcl(set) == *set
    }

    /// Induced structure on a term-closed subset.
    pub fn restrict(&self, set: &BTreeSet<ElemId>) -> FinStructure {
        let mut sub = FinStructure::empty(self.sig.clone());
        for &e in set {
            sub.add_elem(e);
        }
        for (f, table) in self.funcs.iter().enumerate() {
            for (args, v) in table {
                if args.iter().all(|a| set.contains(a)) && set.contains(v) {
                    sub.set_func(f, args.clone(), *v);
                }
            }
        }
        for (r, tuples) in self.rels.iter().enumerate() {
            for t in tuples {
                if t.iter().all(|e| set.contains(e)) {
                    sub.add_rel(r, t.clone());
                }
            }
        }
        sub
    }

    /// Substructure generated by a seed: induced structure on tdcl(seed).
    pub fn generated_sub(&self, seed: &BTreeSet<ElemId>) -> FinStructure {
        self.restrict(&self.tdcl(seed))
    }

    /// Reduct to a subsignature: same carrier on the sub's sorts, tables and
    /// tuple sets restricted to its symbols.
    pub fn reduct(&self, sub: &Arc<Signature>) -> Result<FinStructure, Error> {
        let emb = sub
            .embedding_into(&self.sig)
            .ok_or_else(|| Error::Signature("not a subsignature".into()))?;
        // Sort tags are baked into element ids, so the sub's sorts must be an
        // identity prefix of the full signature's sorts.
        if emb.sort_map.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::Signature("subsignature sorts must be an identity prefix".into()));
        }
        let mut out = FinStructure::empty(sub.clone());
        for sub_sort in 0..sub.sorts().len() {
            out.carrier[sub_sort] = self.carrier[sub_sort].clone();
        }
        for (fi, _) in sub.funcs().iter().enumerate() {
            let sup_f = emb.func_map[fi];
            out.funcs[fi] = self.funcs[sup_f].clone();
        }
        for (ri, _) in sub.rels().iter().enumerate() {
            let sup_r = emb.rel_map[ri];
            out.rels[ri] = self.rels[sup_r].clone();
        }
        Ok(out)
    }

    /// B ⊆ A: carrier contained sortwise, functions agree on B, relations of
    /// B are exactly A's relations restricted to B.
    pub fn is_substructure_of(&self, sup: &FinStructure) -> bool {
        if self.sig != sup.sig {
            return false;
        }
        for (s, set) in self.carrier.iter().enumerate() {
            if !set.is_subset(&sup.carrier[s]) {
                return false;
            }
        }
        let set = self.elem_set();
        if !sup.is_term_closed(&set) {
            return false;
        }
        for (f, decl) in self.sig.funcs().iter().enumerate() {
            for args in self.tuples_over(&decl.domain) {
                if self.apply(f, &args) != sup.apply(f, &args) {
                    return false;
                }
            }
        }
        for (r, decl) in self.sig.rels().iter().enumerate() {
            for t in self.tuples_over(&decl.arity) {
                if self.holds(r, &t) != sup.holds(r, &t) {
                    return false;
                }
            }
            // no stray tuples outside the carrier
            for t in &self.rels[r] {
                if !t.iter().all(|e| set.contains(e)) {
                    return false;
                }
            }
        }
        true
    }

    /// Union of two structures whose tables agree on the overlap. Returns
    /// None on a function-table or relation-sort conflict.
    pub fn union(&self, other: &FinStructure) -> Option<FinStructure> {
        if self.sig != other.sig {
            return None;
        }
        let mut out = self.clone();
        for (s, set) in other.carrier.iter().enumerate() {
            out.carrier[s].extend(set.iter().copied());
        }
        for (f, table) in other.funcs.iter().enumerate() {
            for (args, v) in table {
                if let Some(prev) = out.funcs[f].get(args) {
                    if prev != v {
                        return None;
                    }
                }
                out.funcs[f].insert(args.clone(), *v);
            }
        }
        for (r, tuples) in other.rels.iter().enumerate() {
            out.rels[r].extend(tuples.iter().cloned());
        }
        Some(out)
    }

    /// Rewrites every element id through `map` (must be injective and
    /// total on the carrier, sort-preserving).
    pub fn rename(&self, map: &BTreeMap<ElemId, ElemId>) -> FinStructure {
        let m = |e: ElemId| *map.get(&e).unwrap_or(&e);
        let mut out = FinStructure::empty(self.sig.clone());
        for e in self.elems() {
            out.add_elem(m(e));
        }
        for (f, table) in self.funcs.iter().enumerate() {
            for (args, v) in table {
                out.set_func(f, args.iter().map(|&a| m(a)).collect(), m(*v));
            }
        }
        for (r, tuples) in self.rels.iter().enumerate() {
            for t in tuples {
                out.add_rel(r, t.iter().map(|&e| m(e)).collect());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::signature::Signature;

    pub fn tree_sig() -> Arc<Signature> {
        Arc::new(
            Signature::new(
                vec!["node".into()],
                vec![],
                vec![
                    ("p".into(), vec!["node".into()], "node".into()),
                    ("r".into(), vec![], "node".into()),
                ],
            )
            .unwrap(),
        )
    }

    fn node(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    /// r <- a <- b rooted path.
    fn path3() -> FinStructure {
        let sig = tree_sig();
        let mut s = FinStructure::empty(sig);
        let (r, a, b) = (node(0), node(1), node(2));
        s.add_elem(r);
        s.add_elem(a);
        s.add_elem(b);
        s.set_func(0, vec![r], r);
        s.set_func(0, vec![a], r);
        s.set_func(0, vec![b], a);
        s.set_func(1, vec![], r);
        s
    }

    #[test]
    fn validate_ok_and_violations() {
        let s = path3();
        assert!(s.validate().is_empty());

        let mut bad = s.clone();
        bad.set_func(0, vec![node(2)], node(9)); // escapes the carrier
        assert!(bad
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::EscapingFunction { .. })));

        let empty = FinStructure::empty(Arc::new(
            Signature::new(vec!["v".into()], vec![("E".into(), vec!["v".into(), "v".into()])], vec![]).unwrap(),
        ));
        assert!(empty.validate().is_empty());
    }

    #[test]
    fn tdcl_chases_parents_and_constants() {
        let s = path3();
        let seed: BTreeSet<_> = [node(2)].into();
        let cl = s.tdcl(&seed);
        assert_eq!(cl, [node(0), node(1), node(2)].into());
        // constant alone closes the empty seed
        assert_eq!(s.tdcl(&BTreeSet::new()), [node(0)].into());
    }

    #[test]
    fn generated_sub_and_substructure() {
        let s = path3();
        let full = s.generated_sub(&s.elem_set());
        assert_eq!(full, s);
        let root = s.generated_sub(&BTreeSet::new());
        assert_eq!(root.size(), 1);
        assert!(root.is_substructure_of(&s));
        assert!(s.is_substructure_of(&s));
    }

    #[test]
    fn reduct_to_full_signature_is_identity() {
        let s = path3();
        let r = s.reduct(&s.sig.clone()).unwrap();
        assert_eq!(r, s);
    }
}
