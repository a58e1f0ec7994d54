//! Finite-scale structure theory of the condition poset: compatibility of
//! conditions (common extensions within a size budget), linked subfamilies
//! and antichains, and the term Δ-system (sunflower) finder.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::age::AgeSpec;
use crate::amalgam::{extended_amalgams, AmalgamProblem};
use crate::builder::{core_age, Condition};
use crate::framework::hooks;
use crate::model::{ElemId, FinStructure};

/// A sunflower inside a family of term-closed element sets: the selected
/// members pairwise intersect in exactly `core`.
#[derive(Debug, Clone)]
pub struct SunflowerCert {
    pub indices: Vec<usize>,
    pub core: BTreeSet<ElemId>,
}

impl SunflowerCert {
    /// Recomputes every pairwise intersection and the core's term-closure.
    /// Family members are term-closed first, mirroring the finder: the
    /// Δ-system lives on the generated carriers, not the raw seeds.
    pub fn replays(&self, host: &FinStructure, family: &[BTreeSet<ElemId>]) -> bool {
        if !host.is_term_closed(&self.core) {
            return false;
        }
        let closed: Vec<BTreeSet<ElemId>> = family.iter().map(|s| host.tdcl(s)).collect();
        self.indices.iter().enumerate().all(|(pos, &i)| {
            self.indices[pos + 1..].iter().all(|&j| {
                let inter: BTreeSet<ElemId> =
                    closed[i].intersection(&closed[j]).copied().collect();
                inter == self.core
            })
        })
    }
}

fn pairwise_core(family: &[BTreeSet<ElemId>], chosen: &[usize]) -> Option<BTreeSet<ElemId>> {
    let mut core: Option<BTreeSet<ElemId>> = None;
    for (pos, &i) in chosen.iter().enumerate() {
        for &j in &chosen[pos + 1..] {
            let inter: BTreeSet<ElemId> = family[i].intersection(&family[j]).copied().collect();
            match &core {
                None => core = Some(inter),
                Some(c) if *c == inter => {}
                _ => return None,
            }
        }
    }
    core
}

const SUNFLOWER_EXACT_CAP: usize = 15;

/// Searches for a sunflower of size ≥ t: exhaustive for small families,
/// core-bucketing (group by candidate pairwise-intersection core, grow the
/// largest consistent bucket greedily) beyond. Members are closed via tdcl
/// first; the certificate's core is always term-closed (intersections of
/// term-closed sets are).
pub fn find_sunflower(
    host: &FinStructure,
    family: &[BTreeSet<ElemId>],
    t: usize,
) -> Option<SunflowerCert> {
    if t < 2 || family.len() < t {
        return None;
    }
    let family: Vec<BTreeSet<ElemId>> = family.iter().map(|s| host.tdcl(s)).collect();
    if family.len() <= SUNFLOWER_EXACT_CAP {
        // All subsets, largest first.
        let n = family.len();
        let mut best: Option<Vec<usize>> = None;
        for mask in 0u32..(1 << n) {
            let chosen: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            if chosen.len() < t || best.as_ref().map_or(false, |b| b.len() >= chosen.len()) {
                continue;
            }
            if pairwise_core(&family, &chosen).is_some() {
                best = Some(chosen);
            }
        }
        let indices = best?;
        let core = pairwise_core(&family, &indices).expect("checked");
        return Some(SunflowerCert { indices, core });
    }
    // Candidate cores: every pairwise intersection (plus ∅'s closure).
    let mut candidates: BTreeSet<BTreeSet<ElemId>> = BTreeSet::new();
    candidates.insert(host.tdcl(&BTreeSet::new()));
    for (i, a) in family.iter().enumerate() {
        for b in &family[i + 1..] {
            candidates.insert(a.intersection(b).copied().collect());
        }
    }
    let mut best: Option<Vec<usize>> = None;
    for core in candidates {
        let mut chosen: Vec<usize> = Vec::new();
        for (i, a) in family.iter().enumerate() {
            if !core.is_subset(a) {
                continue;
            }
            if chosen.iter().all(|&j| {
                family[j].intersection(a).copied().collect::<BTreeSet<_>>() == core
            }) {
                chosen.push(i);
            }
        }
        if chosen.len() >= t && best.as_ref().map_or(true, |b| chosen.len() > b.len()) {
            best = Some(chosen);
        }
    }
    let indices = best?;
    let core = pairwise_core(&family, &indices).expect("greedy kept the core invariant");
    Some(SunflowerCert { indices, core })
}

/// Searches for a common extension D ∈ K of two conditions over the same
/// base snapshot, with |D| ≤ budget, decorating the base's generated
/// substructure over the union of their carriers. None means "incompatible
/// within this budget", never an absolute claim.
pub fn compatible(
    p: &Condition,
    q: &Condition,
    k: &Arc<AgeSpec>,
    base: &FinStructure,
    budget: usize,
) -> Option<FinStructure> {
    let core = core_age(k);
    let bsig = &core.sig;
    let common: BTreeSet<ElemId> =
        p.structure.elem_set().intersection(&q.structure.elem_set()).copied().collect();
    let a_p = p.structure.restrict(&common);
    let a_q = q.structure.restrict(&common);
    // Conditions must agree literally on their shared carrier.
    if !(a_p.is_substructure_of(&a_q) && a_q.is_substructure_of(&a_p)) {
        return None;
    }
    let prob = AmalgamProblem::literal(a_p, p.structure.clone(), q.structure.clone()).ok()?;
    let p_red = prob.b.reduct(bsig).ok()?;
    let q_red = prob.c.reduct(bsig).ok()?;
    let seed: BTreeSet<ElemId> =
        p_red.elem_set().union(&q_red.elem_set()).copied().collect();
    if !seed.is_subset(&base.elem_set()) {
        return None;
    }
    let dbot = base.generated_sub(&seed);
    if dbot.size() > budget {
        return None;
    }
    let d = extended_amalgams(&k.sig, bsig, &prob, &dbot, &hooks(k), 1, None)
        .ok()?
        .pop()?;
    if d.size() > budget {
        return None;
    }
    Some(d)
}

/// Pairwise compatibility of a family of conditions at a fixed budget, with
/// witnesses on the edges.
pub struct CompatGraph {
    pub nodes: Vec<Condition>,
    pub edges: BTreeMap<(usize, usize), FinStructure>,
    pub budget: usize,
}

impl CompatGraph {
    pub fn build(
        conds: &[Condition],
        k: &Arc<AgeSpec>,
        base: &FinStructure,
        budget: usize,
    ) -> CompatGraph {
        let mut edges = BTreeMap::new();
        for i in 0..conds.len() {
            for j in i + 1..conds.len() {
                if let Some(w) = compatible(&conds[i], &conds[j], k, base, budget) {
                    edges.insert((i, j), w);
                }
            }
        }
        CompatGraph { nodes: conds.to_vec(), edges, budget }
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.contains_key(&key)
    }

    /// One line per edge: the index pair and the witness size.
    pub fn adjacency_dump(&self) -> String {
        let mut out = String::new();
        for (&(i, j), w) in &self.edges {
            out.push_str(&format!("{i} {j} {}\n", w.size()));
        }
        out
    }
}

const CLIQUE_EXACT_CAP: usize = 20;

/// Largest clique under `adj`: exact branch-and-bound for ≤ 20 nodes,
/// greedy with a one-swap improvement pass beyond.
fn max_clique(n: usize, adj: &dyn Fn(usize, usize) -> bool) -> Vec<usize> {
    if n == 0 {
        return vec![];
    }
    if n <= CLIQUE_EXACT_CAP {
        fn extend(
            adj: &dyn Fn(usize, usize) -> bool,
            chosen: &mut Vec<usize>,
            rest: &[usize],
            best: &mut Vec<usize>,
        ) {
            if chosen.len() + rest.len() <= best.len() {
                return;
            }
            if chosen.len() > best.len() {
                *best = chosen.clone();
            }
            for (pos, &v) in rest.iter().enumerate() {
                if chosen.iter().all(|&u| adj(u, v)) {
                    chosen.push(v);
                    let next: Vec<usize> =
                        rest[pos + 1..].iter().copied().filter(|&w| adj(v, w)).collect();
                    extend(adj, chosen, &next, best);
                    chosen.pop();
                }
            }
        }
        let mut best = Vec::new();
        let all: Vec<usize> = (0..n).collect();
        extend(adj, &mut Vec::new(), &all, &mut best);
        return best;
    }
    // Greedy by degree, then try replacing each member by two outsiders.
    let mut order: Vec<usize> = (0..n).collect();
    let degree = |v: usize| (0..n).filter(|&u| u != v && adj(u, v)).count();
    order.sort_by_key(|&v| std::cmp::Reverse(degree(v)));
    let mut clique: Vec<usize> = Vec::new();
    for &v in &order {
        if clique.iter().all(|&u| adj(u, v)) {
            clique.push(v);
        }
    }
    let mut improved = true;
    while improved {
        improved = false;
        'outer: for drop_pos in 0..clique.len() {
            let mut trial: Vec<usize> = clique.clone();
            trial.remove(drop_pos);
            let mut added = 0;
            for v in 0..n {
                if !trial.contains(&v) && trial.iter().all(|&u| adj(u, v)) {
                    trial.push(v);
                    added += 1;
                }
            }
            if added >= 2 && trial.len() > clique.len() {
                clique = trial;
                improved = true;
                break 'outer;
            }
        }
    }
    clique.sort_unstable();
    clique
}

/// The largest pairwise-compatible subfamily found, with its witnesses.
pub fn linked_subfamily(
    conds: &[Condition],
    k: &Arc<AgeSpec>,
    base: &FinStructure,
    budget: usize,
) -> (Vec<usize>, CompatGraph) {
    let graph = CompatGraph::build(conds, k, base, budget);
    let clique = max_clique(conds.len(), &|i, j| graph.adjacent(i, j));
    (clique, graph)
}

/// The largest pairwise-incompatible subfamily found (incompatibility is
/// relative to the budget).
pub fn max_antichain(
    conds: &[Condition],
    k: &Arc<AgeSpec>,
    base: &FinStructure,
    budget: usize,
) -> (Vec<usize>, CompatGraph) {
    let graph = CompatGraph::build(conds, k, base, budget);
    let clique = max_clique(conds.len(), &|i, j| !graph.adjacent(i, j));
    (clique, graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::{all_orbits, decorations};
    use crate::builder::bare_sets_age;
    use crate::catalog;

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    #[test]
    fn disjoint_family_is_a_sunflower_with_empty_core() {
        let k = bare_sets_age(vec!["v".into()]);
        let mut host = FinStructure::empty(k.sig.clone());
        for i in 0..6 {
            host.add_elem(v(i));
        }
        let family: Vec<BTreeSet<ElemId>> =
            (0..3).map(|i| [v(2 * i), v(2 * i + 1)].into_iter().collect()).collect();
        let cert = find_sunflower(&host, &family, 3).unwrap();
        assert_eq!(cert.indices, vec![0, 1, 2]);
        assert!(cert.core.is_empty());
        assert!(cert.replays(&host, &family));
    }

    #[test]
    fn common_point_core_of_three() {
        let k = bare_sets_age(vec!["v".into()]);
        let mut host = FinStructure::empty(k.sig.clone());
        for i in 0..7 {
            host.add_elem(v(i));
        }
        let family: Vec<BTreeSet<ElemId>> = vec![
            [v(0), v(1)].into_iter().collect(),
            [v(0), v(2)].into_iter().collect(),
            [v(0), v(3)].into_iter().collect(),
            [v(1), v(2)].into_iter().collect(), // breaks the pattern
        ];
        let cert = find_sunflower(&host, &family, 3).unwrap();
        assert_eq!(cert.indices, vec![0, 1, 2]);
        assert_eq!(cert.core, [v(0)].into_iter().collect());
        assert!(cert.replays(&host, &family));
    }

    #[test]
    fn seven_lines_of_the_binary_cube_share_zero() {
        let k = catalog::vectorspace::make_vector_space_age(2, false).unwrap();
        let host = catalog::vectorspace::make_space(2, &k.sig, 3);
        let zero = host.apply(3, &[]).unwrap();
        let lines: Vec<BTreeSet<ElemId>> = host
            .elems()
            .filter(|&e| e != zero)
            .map(|e| host.tdcl(&[e].into_iter().collect()))
            .collect();
        assert_eq!(lines.len(), 7);
        let cert = find_sunflower(&host, &lines, 7).unwrap();
        assert_eq!(cert.indices.len(), 7);
        assert_eq!(cert.core, [zero].into_iter().collect());
        assert!(cert.replays(&host, &lines));
    }

    fn graph_condition(sig: &Arc<crate::model::Signature>, verts: &[u32], edges: &[(u32, u32)]) -> Condition {
        let mut s = FinStructure::empty(sig.clone());
        for &i in verts {
            s.add_elem(v(i));
        }
        for &(i, j) in edges {
            s.add_rel(0, vec![v(i), v(j)]);
            s.add_rel(0, vec![v(j), v(i)]);
        }
        Condition { structure: s, stage: 0 }
    }

    fn bare_base(n: u32) -> FinStructure {
        let k = bare_sets_age(vec!["v".into()]);
        let mut base = FinStructure::empty(k.sig.clone());
        for i in 0..n {
            base.add_elem(v(i));
        }
        base
    }

    #[test]
    fn condition_is_compatible_with_itself() {
        let entry = catalog::entry("graphs").unwrap();
        let base = bare_base(2);
        let p = graph_condition(&entry.age.sig, &[0, 1], &[(0, 1)]);
        let w = compatible(&p, &p, &entry.age, &base, 8).unwrap();
        assert!(p.structure.is_substructure_of(&w));
    }

    #[test]
    fn conflicting_edge_decisions_are_incompatible() {
        let entry = catalog::entry("graphs").unwrap();
        let base = bare_base(2);
        let p = graph_condition(&entry.age.sig, &[0, 1], &[(0, 1)]);
        let q = graph_condition(&entry.age.sig, &[0, 1], &[]);
        assert!(compatible(&p, &q, &entry.age, &base, 8).is_none());
    }

    #[test]
    fn disjoint_conditions_amalgamate_freely() {
        let entry = catalog::entry("graphs").unwrap();
        let base = bare_base(4);
        let p = graph_condition(&entry.age.sig, &[0, 1], &[(0, 1)]);
        let q = graph_condition(&entry.age.sig, &[2, 3], &[]);
        let w = compatible(&p, &q, &entry.age, &base, 8).unwrap();
        assert!(p.structure.is_substructure_of(&w));
        assert!(q.structure.is_substructure_of(&w));
    }

    #[test]
    fn linked_subfamily_excludes_one_side_of_a_conflict() {
        let entry = catalog::entry("graphs").unwrap();
        let base = bare_base(4);
        let conds = vec![
            graph_condition(&entry.age.sig, &[0, 1], &[(0, 1)]),
            graph_condition(&entry.age.sig, &[0, 1], &[]),
            graph_condition(&entry.age.sig, &[2, 3], &[(2, 3)]),
        ];
        let (clique, graph) = linked_subfamily(&conds, &entry.age, &base, 10);
        assert_eq!(clique.len(), 2);
        // Witnesses recheck as common extensions.
        for (&(i, j), w) in &graph.edges {
            assert!(conds[i].structure.is_substructure_of(w));
            assert!(conds[j].structure.is_substructure_of(w));
            assert!(entry.age.is_member(w));
        }
    }

    #[test]
    fn decorations_of_a_shared_triple_form_an_antichain() {
        let entry = catalog::entry("graphs").unwrap();
        let base = bare_base(3);
        let mut bare = FinStructure::empty(entry.age.sig.clone());
        for i in 0..3 {
            bare.add_elem(v(i));
        }
        let orbits = all_orbits(&bare, &|_, t| {
            if t[0] == t[1] { vec![t.to_vec()] } else { vec![t.to_vec(), vec![t[1], t[0]]] }
        });
        let conds: Vec<Condition> = decorations(&bare, &orbits, &|_| true, usize::MAX)
            .into_iter()
            .filter(|s| entry.age.is_member(s))
            .map(|s| Condition { structure: s, stage: 0 })
            .collect();
        assert_eq!(conds.len(), 8);
        let (anti, _) = max_antichain(&conds, &entry.age, &base, 6);
        assert_eq!(anti.len(), 8);
    }
}
