//! Bounded verification of class properties: hereditary property, joint
//! embedding, strong amalgamation, its extended form over the core
//! signature, and closure under chain unions. Verdicts always cite the
//! bound; failures carry a replayable counterexample.

use std::collections::BTreeSet;
use std::fmt;

use crate::amalgam::{extended_amalgams, AmalgamProblem, DecorationHooks};
use crate::age::{AgeSpec, EnumBound};
use crate::model::{find_embeddings, ElemId, Embedding, FinStructure};

#[derive(Debug)]
pub struct PropertyReport {
    pub property: String,
    pub bound: String,
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
    pub detail: String,
}

impl PropertyReport {
    pub(crate) fn pass(property: &str, bound: String, detail: String) -> PropertyReport {
        PropertyReport { property: property.into(), bound, pass: true, counterexample: None, detail }
    }

    pub(crate) fn fail(property: &str, bound: String, cex: Counterexample, detail: String) -> PropertyReport {
        PropertyReport {
            property: property.into(),
            bound,
            pass: false,
            counterexample: Some(cex),
            detail,
        }
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (bound {}){}{}",
            self.property,
            if self.pass { "pass" } else { "fail" },
            self.bound,
            if self.detail.is_empty() { "" } else { " — " },
            self.detail
        )
    }
}

/// A failing configuration, stored concretely enough to re-run.
#[derive(Debug)]
pub enum Counterexample {
    Hp { member: FinStructure, subset: BTreeSet<ElemId> },
    Jep { a: FinStructure, b: FinStructure },
    Sap { prob: AmalgamProblem },
    Esap { prob: AmalgamProblem, dbot: FinStructure },
    ChainUnion { chain: Vec<FinStructure> },
    /// Limit axiom (a): `member` does not embed into `g`.
    FrClauseA { g: FinStructure, member: FinStructure },
    /// Limit axiom (b): `emb : a → g` has no extension to `b` inside `g`.
    FrClauseB { g: FinStructure, a: FinStructure, b: FinStructure, emb: Embedding },
    /// Distinct-2-types: the pair x0, x1 (equal 1-types over `a_set` in `b`)
    /// admits no distinguishing member.
    TwoTypes { b: FinStructure, a_set: BTreeSet<ElemId>, x0: ElemId, x1: ElemId },
    /// Pinning: two isomorphisms a → b agree on the pin sort yet differ.
    Pins { sort: usize, a: FinStructure, b: FinStructure, i0: Embedding, i1: Embedding },
    /// Splitting: no family element separates the pair x, y of `a` in any
    /// bounded extension inside `base`.
    Splitting {
        a: FinStructure,
        x: ElemId,
        y: ElemId,
        fset: BTreeSet<ElemId>,
        base: FinStructure,
    },
}

impl Counterexample {
    /// Re-runs the specific failing instance; true means it still fails.
    pub fn replays(&self, k: &AgeSpec) -> bool {
        match self {
            Counterexample::Hp { member, subset } => {
                k.is_member(member)
                    && member.is_term_closed(subset)
                    && !k.is_member(&member.restrict(subset))
            }
            Counterexample::Jep { a, b } => {
                k.is_member(a) && k.is_member(b) && joint_embed(k, a, b).is_none()
            }
            Counterexample::Sap { prob } => find_amalgam(k, prob).is_none(),
            Counterexample::Esap { prob, dbot } => {
                extended_over(k, prob, dbot, 1, None).map_or(true, |v| v.is_empty())
            }
            Counterexample::ChainUnion { chain } => {
                chain.windows(2).all(|w| w[0].is_substructure_of(&w[1]))
                    && chain.iter().all(|c| k.universal_ok(c))
                    && !k.is_member(chain.last().expect("nonempty chain"))
            }
            Counterexample::FrClauseA { g, member } => {
                k.is_member(member) && !crate::model::embeds(member, g)
            }
            Counterexample::FrClauseB { g, a, b, emb } => {
                crate::model::is_embedding(a, g, emb)
                    && a.is_substructure_of(b)
                    && !crate::builder::extension_exists(b, g, emb)
            }
            Counterexample::TwoTypes { b, a_set, x0, x1 } => !matches!(
                crate::rigidity::config_distinguished(k, b, a_set, *x0, *x1),
                Ok(true)
            ),
            Counterexample::Pins { sort, a, b, i0, i1 } => {
                let pin = |e: &Embedding| -> Vec<(ElemId, ElemId)> {
                    e.map.iter().filter(|(x, _)| x.sort == *sort).map(|(&x, &y)| (x, y)).collect()
                };
                crate::model::is_isomorphism(a, b, i0)
                    && crate::model::is_isomorphism(a, b, i1)
                    && i0.map != i1.map
                    && pin(i0) == pin(i1)
            }
            Counterexample::Splitting { a, x, y, fset, base } => !matches!(
                crate::rigidity::splitting_pair_ok(k, fset, base, a, *x, *y),
                Ok(true)
            ),
        }
    }
}

pub fn hooks(k: &AgeSpec) -> DecorationHooks<'_> {
    DecorationHooks {
        universal_ok: &*k.universal_ok,
        member: &*k.member,
        tuple_orbit: &*k.tuple_orbit,
        dense_first: k.dense_first,
    }
}

/// Extended amalgams of a normalized span over a prescribed core amalgam,
/// with the class's hooks.
pub fn extended_over(
    k: &AgeSpec,
    prob: &AmalgamProblem,
    dbot: &FinStructure,
    limit: usize,
    seed: Option<u64>,
) -> Result<Vec<FinStructure>, crate::error::Error> {
    extended_amalgams(&k.sig, k.subsig(), prob, dbot, &hooks(k), limit, seed)
}

/// First amalgam found over any candidate prescribed core amalgam.
pub fn find_amalgam(k: &AgeSpec, prob: &AmalgamProblem) -> Option<FinStructure> {
    for dbot in k.close_union(prob) {
        if let Ok(mut v) = extended_over(k, prob, &dbot, 1, None) {
            if let Some(d) = v.pop() {
                return Some(d);
            }
        }
    }
    None
}

/// Joint embedding via amalgamation over the substructure generated by ∅.
pub fn joint_embed(k: &AgeSpec, a: &FinStructure, b: &FinStructure) -> Option<FinStructure> {
    let a0 = a.generated_sub(&BTreeSet::new());
    let emb = find_embeddings(&a0, b, 1).pop()?;
    let prob = AmalgamProblem::normalize(&a0, a, b, &Embedding::identity(&a0), &emb).ok()?;
    find_amalgam(k, &prob)
}

/// All subsets of `elems` of size ≤ max (including ∅).
fn subsets_upto(elems: &[ElemId], max: usize) -> Vec<BTreeSet<ElemId>> {
    let mut out = vec![BTreeSet::new()];
    for &e in elems {
        let mut grown: Vec<BTreeSet<ElemId>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut t = s.clone();
                t.insert(e);
                t
            })
            .collect();
        out.append(&mut grown);
    }
    out
}

/// Distinct term-closed subsets of `m` arising as closures of ≤ max_gens
/// elements (every term-closed set with that many generators is covered).
pub fn term_closed_subsets(m: &FinStructure, max_gens: usize) -> Vec<BTreeSet<ElemId>> {
    let elems: Vec<ElemId> = m.elems().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in subsets_upto(&elems, max_gens) {
        let closed = m.tdcl(&s);
        if seen.insert(closed.clone()) {
            out.push(closed);
        }
    }
    out
}

/// Hereditary property: generated substructures of members are members.
pub fn check_hp(k: &AgeSpec, bound: EnumBound) -> PropertyReport {
    let mut checked = 0usize;
    for m in k.enumerate(bound) {
        for subset in term_closed_subsets(&m, bound.generators) {
            checked += 1;
            let sub = m.restrict(&subset);
            if !k.is_member(&sub) {
                return PropertyReport::fail(
                    "hp",
                    format!("{}", bound.generators),
                    Counterexample::Hp { member: m, subset },
                    "generated substructure left the class".into(),
                );
            }
        }
    }
    PropertyReport::pass("hp", format!("{}", bound.generators), format!("{checked} substructures checked"))
}

/// Joint embedding property via amalgamation over the ∅-generated core.
pub fn check_jep(k: &AgeSpec, bound: EnumBound) -> PropertyReport {
    let members = k.enumerate(bound);
    for a in &members {
        for b in &members {
            if joint_embed(k, a, b).is_none() {
                return PropertyReport::fail(
                    "jep",
                    format!("{}", bound.generators),
                    Counterexample::Jep { a: a.clone(), b: b.clone() },
                    "pair admits no joint embedding".into(),
                );
            }
        }
    }
    PropertyReport::pass(
        "jep",
        format!("{}", bound.generators),
        format!("{} pairs checked", members.len() * members.len()),
    )
}

/// All normalized spans B ⊇ A ⊆ C with legs from `enumerate(bound)` and A a
/// generated substructure of B, embedded into C in every way (capped).
pub fn spans(k: &AgeSpec, bound: EnumBound, emb_cap: usize) -> Vec<AmalgamProblem> {
    let members = k.enumerate(bound);
    let mut out = Vec::new();
    for b in &members {
        for a_set in term_closed_subsets(b, bound.generators) {
            let a = b.restrict(&a_set);
            for c in &members {
                for g in find_embeddings(&a, c, emb_cap) {
                    if let Ok(p) = AmalgamProblem::normalize(&a, b, c, &Embedding::identity(&a), &g)
                    {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Strong amalgamation: every bounded span has a disjoint amalgam in k.
pub fn check_sap(k: &AgeSpec, bound: EnumBound) -> PropertyReport {
    let spans = spans(k, bound, 16);
    let n = spans.len();
    for prob in spans {
        if find_amalgam(k, &prob).is_none() {
            return PropertyReport::fail(
                "sap",
                format!("{}", bound.generators),
                Counterexample::Sap { prob },
                "span admits no disjoint amalgam".into(),
            );
        }
    }
    PropertyReport::pass("sap", format!("{}", bound.generators), format!("{n} spans checked"))
}

/// Extended strong amalgamation over the core: every candidate prescribed
/// core amalgam of every bounded span can be decorated into the class.
pub fn check_extended_sap(k: &AgeSpec, bound: EnumBound) -> PropertyReport {
    let spans = spans(k, bound, 16);
    let mut checked = 0usize;
    for prob in spans {
        for dbot in k.close_union(&prob) {
            if let Some(bot) = &k.bot {
                if !bot.is_member(&dbot) {
                    continue;
                }
            }
            checked += 1;
            let ok = extended_over(k, &prob, &dbot, 1, None).map_or(false, |v| !v.is_empty());
            if !ok {
                return PropertyReport::fail(
                    "esap",
                    format!("{}", bound.generators),
                    Counterexample::Esap { prob, dbot },
                    "prescribed core amalgam admits no decoration".into(),
                );
            }
        }
    }
    PropertyReport::pass(
        "esap",
        format!("{}", bound.generators),
        format!("{checked} prescribed amalgams decorated"),
    )
}

/// Finite shadow of closure under unions: grow chains by one-step
/// extensions that keep the universal constraints, then ask full
/// membership of the union (= the top of the chain).
pub fn check_chain_union(k: &AgeSpec, size: usize, len: usize) -> PropertyReport {
    let starts = k.enumerate(EnumBound::gens(1));
    let mut chains = 0usize;
    for start in starts {
        let mut chain = vec![start];
        for _ in 0..len {
            let cur = chain.last().expect("nonempty");
            let next = (k.extend_one)(cur)
                .into_iter()
                .find(|t| t.size() <= size && k.universal_ok(t) && cur.is_substructure_of(t));
            match next {
                Some(t) => chain.push(t),
                None => break,
            }
        }
        chains += 1;
        let union = chain.last().expect("nonempty");
        if !k.is_member(union) {
            return PropertyReport::fail(
                "chain-union",
                format!("size {size}, len {len}"),
                Counterexample::ChainUnion { chain },
                "union of extension chain left the class".into(),
            );
        }
    }
    PropertyReport::pass("chain-union", format!("size {size}, len {len}"), format!("{chains} chains grown"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::{brute_force_enumerate, fresh_point_extensions, plain_union_close};
    use crate::model::Signature;
    use std::sync::Arc;

    fn undirected(s: &FinStructure) -> bool {
        s.rel(0).iter().all(|t| t[0] != t[1] && s.holds(0, &[t[1], t[0]]))
    }

    fn graph_age(member_extra: impl Fn(&FinStructure) -> bool + Send + Sync + 'static) -> AgeSpec {
        let sig: Arc<Signature> = Arc::new(
            Signature::new(vec!["v".into()], vec![("E".into(), vec!["v".into(), "v".into()])], vec![])
                .unwrap(),
        );
        let member = move |s: &FinStructure| undirected(s) && member_extra(s);
        let enum_sig = sig.clone();
        let enum_member = Box::new(member) as Box<dyn Fn(&FinStructure) -> bool + Send + Sync>;
        let member_for_enum: Arc<dyn Fn(&FinStructure) -> bool + Send + Sync> = Arc::from(enum_member);
        let m2 = member_for_enum.clone();
        AgeSpec {
            name: "test-graphs".into(),
            sig,
            bot: None,
            member: Box::new(move |s| member_for_enum(s)),
            universal_ok: Box::new(undirected),
            enumerate: Box::new(move |b| {
                brute_force_enumerate(
                    &enum_sig,
                    &*m2,
                    &undirected,
                    &|_, t| vec![t.to_vec(), vec![t[1], t[0]]],
                    b,
                )
            }),
            close_union: Box::new(plain_union_close),
            tuple_orbit: Box::new(|_, t| vec![t.to_vec(), vec![t[1], t[0]]]),
            extend_one: Box::new(fresh_point_extensions),
            dense_first: false,
        }
    }

    #[test]
    fn graphs_pass_hp_jep_sap() {
        let k = graph_age(|_| true);
        assert!(check_hp(&k, EnumBound::gens(3)).pass);
        assert!(check_jep(&k, EnumBound::gens(2)).pass);
        assert!(check_sap(&k, EnumBound::gens(2)).pass);
        assert!(check_extended_sap(&k, EnumBound::gens(2)).pass);
        assert!(check_chain_union(&k, 5, 4).pass);
    }

    #[test]
    fn min_two_vertices_fails_hp_with_replay() {
        let k = graph_age(|s| s.size() != 1);
        let rep = check_hp(&k, EnumBound::gens(2));
        assert!(!rep.pass);
        let cex = rep.counterexample.expect("counterexample");
        assert!(cex.replays(&k));
    }

    #[test]
    fn cliques_or_edgeless_fails_jep() {
        // Members: complete graphs, or edgeless graphs with ≥ 2 vertices.
        let k = graph_age(|s| {
            let n = s.size();
            let complete = s.rel(0).len() == n * n.saturating_sub(1);
            let edgeless = s.rel(0).is_empty();
            complete || (edgeless && n >= 2)
        });
        let rep = check_jep(&k, EnumBound::gens(3));
        assert!(!rep.pass);
        assert!(rep.counterexample.expect("cex").replays(&k));
    }

    #[test]
    fn size_cap_fails_chain_union() {
        let k = graph_age(|s| s.size() <= 3);
        let rep = check_chain_union(&k, 5, 4);
        assert!(!rep.pass);
        let cex = rep.counterexample.expect("cex");
        assert!(cex.replays(&k));
        match cex {
            Counterexample::ChainUnion { chain } => assert_eq!(chain.last().unwrap().size(), 4),
            _ => panic!("wrong counterexample kind"),
        }
    }

    #[test]
    fn forbidden_decoration_fails_extended_sap() {
        // Graphs that must NOT contain a 3-vertex path spanning both legs:
        // membership forbids any vertex of degree ≥ 2, so the span
        // edge(a,b) ← a → edge(a,c) admits no decoration of its union.
        let k = graph_age(|s| {
            s.elems().all(|v| s.rel(0).iter().filter(|t| t[0] == v).count() <= 1)
        });
        let rep = check_extended_sap(&k, EnumBound::gens(2));
        assert!(!rep.pass);
        assert!(rep.counterexample.expect("cex").replays(&k));
    }
}
