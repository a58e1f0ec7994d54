//! Finite-stage construction of generics: grow a core structure fairly,
//! run an increasing condition chain that meets the two dense requirement
//! families (realize every small member; extend every small embedding), and
//! verify the limit axioms on the output up to a bound.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::age::{AgeSpec, EnumBound};
use crate::amalgam::{extended_amalgams, AmalgamProblem};
use crate::error::Error;
use crate::framework::{hooks, term_closed_subsets, Counterexample, PropertyReport};
use crate::model::{find_embeddings, ElemId, Embedding, EmbeddingSearch, FinStructure, SortId};

/// A member of the condition poset: a class structure whose core reduct
/// lives inside the base at the recorded stage.
#[derive(Debug, Clone)]
pub struct Condition {
    pub structure: FinStructure,
    pub stage: usize,
}

/// Tuning knobs for the builders.
pub struct BuilderOptions {
    /// Requirement pairs A ⊆ B are drawn from `enumerate` at this bound.
    pub bound: EnumBound,
    /// Embeddings of each A into the current stage enumerated per refill.
    pub emb_cap: usize,
    /// Optional initial condition (must be a member); defaults to the
    /// smallest enumerated member.
    pub initial: Option<FinStructure>,
    /// Hard caps on carrier sizes per sort; requirements that would push a
    /// capped sort over its limit fail softly and are recorded as such.
    pub sort_caps: BTreeMap<SortId, usize>,
}

impl Default for BuilderOptions {
    fn default() -> BuilderOptions {
        BuilderOptions {
            bound: EnumBound::gens(2),
            emb_cap: 16,
            initial: None,
            sort_caps: BTreeMap::new(),
        }
    }
}

/// How a scheduled requirement ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReqOutcome {
    /// Realized by extending the chain at this stage.
    Extended { stage: usize },
    /// An extension already existed when the requirement was popped.
    AlreadyMet,
    /// Could not be realized (no amalgam in budget, or a sort cap).
    Failed { reason: String },
}

/// One processed requirement: extend `emb : pairs[pair].0 → current` to an
/// embedding of `pairs[pair].1`.
#[derive(Debug, Clone)]
pub struct ReqRecord {
    pub pair: usize,
    pub emb: Embedding,
    pub outcome: ReqOutcome,
}

#[derive(Debug, Default)]
pub struct BuildCert {
    pub outcomes: Vec<ReqRecord>,
    pub steps_done: usize,
    /// True when the queue drained with every enqueued requirement met.
    pub saturated: bool,
}

impl BuildCert {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|r| matches!(r.outcome, ReqOutcome::Failed { .. })).count()
    }
}

/// The age the condition chain decorates over: the declared core when there
/// is one, the bare-carrier class for relational signatures, the class
/// itself otherwise (then the chain is the base and decoration is trivial).
pub fn core_age(k: &Arc<AgeSpec>) -> Arc<AgeSpec> {
    if let Some(b) = &k.bot {
        return b.clone();
    }
    if k.sig.is_relational() {
        Arc::new(bare_sets_age(k.sig.sorts().to_vec()))
    } else {
        k.clone()
    }
}

/// The class of plain (multi-sorted) finite sets over the given sorts.
pub fn bare_sets_age(sorts: Vec<String>) -> AgeSpec {
    let sig = Arc::new(crate::model::Signature::new(sorts, vec![], vec![]).unwrap());
    let enum_sig = sig.clone();
    AgeSpec {
        name: "bare-carrier".into(),
        sig,
        bot: None,
        member: Box::new(|_| true),
        universal_ok: Box::new(|_| true),
        enumerate: Box::new(move |b| {
            crate::age::brute_force_enumerate(
                &enum_sig,
                &|_| true,
                &|_| true,
                &|_, t| vec![t.to_vec()],
                b,
            )
        }),
        close_union: Box::new(crate::age::plain_union_close),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: Box::new(crate::age::fresh_point_extensions),
        dense_first: false,
    }
}

/// All pairs (A, B) with B enumerated at the bound and A a proper generated
/// substructure, stored literally (A ⊆ B).
pub fn requirement_pairs(k: &AgeSpec, bound: EnumBound) -> Vec<(FinStructure, FinStructure)> {
    let mut out = Vec::new();
    for b in k.enumerate(bound) {
        for a_set in term_closed_subsets(&b, bound.generators) {
            if a_set == b.elem_set() {
                continue;
            }
            out.push((b.restrict(&a_set), b.clone()));
        }
    }
    out
}

/// Does `partial` (an embedding of a substructure of `b` into `host`)
/// extend to an embedding of all of `b`?
pub fn extension_exists(b: &FinStructure, host: &FinStructure, partial: &Embedding) -> bool {
    EmbeddingSearch::new(b, host)
        .fixing(partial.map.clone())
        .limit(1)
        .run()
        .map_or(false, |v| !v.is_empty())
}

/// Amalgamates a literal span inside the class, decorating over `core`'s
/// prescribed amalgams; the result contains `prob.c` literally. The seed
/// randomizes the decoration search order (the builder's generic choice).
fn condition_amalgam(
    k: &AgeSpec,
    core: &AgeSpec,
    prob: &AmalgamProblem,
    seed: u64,
) -> Option<FinStructure> {
    let bsig = &core.sig;
    let b = prob.b.reduct(bsig).ok()?;
    let c = prob.c.reduct(bsig).ok()?;
    let a = prob.a.reduct(bsig).ok()?;
    for dbot in (core.close_union)(&b, &c, &a) {
        if !core.is_member(&dbot) {
            continue;
        }
        if let Ok(mut v) = extended_amalgams(&k.sig, bsig, prob, &dbot, &hooks(k), 1, Some(seed)) {
            if let Some(d) = v.pop() {
                return Some(d);
            }
        }
    }
    None
}

/// Renames B so that A lands on its image under `emb` and the rest gets
/// fresh ids above `floor`, then forms the literal span over `host`.
fn literal_span(
    a: &FinStructure,
    b: &FinStructure,
    emb: &Embedding,
    host: &FinStructure,
    floor: u32,
) -> Result<AmalgamProblem, Error> {
    let mut next = floor;
    let mut map = BTreeMap::new();
    for e in b.elems() {
        let img = emb.map.get(&e).copied().unwrap_or_else(|| {
            let v = ElemId::new(e.sort, next);
            next += 1;
            v
        });
        map.insert(e, img);
    }
    AmalgamProblem::literal(a.rename(&emb.map), b.rename(&map), host.clone())
}

fn violates_caps(s: &FinStructure, caps: &BTreeMap<SortId, usize>) -> bool {
    caps.iter().any(|(&sort, &cap)| s.carrier(sort).len() > cap)
}

fn smallest_member(k: &AgeSpec, bound: EnumBound) -> Result<FinStructure, Error> {
    k.enumerate(bound)
        .into_iter()
        .min_by_key(|s| s.size())
        .ok_or_else(|| Error::Builder("class has no members at the working bound".into()))
}

/// A fair grower for a core structure: round-robins over the (A ⊆ B,
/// embedding) requirements and realizes each popped one by a disjoint
/// amalgam, so the structure keeps growing.
pub struct GrowableBase {
    pub kbot: Arc<AgeSpec>,
    pub current: FinStructure,
    pub log: Vec<FinStructure>,
    pub pairs: Vec<(FinStructure, FinStructure)>,
    pub met: Vec<ReqRecord>,
    emb_cap: usize,
    queue: VecDeque<(usize, Embedding)>,
    seen: BTreeSet<(usize, Vec<(ElemId, ElemId)>)>,
    rng: ChaCha8Rng,
}

impl GrowableBase {
    pub fn new(
        kbot: Arc<AgeSpec>,
        bound: EnumBound,
        seed: u64,
        initial: Option<FinStructure>,
    ) -> Result<GrowableBase, Error> {
        let current = match initial {
            Some(s) => {
                if !kbot.is_member(&s) {
                    return Err(Error::Builder("initial base is not a member".into()));
                }
                s
            }
            None => smallest_member(&kbot, bound)?,
        };
        let pairs = requirement_pairs(&kbot, bound);
        Ok(GrowableBase {
            kbot,
            log: vec![current.clone()],
            current,
            pairs,
            met: Vec::new(),
            emb_cap: 16,
            queue: VecDeque::new(),
            seen: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn emb_cap(mut self, cap: usize) -> GrowableBase {
        self.emb_cap = cap;
        self
    }

    fn refill(&mut self) {
        for i in 0..self.pairs.len() {
            let embs = find_embeddings(&self.pairs[i].0, &self.current, self.emb_cap);
            for e in embs {
                let key = (i, e.map.iter().map(|(&x, &y)| (x, y)).collect::<Vec<_>>());
                if self.seen.insert(key) {
                    self.queue.push_back((i, e));
                }
            }
        }
    }

    /// Performs `steps` extension moves; errors if a scheduled requirement
    /// cannot be realized (a class whose bounded properties fell short).
    /// Requirements are recycled round-robin: realizing one re-enqueues it,
    /// so each amalgam move keeps adding fresh disjoint copies fairly.
    pub fn grow(&mut self, steps: usize) -> Result<(), Error> {
        for _ in 0..steps {
            self.refill();
            let Some((i, emb)) = self.queue.pop_front() else {
                return Err(Error::Builder("requirement queue drained; nothing left to realize".into()));
            };
            let (a, b) = &self.pairs[i];
            let floor = self.current.max_raw_id().max(b.max_raw_id()).saturating_add(1);
            let prob = literal_span(a, b, &emb, &self.current, floor)?;
            let seed = self.rng.gen();
            let d = condition_amalgam(&self.kbot, &self.kbot, &prob, seed).ok_or_else(|| {
                Error::Builder(format!(
                    "extension oracle failed on requirement pair {i} at stage {}",
                    self.log.len()
                ))
            })?;
            debug_assert!(self.current.is_substructure_of(&d));
            self.current = d;
            self.log.push(self.current.clone());
            self.met.push(ReqRecord {
                pair: i,
                emb: emb.clone(),
                outcome: ReqOutcome::Extended { stage: self.log.len() - 1 },
            });
            self.queue.push_back((i, emb));
        }
        Ok(())
    }
}

/// Output of `build_generic`: the structure G (top of the chain), the full
/// condition chain, the final base with its stage log, and the certificate.
pub struct GenericBuild {
    pub g: FinStructure,
    pub chain: Vec<FinStructure>,
    pub base: FinStructure,
    pub base_log: Vec<FinStructure>,
    pub pairs: Vec<(FinStructure, FinStructure)>,
    pub cert: BuildCert,
}

impl GenericBuild {
    pub fn conditions(&self) -> Vec<Condition> {
        self.chain
            .iter()
            .enumerate()
            .map(|(stage, s)| Condition { structure: s.clone(), stage })
            .collect()
    }
}

/// Runs the condition chain: repeatedly pops the oldest unmet requirement,
/// extends the current condition inside the class (growing the base first
/// when the new core elements need room), and returns the union of the
/// chain — its top — with the met-requirement certificate. Requirements
/// that cannot be realized (no amalgam, sort cap) fail softly and are
/// recorded; the rest of the schedule continues.
pub fn build_generic(
    k: &Arc<AgeSpec>,
    opts: &BuilderOptions,
    steps: usize,
    seed: u64,
) -> Result<GenericBuild, Error> {
    let core = core_age(k);
    let bsig = core.sig.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = match &opts.initial {
        Some(s) => {
            if !k.is_member(s) {
                return Err(Error::Builder("initial condition is not a member".into()));
            }
            s.clone()
        }
        None => smallest_member(k, opts.bound)?,
    };
    let mut base = init.reduct(&bsig)?;
    if !core.is_member(&base) {
        return Err(Error::Builder("initial core reduct is not a core member".into()));
    }
    let mut base_log = vec![base.clone()];
    let mut cond = init;
    let mut chain = vec![cond.clone()];
    let pairs = requirement_pairs(k, opts.bound);
    let mut queue: VecDeque<(usize, Embedding)> = VecDeque::new();
    let mut seen: BTreeSet<(usize, Vec<(ElemId, ElemId)>)> = BTreeSet::new();
    let mut cert = BuildCert::default();
    while cert.steps_done < steps {
        if queue.is_empty() {
            for (i, (a, _)) in pairs.iter().enumerate() {
                for e in find_embeddings(a, &cond, opts.emb_cap) {
                    let key = (i, e.map.iter().map(|(&x, &y)| (x, y)).collect::<Vec<_>>());
                    if seen.insert(key) {
                        queue.push_back((i, e));
                    }
                }
            }
        }
        let Some((i, emb)) = queue.pop_front() else {
            cert.saturated = true;
            break;
        };
        let (a, b) = &pairs[i];
        if extension_exists(b, &cond, &emb) {
            cert.outcomes.push(ReqRecord { pair: i, emb, outcome: ReqOutcome::AlreadyMet });
            continue;
        }
        let fail = |cert: &mut BuildCert, emb: Embedding, reason: &str| {
            cert.outcomes.push(ReqRecord {
                pair: i,
                emb,
                outcome: ReqOutcome::Failed { reason: reason.into() },
            });
        };
        let floor = cond
            .max_raw_id()
            .max(base.max_raw_id())
            .max(b.max_raw_id())
            .saturating_add(1);
        let Ok(prob) = literal_span(a, b, &emb, &cond, floor) else {
            fail(&mut cert, emb, "span normalization failed");
            continue;
        };
        let Some(d) = condition_amalgam(k, &core, &prob, rng.gen()) else {
            fail(&mut cert, emb, "no amalgam within budget");
            continue;
        };
        if violates_caps(&d, &opts.sort_caps) {
            fail(&mut cert, emb, "sort cap reached");
            continue;
        }
        let d_red = d.reduct(&bsig)?;
        let new_base = if d_red.is_substructure_of(&base) {
            None
        } else {
            let cond_red = cond.reduct(&bsig)?;
            let Ok(prob2) = AmalgamProblem::literal(cond_red, d_red, base.clone()) else {
                fail(&mut cert, emb, "base span normalization failed");
                continue;
            };
            let Some(nb) = condition_amalgam(&core, &core, &prob2, rng.gen()) else {
                fail(&mut cert, emb, "base growth failed");
                continue;
            };
            if violates_caps(&nb, &opts.sort_caps) {
                fail(&mut cert, emb, "sort cap reached in base");
                continue;
            }
            Some(nb)
        };
        if let Some(nb) = new_base {
            base = nb;
            base_log.push(base.clone());
        }
        cond = d;
        chain.push(cond.clone());
        cert.steps_done += 1;
        cert.outcomes.push(ReqRecord {
            pair: i,
            emb,
            outcome: ReqOutcome::Extended { stage: chain.len() - 1 },
        });
    }
    Ok(GenericBuild { g: cond, chain, base, base_log, pairs, cert })
}

/// Bounded limit axioms: (a) every enumerated member embeds into `g`;
/// (b) every embedding of a generated substructure A of a member B extends
/// to an embedding of B. The verdict carries the first failing instance.
pub fn verify_fr_axioms(g: &FinStructure, k: &AgeSpec, bound: EnumBound) -> PropertyReport {
    let mut checked = 0usize;
    for m in k.enumerate(bound) {
        checked += 1;
        if !crate::model::embeds(&m, g) {
            return PropertyReport::fail(
                "fr-axioms",
                format!("{}", bound.generators),
                Counterexample::FrClauseA { g: g.clone(), member: m },
                "clause (a): member does not embed".into(),
            );
        }
    }
    for (a, b) in requirement_pairs(k, bound) {
        for e in find_embeddings(&a, g, usize::MAX) {
            checked += 1;
            if !extension_exists(&b, g, &e) {
                return PropertyReport::fail(
                    "fr-axioms",
                    format!("{}", bound.generators),
                    Counterexample::FrClauseB { g: g.clone(), a, b, emb: e },
                    "clause (b): embedding does not extend".into(),
                );
            }
        }
    }
    PropertyReport::pass(
        "fr-axioms",
        format!("{}", bound.generators),
        format!("{checked} instances checked"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn bare_sets_grow_by_fresh_points() {
        let k = Arc::new(bare_sets_age(vec!["v".into()]));
        let mut g = GrowableBase::new(k, EnumBound::gens(2), 7, None).unwrap();
        g.grow(10).unwrap();
        assert!(g.current.size() >= 10);
        // Monotone log.
        assert!(g.log.windows(2).all(|w| w[0].is_substructure_of(&w[1])));
    }

    #[test]
    fn tree_base_gives_every_node_a_successor() {
        let k = Arc::new(catalog::tree::make_tree_age(false));
        let mut g = GrowableBase::new(k, EnumBound::gens(3), 3, None).unwrap().emb_cap(64);
        g.grow(150).unwrap();
        // Every node of an early stage within reach of the bound (depth ≤
        // generators − 2, since the requirement chain must contain the whole
        // parent path) has a child by the final stage.
        let early = &g.log[5];
        let last = &g.current;
        let root = early.apply(1, &[]).unwrap();
        for v in early.elems() {
            let depth_le_1 = v == root || early.apply(0, &[v]) == Some(root);
            if !depth_le_1 {
                continue;
            }
            assert!(
                last.elems().any(|w| w != v && last.apply(0, &[w]) == Some(v)),
                "node {v:?} of stage 5 never gained a successor"
            );
        }
    }

    #[test]
    fn vector_space_base_reaches_dimension_three() {
        let k = Arc::new(catalog::vectorspace::make_vector_space_age(2, false).unwrap());
        let mut g = GrowableBase::new(k, EnumBound::gens(1), 11, None).unwrap();
        g.grow(4).unwrap();
        let coords = catalog::vectorspace::coordinatize(2, &g.current).expect("member");
        assert!(coords.dim() >= 3, "dimension {} after growth", coords.dim());
    }

    #[test]
    fn zero_steps_returns_initial_condition() {
        let entry = catalog::entry("graphs").unwrap();
        let built = build_generic(&entry.age, &BuilderOptions::default(), 0, 1).unwrap();
        assert_eq!(built.chain.len(), 1);
        assert!(built.cert.outcomes.is_empty());
    }

    #[test]
    fn graph_generic_is_reproducible_and_coherent() {
        let entry = catalog::entry("graphs").unwrap();
        let opts = BuilderOptions::default();
        let b1 = build_generic(&entry.age, &opts, 25, 42).unwrap();
        let b2 = build_generic(&entry.age, &opts, 25, 42).unwrap();
        assert_eq!(format!("{:?}", b1.g.elem_set()), format!("{:?}", b2.g.elem_set()));
        assert_eq!(b1.g.rel(0), b2.g.rel(0));
        // Chain monotone, members throughout, reduct inside the base.
        assert!(b1.chain.windows(2).all(|w| w[0].is_substructure_of(&w[1])));
        assert!(b1.chain.iter().all(|c| entry.age.is_member(c)));
        let red = b1.g.reduct(&core_age(&entry.age).sig).unwrap();
        assert!(red.is_substructure_of(&b1.base));
        // Union of the chain is its top, hence a condition.
        assert!(entry.age.is_member(b1.chain.last().unwrap()));
    }

    #[test]
    fn triangle_fails_clause_b() {
        let entry = catalog::entry("graphs").unwrap();
        let sig = entry.age.sig.clone();
        let mut tri = FinStructure::empty(sig);
        for i in 0..3u32 {
            tri.add_elem(ElemId::new(0, i));
        }
        for i in 0..3u32 {
            for j in 0..3u32 {
                if i != j {
                    tri.add_rel(0, vec![ElemId::new(0, i), ElemId::new(0, j)]);
                }
            }
        }
        let rep = verify_fr_axioms(&tri, &entry.age, EnumBound::gens(2));
        assert!(!rep.pass);
        assert!(rep.counterexample.unwrap().replays(&entry.age));
    }

    #[test]
    fn empty_structure_fails_clause_a() {
        let entry = catalog::entry("graphs").unwrap();
        let empty = FinStructure::empty(entry.age.sig.clone());
        let rep = verify_fr_axioms(&empty, &entry.age, EnumBound::gens(1));
        assert!(!rep.pass);
    }

    #[test]
    fn graph_generic_approaches_the_limit() {
        let entry = catalog::entry("graphs").unwrap();
        let built = build_generic(&entry.age, &BuilderOptions::default(), 80, 9).unwrap();
        assert!(verify_fr_axioms(&built.g, &entry.age, EnumBound::gens(2)).pass);
    }
}
