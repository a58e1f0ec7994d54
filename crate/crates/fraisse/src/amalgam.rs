//! Amalgamation diagrams and the extended decoration search: given a
//! prescribed amalgam of the function-symbol reducts, enumerate the ways
//! to decorate it with the remaining relations so that the result lands
//! back in the class.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{ElemId, Embedding, FinStructure, RelId, Signature};

/// A span B ←- A -→ C put in disjointness normal form: `a` is a literal
/// substructure of both `b` and `c`, and the carriers of `b` and `c` meet
/// exactly in the carrier of `a`.
#[derive(Debug, Clone)]
pub struct AmalgamProblem {
    pub a: FinStructure,
    pub b: FinStructure,
    pub c: FinStructure,
}

impl AmalgamProblem {
    /// Renames `b` and `c` so the span becomes literal and disjoint:
    /// `a`'s elements keep their ids in both, everything else gets a fresh id.
    pub fn normalize(
        a: &FinStructure,
        b: &FinStructure,
        c: &FinStructure,
        f: &Embedding,
        g: &Embedding,
    ) -> Result<AmalgamProblem, Error> {
        if !crate::model::is_embedding(a, b, f) || !crate::model::is_embedding(a, c, g) {
            return Err(Error::Amalgam("span legs are not embeddings".into()));
        }
        let mut next = a.max_raw_id().checked_add(1).unwrap_or(0);
        let mut fresh = |e: ElemId| {
            let out = ElemId::new(e.sort, next);
            next += 1;
            out
        };
        // b: f(x) ↦ x for x in a, fresh otherwise.
        let inv_f: BTreeMap<ElemId, ElemId> = f.map.iter().map(|(&x, &y)| (y, x)).collect();
        let mut bmap = BTreeMap::new();
        for e in b.elems() {
            let img = inv_f.get(&e).copied().unwrap_or_else(|| fresh(e));
            bmap.insert(e, img);
        }
        let inv_g: BTreeMap<ElemId, ElemId> = g.map.iter().map(|(&x, &y)| (y, x)).collect();
        let mut cmap = BTreeMap::new();
        for e in c.elems() {
            let img = inv_g.get(&e).copied().unwrap_or_else(|| fresh(e));
            cmap.insert(e, img);
        }
        let prob =
            AmalgamProblem { a: a.clone(), b: b.rename(&bmap), c: c.rename(&cmap) };
        prob.check()?;
        Ok(prob)
    }

    /// Accepts an already-literal span, verifying normal form.
    pub fn literal(a: FinStructure, b: FinStructure, c: FinStructure) -> Result<AmalgamProblem, Error> {
        let prob = AmalgamProblem { a, b, c };
        prob.check()?;
        Ok(prob)
    }

    fn check(&self) -> Result<(), Error> {
        if !self.a.is_substructure_of(&self.b) || !self.a.is_substructure_of(&self.c) {
            return Err(Error::Amalgam("base is not a literal substructure of both legs".into()));
        }
        let inter: BTreeSet<ElemId> =
            self.b.elem_set().intersection(&self.c.elem_set()).copied().collect();
        if inter != self.a.elem_set() {
            return Err(Error::Amalgam("leg carriers meet outside the base".into()));
        }
        Ok(())
    }
}

/// Union of the legs with no extra relations. Fails if the function tables
/// conflict or the union is not total (a cross-leg argument tuple has no
/// value anywhere — only possible outside purely relational signatures).
pub fn free_amalgam(prob: &AmalgamProblem) -> Result<FinStructure, Error> {
    let d = prob
        .b
        .union(&prob.c)
        .ok_or_else(|| Error::Amalgam("function tables of the legs conflict".into()))?;
    if !d.validate().is_empty() {
        return Err(Error::Amalgam(
            "free amalgam is not total: cross-leg function values are undefined".into(),
        ));
    }
    Ok(d)
}

/// Relations of the full signature that are absent from the base signature;
/// these are the decoration symbols of the extended search.
pub fn decoration_rels(full: &Arc<Signature>, bot: &Arc<Signature>) -> Result<Vec<RelId>, Error> {
    let emb = bot
        .embedding_into(full)
        .ok_or_else(|| Error::Amalgam("base signature is not a subsignature".into()))?;
    if bot.funcs().len() != full.funcs().len() {
        return Err(Error::Amalgam("base signature must carry all function symbols".into()));
    }
    let covered: BTreeSet<RelId> = emb.rel_map.iter().copied().collect();
    Ok((0..full.rels().len()).filter(|r| !covered.contains(r)).collect())
}

/// Hooks the decoration search needs from the ambient class.
pub struct DecorationHooks<'h> {
    /// Cheap necessary condition, monotone under removing true tuples; used
    /// to prune partial decorations.
    pub universal_ok: &'h dyn Fn(&FinStructure) -> bool,
    /// Full membership test, applied at leaves only.
    pub member: &'h dyn Fn(&FinStructure) -> bool,
    /// Orbit of a tuple under the symmetries the class imposes on a single
    /// relation (e.g. all permutations for a symmetric hypergraph). Must
    /// contain the tuple itself.
    pub tuple_orbit: &'h dyn Fn(RelId, &[ElemId]) -> Vec<Vec<ElemId>>,
    /// Try true before false on each orbit (for classes whose members are
    /// densely decorated); such searches ignore seeded value shuffling.
    pub dense_first: bool,
}

/// The lifted, partially-decorated amalgam together with its undecided
/// ("free") tuple orbits: everything the decoration search branches on.
pub struct DecorationProblem {
    /// dbot lifted to the full signature, with leg-internal decoration
    /// tuples already copied from the legs.
    pub base: FinStructure,
    pub orbits: Vec<(RelId, Vec<Vec<ElemId>>)>,
}

/// Builds the decoration problem for a normalized span over a prescribed
/// core amalgam. Tuples lying inside one leg are copied from it; the rest
/// are grouped into orbits.
pub fn decoration_problem(
    full: &Arc<Signature>,
    bot: &Arc<Signature>,
    prob: &AmalgamProblem,
    dbot: &FinStructure,
    tuple_orbit: &dyn Fn(RelId, &[ElemId]) -> Vec<Vec<ElemId>>,
) -> Result<DecorationProblem, Error> {
    let deco = decoration_rels(full, bot)?;
    if prob.b.sig != *full || dbot.sig != *bot {
        return Err(Error::Amalgam("signature mismatch in extended problem".into()));
    }
    for leg in [&prob.b, &prob.c] {
        if !leg.reduct(bot)?.is_substructure_of(dbot) {
            return Err(Error::Amalgam("prescribed amalgam does not extend a leg's reduct".into()));
        }
    }
    let emb = bot.embedding_into(full).expect("checked by decoration_rels");
    let mut d = FinStructure::empty(full.clone());
    for e in dbot.elems() {
        d.add_elem(e);
    }
    for (fi, _) in bot.funcs().iter().enumerate() {
        for (args, &v) in dbot.func(fi) {
            d.set_func(emb.func_map[fi], args.clone(), v);
        }
    }
    for (ri, _) in bot.rels().iter().enumerate() {
        for t in dbot.rel(ri) {
            d.add_rel(emb.rel_map[ri], t.clone());
        }
    }
    let bset = prob.b.elem_set();
    let cset = prob.c.elem_set();
    let mut orbits: Vec<(RelId, Vec<Vec<ElemId>>)> = Vec::new();
    let mut claimed: BTreeSet<(RelId, Vec<ElemId>)> = BTreeSet::new();
    for &r in &deco {
        for t in d.tuples_over(&full.rels()[r].arity) {
            if t.iter().all(|e| bset.contains(e)) {
                if prob.b.holds(r, &t) {
                    d.add_rel(r, t);
                }
            } else if t.iter().all(|e| cset.contains(e)) {
                if prob.c.holds(r, &t) {
                    d.add_rel(r, t);
                }
            } else if claimed.insert((r, t.clone())) {
                let orbit = tuple_orbit(r, &t);
                for o in &orbit {
                    claimed.insert((r, o.clone()));
                }
                orbits.push((r, orbit));
            }
        }
    }
    Ok(DecorationProblem { base: d, orbits })
}

/// Depth-first decoration of the free orbits, sparser assignments first
/// (seeded: per-orbit value order shuffled deterministically instead).
pub fn solve_decorations(
    problem: &DecorationProblem,
    hooks: &DecorationHooks,
    limit: usize,
    seed: Option<u64>,
) -> Vec<FinStructure> {
    let mut d = problem.base.clone();
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = Vec::new();
    search_decorations(&mut d, &problem.orbits, 0, hooks, limit, &mut rng, &mut out);
    out
}

/// Extended amalgamation: decorate the prescribed base-language amalgam
/// `dbot` with the relations of `full` so that both legs sit inside the
/// result and the result satisfies `member`.
pub fn extended_amalgams(
    full: &Arc<Signature>,
    bot: &Arc<Signature>,
    prob: &AmalgamProblem,
    dbot: &FinStructure,
    hooks: &DecorationHooks,
    limit: usize,
    seed: Option<u64>,
) -> Result<Vec<FinStructure>, Error> {
    let problem = decoration_problem(full, bot, prob, dbot, hooks.tuple_orbit)?;
    Ok(solve_decorations(&problem, hooks, limit, seed))
}

fn search_decorations(
    d: &mut FinStructure,
    orbits: &[(RelId, Vec<Vec<ElemId>>)],
    i: usize,
    hooks: &DecorationHooks,
    limit: usize,
    rng: &mut Option<ChaCha8Rng>,
    out: &mut Vec<FinStructure>,
) {
    if out.len() >= limit {
        return;
    }
    if !(hooks.universal_ok)(d) {
        return;
    }
    if i == orbits.len() {
        if (hooks.member)(d) {
            out.push(d.clone());
        }
        return;
    }
    let mut values = if hooks.dense_first { [true, false] } else { [false, true] };
    if !hooks.dense_first {
        if let Some(rng) = rng {
            values.shuffle(rng);
        }
    }
    let (r, orbit) = &orbits[i];
    for v in values {
        if v {
            for t in orbit {
                d.add_rel(*r, t.clone());
            }
        }
        search_decorations(d, orbits, i + 1, hooks, limit, rng, out);
        if v {
            for t in orbit {
                d.remove_rel(*r, t);
            }
        }
        if out.len() >= limit {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::signature::Signature;

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    fn graph_sig() -> Arc<Signature> {
        Arc::new(
            Signature::new(vec!["v".into()], vec![("E".into(), vec!["v".into(), "v".into()])], vec![])
                .unwrap(),
        )
    }

    fn graph(sig: &Arc<Signature>, verts: &[u32], edges: &[(u32, u32)]) -> FinStructure {
        let mut g = FinStructure::empty(sig.clone());
        for &i in verts {
            g.add_elem(v(i));
        }
        for &(x, y) in edges {
            g.add_rel(0, vec![v(x), v(y)]);
            g.add_rel(0, vec![v(y), v(x)]);
        }
        g
    }

    #[test]
    fn normalize_renames_overlap() {
        let sig = graph_sig();
        let a = graph(&sig, &[0], &[]);
        let b = graph(&sig, &[0, 1], &[(0, 1)]);
        let c = graph(&sig, &[0, 1], &[]);
        let f = Embedding { map: [(v(0), v(0))].into() };
        let prob = AmalgamProblem::normalize(&a, &b, &c, &f, &f).unwrap();
        assert_eq!(prob.b.size(), 2);
        assert_eq!(prob.c.size(), 2);
        let inter: Vec<_> = prob.b.elem_set().intersection(&prob.c.elem_set()).copied().collect();
        assert_eq!(inter, vec![v(0)]);
        let d = free_amalgam(&prob).unwrap();
        assert_eq!(d.size(), 3);
        assert_eq!(d.rel(0).len(), 2);
    }

    #[test]
    fn extended_search_over_graphs_counts_decorations() {
        // Graphs as decorations of bare sets: one free (symmetric) pair,
        // so exactly two extended amalgams.
        let full = graph_sig();
        let bot = Signature::empty("v");
        let a = graph(&full, &[0], &[]);
        let b = graph(&full, &[0, 1], &[(0, 1)]);
        let c = graph(&full, &[0, 2], &[]);
        let prob = AmalgamProblem::literal(a, b, c).unwrap();
        let mut dbot = FinStructure::empty(bot.clone());
        for i in [0, 1, 2] {
            dbot.add_elem(v(i));
        }
        let symmetric_member = |s: &FinStructure| {
            s.rel(0).iter().all(|t| t[0] != t[1] && s.holds(0, &[t[1], t[0]]))
        };
        let hooks = DecorationHooks {
            universal_ok: &symmetric_member,
            member: &symmetric_member,
            tuple_orbit: &|_, t| vec![t.to_vec(), vec![t[1], t[0]]],
            dense_first: false,
        };
        let out = extended_amalgams(&full, &bot, &prob, &dbot, &hooks, usize::MAX, None).unwrap();
        assert_eq!(out.len(), 2);
        // Sparsest first: the free amalgam leads.
        assert_eq!(out[0].rel(0).len(), 2);
        assert_eq!(out[1].rel(0).len(), 4);
        for d in &out {
            assert!(prob.b.is_substructure_of(d));
            assert!(prob.c.is_substructure_of(d));
        }
    }

    #[test]
    fn seeded_search_is_deterministic() {
        let full = graph_sig();
        let bot = Signature::empty("v");
        let a = graph(&full, &[0], &[]);
        let b = graph(&full, &[0, 1], &[]);
        let c = graph(&full, &[0, 2], &[]);
        let prob = AmalgamProblem::literal(a, b, c).unwrap();
        let mut dbot = FinStructure::empty(bot.clone());
        for i in [0, 1, 2] {
            dbot.add_elem(v(i));
        }
        let ok = |s: &FinStructure| s.rel(0).iter().all(|t| t[0] != t[1] && s.holds(0, &[t[1], t[0]]));
        let hooks = DecorationHooks {
            universal_ok: &ok,
            member: &ok,
            tuple_orbit: &|_, t| vec![t.to_vec(), vec![t[1], t[0]]],
            dense_first: false,
        };
        let one = extended_amalgams(&full, &bot, &prob, &dbot, &hooks, 1, Some(7)).unwrap();
        let two = extended_amalgams(&full, &bot, &prob, &dbot, &hooks, 1, Some(7)).unwrap();
        assert_eq!(one, two);
    }
}
