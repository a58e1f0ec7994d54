//! Rigidity probes: the distinct-2-types criterion, pinning of a sort by
//! isomorphisms, splitting families, indiscernibility classes, and the
//! permutation automorphisms those classes certify.
//!
//! The distinct-2-types check reduces the quantifier alternation to finite
//! work in three steps. For a configuration (B ⊇ A, its fresh disjoint copy
//! C = α(B), and a pair x0, x1 of equal 1-type), the 2-types of (x0, α(x0))
//! and (x1, α(x1)) in any member D extending a prescribed core amalgam are
//! decided entirely by the decoration tuples over the two generated
//! substructures G0 and G1 — the "region". First enumerate the core
//! isomorphisms G0 → G1 respecting the generator pairs (function symbols
//! force almost everything, so there are few). If none exists the types
//! differ in every decoration. Otherwise search region assignments —
//! sparsest first — for one that breaks every core isomorphism on some
//! region tuple and still completes to a class member; truncated searches
//! are reported as such rather than as clean verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::age::{decorations, fingerprint, AgeSpec, EnumBound};
use crate::amalgam::{
    decoration_problem, decoration_rels, solve_decorations, AmalgamProblem, DecorationProblem,
};
use crate::error::Error;
use crate::framework::{hooks, term_closed_subsets, Counterexample, PropertyReport};
use crate::model::{
    is_isomorphism, qftp_equal, ElemId, Embedding, EmbeddingSearch, FinStructure, RelId,
    Signature, SortId,
};

/// Core isomorphisms per configuration beyond which the check refuses to
/// conclude anything.
const MAP_CAP: usize = 8;
/// Regions up to this many free orbits are searched exhaustively; larger
/// ones fall back to empty/single/pair assignments.
const REGION_EXHAUST: usize = 12;
const SEARCH_NODE_CAP: u64 = 1_000_000;

/// A named set of base elements proposed as a splitting family for a sort.
#[derive(Debug, Clone)]
pub struct SplitFamily {
    pub fset: BTreeSet<ElemId>,
    pub sort: SortId,
    /// Where the family came from (free-form, reporting only).
    pub provenance: String,
}

/// Truth value of a decoration tuple relative to a partially decided
/// amalgam: decided by a leg, or free as part of an undecided orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TupleVal {
    True,
    False,
    Free(usize),
}

fn truth(v: TupleVal, assign: &BTreeSet<usize>) -> bool {
    match v {
        TupleVal::True => true,
        TupleVal::False => false,
        TupleVal::Free(i) => assign.contains(&i),
    }
}

/// Candidate sets of region orbits to set true, sparsest first. The flag
/// says whether the list covers every subset.
fn candidate_assignments(n: usize) -> (Vec<Vec<usize>>, bool) {
    if n <= REGION_EXHAUST {
        let mut all: Vec<Vec<usize>> = (0u32..(1u32 << n))
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect();
        all.sort_by_key(|c: &Vec<usize>| c.len());
        return (all, true);
    }
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    out.extend((0..n).map(|i| vec![i]));
    if n <= 64 {
        for i in 0..n {
            for j in i + 1..n {
                out.push(vec![i, j]);
            }
        }
    }
    (out, false)
}

/// Builds the normalized span of a configuration: C is a disjoint copy of B
/// fixing A pointwise. Returns the span and the copies of x0 and x1.
pub(crate) fn config_span(
    b: &FinStructure,
    a_set: &BTreeSet<ElemId>,
    x0: ElemId,
    x1: ElemId,
) -> Result<(AmalgamProblem, ElemId, ElemId), Error> {
    let a = b.restrict(a_set);
    let mut next = b.max_raw_id().saturating_add(1);
    let mut map = BTreeMap::new();
    for e in b.elems() {
        if a_set.contains(&e) {
            map.insert(e, e);
        } else {
            map.insert(e, ElemId::new(e.sort, next));
            next += 1;
        }
    }
    let a0 = map[&x0];
    let a1 = map[&x1];
    let c = b.rename(&map);
    let prob = AmalgamProblem::literal(a, b.clone(), c)?;
    Ok((prob, a0, a1))
}

/// Whether some member over the prescribed core amalgam separates the
/// 2-types of (x0, a0) and (x1, a1). `Err` means the bounded search was
/// inconclusive (capped map enumeration or truncated region search).
fn distinguished_over(
    k: &AgeSpec,
    prob: &AmalgamProblem,
    dbot: &FinStructure,
    x0: ElemId,
    a0: ElemId,
    x1: ElemId,
    a1: ElemId,
) -> Result<bool, String> {
    let problem = decoration_problem(&k.sig, k.subsig(), prob, dbot, &*k.tuple_orbit)
        .map_err(|e| e.to_string())?;
    let deco = decoration_rels(&k.sig, k.subsig()).map_err(|e| e.to_string())?;
    let d0 = &problem.base;
    let g0 = d0.generated_sub(&[x0, a0].into_iter().collect());
    let g1 = d0.generated_sub(&[x1, a1].into_iter().collect());
    let g0r = g0.reduct(k.subsig()).map_err(|e| e.to_string())?;
    let g1r = g1.reduct(k.subsig()).map_err(|e| e.to_string())?;
    let hk = hooks(k);
    let maps = if g0r.size() == g1r.size() {
        EmbeddingSearch::new(&g0r, &g1r)
            .fixing([(x0, x1), (a0, a1)].into())
            .surjective()
            .limit(MAP_CAP)
            .node_cap(SEARCH_NODE_CAP)
            .run()
            .map_err(|e| e.to_string())?
    } else {
        vec![]
    };
    if maps.len() >= MAP_CAP {
        return Err("core isomorphism enumeration hit its cap".into());
    }
    if maps.is_empty() {
        // The types differ under every decoration; exhibit one member.
        return Ok(!solve_decorations(&problem, &hk, 1, None).is_empty());
    }
    let mut orbit_of: BTreeMap<(RelId, Vec<ElemId>), usize> = BTreeMap::new();
    for (i, (r, orbit)) in problem.orbits.iter().enumerate() {
        for t in orbit {
            orbit_of.insert((*r, t.clone()), i);
        }
    }
    let val = |r: RelId, t: &[ElemId]| -> TupleVal {
        if d0.holds(r, t) {
            TupleVal::True
        } else if let Some(&i) = orbit_of.get(&(r, t.to_vec())) {
            TupleVal::Free(i)
        } else {
            TupleVal::False
        }
    };
    // Per core isomorphism: the value of every region tuple over G0 paired
    // with the value of its image. The isomorphism survives a decoration
    // exactly when every row agrees.
    let mut tables: Vec<Vec<(TupleVal, TupleVal)>> = Vec::new();
    for m in &maps {
        let mut rows = Vec::new();
        for &r in &deco {
            for t in g0.tuples_over(&k.sig.rels()[r].arity) {
                let img = m.apply_tuple(&t).expect("core isomorphisms are total on G0");
                rows.push((val(r, &t), val(r, &img)));
            }
        }
        tables.push(rows);
    }
    let mut region: BTreeSet<usize> = BTreeSet::new();
    for rows in &tables {
        for &(a, b) in rows {
            for v in [a, b] {
                if let TupleVal::Free(i) = v {
                    region.insert(i);
                }
            }
        }
    }
    let region: Vec<usize> = region.into_iter().collect();
    let rest: Vec<(RelId, Vec<Vec<ElemId>>)> = problem
        .orbits
        .iter()
        .enumerate()
        .filter(|(i, _)| !region.contains(i))
        .map(|(_, o)| o.clone())
        .collect();
    let (cands, exhaustive) = candidate_assignments(region.len());
    for cand in cands {
        let assign: BTreeSet<usize> = cand.iter().map(|&p| region[p]).collect();
        let defeated = tables
            .iter()
            .all(|rows| rows.iter().any(|&(a, b)| truth(a, &assign) != truth(b, &assign)));
        if !defeated {
            continue;
        }
        let mut pinned = problem.base.clone();
        for &oi in &assign {
            let (r, orbit) = &problem.orbits[oi];
            for t in orbit {
                pinned.add_rel(*r, t.clone());
            }
        }
        let sub = DecorationProblem { base: pinned, orbits: rest.clone() };
        if let Some(d) = solve_decorations(&sub, &hk, 1, None).pop() {
            if !qftp_equal(&d, &[x0, a0], &d, &[x1, a1]) {
                return Ok(true);
            }
        }
    }
    if exhaustive {
        Ok(false)
    } else {
        Err("truncated region search found no distinguishing member".into())
    }
}

/// One configuration of the distinct-2-types property: does every candidate
/// prescribed core amalgam admit a member separating the two 2-types?
pub(crate) fn config_distinguished(
    k: &AgeSpec,
    b: &FinStructure,
    a_set: &BTreeSet<ElemId>,
    x0: ElemId,
    x1: ElemId,
) -> Result<bool, String> {
    let (prob, a0, a1) = config_span(b, a_set, x0, x1).map_err(|e| e.to_string())?;
    let mut any = false;
    for dbot in k.close_union(&prob) {
        let ok = match &k.bot {
            Some(bot) => bot.is_member(&dbot),
            None => k.is_member(&dbot),
        };
        if !ok {
            continue;
        }
        any = true;
        if !distinguished_over(k, &prob, &dbot, x0, a0, x1, a1)? {
            return Ok(false);
        }
    }
    if !any {
        return Err("no prescribed core amalgam candidate for the configuration".into());
    }
    Ok(true)
}

/// Distinct-2-types over a sort: for every bounded member B, generated
/// substructure A, and pair x0 ≠ x1 of that sort outside A with equal
/// 1-types in B, some member over each prescribed amalgam of B with its
/// disjoint copy over A separates the 2-types of (x0, α(x0)) and
/// (x1, α(x1)).
pub fn check_distinct_2_types(
    k: &AgeSpec,
    sort_name: &str,
    bound: EnumBound,
) -> Result<PropertyReport, Error> {
    let sort = k
        .sig
        .sort_id(sort_name)
        .ok_or_else(|| Error::Class(format!("unknown sort `{sort_name}`")))?;
    let mut configs = 0usize;
    for b in k.enumerate(bound) {
        for a_set in term_closed_subsets(&b, bound.generators) {
            let cands: Vec<ElemId> =
                b.carrier(sort).iter().copied().filter(|e| !a_set.contains(e)).collect();
            if cands.len() < 2 {
                continue;
            }
            // Iso-invariant bucket key of the pointed closure: a cheap
            // necessary condition for equal 1-types.
            let keys: Vec<Vec<u64>> = cands
                .iter()
                .map(|&x| fingerprint(&b.generated_sub(&[x].into_iter().collect())))
                .collect();
            for i in 0..cands.len() {
                for j in i + 1..cands.len() {
                    if keys[i] != keys[j] {
                        continue;
                    }
                    let (x0, x1) = (cands[i], cands[j]);
                    if !qftp_equal(&b, &[x0], &b, &[x1]) {
                        continue;
                    }
                    configs += 1;
                    let verdict = config_distinguished(k, &b, &a_set, x0, x1);
                    if let Ok(true) = verdict {
                        continue;
                    }
                    let detail = match verdict {
                        Err(msg) => msg,
                        _ => "pair of equal 1-types admits no distinguishing member".into(),
                    };
                    return Ok(PropertyReport::fail(
                        "2types",
                        format!("{}", bound.generators),
                        Counterexample::TwoTypes {
                            b: b.clone(),
                            a_set: a_set.clone(),
                            x0,
                            x1,
                        },
                        detail,
                    ));
                }
            }
        }
    }
    Ok(PropertyReport::pass(
        "2types",
        format!("{}", bound.generators),
        format!("{configs} configurations distinguished"),
    ))
}

/// Pinning of a sort: any two isomorphisms between bounded members that
/// agree on the carrier of the sort agree everywhere.
pub fn check_pins(k: &AgeSpec, sort_name: &str, bound: EnumBound) -> Result<PropertyReport, Error> {
    let sort = k
        .sig
        .sort_id(sort_name)
        .ok_or_else(|| Error::Class(format!("unknown sort `{sort_name}`")))?;
    let members = k.enumerate(bound);
    let mut isos_checked = 0usize;
    for a in &members {
        for b in &members {
            if fingerprint(a) != fingerprint(b) {
                continue;
            }
            let isos = EmbeddingSearch::new(a, b)
                .surjective()
                .node_cap(SEARCH_NODE_CAP)
                .run()?;
            let mut by_pin: BTreeMap<Vec<(ElemId, ElemId)>, usize> = BTreeMap::new();
            for (idx, iso) in isos.iter().enumerate() {
                isos_checked += 1;
                let key: Vec<(ElemId, ElemId)> = iso
                    .map
                    .iter()
                    .filter(|(e, _)| e.sort == sort)
                    .map(|(&e, &v)| (e, v))
                    .collect();
                if let Some(&prev) = by_pin.get(&key) {
                    return Ok(PropertyReport::fail(
                        "pins",
                        format!("{}", bound.generators),
                        Counterexample::Pins {
                            sort,
                            a: a.clone(),
                            b: b.clone(),
                            i0: isos[prev].clone(),
                            i1: iso.clone(),
                        },
                        "two isomorphisms agree on the pin sort but differ elsewhere".into(),
                    ));
                }
                by_pin.insert(key, idx);
            }
        }
    }
    Ok(PropertyReport::pass(
        "pins",
        format!("{}", bound.generators),
        format!("{isos_checked} isomorphisms over {} members", members.len()),
    ))
}

/// Class members whose core reduct is a generated substructure of `base`,
/// with at most `bound.generators` generators and `bound.max_rel` decorated
/// orbits.
pub fn conditions_in(
    k: &AgeSpec,
    base: &FinStructure,
    bound: EnumBound,
) -> Result<Vec<FinStructure>, Error> {
    if base.sig != *k.subsig() {
        return Err(Error::Class("base must live over the core signature".into()));
    }
    let empty = FinStructure::empty(k.sig.clone());
    let span = AmalgamProblem::literal(empty.clone(), empty.clone(), empty)?;
    let mut out = Vec::new();
    for s in term_closed_subsets(base, bound.generators) {
        let sub = base.restrict(&s);
        let problem = decoration_problem(&k.sig, k.subsig(), &span, &sub, &*k.tuple_orbit)?;
        out.extend(
            decorations(&problem.base, &problem.orbits, &*k.universal_ok, bound.max_rel)
                .into_iter()
                .filter(|d| k.is_member(d)),
        );
    }
    Ok(out)
}

/// Whether some z in the family splits the pair inside a bounded member
/// extension: a D ⊇ A inside the base with qftp(x, z) ≠ qftp(y, z).
pub(crate) fn splitting_pair_ok(
    k: &AgeSpec,
    fset: &BTreeSet<ElemId>,
    base: &FinStructure,
    a: &FinStructure,
    x: ElemId,
    y: ElemId,
) -> Result<bool, Error> {
    let acar = a.reduct(k.subsig())?.elem_set();
    let hk = hooks(k);
    for &z in fset {
        let mut seed = acar.clone();
        seed.insert(z);
        let host = base.generated_sub(&seed);
        let span = AmalgamProblem::literal(a.clone(), a.clone(), a.clone())?;
        let problem = decoration_problem(&k.sig, k.subsig(), &span, &host, &*k.tuple_orbit)?;
        // Only tuples over the closures of (x, z) and (y, z) can tell the
        // two types apart.
        let gx = problem.base.generated_sub(&[x, z].into_iter().collect()).elem_set();
        let gy = problem.base.generated_sub(&[y, z].into_iter().collect()).elem_set();
        let region: Vec<usize> = problem
            .orbits
            .iter()
            .enumerate()
            .filter(|(_, (_, orbit))| {
                orbit.iter().any(|t| {
                    t.iter().all(|e| gx.contains(e)) || t.iter().all(|e| gy.contains(e))
                })
            })
            .map(|(i, _)| i)
            .collect();
        let rest: Vec<(RelId, Vec<Vec<ElemId>>)> = problem
            .orbits
            .iter()
            .enumerate()
            .filter(|(i, _)| !region.contains(i))
            .map(|(_, o)| o.clone())
            .collect();
        let (cands, _) = candidate_assignments(region.len());
        for cand in cands {
            let mut pinned = problem.base.clone();
            for &p in &cand {
                let (r, orbit) = &problem.orbits[region[p]];
                for t in orbit {
                    pinned.add_rel(*r, t.clone());
                }
            }
            let sub = DecorationProblem { base: pinned, orbits: rest.clone() };
            if let Some(d) = solve_decorations(&sub, &hk, 1, None).pop() {
                if !qftp_equal(&d, &[x, z], &d, &[y, z]) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Splitting family check: every pair of distinct elements of the family's
/// sort, in every bounded member inside the base, is split by some element
/// of the family in some bounded extension.
pub fn check_splitting(
    k: &AgeSpec,
    fam: &SplitFamily,
    base: &FinStructure,
    bound: EnumBound,
) -> Result<PropertyReport, Error> {
    for &z in &fam.fset {
        if !base.contains(z) {
            return Err(Error::Class("splitting family names elements outside the base".into()));
        }
    }
    let mut pairs = 0usize;
    for a in conditions_in(k, base, bound)? {
        let elems: Vec<ElemId> = a.carrier(fam.sort).iter().copied().collect();
        for i in 0..elems.len() {
            for j in i + 1..elems.len() {
                pairs += 1;
                if !splitting_pair_ok(k, &fam.fset, base, &a, elems[i], elems[j])? {
                    return Ok(PropertyReport::fail(
                        "splitting",
                        format!("{}", bound.generators),
                        Counterexample::Splitting {
                            a: a.clone(),
                            x: elems[i],
                            y: elems[j],
                            fset: fam.fset.clone(),
                            base: base.clone(),
                        },
                        format!("family `{}` splits no extension of the pair", fam.provenance),
                    ));
                }
            }
        }
    }
    Ok(PropertyReport::pass(
        "splitting",
        format!("{}", bound.generators),
        format!("{pairs} pairs split by family `{}`", fam.provenance),
    ))
}

/// The relational part of a structure: same sorts and relations, function
/// symbols dropped.
pub fn relational_part(s: &FinStructure) -> FinStructure {
    if s.sig.is_relational() {
        return s.clone();
    }
    let sorts = s.sig.sorts().to_vec();
    let rels = s
        .sig
        .rels()
        .iter()
        .map(|r| (r.name.clone(), r.arity.iter().map(|&i| sorts[i].clone()).collect()))
        .collect();
    let sig = Arc::new(Signature::new(sorts, rels, vec![]).expect("valid signature"));
    s.reduct(&sig).expect("relational part is a subsignature")
}

/// Whether every true tuple stays true when any nonempty set of
/// `from`-positions is replaced by `to`.
fn subst_closed(s: &FinStructure, r: RelId, t: &[ElemId], from: ElemId, to: ElemId) -> bool {
    let pos: Vec<usize> = (0..t.len()).filter(|&i| t[i] == from).collect();
    for mask in 1u32..(1u32 << pos.len()) {
        let mut u = t.to_vec();
        for (bit, &p) in pos.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                u[p] = to;
            }
        }
        if !s.holds(r, &u) {
            return false;
        }
    }
    true
}

/// a ≡ b: every atomic relational formula, with parameters ranging over the
/// whole carrier and the variable at any nonempty set of positions, takes
/// the same value at a and at b. Scanning true tuples in both substitution
/// directions covers every violating instance.
fn indiscernible(s: &FinStructure, a: ElemId, b: ElemId) -> bool {
    if a.sort != b.sort {
        return false;
    }
    if a == b {
        return true;
    }
    for (r, _) in s.sig.rels().iter().enumerate() {
        for t in s.rel(r) {
            if !subst_closed(s, r, t, a, b) || !subst_closed(s, r, t, b, a) {
                return false;
            }
        }
    }
    true
}

/// Indiscernibility classes of a relational structure. Errors on function
/// symbols: take `relational_part` first (the classes are then meaningful
/// for the reduct only).
pub fn equiv_classes(s: &FinStructure) -> Result<Vec<BTreeSet<ElemId>>, Error> {
    if !s.sig.is_relational() {
        return Err(Error::Class(
            "indiscernibility classes are defined over relational signatures; take the relational part first"
                .into(),
        ));
    }
    // Participation counts per (relation, position) are invariants; bucket
    // before the exact pairwise test.
    let mut off = Vec::with_capacity(s.sig.rels().len());
    let mut slots = 0usize;
    for r in s.sig.rels() {
        off.push(slots);
        slots += r.arity.len();
    }
    let mut prof: BTreeMap<ElemId, Vec<usize>> = s.elems().map(|e| (e, vec![0; slots])).collect();
    for (r, _) in s.sig.rels().iter().enumerate() {
        for t in s.rel(r) {
            for (pos, e) in t.iter().enumerate() {
                prof.get_mut(e).expect("tuples range over the carrier")[off[r] + pos] += 1;
            }
        }
    }
    let mut classes: Vec<BTreeSet<ElemId>> = Vec::new();
    for e in s.elems() {
        let found = classes.iter_mut().find(|cl| {
            let rep = *cl.iter().next().expect("classes are nonempty");
            rep.sort == e.sort && prof[&rep] == prof[&e] && indiscernible(s, rep, e)
        });
        match found {
            Some(cl) => {
                cl.insert(e);
            }
            None => classes.push([e].into_iter().collect()),
        }
    }
    Ok(classes)
}

/// Extends a permutation of one indiscernibility class by the identity and
/// rechecks that the result is an automorphism.
pub fn class_permutation_automorphism(
    s: &FinStructure,
    cls: &BTreeSet<ElemId>,
    perm: &BTreeMap<ElemId, ElemId>,
) -> Result<Embedding, Error> {
    let keys: BTreeSet<ElemId> = perm.keys().copied().collect();
    let vals: BTreeSet<ElemId> = perm.values().copied().collect();
    if keys != *cls || vals != *cls {
        return Err(Error::Class("map is not a permutation of the class".into()));
    }
    let mut map: BTreeMap<ElemId, ElemId> = s.elems().map(|e| (e, e)).collect();
    for (&from, &to) in perm {
        map.insert(from, to);
    }
    let emb = Embedding { map };
    if is_isomorphism(s, s, &emb) {
        Ok(emb)
    } else {
        Err(Error::Class("extended permutation is not an automorphism".into()))
    }
}

/// What a bounded rigidity probe can honestly say about one finite
/// structure. A probe never claims rigidity of anything infinite.
#[derive(Debug)]
pub struct RigidityReport {
    pub budget: u64,
    /// The automorphism search ran to completion within the budget.
    pub exhausted: bool,
    pub nontrivial_automorphism: Option<Embedding>,
    /// Sizes ≥ 2 of indiscernibility classes of the relational part,
    /// descending.
    pub class_sizes: Vec<usize>,
    /// Largest such class: the automorphism group of the relational part
    /// contains the symmetric group on that many points.
    pub perm_factor: Option<usize>,
    pub notes: Vec<String>,
}

pub fn rigidity_report(g: &FinStructure, budget: u64) -> RigidityReport {
    let mut notes = Vec::new();
    let (exhausted, mut nontrivial) = match EmbeddingSearch::new(g, g)
        .surjective()
        .limit(2)
        .node_cap(budget)
        .run()
    {
        Ok(autos) => {
            let complete = autos.len() < 2;
            let nt = autos.into_iter().find(|e| e.map.iter().any(|(a, b)| a != b));
            (complete && nt.is_none(), nt)
        }
        Err(_) => {
            notes.push("automorphism search exceeded its node budget".into());
            (false, None)
        }
    };
    let relational = g.sig.is_relational();
    if !relational {
        notes.push("function symbols dropped for the indiscernibility analysis".into());
    }
    let rp = relational_part(g);
    let classes = equiv_classes(&rp).expect("relational part has no function symbols");
    let mut class_sizes: Vec<usize> =
        classes.iter().map(|c| c.len()).filter(|&n| n >= 2).collect();
    class_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let perm_factor = class_sizes.first().copied();
    match perm_factor {
        Some(n) if relational => {
            notes.push(format!(
                "automorphism group contains the symmetric group on {n} indiscernible elements"
            ));
            if nontrivial.is_none() {
                // The class certifies a transposition directly.
                let cls = classes.iter().find(|c| c.len() == n).expect("size came from classes");
                let mut it = cls.iter();
                let (p, q) = (*it.next().unwrap(), *it.next().unwrap());
                let perm: BTreeMap<ElemId, ElemId> = [(p, q), (q, p)].into();
                if let Ok(emb) = class_permutation_automorphism(&rp, cls, &perm) {
                    nontrivial = Some(emb);
                }
            }
        }
        Some(n) => {
            notes.push(format!(
                "relational part has an indiscernibility class of size {n}; the permutation certificate applies to the relational part only"
            ));
        }
        None => notes.push("all indiscernibility classes are singletons".into()),
    }
    if nontrivial.is_none() && exhausted {
        notes.push(
            "only the identity automorphism exists at this finite stage; this does not decide rigidity of any limit"
                .into(),
        );
    }
    RigidityReport { budget, exhausted, nontrivial_automorphism: nontrivial, class_sizes, perm_factor, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::bare_sets_age;
    use crate::catalog::seqname::{make_seq, make_seq_name_age, proj, W};
    use crate::catalog::twocolor::make_two_color_age;
    use crate::framework::hooks;

    fn v(i: u32) -> ElemId {
        ElemId::new(0, i)
    }

    #[test]
    fn two_color_distinct_2_types_passes() {
        let k = make_two_color_age();
        let rep = check_distinct_2_types(&k, "v", EnumBound::gens(3)).unwrap();
        assert!(rep.pass, "{rep}");
    }

    #[test]
    fn seq2_distinct_2_types_fails_on_a_shared_coordinate() {
        let k = make_seq_name_age(2, true);
        let rep = check_distinct_2_types(&k, "w", EnumBound::with_rel(3, 1)).unwrap();
        assert!(!rep.pass);
        let cex = rep.counterexample.expect("counterexample");
        assert!(cex.replays(&k));
        let Counterexample::TwoTypes { b, a_set, x0, x1 } = cex else {
            panic!("wrong counterexample kind");
        };
        // The failing shape: the names share one coordinate outside A and
        // differ in a coordinate inside A.
        let shared = (0..2).find(|&i| b.apply(proj(i), &[x0]) == b.apply(proj(i), &[x1]));
        let i = shared.expect("names share a coordinate");
        assert!(!a_set.contains(&b.apply(proj(i), &[x0]).unwrap()));
        let j = 1 - i;
        assert!(a_set.contains(&b.apply(proj(j), &[x0]).unwrap()));
        assert!(a_set.contains(&b.apply(proj(j), &[x1]).unwrap()));
    }

    /// Ground-truth audit: enumerate every decoration of every core
    /// candidate and test the 2-types directly.
    fn audit_config(
        k: &AgeSpec,
        b: &FinStructure,
        a_set: &BTreeSet<ElemId>,
        x0: ElemId,
        x1: ElemId,
    ) -> bool {
        let (prob, a0, a1) = config_span(b, a_set, x0, x1).unwrap();
        let mut any = false;
        for dbot in k.close_union(&prob) {
            let ok = match &k.bot {
                Some(bot) => bot.is_member(&dbot),
                None => k.is_member(&dbot),
            };
            if !ok {
                continue;
            }
            any = true;
            let problem =
                decoration_problem(&k.sig, k.subsig(), &prob, &dbot, &*k.tuple_orbit).unwrap();
            let all = solve_decorations(&problem, &hooks(k), usize::MAX, None);
            if !all.iter().any(|d| !qftp_equal(d, &[x0, a0], d, &[x1, a1])) {
                return false;
            }
        }
        any
    }

    #[test]
    fn two_types_agrees_with_an_exhaustive_audit() {
        let ages = [
            (make_two_color_age(), 0usize, EnumBound::gens(2)),
            (make_seq_name_age(2, true), 1usize, EnumBound::with_rel(2, 1)),
        ];
        let mut configs = 0;
        for (k, sort, bound) in &ages {
            for b in k.enumerate(*bound) {
                for a_set in term_closed_subsets(&b, bound.generators) {
                    let cands: Vec<ElemId> = b
                        .carrier(*sort)
                        .iter()
                        .copied()
                        .filter(|e| !a_set.contains(e))
                        .collect();
                    for i in 0..cands.len() {
                        for j in i + 1..cands.len() {
                            let (x0, x1) = (cands[i], cands[j]);
                            if !qftp_equal(&b, &[x0], &b, &[x1]) {
                                continue;
                            }
                            configs += 1;
                            let fast = config_distinguished(k, &b, &a_set, x0, x1).unwrap();
                            assert_eq!(fast, audit_config(k, &b, &a_set, x0, x1));
                        }
                    }
                }
            }
        }
        assert!(configs > 0);
    }

    #[test]
    fn audit_confirms_the_seq2_failing_shape() {
        let k = make_seq_name_age(2, true);
        let b = make_seq(2, &k.sig, 3);
        let u: Vec<ElemId> = b.carrier(0).iter().copied().collect();
        let (y0, y1, z1) = (u[0], u[1], u[2]);
        let a_set = b.tdcl(&[y1, z1].into_iter().collect());
        let x0 = b.apply(0, &[y0, y1]).unwrap();
        let x1 = b.apply(0, &[y0, z1]).unwrap();
        assert!(qftp_equal(&b, &[x0], &b, &[x1]));
        assert_eq!(config_distinguished(&k, &b, &a_set, x0, x1), Ok(false));
        assert!(!audit_config(&k, &b, &a_set, x0, x1));
    }

    #[test]
    fn sequence_names_pin_the_name_sort() {
        let k = make_seq_name_age(2, true);
        let rep = check_pins(&k, "w", EnumBound::with_rel(2, 1)).unwrap();
        assert!(rep.pass, "{rep}");
    }

    #[test]
    fn unconstrained_second_sort_fails_pins() {
        let k = bare_sets_age(vec!["a".into(), "b".into()]);
        let rep = check_pins(&k, "a", EnumBound::gens(2)).unwrap();
        assert!(!rep.pass);
        let cex = rep.counterexample.expect("counterexample");
        assert!(cex.replays(&k));
    }

    #[test]
    fn first_coordinate_block_splits_sequence_names() {
        let k = make_seq_name_age(2, true);
        let core = make_seq_name_age(2, false);
        let base = make_seq(2, &core.sig, 3);
        // Names whose first coordinate is the last u-point.
        let block = *base.carrier(0).iter().last().unwrap();
        let fset: BTreeSet<ElemId> = base
            .carrier(W)
            .iter()
            .copied()
            .filter(|&w| base.apply(proj(0), &[w]) == Some(block))
            .collect();
        assert_eq!(fset.len(), 3);
        let fam = SplitFamily { fset, sort: W, provenance: "first-coordinate block".into() };
        let rep = check_splitting(&k, &fam, &base, EnumBound::with_rel(2, 1)).unwrap();
        assert!(rep.pass, "{rep}");
    }

    #[test]
    fn empty_family_fails_splitting() {
        let k = make_seq_name_age(2, true);
        let core = make_seq_name_age(2, false);
        let base = make_seq(2, &core.sig, 2);
        let fam =
            SplitFamily { fset: BTreeSet::new(), sort: W, provenance: "empty".into() };
        let rep = check_splitting(&k, &fam, &base, EnumBound::with_rel(2, 0)).unwrap();
        assert!(!rep.pass);
        assert!(rep.counterexample.expect("counterexample").replays(&k));
    }

    fn graph(verts: &[u32], edges: &[(u32, u32)]) -> FinStructure {
        let sig = Arc::new(
            Signature::new(
                vec!["v".into()],
                vec![("E".into(), vec!["v".into(), "v".into()])],
                vec![],
            )
            .unwrap(),
        );
        let mut g = FinStructure::empty(sig);
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
    fn indiscernibility_is_literal() {
        // An edge makes its endpoints discernible: E(a, b) holds but the
        // substituted E(b, b) does not.
        let g = graph(&[0, 1, 2], &[(0, 1)]);
        let classes = equiv_classes(&g).unwrap();
        assert_eq!(classes.len(), 3);
        // Edgeless points are indiscernible.
        let e = graph(&[0, 1, 2], &[]);
        assert_eq!(equiv_classes(&e).unwrap().len(), 1);
    }

    #[test]
    fn colors_separate_classes() {
        let k = make_two_color_age();
        let mut s = FinStructure::empty(k.sig.clone());
        for i in 0..3 {
            s.add_elem(v(i));
        }
        s.add_rel(0, vec![v(0)]);
        s.add_rel(0, vec![v(1)]);
        s.add_rel(1, vec![v(2)]);
        let classes = equiv_classes(&s).unwrap();
        assert_eq!(classes.len(), 2);
        assert!(classes.iter().any(|c| c.len() == 2));
    }

    #[test]
    fn function_symbols_are_rejected() {
        let k = make_seq_name_age(2, false);
        let s = make_seq(2, &k.sig, 1);
        assert!(equiv_classes(&s).is_err());
        assert!(relational_part(&s).sig.is_relational());
    }

    #[test]
    fn class_permutations_are_automorphisms() {
        let e = graph(&[0, 1, 2], &[]);
        let cls: BTreeSet<ElemId> = [v(0), v(1), v(2)].into_iter().collect();
        let perm: BTreeMap<ElemId, ElemId> = [(v(0), v(1)), (v(1), v(2)), (v(2), v(0))].into();
        let emb = class_permutation_automorphism(&e, &cls, &perm).unwrap();
        assert!(is_isomorphism(&e, &e, &emb));
        // A map that leaves the class is rejected.
        let short: BTreeSet<ElemId> = [v(0), v(1)].into_iter().collect();
        let bad: BTreeMap<ElemId, ElemId> = [(v(0), v(2)), (v(1), v(0))].into();
        assert!(class_permutation_automorphism(&e, &short, &bad).is_err());
    }

    #[test]
    fn report_finds_the_symmetric_factor() {
        let e = graph(&[0, 1, 2, 3], &[]);
        let rep = rigidity_report(&e, 100_000);
        assert!(rep.nontrivial_automorphism.is_some());
        assert_eq!(rep.perm_factor, Some(4));
    }

    #[test]
    fn report_never_overclaims_on_a_rigid_stage() {
        // A rooted chain is rigid: the root constant is fixed and the
        // parent function forces the rest.
        let sig = crate::catalog::tree::tree_sig(false);
        let mut t = FinStructure::empty(sig);
        for i in 0..3 {
            t.add_elem(v(i));
        }
        t.set_func(1, vec![], v(0));
        t.set_func(0, vec![v(0)], v(0));
        t.set_func(0, vec![v(1)], v(0));
        t.set_func(0, vec![v(2)], v(1));
        let rep = rigidity_report(&t, 100_000);
        assert!(rep.nontrivial_automorphism.is_none());
        assert!(rep.exhausted);
        assert!(rep.notes.iter().any(|n| n.contains("does not decide rigidity")));
    }
}
