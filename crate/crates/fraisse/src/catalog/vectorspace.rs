//! GF(q) vector spaces as structures over {add, s_0 … s_{q-1}, zero}, and
//! the oriented variant that marks exactly one ordered independent pair in
//! every 2-dimensional subspace.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::age::{iso_classes, AgeSpec, EnumBound};
use crate::catalog::field::{self, Echelon};
use crate::catalog::{CatalogEntry, Check, ExpectedVerdict};
use crate::error::Error;
use crate::model::{ElemId, FinStructure, Signature};

const ADD: usize = 0;

fn scalar(k: u8) -> usize {
    1 + k as usize
}

fn zero_f(q: u8) -> usize {
    1 + q as usize
}

/// Carrier cap for coordinatization and span construction.
const MAX_SPACE: usize = 65536;

pub fn vs_sig(q: u8, oriented: bool) -> Arc<Signature> {
    let mut funcs = vec![("add".to_string(), vec!["vec".to_string(), "vec".to_string()], "vec".to_string())];
    for k in 0..q {
        funcs.push((format!("s{k}"), vec!["vec".into()], "vec".into()));
    }
    funcs.push(("zero".into(), vec![], "vec".into()));
    let rels = if oriented {
        vec![("R".to_string(), vec!["vec".to_string(), "vec".to_string()])]
    } else {
        vec![]
    };
    Arc::new(Signature::new(vec!["vec".into()], rels, funcs).unwrap())
}

/// A verified coordinatization: basis, element ↔ coordinate maps, with the
/// add and scalar tables fully checked against coordinate arithmetic.
pub struct Coords {
    pub basis: Vec<ElemId>,
    pub coord: BTreeMap<ElemId, Vec<u8>>,
    pub elem_at: BTreeMap<Vec<u8>, ElemId>,
}

impl Coords {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Checks the vector-space axioms by building a coordinatization and
/// verifying every table entry against it. None = not a GF(q) space.
pub fn coordinatize(q: u8, s: &FinStructure) -> Option<Coords> {
    if s.sig.funcs().len() != q as usize + 2 || s.size() > MAX_SPACE {
        return None;
    }
    let zero = s.apply(zero_f(q), &[])?;
    let mut coord: BTreeMap<ElemId, Vec<u8>> = BTreeMap::from([(zero, vec![])]);
    let mut elem_at: BTreeMap<Vec<u8>, ElemId> = BTreeMap::from([(vec![], zero)]);
    let mut basis: Vec<ElemId> = Vec::new();
    for e in s.elems() {
        if coord.contains_key(&e) {
            continue;
        }
        if coord.len().checked_mul(q as usize)? > MAX_SPACE {
            return None;
        }
        basis.push(e);
        let olds: Vec<(ElemId, Vec<u8>)> = coord.iter().map(|(k, v)| (*k, v.clone())).collect();
        let mut nc = BTreeMap::new();
        let mut ne = BTreeMap::new();
        for k in 0..q {
            let scaled = s.apply(scalar(k), &[e])?;
            for (oe, oc) in &olds {
                let sum = s.apply(ADD, &[*oe, scaled])?;
                let mut c2 = oc.clone();
                c2.push(k);
                if nc.insert(sum, c2.clone()).is_some() {
                    return None; // span collapsed: dependent tables
                }
                ne.insert(c2, sum);
            }
        }
        coord = nc;
        elem_at = ne;
    }
    if coord.len() != s.size() {
        return None;
    }
    for (x, cx) in &coord {
        for k in 0..q {
            if s.apply(scalar(k), &[*x]) != elem_at.get(&field::vec_scale(q, k, cx)).copied() {
                return None;
            }
        }
        for (y, cy) in &coord {
            if s.apply(ADD, &[*x, *y]) != elem_at.get(&field::vec_add(q, cx, cy)).copied() {
                return None;
            }
        }
    }
    Some(Coords { basis, coord, elem_at })
}

/// The canonical GF(q)^d structure; element ids are lexicographic indices.
pub fn make_space(q: u8, sig: &Arc<Signature>, d: usize) -> FinStructure {
    let vectors = field::all_vectors(q, d);
    let id_of: BTreeMap<Vec<u8>, ElemId> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), ElemId::new(0, i as u32)))
        .collect();
    build_from_coords(q, sig, &id_of)
}

/// Assembles the structure whose carrier is the given coordinate → id map
/// (which must cover all of GF(q)^d), tables by coordinate arithmetic.
pub fn build_from_coords(
    q: u8,
    sig: &Arc<Signature>,
    id_of: &BTreeMap<Vec<u8>, ElemId>,
) -> FinStructure {
    let mut s = FinStructure::empty(sig.clone());
    for id in id_of.values() {
        s.add_elem(*id);
    }
    for (v, &x) in id_of {
        for k in 0..q {
            s.set_func(scalar(k), vec![x], id_of[&field::vec_scale(q, k, v)]);
        }
        for (w, &y) in id_of {
            s.set_func(ADD, vec![x, y], id_of[&field::vec_add(q, v, w)]);
        }
    }
    let d = id_of.keys().next().map_or(0, |v| v.len());
    s.set_func(zero_f(q), vec![], id_of[&vec![0u8; d]]);
    s
}

/// The prescribed core amalgam of a normalized span: the direct sum of the
/// legs over the base. Empty if either leg fails coordinatization or the
/// sum would exceed the carrier cap.
pub fn vs_close_union(
    q: u8,
    sig: &Arc<Signature>,
    b: &FinStructure,
    c: &FinStructure,
    a: &FinStructure,
) -> Vec<FinStructure> {
    let (Some(cb), Some(cc)) = (coordinatize(q, b), coordinatize(q, c)) else {
        return vec![];
    };
    let mut ech = Echelon::new(q);
    let mut basis_a = Vec::new();
    for e in a.elems() {
        if ech.insert(&cb.coord[&e]) {
            basis_a.push(e);
        }
    }
    let mut ext_b = Vec::new();
    for e in b.elems() {
        if ech.insert(&cb.coord[&e]) {
            ext_b.push(e);
        }
    }
    let mut ech_c = Echelon::new(q);
    for e in &basis_a {
        ech_c.insert(&cc.coord[e]);
    }
    let mut ext_c = Vec::new();
    for e in c.elems() {
        if ech_c.insert(&cc.coord[&e]) {
            ext_c.push(e);
        }
    }
    let (da, db, dc) = (basis_a.len(), ext_b.len(), ext_c.len());
    let d = da + db + dc;
    if (q as usize).pow(d as u32) > MAX_SPACE {
        return vec![];
    }
    let b_basis: Vec<Vec<u8>> =
        basis_a.iter().chain(&ext_b).map(|e| cb.coord[e].clone()).collect();
    let c_basis: Vec<Vec<u8>> =
        basis_a.iter().chain(&ext_c).map(|e| cc.coord[e].clone()).collect();
    let combo = |basis: &[Vec<u8>], coefs: &[u8], width: usize| -> Vec<u8> {
        let mut acc = vec![0u8; width];
        for (i, &k) in coefs.iter().enumerate() {
            acc = field::vec_add(q, &acc, &field::vec_scale(q, k, &basis[i]));
        }
        acc
    };
    let mut next = b.max_raw_id().max(c.max_raw_id()).saturating_add(1);
    let mut id_of: BTreeMap<Vec<u8>, ElemId> = BTreeMap::new();
    for w in field::all_vectors(q, d) {
        let (pa, rest) = w.split_at(da);
        let (pb, pc) = rest.split_at(db);
        let id = if pc.iter().all(|&x| x == 0) {
            let coefs: Vec<u8> = pa.iter().chain(pb).copied().collect();
            cb.elem_at[&combo(&b_basis, &coefs, cb.dim())]
        } else if pb.iter().all(|&x| x == 0) {
            let coefs: Vec<u8> = pa.iter().chain(pc).copied().collect();
            cc.elem_at[&combo(&c_basis, &coefs, cc.dim())]
        } else {
            let id = ElemId::new(0, next);
            next += 1;
            id
        };
        id_of.insert(w, id);
    }
    vec![build_from_coords(q, sig, &id_of)]
}

/// One-step extension: the direct sum with one fresh dimension.
pub fn vs_extend_dim(q: u8, s: &FinStructure) -> Option<FinStructure> {
    let cs = coordinatize(q, s)?;
    let d = cs.dim() + 1;
    if (q as usize).pow(d as u32) > MAX_SPACE {
        return None;
    }
    let mut next = s.max_raw_id().saturating_add(1);
    let mut id_of = BTreeMap::new();
    for w in field::all_vectors(q, d) {
        let (head, tail) = w.split_at(cs.dim());
        let id = if tail[0] == 0 {
            cs.elem_at[head]
        } else {
            let id = ElemId::new(0, next);
            next += 1;
            id
        };
        id_of.insert(w, id);
    }
    let mut out = build_from_coords(q, &s.sig, &id_of);
    for (r, _) in s.sig.rels().iter().enumerate() {
        for t in s.rel(r) {
            out.add_rel(r, t.clone());
        }
    }
    Some(out)
}

/// Distinct nonzero scalar multiples of x, i.e. x is independent of y iff
/// y is outside span{x}.
fn independent(q: u8, s: &FinStructure, zero: ElemId, x: ElemId, y: ElemId) -> bool {
    if x == zero || y == zero {
        return false;
    }
    (0..q).all(|k| s.apply(scalar(k), &[x]) != Some(y))
}

/// All 2-dimensional subspaces, each as its sorted carrier set.
fn planes(q: u8, s: &FinStructure) -> Vec<BTreeSet<ElemId>> {
    let Some(zero) = s.apply(zero_f(q), &[]) else { return vec![] };
    let elems: Vec<ElemId> = s.elems().collect();
    let mut seen = BTreeSet::new();
    for (i, &x) in elems.iter().enumerate() {
        for &y in &elems[i + 1..] {
            if !independent(q, s, zero, x, y) {
                continue;
            }
            let mut plane = BTreeSet::new();
            for j in 0..q {
                let xs = s.apply(scalar(j), &[x]).expect("total");
                for k in 0..q {
                    let ys = s.apply(scalar(k), &[y]).expect("total");
                    plane.insert(s.apply(ADD, &[xs, ys]).expect("total"));
                }
            }
            seen.insert(plane);
        }
    }
    seen.into_iter().collect()
}

/// Necessary orientation constraints, monotone under removing R-tuples:
/// R only on independent pairs, at most one R-pair per plane.
pub fn orientation_universal(q: u8, s: &FinStructure) -> bool {
    let Some(zero) = s.apply(zero_f(q), &[]) else { return false };
    if !s.rel(0).iter().all(|t| independent(q, s, zero, t[0], t[1])) {
        return false;
    }
    planes(q, s).iter().all(|p| count_oriented(s, p) <= 1)
}

fn count_oriented(s: &FinStructure, plane: &BTreeSet<ElemId>) -> usize {
    s.rel(0).iter().filter(|t| plane.contains(&t[0]) && plane.contains(&t[1])).count()
}

pub fn orientation_member(q: u8, s: &FinStructure) -> bool {
    if coordinatize(q, s).is_none() {
        return false;
    }
    let Some(zero) = s.apply(zero_f(q), &[]) else { return false };
    s.rel(0).iter().all(|t| independent(q, s, zero, t[0], t[1]))
        && planes(q, s).iter().all(|p| count_oriented(s, p) == 1)
}

/// Extends dimension by one and orients every new plane with its least
/// admissible ordered pair (deterministic member-preserving extension).
fn orientation_extend(q: u8, s: &FinStructure) -> Option<FinStructure> {
    let mut out = vs_extend_dim(q, s)?;
    let zero = out.apply(zero_f(q), &[])?;
    for plane in planes(q, &out) {
        if count_oriented(&out, &plane) > 0 {
            continue;
        }
        let pick = plane
            .iter()
            .flat_map(|&x| plane.iter().map(move |&y| (x, y)))
            .find(|&(x, y)| independent(q, &out, zero, x, y))?;
        out.add_rel(0, vec![pick.0, pick.1]);
    }
    Some(out)
}

pub fn make_vector_space_age(q: u8, oriented: bool) -> Result<AgeSpec, Error> {
    if !field::supported(q) {
        return Err(Error::Class(format!("unsupported field GF({q})")));
    }
    let sig = vs_sig(q, oriented);
    let subsig_age = if oriented {
        Some(Arc::new(make_vector_space_age(q, false)?))
    } else {
        None
    };
    let close_sig = subsig_age.as_ref().map(|a| a.sig.clone()).unwrap_or_else(|| sig.clone());
    let member: Box<dyn Fn(&FinStructure) -> bool + Send + Sync> = if oriented {
        Box::new(move |s| orientation_member(q, s))
    } else {
        Box::new(move |s| coordinatize(q, s).is_some())
    };
    let universal: Box<dyn Fn(&FinStructure) -> bool + Send + Sync> = if oriented {
        Box::new(move |s| orientation_universal(q, s))
    } else {
        Box::new(|_| true)
    };
    let enum_sig = sig.clone();
    let enumerate: Box<dyn Fn(EnumBound) -> Vec<FinStructure> + Send + Sync> = if oriented {
        Box::new(move |b| {
            let mut out: Vec<FinStructure> = (0..=b.generators.min(1))
                .map(|d| make_space(q, &enum_sig, d))
                .collect();
            if b.generators >= 2 {
                let plane = make_space(q, &enum_sig, 2);
                let zero = plane.apply(zero_f(q), &[]).expect("zero");
                let elems: Vec<ElemId> = plane.elems().collect();
                let mut oriented_planes = Vec::new();
                for &x in &elems {
                    for &y in &elems {
                        if independent(q, &plane, zero, x, y) {
                            let mut m = plane.clone();
                            m.add_rel(0, vec![x, y]);
                            if orientation_member(q, &m) {
                                oriented_planes.push(m);
                            }
                        }
                    }
                }
                out.extend(iso_classes(oriented_planes));
            }
            out
        })
    } else {
        Box::new(move |b| (0..=b.generators).map(|d| make_space(q, &enum_sig, d)).collect())
    };
    let extend: Box<dyn Fn(&FinStructure) -> Vec<FinStructure> + Send + Sync> = if oriented {
        Box::new(move |s| orientation_extend(q, s).into_iter().collect())
    } else {
        Box::new(move |s| vs_extend_dim(q, s).into_iter().collect())
    };
    Ok(AgeSpec {
        name: if oriented { format!("orientation-{q}") } else { format!("vector-space-{q}") },
        sig,
        bot: subsig_age,
        member,
        universal_ok: universal,
        enumerate,
        close_union: Box::new(move |b, c, a| vs_close_union(q, &close_sig, b, c, a)),
        tuple_orbit: Box::new(|_, t| vec![t.to_vec()]),
        extend_one: extend,
        dense_first: oriented,
    })
}

pub fn make_vector_space_class(q: u8, oriented: bool) -> Result<CatalogEntry, Error> {
    let age = make_vector_space_age(q, oriented)?;
    let name = age.name.clone();
    let mut params = BTreeMap::new();
    params.insert("q".into(), q.to_string());
    params.insert("oriented".into(), oriented.to_string());
    let sap_gens = if q == 4 { 1 } else { 2 };
    let expected = vec![
        ExpectedVerdict { check: Check::Hp(EnumBound::gens(2)), pass: true },
        ExpectedVerdict { check: Check::Jep(EnumBound::gens(sap_gens)), pass: true },
        ExpectedVerdict { check: Check::Sap(EnumBound::gens(sap_gens)), pass: true },
        ExpectedVerdict { check: Check::Esap(EnumBound::gens(sap_gens)), pass: true },
        ExpectedVerdict {
            check: Check::ChainUnion { size: (q as usize).pow(3), len: 3 },
            pass: true,
        },
    ];
    let scalar_funs: String = (0..q)
        .map(|k| format!("  (fun s{k} ((vec) -> vec))\n"))
        .collect();
    let dsl = if oriented {
        format!(
            "\
(signature ovs{q}
  (sorts vec)
  (rel R (vec vec))
  (fun add ((vec vec) -> vec))
{scalar_funs}  (const zero vec))
(signature vs{q}
  (sorts vec)
  (fun add ((vec vec) -> vec))
{scalar_funs}  (const zero vec))
(age {name}
  (over ovs{q})
  (sub vs{q})
  (constraints)
  (builtin {name}))
"
        )
    } else {
        format!(
            "\
(signature vs{q}
  (sorts vec)
  (fun add ((vec vec) -> vec))
{scalar_funs}  (const zero vec))
(age {name}
  (over vs{q})
  (constraints)
  (builtin {name}))
"
        )
    };
    Ok(CatalogEntry { name, params, age: Arc::new(age), expected, dsl })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_dim2_has_four_elements_and_is_member() {
        let k = make_vector_space_age(2, false).unwrap();
        let s = make_space(2, &k.sig, 2);
        assert_eq!(s.size(), 4);
        assert!(k.is_member(&s));
    }

    #[test]
    fn tdcl_of_two_generators_spans_the_plane() {
        let k = make_vector_space_age(2, false).unwrap();
        let s = make_space(2, &k.sig, 2);
        // Elements 1 = (0,1) and 2 = (1,0) generate everything.
        let seed = [ElemId::new(0, 1), ElemId::new(0, 2)].into_iter().collect();
        assert_eq!(s.tdcl(&seed).len(), 4);
        // A single generator over GF(3) spans a 3-element line.
        let k3 = make_vector_space_age(3, false).unwrap();
        let l = make_space(3, &k3.sig, 1);
        let seed1 = [ElemId::new(0, 1)].into_iter().collect();
        assert_eq!(l.tdcl(&seed1).len(), 3);
    }

    #[test]
    fn broken_linearity_is_rejected() {
        let k = make_vector_space_age(2, false).unwrap();
        let mut s = make_space(2, &k.sig, 2);
        // Corrupt one add entry: swap add(e1,e2).
        let e1 = ElemId::new(0, 1);
        let e2 = ElemId::new(0, 2);
        s.set_func(ADD, vec![e1, e2], e1);
        assert!(!k.is_member(&s));
    }

    #[test]
    fn close_union_is_direct_sum() {
        let k = make_vector_space_age(2, false).unwrap();
        let b = make_space(2, &k.sig, 1);
        let zero_sub = b.generated_sub(&Default::default());
        // Second line with fresh nonzero point, sharing only zero.
        let c = b.clone();
        let old = ElemId::new(0, 1);
        let fresh = ElemId::new(0, 9);
        let mut rename = BTreeMap::new();
        rename.insert(ElemId::new(0, 0), ElemId::new(0, 0));
        rename.insert(old, fresh);
        let c = c.rename(&rename);
        let d = vs_close_union(2, &k.sig, &b, &c, &zero_sub);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].size(), 4);
        assert!(k.is_member(&d[0]));
        assert!(b.is_substructure_of(&d[0]));
        assert!(c.is_substructure_of(&d[0]));
    }

    #[test]
    fn gf2_plane_has_six_automorphisms_over_core() {
        let k = make_vector_space_age(2, false).unwrap();
        let s = make_space(2, &k.sig, 2);
        let autos = crate::model::automorphisms(&s, 100_000).unwrap();
        assert_eq!(autos.len(), 6);
    }

    #[test]
    fn orientation_member_examples() {
        let k = make_vector_space_age(2, true).unwrap();
        let members = k.enumerate(EnumBound::gens(2));
        // dims 0, 1, and the single oriented plane up to isomorphism.
        assert_eq!(members.len(), 3);
        let plane = members.last().unwrap();
        assert!(k.is_member(plane));
        assert_eq!(plane.rel(0).len(), 1);
        // A second oriented pair in the same plane breaks membership.
        let mut bad = plane.clone();
        let t = bad.rel(0).iter().next().unwrap().clone();
        bad.add_rel(0, vec![t[1], t[0]]);
        assert!(!k.is_member(&bad));
        // No oriented pair also breaks membership.
        let mut none = plane.clone();
        none.remove_rel(0, &t);
        assert!(!k.is_member(&none));
    }

    #[test]
    fn orientation_extension_stays_in_class() {
        let k = make_vector_space_age(2, true).unwrap();
        let plane = k.enumerate(EnumBound::gens(2)).pop().unwrap();
        let ext = (k.extend_one)(&plane);
        assert_eq!(ext.len(), 1);
        assert_eq!(ext[0].size(), 8);
        assert!(k.is_member(&ext[0]));
        assert!(plane.is_substructure_of(&ext[0]));
    }
}
