//! Multi-sorted vocabularies: sorts, relation symbols, and function symbols
//! with sort-typed arities. Constants are 0-ary functions.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::Error;

pub type SortId = usize;
pub type RelId = usize;
pub type FuncId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelDecl {
    pub name: String,
    /// Nonempty sequence of argument sorts.
    pub arity: Vec<SortId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: String,
    /// Possibly empty (a constant).
    pub domain: Vec<SortId>,
    pub codomain: SortId,
}

/// A finite multi-sorted signature. Symbol order is fixed at construction
/// and drives every enumeration in the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    sorts: Vec<String>,
    rels: Vec<RelDecl>,
    funcs: Vec<FuncDecl>,
}

/// Witness that one signature is contained in another, componentwise by name.
#[derive(Debug, Clone)]
pub struct SigEmbedding {
    /// sub sort id -> super sort id
    pub sort_map: Vec<SortId>,
    /// sub rel id -> super rel id
    pub rel_map: Vec<RelId>,
    /// sub func id -> super func id
    pub func_map: Vec<FuncId>,
}

impl Signature {
    pub fn new(
        sorts: Vec<String>,
        rels: Vec<(String, Vec<String>)>,
        funcs: Vec<(String, Vec<String>, String)>,
    ) -> Result<Signature, Error> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for s in &sorts {
            if !seen.insert(s.as_str()) {
                return Err(Error::Signature(format!("duplicate name `{s}`")));
            }
        }
        for (r, _) in &rels {
            if !seen.insert(r.as_str()) {
                return Err(Error::Signature(format!("duplicate name `{r}`")));
            }
        }
        for (f, _, _) in &funcs {
            if !seen.insert(f.as_str()) {
                return Err(Error::Signature(format!("duplicate name `{f}`")));
            }
        }
        let sort_id = |name: &str| -> Result<SortId, Error> {
            sorts
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::Signature(format!("undeclared sort `{name}`")))
        };
        let mut rd = Vec::new();
        for (name, ar) in rels {
            if ar.is_empty() {
                return Err(Error::Signature(format!("relation `{name}` has empty arity")));
            }
            let arity = ar.iter().map(|s| sort_id(s)).collect::<Result<_, _>>()?;
            rd.push(RelDecl { name, arity });
        }
        let mut fd = Vec::new();
        for (name, dom, cod) in funcs {
            let domain = dom.iter().map(|s| sort_id(s)).collect::<Result<_, _>>()?;
            let codomain = sort_id(&cod)?;
            fd.push(FuncDecl { name, domain, codomain });
        }
        Ok(Signature { sorts, rels: rd, funcs: fd })
    }

    pub fn empty(sort: &str) -> Arc<Signature> {
        Arc::new(Signature::new(vec![sort.to_string()], vec![], vec![]).unwrap())
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }

    pub fn rels(&self) -> &[RelDecl] {
        &self.rels
    }

    pub fn funcs(&self) -> &[FuncDecl] {
        &self.funcs
    }

    pub fn sort_id(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s == name)
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.rels.iter().position(|r| r.name == name)
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.funcs.iter().position(|f| f.name == name)
    }

    /// Componentwise containment by name, with matching arities.
    pub fn embedding_into(&self, sup: &Signature) -> Option<SigEmbedding> {
        let mut sort_map = Vec::with_capacity(self.sorts.len());
        for s in &self.sorts {
            sort_map.push(sup.sort_id(s)?);
        }
        let mut rel_map = Vec::with_capacity(self.rels.len());
        for r in &self.rels {
            let id = sup.rel_id(&r.name)?;
            let mapped: Vec<SortId> = r.arity.iter().map(|&s| sort_map[s]).collect();
            if sup.rels[id].arity != mapped {
                return None;
            }
            rel_map.push(id);
        }
        let mut func_map = Vec::with_capacity(self.funcs.len());
        for f in &self.funcs {
            let id = sup.func_id(&f.name)?;
            let dom: Vec<SortId> = f.domain.iter().map(|&s| sort_map[s]).collect();
            if sup.funcs[id].domain != dom || sup.funcs[id].codomain != sort_map[f.codomain] {
                return None;
            }
            func_map.push(id);
        }
        Some(SigEmbedding { sort_map, rel_map, func_map })
    }

    pub fn is_subsignature_of(&self, sup: &Signature) -> bool {
        self.embedding_into(sup).is_some()
    }

    pub fn is_relational(&self) -> bool {
        self.funcs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_sig() -> Signature {
        Signature::new(
            vec!["node".into()],
            vec![],
            vec![("p".into(), vec!["node".into()], "node".into()), ("r".into(), vec![], "node".into())],
        )
        .unwrap()
    }

    #[test]
    fn subsignature_componentwise() {
        let bot = tree_sig();
        let full = Signature::new(
            vec!["node".into()],
            vec![("R".into(), vec!["node".into(), "node".into()])],
            vec![("p".into(), vec!["node".into()], "node".into()), ("r".into(), vec![], "node".into())],
        )
        .unwrap();
        assert!(bot.is_subsignature_of(&full));
        assert!(!full.is_subsignature_of(&bot));
        assert!(bot.is_subsignature_of(&bot));
    }

    #[test]
    fn name_spaces_disjoint() {
        let bad = Signature::new(
            vec!["a".into()],
            vec![("a".into(), vec!["a".into()])],
            vec![],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn arity_mismatch_blocks_containment() {
        let uni = Signature::new(vec!["v".into()], vec![("R".into(), vec!["v".into()])], vec![]).unwrap();
        let bin =
            Signature::new(vec!["v".into()], vec![("R".into(), vec!["v".into(), "v".into()])], vec![]).unwrap();
        assert!(!uni.is_subsignature_of(&bin));
    }
}
