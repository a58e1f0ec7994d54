//! The definition-file language: signatures, structures, ages (universal
//! clauses plus a builtin escape hatch for classes whose search hooks cannot
//! be derived from constraints), families of element sets, and condition
//! lists. Every parser reports diagnostics with source spans; every printer
//! emits text the parsers accept back.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::age::{AgeSpec, EnumBound};
use crate::io::sexp::{self, DiagCode, Diagnostic, Sexp, Span};
use crate::model::{ElemId, FinStructure, FuncId, RelId, Signature, SortId};

fn expect_list<'a>(form: &'a Sexp, what: &str) -> Result<&'a [Sexp], Diagnostic> {
    form.as_list()
        .ok_or_else(|| Diagnostic::new(DiagCode::Syntax, form.span(), format!("expected {what}")))
}

fn expect_atom<'a>(form: &'a Sexp, what: &str) -> Result<&'a str, Diagnostic> {
    form.as_atom()
        .ok_or_else(|| Diagnostic::new(DiagCode::Syntax, form.span(), format!("expected {what}")))
}

fn clause_body<'a>(form: &'a Sexp, head: &str) -> Result<&'a [Sexp], Diagnostic> {
    let items = expect_list(form, &format!("({head} ...)"))?;
    match items.first().and_then(|h| h.as_atom()) {
        Some(h) if h == head => Ok(&items[1..]),
        _ => Err(Diagnostic::new(DiagCode::Syntax, form.span(), format!("expected ({head} ...)"))),
    }
}

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

/// `(signature NAME (sorts s…) (rel R (s…))* (fun f ((s…) -> s))* (const c s)*)`
pub fn parse_signature(form: &Sexp) -> Result<(String, Arc<Signature>), Diagnostic> {
    let body = clause_body(form, "signature")?;
    let [name_form, rest @ ..] = body else {
        return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "signature needs a name"));
    };
    let name = expect_atom(name_form, "a signature name")?.to_string();
    let mut sorts: Vec<String> = Vec::new();
    let mut rels: Vec<(String, Vec<String>)> = Vec::new();
    let mut funcs: Vec<(String, Vec<String>, String)> = Vec::new();
    let sort_known = |sorts: &[String], s: &Sexp| -> Result<String, Diagnostic> {
        let n = expect_atom(s, "a sort name")?;
        if !sorts.iter().any(|x| x == n) {
            return Err(Diagnostic::new(
                DiagCode::Undeclared,
                s.span(),
                format!("undeclared sort `{n}`"),
            ));
        }
        Ok(n.to_string())
    };
    for clause in rest {
        match clause.head() {
            Some("sorts") => {
                for s in &expect_list(clause, "(sorts ...)")?[1..] {
                    sorts.push(expect_atom(s, "a sort name")?.to_string());
                }
            }
            Some("rel") => {
                let body = clause_body(clause, "rel")?;
                let [rname, arity] = body else {
                    return Err(Diagnostic::new(
                        DiagCode::Syntax,
                        clause.span(),
                        "expected (rel NAME (sorts…))",
                    ));
                };
                let rname = expect_atom(rname, "a relation name")?.to_string();
                let arity = expect_list(arity, "an argument sort list")?
                    .iter()
                    .map(|s| sort_known(&sorts, s))
                    .collect::<Result<Vec<_>, _>>()?;
                rels.push((rname, arity));
            }
            Some("fun") => {
                let body = clause_body(clause, "fun")?;
                let [fname, ty] = body else {
                    return Err(Diagnostic::new(
                        DiagCode::Syntax,
                        clause.span(),
                        "expected (fun NAME ((sorts…) -> sort))",
                    ));
                };
                let fname = expect_atom(fname, "a function name")?.to_string();
                let ty = expect_list(ty, "a function type ((sorts…) -> sort)")?;
                let [dom, arrow, cod] = ty else {
                    return Err(Diagnostic::new(
                        DiagCode::Syntax,
                        clause.span(),
                        "expected ((sorts…) -> sort)",
                    ));
                };
                if arrow.as_atom() != Some("->") {
                    return Err(Diagnostic::new(DiagCode::Syntax, arrow.span(), "expected `->`"));
                }
                let dom = expect_list(dom, "an argument sort list")?
                    .iter()
                    .map(|s| sort_known(&sorts, s))
                    .collect::<Result<Vec<_>, _>>()?;
                let cod = sort_known(&sorts, cod)?;
                funcs.push((fname, dom, cod));
            }
            Some("const") => {
                let body = clause_body(clause, "const")?;
                let [cname, csort] = body else {
                    return Err(Diagnostic::new(
                        DiagCode::Syntax,
                        clause.span(),
                        "expected (const NAME sort)",
                    ));
                };
                let cname = expect_atom(cname, "a constant name")?.to_string();
                let csort = sort_known(&sorts, csort)?;
                funcs.push((cname, vec![], csort));
            }
            _ => {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    clause.span(),
                    "expected (sorts …), (rel …), (fun …) or (const …)",
                ))
            }
        }
    }
    let sig = Signature::new(sorts, rels, funcs)
        .map_err(|e| Diagnostic::new(DiagCode::Undeclared, form.span(), e.to_string()))?;
    Ok((name, Arc::new(sig)))
}

pub fn signature_sexp(name: &str, sig: &Signature) -> Sexp {
    let mut items = vec![Sexp::atom("signature"), Sexp::atom(name)];
    let mut sorts = vec![Sexp::atom("sorts")];
    sorts.extend(sig.sorts().iter().map(Sexp::atom));
    items.push(Sexp::list(sorts));
    for r in sig.rels() {
        items.push(Sexp::list(vec![
            Sexp::atom("rel"),
            Sexp::atom(&r.name),
            Sexp::list(r.arity.iter().map(|&s| Sexp::atom(&sig.sorts()[s])).collect()),
        ]));
    }
    for f in sig.funcs() {
        if f.domain.is_empty() {
            items.push(Sexp::list(vec![
                Sexp::atom("const"),
                Sexp::atom(&f.name),
                Sexp::atom(&sig.sorts()[f.codomain]),
            ]));
        } else {
            items.push(Sexp::list(vec![
                Sexp::atom("fun"),
                Sexp::atom(&f.name),
                Sexp::list(vec![
                    Sexp::list(f.domain.iter().map(|&s| Sexp::atom(&sig.sorts()[s])).collect()),
                    Sexp::atom("->"),
                    Sexp::atom(&sig.sorts()[f.codomain]),
                ]),
            ]));
        }
    }
    Sexp::list(items)
}

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

/// A parsed structure together with its element-name table.
pub struct NamedStructure {
    pub structure: FinStructure,
    pub names: BTreeMap<String, ElemId>,
}

/// `(structure (over SIG)? (carrier s (names…))* (fun f ((args…) val))*
///  (rel R ((tuple…)…))*)`
///
/// With `(over SIG)` the named signature (from `sigs`) is used; without it
/// a signature is inferred: carriers declare sorts, symbols get the arity
/// of their first occurrence. Elements must be declared by a carrier clause
/// either way.
pub fn parse_structure(
    form: &Sexp,
    sigs: &BTreeMap<String, Arc<Signature>>,
) -> Result<NamedStructure, Diagnostic> {
    let body = clause_body(form, "structure")?;
    let mut over: Option<Arc<Signature>> = None;
    let mut clauses: Vec<&Sexp> = Vec::new();
    for clause in body {
        if clause.head() == Some("over") {
            let b = clause_body(clause, "over")?;
            let [sig_name] = b else {
                return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (over SIG)"));
            };
            let n = expect_atom(sig_name, "a signature name")?;
            over = Some(sigs.get(n).cloned().ok_or_else(|| {
                Diagnostic::new(DiagCode::Undeclared, sig_name.span(), format!("undeclared signature `{n}`"))
            })?);
        } else {
            clauses.push(clause);
        }
    }
    let sig = match over {
        Some(sig) => sig,
        None => infer_signature(&clauses)?,
    };
    // Carrier pass: name the elements.
    let mut names: BTreeMap<String, ElemId> = BTreeMap::new();
    let mut next: Vec<u32> = vec![0; sig.sorts().len()];
    let mut s = FinStructure::empty(sig.clone());
    for clause in &clauses {
        if clause.head() != Some("carrier") {
            continue;
        }
        let body = clause_body(clause, "carrier")?;
        let [sort_form, elems] = body else {
            return Err(Diagnostic::new(
                DiagCode::Syntax,
                clause.span(),
                "expected (carrier sort (names…))",
            ));
        };
        let sort_name = expect_atom(sort_form, "a sort name")?;
        let sort: SortId = sig.sort_id(sort_name).ok_or_else(|| {
            Diagnostic::new(DiagCode::Undeclared, sort_form.span(), format!("undeclared sort `{sort_name}`"))
        })?;
        for e in expect_list(elems, "an element name list")? {
            let name = expect_atom(e, "an element name")?;
            if names.contains_key(name) {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    e.span(),
                    format!("element `{name}` declared twice"),
                ));
            }
            let id = ElemId::new(sort, next[sort]);
            next[sort] += 1;
            names.insert(name.to_string(), id);
            s.add_elem(id);
        }
    }
    let elem = |names: &BTreeMap<String, ElemId>, e: &Sexp| -> Result<ElemId, Diagnostic> {
        let n = expect_atom(e, "an element name")?;
        names.get(n).copied().ok_or_else(|| {
            Diagnostic::new(DiagCode::Undeclared, e.span(), format!("undeclared element `{n}`"))
        })
    };
    for clause in &clauses {
        match clause.head() {
            Some("carrier") => {}
            Some("fun") => {
                let body = clause_body(clause, "fun")?;
                let [fname, entries @ ..] = body else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (fun NAME entries…)"));
                };
                let n = expect_atom(fname, "a function name")?;
                let f: FuncId = sig.func_id(n).ok_or_else(|| {
                    Diagnostic::new(DiagCode::Undeclared, fname.span(), format!("undeclared function `{n}`"))
                })?;
                let decl = &sig.funcs()[f];
                for entry in entries {
                    let pair = expect_list(entry, "a ((args…) value) entry")?;
                    let [args_form, val_form] = pair else {
                        return Err(Diagnostic::new(
                            DiagCode::Syntax,
                            entry.span(),
                            "expected ((args…) value)",
                        ));
                    };
                    let args_list = expect_list(args_form, "an argument list")?;
                    if args_list.len() != decl.domain.len() {
                        return Err(Diagnostic::new(
                            DiagCode::Arity,
                            args_form.span(),
                            format!(
                                "function `{n}` takes {} arguments, got {}",
                                decl.domain.len(),
                                args_list.len()
                            ),
                        ));
                    }
                    let mut args = Vec::with_capacity(args_list.len());
                    for (pos, a) in args_list.iter().enumerate() {
                        let id = elem(&names, a)?;
                        if id.sort != decl.domain[pos] {
                            return Err(Diagnostic::new(
                                DiagCode::IllSorted,
                                a.span(),
                                format!(
                                    "argument {} of `{n}` must have sort `{}`",
                                    pos + 1,
                                    sig.sorts()[decl.domain[pos]]
                                ),
                            ));
                        }
                        args.push(id);
                    }
                    let val = elem(&names, val_form)?;
                    if val.sort != decl.codomain {
                        return Err(Diagnostic::new(
                            DiagCode::IllSorted,
                            val_form.span(),
                            format!("value of `{n}` must have sort `{}`", sig.sorts()[decl.codomain]),
                        ));
                    }
                    s.set_func(f, args, val);
                }
            }
            Some("rel") => {
                let body = clause_body(clause, "rel")?;
                let [rname, tuples] = body else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (rel NAME (tuples…))"));
                };
                let n = expect_atom(rname, "a relation name")?;
                let r: RelId = sig.rel_id(n).ok_or_else(|| {
                    Diagnostic::new(DiagCode::Undeclared, rname.span(), format!("undeclared relation `{n}`"))
                })?;
                let decl = &sig.rels()[r];
                for t in expect_list(tuples, "a tuple list")? {
                    let parts = expect_list(t, "a tuple")?;
                    if parts.len() != decl.arity.len() {
                        return Err(Diagnostic::new(
                            DiagCode::Arity,
                            t.span(),
                            format!("relation `{n}` has arity {}, got {}", decl.arity.len(), parts.len()),
                        ));
                    }
                    let mut tuple = Vec::with_capacity(parts.len());
                    for (pos, p) in parts.iter().enumerate() {
                        let id = elem(&names, p)?;
                        if id.sort != decl.arity[pos] {
                            return Err(Diagnostic::new(
                                DiagCode::IllSorted,
                                p.span(),
                                format!(
                                    "position {} of `{n}` must have sort `{}`",
                                    pos + 1,
                                    sig.sorts()[decl.arity[pos]]
                                ),
                            ));
                        }
                        tuple.push(id);
                    }
                    s.add_rel(r, tuple);
                }
            }
            _ => {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    clause.span(),
                    "expected (carrier …), (fun …) or (rel …)",
                ))
            }
        }
    }
    Ok(NamedStructure { structure: s, names })
}

/// Signature inference for standalone structures: carriers declare sorts in
/// order, symbols take the shape of their first occurrence.
fn infer_signature(clauses: &[&Sexp]) -> Result<Arc<Signature>, Diagnostic> {
    let mut sorts: Vec<String> = Vec::new();
    let mut elem_sort: BTreeMap<String, String> = BTreeMap::new();
    for clause in clauses {
        if clause.head() != Some("carrier") {
            continue;
        }
        let body = clause_body(clause, "carrier")?;
        let [sort_form, elems] = body else {
            return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (carrier sort (names…))"));
        };
        let sort = expect_atom(sort_form, "a sort name")?.to_string();
        if !sorts.contains(&sort) {
            sorts.push(sort.clone());
        }
        for e in expect_list(elems, "an element name list")? {
            elem_sort.insert(expect_atom(e, "an element name")?.to_string(), sort.clone());
        }
    }
    let sort_of = |e: &Sexp| -> Result<String, Diagnostic> {
        let n = expect_atom(e, "an element name")?;
        elem_sort.get(n).cloned().ok_or_else(|| {
            Diagnostic::new(DiagCode::Undeclared, e.span(), format!("undeclared element `{n}`"))
        })
    };
    let mut rels: Vec<(String, Vec<String>)> = Vec::new();
    let mut funcs: Vec<(String, Vec<String>, String)> = Vec::new();
    for clause in clauses {
        match clause.head() {
            Some("fun") => {
                let body = clause_body(clause, "fun")?;
                let [fname, entries @ ..] = body else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (fun NAME entries…)"));
                };
                let n = expect_atom(fname, "a function name")?;
                if funcs.iter().any(|(f, _, _)| f == n) {
                    continue;
                }
                let Some(first) = entries.first() else { continue };
                let pair = expect_list(first, "a ((args…) value) entry")?;
                let [args_form, val_form] = pair else {
                    return Err(Diagnostic::new(DiagCode::Syntax, first.span(), "expected ((args…) value)"));
                };
                let dom = expect_list(args_form, "an argument list")?
                    .iter()
                    .map(sort_of)
                    .collect::<Result<Vec<_>, _>>()?;
                let cod = sort_of(val_form)?;
                funcs.push((n.to_string(), dom, cod));
            }
            Some("rel") => {
                let body = clause_body(clause, "rel")?;
                let [rname, tuples] = body else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (rel NAME (tuples…))"));
                };
                let n = expect_atom(rname, "a relation name")?;
                if rels.iter().any(|(r, _)| r == n) {
                    continue;
                }
                let Some(first) = expect_list(tuples, "a tuple list")?.first() else { continue };
                let arity = expect_list(first, "a tuple")?
                    .iter()
                    .map(sort_of)
                    .collect::<Result<Vec<_>, _>>()?;
                rels.push((n.to_string(), arity));
            }
            _ => {}
        }
    }
    Signature::new(sorts, rels, funcs)
        .map(Arc::new)
        .map_err(|e| Diagnostic::new(DiagCode::Undeclared, Span::start(), e.to_string()))
}

/// Stable printable names for a structure's elements: `{sort}{raw-id}`.
pub fn element_names(s: &FinStructure) -> BTreeMap<ElemId, String> {
    s.elems().map(|e| (e, format!("{}{}", s.sig.sorts()[e.sort], e.id))).collect()
}

pub fn structure_sexp(s: &FinStructure, over: Option<&str>) -> Sexp {
    let names = element_names(s);
    let mut items = vec![Sexp::atom("structure")];
    if let Some(sig_name) = over {
        items.push(Sexp::list(vec![Sexp::atom("over"), Sexp::atom(sig_name)]));
    }
    for (sort, sort_name) in s.sig.sorts().iter().enumerate() {
        if s.carrier(sort).is_empty() {
            continue;
        }
        items.push(Sexp::list(vec![
            Sexp::atom("carrier"),
            Sexp::atom(sort_name),
            Sexp::list(s.carrier(sort).iter().map(|e| Sexp::atom(&names[e])).collect()),
        ]));
    }
    for (f, decl) in s.sig.funcs().iter().enumerate() {
        if s.func(f).is_empty() {
            continue;
        }
        let mut entry = vec![Sexp::atom("fun"), Sexp::atom(&decl.name)];
        for (args, val) in s.func(f) {
            entry.push(Sexp::list(vec![
                Sexp::list(args.iter().map(|a| Sexp::atom(&names[a])).collect()),
                Sexp::atom(&names[val]),
            ]));
        }
        items.push(Sexp::list(entry));
    }
    for (r, decl) in s.sig.rels().iter().enumerate() {
        if s.rel(r).is_empty() {
            continue;
        }
        items.push(Sexp::list(vec![
            Sexp::atom("rel"),
            Sexp::atom(&decl.name),
            Sexp::list(
                s.rel(r)
                    .iter()
                    .map(|t| Sexp::list(t.iter().map(|e| Sexp::atom(&names[e])).collect()))
                    .collect(),
            ),
        ]));
    }
    Sexp::list(items)
}

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Term {
    Var(usize),
    App(FuncId, Vec<Term>),
}

#[derive(Debug, Clone)]
enum Formula {
    True,
    False,
    Rel(RelId, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

#[derive(Debug, Clone)]
struct Clause {
    binders: Vec<SortId>,
    hyp: Formula,
    concl: Formula,
}

fn term_sort(sig: &Signature, vars: &[SortId], t: &Term) -> SortId {
    match t {
        Term::Var(i) => vars[*i],
        Term::App(f, _) => sig.funcs()[*f].codomain,
    }
}

fn parse_term(
    form: &Sexp,
    sig: &Signature,
    vars: &BTreeMap<String, (usize, SortId)>,
) -> Result<Term, Diagnostic> {
    match form {
        Sexp::Atom { text, span } => match vars.get(text.as_str()) {
            Some(&(i, _)) => Ok(Term::Var(i)),
            None => match sig.func_id(text) {
                // A bare constant name.
                Some(f) if sig.funcs()[f].domain.is_empty() => Ok(Term::App(f, vec![])),
                _ => Err(Diagnostic::new(
                    DiagCode::Undeclared,
                    *span,
                    format!("undeclared variable `{text}`"),
                )),
            },
        },
        Sexp::List { items, span } => {
            let [head, args @ ..] = items.as_slice() else {
                return Err(Diagnostic::new(DiagCode::Syntax, *span, "empty term"));
            };
            let n = expect_atom(head, "a function name")?;
            let f = sig.func_id(n).ok_or_else(|| {
                Diagnostic::new(DiagCode::Undeclared, head.span(), format!("undeclared function `{n}`"))
            })?;
            let decl = &sig.funcs()[f];
            if args.len() != decl.domain.len() {
                return Err(Diagnostic::new(
                    DiagCode::Arity,
                    *span,
                    format!("function `{n}` takes {} arguments, got {}", decl.domain.len(), args.len()),
                ));
            }
            let parsed =
                args.iter().map(|a| parse_term(a, sig, vars)).collect::<Result<Vec<_>, _>>()?;
            let var_sorts: Vec<SortId> = {
                let mut v = vec![0; vars.len()];
                for &(i, s) in vars.values() {
                    v[i] = s;
                }
                v
            };
            for (pos, p) in parsed.iter().enumerate() {
                if term_sort(sig, &var_sorts, p) != decl.domain[pos] {
                    return Err(Diagnostic::new(
                        DiagCode::IllSorted,
                        args[pos].span(),
                        format!(
                            "argument {} of `{n}` must have sort `{}`",
                            pos + 1,
                            sig.sorts()[decl.domain[pos]]
                        ),
                    ));
                }
            }
            Ok(Term::App(f, parsed))
        }
    }
}

fn parse_formula(
    form: &Sexp,
    sig: &Signature,
    vars: &BTreeMap<String, (usize, SortId)>,
) -> Result<Formula, Diagnostic> {
    if let Some(text) = form.as_atom() {
        return match text {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            _ => Err(Diagnostic::new(
                DiagCode::Syntax,
                form.span(),
                format!("expected a formula, got `{text}`"),
            )),
        };
    }
    let items = expect_list(form, "a formula")?;
    let [head, rest @ ..] = items else {
        return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "empty formula"));
    };
    match head.as_atom() {
        Some("rel") => {
            let [rname, args @ ..] = rest else {
                return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "expected (rel NAME terms…)"));
            };
            let n = expect_atom(rname, "a relation name")?;
            let r = sig.rel_id(n).ok_or_else(|| {
                Diagnostic::new(DiagCode::Undeclared, rname.span(), format!("undeclared relation `{n}`"))
            })?;
            let decl = &sig.rels()[r];
            if args.len() != decl.arity.len() {
                return Err(Diagnostic::new(
                    DiagCode::Arity,
                    form.span(),
                    format!("relation `{n}` has arity {}, got {}", decl.arity.len(), args.len()),
                ));
            }
            let parsed =
                args.iter().map(|a| parse_term(a, sig, vars)).collect::<Result<Vec<_>, _>>()?;
            let var_sorts: Vec<SortId> = {
                let mut v = vec![0; vars.len()];
                for &(i, s) in vars.values() {
                    v[i] = s;
                }
                v
            };
            for (pos, p) in parsed.iter().enumerate() {
                if term_sort(sig, &var_sorts, p) != decl.arity[pos] {
                    return Err(Diagnostic::new(
                        DiagCode::IllSorted,
                        args[pos].span(),
                        format!(
                            "position {} of `{n}` must have sort `{}`",
                            pos + 1,
                            sig.sorts()[decl.arity[pos]]
                        ),
                    ));
                }
            }
            Ok(Formula::Rel(r, parsed))
        }
        Some("=") => {
            let [a, b] = rest else {
                return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "expected (= t1 t2)"));
            };
            let ta = parse_term(a, sig, vars)?;
            let tb = parse_term(b, sig, vars)?;
            let var_sorts: Vec<SortId> = {
                let mut v = vec![0; vars.len()];
                for &(i, s) in vars.values() {
                    v[i] = s;
                }
                v
            };
            if term_sort(sig, &var_sorts, &ta) != term_sort(sig, &var_sorts, &tb) {
                return Err(Diagnostic::new(
                    DiagCode::IllSorted,
                    form.span(),
                    "equated terms have different sorts",
                ));
            }
            Ok(Formula::Eq(ta, tb))
        }
        Some("not") => {
            let [a] = rest else {
                return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "expected (not f)"));
            };
            Ok(Formula::Not(Box::new(parse_formula(a, sig, vars)?)))
        }
        Some("and") => Ok(Formula::And(
            rest.iter().map(|f| parse_formula(f, sig, vars)).collect::<Result<_, _>>()?,
        )),
        Some("or") => Ok(Formula::Or(
            rest.iter().map(|f| parse_formula(f, sig, vars)).collect::<Result<_, _>>()?,
        )),
        _ => Err(Diagnostic::new(
            DiagCode::Syntax,
            head.span(),
            "expected rel, =, not, and, or",
        )),
    }
}

fn parse_clause(form: &Sexp, sig: &Signature) -> Result<Clause, Diagnostic> {
    let body = clause_body(form, "forall")?;
    let [binder_form, impl_form] = body else {
        return Err(Diagnostic::new(
            DiagCode::Syntax,
            form.span(),
            "expected (forall ((x sort)…) (=> hyp concl))",
        ));
    };
    let mut vars: BTreeMap<String, (usize, SortId)> = BTreeMap::new();
    let mut binders: Vec<SortId> = Vec::new();
    for b in expect_list(binder_form, "a binder list")? {
        let pair = expect_list(b, "an (x sort) binder")?;
        let [v, sort_form] = pair else {
            return Err(Diagnostic::new(DiagCode::Syntax, b.span(), "expected (x sort)"));
        };
        let vname = expect_atom(v, "a variable name")?;
        let sort_name = expect_atom(sort_form, "a sort name")?;
        let sort = sig.sort_id(sort_name).ok_or_else(|| {
            Diagnostic::new(DiagCode::Undeclared, sort_form.span(), format!("undeclared sort `{sort_name}`"))
        })?;
        vars.insert(vname.to_string(), (binders.len(), sort));
        binders.push(sort);
    }
    let impl_body = clause_body(impl_form, "=>")?;
    let [hyp_form, concl_form] = impl_body else {
        return Err(Diagnostic::new(DiagCode::Syntax, impl_form.span(), "expected (=> hyp concl)"));
    };
    let hyp = parse_formula(hyp_form, sig, &vars)?;
    let concl = parse_formula(concl_form, sig, &vars)?;
    Ok(Clause { binders, hyp, concl })
}

fn eval_term(s: &FinStructure, env: &[ElemId], t: &Term) -> Option<ElemId> {
    match t {
        Term::Var(i) => Some(env[*i]),
        Term::App(f, args) => {
            let vals: Option<Vec<ElemId>> = args.iter().map(|a| eval_term(s, env, a)).collect();
            s.apply(*f, &vals?)
        }
    }
}

/// Three-valued only in that an undefined subterm satisfies any literal's
/// clause (partial stages cannot falsify an equation they cannot evaluate).
fn eval_formula(s: &FinStructure, env: &[ElemId], f: &Formula) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Rel(r, args) => {
            let vals: Option<Vec<ElemId>> = args.iter().map(|a| eval_term(s, env, a)).collect();
            Some(s.holds(*r, &vals?))
        }
        Formula::Eq(a, b) => Some(eval_term(s, env, a)? == eval_term(s, env, b)?),
        Formula::Not(g) => eval_formula(s, env, g).map(|v| !v),
        Formula::And(gs) => {
            let mut all = Some(true);
            for g in gs {
                match eval_formula(s, env, g) {
                    Some(false) => return Some(false),
                    Some(true) => {}
                    None => all = None,
                }
            }
            all
        }
        Formula::Or(gs) => {
            let mut any = Some(false);
            for g in gs {
                match eval_formula(s, env, g) {
                    Some(true) => return Some(true),
                    Some(false) => {}
                    None => any = None,
                }
            }
            any
        }
    }
}

fn clause_holds(s: &FinStructure, c: &Clause) -> bool {
    let mut env: Vec<ElemId> = Vec::with_capacity(c.binders.len());
    fn rec(s: &FinStructure, c: &Clause, env: &mut Vec<ElemId>) -> bool {
        if env.len() == c.binders.len() {
            let hyp = eval_formula(s, env, &c.hyp);
            let concl = eval_formula(s, env, &c.concl);
            return match (hyp, concl) {
                (Some(true), Some(v)) => v,
                (Some(true), None) => true,
                _ => true, // hypothesis false or undefined
            };
        }
        let sort = c.binders[env.len()];
        for &e in s.carrier(sort) {
            env.push(e);
            let ok = rec(s, c, env);
            env.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(s, c, &mut env)
}

/// Does the clause stay true when relation tuples are removed? Requires
/// relation atoms to occur only positively in the hypothesis and only
/// negatively in the conclusion; such clauses are safe pruning predicates.
fn removal_stable(c: &Clause) -> bool {
    // polarity: true = positive occurrence allowed.
    fn check(f: &Formula, rels_allowed_positive: bool) -> bool {
        match f {
            Formula::True | Formula::False | Formula::Eq(_, _) => true,
            Formula::Rel(_, _) => rels_allowed_positive,
            Formula::Not(g) => check(g, !rels_allowed_positive),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().all(|g| check(g, rels_allowed_positive)),
        }
    }
    check(&c.hyp, true) && check(&c.concl, false)
}

// ---------------------------------------------------------------------------
// Ages
// ---------------------------------------------------------------------------

/// Resolves a `(builtin NAME (param value)…)` escape to a catalog age.
fn resolve_builtin(
    name: &str,
    params: &BTreeMap<String, String>,
    span: Span,
) -> Result<Arc<AgeSpec>, Diagnostic> {
    let full_name = match params.get("n") {
        Some(n) => format!("{name}-{n}"),
        None => name.to_string(),
    };
    crate::catalog::entry(&full_name)
        .map(|e| e.age)
        .ok_or_else(|| Diagnostic::new(DiagCode::Undeclared, span, format!("unknown builtin `{full_name}`")))
}

/// `(age NAME (over SIG) (sub SIG)? (constraints clause…) (builtin NAME params…)?)`
///
/// With a builtin clause the age's search hooks come from the catalog (the
/// declared signatures must match); otherwise the age is assembled from the
/// constraints alone, which requires a relational signature — brute-force
/// enumeration cannot honor function symbols.
pub fn parse_age(
    form: &Sexp,
    sigs: &BTreeMap<String, Arc<Signature>>,
) -> Result<Arc<AgeSpec>, Diagnostic> {
    let body = clause_body(form, "age")?;
    let [name_form, rest @ ..] = body else {
        return Err(Diagnostic::new(DiagCode::Syntax, form.span(), "age needs a name"));
    };
    let name = expect_atom(name_form, "an age name")?.to_string();
    let mut over: Option<Arc<Signature>> = None;
    let mut sub: Option<Arc<Signature>> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut symmetric: BTreeSet<RelId> = BTreeSet::new();
    let mut builtin: Option<(String, BTreeMap<String, String>, Span)> = None;
    let lookup = |sigs: &BTreeMap<String, Arc<Signature>>, s: &Sexp| -> Result<Arc<Signature>, Diagnostic> {
        let n = expect_atom(s, "a signature name")?;
        sigs.get(n).cloned().ok_or_else(|| {
            Diagnostic::new(DiagCode::Undeclared, s.span(), format!("undeclared signature `{n}`"))
        })
    };
    for clause in rest {
        match clause.head() {
            Some("over") => {
                let [s] = clause_body(clause, "over")? else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (over SIG)"));
                };
                over = Some(lookup(sigs, s)?);
            }
            Some("sub") => {
                let [s] = clause_body(clause, "sub")? else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "expected (sub SIG)"));
                };
                sub = Some(lookup(sigs, s)?);
            }
            Some("constraints") => {
                let sig = over.clone().ok_or_else(|| {
                    Diagnostic::new(DiagCode::Syntax, clause.span(), "(over SIG) must precede constraints")
                })?;
                for c in clause_body(clause, "constraints")? {
                    match c.head() {
                        Some("symmetric") => {
                            let [r] = clause_body(c, "symmetric")? else {
                                return Err(Diagnostic::new(DiagCode::Syntax, c.span(), "expected (symmetric R)"));
                            };
                            let n = expect_atom(r, "a relation name")?;
                            let id = sig.rel_id(n).ok_or_else(|| {
                                Diagnostic::new(DiagCode::Undeclared, r.span(), format!("undeclared relation `{n}`"))
                            })?;
                            symmetric.insert(id);
                        }
                        _ => clauses.push(parse_clause(c, &sig)?),
                    }
                }
            }
            Some("builtin") => {
                let body = clause_body(clause, "builtin")?;
                let [bname, params @ ..] = body else {
                    return Err(Diagnostic::new(DiagCode::Syntax, clause.span(), "builtin needs a name"));
                };
                let bname = expect_atom(bname, "a builtin name")?.to_string();
                let mut map = BTreeMap::new();
                for p in params {
                    let pair = expect_list(p, "a (param value) pair")?;
                    let [k, v] = pair else {
                        return Err(Diagnostic::new(DiagCode::Syntax, p.span(), "expected (param value)"));
                    };
                    map.insert(
                        expect_atom(k, "a parameter name")?.to_string(),
                        expect_atom(v, "a parameter value")?.to_string(),
                    );
                }
                builtin = Some((bname, map, clause.span()));
            }
            _ => {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    clause.span(),
                    "expected (over …), (sub …), (constraints …) or (builtin …)",
                ))
            }
        }
    }
    let sig = over.ok_or_else(|| {
        Diagnostic::new(DiagCode::Syntax, form.span(), "age needs an (over SIG) clause")
    })?;
    if let Some((bname, params, span)) = builtin {
        let age = resolve_builtin(&bname, &params, span)?;
        if *age.sig != *sig {
            return Err(Diagnostic::new(
                DiagCode::Syntax,
                span,
                format!("builtin `{bname}` disagrees with the declared signature"),
            ));
        }
        if let Some(sub) = sub {
            if **age.subsig() != *sub {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    span,
                    format!("builtin `{bname}` disagrees with the declared core signature"),
                ));
            }
        }
        return Ok(age);
    }
    if !sig.is_relational() {
        return Err(Diagnostic::new(
            DiagCode::Syntax,
            form.span(),
            "ages over function symbols must name a builtin; constraints alone cannot drive the search",
        ));
    }
    Ok(Arc::new(clauses_age(name, sig, sub, clauses, symmetric)))
}

fn orbit_of(symmetric: &BTreeSet<RelId>, r: RelId, t: &[ElemId]) -> Vec<Vec<ElemId>> {
    if !symmetric.contains(&r) {
        return vec![t.to_vec()];
    }
    // All permutations of the tuple, deduplicated.
    let mut out: BTreeSet<Vec<ElemId>> = BTreeSet::new();
    let mut items = t.to_vec();
    permute(&mut items, 0, &mut out);
    out.into_iter().collect()
}

fn permute(items: &mut Vec<ElemId>, k: usize, out: &mut BTreeSet<Vec<ElemId>>) {
    if k == items.len() {
        out.insert(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// An age driven entirely by universal clauses over a relational signature.
fn clauses_age(
    name: String,
    sig: Arc<Signature>,
    sub: Option<Arc<Signature>>,
    clauses: Vec<Clause>,
    symmetric: BTreeSet<RelId>,
) -> AgeSpec {
    let symmetric_holds = {
        let symmetric = symmetric.clone();
        move |s: &FinStructure| {
            symmetric.iter().all(|&r| {
                s.rel(r).iter().all(|t| orbit_of(&[r].into(), r, t).iter().all(|o| s.holds(r, o)))
            })
        }
    };
    let member_clauses = clauses.clone();
    let member = {
        let symmetric_holds = symmetric_holds.clone();
        move |s: &FinStructure| {
            symmetric_holds(s) && member_clauses.iter().all(|c| clause_holds(s, c))
        }
    };
    let prune_clauses: Vec<Clause> =
        clauses.iter().filter(|c| removal_stable(c)).cloned().collect();
    let universal_ok = move |s: &FinStructure| prune_clauses.iter().all(|c| clause_holds(s, c));
    let bot = sub.map(|bsig| {
        // The core keeps the clauses expressible over its own symbols; for a
        // relational core that is exactly the clause set whose relations
        // survive the reduct.
        let emb = bsig.embedding_into(&sig).expect("(sub) must be a subsignature");
        let keep: BTreeSet<RelId> = emb.rel_map.iter().copied().collect();
        fn rels_of(f: &Formula, out: &mut BTreeSet<RelId>) {
            match f {
                Formula::Rel(r, _) => {
                    out.insert(*r);
                }
                Formula::Not(g) => rels_of(g, out),
                Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| rels_of(g, out)),
                _ => {}
            }
        }
        let renumber: BTreeMap<RelId, RelId> =
            emb.rel_map.iter().enumerate().map(|(sub_r, &full_r)| (full_r, sub_r)).collect();
        fn map_rels(f: &Formula, m: &BTreeMap<RelId, RelId>) -> Formula {
            match f {
                Formula::Rel(r, ts) => Formula::Rel(m[r], ts.clone()),
                Formula::Not(g) => Formula::Not(Box::new(map_rels(g, m))),
                Formula::And(gs) => Formula::And(gs.iter().map(|g| map_rels(g, m)).collect()),
                Formula::Or(gs) => Formula::Or(gs.iter().map(|g| map_rels(g, m)).collect()),
                other => other.clone(),
            }
        }
        let core_clauses: Vec<Clause> = clauses
            .iter()
            .filter(|c| {
                let mut used = BTreeSet::new();
                rels_of(&c.hyp, &mut used);
                rels_of(&c.concl, &mut used);
                used.iter().all(|r| keep.contains(r))
            })
            .map(|c| Clause {
                binders: c.binders.clone(),
                hyp: map_rels(&c.hyp, &renumber),
                concl: map_rels(&c.concl, &renumber),
            })
            .collect();
        let core_sym: BTreeSet<RelId> =
            symmetric.iter().filter_map(|r| renumber.get(r).copied()).collect();
        Arc::new(clauses_age(format!("{name}-core"), bsig, None, core_clauses, core_sym))
    });
    let enum_sig = sig.clone();
    let enum_member = member.clone();
    let enum_universal = universal_ok.clone();
    let enum_sym = symmetric.clone();
    let orbit_sym = symmetric;
    AgeSpec {
        name,
        sig,
        bot,
        member: Box::new(member),
        universal_ok: Box::new(universal_ok),
        enumerate: Box::new(move |b: EnumBound| {
            crate::age::brute_force_enumerate(
                &enum_sig,
                &enum_member,
                &enum_universal,
                &|r, t| orbit_of(&enum_sym, r, t),
                b,
            )
        }),
        close_union: Box::new(crate::age::plain_union_close),
        tuple_orbit: Box::new(move |r, t| orbit_of(&orbit_sym, r, t)),
        extend_one: Box::new(crate::age::fresh_point_extensions),
        dense_first: false,
    }
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

/// A parsed definition file: signatures by name, ages, structures, raw
/// element-set families (name lists, resolved against a host structure by
/// the caller).
pub struct Doc {
    pub sigs: BTreeMap<String, Arc<Signature>>,
    pub sig_order: Vec<String>,
    pub ages: Vec<Arc<AgeSpec>>,
    pub structures: Vec<NamedStructure>,
    pub families: Vec<Vec<Vec<String>>>,
    /// Free-form `(meta (key value)…)` pairs (provenance of generated files).
    pub meta: BTreeMap<String, String>,
}

/// `(family (set name…)…)` — element sets over the document's host structure.
fn parse_family(form: &Sexp) -> Result<Vec<Vec<String>>, Diagnostic> {
    let mut out = Vec::new();
    for set in clause_body(form, "family")? {
        let names = clause_body(set, "set")?
            .iter()
            .map(|e| expect_atom(e, "an element name").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(names);
    }
    Ok(out)
}

pub fn parse_doc(text: &str) -> Result<Doc, Diagnostic> {
    let forms = sexp::parse(text)?;
    let mut doc = Doc {
        sigs: BTreeMap::new(),
        sig_order: Vec::new(),
        ages: Vec::new(),
        structures: Vec::new(),
        families: Vec::new(),
        meta: BTreeMap::new(),
    };
    for form in &forms {
        match form.head() {
            Some("signature") => {
                let (name, sig) = parse_signature(form)?;
                doc.sig_order.push(name.clone());
                doc.sigs.insert(name, sig);
            }
            Some("age") => doc.ages.push(parse_age(form, &doc.sigs)?),
            Some("structure") => doc.structures.push(parse_structure(form, &doc.sigs)?),
            Some("family") => doc.families.push(parse_family(form)?),
            Some("meta") => {
                for pair in clause_body(form, "meta")? {
                    let items = expect_list(pair, "a (key value) pair")?;
                    let [k, v] = items else {
                        return Err(Diagnostic::new(DiagCode::Syntax, pair.span(), "expected (key value)"));
                    };
                    doc.meta.insert(
                        expect_atom(k, "a key")?.to_string(),
                        expect_atom(v, "a value")?.to_string(),
                    );
                }
            }
            Some("conditions") => {
                for s in clause_body(form, "conditions")? {
                    doc.structures.push(parse_structure(s, &doc.sigs)?);
                }
            }
            _ => {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    form.span(),
                    "expected signature, age, structure, family or conditions",
                ))
            }
        }
    }
    Ok(doc)
}

/// Resolves a family of element-name sets against a host's name table.
pub fn resolve_family(
    family: &[Vec<String>],
    host: &NamedStructure,
) -> Result<Vec<BTreeSet<ElemId>>, Diagnostic> {
    family
        .iter()
        .map(|set| {
            set.iter()
                .map(|n| {
                    host.names.get(n).copied().ok_or_else(|| {
                        Diagnostic::new(
                            DiagCode::Undeclared,
                            Span::start(),
                            format!("undeclared element `{n}` in family"),
                        )
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn undeclared_element_in_a_function_entry() {
        let doc = sexp::parse("(structure (carrier U (a)) (fun p ((a) b)))").unwrap();
        let err = parse_structure(&doc[0], &BTreeMap::new()).map(|_| ()).unwrap_err();
        assert_eq!(err.code, DiagCode::Undeclared);
        assert!(err.msg.contains("undeclared element `b`"), "{err}");
    }

    #[test]
    fn structures_round_trip_through_print() {
        let entry = catalog::entry("k-tree-colored").unwrap();
        for s in entry.age.enumerate(crate::age::EnumBound::with_rel(3, 2)) {
            let mut sigs = BTreeMap::new();
            sigs.insert("ctree".to_string(), entry.age.sig.clone());
            let printed = structure_sexp(&s, Some("ctree")).to_string();
            let doc = sexp::parse(&printed).unwrap();
            let back = parse_structure(&doc[0], &sigs).unwrap().structure;
            assert!(
                crate::model::find_isomorphism(&s, &back).is_some(),
                "round trip lost the structure: {printed}"
            );
        }
    }

    #[test]
    fn diagnostics_carry_distinct_codes() {
        let sig_src = "(signature g (sorts v) (rel E (v v)))";
        let sigs: BTreeMap<String, Arc<Signature>> = {
            let doc = sexp::parse(sig_src).unwrap();
            let (n, s) = parse_signature(&doc[0]).unwrap();
            [(n, s)].into_iter().collect()
        };
        let cases = [
            ("(structure (over g) (carrier v (a)) (rel E ((a))))", DiagCode::Arity),
            ("(structure (over g) (carrier v (a)) (rel F ((a a))))", DiagCode::Undeclared),
            ("(structure (over g) (carrier w (a)))", DiagCode::Undeclared),
        ];
        for (src, code) in cases {
            let doc = sexp::parse(src).unwrap();
            let err = parse_structure(&doc[0], &sigs).map(|_| ()).unwrap_err();
            assert_eq!(err.code, code, "{src}: {err}");
        }
    }

    #[test]
    fn ill_sorted_terms_are_rejected() {
        let src = "\
(signature two (sorts a b) (fun f ((a) -> b)))
(age bad (over two) (constraints (forall ((x a)) (=> true (= (f (f x)) x)))))";
        let err = parse_doc(src).map(|_| ()).unwrap_err();
        assert_eq!(err.code, DiagCode::IllSorted);
    }

    #[test]
    fn constraint_graphs_agree_with_the_catalog_class() {
        // The graphs entry minus its builtin clause: pure constraint age.
        let src = "\
(signature graph (sorts v) (rel E (v v)))
(age graphs
  (over graph)
  (constraints
    (forall ((x v) (y v)) (=> (rel E x y) (not (= x y))))
    (forall ((x v) (y v)) (=> (rel E x y) (rel E y x)))))";
        let doc = parse_doc(src).unwrap();
        let parsed = &doc.ages[0];
        let entry = catalog::entry("graphs").unwrap();
        let bound = crate::age::EnumBound::gens(3);
        assert_eq!(parsed.enumerate(bound).len(), entry.age.enumerate(bound).len());
        for check in [
            catalog::Check::Hp(bound),
            catalog::Check::Jep(bound),
            catalog::Check::Sap(crate::age::EnumBound::gens(2)),
            catalog::Check::Esap(crate::age::EnumBound::gens(2)),
        ] {
            let a = catalog::run_check(parsed, &check).unwrap();
            let b = catalog::run_check(&entry.age, &check).unwrap();
            assert_eq!(a.pass, b.pass, "{}: {a} vs {b}", check.property());
        }
    }

    #[test]
    fn every_catalog_dsl_reparses_to_its_own_age() {
        for entry in catalog::all_entries() {
            let doc = parse_doc(&entry.dsl).unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            let [age] = doc.ages.as_slice() else {
                panic!("{}: expected exactly one age form", entry.name)
            };
            assert_eq!(age.name, entry.age.name, "{}", entry.name);
            assert_eq!(*age.sig, *entry.age.sig, "{}", entry.name);
        }
    }

    #[test]
    fn catalog_constraints_hold_on_enumerated_members() {
        // The constraint text exported alongside each builtin is not dead
        // documentation: every enumerated member must satisfy it.
        for entry in catalog::all_entries() {
            let forms = sexp::parse(&entry.dsl).unwrap();
            let mut sigs = BTreeMap::new();
            let mut checked = Vec::new();
            for form in &forms {
                match form.head() {
                    Some("signature") => {
                        let (n, s) = parse_signature(form).unwrap();
                        sigs.insert(n, s);
                    }
                    Some("age") => {
                        for clause in clause_body(form, "age").unwrap() {
                            if clause.head() != Some("constraints") {
                                continue;
                            }
                            for c in clause_body(clause, "constraints").unwrap() {
                                if c.head() == Some("symmetric") {
                                    continue;
                                }
                                checked.push(parse_clause(c, &entry.age.sig).unwrap());
                            }
                        }
                    }
                    _ => {}
                }
            }
            let bound = crate::age::EnumBound::with_rel(2, 2);
            for m in entry.age.enumerate(bound) {
                for c in &checked {
                    assert!(clause_holds(&m, c), "{}: a member violates an exported constraint", entry.name);
                }
            }
        }
    }
}
