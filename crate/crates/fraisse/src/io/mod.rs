//! Text formats and reports: s-expressions with spans, the definition-file
//! language, and s-expression rendering of checker output.

pub mod dsl;
pub mod sexp;

use std::collections::BTreeSet;

use crate::framework::{Counterexample, PropertyReport};
use crate::model::{ElemId, FinStructure};
use crate::rigidity::RigidityReport;
use sexp::Sexp;

fn kv(key: &str, val: Sexp) -> Sexp {
    Sexp::list(vec![Sexp::atom(key), val])
}

fn kv_atom(key: &str, val: impl Into<String>) -> Sexp {
    kv(key, Sexp::atom(val))
}

fn elem_names(s: &FinStructure, elems: impl IntoIterator<Item = ElemId>) -> Sexp {
    let names = dsl::element_names(s);
    Sexp::list(elems.into_iter().map(|e| Sexp::atom(&names[&e])).collect())
}

fn set_sexp(s: &FinStructure, set: &BTreeSet<ElemId>) -> Sexp {
    elem_names(s, set.iter().copied())
}

/// Concrete, replayable rendering of a failing instance. Element names refer
/// to the embedded structure forms.
pub fn counterexample_sexp(cex: &Counterexample) -> Sexp {
    match cex {
        Counterexample::Hp { member, subset } => Sexp::list(vec![
            Sexp::atom("hp-violation"),
            kv("member", dsl::structure_sexp(member, None)),
            kv("subset", set_sexp(member, subset)),
        ]),
        Counterexample::Jep { a, b } => Sexp::list(vec![
            Sexp::atom("jep-violation"),
            kv("a", dsl::structure_sexp(a, None)),
            kv("b", dsl::structure_sexp(b, None)),
        ]),
        Counterexample::Sap { prob } => Sexp::list(vec![
            Sexp::atom("sap-violation"),
            kv("base", dsl::structure_sexp(&prob.a, None)),
            kv("left", dsl::structure_sexp(&prob.b, None)),
            kv("right", dsl::structure_sexp(&prob.c, None)),
        ]),
        Counterexample::Esap { prob, dbot } => Sexp::list(vec![
            Sexp::atom("esap-violation"),
            kv("base", dsl::structure_sexp(&prob.a, None)),
            kv("left", dsl::structure_sexp(&prob.b, None)),
            kv("right", dsl::structure_sexp(&prob.c, None)),
            kv("prescribed", dsl::structure_sexp(dbot, None)),
        ]),
        Counterexample::ChainUnion { chain } => Sexp::list(vec![
            Sexp::atom("chain-union-violation"),
            kv("union", dsl::structure_sexp(chain.last().expect("nonempty chain"), None)),
            kv_atom("length", chain.len().to_string()),
        ]),
        Counterexample::FrClauseA { member, .. } => Sexp::list(vec![
            Sexp::atom("unrealized-member"),
            kv("member", dsl::structure_sexp(member, None)),
        ]),
        Counterexample::FrClauseB { a, b, emb, .. } => {
            let names_a = dsl::element_names(a);
            Sexp::list(vec![
                Sexp::atom("unextendable-embedding"),
                kv("small", dsl::structure_sexp(a, None)),
                kv("large", dsl::structure_sexp(b, None)),
                kv(
                    "image",
                    Sexp::list(
                        emb.map
                            .iter()
                            .map(|(x, y)| {
                                Sexp::list(vec![
                                    Sexp::atom(&names_a[x]),
                                    Sexp::atom(format!("{}{}", a.sig.sorts()[y.sort], y.id)),
                                ])
                            })
                            .collect(),
                    ),
                ),
            ])
        }
        Counterexample::TwoTypes { b, a_set, x0, x1 } => Sexp::list(vec![
            Sexp::atom("undistinguished-pair"),
            kv("member", dsl::structure_sexp(b, None)),
            kv("parameters", set_sexp(b, a_set)),
            kv("pair", elem_names(b, [*x0, *x1])),
        ]),
        Counterexample::Pins { sort, a, b, i0, i1 } => {
            let names = dsl::element_names(a);
            let emb = |e: &crate::model::Embedding| {
                Sexp::list(
                    e.map
                        .iter()
                        .map(|(x, y)| {
                            Sexp::list(vec![
                                Sexp::atom(&names[x]),
                                Sexp::atom(format!("{}{}", b.sig.sorts()[y.sort], y.id)),
                            ])
                        })
                        .collect(),
                )
            };
            Sexp::list(vec![
                Sexp::atom("unpinned-isomorphisms"),
                kv_atom("sort", a.sig.sorts()[*sort].clone()),
                kv("a", dsl::structure_sexp(a, None)),
                kv("b", dsl::structure_sexp(b, None)),
                kv("first", emb(i0)),
                kv("second", emb(i1)),
            ])
        }
        Counterexample::Splitting { a, x, y, fset, base } => Sexp::list(vec![
            Sexp::atom("unsplit-pair"),
            kv("condition", dsl::structure_sexp(a, None)),
            kv("pair", elem_names(base, [*x, *y])),
            kv("family", set_sexp(base, fset)),
        ]),
    }
}

pub fn report_sexp(rep: &PropertyReport) -> Sexp {
    let mut items = vec![
        Sexp::atom("check"),
        kv_atom("prop", rep.property.clone()),
        kv_atom("bound", rep.bound.clone()),
        kv_atom("verdict", if rep.pass { "pass" } else { "fail" }),
    ];
    if !rep.detail.is_empty() {
        items.push(kv_atom("detail", rep.detail.replace(['(', ')'], "")));
    }
    if let Some(cex) = &rep.counterexample {
        items.push(kv("witness", counterexample_sexp(cex)));
    }
    Sexp::list(items)
}

pub fn rigidity_sexp(rep: &RigidityReport) -> Sexp {
    let mut items = vec![
        Sexp::atom("rigidity"),
        kv_atom("budget", rep.budget.to_string()),
        kv_atom("exhausted", rep.exhausted.to_string()),
        kv(
            "class-sizes",
            Sexp::list(rep.class_sizes.iter().map(|n| Sexp::atom(n.to_string())).collect()),
        ),
    ];
    match &rep.nontrivial_automorphism {
        Some(auto) => items.push(kv(
            "nontrivial-automorphism",
            Sexp::list(
                auto.map
                    .iter()
                    .filter(|(x, y)| x != y)
                    .map(|(x, y)| {
                        Sexp::list(vec![
                            Sexp::atom(format!("e{}_{}", x.sort, x.id)),
                            Sexp::atom(format!("e{}_{}", y.sort, y.id)),
                        ])
                    })
                    .collect(),
            ),
        )),
        None => items.push(kv_atom("nontrivial-automorphism", "none-found")),
    }
    if let Some(f) = rep.perm_factor {
        items.push(kv_atom("permutation-factor", f.to_string()));
    }
    for n in &rep.notes {
        items.push(kv_atom("note", n.replace(['(', ')'], "")));
    }
    Sexp::list(items)
}
