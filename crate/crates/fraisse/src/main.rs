//! Command-line surface: class property checks, generic construction and
//! verification, sunflower and poset scans, rigidity reports, and the
//! catalog listing. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 usage or parse error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use fraisse::age::{AgeSpec, EnumBound};
use fraisse::builder::{build_generic, core_age, verify_fr_axioms, BuilderOptions, Condition};
use fraisse::catalog::{self, Check};
use fraisse::io::dsl::{self, NamedStructure};
use fraisse::io::sexp::Sexp;
use fraisse::io::{report_sexp, rigidity_sexp};
use fraisse::model::FinStructure;
use fraisse::poset::{find_sunflower, linked_subfamily, max_antichain};
use fraisse::rigidity::rigidity_report;

#[derive(Parser)]
#[command(name = "fraisse", version, about = "workbench for amalgamation classes with function symbols")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run property checks against a catalog class or a definition file.
    CheckClass {
        #[arg(long, conflicts_with = "file")]
        class: Option<String>,
        /// Numeric family parameter appended to the class name (seq-names --n 2).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        file: Option<PathBuf>,
        /// Comma-separated: hp,jep,sap,esap,cu,2types,pins (default: the
        /// class's published checks).
        #[arg(long)]
        props: Option<String>,
        /// Generator-count override for the published bounds.
        #[arg(long)]
        bound: Option<usize>,
        /// Sort for 2types/pins when the class publishes none.
        #[arg(long)]
        sort: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a pseudo-generic structure by running the condition chain.
    BuildGeneric {
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the bounded limit axioms on a generated structure.
    VerifyFr {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        #[arg(long)]
        bound: usize,
        /// Override the class recorded in the file's meta block.
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a sunflower of at least the target size in a family file.
    Sunflower {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compatibility structure of a condition file: largest linked
    /// subfamily or antichain found at the budget.
    PosetScan {
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        conds: PathBuf,
        /// Carrier-size cap on compatibility witnesses.
        #[arg(long)]
        budget: usize,
        #[arg(long, conflicts_with = "linked")]
        antichain: bool,
        #[arg(long)]
        linked: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Automorphism evidence for a structure file.
    Rigidity {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Search node budget.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Catalog operations.
    Catalog {
        #[arg(long)]
        list: bool,
    },
}

/// 2 for anything that prevented running (usage, parse, missing class);
/// 1 for "ran, a check failed".
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: 2, msg: msg.into() }
    }
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure { code: 2, msg: e.to_string() }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("{}", f.msg);
            std::process::exit(f.code);
        }
    }
}

fn emit(out: &Option<PathBuf>, forms: &[Sexp]) -> Result<(), Failure> {
    let text = fraisse::io::sexp::print(forms) + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::usage(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve_class(class: &str, n: Option<usize>) -> Result<catalog::CatalogEntry, Failure> {
    let name = match n {
        Some(n) => format!("{class}-{n}"),
        None => class.to_string(),
    };
    catalog::entry(&name).ok_or_else(|| {
        Failure::usage(format!(
            "unknown class `{name}`; try `fraisse catalog --list`"
        ))
    })
}

fn load_file_class(path: &Path) -> Result<Arc<AgeSpec>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let doc = dsl::parse_doc(&text).map_err(|d| Failure::usage(d.to_string()))?;
    doc.ages
        .into_iter()
        .next()
        .ok_or_else(|| Failure::usage(format!("{}: no age form in file", path.display())))
}

fn override_generators(check: &Check, generators: Option<usize>) -> Check {
    let Some(g) = generators else { return check.clone() };
    let patch = |eb: &EnumBound| EnumBound { generators: g, max_rel: eb.max_rel };
    match check {
        Check::Hp(b) => Check::Hp(patch(b)),
        Check::Jep(b) => Check::Jep(patch(b)),
        Check::Sap(b) => Check::Sap(patch(b)),
        Check::Esap(b) => Check::Esap(patch(b)),
        Check::ChainUnion { len, .. } => Check::ChainUnion { size: g, len: *len },
        Check::Distinct2Types { sort, bound } => {
            Check::Distinct2Types { sort: sort.clone(), bound: patch(bound) }
        }
        Check::Pins { sort, bound } => Check::Pins { sort: sort.clone(), bound: patch(bound) },
    }
}

fn default_check(prop: &str, k: &AgeSpec, bound: Option<usize>, sort: Option<&str>) -> Result<Check, Failure> {
    let g = bound.unwrap_or(2);
    let eb = EnumBound::gens(g);
    let sort = || -> String {
        sort.map(str::to_string).unwrap_or_else(|| k.sig.sorts()[0].clone())
    };
    Ok(match prop {
        "hp" => Check::Hp(eb),
        "jep" => Check::Jep(eb),
        "sap" => Check::Sap(eb),
        "esap" => Check::Esap(eb),
        "cu" => Check::ChainUnion { size: g.max(4), len: 3 },
        "2types" => Check::Distinct2Types { sort: sort(), bound: eb },
        "pins" => Check::Pins { sort: sort(), bound: eb },
        other => return Err(Failure::usage(format!("unknown property `{other}`"))),
    })
}

fn prop_key(prop: &str) -> &str {
    if prop == "cu" {
        "chain-union"
    } else {
        prop
    }
}

fn check_class(
    class: Option<String>,
    n: Option<usize>,
    file: Option<PathBuf>,
    props: Option<String>,
    bound: Option<usize>,
    sort: Option<String>,
    out: Option<PathBuf>,
) -> Result<i32, Failure> {
    let (age, published): (Arc<AgeSpec>, Vec<Check>) = match (&class, &file) {
        (Some(c), None) => {
            let entry = resolve_class(c, n)?;
            (entry.age, entry.expected.iter().map(|e| e.check.clone()).collect())
        }
        (None, Some(f)) => (load_file_class(f)?, vec![]),
        _ => return Err(Failure::usage("provide exactly one of --class / --file")),
    };
    let checks: Vec<Check> = match props {
        None if !published.is_empty() => {
            published.iter().map(|c| override_generators(c, bound)).collect()
        }
        None => ["hp", "jep", "sap", "esap"]
            .iter()
            .map(|p| default_check(p, &age, bound, sort.as_deref()))
            .collect::<Result<_, _>>()?,
        Some(list) => {
            let mut out = Vec::new();
            for prop in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let matching: Vec<&Check> = published
                    .iter()
                    .filter(|c| c.property() == prop_key(prop))
                    .collect();
                if matching.is_empty() {
                    out.push(default_check(prop, &age, bound, sort.as_deref())?);
                } else {
                    out.extend(matching.into_iter().map(|c| override_generators(c, bound)));
                }
            }
            out
        }
    };
    let mut forms = vec![Sexp::list(vec![
        Sexp::atom("report"),
        Sexp::list(vec![Sexp::atom("class"), Sexp::atom(&age.name)]),
    ])];
    let mut all_pass = true;
    for check in &checks {
        let rep = catalog::run_check(&age, check).map_err(|e| Failure::usage(e.to_string()))?;
        println!("{rep}");
        all_pass &= rep.pass;
        forms.push(report_sexp(&rep));
    }
    emit(&out, &forms)?;
    if let Some(path) = &out {
        if !all_pass {
            eprintln!("a check failed; report at {}", path.display());
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn sig_name_for(age: &AgeSpec) -> String {
    format!("{}-sig", age.name)
}

fn cmd_build_generic(
    class: String,
    n: Option<usize>,
    steps: usize,
    seed: u64,
    out: PathBuf,
) -> Result<i32, Failure> {
    let entry = resolve_class(&class, n)?;
    let built = build_generic(&entry.age, &BuilderOptions::default(), steps, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let sig_name = sig_name_for(&entry.age);
    let forms = vec![
        dsl::signature_sexp(&sig_name, &entry.age.sig),
        Sexp::list(vec![
            Sexp::atom("meta"),
            Sexp::list(vec![Sexp::atom("class"), Sexp::atom(&entry.age.name)]),
            Sexp::list(vec![Sexp::atom("seed"), Sexp::atom(seed.to_string())]),
            Sexp::list(vec![Sexp::atom("steps"), Sexp::atom(steps.to_string())]),
            Sexp::list(vec![
                Sexp::atom("requirements-failed"),
                Sexp::atom(built.cert.failures().to_string()),
            ]),
        ]),
        dsl::structure_sexp(&built.g, Some(&sig_name)),
    ];
    emit(&Some(out), &forms)?;
    Ok(0)
}

fn read_structure_doc(path: &Path) -> Result<(dsl::Doc, NamedStructure), Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut doc = dsl::parse_doc(&text).map_err(|d| Failure::usage(d.to_string()))?;
    if doc.structures.is_empty() {
        return Err(Failure::usage(format!("{}: no structure form in file", path.display())));
    }
    let s = doc.structures.remove(0);
    Ok((doc, s))
}

fn cmd_verify_fr(
    input: PathBuf,
    bound: usize,
    class: Option<String>,
    out: Option<PathBuf>,
) -> Result<i32, Failure> {
    let (doc, host) = read_structure_doc(&input)?;
    let class_name = class
        .or_else(|| doc.meta.get("class").cloned())
        .ok_or_else(|| Failure::usage("no class recorded in the file; pass --class"))?;
    let entry = resolve_class(&class_name, None)?;
    if *host.structure.sig != *entry.age.sig {
        return Err(Failure::usage("structure signature does not match the class"));
    }
    let rep = verify_fr_axioms(&host.structure, &entry.age, EnumBound::gens(bound));
    println!("{rep}");
    let forms = vec![
        Sexp::list(vec![
            Sexp::atom("report"),
            Sexp::list(vec![Sexp::atom("class"), Sexp::atom(&class_name)]),
            Sexp::list(vec![Sexp::atom("bound"), Sexp::atom(bound.to_string())]),
        ]),
        report_sexp(&rep),
    ];
    emit(&out, &forms)?;
    Ok(if rep.pass { 0 } else { 1 })
}

fn cmd_sunflower(input: PathBuf, target: usize, out: Option<PathBuf>) -> Result<i32, Failure> {
    let (doc, host) = read_structure_doc(&input)?;
    let family_names = doc
        .families
        .first()
        .ok_or_else(|| Failure::usage(format!("{}: no family form in file", input.display())))?;
    let family = dsl::resolve_family(family_names, &host).map_err(|d| Failure::usage(d.to_string()))?;
    let found = find_sunflower(&host.structure, &family, target);
    let rev: BTreeMap<_, _> = host.names.iter().map(|(n, &e)| (e, n.clone())).collect();
    let form = match &found {
        Some(cert) => Sexp::list(vec![
            Sexp::atom("sunflower"),
            Sexp::list(vec![Sexp::atom("target"), Sexp::atom(target.to_string())]),
            Sexp::list(
                std::iter::once(Sexp::atom("indices"))
                    .chain(cert.indices.iter().map(|i| Sexp::atom(i.to_string())))
                    .collect(),
            ),
            Sexp::list(
                std::iter::once(Sexp::atom("core"))
                    .chain(cert.core.iter().map(|e| Sexp::atom(&rev[e])))
                    .collect(),
            ),
        ]),
        None => Sexp::list(vec![
            Sexp::atom("sunflower"),
            Sexp::list(vec![Sexp::atom("target"), Sexp::atom(target.to_string())]),
            Sexp::atom("none"),
        ]),
    };
    emit(&out, &[form])?;
    Ok(if found.is_some() { 0 } else { 1 })
}

fn cmd_poset_scan(
    class: String,
    n: Option<usize>,
    conds_path: PathBuf,
    budget: usize,
    antichain: bool,
    out: Option<PathBuf>,
) -> Result<i32, Failure> {
    let entry = resolve_class(&class, n)?;
    let text = std::fs::read_to_string(&conds_path)?;
    let doc = dsl::parse_doc(&text).map_err(|d| Failure::usage(d.to_string()))?;
    let conds: Vec<Condition> = doc
        .structures
        .iter()
        .map(|s| {
            if *s.structure.sig != *entry.age.sig {
                return Err(Failure::usage("condition signature does not match the class"));
            }
            if !entry.age.is_member(&s.structure) {
                return Err(Failure::usage("a listed condition is not a class member"));
            }
            Ok(Condition { structure: s.structure.clone(), stage: 0 })
        })
        .collect::<Result<_, _>>()?;
    if conds.is_empty() {
        return Err(Failure::usage("condition file lists no structures"));
    }
    // The base snapshot: union of the conditions' core reducts.
    let core = core_age(&entry.age);
    let mut base = FinStructure::empty(core.sig.clone());
    for c in &conds {
        let red = c.structure.reduct(&core.sig).map_err(|e| Failure::usage(e.to_string()))?;
        base = base
            .union(&red)
            .ok_or_else(|| Failure::usage("condition cores conflict; no common base"))?;
    }
    let (indices, graph) = if antichain {
        max_antichain(&conds, &entry.age, &base, budget)
    } else {
        linked_subfamily(&conds, &entry.age, &base, budget)
    };
    let form = Sexp::list(vec![
        Sexp::atom("poset-scan"),
        Sexp::list(vec![Sexp::atom("class"), Sexp::atom(&entry.age.name)]),
        Sexp::list(vec![Sexp::atom("budget"), Sexp::atom(budget.to_string())]),
        Sexp::list(vec![Sexp::atom("conditions"), Sexp::atom(conds.len().to_string())]),
        Sexp::list(vec![Sexp::atom("compatible-pairs"), Sexp::atom(graph.edges.len().to_string())]),
        Sexp::list(
            std::iter::once(Sexp::atom(if antichain { "antichain" } else { "linked" }))
                .chain(indices.iter().map(|i| Sexp::atom(i.to_string())))
                .collect(),
        ),
    ]);
    emit(&out, &[form])?;
    Ok(0)
}

fn cmd_rigidity(input: PathBuf, budget: u64, out: Option<PathBuf>) -> Result<i32, Failure> {
    let (_, host) = read_structure_doc(&input)?;
    let rep = rigidity_report(&host.structure, budget);
    emit(&out, &[rigidity_sexp(&rep)])?;
    Ok(0)
}

fn cmd_catalog_list() -> i32 {
    for e in catalog::all_entries() {
        let params = e
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let checks = e
            .expected
            .iter()
            .map(|ev| format!("{}:{}", ev.check.property(), if ev.pass { "pass" } else { "fail" }))
            .collect::<Vec<_>>()
            .join(" ");
        println!("{:<20} {:<28} {}", e.name, params, checks);
    }
    0
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.cmd {
        Cmd::CheckClass { class, n, file, props, bound, sort, out } => {
            check_class(class, n, file, props, bound, sort, out)
        }
        Cmd::BuildGeneric { class, n, steps, seed, out } => {
            cmd_build_generic(class, n, steps, seed, out)
        }
        Cmd::VerifyFr { r#in, bound, class, out } => cmd_verify_fr(r#in, bound, class, out),
        Cmd::Sunflower { r#in, target, out } => cmd_sunflower(r#in, target, out),
        Cmd::PosetScan { class, n, conds, budget, antichain, linked: _, out } => {
            cmd_poset_scan(class, n, conds, budget, antichain, out)
        }
        Cmd::Rigidity { r#in, budget, out } => cmd_rigidity(r#in, budget, out),
        Cmd::Catalog { list } => {
            if !list {
                return Err(Failure::usage("catalog: pass --list"));
            }
            Ok(cmd_catalog_list())
        }
    }
}
