//! End-to-end exercises of the binary and the golden malformed-input corpus.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraisse"))
}

#[test]
fn malformed_inputs_produce_stable_diagnostics() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut cases = 0;
    for entry in std::fs::read_dir(&dir).expect("golden corpus present") {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("sexp") {
            continue;
        }
        cases += 1;
        let text = std::fs::read_to_string(&path).unwrap();
        let err = fraisse::io::dsl::parse_doc(&text)
            .map(|_| ())
            .expect_err(&format!("{} should not parse", path.display()));
        let expected =
            std::fs::read_to_string(path.with_extension("expected")).expect("expected file");
        assert_eq!(err.to_string(), expected.trim_end(), "{}", path.display());
    }
    assert!(cases >= 8, "corpus shrank to {cases} cases");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_class_is_a_usage_error() {
    let out = bin().args(["check-class", "--class", "no-such-class"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_lists_every_entry() {
    let out = bin().args(["catalog", "--list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for e in fraisse::catalog::all_entries() {
        assert!(text.contains(&e.name), "missing {}", e.name);
    }
}

#[test]
fn failing_check_exits_one_and_reports_the_witness() {
    let out = bin()
        .args(["check-class", "--class", "seq-names", "--n", "2", "--props", "2types", "--bound", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(verdict fail)"), "{text}");
    // The witness names the pair and the shared-coordinate member.
    assert!(text.contains("undistinguished-pair"), "{text}");
    assert!(text.contains("(fun f"), "{text}");
}

#[test]
fn build_then_verify_round_trips_through_a_file() {
    let dir = std::env::temp_dir().join("fraisse-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out_file = dir.join("graphs-generic.sexp");
    let out = bin()
        .args(["build-generic", "--class", "graphs", "--steps", "400", "--seed", "7"])
        .arg("--out")
        .arg(&out_file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["verify-fr", "--bound", "2"])
        .arg("--in")
        .arg(&out_file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(verdict pass)"), "{text}");
}

#[test]
fn check_class_accepts_a_definition_file() {
    let dir = std::env::temp_dir().join("fraisse-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("graphs.sexp");
    std::fs::write(
        &file,
        "(signature graph (sorts v) (rel E (v v)))\n\
         (age graphs (over graph) (constraints\n\
           (forall ((x v) (y v)) (=> (rel E x y) (not (= x y))))\n\
           (forall ((x v) (y v)) (=> (rel E x y) (rel E y x)))))\n",
    )
    .unwrap();
    let out = bin()
        .args(["check-class", "--props", "hp,jep,sap,esap", "--bound", "2"])
        .arg("--file")
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sunflower_finds_the_common_core() {
    let dir = std::env::temp_dir().join("fraisse-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("family.sexp");
    std::fs::write(
        &file,
        "(structure (carrier v (a b c d e)))\n\
         (family (set a b) (set a c) (set a d) (set b c))\n",
    )
    .unwrap();
    let out = bin()
        .args(["sunflower", "--target", "3"])
        .arg("--in")
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(core a)"), "{text}");
    // An unreachable target exits 1.
    let out = bin()
        .args(["sunflower", "--target", "5"])
        .arg("--in")
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
