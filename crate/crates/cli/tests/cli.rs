use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn polyqtt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyqtt")).current_dir(root()).args(args).output().expect("run polyqtt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_corpus_succeeds() {
    for f in ["corpus/consfree.qtt", "corpus/lfpl.qtt", "corpus/insertion_sort.qtt"] {
        let o = polyqtt(&["check", f]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", f, stderr(&o));
    }
}

#[test]
fn check_reports_usage_with_location() {
    let o = polyqtt(&["check", "fixtures/bad_double_use.qtt"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("error[Tm-Lam/usage]"), "{}", e);
    assert!(e.contains("fixtures/bad_double_use.qtt:"), "{}", e);
}

#[test]
fn check_succ_at_runtime_names_the_rule() {
    let o = polyqtt(&["check", "fixtures/consfree_succ_sigma1.qtt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Tm-Succ/fragment"));
}

#[test]
fn sigma_zero_accepts_erased_copies() {
    // copying a boolean is fine when nothing runs
    let o = polyqtt(&["check", "--sigma", "0", "fixtures/bad_double_use.qtt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn regime_flag_overrides_pragma() {
    let o = polyqtt(&["check", "--regime", "lfpl", "fixtures/consfree_diamond_type.qtt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn run_identity() {
    let o = polyqtt(&["run", "corpus/lfpl.qtt", "--decl", "id", "--input", "9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value: 9"), "{}", stdout(&o));
}

#[test]
fn run_iterator_base_case() {
    let o = polyqtt(&["run", "corpus/consfree.qtt", "--decl", "iter1", "--input", "(0, true)"]);
    assert!(stdout(&o).contains("value: true"), "{}", stdout(&o));
}

#[test]
fn run_sorts_a_list_literal() {
    let o = polyqtt(&["run", "corpus/insertion_sort.qtt", "--decl", "sort", "--input", "[4, 1, 3, 1, 0]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("value: (5, 0, 1, 1, 3, 4, ())"), "{}", stdout(&o));
}

#[test]
fn run_json_and_trace() {
    let o = polyqtt(&["run", "corpus/consfree.qtt", "--decl", "twice", "--input", "3", "--trace", "--json", "-"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["steps"], 1);
    assert_eq!(v["output"], "(3, 3)");
    assert_eq!(stderr(&o).trim(), "MkPair @1");
}

#[test]
fn bound_json_has_coefficients() {
    let o = polyqtt(&["bound", "corpus/consfree.qtt", "--decl", "iter3", "--json", "-"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["degree"], 3);
    assert_eq!(v["bound"].as_array().unwrap().len(), 4);
}

#[test]
fn constant_program_has_constant_bound() {
    let o = polyqtt(&["bound", "corpus/consfree.qtt", "--decl", "konst", "--json", "-"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["degree"], 0);
}

#[test]
fn verify_writes_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = polyqtt(&["verify", "corpus/consfree.qtt", "--decl", "iter2", "--max-n", "50", "--json", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    let v: serde_json::Value = serde_json::from_str(&ta).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["bound", "name", "ok", "regime", "rows"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 51);
    assert_eq!(v["rows"][0].as_object().unwrap().len(), 4);
    assert_eq!(v["ok"], true);
}

#[test]
fn verify_insertion_sort() {
    let o = polyqtt(&["verify", "corpus/insertion_sort.qtt", "--decl", "sort", "--max-n", "20", "--agree"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn sabotage_is_a_bound_violation() {
    let o = polyqtt(&["verify", "fixtures/sabotage_halved.qtt", "--decl", "iter2", "--max-n", "20"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn compile_emits_parseable_machine_code() {
    let o = polyqtt(&["compile", "corpus/consfree.qtt", "--decl", "iter1", "--emit-machine"]);
    assert_eq!(o.status.code(), Some(0));
    let code: polyqtt::machine::MachineExpr = stdout(&o).trim().parse().unwrap();
    assert!(code.is_closed_at(1));
}

#[test]
fn corpus_command_passes() {
    let o = polyqtt(&["corpus", "--max-n", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(polyqtt(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(polyqtt(&["check", "no/such/file.qtt"]).status.code(), Some(3));
    assert_eq!(polyqtt(&["run", "corpus/consfree.qtt", "--decl", "iter1", "--input", "[1"]).status.code(), Some(3));
}

#[test]
fn erased_declaration_cannot_run() {
    let o = polyqtt(&["run", "corpus/insertion_sort.qtt", "--decl", "Elems"]);
    assert_eq!(o.status.code(), Some(1));
}
