use std::fs;
use std::path::PathBuf;

use rpl::cli::run_command;
use rpl::{FiniteColoring, StableColoring};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_command(std::iter::once("rpl").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rpl-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn generated_files_load_back() {
    let (code, text, _) = run(&["gen", "constant", "--color", "0", "--n", "20"]);
    assert_eq!(code, 0);
    let f = FiniteColoring::parse_file(&text).unwrap();
    assert_eq!(f.to_file_string(), text);

    let (code, text, _) = run(&["gen", "stable", "--limits", "alternating", "--settle", "linear", "--n", "200"]);
    assert_eq!(code, 0);
    let s = StableColoring::parse_file(&text).unwrap();
    assert_eq!(s.limits().len(), 200);
    assert!(s.limits().iter().enumerate().all(|(x, &l)| l == (x % 2) as u8));
}

#[test]
fn pattern_verbs() {
    assert_eq!(run(&["pattern", "show", "2031"]).1, "size=4\n101001\n");
    let path = scratch("clique.txt");
    fs::write(&path, run(&["gen", "perm-clique", "2031"]).1).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["pattern", "check", p, "2031", "0,1,2,3"]).1, "true\n");
    assert_eq!(run(&["pattern", "find", p, "1302"]).1, "absent\n");
    assert_eq!(run(&["pattern", "find", p, "201"]).1, "found {0,1,3}\n");
}

#[test]
fn extraction_on_a_generated_instance() {
    let path = scratch("windowed.txt");
    let (code, text, _) = run(&["gen", "windowed", "--n", "10000", "--seed", "3"]);
    assert_eq!(code, 0);
    fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let (code, out, err) = run(&["extract", "random", p, "--horizon", "10000", "--seed", "7"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("set {") || out.starts_with("failure"));
    let again = run(&["extract", "random", p, "--horizon", "10000", "--seed", "7"]);
    assert_eq!(again.1, out);
    let (code, out, _) = run(&["extract", "unbalanced", p, "--clique", "3", "--horizon", "50"]);
    // Limit-0 elements settle at once, so 0-cliques of size 3 exist.
    assert_eq!(code, 1);
    assert!(out.is_empty());
}

#[test]
fn experiment_csv_has_fixed_columns() {
    let (code, out, _) = run(&[
        "experiment", "random-extract", "--trials", "4", "--instances", "2", "--n", "10000", "--format", "csv",
    ]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("trial,instance,seed,stream,success,size,failure_step"));
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(out.lines().last().unwrap().starts_with("# trials=4"));
}

#[test]
fn large_check_and_group() {
    let (_, out, _) = run(&["large", "check", "2,5,9", "1"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["large"], true);
    let path = scratch("zero.txt");
    fs::write(&path, run(&["gen", "constant", "--n", "30"]).1).unwrap();
    let (code, out, _) = run(&["large", "group", path.to_str().unwrap(), "--notion", "omega:1", "--count", "3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["grouping"]["blocks"], serde_json::json!([[0], [1, 2], [3, 4, 5, 6]]));
    assert_eq!(run(&["large", "group", path.to_str().unwrap(), "--notion", "nope"]).0, 1);
}

#[test]
fn mirror_round_trip() {
    let path = scratch("order.txt");
    fs::write(&path, "3\n011\n001\n000\n").unwrap();
    let (code, out, err) = run(&["construct", "mirror", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("6\n"));
}

#[test]
fn fractal_cache_is_used() {
    let dir = scratch("cache");
    std::env::set_var("RPL_CACHE_DIR", &dir);
    assert_eq!(run(&["fractal", "gen", "2", "3"]).1, run(&["fractal", "gen", "2", "3"]).1);
    assert!(dir.join("fractal-2-3.txt").is_file());
    std::env::remove_var("RPL_CACHE_DIR");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["gen", "unknown-family"]).0, 2);
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&["fractal", "embed", "2031", "2"]).0, 1);
}
