use std::fs;
use std::path::Path;

use linmap::cli::{run, EXIT_ERROR, EXIT_OK, EXIT_USAGE};

fn run_with(cache: &Path, args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["linmap", "--cache", cache.to_str().unwrap()];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn cache_in(dir: &tempfile::TempDir) -> std::path::PathBuf {
    dir.path().join("factor-cache.json")
}

#[test]
fn census_a_json() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with(&cache_in(&dir), &["census-A", "-q", "2", "-n", "3", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with(r#"{"q":"2","n":3,"value":"13","#), "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["inventory"].as_array().unwrap().is_empty());
}

#[test]
fn census_inventory_lists_every_class() {
    let dir = tempfile::tempdir().unwrap();
    let (_, out, _) = run_with(&cache_in(&dir), &["census-A", "-q", "2", "-n", "3", "--inventory", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["inventory"].as_array().unwrap().len(), 13);
    let (_, out, _) = run_with(&cache_in(&dir), &["census-B", "-q", "2", "-n", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["value"], "5");
    assert_eq!(v["inventory"].as_array().unwrap().len(), 5);
    assert!(v["inventory"][0]["data_count"].is_string());
}

#[test]
fn zsigmondy_table_marks_exceptions() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with(&cache_in(&dir), &["zsigmondy", "-q", "2", "--jmax", "8", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "j,prime");
    assert_eq!(lines[1], "1,none");
    assert_eq!(lines[6], "6,none");
    assert_eq!(lines[7], "7,127");
    assert_eq!(lines.len(), 9);
}

#[test]
fn sigma_table() {
    let dir = tempfile::tempdir().unwrap();
    let (_, out, _) = run_with(&cache_in(&dir), &["sigma", "-q", "2", "--imax", "4", "--format", "csv"]);
    assert_eq!(out, "i,sigma,sigma_star\n1,1,1\n2,2,1\n3,2,1\n4,4,2\n");
    let (_, long, _) = run_with(&cache_in(&dir), &["sigma", "-q", "2", "--i-max", "4", "--format", "csv"]);
    assert_eq!(out, long);
}

#[test]
fn other_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    let (_, out, _) = run_with(&c, &["bounds", "-q", "2", "-n", "2", "--format", "csv"]);
    assert_eq!(out, "q,n,lower,value,upper\n2,2,3,6,202\n");
    let (_, out, _) = run_with(&c, &["eq-main", "-q", "2", "-n", "2", "--format", "csv"]);
    assert_eq!(out, "q,n,maxterm_lower,value,maxterm_upper_raw,maxterm_upper\n2,2,1,6,2,303\n");
    let (_, out, _) = run_with(&c, &["oracle", "-q", "2", "-n", "2", "--format", "json"]);
    assert_eq!(
        out,
        "{\"q\":\"2\",\"n\":2,\"total_maps\":16,\"distinct_codes\":6,\"invertible_distinct_codes\":3,\"prop1_violations\":0}\n"
    );
    let (_, out, _) = run_with(&c, &["oracle", "-q", "2", "-n", "3", "--nilpotent", "--format", "csv"]);
    assert!(out.ends_with("2,3,64,3,3,true\n"), "{out}");
    let (_, out, _) = run_with(&c, &["cycles", "-q", "2", "--data", "3:1,1:1", "--format", "csv"]);
    assert_eq!(out, "q,data,structure\n2,\"1:1,3:1\",\"1:2,3:2\"\n");
    let (_, out, _) = run_with(&c, &["order", "-q", "2", "--poly", "1,1,0,1", "--format", "csv"]);
    assert_eq!(out, "q,poly,order\n2,\"1,1,0,1\",7\n");
    let (_, out, _) = run_with(&c, &["factor-product", "--cycles", "1:1,2:2,3:1,6:2", "--format", "json"]);
    assert_eq!(out, "{\"cycles\":\"1:1,2:2,3:1,6:2\",\"factors\":[[\"2\",\"2\"],[\"3\",\"1\"]]}\n");
    let (_, out, _) = run_with(&c, &["growth", "-q", "2", "--n-max", "3", "--format", "csv"]);
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().nth(1).unwrap().starts_with("1,0.693147,,"));
}

#[test]
fn errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    let (code, _, err) = run_with(&c, &["census-A", "-q", "6", "-n", "2"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("prime power"));
    let (code, _, _) = run_with(&c, &["oracle", "-q", "2", "-n", "5"]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, _) = run_with(&c, &["factor-product", "--cycles", "1:2,2:1"]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, err) = run_with(&c, &["no-such-command"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(!err.is_empty());
    let (code, _, _) = run_with(&c, &["census-A", "-q", "2"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, out, _) = run_with(&c, &["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("census-A"));
}

#[test]
fn output_is_deterministic_and_independent_of_cache() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    for args in [
        &["census-B", "-q", "3", "-n", "5", "--format", "json"][..],
        &["bounds", "-q", "5", "--n-max", "6", "--format", "json"],
        &["verify", "--seed", "7", "--format", "json"],
    ] {
        let _ = fs::remove_file(&c);
        let cold = run_with(&c, args);
        assert!(c.exists());
        let warm = run_with(&c, args);
        assert_eq!(cold.0, EXIT_OK);
        assert_eq!(cold, warm);
    }
}

#[test]
fn verify_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with(&cache_in(&dir), &["verify", "--seed", "3", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "suite,passed,failed");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0")));
}

#[test]
fn corrupted_cache_entry_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let c = cache_in(&dir);
    fs::write(&c, r#"{"15": [[3,1]], "7": [["7",1]]}"#).unwrap();
    let (code, out, err) = run_with(&c, &["sigma", "-q", "2", "--imax", "4", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("dropping cache entry \"15\""), "{err}");
    assert!(out.ends_with("4,4,2\n"));
    let stored: serde_json::Value = serde_json::from_str(&fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(stored["15"], serde_json::json!([["3", 1], ["5", 1]]));
}

#[test]
fn cache_location_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env-cache.json");
    std::env::set_var(linmap::cli::CACHE_ENV, &path);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(["linmap", "sigma", "-q", "3", "--imax", "3"], &mut out, &mut err);
    std::env::remove_var(linmap::cli::CACHE_ENV);
    assert_eq!(code, EXIT_OK);
    assert!(path.exists());
}
