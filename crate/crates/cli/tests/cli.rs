use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_baseline-odx"));
    c.env_remove("BASELINE_ODX_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&run(args))).expect("json output")
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("baseline-odx-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn label(t: &Value) -> String {
    t.as_array().unwrap().iter().map(|x| x.to_string()).collect()
}

fn pairs(design: &Value) -> Vec<(String, String)> {
    design["slides"].as_array().unwrap().iter().map(|s| (label(&s["red"]), label(&s["green"]))).collect()
}

/// `effect -> variance` from the evaluate CSV, plus the criterion row.
fn csv(text: &str) -> (Vec<(String, String)>, String) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("effect,order,variance"));
    let mut rows = Vec::new();
    let mut criterion = String::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[0] == "criterion" {
            criterion = cols[2].to_string();
        } else {
            rows.push((cols[0].to_string(), cols[2].to_string()));
        }
    }
    (rows, criterion)
}

#[test]
fn construct_saturated_three_factor_design() {
    let d = json(&["construct", "--layout", "2x2x3", "--kind", "d0"]);
    assert_eq!(d["layout"], serde_json::json!([2, 2, 3]));
    let slides = pairs(&d);
    assert_eq!(slides.len(), 11);
    assert!(slides.contains(&("112".into(), "012".into())) || slides.contains(&("112".into(), "102".into())));
}

#[test]
fn construct_family_member() {
    let d = json(&["construct", "--layout", "2x2", "--kind", "family", "--N", "22", "--phi", "5"]);
    let slides = pairs(&d);
    let count = |r: &str, g: &str| slides.iter().filter(|(a, b)| a == r && b == g).count();
    assert_eq!(
        [
            count("01", "00"),
            count("10", "00"),
            count("11", "00"),
            count("10", "01"),
            count("11", "01"),
            count("11", "10")
        ],
        [6, 6, 0, 0, 5, 5]
    );
}

#[test]
fn invalid_input_exits_3() {
    for args in [
        vec!["construct", "--layout", "2by2", "--kind", "d0"],
        vec!["construct", "--layout", "2x2", "--kind", "nonsense"],
        vec!["search", "--layout", "2x2"],
        vec!["evaluate", "--design", "/nonexistent/design.json"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(3), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn evaluate_symmetric_and_dye_swap() {
    let sym = stdout(&run(&["construct", "--layout", "2x2", "--kind", "symmetric"]));
    let path = temp_file("sym.json", &sym);
    let (rows, criterion) = csv(&stdout(&run(&["evaluate", "--design", path.to_str().unwrap()])));
    assert_eq!(rows, vec![("01".into(), "1/2".into()), ("10".into(), "1/2".into()), ("11".into(), "1".into())]);
    assert_eq!(criterion, "2");

    let swap = stdout(&run(&["construct", "--layout", "2x2", "--kind", "dswap"]));
    let path = temp_file("swap.json", &swap);
    let (rows, _) =
        csv(&stdout(&run(&["evaluate", "--design", path.to_str().unwrap(), "--model", "dye", "--weights", "3"])));
    let values: Vec<&str> = rows.iter().map(|(_, v)| v.as_str()).collect();
    assert_eq!(values, ["1/2", "1/2", "1"]);
}

#[test]
fn evaluate_disconnected_design_exits_2() {
    let path = temp_file(
        "disconnected.json",
        r#"{"layout":[2,2],"slides":[{"red":[0,1],"green":[0,0]},{"red":[1,1],"green":[1,0]},{"red":[1,1],"green":[1,0]}]}"#,
    );
    let out = run(&["evaluate", "--design", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_heteroscedastic_and_replicated() {
    let d = stdout(&run(&["construct", "--layout", "2x2", "--kind", "d0"]));
    let path = temp_file("d0.json", &d);
    let p = path.to_str().unwrap();
    let hetero = stdout(&run(&["evaluate", "--design", p, "--hetero", "00=2,01=5/2,10=5/2,11=3"]));
    let (rows, _) = csv(&hetero);
    assert_eq!(rows[0].1, "11/2");
    let positional = stdout(&run(&["evaluate", "--design", p, "--hetero", "2,2.5,2.5,3"]));
    assert_eq!(hetero, positional);
    assert_eq!(run(&["evaluate", "--design", p, "--hetero", "00=2"]).status.code(), Some(3));

    let plan = temp_file("plan.json", r#"{"subjects":[[0,1],[2,3],[4,5]]}"#);
    let (rows, _) =
        csv(&stdout(&run(&["evaluate", "--design", p, "--replication", plan.to_str().unwrap(), "--ratio", "1"])));
    assert_eq!(rows[0].1, "3");
}

#[test]
fn search_result_feeds_evaluate() {
    let out = stdout(&run(&["search", "--layout", "2x3", "--slides", "6", "--w", "2"]));
    let result: Value = serde_json::from_str(&out).unwrap();
    let path = temp_file("result.json", &out);
    let (_, criterion) = csv(&stdout(&run(&["evaluate", "--design", path.to_str().unwrap(), "--weights", "2"])));
    assert_eq!(Value::String(criterion), result["criterion"]);
    assert_eq!(result["optima_count"], 2);
    assert!(result.get("optima").is_none());
}

#[test]
fn admissible_six_slide_designs_exclude_symmetric() {
    let list = json(&["search", "--layout", "2x2", "--slides", "6", "--admissible"]);
    let designs = list.as_array().unwrap();
    assert!(!designs.is_empty());
    let sym = json(&["construct", "--layout", "2x2", "--kind", "symmetric"]);
    let mut sym_pairs = pairs(&sym);
    sym_pairs.sort();
    for d in designs {
        let mut p = pairs(d);
        p.sort();
        assert_ne!(p, sym_pairs);
    }
}

#[test]
fn search_output_is_independent_of_jobs() {
    let args = ["search", "--layout", "2x3", "--slides", "7", "--w", "3", "--optima"];
    let reference = stdout(&run(&[&args[..], &["--jobs", "1"]].concat()));
    for jobs in ["4", "8"] {
        assert_eq!(stdout(&run(&[&args[..], &["--jobs", jobs]].concat())), reference);
    }
    let from_env = bin().args(args).env("BASELINE_ODX_JOBS", "3").output().unwrap();
    assert_eq!(stdout(&from_env), reference);
    let approx = ["approx", "--layout", "2x3", "--w", "2"];
    assert_eq!(
        stdout(&run(&[&approx[..], &["--jobs", "1"]].concat())),
        stdout(&run(&[&approx[..], &["--jobs", "8"]].concat()))
    );
}

#[test]
fn restricted_and_augmented_search() {
    let restricted = json(&["search", "--layout", "2x3", "--slides", "7", "--restrict", "dbar", "--distinct"]);
    let global = json(&["search", "--layout", "2x3", "--slides", "7"]);
    assert_eq!(restricted["criterion"], global["criterion"]);
    let augmented = json(&["augment", "--layout", "2x2", "--slides", "8", "--model", "dye", "--w", "2"]);
    let full = json(&["search", "--layout", "2x2", "--slides", "8", "--model", "dye", "--w", "2"]);
    assert_eq!(augmented["criterion"], full["criterion"]);
    assert_eq!(run(&["search", "--layout", "2x2", "--slides", "5", "--model", "dye"]).status.code(), Some(2));
}

#[test]
fn approx_measure_rounding_and_efficiency() {
    let out = json(&["approx", "--layout", "2x2", "--w", "2", "--round", "22"]);
    let masses: Vec<f64> =
        out["measure"]["mass"].as_array().unwrap().iter().map(|m| m["pi"].as_f64().unwrap()).collect();
    assert!(masses.iter().any(|p| (p - 0.207107).abs() < 1e-6));
    let rounded = pairs(&out["rounded"]);
    assert_eq!(rounded.len(), 22);
    assert_eq!(rounded.iter().filter(|(r, g)| r == "11" && g == "01").count(), 5);

    let design = temp_file("rounded.json", &out["rounded"].to_string());
    let eff = json(&["approx", "--layout", "2x2", "--w", "2", "--efficiency-of", design.to_str().unwrap()]);
    assert!((eff["efficiency"].as_f64().unwrap() - 99.44).abs() < 0.01);

    let measure = temp_file("measure.json", &out["measure"].to_string());
    let eff = json(&["approx", "--layout", "2x2", "--w", "2", "--efficiency-of", measure.to_str().unwrap()]);
    assert!((eff["efficiency"].as_f64().unwrap() - 100.0).abs() < 1e-6);

    let orth = json(&["approx", "--layout", "2x2", "--w", "1", "--parametrization", "orthogonal"]);
    for m in orth["measure"]["mass"].as_array().unwrap() {
        assert!((m["pi"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-6);
    }
}
