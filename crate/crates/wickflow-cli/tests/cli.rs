//! End-to-end tests of the binary: exit-code contract, artifact formats,
//! schema rejection, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BUILTINS: [&str; 7] = [
    "langevin",
    "ou_heat",
    "heat_wick_potential",
    "transport_whitenoise",
    "deterministic_demo",
    "fredholm_demo",
    "ou_polynomial",
];

const STATIONARY_BUILTINS: [&str; 2] = ["fredholm_demo", "ou_polynomial"];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wickflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, content).unwrap();
    p
}

fn builtin_config(dir: &Path, name: &str) -> PathBuf {
    write(
        dir,
        &format!("{name}.json"),
        &format!("{{\"problem\":{{\"type\":\"builtin\",\"name\":\"{name}\"}}}}"),
    )
}

fn solve_cmd(name: &str) -> &'static str {
    if STATIONARY_BUILTINS.contains(&name) {
        "solve-stationary"
    } else {
        "solve-evolution"
    }
}

#[test]
fn langevin_solves_with_passing_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "langevin");
    let out = tmp.path().join("out");
    let res = run(&["solve-evolution", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["pass_sup"], true);
    assert_eq!(cert["pass_der"], true);
}

#[test]
fn fredholm_demo_reports_half() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "fredholm_demo");
    let out = tmp.path().join("out");
    let res = run(&["solve-stationary", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "\"[]\",0.5"), "{csv}");
}

#[test]
fn positive_eigenvalues_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        r#"{"problem":{"type":"stationary",
            "a_tilde":{"simple":{"kind":"scalar","value":0.0}},
            "r":{"ou_polynomial":{"c":1.0,"coeffs":[1.0]}},
            "f":{"[]":[1.0]},
            "p":2.0,"truncation":{"n":2,"m":2},"k":0.6}}"#,
    );
    let out = tmp.path().join("out");
    let res = run(&["solve-stationary", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    assert!(!res.stderr.is_empty());
}

#[test]
fn wrong_problem_type_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "fredholm_demo");
    let out = tmp.path().join("out");
    let res = run(&["solve-evolution", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn malformed_configs_exit_2_with_diagnostics() {
    let cases: [&str; 20] = [
        "",
        "{",
        "null",
        "[]",
        "{\"problem\":null}",
        "{\"problem\":{}}",
        "{\"problem\":{\"type\":\"builtin\"}}",
        "{\"problem\":{\"type\":\"builtin\",\"name\":\"no_such_demo\"}}",
        "{\"problem\":{\"type\":\"builtin\",\"name\":\"langevin\",\"extra\":1}}",
        "{\"problem\":{\"type\":\"builtin\",\"name\":\"langevin\"},\"extra\":1}",
        "{\"problem\":{\"type\":\"warp_drive\"}}",
        "{\"problem\":{\"type\":\"evolution\"}}",
        // bad multi-index key
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"scalar\",\"value\":-1.0}},\"u0\":{\"0,1\":[1.0]},\"t_end\":1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // zero steps
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"scalar\",\"value\":-1.0}},\"u0\":{\"[]\":[1.0]},\"t_end\":1.0,\"n_steps\":0,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // negative horizon
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"scalar\",\"value\":-1.0}},\"u0\":{\"[]\":[1.0]},\"t_end\":-1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // initial data outside the truncation
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"scalar\",\"value\":-1.0}},\"u0\":{\"[9]\":[1.0]},\"t_end\":1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // diagonal operator of the wrong size
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"diag\",\"values\":[1.0,2.0]}},\"u0\":{\"[]\":[1.0]},\"t_end\":1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // unknown operator kind
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"teleport\"}},\"u0\":{\"[]\":[1.0]},\"t_end\":1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // non-numeric field
        "{\"problem\":{\"type\":\"evolution\",\"a\":{\"simple\":{\"kind\":\"scalar\",\"value\":\"fast\"}},\"u0\":{\"[]\":[1.0]},\"t_end\":1.0,\"n_steps\":4,\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1},\"m_bound\":1.0,\"w_bound\":0.0}}",
        // stationary with a ragged dense matrix
        "{\"problem\":{\"type\":\"stationary\",\"a_tilde\":{\"simple\":{\"kind\":\"dense\",\"rows\":[[1.0],[2.0,3.0]]}},\"r\":{\"ou_polynomial\":{\"c\":-1.0,\"coeffs\":[2.0]}},\"f\":{\"[]\":[1.0]},\"p\":2.0,\"truncation\":{\"n\":1,\"m\":1}}}",
    ];
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.json"), text);
        let out = tmp.path().join(format!("out{i}"));
        let res = run(&["solve-evolution", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "case {i}: {text}");
        assert!(!res.stderr.is_empty(), "case {i} gave no diagnostics");
        let res = run(&["solve-stationary", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "stationary case {i}: {text}");
    }
}

#[test]
fn builtins_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for name in BUILTINS {
        let cfg = builtin_config(tmp.path(), name);
        let mut contents: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for pass in 0..2 {
            let out = tmp.path().join(format!("{name}_{pass}"));
            let res = run(&[solve_cmd(name), "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
            assert!(res.status.success(), "{name}: {}", String::from_utf8_lossy(&res.stderr));
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            contents.push(files);
        }
        assert_eq!(contents[0], contents[1], "{name} outputs differ between runs");
    }
    println!("ACCEPTANCE 11 builtin reruns byte-identical: PASS");
}

#[test]
fn random_problems_reproducible_by_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "rand.json",
        r#"{"problem":{"type":"random_stationary","seed":11}}"#,
    );
    let other = write(
        tmp.path(),
        "rand2.json",
        r#"{"problem":{"type":"random_stationary","seed":12}}"#,
    );
    let mut outputs = Vec::new();
    for (i, c) in [&cfg, &cfg, &other].iter().enumerate() {
        let out = tmp.path().join(format!("r{i}"));
        let res = run(&["solve-stationary", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(fs::read(out.join("solution.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same seed must reproduce");
    assert_ne!(outputs[0], outputs[2], "different seeds must differ");
}

#[test]
fn wick_product_of_first_order_basis() {
    let tmp = tempfile::tempdir().unwrap();
    let basis = write(tmp.path(), "e1.csv", "alpha,v_1\n\"[1]\",1\n");
    let unit = write(tmp.path(), "unit.csv", "alpha,v_1\n\"[]\",1\n");
    let mixed = write(tmp.path(), "mixed.csv", "alpha,v_1\n\"[]\",0.5\n\"[0,2]\",-1.25\n");
    let out = tmp.path().join("prod.csv");
    let res = run(&["wick", "--lhs", basis.to_str().unwrap(), "--rhs", basis.to_str().unwrap(), "--op", "product", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "alpha,v_1\n\"[2]\",1\n");

    let out2 = tmp.path().join("unit_prod.csv");
    let res = run(&["wick", "--lhs", mixed.to_str().unwrap(), "--rhs", unit.to_str().unwrap(), "--op", "product", "--out", out2.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(
        fs::read_to_string(&out2).unwrap(),
        fs::read_to_string(&mixed).unwrap()
    );

    let out3 = tmp.path().join("pow.csv");
    let res = run(&["wick", "--lhs", basis.to_str().unwrap(), "--op", "power", "--power", "5", "--out", out3.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(fs::read_to_string(&out3).unwrap(), "alpha,v_1\n\"[5]\",1\n");
}

#[test]
fn wick_kind_mismatch_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.csv", "alpha,v_1,v_2\n\"[1]\",1,2\n");
    let b = write(tmp.path(), "b.csv", "alpha,v_1,v_2,v_3\n\"[1]\",1,2,3\n");
    let out = tmp.path().join("c.csv");
    let res = run(&["wick", "--lhs", a.to_str().unwrap(), "--rhs", b.to_str().unwrap(), "--op", "product", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn study_reports_tail_decay() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "heat_wick_potential");
    let out = tmp.path().join("study");
    let res = run(&["study", "--config", cfg.to_str().unwrap(), "--grid", "1x4,2x6,3x8", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    let rows = rep["grid"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row["certificate_pass"], true);
    }
    // per-level mass decays beyond the first chaos level
    let mass = rows[2]["per_level_mass"].as_array().unwrap();
    for w in mass[1..].windows(2) {
        assert!(
            w[1].as_f64().unwrap() < w[0].as_f64().unwrap(),
            "mass not decaying: {mass:?}"
        );
    }
}

#[test]
fn study_is_flat_past_noise_support() {
    // deterministic problem: refining the truncation adds only zero mass
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "deterministic_demo");
    let out = tmp.path().join("study");
    let res = run(&["study", "--config", cfg.to_str().unwrap(), "--grid", "1x1,2x2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    let rows = rep["grid"].as_array().unwrap();
    assert_eq!(rows[1]["delta_from_previous"].as_f64().unwrap(), 0.0);
}

#[test]
fn study_rejects_non_nested_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = builtin_config(tmp.path(), "langevin");
    let out = tmp.path().join("study");
    let res = run(&["study", "--config", cfg.to_str().unwrap(), "--grid", "2x4,1x8", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
