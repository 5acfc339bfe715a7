use std::path::Path;
use std::process::{Command, Output};

use densmat::generate::tight_binding_spectrum;
use densmat::matcore::read_matrix;
use densmat::oracle::{condition_number_reference, eigenvalues_reference};
use serde_json::Value;

fn densmat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densmat"))
        .current_dir(dir)
        .env_remove("DENSMAT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = densmat(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    densmat(dir, args).status.code().expect("exited normally")
}

fn without_timing(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"timing_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn report(json: &str) -> Value {
    serde_json::from_str(json).unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for kind in [
        "random_hermitian",
        "shattered",
        "hpd",
        "tight_binding_chain",
        "degenerate_spectrum",
    ] {
        ok(
            d,
            &[
                "generate", "--kind", kind, "--n", "8", "--seed", "1", "--output", "a.mtx",
            ],
        );
        ok(
            d,
            &[
                "generate", "--kind", kind, "--n", "8", "--seed", "1", "--output", "b.mtx",
            ],
        );
        assert_eq!(
            std::fs::read(d.join("a.mtx")).unwrap(),
            std::fs::read(d.join("b.mtx")).unwrap(),
            "{kind}"
        );
    }
    ok(
        d,
        &[
            "generate",
            "--kind",
            "random_hermitian",
            "--n",
            "8",
            "--seed",
            "2",
            "--output",
            "c.mtx",
        ],
    );
    assert_ne!(
        std::fs::read(d.join("a.mtx")).unwrap(),
        std::fs::read(d.join("c.mtx")).unwrap()
    );
}

#[test]
fn generated_problems_match_their_construction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate", "--kind", "hpd", "--n", "12", "--kappa", "100", "--output", "m.bin",
        ],
    );
    let k = condition_number_reference(&read_matrix(&d.join("m.bin")).unwrap()).unwrap();
    assert!((50.0..=200.0).contains(&k), "kappa {k}");

    ok(
        d,
        &[
            "generate",
            "--kind",
            "tight_binding_chain",
            "--n",
            "10",
            "--hopping",
            "1",
            "--output",
            "t.mtx",
        ],
    );
    let got = eigenvalues_reference(&read_matrix(&d.join("t.mtx")).unwrap()).unwrap();
    for (x, y) in got.iter().zip(tight_binding_spectrum(10, 1.0)) {
        assert!((x - y).abs() <= 1e-12);
    }

    let json = ok(
        d,
        &[
            "generate",
            "--kind",
            "degenerate_spectrum",
            "--n",
            "9",
            "--levels=-0.4,0.1,0.3",
            "--output",
            "g.mtx",
        ],
    );
    let planted: Vec<f64> = serde_json::from_value(report(&json)["outputs"]["spectrum"].clone()).unwrap();
    let got = eigenvalues_reference(&read_matrix(&d.join("g.mtx")).unwrap()).unwrap();
    assert_eq!(planted.iter().filter(|&&v| v == 0.1).count(), 3);
    for (x, y) in got.iter().zip(&planted) {
        assert!((x - y).abs() <= 1e-13);
    }
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--kind",
            "random_hermitian",
            "--n",
            "10",
            "--output",
            "a.mtx",
        ],
    );
    ok(
        d,
        &[
            "generate", "--kind", "hpd", "--n", "10", "--kappa", "10", "--output", "m.mtx",
        ],
    );
    ok(
        d,
        &[
            "generate",
            "--kind",
            "tight_binding_chain",
            "--n",
            "10",
            "--output",
            "c.mtx",
        ],
    );
    ok(
        d,
        &["generate", "--kind", "ks_problem", "--n", "8", "--output", "sys.json"],
    );
    let runs: [&[&str]; 8] = [
        &["evals", "--input", "a.mtx", "--seed", "5", "--oracle"],
        &[
            "evals",
            "--input",
            "m.mtx",
            "--relative",
            "--eps",
            "0.01",
            "--seed",
            "5",
        ],
        &["chol", "--input", "m.mtx"],
        &["fermi", "--input", "c.mtx", "--k", "5", "--seed", "3"],
        &["density", "--input", "c.mtx", "--k", "5", "--seed", "3"],
        &["ks", "--input", "sys.json", "--seed", "9"],
        &["shatter", "--n", "6", "--trials", "4", "--seed", "2"],
        &[
            "sweep-precision",
            "--n",
            "6",
            "--trials",
            "3",
            "--min-bits",
            "32",
            "--max-bits",
            "40",
            "--json-out",
            "s.json",
        ],
    ];
    for args in runs {
        let first = ok(d, args);
        let first = if first.starts_with('{') {
            first
        } else {
            std::fs::read_to_string(d.join("s.json")).unwrap()
        };
        let second = ok(d, args);
        let second = if second.starts_with('{') {
            second
        } else {
            std::fs::read_to_string(d.join("s.json")).unwrap()
        };
        assert_eq!(without_timing(&first), without_timing(&second), "{args:?}");
        assert!(report(&first)["timing_ms"].is_number());
        assert_eq!(report(&first)["schema"], 1);
    }
}

#[test]
fn trial_results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep-precision",
        "--op",
        "shatter",
        "--n",
        "6",
        "--trials",
        "9",
        "--min-bits",
        "24",
        "--max-bits",
        "40",
    ];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_densmat"))
            .current_dir(dir.path())
            .env("DENSMAT_THREADS", threads)
            .args(args)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    let csv = String::from_utf8(one).unwrap();
    assert!(csv.starts_with("bits,trials,successes"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--kind",
            "random_hermitian",
            "--n",
            "8",
            "--output",
            "a.mtx",
        ],
    );
    assert_eq!(code(d, &["evals", "--input", "a.mtx"]), 0);
    assert_eq!(code(d, &["evals", "--input", "missing.mtx"]), 5);
    assert_eq!(code(d, &["evals", "--input", "a.mtx", "--eps", "2"]), 2);
    assert_eq!(code(d, &["evals", "--input", "a.mtx", "--emulate-bits", "16"]), 3);
    assert_eq!(code(d, &["evals", "--input", "a.mtx", "--emulate-bits", "99"]), 2);
    assert_eq!(code(d, &["fermi", "--input", "a.mtx", "--k", "8"]), 2);
    assert_eq!(
        code(d, &["generate", "--kind", "hpd", "--n", "1", "--output", "x.mtx"]),
        2
    );
    std::fs::write(d.join("bad.mtx"), "not a matrix\n").unwrap();
    assert_eq!(code(d, &["chol", "--input", "bad.mtx"]), 2);
    assert_eq!(code(d, &["chol", "--input", "a.mtx", "--eps", "1e-3"]), 2);
}

#[test]
fn cholesky_reports_breakdown_instead_of_failing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--kind",
            "random_hermitian",
            "--n",
            "8",
            "--output",
            "a.mtx",
        ],
    );
    let r = report(&ok(d, &["chol", "--input", "a.mtx"]));
    assert_eq!(r["outputs"]["breakdown"], true);
    ok(
        d,
        &[
            "generate", "--kind", "hpd", "--n", "16", "--kappa", "10", "--output", "m.mtx",
        ],
    );
    let r = report(&ok(d, &["chol", "--input", "m.mtx", "--output", "l.mtx"]));
    assert_eq!(r["outputs"]["breakdown"], false);
    assert!(r["outputs"]["relative_residual"].as_f64().unwrap() <= 1e-13);
    assert_eq!(r["certificates"][0]["op_name"], "chol");
    assert!(d.join("l.mtx").exists());
}

#[test]
fn config_file_and_flags_override_constants() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.toml"), "backend = \"strassen\"\n[constants]\nc1 = 50\n").unwrap();
    ok(
        d,
        &[
            "generate",
            "--kind",
            "tight_binding_chain",
            "--n",
            "6",
            "--output",
            "c.mtx",
        ],
    );
    let r = report(&ok(
        d,
        &[
            "fermi", "--input", "c.mtx", "--k", "3", "--config", "c.toml", "--set", "c2=2.5",
        ],
    ));
    assert_eq!(r["inputs"]["backend"], "strassen");
    assert_eq!(r["inputs"]["constants"]["c1"], 50.0);
    assert_eq!(r["inputs"]["constants"]["c2"], 2.5);
    assert_eq!(r["inputs"]["constants"]["mm_exponent"], 2.2);
    assert_eq!(code(d, &["fermi", "--input", "c.mtx", "--k", "3", "--set", "c7=1"]), 2);
    assert_eq!(
        code(
            d,
            &["fermi", "--input", "c.mtx", "--k", "3", "--config", "missing.toml"]
        ),
        5
    );
}

#[test]
fn ks_pipeline_agrees_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "generate",
            "--kind",
            "ks_problem",
            "--n",
            "10",
            "--k",
            "4",
            "--queries",
            "3",
            "--output",
            "sys.json",
        ],
    );
    let r = report(&ok(d, &["ks", "--input", "sys.json", "--oracle", "--output", "p.mtx"]));
    let o = &r["outputs"];
    let mu = o["fermi_level"].as_f64().unwrap();
    let want = o["oracle_fermi_level"].as_f64().unwrap();
    let gap = o["oracle_fermi_gap"].as_f64().unwrap();
    assert!((mu - want).abs() <= 0.05 * gap, "mu {mu} vs {want}");
    assert_eq!(o["electron_density"].as_array().unwrap().len(), 3);
    assert!(!r["certificates"].as_array().unwrap().is_empty());
    assert!(d.join("p.mtx").exists());
}
