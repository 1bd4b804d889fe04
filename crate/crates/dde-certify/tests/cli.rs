//! Exit-code contract and output determinism of the `dde-certify` binary.

use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dde-certify");

fn write_system(json: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

const STABLE: &str = r#"{"n":1,"m":1,"A":[[[[-1.0,1.0]]],[[[0.5,0.0]]]]}"#;
const UNSTABLE: &str = r#"{"n":1,"m":1,"A":[[[-1.0]],[[-1.5]]]}"#;
// slack = -1 + 1.000000000000001 ~ 1e-15, inside the closed-form tolerance band
const BORDERLINE: &str = r#"{"n":1,"m":1,"A":[[[-1.0]],[[1.000000000000001]]]}"#;
// A0 = diag(2, -1), A1 = 0.1 I: hyperbolic but not stable
const HYPERBOLIC: &str = r#"{"n":2,"m":1,
  "A":[[[2.0,0.0],[0.0,-1.0]],[[0.1,0.0],[0.0,0.1]]]}"#;

#[test]
fn certify_exit_codes_and_verdicts() {
    let f = write_system(STABLE);
    let out = run(&["certify", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v = stdout_json(&out);
    assert_eq!(v["result"]["verdict"], "CertifiedStable");
    assert_eq!(
        v["input_digest"].as_str().unwrap().len(),
        64,
        "sha-256 digest expected"
    );

    let f = write_system(UNSTABLE);
    let out = run(&["certify", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let v = stdout_json(&out);
    assert_eq!(v["result"]["verdict"], "CertifiedNot");
    assert!(
        v["result"]["witness"]["omega"].as_f64().unwrap().abs() > 1.0,
        "crossing witness expected"
    );

    let f = write_system(BORDERLINE);
    let out = run(&["certify", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert_eq!(stdout_json(&out)["result"]["verdict"], "Inconclusive");
}

#[test]
fn hyperbolic_differs_from_stable() {
    let f = write_system(HYPERBOLIC);
    let out = run(&["certify", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "not stable: {out:?}");
    let out = run(&["hyperbolic", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "but hyperbolic: {out:?}");
}

#[test]
fn usage_errors_exit_11() {
    // malformed JSON
    let f = write_system("{\"n\": 1, \"m\":");
    let out = run(&["certify", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(11), "{out:?}");
    assert!(!out.stderr.is_empty());

    // missing file
    let out = run(&["certify", "/nonexistent/system.json"]);
    assert_eq!(out.status.code(), Some(11));

    // unknown flag
    let out = run(&["certify", "--bogus"]);
    assert_eq!(out.status.code(), Some(11));

    // csv format where no tabular output exists
    let f = write_system(STABLE);
    let out = run(&["certify", f.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(11), "{out:?}");

    // help and version are not errors
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn results_deterministic_across_threads() {
    let f = write_system(UNSTABLE);
    let path = f.path().to_str().unwrap();
    let a = stdout_json(&run(&["certify", path, "--threads", "1"]));
    let b = stdout_json(&run(&["certify", path, "--threads", "4"]));
    assert_eq!(a["result"], b["result"], "certify result must not depend on --threads");
    assert_eq!(a["input_digest"], b["input_digest"]);

    let run_csv = |threads: &str| -> Vec<u8> {
        let out = run(&[
            "spectrum", path, "--tau", "1.5", "--format", "csv", "--threads", threads,
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
        out.stdout
    };
    let csv1 = run_csv("1");
    let csv4 = run_csv("4");
    assert_eq!(csv1, csv4, "spectrum CSV must be byte-identical across --threads");
    assert!(csv1.starts_with(b"re,im,residual"));
}

#[test]
fn subcommand_outputs_well_formed() {
    let f = write_system(STABLE);
    let path = f.path().to_str().unwrap();

    let out = run(&["spectrum", path, "--tau", "2.0"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v = stdout_json(&out);
    let roots = v["result"]["report"]["roots"].as_array().unwrap();
    assert!(!roots.is_empty());
    for r in roots {
        assert!(r["lambda"][0].as_f64().unwrap() < 0.0, "stable case: {r}");
    }

    let out = run(&["asymptotic", path, "--points", "257", "--tau", "5.0"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v = stdout_json(&out);
    assert!(v["result"]["branches"].as_array().map_or(false, |b| !b.is_empty()));

    // --tau and --epsilon scalings are mutually exclusive
    let out = run(&["asymptotic", path, "--tau", "5.0", "--epsilon", "0.01"]);
    assert_eq!(out.status.code(), Some(11), "{out:?}");

    // resonances on a stable system finds nothing but still succeeds
    let out = run(&["resonances", path]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    // unstable system: delay families with small residuals
    let f = write_system(UNSTABLE);
    let out = run(&["resonances", f.path().to_str().unwrap(), "--epsilon", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v = stdout_json(&out);
    let fam = &v["result"]["family"];
    assert!(fam["omega0"].as_f64().unwrap().abs() > 1.0);
    let sets = fam["delay_sets"].as_array().unwrap();
    assert!(!sets.is_empty());
    for s in sets {
        assert!(s["residual"].as_f64().unwrap() < 1e-9);
    }
    assert!(fam["hierarchical"]["residual"].as_f64().unwrap() < 1e-9);

    // --out writes the same report to a file
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = run(&["certify", path, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["result"]["verdict"], "CertifiedStable");
}
