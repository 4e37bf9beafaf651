use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn confgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confgeom"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (Value, i32) {
    let mut full = args.to_vec();
    full.extend(["--json", "-"]);
    let out = confgeom(&full);
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (json, code)
}

fn strip_volatile(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timestamp");
            map.remove("wall_time_s");
            map.values_mut().for_each(strip_volatile);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

/// Numbers agree to `rel·max(|a|,|b|) + abs`; everything else exactly.
/// Error fields sit near round-off, so they get an absolute floor instead.
fn assert_close(path: &str, got: &Value, want: &Value) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            let abs = if path.ends_with("rel_err") || path.ends_with("abs_err") { 1e-10 } else { 1e-12 };
            let tol = 1e-8 * a.abs().max(b.abs()) + abs;
            assert!((a - b).abs() <= tol, "{path}: {a} vs {b}");
        }
        (Value::Object(a), Value::Object(b)) => {
            let mut ka: Vec<_> = a.keys().collect();
            let mut kb: Vec<_> = b.keys().collect();
            ka.sort();
            kb.sort();
            assert_eq!(ka, kb, "{path}: keys");
            for k in a.keys() {
                assert_close(&format!("{path}.{k}"), &a[k], &b[k]);
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(&format!("{path}[{i}]"), x, y);
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

/// Compare against `tests/golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, args: &[&str]) -> Value {
    let (mut json, code) = report(args);
    assert_eq!(code, 0, "{name}: {json:#}");
    strip_volatile(&mut json);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap() + "\n").unwrap();
    }
    let want: Value = serde_json::from_str(&std::fs::read_to_string(&path).expect("golden file")).unwrap();
    assert_close(name, &json, &want);
    json
}

fn values<'a>(rec: &'a Value, prefix: &str) -> Vec<(&'a str, f64)> {
    rec["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["label"].as_str().unwrap(), e["value"].as_f64().unwrap()))
        .filter(|(l, _)| l.starts_with(prefix))
        .collect()
}

#[test]
fn golden_flat_halfspace_hypersurface() {
    let json = golden("flat_halfspace_hypersurface", &["hypersurface", "examples/flat_halfspace.toml"]);
    for rec in json["checks"].as_array().unwrap() {
        for (label, v) in values(rec, "") {
            let want = match label {
                l if l.starts_with("gbar[") => {
                    let idx: Vec<usize> = l[5..l.len() - 1].split(',').map(|s| s.parse().unwrap()).collect();
                    if idx[0] == idx[1] && idx[0] < 3 { 1.0 } else { 0.0 }
                }
                "n[3]" => 1.0,
                _ => 0.0,
            };
            assert!((v - want).abs() <= 1e-12, "{label} = {v}");
        }
    }
}

#[test]
fn golden_flat_halfspace_curvature() {
    let json = golden("flat_halfspace_curvature", &["curvature", "examples/flat_halfspace.toml"]);
    let rec = &json["checks"][0];
    assert!(values(rec, "").iter().filter(|(l, _)| !l.starts_with("g[")).all(|(_, v)| v.abs() <= 1e-12));
}

#[test]
fn golden_random_curved_invariance() {
    let json = golden("random_curved_invariance_iv4", &["invariance", "--invariant", "iv4", "--trials", "20", "examples/random_curved.toml"]);
    assert_eq!(json["passed"], 20);
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["tolerance"] == 1e-7));
}

#[test]
fn golden_random_curved_yamabe() {
    let json = golden("random_curved_yamabe", &["yamabe", "examples/random_curved.toml"]);
    let b = values(&json["checks"][0], "obstruction");
    assert!(b[0].1.abs() > 1e-6, "generic geometry has an obstruction: {b:?}");
}

#[test]
fn golden_random_curved_tractor() {
    golden("random_curved_tractor", &["tractor-check", "examples/random_curved.toml"]);
}

#[test]
fn golden_random_curved_pointwise_identities() {
    let json = golden(
        "random_curved_verify",
        &["verify", "--identity", "iio", "--identity", "fialkow", "--identity", "codazzi", "examples/random_curved.toml"],
    );
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["iio", "fialkow", "codazzi"]);
}

#[test]
fn golden_random_curved_pairing() {
    golden("random_curved_pairing", &["pairing", "--nodes", "4", "examples/random_curved.toml"]);
}

/// Reduced quadrature keeps the golden run short; the full-resolution run is below.
#[test]
fn golden_perturbed_flat_actions() {
    let json = golden("perturbed_flat_actions", &["verify", "--nodes", "6", "examples/perturbed_flat.toml"]);
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["weyl2", "weyl2-routes", "eh"]);
}

#[test]
fn weyl2_variation_at_manifest_resolution() {
    let (json, code) = report(&["verify", "--identity", "weyl2", "examples/perturbed_flat.toml"]);
    assert_eq!(code, 0, "{json:#}");
    let rec = &json["checks"][0];
    assert_eq!(rec["name"], "weyl2");
    assert!(rec["rel_err"].as_f64().unwrap() <= 2e-3);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["tractor-check", "examples/random_curved.toml"][..],
        &["invariance", "--invariant", "fialkow", "--trials", "6", "--seed", "99", "examples/random_curved.toml"],
    ] {
        let (mut a, _) = report(args);
        let (mut b, _) = report(args);
        strip_volatile(&mut a);
        strip_volatile(&mut b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

/// Trial `t` does not depend on how many trials run.
#[test]
fn trials_are_prefix_stable() {
    let (short, _) = report(&["invariance", "--invariant", "weyl", "--trials", "3", "examples/random_curved.toml"]);
    let (long, _) = report(&["invariance", "--invariant", "weyl", "--trials", "5", "examples/random_curved.toml"]);
    for i in 0..3 {
        assert_eq!(short["checks"][i]["values"], long["checks"][i]["values"]);
    }
    let (other, _) = report(&["invariance", "--invariant", "weyl", "--trials", "3", "--seed", "5", "examples/random_curved.toml"]);
    assert_ne!(short["checks"][0]["values"], other["checks"][0]["values"]);
}

#[test]
fn tolerance_precedence() {
    let (json, _) = report(&["verify", "--identity", "eh", "--nodes", "4", "examples/perturbed_flat.toml"]);
    assert_eq!(json["checks"][0]["tolerance"], 1e-3);
    let (json, code) = report(&["curvature", "--tolerance", "1e-30", "examples/random_curved.toml"]);
    assert_eq!(json["checks"][0]["tolerance"], 1e-30);
    assert_eq!((code, json["pass"].as_bool()), (1, Some(false)));
}

#[test]
fn csv_flattens_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = confgeom(&["hypersurface", "examples/flat_halfspace.toml", "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,kind,label,value"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|r| r.starts_with("hypersurface[p0],value,\"iv4[1,2]\",")));
    assert!(rows.iter().any(|r| r.starts_with("hypersurface[p1],residual,codazzi,")));
}

fn write_manifest(dir: &Path, body: &str) -> String {
    let p = dir.join("m.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const FLAT3: &str = r#"
dimension = 3
metric = [["1", "0", "0"], ["", "1", "0"], ["", "", "1"]]
defining_function = "x3 - 0.1*x1^2"
"#;

#[test]
fn bad_manifests_exit_two_with_manifest_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("dimension = 7", FLAT3.replace("dimension = 3", "dimension = 7")),
        ("unknown field", format!("{FLAT3}colour = 3\n")),
        ("asymmetric", FLAT3.replace(r#"["", "1", "0"]"#, r#"["0.5", "1", "0"]"#)),
        ("bad expression", FLAT3.replace("x3 - 0.1*x1^2", "x3 - (x1")),
        ("unknown coordinate", FLAT3.replace("x3 - 0.1*x1^2", "x4")),
        ("not toml", "dimension = = 3".to_string()),
        ("off-surface point", format!("{FLAT3}points = [[0.0, 0.0, 1.0]]\n").replace("x3 - 0.1*x1^2", "x3")),
    ];
    for (what, body) in cases {
        let path = write_manifest(dir.path(), &body);
        let out = confgeom(&["curvature", &path]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        if what == "off-surface point" {
            // Parses fine; the curvature command does not need the point on Σ.
            assert_eq!(out.status.code(), Some(0), "{what}: {stderr}");
            let out = confgeom(&["hypersurface", &path]);
            let stderr = String::from_utf8_lossy(&out.stderr);
            assert_eq!(out.status.code(), Some(2), "{what}: {stderr}");
            assert!(stderr.starts_with("error[numerical]"), "{what}: {stderr}");
            continue;
        }
        assert_eq!(out.status.code(), Some(2), "{what}: {stderr}");
        assert!(stderr.starts_with("error[manifest]"), "{what}: {stderr}");
    }
    let out = confgeom(&["curvature", "no/such/manifest.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[manifest]"));
}

#[test]
fn missing_sections_and_unsupported_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_manifest(dir.path(), FLAT3);
    let out = confgeom(&["verify", "--identity", "eh", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[domain]"));
    let out = confgeom(&["verify", &path]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no identity requested"));
    let out = confgeom(&["tractor-check", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[numerical]"));
    // Three-dimensional hypersurfaces still report the basic extrinsic data.
    let (json, code) = report(&["hypersurface", &path]);
    assert_eq!(code, 0, "{json:#}");
    assert!(values(&json["checks"][0], "iio").iter().any(|(_, v)| v.abs() > 1e-3));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["frobnicate", "examples/flat_halfspace.toml"][..],
        &["invariance", "--invariant", "nonsense", "examples/flat_halfspace.toml"],
        &["verify", "--identity", "gauss", "examples/flat_halfspace.toml"],
        &["curvature"],
    ] {
        let out = confgeom(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = confgeom(&["curvature", "--tolerance=-1", "examples/flat_halfspace.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]"));
}
