use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn avglr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avglr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("running avglr")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Key paths with value kinds; array elements share the path `[]`.
fn schema(v: &Value, path: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            out.insert(format!("{path}: object"));
            for (k, x) in m {
                schema(x, &format!("{path}.{k}"), out);
            }
        }
        Value::Array(a) => {
            out.insert(format!("{path}: array"));
            for x in a {
                schema(x, &format!("{path}[]"), out);
            }
        }
        Value::Null => {
            out.insert(format!("{path}: null"));
        }
        Value::Bool(_) => {
            out.insert(format!("{path}: bool"));
        }
        Value::Number(_) => {
            out.insert(format!("{path}: number"));
        }
        Value::String(_) => {
            out.insert(format!("{path}: string"));
        }
    }
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "schema of {name} changed");
}

fn golden_json(name: &str, v: &Value) {
    let mut keys = BTreeSet::new();
    schema(v, "", &mut keys);
    golden(name, &(keys.into_iter().collect::<Vec<_>>().join("\n") + "\n"));
}

fn without_volatile(mut manifest: Value) -> Value {
    let m = manifest.as_object_mut().unwrap();
    m.remove("timestamp");
    m.remove("duration_seconds");
    manifest
}

#[test]
fn calibrate_convex_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = avglr(&["calibrate", "--scenario", "convex-n1", "--n-calib", "40000", "--workers", "2"], out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let cal = json(&a.join("calibration.json"));
    golden_json("calibration.schema", &cal);
    golden_json("manifest.schema", &json(&a.join("manifest.json")));

    let tol = 3.0 * (0.09f64 / 40_000.0).sqrt();
    for t in cal["tests"].as_array().unwrap() {
        let iv = t["region"]["intervals"].as_array().unwrap();
        assert_eq!(iv.len(), 2);
        assert!((iv[0][1].as_f64().unwrap() - 0.05).abs() < tol);
        assert!((iv[1][0].as_f64().unwrap() - 0.95).abs() < tol);
    }
    // same seed, different output directory and worker count
    assert_eq!(fs::read(a.join("calibration.json")).unwrap(), fs::read(b.join("calibration.json")).unwrap());
    assert_eq!(without_volatile(json(&a.join("manifest.json"))), without_volatile(json(&b.join("manifest.json"))));
}

#[test]
fn duel_writes_fixed_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["duel", "--scenario", "concave-n1", "--n-calib", "20000", "--n-power", "20000", "--seed", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let duel = json(&dir.path().join("duel.json"));
    golden_json("duel.schema", &duel);
    assert_eq!(duel["config"]["seed"], 5);
    let csv = fs::read_to_string(dir.path().join("duel.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("test,alternative,alpha,critical_value,p_hat,std_error,N,seed"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 8 && r[2] == "0.100000000" && r[6] == "20000"));
    assert_eq!(rows.iter().map(|r| r[1]).collect::<Vec<_>>(), ["p1", "p1", "p2", "p2", "null", "null"]);
}

#[test]
fn multi_run_scenarios_write_one_directory_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["calibrate", "--scenario", "symmetric-n5", "--n-calib", "5000"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for label in ["convex", "concave"] {
        assert!(dir.path().join(label).join("calibration.json").exists());
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
  "problem": {"kind": "quad", "density": "quad-9x2y2"},
  "statistics": ["avg-lr", "max-lr"],
  "alpha": 0.1,
  "n_calib": 5000,
  "n_power": 5000,
  "seed": 12
}
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = avglr(&["duel", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let duel = json(&out.join("duel.json"));
    assert_eq!(duel["report"]["alternatives"].as_array().unwrap().len(), 4);
    assert!(duel["regions"].is_null());
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["calibrate", "--scenario", "convex-n1", "--alpha", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha must lie in (0, 1)"));

    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        "{\n  \"problem\": {\"kind\": \"symmetric-pair\", \"shape\": \"convex-3x2\", \"n\": 1},\n  \"statistics\": [\"avg-lr\"],\n  \"alpha\": 1.5,\n  \"n_calib\": 5000,\n  \"n_power\": 5000,\n  \"seed\": 1\n}\n",
    )
    .unwrap();
    let o = avglr(&["calibrate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json:4: alpha"), "{}", stderr(&o));

    let o = avglr(&["reproduce", "--scenario", "no-such-thing"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    for id in ["convex-n1", "concave-n1", "symmetric-n5", "quad-bivariate", "discrete-oracle"] {
        assert!(stderr(&o).contains(id));
    }

    let o = avglr(&["duel"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = avglr(&["calibrate", "--scenario", "convex-n1", "--workers", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_discrete_oracle_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["reproduce", "--scenario", "discrete-oracle"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let scen = dir.path().join("discrete-oracle");
    let summary = json(&scen.join("summary.json"));
    golden_json("summary.schema", &summary);
    golden_json("discrete.schema", &json(&scen.join("discrete.json")));
    assert_eq!(summary["passed"], true);
    assert!(stderr(&o).lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn reproduce_concave_reports_max_lr_below_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["reproduce", "--scenario", "concave-n1", "--n-calib", "200000", "--n-power", "200000"], dir.path());
    let summary = json(&dir.path().join("concave-n1").join("summary.json"));
    let crit = summary["criteria"].as_array().unwrap();
    let below = crit.iter().find(|c| c["id"] == "max-lr-below-alpha").unwrap();
    assert_eq!(below["passed"], true);
    assert_eq!(o.status.code(), Some(if summary["passed"] == true { 0 } else { 1 }));
}

#[test]
fn figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = avglr(&["figure1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("figure1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,f,g,max_lr,avg_lr"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 999);
    assert!(rows[0][0] > 0.0 && rows[998][0] < 1.0);
    assert_eq!(rows[499], vec![0.5, 0.75, 0.75, 0.75, 0.75]);
    let last = &rows[998];
    assert_eq!((last[1], last[2]), (3.0 * 0.999f64.powi(2), 3.0 * 0.001f64.powi(2)));
    let regions = fs::read_to_string(dir.path().join("figure1_regions.csv")).unwrap();
    assert_eq!(
        regions,
        "statistic,lower,upper\nmax-lr,0,0.0500000000\nmax-lr,0.950000000,1.00000000\navg-lr,0,0.0500000000\navg-lr,0.950000000,1.00000000\n"
    );

    let o = avglr(&["figure1", "--scenario", "concave-n1", "--alpha", "0.2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let regions = fs::read_to_string(dir.path().join("figure1_regions.csv")).unwrap();
    assert!(regions.ends_with("avg-lr,0.400000000,0.600000000\n"), "{regions}");
}
