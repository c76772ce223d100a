use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_musielak"))
}

struct Run {
    dir: TempDir,
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn report(&self, name: &str) -> Value {
        let text = fs::read_to_string(self.out.join(format!("{name}.json"))).unwrap();
        serde_json::from_str(&text).unwrap()
    }
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn run_text(text: &str, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let output = bin().arg("run").arg("--config").arg(&config).arg("--out").arg(&out).args(extra).output().unwrap();
    Run { dir, out, output }
}

fn run(config: &Value) -> Run {
    run_text(&config.to_string(), &[])
}

fn describe(config: &Value) -> (i32, String, String) {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &config.to_string());
    let o = bin().arg("describe").arg("--config").arg(&path).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap(), String::from_utf8(o.stderr).unwrap())
}

fn unit_interval(nodes: usize, tasks: Value) -> Value {
    json!({
        "schema_version": 1,
        "domain": { "lower": [0.0], "upper": [1.0], "nodes": nodes },
        "phi": [{ "id": "square", "family": "power_variable", "p": 2.0 }],
        "tasks": tasks,
    })
}

#[test]
fn empty_task_list_succeeds_without_reports() {
    let r = run(&unit_interval(33, json!([])));
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let files: Vec<_> = fs::read_dir(&r.out).unwrap().collect();
    assert!(files.is_empty());
}

#[test]
fn sine_scenario_reports_the_explicit_constant_ratio() {
    let tasks = json!([
        { "task": "verify-poincare", "name": "bumps", "phi": ["square"] },
        { "task": "verify-poincare", "name": "sine", "phi": ["square"],
          "functions": [{ "kind": "sine", "id": "sin" }], "sides": "modular" }
    ]);
    let r = run(&unit_interval(1025, tasks));
    assert_eq!(r.code(), 0, "{}", r.stderr());
    assert_eq!(r.report("bumps")["status"], "pass");
    let sine = r.report("sine");
    assert_eq!(sine["schema_version"], 1);
    let side = &sine["result"]["reports"][0]["report"]["modular"];
    // ∫ sin² = 1/2, ∫ (2π cos)² = 2π²; ratio 1/(4π²).
    let ratio = side["ratio"].as_f64().unwrap();
    assert!((ratio - 0.0253303).abs() < 1e-6, "{ratio}");
    assert_eq!(side["constant"], 2.0);
}

#[test]
fn exponent_at_or_below_one_is_rejected_with_field_path() {
    for p in [json!(1.0), json!(0.5), json!({ "kind": "affine", "offset": 1.0, "gradient": [1.0] })] {
        let mut config = unit_interval(33, json!([]));
        config["phi"][0]["p"] = p;
        let r = run(&config);
        assert_eq!(r.code(), 2);
        assert!(r.stderr().contains("phi[0].p: exponent lower bound must exceed 1"), "{}", r.stderr());
    }
}

#[test]
fn malformed_config_reports_line_and_column() {
    let r = run_text("{\n  \"schema_version\": 1,\n  \"domain\": [\n", &[]);
    assert_eq!(r.code(), 2);
    let err = r.stderr();
    assert!(err.contains("config.json:"), "{err}");
    assert!(err.contains(":3:") || err.contains(":4:"), "{err}");
}

#[test]
fn invalid_values_name_the_offending_field() {
    let cases = [
        (unit_interval(5, json!([])), "domain.nodes"),
        (unit_interval(33, json!([{ "task": "validate-phi", "phi": ["missing"] }])), "tasks[0].phi[0]"),
        (unit_interval(33, json!([{ "task": "verify-poincare", "order": 0 }])), "tasks[0].order"),
        (
            unit_interval(33, json!([{ "task": "check-conditions", "phi": "square", "checks": [{ "kind": "y", "axis": 3 }] }])),
            "tasks[0].checks[0].axis",
        ),
        (unit_interval(33, json!([{ "task": "sweep", "name": "a" }, { "task": "sweep", "name": "a" }])), "tasks[1].name"),
    ];
    for (config, field) in cases {
        let r = run(&config);
        assert_eq!(r.code(), 2, "{field}");
        assert!(r.stderr().contains(&format!("{field}:")), "{field}: {}", r.stderr());
    }
}

#[test]
fn unknown_fields_are_parse_errors() {
    let mut config = unit_interval(33, json!([]));
    config["domain"]["spacing"] = json!(0.1);
    let r = run(&config);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("unknown field"), "{}", r.stderr());
}

#[test]
fn overflow_names_the_task_and_node() {
    let config = json!({
        "schema_version": 1,
        "domain": { "lower": [0.0], "upper": [1.0], "nodes": 65 },
        "phi": [{ "id": "exp", "family": "exp_power", "p": 2.0 }],
        "tasks": [{
            "task": "compute-norm", "name": "blowup", "phi": "exp", "norm": "modular",
            "function": { "kind": "bump", "id": "b", "center": [0.5], "widths": [0.3], "profile": "smooth_exp", "scale": 100.0 }
        }]
    });
    let r = run(&config);
    assert_eq!(r.code(), 2);
    let err = r.stderr();
    assert!(err.contains("task blowup") && err.contains("(node "), "{err}");
    assert_eq!(r.report("blowup")["status"], "error");
}

#[test]
fn theorem_failure_exits_with_one() {
    let tasks = json!([{ "task": "verify-poincare", "name": "tiny", "phi": ["square"], "constant": 0.01, "sides": "modular" }]);
    let r = run(&unit_interval(257, tasks));
    assert_eq!(r.code(), 1, "{}", r.stderr());
    assert_eq!(r.report("tiny")["status"], "fail");
}

#[test]
fn condition_failures_only_fail_the_run_when_required() {
    let config = |required: bool| {
        json!({
            "schema_version": 1,
            "domain": { "lower": [0.0], "upper": [1.0], "nodes": 65 },
            "phi": [{ "id": "wave", "family": "power_variable",
                      "p": { "kind": "sinusoid", "mean": 2.5, "amplitude": 0.5, "frequency": 1.0, "axis": 0 } }],
            "tasks": [{ "task": "check-conditions", "name": "y", "phi": "wave",
                        "checks": [{ "kind": "y" }], "required": required }]
        })
    };
    let optional = run(&config(false));
    assert_eq!(optional.code(), 0, "{}", optional.stderr());
    let report = optional.report("y");
    assert_eq!(report["status"], "fail");
    assert_eq!(report["result"]["reports"][0]["witness"]["kind"], "non_monotone");
    assert_eq!(run(&config(true)).code(), 1);
}

#[test]
fn reruns_are_byte_identical_and_timing_is_separate() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/conditions.json")).unwrap();
    let a = run_text(&text, &["--seed", "7"]);
    let b = run_text(&text, &["--seed", "7"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    let mut names: Vec<String> = fs::read_dir(&a.out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.contains(&"timing.json".to_string()));
    for name in names.iter().filter(|n| *n != "timing.json") {
        let x = fs::read(a.out.join(name)).unwrap();
        let y = fs::read(b.out.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert!(!String::from_utf8_lossy(&x).contains("seconds"), "{name}");
    }
    drop((a.dir, b.dir));
}

#[test]
fn search_writes_one_curve_per_bump() {
    let tasks = json!([{ "task": "counterexample-search", "name": "s", "phi": "square",
                         "scalings": { "min_exponent": -2, "max_exponent": 2 } }]);
    let r = run(&unit_interval(257, tasks));
    assert_eq!(r.code(), 0, "{}", r.stderr());
    assert_eq!(r.report("s")["status"], "info");
    let csv = fs::read_to_string(r.out.join("s-smooth_centered.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scaling,lhs,rhs,ratio");
    assert_eq!(lines.len(), 6);
    // m = 1 modular ratio of t² is scaling-invariant.
    let ratios: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12 * ratios[0]), "{ratios:?}");
}

#[test]
fn conjugate_table_matches_the_square_legendre_transform() {
    let tasks = json!([{ "task": "conjugate-table", "name": "t", "phi": "square",
                         "s": { "from": 0.5, "to": 4.0, "count": 4 } }]);
    let r = run(&unit_interval(33, tasks));
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let csv = fs::read_to_string(r.out.join("t.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x1,s,conjugate,argmax");
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let s = cols[1];
        assert!((cols[2] - s * s / 4.0).abs() < 1e-8, "{line}");
    }
}

#[test]
fn describe_reports_constants() {
    let (code, text, _) = describe(&unit_interval(33, json!([])));
    assert_eq!(code, 0);
    assert!(text.contains("c = 2;"), "{text}");
    assert!(text.contains("nodes: 33 (h = 3.125e-2)"), "{text}");

    let square = json!({
        "schema_version": 1,
        "domain": { "lower": [0.0, 0.0], "upper": [1.0, 1.0], "nodes": [17, 33] },
        "phi": [],
    });
    let (code, text, _) = describe(&square);
    assert_eq!(code, 0);
    assert!(text.contains("d = 2"), "{text}");
    assert!(text.contains("c = 2√2 ≈ 2.828427"), "{text}");
    assert!(text.contains("#{|β|=1} = 2, C = c·3"), "{text}");
}

#[test]
fn describe_rejects_what_run_rejects() {
    let mut config = unit_interval(33, json!([]));
    config["phi"][0]["p"] = json!(1.0);
    let (code, _, err) = describe(&config);
    assert_eq!(code, 2);
    assert!(err.contains("exponent lower bound must exceed 1"), "{err}");
}
