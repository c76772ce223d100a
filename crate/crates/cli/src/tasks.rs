//! Execution of configured tasks into JSON reports and CSV curves.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use musielak::conditions::{M1Options, PairSampling, YSampling};
use musielak::poincare::{norm_constant, poincare_constant, SweepOptions};
use musielak::{
    check_local_integrability, check_log_holder, check_m1, check_y, conjugate, counterexample_search, luxemburg_norm,
    modular, sobolev_norm, sweep, validate_phi, verify_modular_poincare, verify_norm_poincare, Comparison,
    ConditionReport, PhiFunction, Verdict,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    default_search_scalings, default_sweep_scalings, CheckSpec, ComparisonSpec, FunctionSpec, NormKind, Resolved,
    TaskKind, SCHEMA_VERSION,
};
use crate::error::CliError;

/// Per-run overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replaces the solver tolerance of the config.
    pub tolerance: Option<f64>,
    /// Jitter seed for condition-checker sampling; 0 keeps the lattice.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// Computations that carry no verdict.
    Info,
    Error,
}

/// What one task produced.
pub struct TaskOutcome {
    pub name: String,
    pub task: &'static str,
    pub status: Status,
    pub result: Value,
    /// Whether a non-pass status should fail the run.
    pub required: bool,
    pub curves: Vec<(String, String)>,
    pub seconds: f64,
    pub timing: Option<Value>,
    pub error: Option<CliError>,
}

pub struct RunSummary {
    pub outcomes: Vec<TaskOutcome>,
}

impl RunSummary {
    /// 0 when every verdict passes, 1 on a failed theorem check or required
    /// task, 2 on evaluation errors.
    pub fn exit_code(&self) -> u8 {
        if self.outcomes.iter().any(|o| o.status == Status::Error) {
            2
        } else if self.outcomes.iter().any(|o| o.required && o.status != Status::Pass && o.status != Status::Info) {
            1
        } else {
            0
        }
    }
}

struct Produced {
    status: Status,
    result: Value,
    required: bool,
    curves: Vec<(String, String)>,
    timing: Option<Value>,
}

impl Produced {
    fn info(result: Value) -> Self {
        Self { status: Status::Info, result, required: false, curves: Vec::new(), timing: None }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn task_err(task: &str) -> impl Fn(musielak::Error) -> CliError + '_ {
    move |source| CliError::Task { task: task.to_string(), source }
}

/// Runs every task in order. Evaluation errors are recorded in the failing
/// task's outcome and do not stop later tasks.
pub fn run_tasks(resolved: &Resolved, options: &RunOptions) -> RunSummary {
    let mut outcomes = Vec::new();
    for (task, name) in resolved.config.tasks.iter().zip(&resolved.names) {
        let started = Instant::now();
        let produced = run_task(resolved, &task.kind, name, options);
        let seconds = started.elapsed().as_secs_f64();
        outcomes.push(match produced {
            Ok(p) => TaskOutcome {
                name: name.clone(),
                task: task.kind.label(),
                status: p.status,
                result: p.result,
                required: p.required,
                curves: p.curves,
                seconds,
                timing: p.timing,
                error: None,
            },
            Err(e) => TaskOutcome {
                name: name.clone(),
                task: task.kind.label(),
                status: Status::Error,
                result: Value::Null,
                required: true,
                curves: Vec::new(),
                seconds,
                timing: None,
                error: Some(e),
            },
        });
    }
    RunSummary { outcomes }
}

fn solver_tol(resolved: &Resolved, options: &RunOptions) -> f64 {
    options.tolerance.unwrap_or(resolved.config.tolerances.solver)
}

/// Points of a lattice with `per_axis` points per axis over the domain box.
fn lattice(resolved: &Resolved, per_axis: usize) -> Vec<Vec<f64>> {
    let b = resolved.domain.bounds();
    let dim = b.dim();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; dim];
            for a in (0..dim).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                x[a] = b.lower[a] + b.extent(a) * i as f64 / (per_axis - 1) as f64;
            }
            x
        })
        .collect()
}

fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Status {
    let mut status = Status::Pass;
    for v in verdicts {
        match v {
            Verdict::Fail => return Status::Fail,
            Verdict::Inconclusive => status = Status::Inconclusive,
            Verdict::Pass => {}
        }
    }
    status
}

fn pass_fail(passed: bool) -> Status {
    if passed {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn run_task(resolved: &Resolved, kind: &TaskKind, name: &str, options: &RunOptions) -> Result<Produced, CliError> {
    let err = task_err(name);
    let tol = solver_tol(resolved, options);
    let tolerances = resolved.config.tolerances;
    let domain = &resolved.domain;
    match kind {
        TaskKind::ValidatePhi { phi, required } => {
            let points = lattice(resolved, 5);
            let t_grid = musielak::phi::default_t_grid();
            let mut entries = Vec::new();
            let mut passed = true;
            for (id, f) in resolved.select(phi) {
                let v = validate_phi(&f, &points, &t_grid).map_err(&err)?;
                passed &= v.passed();
                entries.push(json!({ "phi": id, "family": f.describe(), "validation": v }));
            }
            Ok(Produced {
                status: pass_fail(passed),
                result: json!({ "phi": entries }),
                required: *required,
                curves: Vec::new(),
                timing: None,
            })
        }
        TaskKind::CheckConditions { phi, checks, required } => {
            let f = resolved.phi(phi);
            let region = domain.bounds();
            let mut reports: Vec<ConditionReport> = Vec::new();
            for check in checks {
                reports.push(run_check(f, check, region, options.seed, name)?);
            }
            Ok(Produced {
                status: combine(reports.iter().map(|r| r.verdict)),
                result: json!({ "phi": phi, "family": f.describe(), "reports": reports }),
                required: *required,
                curves: Vec::new(),
                timing: None,
            })
        }
        TaskKind::ComputeNorm { phi, function, norm, order } => {
            let f = resolved.phi(phi);
            let u = function.build(domain).map_err(&err)?;
            let result = match norm {
                NormKind::Luxemburg => json!({ "norm": to_value(&luxemburg_norm(f, &u, tol).map_err(&err)?) }),
                NormKind::Sobolev => json!({ "norm": to_value(&sobolev_norm(f, &u, *order, tol).map_err(&err)?) }),
                NormKind::Modular => json!({ "modular": modular(f, &u).map_err(&err)? }),
            };
            let mut result = result;
            result["phi"] = json!(phi);
            result["function"] = json!(function.id());
            result["kind"] = to_value(norm);
            if *norm == NormKind::Sobolev {
                result["order"] = json!(order);
            }
            result["tolerance"] = json!(tol);
            Ok(Produced::info(result))
        }
        TaskKind::ConjugateTable { phi, points, s } => {
            let f = resolved.phi(phi);
            let b = domain.bounds();
            let points = if points.is_empty() {
                vec![(0..b.dim()).map(|a| b.lower[a] + 0.5 * b.extent(a)).collect()]
            } else {
                points.clone()
            };
            let ladder = s.values();
            let mut rows = Vec::new();
            let header: Vec<String> = (1..=b.dim()).map(|i| format!("x{i}")).collect();
            let mut csv = format!("{},s,conjugate,argmax\n", header.join(","));
            for x in &points {
                for &sv in &ladder {
                    let r = conjugate(f, x, sv, tol).map_err(&err)?;
                    let coords: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
                    csv.push_str(&format!("{},{sv:e},{:e},{:e}\n", coords.join(","), r.value, r.argmax));
                    rows.push(json!({ "x": x, "s": sv, "conjugate": r.value, "argmax": r.argmax, "bracket_width": r.bracket_width }));
                }
            }
            Ok(Produced {
                curves: vec![(format!("{name}.csv"), csv)],
                ..Produced::info(json!({ "phi": phi, "tolerance": tol, "rows": rows }))
            })
        }
        TaskKind::VerifyPoincare { phi, functions, order, constant, sides } => {
            let functions = if functions.is_empty() {
                resolved.bumps(&[]).iter().map(FunctionSpec::from_bump).collect()
            } else {
                functions.clone()
            };
            let mut reports = Vec::new();
            let mut passed = true;
            for (id, f) in resolved.select(phi) {
                for spec in &functions {
                    let u = spec.build(domain).map_err(&err)?;
                    let mut report = verify_modular_poincare(&f, &u, spec.id(), *order, *constant, tolerances.modular)
                        .map_err(&err)?;
                    if !sides.modular() {
                        report.modular = None;
                    }
                    if sides.norm() {
                        report.norm = verify_norm_poincare(&f, &u, spec.id(), *order, tolerances.norm).map_err(&err)?.norm;
                    }
                    passed &= report.passed();
                    reports.push(json!({ "phi": id, "report": report }));
                }
            }
            Ok(Produced {
                status: pass_fail(passed),
                result: json!({
                    "order": order,
                    "constant": match constant { Some(c) => *c, None => poincare_constant(domain, *order).map_err(&err)? },
                    "norm_constant": norm_constant(domain, *order).map_err(&err)?,
                    "reports": reports,
                }),
                required: true,
                curves: Vec::new(),
                timing: None,
            })
        }
        TaskKind::CounterexampleSearch { phi, functions, scalings, constant } => {
            let f = resolved.phi(phi);
            let bumps = resolved.bumps(functions);
            let scalings = resolved.scalings(scalings, default_search_scalings);
            let c = match constant {
                Some(c) => *c,
                None => poincare_constant(domain, 1).map_err(&err)?,
            };
            let report = counterexample_search(f, domain.clone(), &bumps, &scalings, c).map_err(&err)?;
            let mut curves = Vec::new();
            for b in &bumps {
                let mut buf = Vec::new();
                report.write_curve_csv(&b.id, &mut buf).expect("writing to memory");
                curves.push((format!("{name}-{}.csv", b.id), String::from_utf8(buf).expect("ascii csv")));
            }
            let mut result = to_value(&report);
            result["phi"] = json!(phi);
            Ok(Produced { curves, ..Produced::info(result) })
        }
        TaskKind::Sweep { phi, functions, scalings, order, sides } => {
            let phis = resolved.select(phi);
            let bumps = resolved.bumps(functions);
            let scalings = resolved.scalings(scalings, default_sweep_scalings);
            let opts = SweepOptions {
                modular: sides.modular(),
                norm: sides.norm(),
                modular_tol: tolerances.modular,
                norm_tol: tolerances.norm,
                constant: None,
            };
            let report = sweep(&phis, domain.clone(), &bumps, &scalings, *order, &opts).map_err(&err)?;
            if let Some(cell) = report.cells.iter().find(|c| c.error.is_some()) {
                return Err(CliError::TaskFailed {
                    task: name.to_string(),
                    message: format!(
                        "{} × {} × {}: {}",
                        cell.phi,
                        cell.test_function,
                        cell.scaling,
                        cell.error.as_deref().unwrap_or_default()
                    ),
                });
            }
            let mut result = to_value(&report);
            let timing = result.as_object_mut().and_then(|o| o.remove("timing"));
            let mut timing = timing.unwrap_or(Value::Null);
            if let Some(per) = timing.get_mut("per_phi_seconds") {
                let ids: Vec<&str> = phis.iter().map(|(id, _)| id.as_str()).collect();
                *per = ids.iter().zip(per.as_array().cloned().unwrap_or_default()).map(|(id, s)| json!({ "phi": id, "seconds": s })).collect();
            }
            Ok(Produced { status: pass_fail(report.passed()), result, required: true, curves: Vec::new(), timing: Some(timing) })
        }
    }
}

fn run_check(
    phi: &PhiFunction,
    check: &CheckSpec,
    region: &musielak::AxisBox,
    seed: u64,
    task: &str,
) -> Result<ConditionReport, CliError> {
    let err = task_err(task);
    match check {
        CheckSpec::M1 { comparison, c } => {
            let comparison = match comparison {
                ComparisonSpec::Unit => Comparison::Unit,
                ComparisonSpec::LogHolder { constant } => Comparison::LogHolder { constant: *constant },
            };
            let opts = M1Options { pairs: PairSampling::with_seed(seed), ..M1Options::default() };
            check_m1(phi, &comparison, *c, region, &opts).map_err(err)
        }
        CheckSpec::LogHolder { c0 } => {
            let p = phi.exponent().ok_or_else(|| CliError::TaskFailed {
                task: task.to_string(),
                message: format!("the log-Hölder check needs a variable exponent; {} has none", phi.describe()),
            })?;
            check_log_holder(p, *c0, region, &PairSampling::with_seed(seed)).map_err(err)
        }
        CheckSpec::Y { axis, segment, t0 } => {
            let (a, b) = match segment {
                Some([a, b]) => (*a, *b),
                None => (region.lower[*axis], region.upper[*axis]),
            };
            check_y(phi, region, *axis, (a, b), *t0, &YSampling::default()).map_err(err)
        }
        CheckSpec::LocalIntegrability { c, region: sub, nodes } => {
            check_local_integrability(phi, *c, sub.as_ref().unwrap_or(region), *nodes).map_err(err)
        }
    }
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes `<name>.json` per task, the CSV curves, and `timing.json` (omitted
/// when there are no tasks).
pub fn write_reports(summary: &RunSummary, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })?;
    let mut timing = Vec::new();
    for o in &summary.outcomes {
        let mut report = json!({
            "schema_version": SCHEMA_VERSION,
            "task": o.task,
            "name": o.name,
            "status": o.status,
            "result": o.result,
        });
        if let Some(e) = &o.error {
            report["error"] = json!(e.to_string());
        }
        write(out.join(format!("{}.json", o.name)), &pretty(&report))?;
        for (file, csv) in &o.curves {
            write(out.join(file), csv)?;
        }
        let mut t = json!({ "name": o.name, "seconds": o.seconds });
        if let Some(extra) = &o.timing {
            t["detail"] = extra.clone();
        }
        timing.push(t);
    }
    if summary.outcomes.is_empty() {
        return Ok(());
    }
    let total: f64 = summary.outcomes.iter().map(|o| o.seconds).sum();
    write(
        out.join("timing.json"),
        &pretty(&json!({ "schema_version": SCHEMA_VERSION, "total_seconds": total, "tasks": timing })),
    )
}
