use std::fmt::Write as _;
use std::path::PathBuf;

use qverify_core::identities::{
    find, registry, verify_points, IdentityRecord, Point, PointOutcome, VerifyOptions, VerifyRun,
};
use qverify_core::limits::{check_limit_pair, find_pair, LimitReport, LimitSchedule, PairKind};
use qverify_core::mpreal::{format_rational, parse_rational};
use qverify_core::proofs::{self, find_theorem, CertifyReport};
use qverify_core::{Error, Scalar};
use rug::Rational;
use serde_json::{json, Value};

use crate::config::{parse_tolerance, Format, RunConfig};
use crate::{Failure, Outcome};

/// Largest grid `sweep` will evaluate.
const MAX_CELLS: usize = 100_000;

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        x.to_string()
    }
}

fn json_body(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_body(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

// list

pub fn list(ids: &[String], format: Format) -> Result<Outcome, Failure> {
    let records: Vec<&IdentityRecord> =
        if ids.is_empty() || ids.iter().any(|i| i.eq_ignore_ascii_case("all")) {
            registry().iter().collect()
        } else {
            ids.iter().map(|i| find(i)).collect::<Result<_, _>>()?
        };
    let body = match format {
        Format::Json => json_body(&Value::Array(
            records.iter().map(|r| r.describe()).collect(),
        )),
        Format::Csv => csv_body(
            &["id", "name", "parameters", "constraints", "experimental"],
            records
                .iter()
                .map(|r| {
                    vec![
                        r.id.to_string(),
                        r.name.to_string(),
                        r.params
                            .iter()
                            .map(|p| p.name)
                            .collect::<Vec<_>>()
                            .join(" "),
                        r.constraints
                            .iter()
                            .map(|c| c.text())
                            .collect::<Vec<_>>()
                            .join("; "),
                        r.experimental.to_string(),
                    ]
                })
                .collect(),
        ),
        Format::Text => {
            let mut s = String::new();
            for r in &records {
                let tag = if r.experimental {
                    "  [EXPERIMENTAL]"
                } else {
                    ""
                };
                let _ = writeln!(s, "{:<4} {}{tag}", r.id, r.name);
                let _ = writeln!(s, "     {}", r.statement);
                let params: Vec<String> = r
                    .params
                    .iter()
                    .map(|p| format!("{} ∈ [{}, {}]", p.name, p.lo, p.hi))
                    .collect();
                if !params.is_empty() {
                    let _ = writeln!(s, "     parameters: {}", params.join(", "));
                }
                if !r.constraints.is_empty() {
                    let c: Vec<&str> = r.constraints.iter().map(|c| c.text()).collect();
                    let _ = writeln!(s, "     constraints: {}", c.join("; "));
                }
            }
            s
        }
    };
    Ok(Outcome {
        body,
        code: 0,
        output: None,
    })
}

// verify

fn options(cfg: &RunConfig, rhs_factor: Option<f64>) -> Result<VerifyOptions, Failure> {
    Ok(VerifyOptions {
        samples: cfg.samples,
        seed: cfg.seed,
        bits: cfg.precision_bits,
        tolerance: cfg.tolerance_value()?,
        workers: cfg.workers,
        rhs_factor,
        ..VerifyOptions::default()
    })
}

fn point_json(p: &PointOutcome) -> Value {
    match &p.result {
        Ok(r) => json!({
            "params": r.params.to_json(),
            "lhs": r.lhs.to_decimal_string(),
            "rhs": r.rhs.to_decimal_string(),
            "rel_error": sci(r.rel_error),
            "terms_lhs": r.terms_lhs,
            "terms_rhs": r.terms_rhs,
            "bits": r.bits,
            "pass": r.pass,
        }),
        Err(e) => json!({
            "params": p.params.to_json(),
            "error": e.to_string(),
            "numerical": e.is_numerical(),
            "pass": false,
        }),
    }
}

fn point_row(id: &str, experimental: bool, p: &PointOutcome) -> Vec<String> {
    match &p.result {
        Ok(r) => vec![
            id.into(),
            experimental.to_string(),
            r.params.display(),
            r.lhs.to_decimal_string(),
            r.rhs.to_decimal_string(),
            sci(r.rel_error),
            r.terms_lhs.to_string(),
            r.terms_rhs.to_string(),
            r.bits.to_string(),
            r.pass.to_string(),
            String::new(),
        ],
        Err(e) => {
            let mut row = vec![id.into(), experimental.to_string(), p.params.display()];
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push("false".into());
            row.push(e.to_string());
            row
        }
    }
}

const POINT_HEADER: [&str; 11] = [
    "id",
    "experimental",
    "params",
    "lhs",
    "rhs",
    "rel_error",
    "terms_lhs",
    "terms_rhs",
    "bits",
    "pass",
    "error",
];

/// 0 when every gated point passes; 1 when some point compared and
/// failed; 3 when the only failures are numerical.
fn status<'a>(points: impl Iterator<Item = &'a PointOutcome>) -> u8 {
    let mut numerical = false;
    let mut failed = false;
    for p in points {
        match &p.result {
            Ok(r) if r.pass => {}
            Err(e) if e.is_numerical() => numerical = true,
            _ => failed = true,
        }
    }
    if failed {
        1
    } else if numerical {
        3
    } else {
        0
    }
}

fn run_label(run: &VerifyRun) -> &'static str {
    if run.pass() {
        "PASS"
    } else if run.numerical_failure() {
        "NUMERICAL"
    } else {
        "FAIL"
    }
}

pub fn verify(cfg: &RunConfig, perturb: Option<f64>, verbose: bool) -> Result<Outcome, Failure> {
    if cfg.ids.is_empty() {
        return Err(Failure::usage(
            "no identities given (use `all` for the whole registry)",
        ));
    }
    if let Some(f) = perturb {
        if !(f.is_finite() && f != 0.0) {
            return Err(Failure::usage(
                "perturbation factor must be finite and nonzero",
            ));
        }
    }
    let records: Vec<&IdentityRecord> = if cfg.all() {
        registry().iter().collect()
    } else {
        cfg.ids.iter().map(|i| find(i)).collect::<Result<_, _>>()?
    };
    let opts = options(cfg, perturb)?;
    let mut runs = Vec::with_capacity(records.len());
    for r in &records {
        let points = qverify_core::identities::sample_points(r, opts.seed, opts.samples)?;
        runs.push(verify_points(r, points, &opts)?);
    }
    let code = status(
        runs.iter()
            .filter(|r| !r.experimental)
            .flat_map(|r| r.points.iter()),
    );
    let gated: Vec<&VerifyRun> = runs.iter().filter(|r| !r.experimental).collect();
    let passed = gated.iter().filter(|r| r.pass()).count();

    let body = match cfg.format {
        Format::Json => {
            let results: Vec<Value> = runs
                .iter()
                .map(|run| {
                    json!({
                        "id": run.id,
                        "experimental": run.experimental,
                        "tolerance": sci(run.tolerance),
                        "max_rel_error": sci(run.max_rel_error()),
                        "pass": run.pass(),
                        "points": run.points.iter().map(point_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json_body(&json!({
                "run_config": config_json(cfg),
                "perturb_rhs": perturb.map(|f| format!("{f:e}")),
                "results": results,
                "summary": {
                    "identities": runs.len(),
                    "gated": gated.len(),
                    "passed": passed,
                    "experimental": runs.iter().filter(|r| r.experimental).map(|r| r.id.clone()).collect::<Vec<_>>(),
                    "pass": code == 0,
                    "exit_code": code,
                },
            }))
        }
        Format::Csv => csv_body(
            &POINT_HEADER,
            runs.iter()
                .flat_map(|run| {
                    run.points
                        .iter()
                        .map(|p| point_row(&run.id, run.experimental, p))
                })
                .collect(),
        ),
        Format::Text => {
            let mut s = String::new();
            if let Some(f) = perturb {
                let _ = writeln!(s, "right sides scaled by {f:e}");
            }
            for run in &runs {
                let ok = run.points.iter().filter(|p| p.pass()).count();
                let tag = if run.experimental {
                    "  EXPERIMENTAL (not gated)"
                } else {
                    ""
                };
                let _ = writeln!(
                    s,
                    "{:<4} {:<9} {:>3}/{:<3} max rel err {:>10}  tol {}{tag}",
                    run.id,
                    run_label(run),
                    ok,
                    run.points.len(),
                    sci(run.max_rel_error()),
                    sci(run.tolerance),
                );
                if verbose || !run.pass() {
                    for p in &run.points {
                        let line = match &p.result {
                            Ok(r) => format!(
                                "{}  lhs {}  rel err {}  terms {}/{}  {} bits",
                                if r.pass { "ok  " } else { "FAIL" },
                                r.lhs.to_short_string(20),
                                sci(r.rel_error),
                                r.terms_lhs,
                                r.terms_rhs,
                                r.bits
                            ),
                            Err(e) => format!("ERR   {e}"),
                        };
                        let _ = writeln!(s, "       {line}  [{}]", p.params.display());
                    }
                }
            }
            let _ = writeln!(s, "{passed}/{} gated identities pass", gated.len());
            s
        }
    };
    Ok(Outcome {
        body,
        code,
        output: cfg.output.clone(),
    })
}

// sweep

/// Values of one `name=lo:hi:step` or `name=value` grid axis.
fn axis(spec: &str) -> Result<(String, Vec<Rational>), Failure> {
    let bad = || {
        Failure::usage(format!(
            "malformed grid `{spec}`; expected name=lo:hi:step or name=value"
        ))
    };
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let name = name.trim();
    if name.is_empty() {
        return Err(bad());
    }
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    let num = |t: &str| parse_rational(t).map_err(|_| bad());
    let values = match parts.as_slice() {
        [v] => vec![num(v)?],
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if step <= 0 || hi < lo {
                return Err(bad());
            }
            let mut out = Vec::new();
            let mut v = lo;
            while v <= hi {
                if out.len() >= MAX_CELLS {
                    return Err(Failure::usage(format!(
                        "grid `{spec}` has more than {MAX_CELLS} values"
                    )));
                }
                out.push(v.clone());
                v += &step;
            }
            out
        }
        _ => return Err(bad()),
    };
    Ok((name.to_string(), values))
}

fn grid(record: &IdentityRecord, specs: &[String]) -> Result<Vec<Point>, Failure> {
    let mut axes = Vec::new();
    for s in specs {
        let (name, values) = axis(s)?;
        if !record.params.iter().any(|p| p.name == name) {
            return Err(Failure::usage(format!(
                "{} has no parameter `{name}`",
                record.id
            )));
        }
        if axes
            .iter()
            .any(|(n, _): &(String, Vec<Rational>)| *n == name)
        {
            return Err(Failure::usage(format!("parameter `{name}` given twice")));
        }
        axes.push((name, values));
    }
    let mut ordered = Vec::new();
    for p in record.params {
        let axis = axes
            .iter()
            .find(|(n, _)| n == p.name)
            .ok_or_else(|| Failure::usage(format!("missing --param for `{}`", p.name)))?;
        ordered.push(axis.clone());
    }
    let cells: usize = ordered.iter().map(|(_, v)| v.len()).product();
    if cells > MAX_CELLS {
        return Err(Failure::usage(format!(
            "grid has {cells} cells, more than {MAX_CELLS}"
        )));
    }
    let mut points = vec![Vec::<(String, Rational)>::new()];
    for (name, values) in &ordered {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((name.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    Ok(points.into_iter().map(Point::new).collect())
}

fn cell_status(p: &PointOutcome) -> &'static str {
    match &p.result {
        Ok(r) if r.pass => "pass",
        Ok(_) => "fail",
        Err(Error::RejectedPoint(_)) => "skip",
        Err(_) => "error",
    }
}

pub fn sweep(cfg: &RunConfig, specs: &[String]) -> Result<Outcome, Failure> {
    let record = find(&cfg.ids[0])?;
    let points = grid(record, specs)?;
    let opts = options(cfg, None)?;
    let run = verify_points(record, points, &opts)?;
    let evaluated: Vec<&PointOutcome> = run
        .points
        .iter()
        .filter(|p| cell_status(p) != "skip")
        .collect();
    let skipped = run.points.len() - evaluated.len();
    let max_err = evaluated
        .iter()
        .map(|p| {
            p.result
                .as_ref()
                .map(|r| r.rel_error)
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    let code = if evaluated.is_empty() {
        1
    } else {
        status(evaluated.iter().copied())
    };
    let verdict = if code == 0 { "PASS" } else { "FAIL" };

    let body = match cfg.format {
        Format::Json => {
            let points: Vec<Value> = run
                .points
                .iter()
                .map(|p| {
                    let mut v = point_json(p);
                    v["status"] = json!(cell_status(p));
                    v
                })
                .collect();
            json_body(&json!({
                "run_config": config_json(cfg),
                "results": [{ "id": run.id, "grid": specs, "tolerance": sci(run.tolerance), "points": points }],
                "summary": {
                    "cells": run.points.len(),
                    "evaluated": evaluated.len(),
                    "skipped": skipped,
                    "max_rel_error": sci(max_err),
                    "pass": code == 0,
                    "exit_code": code,
                },
            }))
        }
        Format::Csv => {
            let mut header = POINT_HEADER.to_vec();
            header.push("status");
            csv_body(
                &header,
                run.points
                    .iter()
                    .map(|p| {
                        let mut row = point_row(&run.id, run.experimental, p);
                        row.push(cell_status(p).into());
                        row
                    })
                    .collect(),
            )
        }
        Format::Text => {
            let mut s = String::new();
            let names: Vec<&str> = record.params.iter().map(|p| p.name).collect();
            for n in &names {
                let _ = write!(s, "{n:>10} ");
            }
            let _ = writeln!(s, "{:>12}  status", "rel err");
            for p in &run.points {
                for (_, v) in &p.params.values {
                    let _ = write!(s, "{:>10} ", format_rational(v));
                }
                let err = match &p.result {
                    Ok(r) => sci(r.rel_error),
                    Err(_) => "-".into(),
                };
                let _ = writeln!(s, "{err:>12}  {}", cell_status(p));
            }
            let _ = writeln!(
                s,
                "{} cells, {} skipped, max rel err {} (tol {}): {verdict}",
                run.points.len(),
                skipped,
                sci(max_err),
                sci(run.tolerance)
            );
            s
        }
    };
    Ok(Outcome {
        body,
        code,
        output: cfg.output.clone(),
    })
}

// certify

fn certify_json(p: &Point, r: &Result<CertifyReport, Error>) -> Value {
    match r {
        Ok(rep) => rep.to_json(),
        Err(e) => {
            json!({ "params": p.to_json(), "error": e.to_string(), "numerical": e.is_numerical(), "pass": false })
        }
    }
}

pub fn certify(cfg: &RunConfig, perturb: Option<f64>, verbose: bool) -> Result<Outcome, Failure> {
    let theorem = find_theorem(&cfg.ids[0])?;
    let opts = options(cfg, perturb)?;
    let results = proofs::certify(theorem.id, &opts)?;
    let mut numerical = false;
    let mut failed = false;
    for (_, r) in &results {
        match r {
            Ok(rep) if rep.certification.pass => {}
            Err(e) if e.is_numerical() => numerical = true,
            _ => failed = true,
        }
    }
    let code = if failed {
        1
    } else if numerical {
        3
    } else {
        0
    };
    let passed = results
        .iter()
        .filter(|(_, r)| matches!(r, Ok(rep) if rep.certification.pass))
        .count();
    let short = |s: &Scalar| s.to_short_string(20);

    let body = match cfg.format {
        Format::Json => json_body(&json!({
            "run_config": config_json(cfg),
            "theorem": theorem.id,
            "identity": theorem.identity,
            "results": results.iter().map(|(p, r)| certify_json(p, r)).collect::<Vec<_>>(),
            "summary": { "points": results.len(), "passed": passed, "pass": code == 0, "exit_code": code },
        })),
        Format::Csv => csv_body(
            &[
                "theorem",
                "params",
                "lhs",
                "rhs",
                "claimed",
                "dev_lhs_rhs",
                "dev_lhs_claimed",
                "dev_rhs_claimed",
                "a2",
                "t_star",
                "pass",
                "error",
            ],
            results
                .iter()
                .map(|(p, r)| match r {
                    Ok(rep) => {
                        let c = &rep.certification;
                        let side = |s: &Option<qverify_core::hyper::SeriesResult>| {
                            s.as_ref()
                                .map(|r| r.value.to_decimal_string())
                                .unwrap_or_default()
                        };
                        let (a2, t) = rep
                            .coefficients
                            .as_ref()
                            .map(|k| (k.a2.to_decimal_string(), k.t_star.to_decimal_string()))
                            .unwrap_or_default();
                        vec![
                            theorem.id.into(),
                            p.display(),
                            side(&c.lhs),
                            side(&c.rhs),
                            c.claimed.to_decimal_string(),
                            sci(c.dev_lhs_rhs),
                            sci(c.dev_lhs_claimed),
                            sci(c.dev_rhs_claimed),
                            a2,
                            t,
                            c.pass.to_string(),
                            c.one_sided.clone().unwrap_or_default(),
                        ]
                    }
                    Err(e) => {
                        let mut row = vec![theorem.id.into(), p.display()];
                        row.extend(std::iter::repeat_n(String::new(), 8));
                        row.push("false".into());
                        row.push(e.to_string());
                        row
                    }
                })
                .collect(),
        ),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{} ({}): {}  {}/{} {}",
                theorem.id,
                theorem.identity,
                theorem.name,
                passed,
                results.len(),
                if code == 0 { "PASS" } else { "FAIL" }
            );
            if let Some(f) = perturb {
                let _ = writeln!(s, "claimed values scaled by {f:e}");
            }
            for (p, r) in &results {
                match r {
                    Ok(rep) => {
                        let c = &rep.certification;
                        let _ = writeln!(
                            s,
                            "  {}  lhs-rhs {}  lhs-claim {}  rhs-claim {}  [{}]",
                            if c.pass { "ok  " } else { "FAIL" },
                            sci(c.dev_lhs_rhs),
                            sci(c.dev_lhs_claimed),
                            sci(c.dev_rhs_claimed),
                            p.display()
                        );
                        if let Some(why) = &c.one_sided {
                            let _ = writeln!(s, "        one-sided: {why}");
                        }
                        if verbose {
                            let _ = writeln!(s, "        claimed {}", short(&c.claimed));
                            if let Some(k) = &rep.coefficients {
                                let _ = writeln!(s, "        a1 = {}", short(&k.a1));
                                let _ = writeln!(s, "        a2 = {}", short(&k.a2));
                                let _ = writeln!(s, "        t* = {}", short(&k.t_star));
                            }
                        }
                    }
                    Err(e) => {
                        let _ = writeln!(s, "  ERR   {e}  [{}]", p.display());
                    }
                }
            }
            s
        }
    };
    Ok(Outcome {
        body,
        code,
        output: cfg.output.clone(),
    })
}

// limit

pub struct LimitArgs {
    pub pair: String,
    pub overrides: Vec<(&'static str, String)>,
    pub point: Option<String>,
    pub order: Option<usize>,
    pub j0: Option<u32>,
    pub j1: Option<u32>,
    pub tolerance: Option<String>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

fn limit_rows(r: &LimitReport) -> Vec<Vec<String>> {
    r.sides
        .iter()
        .map(|s| {
            vec![
                r.pair.to_string(),
                r.params.display(),
                s.side.to_string(),
                s.limit.value.to_decimal_string(),
                sci(s.limit.error),
                r.classical.to_decimal_string(),
                s.comparison.to_decimal_string(),
                r.pass.to_string(),
            ]
        })
        .collect()
}

pub fn limit(args: &LimitArgs) -> Result<Outcome, Failure> {
    let pair = find_pair(&args.pair)?;
    let mut point = Point::parse(args.point.as_deref().unwrap_or(pair.default_point))?;
    for (name, value) in &args.overrides {
        if !pair.params.contains(name) {
            return Err(Failure::usage(format!(
                "pair {} has no parameter `{name}`",
                pair.id
            )));
        }
        point.set(name, parse_rational(value)?);
    }
    let defaults = LimitSchedule::default();
    let schedule = LimitSchedule {
        target: defaults.target,
        ..LimitSchedule::new(
            args.j0.unwrap_or(defaults.j0),
            args.j1.unwrap_or(defaults.j1),
            args.order.unwrap_or(defaults.order),
        )?
    };
    let tolerance = match &args.tolerance {
        Some(t) => parse_tolerance(t)?,
        None if pair.kind == PairKind::Ratio => 1e-4,
        None => 1e-6,
    };
    let report = check_limit_pair(pair, &point, &schedule, tolerance)?;
    let code = if report.pass { 0 } else { 1 };
    let config = json!({
        "pair": pair.id,
        "params": point.to_json(),
        "j0": schedule.j0,
        "j1": schedule.j1,
        "order": schedule.order,
        "tolerance": sci(tolerance),
    });
    let body = match args.format {
        Format::Json => json_body(&json!({ "run_config": config, "result": report.to_json() })),
        Format::Csv => csv_body(
            &[
                "pair",
                "params",
                "side",
                "limit",
                "error_estimate",
                "classical",
                "comparison",
                "pass",
            ],
            limit_rows(&report),
        ),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{}  {}  [{}]",
                pair.id,
                pair.description,
                point.display()
            );
            let _ = writeln!(
                s,
                "  q_j = 1 - 2^-j, j = {}..{}, order {}",
                schedule.j0, schedule.j1, schedule.order
            );
            match report.kind {
                PairKind::Match => {
                    let side = &report.sides[0];
                    let _ = writeln!(
                        s,
                        "  limit      {}  ± {}",
                        side.limit.value.to_short_string(20),
                        sci(side.limit.error)
                    );
                    let _ = writeln!(s, "  classical  {}", report.classical.to_short_string(20));
                    let _ = writeln!(
                        s,
                        "  difference {}  (allowed {} + estimate)",
                        sci(side.comparison.to_f64()),
                        sci(tolerance)
                    );
                    let _ = writeln!(s, "  {}", if report.pass { "PASS" } else { "FAIL" });
                }
                PairKind::Ratio => {
                    let _ = writeln!(s, "  classical  {}", report.classical.to_short_string(20));
                    for side in &report.sides {
                        let _ = writeln!(
                            s,
                            "  {} limit  {}  ± {}   ratio {}",
                            side.side,
                            side.limit.value.to_short_string(16),
                            sci(side.limit.error),
                            side.comparison.to_short_string(10)
                        );
                    }
                    if let Some(spread) = report.spread {
                        let _ = writeln!(
                            s,
                            "  spread between sides {}  (tolerance {})",
                            sci(spread),
                            sci(tolerance)
                        );
                    }
                    if let Some((ratio, expected)) = &report.companion {
                        let _ = writeln!(
                            s,
                            "  right-side series over companion sum {}  (expansion gives {})",
                            ratio.to_short_string(10),
                            expected.to_short_string(6)
                        );
                    }
                    let _ = writeln!(s, "  {}", if report.pass { "STABLE" } else { "UNSTABLE" });
                }
            }
            s
        }
    };
    Ok(Outcome {
        body,
        code,
        output: args.output.clone(),
    })
}
