use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::logic::Structure;
use crate::syntax::ValidatedSystem;

use super::{CheckStatus, Report, ReportFormat, VerdictKind};

/// A witness structure as component states per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub size: usize,
    /// per node: (component type, state) pairs in declaration order; a
    /// state of `?` means none (or several) of the type's sets contain it
    pub nodes: Vec<Vec<(String, String)>>,
    pub structure: Structure,
}

impl WitnessReport {
    pub fn new(sys: &ValidatedSystem, w: &Structure) -> WitnessReport {
        let nodes = (0..w.size)
            .map(|u| {
                sys.types()
                    .iter()
                    .map(|c| {
                        let here: Vec<&String> = c
                            .states
                            .iter()
                            .filter(|s| w.sets.get(&format!("X_{s}")).is_some_and(|x| x.contains(&u)))
                            .collect();
                        let state = match here.as_slice() {
                            [s] => (*s).clone(),
                            _ => "?".to_string(),
                        };
                        (c.name.clone(), state)
                    })
                    .collect()
            })
            .collect();
        WitnessReport {
            size: w.size,
            nodes,
            structure: w.clone(),
        }
    }
}

pub fn render(r: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text(r),
        ReportFormat::JsonLike => json_lines(r),
    }
}

fn overall(r: &Report) -> &'static str {
    match r.exit_code() {
        0 => "VERIFIED",
        1 => "UNKNOWN",
        _ => "ERROR",
    }
}

fn text(r: &Report) -> String {
    let mut o = String::new();
    writeln!(o, "system: {}", r.system).unwrap();
    writeln!(o, "flow: {}", if r.flow { "on" } else { "off" }).unwrap();
    writeln!(o, "min-universe: {}", r.min_universe).unwrap();
    for w in &r.warnings {
        writeln!(o, "warning: {w}").unwrap();
    }
    for p in &r.properties {
        writeln!(o, "property {}: {}", p.name, p.verdict.as_str()).unwrap();
        writeln!(o, "  formula: size {}, quantifiers {}", p.formula_size, p.quantifiers).unwrap();
        writeln!(o, "  automaton: peak {} states", p.peak_states).unwrap();
        writeln!(o, "  time: {:.1} ms", p.elapsed.as_secs_f64() * 1e3).unwrap();
        if let Some(msg) = &p.message {
            writeln!(o, "  message: {msg}").unwrap();
        }
        if let Some(w) = &p.witness {
            writeln!(o, "  witness: n={}", w.size).unwrap();
            for (u, comps) in w.nodes.iter().enumerate() {
                let cs: Vec<String> = comps.iter().map(|(c, s)| format!("{c}={s}")).collect();
                writeln!(o, "    node {u}: {}", cs.join(" ")).unwrap();
            }
            if !p.rechecked {
                writeln!(o, "  witness-check: skipped (too large for the reference evaluator)").unwrap();
            }
            match (&p.label, p.violations) {
                (Some(l), Some(v)) => writeln!(
                    o,
                    "  oracle: {} at n={}, {v} reachable marking(s) violate the property",
                    l.as_str(),
                    w.size
                )
                .unwrap(),
                (Some(l), None) => writeln!(o, "  oracle: {} at n={}", l.as_str(), w.size).unwrap(),
                _ => writeln!(o, "  note: the invariant may be too weak or the property may fail").unwrap(),
            }
        }
    }
    for orc in &r.oracle {
        let count = |x: Option<usize>| x.map_or("?".to_string(), |v| v.to_string());
        writeln!(
            o,
            "oracle n={}: {} places, {} transitions, {} reachable, {} deadlocks{}",
            orc.size,
            orc.places,
            orc.transitions,
            count(orc.reachable),
            count(orc.deadlocks),
            if orc.partial { " (partial)" } else { "" }
        )
        .unwrap();
        for c in &orc.checks {
            match &c.status {
                CheckStatus::Pass => writeln!(o, "  {}: ok", c.name).unwrap(),
                CheckStatus::Fail(w) => writeln!(o, "  {}: FAIL {w}", c.name).unwrap(),
                CheckStatus::Skipped(why) => writeln!(o, "  {}: skipped ({why})", c.name).unwrap(),
            }
        }
    }
    if let Some(e) = &r.error {
        writeln!(o, "error: {e}").unwrap();
    }
    writeln!(o, "result: {} (exit {})", overall(r), r.exit_code()).unwrap();
    o
}

fn json_lines(r: &Report) -> String {
    let mut lines = vec![json!({
        "record": "run",
        "system": r.system,
        "flow": r.flow,
        "min_universe": r.min_universe,
    })];
    for w in &r.warnings {
        lines.push(json!({"record": "warning", "message": w}));
    }
    for p in &r.properties {
        let mut rec = json!({
            "record": "property",
            "name": p.name,
            "verdict": p.verdict.as_str(),
            "formula_size": p.formula_size,
            "quantifiers": p.quantifiers,
            "peak_states": p.peak_states,
            "time_ms": p.elapsed.as_secs_f64() * 1e3,
        });
        let obj = rec.as_object_mut().unwrap();
        if let Some(m) = &p.message {
            obj.insert("message".into(), json!(m));
        }
        if let Some(w) = &p.witness {
            let nodes: Vec<Value> = w
                .nodes
                .iter()
                .map(|comps| {
                    Value::Object(comps.iter().map(|(c, s)| (c.clone(), json!(s))).collect::<Map<_, _>>())
                })
                .collect();
            obj.insert(
                "witness".into(),
                json!({"size": w.size, "nodes": nodes, "rechecked": p.rechecked}),
            );
        }
        if let Some(l) = &p.label {
            obj.insert("oracle_label".into(), json!(l.as_str()));
        }
        if let Some(v) = p.violations {
            obj.insert("reachable_violations".into(), json!(v));
        }
        debug_assert!(p.verdict != VerdictKind::Unknown || p.witness.is_some());
        lines.push(rec);
    }
    for orc in &r.oracle {
        let checks: Vec<Value> = orc
            .checks
            .iter()
            .map(|c| match &c.status {
                CheckStatus::Pass => json!({"name": c.name, "status": "ok"}),
                CheckStatus::Fail(w) => json!({"name": c.name, "status": "fail", "detail": w}),
                CheckStatus::Skipped(w) => json!({"name": c.name, "status": "skipped", "detail": w}),
            })
            .collect();
        lines.push(json!({
            "record": "oracle",
            "size": orc.size,
            "places": orc.places,
            "transitions": orc.transitions,
            "reachable": orc.reachable,
            "deadlocks": orc.deadlocks,
            "partial": orc.partial,
            "checks": checks,
        }));
    }
    if let Some(e) = &r.error {
        lines.push(json!({"record": "error", "message": e}));
    }
    lines.push(json!({"record": "result", "verdict": overall(r), "exit": r.exit_code()}));
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}
