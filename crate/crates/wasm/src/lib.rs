//! Browser bindings. Every export takes plain strings or numbers and returns
//! a JSON string; failures come back as `{"error": "..."}`.

use serde_json::{json, Value as Json};
use wasm_bindgen::prelude::*;

use asram::aln::{stabilization_check, EscalationSchedule, OracleFamily, Verdict};
use asram::asm::{parse, print};
use asram::hierarchy::{escalate_bounds, parse_formula, BoundSchedule, BoundVerdict, DEFAULT_BUDGET};
use asram::isa::validate_program;
use asram::progs;
use asram::value::Value;
use asram::vm::{self, Limits};

/// Largest tower the page will build; x = 4 needs gigabit draws.
pub const BROWSER_TOWER_CAP: u64 = 3;
const DISPLAY_BITS: u64 = 512;
/// Browser budgets are tighter than the command line's.
const BROWSER_FUEL: u64 = 100_000;
const BROWSER_MEM_BITS: u64 = 1 << 24;
const BROWSER_FORMULA_BUDGET: u64 = DEFAULT_BUDGET / 100;

fn limits() -> Limits {
    Limits::default().with_fuel(BROWSER_FUEL).with_mem_bits(BROWSER_MEM_BITS)
}

fn compact(v: &Value) -> String {
    v.display_compact(DISPLAY_BITS)
}

fn respond(result: Result<Json, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Generates the tower for `x`, runs it under its sufficient plan scaled by
/// `scale`, and reports the per-step bit-lengths of every written register.
pub fn tower_demo_json(x: u64, scale: u64) -> Result<Json, String> {
    let plan = progs::sufficient_plan_capped(x, BROWSER_TOWER_CAP).map_err(|e| e.to_string())?;
    let (program, layout) = progs::gen_tower(x).map_err(|e| e.to_string())?;
    let oracle = OracleFamily::plan(plan.exponents.clone()).with_scale(scale.max(1));
    let out = vm::run(&program, Value::zero(), &oracle, &limits().traced());
    let steps: Vec<Json> = out
        .trace
        .iter()
        .flatten()
        .map(|ev| json!({ "step": ev.step, "mnemonic": ev.mnemonic, "bits": ev.dst_bits }))
        .collect();
    Ok(json!({
        "x": x,
        "scale": scale.max(1),
        "program": print(&program),
        "instructions": layout.instruction_count,
        "plan": plan.exponents,
        "output": compact(&out.output),
        "correct": out.output == Value::pow2(1u64 << (1u64 << x)),
        "steps": out.steps,
        "status": out.status.to_string(),
        "draw_bits": out.aln_draws.iter().map(Value::bits).collect::<Vec<_>>(),
        "trace": steps,
    }))
}

/// Escalation check of assembly text under an oracle spec; files are not
/// available, so `@path` lists are rejected.
pub fn check_json(source: &str, input: &str, oracle: &str, scales: &str) -> Result<Json, String> {
    let program = parse(source).map_err(|e| e.to_string())?;
    let report = validate_program(&program, program.profile);
    if !report.is_valid() {
        let v: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(v.join("; "));
    }
    let input = Value::parse_literal(input.trim()).map_err(|e| e.to_string())?;
    let family = OracleFamily::parse_spec(oracle, &|p| Err(format!("no file access for `{p}`")))
        .map_err(|e| e.to_string())?;
    let scales: Vec<u64> = scales
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| format!("bad scale `{s}`")))
        .collect::<Result<_, _>>()?;
    let confirmations = EscalationSchedule::default().confirmations().min(scales.len());
    let schedule = EscalationSchedule::new(scales, confirmations).map_err(|e| e.to_string())?;
    let verdict = stabilization_check(&program, &input, &schedule, &family, &limits());
    let evidence: Vec<Json> = verdict
        .evidence()
        .iter()
        .map(|e| {
            json!({
                "scale": e.scale,
                "output": compact(&e.output),
                "steps": e.steps,
                "status": e.status.to_string(),
                "draw_bits": e.draws.iter().map(Value::bits).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut out = json!({ "verdict": verdict.label(), "evidence": evidence });
    if let Verdict::Stabilized {
        value,
        first_stable_scale,
        steps_max,
        ..
    } = &verdict
    {
        out["value"] = json!(compact(value));
        out["first_stable_scale"] = json!(first_stable_scale);
        out["steps_max"] = json!(steps_max);
    }
    Ok(out)
}

/// Bound escalation of a formula under the default schedule.
pub fn formula_json(text: &str, input: &str) -> Result<Json, String> {
    let formula = parse_formula(text).map_err(|e| e.to_string())?;
    let input = Value::parse_literal(input.trim()).map_err(|e| e.to_string())?;
    let schedule = BoundSchedule::default_for(formula.quantifier_count());
    let verdict =
        escalate_bounds(&formula, &input, &schedule, BROWSER_FORMULA_BUDGET).map_err(|e| e.to_string())?;
    Ok(json!({
        "formula": formula.to_string(),
        "verdict": verdict.label(),
        "truth": match &verdict {
            BoundVerdict::Stabilized { truth, .. } => Some(*truth),
            _ => None,
        },
        "evidence": verdict.evidence(),
    }))
}

#[wasm_bindgen]
pub fn tower_demo(x: u32, scale: u32) -> String {
    respond(tower_demo_json(x.into(), scale.into()))
}

#[wasm_bindgen]
pub fn check(source: &str, input: &str, oracle: &str, scales: &str) -> String {
    respond(check_json(source, input, oracle, scales))
}

#[wasm_bindgen]
pub fn formula(text: &str, input: &str) -> String {
    respond(formula_json(text, input))
}
