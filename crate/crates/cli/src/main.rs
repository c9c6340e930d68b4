use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use asram::aln::{stabilization_check, EscalationSchedule, Evidence, OracleFamily, Verdict};
use asram::hierarchy::{self, BoundSchedule, BoundVerdict, Formula};
use asram::isa::{validate_program, Profile, Program};
use asram::progs::{self, ExponentPlan};
use asram::value::Value;
use asram::vm::{self, Limits, RunOutcome, Status};

/// Values wider than this print as `2^e` or `<n bits>`.
const DISPLAY_BITS: u64 = 512;

mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const FAULT: u8 = 2;
    pub const FUEL: u8 = 3;
    pub const UNSTABLE: u8 = 4;
    pub const RESOURCE: u8 = 5;
}

#[derive(Parser)]
#[command(name = "asram", version, about = "Unit-cost RAM with arbitrarily large number draws")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Step budget per run.
    #[arg(long, global = true, default_value_t = vm::DEFAULT_FUEL, value_parser = positive)]
    fuel: u64,
    /// Largest bit-length any value may reach.
    #[arg(long, global = true, default_value_t = vm::DEFAULT_MEM_BITS, value_parser = positive)]
    mem_bits: u64,
    /// Print one line per executed instruction.
    #[arg(long, global = true)]
    trace: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program, then print it in canonical form.
    Asm {
        program: PathBuf,
        /// Validate against this profile instead of the declared one.
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Run a program once.
    Run {
        program: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Run at escalating oracle scales and report whether the output settles.
    Check {
        program: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
        /// Comma-separated increasing scales.
        #[arg(long, value_delimiter = ',', default_values_t = EscalationSchedule::default().scales().to_vec())]
        scales: Vec<u64>,
        /// Trailing runs that must agree.
        #[arg(long, default_value_t = EscalationSchedule::default().confirmations())]
        confirmations: usize,
    },
    /// Write a generated program and its sufficient exponent plan.
    Gen {
        kind: GenKind,
        x: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the refusal cap on x.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Evaluate a prenex formula under escalating quantifier bounds.
    Formula {
        /// Formula text, or `@path` to read it from a file.
        formula: String,
        #[arg(long, default_value = "0", value_parser = parse_value)]
        input: Value,
        /// Body evaluations allowed per stage.
        #[arg(long, default_value_t = hierarchy::DEFAULT_BUDGET)]
        budget: u64,
        /// Stages as `A:cap` pairs; defaults to A in 4,8,16,32,64 with cap A^2.
        #[arg(long, value_delimiter = ',', value_parser = parse_stage)]
        stages: Vec<(u64, u64)>,
        #[arg(long, default_value_t = hierarchy::DEFAULT_CONFIRMATIONS)]
        confirmations: usize,
    },
}

#[derive(Args)]
struct ExecArgs {
    #[arg(long, default_value = "0", value_parser = parse_value)]
    input: Value,
    /// Validate against this profile instead of the declared one.
    #[arg(long)]
    profile: Option<Profile>,
    /// Oracle spec: `pow2`, `fixed:...`, `plan:...`, `plan:auto`, `jitter:...`.
    #[arg(long, default_value = "pow2")]
    oracle: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Tower,
    GeneralTower,
}

fn positive(s: &str) -> Result<u64, String> {
    match Value::parse_literal(s).map_err(|e| e.to_string())?.to_u64() {
        Some(n) if n > 0 => Ok(n),
        _ => Err("expected a positive 64-bit integer".into()),
    }
}

fn parse_value(s: &str) -> Result<Value, String> {
    Value::parse_literal(s).map_err(|e| e.to_string())
}

fn parse_stage(s: &str) -> Result<(u64, u64), String> {
    let (a, cap) = s.split_once(':').ok_or("expected A:cap")?;
    Ok((positive(a)?, positive(cap)?))
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: exit::USAGE,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let result = match &cli.command {
        Command::Asm { program, profile } => cmd_asm(program, *profile),
        Command::Run { program, exec } => cmd_run(&cli.global, program, exec),
        Command::Check {
            program,
            exec,
            scales,
            confirmations,
        } => cmd_check(&cli.global, program, exec, scales, *confirmations),
        Command::Gen { kind, x, out_dir, cap } => cmd_gen(*kind, *x, out_dir, *cap),
        Command::Formula {
            formula,
            input,
            budget,
            stages,
            confirmations,
        } => cmd_formula(&cli.global, formula, input, *budget, stages, *confirmations),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path, profile: Option<Profile>) -> Result<(Program, String), Failure> {
    let text = read(path)?;
    let program = asram::asm::parse(&text).map_err(|e| {
        let lines: Vec<String> = e.diagnostics.iter().map(|d| format!("{}:{d}", path.display())).collect();
        usage(lines.join("\n"))
    })?;
    let report = validate_program(&program, profile.unwrap_or(program.profile));
    if !report.is_valid() {
        let lines: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("{}: {v}", path.display()))
            .collect();
        return Err(usage(lines.join("\n")));
    }
    let canonical = asram::asm::print(&program);
    Ok((program, canonical))
}

fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// `@path` falls back to the program's directory when not found as given.
fn oracle_for(spec: &str, program: &Program, program_path: &Path) -> Result<OracleFamily, Failure> {
    if spec.trim() == "plan:auto" || spec.trim().starts_with("plan:auto,") {
        let plan = auto_plan(program)?;
        let rest = spec.trim().strip_prefix("plan:auto").unwrap_or("");
        let listed: Vec<String> = plan.exponents.iter().map(u64::to_string).collect();
        return oracle_for(&format!("plan:{}{rest}", listed.join("|")), program, program_path);
    }
    let base = program_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let load = |p: &str| {
        fs::read_to_string(p)
            .or_else(|_| fs::read_to_string(base.join(p)))
            .map_err(|e| e.to_string())
    };
    OracleFamily::parse_spec(spec, &load).map_err(|e| usage(e.to_string()))
}

/// Sufficient plan for a generated tower, identified by its `.name`.
fn auto_plan(program: &Program) -> Result<ExponentPlan, Failure> {
    let name = program.name.as_deref().unwrap_or("");
    let parsed = if let Some(x) = name.strip_prefix("general_tower_x") {
        x.parse().ok().map(|x| progs::general_sufficient_plan(x))
    } else if let Some(x) = name.strip_prefix("tower_x") {
        x.parse().ok().map(|x| progs::sufficient_plan(x))
    } else {
        None
    };
    match parsed {
        Some(plan) => plan.map_err(|e| usage(e.to_string())),
        None => Err(usage(format!(
            "plan:auto needs a program named tower_x<N> or general_tower_x<N>, got `{name}`"
        ))),
    }
}

fn limits(g: &Global) -> Limits {
    Limits {
        trace: g.trace,
        ..Limits::default().with_fuel(g.fuel).with_mem_bits(g.mem_bits)
    }
}

fn compact(v: &Value) -> String {
    v.display_compact(DISPLAY_BITS)
}

fn status_exit(status: Status) -> u8 {
    match status {
        Status::Halted | Status::Running => exit::OK,
        Status::Fault(_) => exit::FAULT,
        Status::FuelExhausted => exit::FUEL,
    }
}

fn cmd_asm(path: &Path, profile: Option<Profile>) -> CmdResult {
    let (program, canonical) = load_program(path, profile)?;
    print!("{canonical}");
    eprintln!(
        "ok: {} instructions, profile {}",
        program.len(),
        profile.unwrap_or(program.profile)
    );
    Ok(exit::OK)
}

fn run_record(path: &Path, canonical: &str, input: &Value, oracle: &OracleFamily, g: &Global) -> serde_json::Value {
    json!({
        "program": path.display().to_string(),
        "program_sha256": sha256_hex(canonical),
        "input": input,
        "oracle": oracle.to_spec(),
        "fuel": g.fuel,
        "mem_bits": g.mem_bits,
    })
}

fn draw_bits(draws: &[Value]) -> Vec<u64> {
    draws.iter().map(Value::bits).collect()
}

fn cmd_run(g: &Global, path: &Path, exec: &ExecArgs) -> CmdResult {
    let (program, canonical) = load_program(path, exec.profile)?;
    let oracle = oracle_for(&exec.oracle, &program, path)?;
    let out: RunOutcome = vm::run(&program, exec.input.clone(), &oracle, &limits(g));
    match g.format {
        Format::Human => {
            for ev in out.trace.iter().flatten() {
                let ops: Vec<String> = ev.operands.iter().map(|o| format!("{}[{}b]", o.preview, o.bits)).collect();
                let dst = ev.dst_bits.map(|b| format!(" -> {b} bits")).unwrap_or_default();
                println!("{:>6} pc={:<4} {:<5} {}{dst}", ev.step, ev.pc, ev.mnemonic, ops.join(", "));
            }
            println!(
                "output={} steps={} status={} draws={} max_bits={}",
                compact(&out.output),
                out.steps,
                out.status,
                out.aln_draws.len(),
                out.max_bits
            );
            if !out.aln_draws.is_empty() {
                let bits: Vec<String> = draw_bits(&out.aln_draws).iter().map(u64::to_string).collect();
                println!("draw_bits={}", bits.join(","));
            }
        }
        Format::Jsonl => {
            for ev in out.trace.iter().flatten() {
                println!("{}", ev.to_record());
            }
            let mut rec = run_record(path, &canonical, &exec.input, &oracle, g);
            let extra = json!({
                "kind": "run",
                "output": compact(&out.output),
                "output_bits": out.output.bits(),
                "accepted": out.accepted,
                "steps": out.steps,
                "status": out.status.to_string(),
                "draw_bits": draw_bits(&out.aln_draws),
                "max_bits": out.max_bits,
            });
            merge(&mut rec, extra);
            println!("{rec}");
        }
    }
    Ok(status_exit(out.status))
}

fn merge(into: &mut serde_json::Value, from: serde_json::Value) {
    if let (Some(a), serde_json::Value::Object(b)) = (into.as_object_mut(), from) {
        a.extend(b);
    }
}

fn evidence_json(e: &Evidence) -> serde_json::Value {
    json!({
        "scale": e.scale,
        "output": compact(&e.output),
        "steps": e.steps,
        "status": e.status.to_string(),
        "draw_bits": draw_bits(&e.draws),
    })
}

fn verdict_exit(label: &str) -> u8 {
    match label {
        "stabilized" => exit::OK,
        "unstable" => exit::UNSTABLE,
        _ => exit::RESOURCE,
    }
}

fn cmd_check(g: &Global, path: &Path, exec: &ExecArgs, scales: &[u64], confirmations: usize) -> CmdResult {
    let (program, canonical) = load_program(path, exec.profile)?;
    let oracle = oracle_for(&exec.oracle, &program, path)?;
    let schedule = EscalationSchedule::new(scales.to_vec(), confirmations).map_err(|e| usage(e.to_string()))?;
    let verdict = stabilization_check(&program, &exec.input, &schedule, &oracle, &limits(g));
    let headline = match &verdict {
        Verdict::Stabilized {
            value,
            steps_max,
            first_stable_scale,
            ..
        } => format!(
            "stabilized value={} first_stable_scale={first_stable_scale} steps_max={steps_max}",
            compact(value)
        ),
        other => other.label().to_string(),
    };
    match g.format {
        Format::Human => {
            println!("{:>6}  {:>12}  {:>8}  {:<16}  draw_bits", "scale", "output", "steps", "status");
            for e in verdict.evidence() {
                let bits: Vec<String> = draw_bits(&e.draws).iter().map(u64::to_string).collect();
                println!(
                    "{:>6}  {:>12}  {:>8}  {:<16}  {}",
                    e.scale,
                    compact(&e.output),
                    e.steps,
                    e.status.to_string(),
                    bits.join(",")
                );
            }
            println!("{headline}");
        }
        Format::Jsonl => {
            let mut rec = run_record(path, &canonical, &exec.input, &oracle, g);
            let mut extra = json!({
                "kind": "check",
                "verdict": verdict.label(),
                "scales": schedule.scales(),
                "confirmations": schedule.confirmations(),
                "evidence": verdict.evidence().iter().map(evidence_json).collect::<Vec<_>>(),
            });
            if let Verdict::Stabilized {
                value,
                steps_max,
                first_stable_scale,
                ..
            } = &verdict
            {
                merge(
                    &mut extra,
                    json!({
                        "value": compact(value),
                        "steps_max": steps_max,
                        "first_stable_scale": first_stable_scale,
                    }),
                );
            }
            merge(&mut rec, extra);
            println!("{rec}");
        }
    }
    Ok(verdict_exit(verdict.label()))
}

fn cmd_gen(kind: GenKind, x: u64, out_dir: &Path, cap: Option<u64>) -> CmdResult {
    let generated = match kind {
        GenKind::Tower => progs::sufficient_plan_capped(x, cap.unwrap_or(progs::DEFAULT_TOWER_CAP))
            .and_then(|plan| Ok((progs::gen_tower(x)?, plan))),
        GenKind::GeneralTower => {
            progs::general_sufficient_plan_capped(x, cap.unwrap_or(progs::DEFAULT_GENERAL_TOWER_CAP))
                .and_then(|plan| Ok((progs::gen_general_tower(x)?, plan)))
        }
    };
    let ((program, layout), plan) = generated.map_err(|e| usage(e.to_string()))?;
    let stem = program.name.clone().expect("generated programs are named");
    fs::create_dir_all(out_dir).map_err(|e| usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let asr = out_dir.join(format!("{stem}.asr"));
    let plan_path = out_dir.join(format!("{stem}.plan"));
    let write = |p: &Path, text: String| fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display())));
    write(&asr, asram::asm::print(&program))?;
    write(
        &plan_path,
        format!("# sufficient exponent plan for {stem}\n{}", plan.to_file()),
    )?;
    let exps: Vec<String> = plan.exponents.iter().map(u64::to_string).collect();
    println!(
        "wrote {} ({} instructions, {} draws) and {} (exponents {})",
        asr.display(),
        layout.instruction_count,
        layout.levels,
        plan_path.display(),
        exps.join(", ")
    );
    Ok(exit::OK)
}

fn cmd_formula(
    g: &Global,
    text: &str,
    input: &Value,
    budget: u64,
    stages: &[(u64, u64)],
    confirmations: usize,
) -> CmdResult {
    let source = match text.strip_prefix('@') {
        Some(p) => read(Path::new(p))?,
        None => text.to_string(),
    };
    let formula: Formula = source.trim().parse().map_err(|e| usage(format!("formula: {e}")))?;
    let k = formula.quantifier_count();
    let schedule = if stages.is_empty() {
        BoundSchedule::default_for(k)
    } else {
        BoundSchedule::uniform(k, stages.iter().copied(), confirmations).map_err(|e| usage(e.to_string()))?
    };
    let verdict = hierarchy::escalate_bounds(&formula, input, &schedule, budget).map_err(|e| usage(e.to_string()))?;
    let headline = match &verdict {
        BoundVerdict::Stabilized { truth, .. } => format!("stabilized truth={truth}"),
        other => other.label().to_string(),
    };
    match g.format {
        Format::Human => {
            println!("formula: {formula}");
            println!("{:>14}  {:>10}  {:<8}  note", "bounds", "final_cap", "truth");
            for e in verdict.evidence() {
                let bounds: Vec<String> = e.bounds.iter().map(u64::to_string).collect();
                let truth = e.truth.map_or("refused".to_string(), |t| t.to_string());
                let note = if e.cap_lags { "cap lags a bound" } else { "" };
                println!("{:>14}  {:>10}  {:<8}  {note}", bounds.join(","), e.final_cap, truth);
            }
            println!("{headline}");
        }
        Format::Jsonl => {
            let rec = json!({
                "kind": "formula",
                "formula": formula.to_string(),
                "input": input,
                "budget": budget,
                "verdict": verdict.label(),
                "truth": verdict.truth(),
                "confirmations": schedule.confirmations(),
                "evidence": verdict.evidence(),
            });
            println!("{rec}");
        }
    }
    Ok(verdict_exit(verdict.label()))
}
