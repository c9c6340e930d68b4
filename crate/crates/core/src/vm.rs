//! Unit-cost interpreter for ASRAM programs.
//!
//! Registers are a sparse map over unbounded addresses (absent means zero).
//! R[0] holds the input at start and the output at halt. Every executed
//! instruction costs exactly one step, including `ALN` and `HALT`. A run ends
//! on `HALT`, on falling off the end of the program, on a fault, or when the
//! fuel budget is spent; faulted and fuel-exhausted runs report output 0.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aln::oracle::{DrawError, History, Oracle};
use crate::isa::{Opcode, Operand, Program};
use crate::value::{self, ArithFault, BoolKind, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;
pub const DEFAULT_MEM_BITS: u64 = 1 << 30;
pub const DEFAULT_PREVIEW_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of executed instructions.
    pub fuel: u64,
    /// Maximum bit-length of any single value.
    pub mem_bits: u64,
    pub trace: bool,
    /// Hex digits kept when previewing operand values in a trace.
    pub preview_width: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            fuel: DEFAULT_FUEL,
            mem_bits: DEFAULT_MEM_BITS,
            trace: false,
            preview_width: DEFAULT_PREVIEW_WIDTH,
        }
    }
}

impl Limits {
    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    pub fn with_mem_bits(mut self, bits: u64) -> Self {
        self.mem_bits = bits;
        self
    }

    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultCode {
    DivisionByZero,
    ExactDivRemainder,
    ExactDivByZero,
    /// A value would exceed the configured bit ceiling.
    MemoryCeiling,
    /// The oracle has no further draw (fixed list exhausted, or draw limit).
    AlnUnavailable,
}

impl FaultCode {
    pub fn is_resource(self) -> bool {
        matches!(self, FaultCode::MemoryCeiling)
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FaultCode::DivisionByZero => "DIVISION_BY_ZERO",
            FaultCode::ExactDivRemainder => "EXACT_DIV_REMAINDER",
            FaultCode::ExactDivByZero => "EXACT_DIV_BY_ZERO",
            FaultCode::MemoryCeiling => "MEMORY_CEILING",
            FaultCode::AlnUnavailable => "ALN_UNAVAILABLE",
        };
        f.write_str(s)
    }
}

impl From<ArithFault> for FaultCode {
    fn from(f: ArithFault) -> Self {
        match f {
            ArithFault::DivisionByZero => FaultCode::DivisionByZero,
            ArithFault::ExactDivRemainder => FaultCode::ExactDivRemainder,
            ArithFault::ExactDivByZero => FaultCode::ExactDivByZero,
            ArithFault::ShiftTooLarge => FaultCode::MemoryCeiling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "code", rename_all = "snake_case")]
pub enum Status {
    Running,
    Halted,
    Fault(FaultCode),
    FuelExhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::Halted => f.write_str("halted"),
            Status::Fault(c) => write!(f, "fault({c})"),
            Status::FuelExhausted => f.write_str("fuel_exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandPreview {
    pub preview: String,
    pub bits: u64,
}

/// One executed instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// 1-based count of executed instructions, including this one.
    pub step: u64,
    pub pc: usize,
    pub mnemonic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dst_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draw_index: Option<usize>,
    pub operands: Vec<OperandPreview>,
}

impl TraceEvent {
    /// Line-delimited JSON record.
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("trace events serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    registers: HashMap<Value, Value>,
    pub pc: usize,
    pub steps: u64,
    /// Every ALN draw so far, in order.
    pub aln_draws: Vec<Value>,
    pub status: Status,
    /// Largest bit-length of any value held in a register so far.
    pub max_bits: u64,
}

impl MachineState {
    /// R[0] = input, every other register zero.
    pub fn new(input: Value) -> Self {
        let mut state = MachineState {
            registers: HashMap::new(),
            pc: 0,
            steps: 0,
            aln_draws: Vec::new(),
            status: Status::Running,
            max_bits: input.bits(),
        };
        state.write(Value::zero(), input);
        state
    }

    pub fn register(&self, addr: &Value) -> &Value {
        static_zero_or(self.registers.get(addr))
    }

    pub fn register_u64(&self, addr: u64) -> &Value {
        self.register(&Value::from(addr))
    }

    /// Number of registers holding a nonzero value.
    pub fn occupied(&self) -> usize {
        self.registers.len()
    }

    fn write(&mut self, addr: Value, v: Value) {
        self.max_bits = self.max_bits.max(v.bits());
        if v.is_zero() {
            self.registers.remove(&addr);
        } else {
            self.registers.insert(addr, v);
        }
    }

    fn read<'a>(&'a self, op: &'a Operand) -> Cow<'a, Value> {
        match op {
            Operand::Direct(r) => Cow::Borrowed(self.register(r)),
            Operand::Indirect(r) => Cow::Borrowed(self.register(self.register(r))),
            Operand::Imm(v) => Cow::Borrowed(v),
        }
    }

    fn fault(&mut self, code: FaultCode) {
        self.status = Status::Fault(code);
    }

    /// Executes exactly one instruction. Returns the trace event when
    /// `limits.trace` is set.
    pub fn step(&mut self, program: &Program, oracle: &dyn Oracle, limits: &Limits) -> Option<TraceEvent> {
        debug_assert_eq!(self.status, Status::Running);
        let pc = self.pc;
        let Some(instr) = program.instructions.get(pc) else {
            self.status = Status::Halted;
            return None;
        };
        self.steps += 1;
        let mut event = limits.trace.then(|| TraceEvent {
            step: self.steps,
            pc,
            mnemonic: instr.opcode.mnemonic().to_string(),
            dst_bits: None,
            draw_index: None,
            operands: [&instr.src1, &instr.src2]
                .into_iter()
                .flatten()
                .map(|op| {
                    let v = self.read(op);
                    OperandPreview {
                        preview: v.preview(limits.preview_width),
                        bits: v.bits(),
                    }
                })
                .collect(),
        });
        let mut next_pc = pc + 1;

        match instr.opcode {
            op if op.is_binary() => {
                let result = {
                    let a = self.read(instr.src1.as_ref().expect("validated"));
                    let b = self.read(instr.src2.as_ref().expect("validated"));
                    binary(op, &a, &b, limits.mem_bits)
                };
                match result {
                    Ok(v) => {
                        let dst = instr.dst.clone().expect("validated");
                        if let Some(e) = event.as_mut() {
                            e.dst_bits = Some(v.bits());
                        }
                        self.write(dst, v);
                    }
                    Err(code) => self.fault(code),
                }
            }
            Opcode::Set | Opcode::Mov => {
                let v = self.read(instr.src1.as_ref().expect("validated")).into_owned();
                if let Some(e) = event.as_mut() {
                    e.dst_bits = Some(v.bits());
                }
                self.write(instr.dst.clone().expect("validated"), v);
            }
            Opcode::Ldi => {
                let Some(Operand::Direct(r)) = &instr.src1 else {
                    unreachable!("validated")
                };
                let v = self.register(self.register(r)).clone();
                if let Some(e) = event.as_mut() {
                    e.dst_bits = Some(v.bits());
                }
                self.write(instr.dst.clone().expect("validated"), v);
            }
            Opcode::Sti => {
                let Some(Operand::Direct(r)) = &instr.src1 else {
                    unreachable!("validated")
                };
                let addr = self.register(r).clone();
                let v = self.read(instr.src2.as_ref().expect("validated")).into_owned();
                if let Some(e) = event.as_mut() {
                    e.dst_bits = Some(v.bits());
                }
                self.write(addr, v);
            }
            Opcode::Jmp => next_pc = instr.target.expect("validated"),
            Opcode::Jeq => {
                let a = self.read(instr.src1.as_ref().expect("validated"));
                let b = self.read(instr.src2.as_ref().expect("validated"));
                if a == b {
                    next_pc = instr.target.expect("validated");
                }
            }
            Opcode::Aln => {
                let history = History {
                    draws: &self.aln_draws,
                    max_register_bits: self.max_bits,
                    ceiling_bits: limits.mem_bits,
                };
                match oracle.next_draw(&history) {
                    Ok(v) if v.bits() > limits.mem_bits => self.fault(FaultCode::MemoryCeiling),
                    Ok(v) => {
                        if let Some(e) = event.as_mut() {
                            e.dst_bits = Some(v.bits());
                            e.draw_index = Some(self.aln_draws.len());
                        }
                        self.aln_draws.push(v.clone());
                        self.write(instr.dst.clone().expect("validated"), v);
                    }
                    Err(DrawError::ExceedsCeiling { .. }) => self.fault(FaultCode::MemoryCeiling),
                    Err(_) => self.fault(FaultCode::AlnUnavailable),
                }
            }
            Opcode::Halt => {
                self.status = Status::Halted;
                next_pc = pc;
            }
            _ => unreachable!("all opcodes handled"),
        }

        if self.status == Status::Running {
            self.pc = next_pc;
        }
        event
    }
}

fn static_zero_or(v: Option<&Value>) -> &Value {
    static ZERO: std::sync::OnceLock<Value> = std::sync::OnceLock::new();
    v.unwrap_or_else(|| ZERO.get_or_init(Value::zero))
}

fn binary(op: Opcode, a: &Value, b: &Value, mem_bits: u64) -> Result<Value, FaultCode> {
    // Reject before allocating when the result is certain to be too wide.
    let certain_bits = match op {
        Opcode::Mul if !a.is_zero() && !b.is_zero() => a.bits() + b.bits() - 1,
        Opcode::Shl if !a.is_zero() => match b.to_u64() {
            Some(s) => a.bits().saturating_add(s),
            None => u64::MAX,
        },
        _ => 0,
    };
    if certain_bits > mem_bits {
        return Err(FaultCode::MemoryCeiling);
    }
    let v = match op {
        Opcode::Add => value::add(a, b),
        Opcode::Sub => value::monus(a, b),
        Opcode::Mul => value::mul(a, b),
        Opcode::Div => value::int_div(a, b)?,
        Opcode::Exd => value::exact_div(a, b)?,
        Opcode::Mod => value::modulo(a, b)?,
        Opcode::Shl => value::lshift(a, b)?,
        Opcode::And => value::bool_op(BoolKind::And, a, b),
        Opcode::Or => value::bool_op(BoolKind::Or, a, b),
        Opcode::Xor => value::bool_op(BoolKind::Xor, a, b),
        _ => unreachable!("not a binary opcode"),
    };
    if v.bits() > mem_bits {
        return Err(FaultCode::MemoryCeiling);
    }
    Ok(v)
}

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// R[0] at halt; zero after a fault or fuel exhaustion.
    pub output: Value,
    /// Acceptor reading: `output != 0`.
    pub accepted: bool,
    pub steps: u64,
    pub aln_draws: Vec<Value>,
    pub status: Status,
    pub max_bits: u64,
    pub trace: Option<Vec<TraceEvent>>,
}

/// Runs `program` on `input` until it halts, faults or runs out of fuel.
/// The program is expected to have passed validation for its profile.
pub fn run(program: &Program, input: Value, oracle: &dyn Oracle, limits: &Limits) -> RunOutcome {
    let mut state = MachineState::new(input);
    run_state(&mut state, program, oracle, limits)
}

/// Continues a run from an existing state.
pub fn run_state(state: &mut MachineState, program: &Program, oracle: &dyn Oracle, limits: &Limits) -> RunOutcome {
    let mut trace = limits.trace.then(Vec::new);
    while state.status == Status::Running {
        if state.pc >= program.len() {
            state.status = Status::Halted;
            break;
        }
        if state.steps >= limits.fuel {
            state.status = Status::FuelExhausted;
            break;
        }
        if let Some(ev) = state.step(program, oracle, limits) {
            if let Some(t) = trace.as_mut() {
                t.push(ev);
            }
        }
    }
    let output = if state.status == Status::Halted {
        state.register_u64(0).clone()
    } else {
        Value::zero()
    };
    RunOutcome {
        accepted: !output.is_zero(),
        output,
        steps: state.steps,
        aln_draws: state.aln_draws.clone(),
        status: state.status,
        max_bits: state.max_bits,
        trace,
    }
}

/// Acceptor reading of a run: nonzero output accepts; faults and
/// non-termination reject.
pub fn run_acceptor(program: &Program, input: Value, oracle: &dyn Oracle, limits: &Limits) -> bool {
    run(program, input, oracle, limits).accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aln::oracle::OracleFamily;
    use crate::asm::parse;

    fn prog(src: &str) -> Program {
        parse(&format!(".profile FULL\n{src}")).unwrap()
    }

    fn no_oracle() -> OracleFamily {
        OracleFamily::fixed(vec![])
    }

    #[test]
    fn add_step() {
        let p = prog("SET r2, 2\nSET r3, 3\nADD r1, r2, r3\nHALT");
        let mut s = MachineState::new(Value::zero());
        let limits = Limits::default();
        s.step(&p, &no_oracle(), &limits);
        s.step(&p, &no_oracle(), &limits);
        assert_eq!((s.pc, s.steps), (2, 2));
        s.step(&p, &no_oracle(), &limits);
        assert_eq!(s.register_u64(1), &Value::from(5u64));
        assert_eq!((s.pc, s.steps), (3, 3));
    }

    #[test]
    fn aln_step_records_draw() {
        let p = prog("ALN r4\nHALT");
        let oracle = OracleFamily::fixed(vec![Value::pow2(6)]);
        let mut s = MachineState::new(Value::zero());
        let ev = s.step(&p, &oracle, &Limits::default().traced()).unwrap();
        assert_eq!(s.register_u64(4), &Value::from(64u64));
        assert_eq!(s.aln_draws, vec![Value::from(64u64)]);
        assert_eq!(ev.draw_index, Some(0));
        assert_eq!(ev.dst_bits, Some(7));
    }

    #[test]
    fn exact_division_fault() {
        let p = prog("SET r2, 7\nSET r3, 2\nEXD r1, r2, r3\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
        assert_eq!(out.status, Status::Fault(FaultCode::ExactDivRemainder));
        assert_eq!(out.output, Value::zero());
        assert!(!out.accepted);
        assert_eq!(out.steps, 3);
    }

    #[test]
    fn zero_division_faults_reject() {
        for op in ["DIV", "MOD"] {
            let p = prog(&format!("SET r0, 5\n{op} r0, r0, r9\nHALT"));
            let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
            assert_eq!(out.status, Status::Fault(FaultCode::DivisionByZero));
            assert!(!out.accepted);
        }
    }

    #[test]
    fn set_and_halt() {
        let p = prog("SET r0, 7\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
        assert_eq!(out.output, Value::from(7u64));
        assert_eq!(out.steps, 2);
        assert!(out.accepted);
    }

    #[test]
    fn infinite_loop_exhausts_fuel() {
        let p = prog("x: JMP x");
        let limits = Limits::default().with_fuel(1000);
        let out = run(&p, Value::from(9u64), &no_oracle(), &limits);
        assert_eq!(out.status, Status::FuelExhausted);
        assert_eq!(out.output, Value::zero());
        assert_eq!(out.steps, 1000);
        assert!(!run_acceptor(&p, Value::from(9u64), &no_oracle(), &limits));
    }

    #[test]
    fn acceptor_reads_output() {
        let yes = prog("SET r0, 16\nHALT");
        let no = prog("SET r0, 0\nHALT");
        assert!(run_acceptor(&yes, Value::zero(), &no_oracle(), &Limits::default()));
        assert!(!run_acceptor(&no, Value::from(3u64), &no_oracle(), &Limits::default()));
    }

    #[test]
    fn input_lands_in_r0_and_falls_through() {
        let out = run(&prog(""), Value::from(42u64), &no_oracle(), &Limits::default());
        assert_eq!(out.output, Value::from(42u64));
        assert_eq!(out.status, Status::Halted);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn indirect_addressing() {
        // R[5] = 1000; R[1000] = 7; r0 <- R[R[5]] via LDI and via @r5
        let p = prog("SET r5, 1000\nSTI r5, 7\nLDI r1, r5\nADD r0, r1, @r5\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
        assert_eq!(out.output, Value::from(14u64));
    }

    #[test]
    fn huge_addresses_are_fine() {
        let p = prog("SET r1, 2^200\nSTI r1, 9\nMOV r0, @r1\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
        assert_eq!(out.output, Value::from(9u64));
    }

    #[test]
    fn memory_ceiling_guards_shift_and_mul() {
        let limits = Limits::default().with_mem_bits(1000);
        let shl = prog("SET r1, 1\nSHL r0, r1, 5000\nHALT");
        let out = run(&shl, Value::zero(), &no_oracle(), &limits);
        assert_eq!(out.status, Status::Fault(FaultCode::MemoryCeiling));
        let huge_shift = prog("SET r1, 1\nSHL r0, r1, 2^70\nHALT");
        let out = run(&huge_shift, Value::zero(), &no_oracle(), &limits);
        assert_eq!(out.status, Status::Fault(FaultCode::MemoryCeiling));
        let mul = prog("SET r1, 2^600\nMUL r0, r1, r1\nHALT");
        let out = run(&mul, Value::zero(), &no_oracle(), &limits);
        assert_eq!(out.status, Status::Fault(FaultCode::MemoryCeiling));
    }

    #[test]
    fn oracle_exhaustion_faults() {
        let p = prog("ALN r1\nALN r2\nHALT");
        let out = run(&p, Value::zero(), &OracleFamily::fixed(vec![Value::from(5u64)]), &Limits::default());
        assert_eq!(out.status, Status::Fault(FaultCode::AlnUnavailable));
        assert_eq!(out.aln_draws.len(), 1);
    }

    #[test]
    fn jeq_branches_on_equality() {
        let p = prog("SET r1, 3\nJEQ r1, 3, yes\nSET r0, 1\nHALT\nyes: SET r0, 2\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default());
        assert_eq!(out.output, Value::from(2u64));
        assert_eq!(out.steps, 4);
    }

    #[test]
    fn trace_length_matches_steps() {
        let p = prog("SET r1, 0\nloop: ADD r1, r1, 1\nJEQ r1, 10, done\nJMP loop\ndone: MOV r0, r1\nHALT");
        let out = run(&p, Value::zero(), &no_oracle(), &Limits::default().traced());
        let trace = out.trace.unwrap();
        assert_eq!(trace.len() as u64, out.steps);
        assert_eq!(trace.last().unwrap().mnemonic, "HALT");
        assert!(trace[0].to_record().starts_with("{\"step\":1,\"pc\":0,\"mnemonic\":\"SET\""));
    }
}
