//! Instruction-set vocabulary: opcodes, profiles, operands and programs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Opcode {
    Add,
    /// Truncated subtraction (monus).
    Sub,
    Mul,
    /// Integer (floor) division.
    Div,
    /// Exact division; faults on a remainder.
    Exd,
    Mod,
    /// `a * 2^b`.
    Shl,
    And,
    Or,
    Xor,
    Set,
    Mov,
    /// `dst <- R[R[src]]`
    Ldi,
    /// `R[R[addr]] <- src`
    Sti,
    Jmp,
    Jeq,
    Aln,
    Halt,
}

impl Opcode {
    pub const ALL: [Opcode; 18] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Exd,
        Opcode::Mod,
        Opcode::Shl,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Set,
        Opcode::Mov,
        Opcode::Ldi,
        Opcode::Sti,
        Opcode::Jmp,
        Opcode::Jeq,
        Opcode::Aln,
        Opcode::Halt,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::Div => "DIV",
            Opcode::Exd => "EXD",
            Opcode::Mod => "MOD",
            Opcode::Shl => "SHL",
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Set => "SET",
            Opcode::Mov => "MOV",
            Opcode::Ldi => "LDI",
            Opcode::Sti => "STI",
            Opcode::Jmp => "JMP",
            Opcode::Jeq => "JEQ",
            Opcode::Aln => "ALN",
            Opcode::Halt => "HALT",
        }
    }

    /// Case-insensitive mnemonic lookup.
    pub fn from_mnemonic(text: &str) -> Option<Opcode> {
        Opcode::ALL
            .into_iter()
            .find(|op| op.mnemonic().eq_ignore_ascii_case(text))
    }

    /// Three-operand value operations.
    pub fn is_binary(self) -> bool {
        matches!(
            self,
            Opcode::Add
                | Opcode::Sub
                | Opcode::Mul
                | Opcode::Div
                | Opcode::Exd
                | Opcode::Mod
                | Opcode::Shl
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
        )
    }

    /// Control flow, data movement, ALN and HALT: present in every profile.
    pub fn is_universal(self) -> bool {
        !self.is_binary()
    }

    /// Operand shape this opcode requires.
    pub fn shape(self) -> Shape {
        match self {
            op if op.is_binary() => Shape::Binary,
            Opcode::Set => Shape::SetImm,
            Opcode::Mov => Shape::Move,
            Opcode::Ldi => Shape::Load,
            Opcode::Sti => Shape::Store,
            Opcode::Jmp => Shape::Jump,
            Opcode::Jeq => Shape::BranchEq,
            Opcode::Aln => Shape::DstOnly,
            _ => Shape::Nullary,
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Operand layouts, written as they appear in assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// `OP dst, src1, src2`
    Binary,
    /// `SET dst, imm`
    SetImm,
    /// `MOV dst, reg|@reg`
    Move,
    /// `LDI dst, reg`
    Load,
    /// `STI reg, src`
    Store,
    /// `JMP label`
    Jump,
    /// `JEQ src1, src2, label`
    BranchEq,
    /// `ALN dst`
    DstOnly,
    /// `HALT`
    Nullary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    /// `{+, monus, *, div, mod}`
    Arith,
    /// `{+, shift, Bool}`
    ShiftBool,
    /// `{+, exact div, shift, Bool}`
    DivShiftBool,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown profile `{0}` (expected ARITH, SHIFT_BOOL, DIV_SHIFT_BOOL or FULL)")]
pub struct UnknownProfile(pub String);

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Arith => "ARITH",
            Profile::ShiftBool => "SHIFT_BOOL",
            Profile::DivShiftBool => "DIV_SHIFT_BOOL",
            Profile::Full => "FULL",
        }
    }

    pub fn allows(self, op: Opcode) -> bool {
        use Opcode::*;
        if op.is_universal() {
            return true;
        }
        match self {
            Profile::Arith => matches!(op, Add | Sub | Mul | Div | Mod),
            Profile::ShiftBool => matches!(op, Add | Shl | And | Or | Xor),
            Profile::DivShiftBool => matches!(op, Add | Shl | And | Or | Xor | Exd),
            Profile::Full => true,
        }
    }

    pub fn allowed(self) -> BTreeSet<Opcode> {
        Opcode::ALL.into_iter().filter(|op| self.allows(*op)).collect()
    }
}

impl FromStr for Profile {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ARITH" => Ok(Profile::Arith),
            "SHIFT_BOOL" => Ok(Profile::ShiftBool),
            "DIV_SHIFT_BOOL" => Ok(Profile::DivShiftBool),
            "FULL" => Ok(Profile::Full),
            _ => Err(UnknownProfile(s.to_string())),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    /// `r<n>`: the contents of register n.
    Direct(Value),
    /// `@r<n>`: the contents of register R[n].
    Indirect(Value),
    Imm(Value),
}

impl Operand {
    pub fn reg(n: u64) -> Self {
        Operand::Direct(Value::from(n))
    }

    pub fn imm(v: impl Into<Value>) -> Self {
        Operand::Imm(v.into())
    }

    fn is_register(&self) -> bool {
        !matches!(self, Operand::Imm(_))
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Direct(r) => write!(f, "r{r}"),
            Operand::Indirect(r) => write!(f, "@r{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub dst: Option<Value>,
    pub src1: Option<Operand>,
    pub src2: Option<Operand>,
    /// Instruction index a jump transfers to; `len` means "fall off the end".
    pub target: Option<usize>,
}

impl Instruction {
    pub fn binary(opcode: Opcode, dst: u64, src1: Operand, src2: Operand) -> Self {
        Instruction {
            opcode,
            dst: Some(Value::from(dst)),
            src1: Some(src1),
            src2: Some(src2),
            target: None,
        }
    }

    pub fn set(dst: u64, value: impl Into<Value>) -> Self {
        Instruction {
            opcode: Opcode::Set,
            dst: Some(Value::from(dst)),
            src1: Some(Operand::Imm(value.into())),
            src2: None,
            target: None,
        }
    }

    pub fn mov(dst: u64, src: Operand) -> Self {
        Instruction {
            opcode: Opcode::Mov,
            dst: Some(Value::from(dst)),
            src1: Some(src),
            src2: None,
            target: None,
        }
    }

    pub fn aln(dst: u64) -> Self {
        Instruction {
            opcode: Opcode::Aln,
            dst: Some(Value::from(dst)),
            src1: None,
            src2: None,
            target: None,
        }
    }

    pub fn jmp(target: usize) -> Self {
        Instruction {
            opcode: Opcode::Jmp,
            dst: None,
            src1: None,
            src2: None,
            target: Some(target),
        }
    }

    pub fn jeq(a: Operand, b: Operand, target: usize) -> Self {
        Instruction {
            opcode: Opcode::Jeq,
            dst: None,
            src1: Some(a),
            src2: Some(b),
            target: Some(target),
        }
    }

    pub fn halt() -> Self {
        Instruction {
            opcode: Opcode::Halt,
            dst: None,
            src1: None,
            src2: None,
            target: None,
        }
    }

    /// Checks operand presence and kinds against the opcode's shape.
    pub fn shape_error(&self) -> Option<String> {
        let has_dst = self.dst.is_some();
        let s1 = self.src1.as_ref();
        let s2 = self.src2.as_ref();
        let has_target = self.target.is_some();
        let ok = match self.opcode.shape() {
            Shape::Binary => has_dst && s1.is_some() && s2.is_some() && !has_target,
            Shape::SetImm => {
                has_dst && matches!(s1, Some(Operand::Imm(_))) && s2.is_none() && !has_target
            }
            Shape::Move => {
                has_dst && s1.is_some_and(Operand::is_register) && s2.is_none() && !has_target
            }
            Shape::Load => {
                has_dst && matches!(s1, Some(Operand::Direct(_))) && s2.is_none() && !has_target
            }
            Shape::Store => {
                !has_dst && matches!(s1, Some(Operand::Direct(_))) && s2.is_some() && !has_target
            }
            Shape::Jump => !has_dst && s1.is_none() && s2.is_none() && has_target,
            Shape::BranchEq => !has_dst && s1.is_some() && s2.is_some() && has_target,
            Shape::DstOnly => has_dst && s1.is_none() && s2.is_none() && !has_target,
            Shape::Nullary => !has_dst && s1.is_none() && s2.is_none() && !has_target,
        };
        (!ok).then(|| format!("operands do not match the {:?} shape of {}", self.opcode.shape(), self.opcode))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub index: usize,
}

/// An executable program together with its declared profile and metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub profile: Profile,
    pub name: Option<String>,
    /// Expected number of ALN draws, if the author declared one.
    pub aln_hint: Option<u64>,
    pub instructions: Vec<Instruction>,
    pub labels: Vec<Label>,
}

impl Program {
    pub fn new(profile: Profile) -> Self {
        Program {
            profile,
            name: None,
            aln_hint: None,
            instructions: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn push(&mut self, instr: Instruction) -> usize {
        self.instructions.push(instr);
        self.instructions.len() - 1
    }

    /// Binds `name` to the index of the next instruction pushed.
    pub fn label_here(&mut self, name: impl Into<String>) -> usize {
        let index = self.instructions.len();
        self.labels.push(Label {
            name: name.into(),
            index,
        });
        index
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().find(|l| l.name == name).map(|l| l.index)
    }

    pub fn count(&self, op: Opcode) -> usize {
        self.instructions.iter().filter(|i| i.opcode == op).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    OpcodeNotInProfile { opcode: Opcode, profile: Profile },
    UnresolvedTarget { target: usize },
    MalformedOperands { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::OpcodeNotInProfile { opcode, profile } => {
                write!(f, "instruction {}: {opcode} is not allowed by profile {profile}", self.index)
            }
            ViolationKind::UnresolvedTarget { target } => {
                write!(f, "instruction {}: jump target {target} is out of range", self.index)
            }
            ViolationKind::MalformedOperands { detail } => {
                write!(f, "instruction {}: {detail}", self.index)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every instruction against `profile`, jump targets and operand shapes.
pub fn validate_program(program: &Program, profile: Profile) -> ValidationReport {
    let mut violations = Vec::new();
    let len = program.len();
    for (index, instr) in program.instructions.iter().enumerate() {
        if !profile.allows(instr.opcode) {
            violations.push(Violation {
                index,
                kind: ViolationKind::OpcodeNotInProfile {
                    opcode: instr.opcode,
                    profile,
                },
            });
        }
        if let Some(detail) = instr.shape_error() {
            violations.push(Violation {
                index,
                kind: ViolationKind::MalformedOperands { detail },
            });
        }
        if let Some(target) = instr.target {
            if target > len {
                violations.push(Violation {
                    index,
                    kind: ViolationKind::UnresolvedTarget { target },
                });
            }
        }
    }
    ValidationReport { violations }
}
