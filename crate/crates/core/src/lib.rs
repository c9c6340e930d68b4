//! A unit-cost random access machine over unbounded naturals, with an
//! oracle instruction that yields arbitrarily large numbers.
//!
//! Every instruction costs one step regardless of operand width. Programs
//! are written in a small assembly dialect ([`asm`]), checked against an
//! instruction profile ([`isa`]) and executed by [`vm`]. Oracle draws and
//! the escalation harness that judges their influence live in [`aln`].
//! [`progs`] generates the tower programs and [`hierarchy`] handles
//! bounded evaluation of prenex formulas.

pub mod aln;
pub mod asm;
pub mod hierarchy;
pub mod isa;
pub mod progs;
pub mod value;
pub mod vm;

pub use aln::{stabilization_check, EscalationSchedule, OracleFamily, Verdict};
pub use isa::{Instruction, Opcode, Operand, Profile, Program};
pub use value::Value;
pub use vm::{run, FaultCode, Limits, RunOutcome, Status};
