//! Reference program generators.
//!
//! The tower program computes `2^(2^(2^x))` with `x` ALN draws and `5x + 2`
//! unit-cost steps. It relies on `P(A) mod (A - c) = P(c)` whenever `P(c)` is
//! smaller than the modulus: starting from `P_x = A_x^2`, each level turns
//! `P_{i+1} = A_{i+1}^(2^(2^(x-i-1)))` into `P_i = A_i^(2^(2^(x-i)))` with two
//! reductions, and a final pair of reductions substitutes 2 for `A_1`.
//!
//! The general tower program computes `2^(2^x)` for any `x >= 1` by building
//! the same chain for `m = bitlen(x)` levels, so that `P_i` raises its
//! argument to the power `2^(2^(m-i))`, then applying level `m - j` for every
//! set bit `j` of `x`, starting from 2.

use thiserror::Error;

use crate::isa::{Instruction, Opcode, Operand, Profile, Program};
use crate::value::{self, Value};

pub const DEFAULT_TOWER_CAP: u64 = 4;
pub const DEFAULT_GENERAL_TOWER_CAP: u64 = 12;

/// Steps taken by the tower program: `TOWER_STEP_SLOPE * x + TOWER_STEP_OFFSET`.
pub const TOWER_STEP_SLOPE: u64 = 5;
pub const TOWER_STEP_OFFSET: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgError {
    #[error("x must be at least 1")]
    ZeroX,
    #[error("x = {x} exceeds the cap of {cap}; draw sizes grow doubly exponentially in x")]
    CapExceeded { x: u64, cap: u64 },
    #[error("plan exponent overflows a 64-bit integer at x = {x}")]
    Overflow { x: u64 },
    #[error("padded value must be nonzero")]
    ZeroPadded,
}

/// Draw `i` (1-based) of a plan is `2^exponents[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentPlan {
    pub x: u64,
    pub exponents: Vec<u64>,
}

impl ExponentPlan {
    pub fn draws(&self) -> Vec<Value> {
        self.exponents.iter().map(|&e| Value::pow2(e)).collect()
    }

    /// One `2^<e>` line per draw.
    pub fn to_file(&self) -> String {
        self.exponents.iter().map(|e| format!("2^{e}\n")).collect()
    }
}

/// Register assignment of a generated tower program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerLayout {
    pub x: u64,
    /// Number of chain levels (and draws).
    pub levels: u64,
    /// Register holding `A_i` at index `i - 1`.
    pub draw_regs: Vec<u64>,
    /// Register holding `P_i` at index `i - 1`.
    pub poly_regs: Vec<u64>,
    pub temp_reg: u64,
    pub diff_reg: u64,
    pub instruction_count: usize,
}

fn reg(n: u64) -> Operand {
    Operand::reg(n)
}

fn layout(x: u64, levels: u64) -> TowerLayout {
    let draw_regs: Vec<u64> = (1..=levels).collect();
    let poly_regs: Vec<u64> = (levels + 1..=2 * levels).collect();
    TowerLayout {
        x,
        levels,
        draw_regs,
        poly_regs,
        temp_reg: 2 * levels + 1,
        diff_reg: 2 * levels + 2,
        instruction_count: 0,
    }
}

/// Draws, the initial square, and the chain down to `P_1`.
fn emit_chain(p: &mut Program, l: &TowerLayout) {
    let a = |i: u64| l.draw_regs[(i - 1) as usize];
    let poly = |i: u64| l.poly_regs[(i - 1) as usize];
    for i in 1..=l.levels {
        p.push(Instruction::aln(a(i)));
    }
    p.push(Instruction::binary(Opcode::Mul, poly(l.levels), reg(a(l.levels)), reg(a(l.levels))));
    for i in (1..l.levels).rev() {
        // temp <- P_{i+1} mod (A_{i+1} - A_i)
        p.push(Instruction::binary(Opcode::Sub, l.diff_reg, reg(a(i + 1)), reg(a(i))));
        p.push(Instruction::binary(Opcode::Mod, l.temp_reg, reg(poly(i + 1)), reg(l.diff_reg)));
        // P_i <- P_{i+1} mod (A_{i+1} - temp)
        p.push(Instruction::binary(Opcode::Sub, l.diff_reg, reg(a(i + 1)), reg(l.temp_reg)));
        p.push(Instruction::binary(Opcode::Mod, poly(i), reg(poly(i + 1)), reg(l.diff_reg)));
    }
}

/// Straight-line ARITH program computing `2^(2^(2^x))` from `x` ALN draws.
pub fn gen_tower(x: u64) -> Result<(Program, TowerLayout), ProgError> {
    if x == 0 {
        return Err(ProgError::ZeroX);
    }
    let mut l = layout(x, x);
    let mut p = Program::new(Profile::Arith);
    p.name = Some(format!("tower_x{x}"));
    p.aln_hint = Some(x);
    emit_chain(&mut p, &l);
    let (a1, p1) = (l.draw_regs[0], l.poly_regs[0]);
    p.push(Instruction::binary(Opcode::Sub, l.diff_reg, reg(a1), Operand::imm(2u64)));
    p.push(Instruction::binary(Opcode::Mod, l.temp_reg, reg(p1), reg(l.diff_reg)));
    p.push(Instruction::binary(Opcode::Sub, l.diff_reg, reg(a1), reg(l.temp_reg)));
    p.push(Instruction::binary(Opcode::Mod, 0, reg(p1), reg(l.diff_reg)));
    p.push(Instruction::halt());
    l.instruction_count = p.len();
    Ok((p, l))
}

/// Straight-line ARITH program computing `2^(2^x)` for any `x >= 1`.
pub fn gen_general_tower(x: u64) -> Result<(Program, TowerLayout), ProgError> {
    if x == 0 {
        return Err(ProgError::ZeroX);
    }
    let levels = 64 - u64::from(x.leading_zeros());
    let mut l = layout(x, levels);
    let acc = 2 * levels + 3;
    let mut p = Program::new(Profile::Arith);
    p.name = Some(format!("general_tower_x{x}"));
    p.aln_hint = Some(levels);
    emit_chain(&mut p, &l);
    p.push(Instruction::set(acc, 2u64));
    for j in (0..levels).rev().filter(|j| x >> j & 1 == 1) {
        let level = (levels - j) as usize;
        // acc <- P_level(acc) = acc^(2^(2^j))
        p.push(Instruction::binary(Opcode::Sub, l.diff_reg, reg(l.draw_regs[level - 1]), reg(acc)));
        p.push(Instruction::binary(Opcode::Mod, acc, reg(l.poly_regs[level - 1]), reg(l.diff_reg)));
    }
    p.push(Instruction::mov(0, reg(acc)));
    p.push(Instruction::halt());
    l.instruction_count = p.len();
    Ok((p, l))
}

/// Smallest exponents satisfying `e_1 >= 2^(2^x) + 2` and
/// `e_{i+1} >= e_i * 2^(2^(x-i)) + 1`, with equality.
pub fn sufficient_plan(x: u64) -> Result<ExponentPlan, ProgError> {
    sufficient_plan_capped(x, DEFAULT_TOWER_CAP)
}

pub fn sufficient_plan_capped(x: u64, cap: u64) -> Result<ExponentPlan, ProgError> {
    if x == 0 {
        return Err(ProgError::ZeroX);
    }
    if x > cap {
        return Err(ProgError::CapExceeded { x, cap });
    }
    let first = checked_pow2(checked_pow2(x, x)?, x)?.checked_add(2).ok_or(ProgError::Overflow { x })?;
    chain_plan(x, x, first)
}

/// Plan for [`gen_general_tower`]: `e_1 = 2^x + 2`, then the same chain
/// recurrence over `bitlen(x)` levels.
pub fn general_sufficient_plan(x: u64) -> Result<ExponentPlan, ProgError> {
    general_sufficient_plan_capped(x, DEFAULT_GENERAL_TOWER_CAP)
}

pub fn general_sufficient_plan_capped(x: u64, cap: u64) -> Result<ExponentPlan, ProgError> {
    if x == 0 {
        return Err(ProgError::ZeroX);
    }
    if x > cap {
        return Err(ProgError::CapExceeded { x, cap });
    }
    let levels = 64 - u64::from(x.leading_zeros());
    let first = checked_pow2(x, x)?.checked_add(2).ok_or(ProgError::Overflow { x })?;
    chain_plan(x, levels, first)
}

fn checked_pow2(e: u64, x: u64) -> Result<u64, ProgError> {
    u32::try_from(e)
        .ok()
        .and_then(|e| 1u64.checked_shl(e))
        .ok_or(ProgError::Overflow { x })
}

fn chain_plan(x: u64, levels: u64, first: u64) -> Result<ExponentPlan, ProgError> {
    let mut exponents = vec![first];
    for i in 1..levels {
        let factor = checked_pow2(checked_pow2(levels - i, x)?, x)?;
        let prev = *exponents.last().expect("nonempty");
        let next = prev
            .checked_mul(factor)
            .and_then(|v| v.checked_add(1))
            .ok_or(ProgError::Overflow { x })?;
        exponents.push(next);
    }
    Ok(ExponentPlan { x, exponents })
}

/// `(2 * inp + 1) * 2^t`: bit-length grows to `bitlen(inp) + 1 + t`.
pub fn pad_input(inp: &Value, t: u64) -> Value {
    let odd = value::add(&value::add(inp, inp), &Value::one());
    value::lshift(&odd, &Value::from(t)).expect("shift amount fits in u64")
}

/// Inverse of [`pad_input`].
pub fn unpad_input(padded: &Value) -> Result<(Value, u64), ProgError> {
    let t = padded
        .as_biguint()
        .trailing_zeros()
        .ok_or(ProgError::ZeroPadded)?;
    let odd = value::int_div(padded, &Value::pow2(t)).expect("nonzero divisor");
    let inp = value::int_div(&value::monus(&odd, &Value::one()), &Value::from(2u64)).expect("nonzero divisor");
    Ok((inp, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aln::OracleFamily;
    use crate::isa::validate_program;
    use crate::vm::{run, Limits};

    #[test]
    fn plans() {
        assert_eq!(sufficient_plan(1).unwrap().exponents, vec![6]);
        assert_eq!(sufficient_plan(2).unwrap().exponents, vec![18, 73]);
        assert_eq!(sufficient_plan(3).unwrap().exponents, vec![258, 258 * 16 + 1, (258 * 16 + 1) * 4 + 1]);
        assert_eq!(sufficient_plan(5), Err(ProgError::CapExceeded { x: 5, cap: 4 }));
        assert_eq!(sufficient_plan(0), Err(ProgError::ZeroX));
        assert_eq!(general_sufficient_plan(1).unwrap().exponents, vec![4]);
        assert_eq!(general_sufficient_plan(5).unwrap().exponents, vec![34, 34 * 16 + 1, (34 * 16 + 1) * 4 + 1]);
    }

    #[test]
    fn plan_invariants_hold() {
        for x in 1..=4 {
            let plan = sufficient_plan(x).unwrap();
            assert_eq!(plan.exponents.len() as u64, x);
            assert!(plan.exponents[0] >= (1u64 << (1u64 << x)) + 2);
            for i in 1..x as usize {
                let factor = 1u64 << (1u64 << (x - i as u64));
                assert!(plan.exponents[i] >= plan.exponents[i - 1] * factor + 1);
            }
        }
    }

    #[test]
    fn tower_x1_trace() {
        let (p, layout) = gen_tower(1).unwrap();
        assert!(validate_program(&p, Profile::Arith).is_valid());
        assert_eq!(layout.instruction_count, 7);
        let out = run(&p, Value::zero(), &OracleFamily::plan(vec![6]), &Limits::default());
        assert_eq!(out.output, Value::from(16u64));
        assert_eq!(out.steps, TOWER_STEP_SLOPE + TOWER_STEP_OFFSET);
    }

    #[test]
    fn tower_x2_output() {
        let (p, _) = gen_tower(2).unwrap();
        let out = run(&p, Value::zero(), &OracleFamily::plan(vec![18, 73]), &Limits::default());
        assert_eq!(out.output, Value::from(65536u64));
    }

    #[test]
    fn general_tower_small() {
        for (x, expected) in [(1u64, 4u64), (2, 16), (3, 256), (4, 65536), (5, 1 << 32)] {
            let (p, _) = gen_general_tower(x).unwrap();
            assert!(validate_program(&p, Profile::Arith).is_valid());
            let plan = general_sufficient_plan(x).unwrap();
            let out = run(&p, Value::zero(), &OracleFamily::plan(plan.exponents), &Limits::default());
            assert_eq!(out.output, Value::from(expected), "x = {x}");
        }
    }

    #[test]
    fn padding_examples() {
        assert_eq!(pad_input(&Value::from(5u64), 3), Value::from(88u64));
        assert_eq!(pad_input(&Value::zero(), 0), Value::one());
        assert_eq!(pad_input(&Value::from(9u64), 0), Value::from(19u64));
        assert_eq!(unpad_input(&Value::from(88u64)), Ok((Value::from(5u64), 3)));
        assert_eq!(unpad_input(&Value::one()), Ok((Value::zero(), 0)));
        assert_eq!(unpad_input(&Value::from(7u64)), Ok((Value::from(3u64), 0)));
        assert_eq!(unpad_input(&Value::zero()), Err(ProgError::ZeroPadded));
    }

    #[test]
    fn plan_file_format() {
        let text = sufficient_plan(2).unwrap().to_file();
        assert_eq!(text, "2^18\n2^73\n");
    }
}
