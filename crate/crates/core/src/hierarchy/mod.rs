//! Prenex formulas over the naturals, the transformation that bounds every
//! quantifier but the last, a brute-force evaluator, and a bound-escalation
//! harness with the same verdict shape as the oracle harness.

mod eval;
mod formula;

pub use eval::{
    bound_quantifiers, escalate_bounds, eval_bounded, evaluation_cost, BoundAssignment, BoundSchedule,
    BoundScheduleError, BoundVerdict, HierarchyError, StageEvidence, DEFAULT_BUDGET, DEFAULT_CONFIRMATIONS,
    DEFAULT_STAGE_BOUNDS,
};
pub use formula::{parse_formula, Body, CmpOp, Formula, FormulaParseError, Quant, QuantSpec, Term};
