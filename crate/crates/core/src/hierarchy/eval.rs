use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use super::formula::{Body, CmpOp, Formula, Quant, Term};
use crate::value::Value;

/// Default ceiling on body evaluations per `eval_bounded` call.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Bounds for every prefix variable but the last, plus an empirical cap for
/// the last one. Prefix bounds are exclusive (`a < A`); `final_cap` is
/// inclusive (the last variable ranges over `0..=final_cap`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundAssignment {
    pub bounds: Vec<u64>,
    pub final_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("formula has {quantifiers} quantifiers, so {expected} prefix bounds are needed, got {got}")]
    LengthMismatch {
        quantifiers: usize,
        expected: usize,
        got: usize,
    },
    #[error("quantifier on `{0}` is already bounded")]
    AlreadyBounded(String),
    #[error("bounds must be at least 1")]
    ZeroBound,
    #[error("needs {needed} body evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
}

impl BoundAssignment {
    pub fn new(bounds: Vec<u64>, final_cap: u64) -> Self {
        BoundAssignment { bounds, final_cap }
    }

    fn check(&self, f: &Formula) -> Result<(), HierarchyError> {
        let k = f.prefix.len();
        let expected = k.saturating_sub(1);
        if self.bounds.len() != expected {
            return Err(HierarchyError::LengthMismatch {
                quantifiers: k,
                expected,
                got: self.bounds.len(),
            });
        }
        if self.final_cap == 0 || self.bounds.contains(&0) {
            return Err(HierarchyError::ZeroBound);
        }
        Ok(())
    }
}

/// Attaches `b.bounds[i]` to prefix variable `i` for all but the last.
/// The body and quantifier kinds are untouched.
pub fn bound_quantifiers(f: &Formula, b: &BoundAssignment) -> Result<Formula, HierarchyError> {
    b.check(f)?;
    if let Some(q) = f.prefix.iter().find(|q| q.bound.is_some()) {
        return Err(HierarchyError::AlreadyBounded(q.var.clone()));
    }
    let mut out = f.clone();
    for (q, &bound) in out.prefix.iter_mut().zip(&b.bounds) {
        q.bound = Some(bound);
    }
    Ok(out)
}

/// Exclusive scan limits: the formula's own bound when present, otherwise
/// the assignment's.
fn scan_limits(f: &Formula, b: &BoundAssignment) -> Vec<u64> {
    let k = f.prefix.len();
    f.prefix
        .iter()
        .enumerate()
        .map(|(i, q)| match q.bound {
            Some(bound) => bound,
            None if i + 1 == k => b.final_cap.saturating_add(1),
            None => b.bounds[i],
        })
        .collect()
}

/// Worst-case number of body evaluations for `f` under `b`.
pub fn evaluation_cost(f: &Formula, b: &BoundAssignment) -> Result<u128, HierarchyError> {
    b.check(f)?;
    Ok(scan_limits(f, b)
        .iter()
        .fold(1u128, |acc, &n| acc.saturating_mul(n as u128)))
}

/// Brute-force truth of `f` at `inp` with every variable effectively bounded.
pub fn eval_bounded(f: &Formula, inp: &Value, b: &BoundAssignment, budget: u64) -> Result<bool, HierarchyError> {
    let needed = evaluation_cost(f, b)?;
    if needed > budget as u128 {
        return Err(HierarchyError::BudgetExceeded { needed, budget });
    }
    let ctx = Ctx {
        f,
        limits: scan_limits(f, b),
        inp_small: inp.to_u64().map(u128::from),
        inp: inp.as_biguint(),
    };
    let mut env = vec![0u64; f.prefix.len()];
    Ok(ctx.level(0, &mut env))
}

struct Ctx<'a> {
    f: &'a Formula,
    limits: Vec<u64>,
    inp_small: Option<u128>,
    inp: &'a BigUint,
}

impl Ctx<'_> {
    fn level(&self, i: usize, env: &mut Vec<u64>) -> bool {
        if i == env.len() {
            return self.body(&self.f.body, env);
        }
        let want = self.f.prefix[i].quant == Quant::Exists;
        for a in 0..self.limits[i] {
            env[i] = a;
            if self.level(i + 1, env) == want {
                return want;
            }
        }
        !want
    }

    fn body(&self, b: &Body, env: &[u64]) -> bool {
        match b {
            Body::Const(v) => *v,
            Body::And(l, r) => self.body(l, env) && self.body(r, env),
            Body::Or(l, r) => self.body(l, env) || self.body(r, env),
            Body::Not(inner) => !self.body(inner, env),
            Body::Cmp(op, l, r) => {
                let ord = match (self.small(l, env), self.small(r, env)) {
                    (Some(x), Some(y)) => x.cmp(&y),
                    _ => self.big(l, env).cmp(&self.big(r, env)),
                };
                match op {
                    CmpOp::Eq => ord.is_eq(),
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                }
            }
        }
    }

    /// `None` on overflow or an input wider than 64 bits.
    fn small(&self, t: &Term, env: &[u64]) -> Option<u128> {
        match t {
            Term::Lit(v) => v.to_u64().map(u128::from),
            Term::Var(i) => Some(env[*i] as u128),
            Term::Inp => self.inp_small,
            Term::Add(l, r) => self.small(l, env)?.checked_add(self.small(r, env)?),
            Term::Mul(l, r) => self.small(l, env)?.checked_mul(self.small(r, env)?),
            Term::Monus(l, r) => Some(self.small(l, env)?.saturating_sub(self.small(r, env)?)),
        }
    }

    fn big(&self, t: &Term, env: &[u64]) -> BigUint {
        match t {
            Term::Lit(v) => v.as_biguint().clone(),
            Term::Var(i) => BigUint::from(env[*i]),
            Term::Inp => self.inp.clone(),
            Term::Add(l, r) => self.big(l, env) + self.big(r, env),
            Term::Mul(l, r) => self.big(l, env) * self.big(r, env),
            Term::Monus(l, r) => {
                let (x, y) = (self.big(l, env), self.big(r, env));
                if x > y {
                    x - y
                } else {
                    BigUint::default()
                }
            }
        }
    }
}

/// Stages of bound assignments, escalated together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundSchedule {
    stages: Vec<BoundAssignment>,
    confirmations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundScheduleError {
    #[error("schedule has no stages")]
    Empty,
    #[error("need at least 1 confirmation and no more than the {stages} stages, got {confirmations}")]
    Confirmations { confirmations: usize, stages: usize },
}

/// Prefix bounds used by the default schedule.
pub const DEFAULT_STAGE_BOUNDS: [u64; 5] = [4, 8, 16, 32, 64];
pub const DEFAULT_CONFIRMATIONS: usize = 3;

impl BoundSchedule {
    pub fn new(stages: Vec<BoundAssignment>, confirmations: usize) -> Result<Self, BoundScheduleError> {
        if stages.is_empty() {
            return Err(BoundScheduleError::Empty);
        }
        if confirmations == 0 || confirmations > stages.len() {
            return Err(BoundScheduleError::Confirmations {
                confirmations,
                stages: stages.len(),
            });
        }
        Ok(BoundSchedule { stages, confirmations })
    }

    /// Every prefix bound equal to `a` and `final_cap = a * a`, for each
    /// `a` of `DEFAULT_STAGE_BOUNDS`.
    pub fn default_for(quantifiers: usize) -> Self {
        BoundSchedule::uniform(
            quantifiers,
            DEFAULT_STAGE_BOUNDS.iter().map(|&a| (a, a * a)),
            DEFAULT_CONFIRMATIONS,
        )
        .expect("default schedule is valid")
    }

    /// One stage per `(prefix bound, final cap)` pair.
    pub fn uniform(
        quantifiers: usize,
        stages: impl IntoIterator<Item = (u64, u64)>,
        confirmations: usize,
    ) -> Result<Self, BoundScheduleError> {
        let prefix = quantifiers.saturating_sub(1);
        BoundSchedule::new(
            stages
                .into_iter()
                .map(|(a, cap)| BoundAssignment::new(vec![a; prefix], cap))
                .collect(),
            confirmations,
        )
    }

    pub fn stages(&self) -> &[BoundAssignment] {
        &self.stages
    }

    pub fn confirmations(&self) -> usize {
        self.confirmations
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageEvidence {
    pub bounds: Vec<u64>,
    pub final_cap: u64,
    /// `None` when the stage was refused for budget or skipped after a refusal.
    pub truth: Option<bool>,
    /// Some prefix bound exceeds the final cap.
    pub cap_lags: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BoundVerdict {
    Stabilized { truth: bool, evidence: Vec<StageEvidence> },
    Unstable { evidence: Vec<StageEvidence> },
    ResourceExceeded { evidence: Vec<StageEvidence> },
}

impl BoundVerdict {
    pub fn evidence(&self) -> &[StageEvidence] {
        match self {
            BoundVerdict::Stabilized { evidence, .. }
            | BoundVerdict::Unstable { evidence }
            | BoundVerdict::ResourceExceeded { evidence } => evidence,
        }
    }

    pub fn truth(&self) -> Option<bool> {
        match self {
            BoundVerdict::Stabilized { truth, .. } => Some(*truth),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BoundVerdict::Stabilized { .. } => "stabilized",
            BoundVerdict::Unstable { .. } => "unstable",
            BoundVerdict::ResourceExceeded { .. } => "resource_exceeded",
        }
    }
}

/// Evaluates `f` at each stage and judges the last `confirmations` results.
/// Stages after a budget refusal are not attempted.
pub fn escalate_bounds(
    f: &Formula,
    inp: &Value,
    schedule: &BoundSchedule,
    budget: u64,
) -> Result<BoundVerdict, HierarchyError> {
    let mut evidence = Vec::with_capacity(schedule.stages.len());
    let mut refused = false;
    for stage in &schedule.stages {
        let truth = if refused {
            None
        } else {
            match eval_bounded(f, inp, stage, budget) {
                Ok(t) => Some(t),
                Err(HierarchyError::BudgetExceeded { .. }) => {
                    refused = true;
                    None
                }
                Err(e) => return Err(e),
            }
        };
        evidence.push(StageEvidence {
            bounds: stage.bounds.clone(),
            final_cap: stage.final_cap,
            truth,
            cap_lags: stage.bounds.iter().any(|&a| a > stage.final_cap),
        });
    }
    let tail = &evidence[evidence.len() - schedule.confirmations..];
    if tail.iter().any(|e| e.truth.is_none()) {
        return Ok(BoundVerdict::ResourceExceeded { evidence });
    }
    let truth = tail[0].truth.expect("checked");
    if tail.iter().all(|e| e.truth == Some(truth)) {
        Ok(BoundVerdict::Stabilized { truth, evidence })
    } else {
        Ok(BoundVerdict::Unstable { evidence })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn eval(s: &str, inp: u64, bounds: &[u64], cap: u64) -> bool {
        eval_bounded(
            &f(s),
            &Value::from(inp),
            &BoundAssignment::new(bounds.to_vec(), cap),
            DEFAULT_BUDGET,
        )
        .unwrap()
    }

    #[test]
    fn bounding_shape() {
        let g = f("EXISTS a . FORALL b . b <= a");
        let h = bound_quantifiers(&g, &BoundAssignment::new(vec![10], 5)).unwrap();
        assert_eq!(h.to_string(), "EXISTS a < 10 . FORALL b . b <= a");
        assert_eq!(h.body, g.body);

        let one = f("EXISTS a . a * a = inp");
        assert_eq!(bound_quantifiers(&one, &BoundAssignment::new(vec![], 5)).unwrap(), one);
        let closed = f("1 < 2");
        assert_eq!(bound_quantifiers(&closed, &BoundAssignment::new(vec![], 1)).unwrap(), closed);
    }

    #[test]
    fn bounding_errors() {
        let g = f("EXISTS a . FORALL b . b <= a");
        assert!(matches!(
            bound_quantifiers(&g, &BoundAssignment::new(vec![1, 2], 5)),
            Err(HierarchyError::LengthMismatch { expected: 1, got: 2, .. })
        ));
        assert_eq!(
            bound_quantifiers(&f("EXISTS a < 3 . FORALL b . b <= a"), &BoundAssignment::new(vec![4], 5)),
            Err(HierarchyError::AlreadyBounded("a".into()))
        );
        assert_eq!(
            bound_quantifiers(&g, &BoundAssignment::new(vec![0], 5)),
            Err(HierarchyError::ZeroBound)
        );
    }

    #[test]
    fn reference_evaluations() {
        assert!(eval("EXISTS a . a * a = inp", 49, &[], 10));
        assert!(!eval("EXISTS a . a * a = inp", 50, &[], 10));
        assert!(eval("FORALL a . EXISTS b . b = a + 1", 0, &[100], 102));
        assert!(eval(
            "FORALL a . EXISTS b . b*b <= a AND NOT ((b+1)*(b+1) <= a)",
            0,
            &[50],
            8
        ));
    }

    #[test]
    fn final_cap_is_inclusive() {
        assert!(eval("EXISTS a . a = 5", 0, &[], 5));
        assert!(!eval("EXISTS a . a = 5", 0, &[], 4));
    }

    #[test]
    fn own_bound_wins() {
        assert!(!eval("EXISTS a < 5 . a = 5", 0, &[], 100));
    }

    #[test]
    fn wide_input_uses_big_arithmetic() {
        let g = f("EXISTS a . inp < a * 18446744073709551616 * 18446744073709551616");
        let inp = Value::pow2(100);
        assert!(eval_bounded(&g, &inp, &BoundAssignment::new(vec![], 100), DEFAULT_BUDGET).unwrap());
        let h = f("EXISTS a . inp - 1 = a");
        assert!(!eval_bounded(&h, &inp, &BoundAssignment::new(vec![], 100), DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn budget_refusal() {
        let g = f("FORALL a . FORALL b . a + b = b + a");
        let err = eval_bounded(&g, &Value::zero(), &BoundAssignment::new(vec![1000], 999), 1000).unwrap_err();
        assert_eq!(err, HierarchyError::BudgetExceeded { needed: 1_000_000, budget: 1000 });
    }

    #[test]
    fn lagging_cap() {
        let g = f("EXISTS a . FORALL b . b <= a");
        for a in 1..12u64 {
            for cap in 1..12u64 {
                assert_eq!(eval("EXISTS a . FORALL b . b <= a", 0, &[a], cap), cap < a, "A={a} cap={cap}");
            }
        }
        let v = escalate_bounds(&g, &Value::zero(), &BoundSchedule::default_for(2), DEFAULT_BUDGET).unwrap();
        assert_eq!(v.truth(), Some(false));
        assert!(v.evidence().iter().all(|e| !e.cap_lags));
    }

    #[test]
    fn escalation_refuses_large_stages() {
        let g = f("FORALL a . FORALL b . FORALL c . a + b + c = c + b + a");
        let v = escalate_bounds(&g, &Value::zero(), &BoundSchedule::default_for(3), 100_000).unwrap();
        assert_eq!(v.label(), "resource_exceeded");
        assert_eq!(v.evidence()[0].truth, Some(true));
        assert_eq!(v.evidence()[4].truth, None);
    }

    #[test]
    fn schedule_validation() {
        assert_eq!(BoundSchedule::new(vec![], 1), Err(BoundScheduleError::Empty));
        assert!(BoundSchedule::uniform(2, [(4, 16)], 2).is_err());
        let s = BoundSchedule::default_for(3);
        assert_eq!(s.stages()[2], BoundAssignment::new(vec![16, 16], 256));
    }
}
