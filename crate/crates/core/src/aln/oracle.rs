//! ALN oracle families.
//!
//! A family is an immutable description; the per-run draw state is the
//! machine's own draw log, passed back in through [`History`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{self, Value};

/// What the oracle may look at when sizing the next draw.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub draws: &'a [Value],
    /// Largest bit-length held by any register so far (input included).
    pub max_register_bits: u64,
    /// Draws wider than this are refused instead of allocated.
    pub ceiling_bits: u64,
}

impl<'a> History<'a> {
    pub fn empty(input_bits: u64) -> Self {
        History {
            draws: &[],
            max_register_bits: input_bits,
            ceiling_bits: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DrawError {
    #[error("fixed draw list exhausted after {provided} draws")]
    Exhausted { provided: usize },
    #[error("draw limit of {limit} reached")]
    LimitReached { limit: usize },
    #[error("draw of {bits} bits exceeds the memory ceiling")]
    ExceedsCeiling { bits: u64 },
}

/// Source of ALN draws for one run.
pub trait Oracle {
    fn next_draw(&self, history: &History<'_>) -> Result<Value, DrawError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    /// Powers of two sized from the history.
    Pow2Schedule,
    /// Explicit draws; the scale is ignored.
    FixedList(Vec<Value>),
    /// Draw `i` is `2^(e_i * scale)`.
    ExponentPlan(Vec<u64>),
    /// `Pow2Schedule` plus a small additive term that rotates with the scale.
    JitteredPow2(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFamily {
    pub kind: OracleKind,
    /// Positive escalation parameter.
    pub scale: u64,
    /// Fault after this many draws (1 gives the single-ALN machine).
    pub draw_limit: Option<usize>,
}

impl OracleFamily {
    pub fn pow2(scale: u64) -> Self {
        Self::new(OracleKind::Pow2Schedule, scale)
    }

    pub fn fixed(draws: Vec<Value>) -> Self {
        Self::new(OracleKind::FixedList(draws), 1)
    }

    pub fn plan(exponents: Vec<u64>) -> Self {
        Self::new(OracleKind::ExponentPlan(exponents), 1)
    }

    pub fn jittered(scale: u64, jitters: Vec<Value>) -> Self {
        Self::new(OracleKind::JitteredPow2(jitters), scale)
    }

    fn new(kind: OracleKind, scale: u64) -> Self {
        OracleFamily {
            kind,
            scale: scale.max(1),
            draw_limit: None,
        }
    }

    pub fn with_scale(&self, scale: u64) -> Self {
        OracleFamily {
            scale: scale.max(1),
            ..self.clone()
        }
    }

    pub fn with_draw_limit(mut self, limit: usize) -> Self {
        self.draw_limit = Some(limit);
        self
    }

    /// Exponent chosen by the power-of-two schedule: strictly more than
    /// `scale * (1 + b)` where `b` is the widest prior draw or register value.
    pub fn pow2_exponent(scale: u64, history: &History<'_>) -> u64 {
        let widest = history
            .draws
            .iter()
            .map(Value::bits)
            .chain(std::iter::once(history.max_register_bits))
            .max()
            .unwrap_or(0);
        scale.saturating_mul(widest.saturating_add(1)).saturating_add(1)
    }

    fn checked_pow2(e: u64, ceiling: u64) -> Result<Value, DrawError> {
        let bits = e.saturating_add(1);
        if bits > ceiling {
            return Err(DrawError::ExceedsCeiling { bits });
        }
        Ok(Value::pow2(e))
    }

    /// Inline spec string, parseable by [`OracleFamily::parse_spec`].
    pub fn to_spec(&self) -> String {
        let list = |items: Vec<String>| items.join("|");
        let mut s = match &self.kind {
            OracleKind::Pow2Schedule => format!("pow2:s={}", self.scale),
            OracleKind::FixedList(d) => format!("fixed:{}", list(d.iter().map(literal).collect())),
            OracleKind::ExponentPlan(e) => {
                let mut s = format!("plan:{}", list(e.iter().map(u64::to_string).collect()));
                if self.scale != 1 {
                    s.push_str(&format!(",s={}", self.scale));
                }
                s
            }
            OracleKind::JitteredPow2(j) => format!(
                "jitter:s={},j={}",
                self.scale,
                list(j.iter().map(literal).collect())
            ),
        };
        if let Some(limit) = self.draw_limit {
            s.push_str(&format!(",limit={limit}"));
        }
        s
    }

    /// Parses the oracle mini-language:
    ///
    /// * `pow2:s=3`
    /// * `fixed:@file` or `fixed:64|2^7`
    /// * `plan:@file` or `plan:6|73` (exponents; `2^e` lines also accepted)
    /// * `jitter:s=3,j=0|1|2|3`
    ///
    /// Any form accepts `,s=<n>` and `,limit=<n>`. Files hold one decimal or
    /// `2^<e>` literal per line; `#` starts a comment.
    pub fn parse_spec(spec: &str, load: &dyn Fn(&str) -> Result<String, String>) -> Result<Self, OracleSpecError> {
        let err = |msg: String| OracleSpecError {
            spec: spec.to_string(),
            message: msg,
        };
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut scale = 1u64;
        let mut limit = None;
        let mut jitters: Option<Vec<Value>> = None;
        let mut items: Option<Vec<String>> = None;
        for param in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some(v) = param.strip_prefix("s=") {
                scale = v.parse().ok().filter(|s| *s > 0).ok_or_else(|| err(format!("bad scale `{v}`")))?;
            } else if let Some(v) = param.strip_prefix("limit=") {
                limit = Some(v.parse().map_err(|_| err(format!("bad limit `{v}`")))?);
            } else if let Some(v) = param.strip_prefix("j=") {
                let js = v
                    .split('|')
                    .map(|t| Value::parse_literal(t).map_err(|e| err(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                jitters = Some(js);
            } else if let Some(path) = param.strip_prefix('@') {
                let text = load(path).map_err(|e| err(format!("cannot read `{path}`: {e}")))?;
                items = Some(list_lines(&text));
            } else {
                items = Some(param.split('|').map(|t| t.trim().to_string()).collect());
            }
        }
        let kind = match kind.trim() {
            "pow2" => OracleKind::Pow2Schedule,
            "fixed" => {
                let items = items.ok_or_else(|| err("fixed needs a draw list".into()))?;
                let draws = items
                    .iter()
                    .map(|t| Value::parse_literal(t).map_err(|e| err(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                OracleKind::FixedList(draws)
            }
            "plan" => {
                let items = items.ok_or_else(|| err("plan needs an exponent list".into()))?;
                let exps = items
                    .iter()
                    .map(|t| parse_exponent(t).ok_or_else(|| err(format!("bad plan exponent `{t}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                OracleKind::ExponentPlan(exps)
            }
            "jitter" => OracleKind::JitteredPow2(jitters.ok_or_else(|| err("jitter needs j=<list>".into()))?),
            other => return Err(err(format!("unknown oracle kind `{other}`"))),
        };
        Ok(OracleFamily {
            kind,
            scale,
            draw_limit: limit,
        })
    }
}

impl fmt::Display for OracleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spec())
    }
}

fn literal(v: &Value) -> String {
    match v.power_of_two_exponent() {
        Some(e) if e >= 16 => format!("2^{e}"),
        _ => v.to_string(),
    }
}

fn list_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// A plan entry is an exponent `e`, or the draw itself written as `2^e`.
fn parse_exponent(text: &str) -> Option<u64> {
    match text.trim().strip_prefix("2^") {
        Some(e) => e.trim().parse().ok(),
        None => text.trim().parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid oracle spec `{spec}`: {message}")]
pub struct OracleSpecError {
    pub spec: String,
    pub message: String,
}

impl Oracle for OracleFamily {
    fn next_draw(&self, history: &History<'_>) -> Result<Value, DrawError> {
        let index = history.draws.len();
        if let Some(limit) = self.draw_limit {
            if index >= limit {
                return Err(DrawError::LimitReached { limit });
            }
        }
        match &self.kind {
            OracleKind::Pow2Schedule => {
                let e = Self::pow2_exponent(self.scale, history);
                Self::checked_pow2(e, history.ceiling_bits)
            }
            OracleKind::FixedList(draws) => draws
                .get(index)
                .cloned()
                .ok_or(DrawError::Exhausted { provided: draws.len() }),
            OracleKind::ExponentPlan(exps) => {
                let base = *exps.get(index).ok_or(DrawError::Exhausted { provided: exps.len() })?;
                let e = base.checked_mul(self.scale).ok_or(DrawError::ExceedsCeiling { bits: u64::MAX })?;
                Self::checked_pow2(e, history.ceiling_bits)
            }
            OracleKind::JitteredPow2(jitters) => {
                let e = Self::pow2_exponent(self.scale, history);
                let base = Self::checked_pow2(e, history.ceiling_bits)?;
                if jitters.is_empty() {
                    return Ok(base);
                }
                let slot = (self.scale as usize).wrapping_add(index) % jitters.len();
                Ok(value::add(&base, &jitters[slot]))
            }
        }
    }
}
