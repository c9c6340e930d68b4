//! Arbitrary large numbers: oracle families, the escalation harness, and
//! formal linear forms over dominant symbols.

pub mod linear_form;
pub mod oracle;
pub mod stabilize;

pub use linear_form::{lf_add, lf_compare, lf_instantiate, LinearForm, MissingWitness};
pub use oracle::{DrawError, History, Oracle, OracleFamily, OracleKind, OracleSpecError};
pub use stabilize::{stabilization_check, EscalationSchedule, Evidence, ScheduleError, Verdict};
