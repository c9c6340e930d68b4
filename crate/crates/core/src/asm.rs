//! `.asr` assembly: parser and canonical printer.
//!
//! ```text
//! .profile ARITH          ; mandatory
//! .name demo              ; optional metadata
//! .alns 1                 ; optional expected ALN count
//! loop: ADD r1, r1, 1
//!       JEQ r1, @r2, done
//!       JMP loop
//! done: HALT
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::isa::{Instruction, Label, Opcode, Operand, Profile, Shape};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    DuplicateLabel,
    UnknownMnemonic,
    MalformedOperand,
    UnknownLabel,
    MissingProfile,
    UnknownDirective,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based.
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub use crate::isa::Program;

#[derive(Debug, Clone)]
enum RawOperand {
    Direct(Value),
    Indirect(Value),
    Imm(Value),
    Label(String),
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct PendingJump {
    instr: usize,
    label: String,
    line: usize,
    column: usize,
}

struct Parser {
    diagnostics: Vec<Diagnostic>,
    program: Program,
    profile: Option<Profile>,
    // Set by any `.profile` line, valid or not.
    profile_seen: bool,
    label_sites: HashMap<String, usize>,
    pending: Vec<PendingJump>,
}

impl Parser {
    fn error(&mut self, line: usize, column: usize, kind: DiagnosticKind, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            line,
            column,
            kind,
            message: message.into(),
        });
    }

    fn directive(&mut self, line: usize, column: usize, body: &str) {
        let mut parts = body.split_whitespace();
        let name = parts.next().unwrap_or("");
        let arg = parts.next();
        let extra = parts.next();
        if name.eq_ignore_ascii_case("profile") {
            self.profile_seen = true;
        }
        match (name.to_ascii_lowercase().as_str(), arg, extra) {
            ("profile", Some(p), None) => match p.parse::<Profile>() {
                Ok(profile) => {
                    if self.profile.is_some() {
                        self.error(line, column, DiagnosticKind::Syntax, "duplicate .profile directive");
                    }
                    self.profile = Some(profile);
                }
                Err(e) => self.error(line, column, DiagnosticKind::Syntax, e.to_string()),
            },
            ("name", Some(n), None) => self.program.name = Some(n.to_string()),
            ("alns", Some(n), None) => match n.parse::<u64>() {
                Ok(k) => self.program.aln_hint = Some(k),
                Err(_) => self.error(line, column, DiagnosticKind::Syntax, format!("bad ALN count `{n}`")),
            },
            ("profile" | "name" | "alns", _, _) => {
                self.error(line, column, DiagnosticKind::Syntax, format!("directive .{name} takes one argument"))
            }
            _ => self.error(
                line,
                column,
                DiagnosticKind::UnknownDirective,
                format!("unknown directive `.{name}`"),
            ),
        }
    }

    fn line(&mut self, lineno: usize, raw: &str) {
        let code = match raw.find(';') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut rest = code;
        let mut offset = 0usize;

        // leading labels
        loop {
            let trimmed = rest.trim_start();
            offset += rest.len() - trimmed.len();
            rest = trimmed;
            if rest.is_empty() {
                return;
            }
            if let Some(body) = rest.strip_prefix('.') {
                let column = char_column(code, offset);
                self.directive(lineno, column, body);
                return;
            }
            let ident_len = rest
                .char_indices()
                .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
                .map_or(rest.len(), |(i, _)| i);
            let after = &rest[ident_len..];
            if ident_len > 0 && after.trim_start().starts_with(':') {
                let name = &rest[..ident_len];
                let column = char_column(code, offset);
                self.define_label(lineno, column, name);
                let colon = ident_len + (after.len() - after.trim_start().len()) + 1;
                offset += colon;
                rest = &rest[colon..];
                continue;
            }
            break;
        }

        let mnemonic_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let mnemonic = &rest[..mnemonic_len];
        let mnemonic_col = char_column(code, offset);
        let Some(opcode) = Opcode::from_mnemonic(mnemonic) else {
            self.error(
                lineno,
                mnemonic_col,
                DiagnosticKind::UnknownMnemonic,
                format!("unknown mnemonic `{mnemonic}`"),
            );
            return;
        };
        offset += mnemonic_len;
        let operand_text = &rest[mnemonic_len..];

        let mut tokens = Vec::new();
        if !operand_text.trim().is_empty() {
            let mut local = 0usize;
            for piece in operand_text.split(',') {
                let lead = piece.len() - piece.trim_start().len();
                tokens.push(Token {
                    text: piece.trim(),
                    column: char_column(code, offset + local + lead),
                });
                local += piece.len() + 1;
            }
        }

        let mut operands = Vec::with_capacity(tokens.len());
        let mut ok = true;
        for tok in &tokens {
            match parse_operand(tok.text) {
                Ok(op) => operands.push((op, tok.column)),
                Err(msg) => {
                    self.error(lineno, tok.column, DiagnosticKind::MalformedOperand, msg);
                    ok = false;
                }
            }
        }
        if !ok {
            return;
        }
        self.instruction(lineno, mnemonic_col, opcode, operands);
    }

    fn define_label(&mut self, line: usize, column: usize, name: &str) {
        if looks_like_register(name) || name.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            self.error(
                line,
                column,
                DiagnosticKind::Syntax,
                format!("`{name}` is not a valid label name"),
            );
            return;
        }
        if let Some(first) = self.label_sites.get(name) {
            let msg = format!("duplicate label `{name}` (first defined on line {first})");
            self.error(line, column, DiagnosticKind::DuplicateLabel, msg);
            return;
        }
        self.label_sites.insert(name.to_string(), line);
        self.program.label_here(name);
    }

    fn instruction(&mut self, line: usize, column: usize, opcode: Opcode, ops: Vec<(RawOperand, usize)>) {
        let shape = opcode.shape();
        let expected = match shape {
            Shape::Binary => 3,
            Shape::SetImm | Shape::Move | Shape::Load | Shape::Store => 2,
            Shape::Jump | Shape::DstOnly => 1,
            Shape::BranchEq => 3,
            Shape::Nullary => 0,
        };
        if ops.len() != expected {
            let msg = format!("{opcode} takes {expected} operand(s), found {}", ops.len());
            self.error(line, column, DiagnosticKind::MalformedOperand, msg);
            return;
        }

        let mut instr = Instruction {
            opcode,
            dst: None,
            src1: None,
            src2: None,
            target: None,
        };
        let mut errors = Vec::new();
        let mut take_dst = |op: &(RawOperand, usize)| match &op.0 {
            RawOperand::Direct(r) => Some(r.clone()),
            _ => {
                errors.push((op.1, "destination must be a direct register `r<n>`".to_string()));
                None
            }
        };
        let as_value = |op: &(RawOperand, usize)| -> Result<Operand, (usize, String)> {
            match &op.0 {
                RawOperand::Direct(r) => Ok(Operand::Direct(r.clone())),
                RawOperand::Indirect(r) => Ok(Operand::Indirect(r.clone())),
                RawOperand::Imm(v) => Ok(Operand::Imm(v.clone())),
                RawOperand::Label(l) => Err((op.1, format!("expected a register or literal, found label `{l}`"))),
            }
        };
        let mut label_at = None;

        match shape {
            Shape::Binary => {
                instr.dst = take_dst(&ops[0]);
                match (as_value(&ops[1]), as_value(&ops[2])) {
                    (Ok(a), Ok(b)) => {
                        instr.src1 = Some(a);
                        instr.src2 = Some(b);
                    }
                    (a, b) => errors.extend(a.err().into_iter().chain(b.err())),
                }
            }
            Shape::SetImm => {
                instr.dst = take_dst(&ops[0]);
                match &ops[1].0 {
                    RawOperand::Imm(v) => instr.src1 = Some(Operand::Imm(v.clone())),
                    _ => errors.push((ops[1].1, "SET takes an immediate literal".to_string())),
                }
            }
            Shape::Move => {
                instr.dst = take_dst(&ops[0]);
                match &ops[1].0 {
                    RawOperand::Direct(r) => instr.src1 = Some(Operand::Direct(r.clone())),
                    RawOperand::Indirect(r) => instr.src1 = Some(Operand::Indirect(r.clone())),
                    _ => errors.push((ops[1].1, "MOV takes a register source; use SET for literals".to_string())),
                }
            }
            Shape::Load => {
                instr.dst = take_dst(&ops[0]);
                match &ops[1].0 {
                    RawOperand::Direct(r) => instr.src1 = Some(Operand::Direct(r.clone())),
                    _ => errors.push((ops[1].1, "LDI takes a direct address register".to_string())),
                }
            }
            Shape::Store => {
                match &ops[0].0 {
                    RawOperand::Direct(r) => instr.src1 = Some(Operand::Direct(r.clone())),
                    _ => errors.push((ops[0].1, "STI takes a direct address register first".to_string())),
                }
                match as_value(&ops[1]) {
                    Ok(v) => instr.src2 = Some(v),
                    Err(e) => errors.push(e),
                }
            }
            Shape::Jump => label_at = Some(&ops[0]),
            Shape::BranchEq => {
                match (as_value(&ops[0]), as_value(&ops[1])) {
                    (Ok(a), Ok(b)) => {
                        instr.src1 = Some(a);
                        instr.src2 = Some(b);
                    }
                    (a, b) => errors.extend(a.err().into_iter().chain(b.err())),
                }
                label_at = Some(&ops[2]);
            }
            Shape::DstOnly => instr.dst = take_dst(&ops[0]),
            Shape::Nullary => {}
        }

        if let Some((raw, col)) = label_at {
            match raw {
                RawOperand::Label(name) => self.pending.push(PendingJump {
                    instr: self.program.len(),
                    label: name.clone(),
                    line,
                    column: *col,
                }),
                _ => errors.push((*col, "jump target must be a label".to_string())),
            }
        }

        if errors.is_empty() {
            self.program.push(instr);
        } else {
            for (col, msg) in errors {
                self.error(line, col, DiagnosticKind::MalformedOperand, msg);
            }
        }
    }

    fn finish(mut self) -> Result<Program, ParseError> {
        for jump in std::mem::take(&mut self.pending) {
            match self.program.label_index(&jump.label) {
                Some(idx) => self.program.instructions[jump.instr].target = Some(idx),
                None => self.error(
                    jump.line,
                    jump.column,
                    DiagnosticKind::UnknownLabel,
                    format!("undefined label `{}`", jump.label),
                ),
            }
        }
        match self.profile {
            Some(p) => self.program.profile = p,
            None if self.profile_seen => {}
            None => self.error(1, 1, DiagnosticKind::MissingProfile, "missing mandatory .profile directive"),
        }
        if self.diagnostics.is_empty() {
            Ok(self.program)
        } else {
            self.diagnostics.sort_by_key(|d| (d.line, d.column));
            Err(ParseError {
                diagnostics: self.diagnostics,
            })
        }
    }
}

fn char_column(line: &str, byte_offset: usize) -> usize {
    line[..byte_offset.min(line.len())].chars().count() + 1
}

fn looks_like_register(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('r' | 'R')) && !s[1..].is_empty() && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn parse_operand(text: &str) -> Result<RawOperand, String> {
    if text.is_empty() {
        return Err("empty operand".to_string());
    }
    if let Some(reg) = text.strip_prefix('@') {
        if looks_like_register(reg) {
            return Ok(RawOperand::Indirect(register_index(reg)?));
        }
        return Err(format!("malformed indirect operand `{text}`"));
    }
    if looks_like_register(text) {
        return Ok(RawOperand::Direct(register_index(text)?));
    }
    let first = text.chars().next().unwrap_or(' ');
    if first.is_ascii_digit() {
        return Value::parse_literal(text)
            .map(RawOperand::Imm)
            .map_err(|_| format!("malformed literal `{text}`"));
    }
    if (first.is_ascii_alphabetic() || first == '_') && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Ok(RawOperand::Label(text.to_string()));
    }
    Err(format!("malformed operand `{text}`"))
}

fn register_index(text: &str) -> Result<Value, String> {
    Value::parse_literal(&text[1..]).map_err(|_| format!("malformed register `{text}`"))
}

/// Parses `.asr` source. Mnemonics and register prefixes are case-insensitive;
/// both LF and CRLF line endings are accepted.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser {
        diagnostics: Vec::new(),
        program: Program::new(Profile::Full),
        profile: None,
        profile_seen: false,
        label_sites: HashMap::new(),
        pending: Vec::new(),
    };
    for (i, raw) in text.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        parser.line(i + 1, raw);
    }
    parser.finish()
}

/// Canonical text: directives, then one instruction per line with labels on
/// their own lines. Comments are not preserved; LF line endings.
pub fn print(program: &Program) -> String {
    let mut labels_at: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for Label { name, index } in &program.labels {
        labels_at.entry(*index).or_default().push(name);
    }
    // Jumps whose target carries no label get a synthesized one.
    let taken: HashSet<&str> = program.labels.iter().map(|l| l.name.as_str()).collect();
    let mut synthesized: BTreeMap<usize, String> = BTreeMap::new();
    for instr in &program.instructions {
        if let Some(t) = instr.target {
            if !labels_at.contains_key(&t) && !synthesized.contains_key(&t) {
                let mut name = format!("L{t}");
                while taken.contains(name.as_str()) {
                    name.push('_');
                }
                synthesized.insert(t, name);
            }
        }
    }
    let target_name = |t: usize| -> &str {
        labels_at
            .get(&t)
            .and_then(|v| v.first().copied())
            .unwrap_or_else(|| synthesized[&t].as_str())
    };

    let mut out = String::new();
    let _ = writeln!(out, ".profile {}", program.profile);
    if let Some(name) = &program.name {
        let _ = writeln!(out, ".name {name}");
    }
    if let Some(k) = program.aln_hint {
        let _ = writeln!(out, ".alns {k}");
    }
    let emit_labels = |out: &mut String, idx: usize| {
        for name in labels_at.get(&idx).into_iter().flatten() {
            let _ = writeln!(out, "{name}:");
        }
        if let Some(name) = synthesized.get(&idx) {
            let _ = writeln!(out, "{name}:");
        }
    };
    for (idx, instr) in program.instructions.iter().enumerate() {
        emit_labels(&mut out, idx);
        let _ = writeln!(out, "    {}", format_instruction(instr, &target_name));
    }
    emit_labels(&mut out, program.len());
    out
}

fn format_instruction<'a>(instr: &Instruction, target_name: &dyn Fn(usize) -> &'a str) -> String {
    let mut parts: Vec<String> = Vec::new();
    if let Some(d) = &instr.dst {
        parts.push(format!("r{d}"));
    }
    if let Some(a) = &instr.src1 {
        parts.push(a.to_string());
    }
    if let Some(b) = &instr.src2 {
        parts.push(b.to_string());
    }
    if let Some(t) = instr.target {
        parts.push(target_name(t).to_string());
    }
    if parts.is_empty() {
        instr.opcode.mnemonic().to_string()
    } else {
        format!("{} {}", instr.opcode.mnemonic(), parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse(".profile ARITH\nHALT").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.instructions[0].opcode, Opcode::Halt);
    }

    #[test]
    fn labels_resolve() {
        let src = ".profile ARITH\nloop: ADD r1, r1, 1\nJEQ r1, r2, done\nJMP loop\ndone: HALT";
        let p = parse(src).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.labels.len(), 2);
        assert_eq!(p.instructions[1].target, Some(3));
        assert_eq!(p.instructions[2].target, Some(0));
    }

    #[test]
    fn aln_instruction() {
        let p = parse(".profile FULL\nALN r3").unwrap();
        assert_eq!(p.instructions[0], Instruction::aln(3));
    }

    #[test]
    fn case_crlf_and_comments() {
        let src = ".PROFILE arith\r\n  add R1, @r2, 0x10 ; comment\r\nhalt\r\n";
        let p = parse(src).unwrap();
        assert_eq!(
            p.instructions[0],
            Instruction::binary(Opcode::Add, 1, Operand::Indirect(Value::from(2u64)), Operand::imm(16u64))
        );
    }

    #[test]
    fn huge_literals_survive() {
        let lit = "123456789012345678901234567890123456789012345678901234567890";
        let p = parse(&format!(".profile FULL\nSET r0, {lit}\nHALT")).unwrap();
        assert_eq!(p.instructions[0].src1, Some(Operand::Imm(lit.parse().unwrap())));
        assert!(print(&p).contains(lit));
    }

    fn kinds(src: &str) -> Vec<(usize, DiagnosticKind)> {
        parse(src)
            .unwrap_err()
            .diagnostics
            .iter()
            .map(|d| (d.line, d.kind))
            .collect()
    }

    #[test]
    fn diagnostics_carry_positions() {
        assert_eq!(kinds(".profile ARITH\nFOO r1"), vec![(2, DiagnosticKind::UnknownMnemonic)]);
        assert_eq!(
            kinds(".profile ARITH\na: HALT\na: HALT"),
            vec![(3, DiagnosticKind::DuplicateLabel)]
        );
        assert_eq!(kinds(".profile ARITH\nJMP nowhere"), vec![(2, DiagnosticKind::UnknownLabel)]);
        assert_eq!(kinds(".profile ARITH\nADD r1, r2"), vec![(2, DiagnosticKind::MalformedOperand)]);
        assert_eq!(kinds(".profile ARITH\nADD r1, r2, $3"), vec![(2, DiagnosticKind::MalformedOperand)]);
        assert_eq!(kinds("HALT"), vec![(1, DiagnosticKind::MissingProfile)]);
        assert_eq!(kinds(".profile WEIRD\nHALT"), vec![(1, DiagnosticKind::Syntax)]);
        assert_eq!(kinds(".profile FULL\n.macro x"), vec![(2, DiagnosticKind::UnknownDirective)]);
        assert_eq!(kinds(".profile FULL\nSET r1, r2"), vec![(2, DiagnosticKind::MalformedOperand)]);
        assert_eq!(kinds(".profile FULL\nADD @r1, r2, r3"), vec![(2, DiagnosticKind::MalformedOperand)]);

        let err = parse(".profile ARITH\n  ADD r1, r2, $3").unwrap_err();
        assert_eq!(err.diagnostics[0].column, 15);
        for d in &err.diagnostics {
            assert!(d.line >= 1 && d.column >= 1);
        }
    }

    #[test]
    fn print_layout() {
        let src = ".profile ARITH\nstart: ADD r1, r1, 1 ; bump\nJMP start\nend:";
        let p = parse(src).unwrap();
        let text = print(&p);
        assert_eq!(
            text,
            ".profile ARITH\nstart:\n    ADD r1, r1, 1\n    JMP start\nend:\n"
        );
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn empty_program_prints_only_the_header() {
        let p = parse(".profile ARITH").unwrap();
        assert!(p.is_empty());
        assert_eq!(print(&p), ".profile ARITH\n");
    }

    #[test]
    fn unlabeled_targets_get_synthesized_labels() {
        let mut p = Program::new(Profile::Arith);
        p.push(Instruction::jmp(1));
        p.push(Instruction::halt());
        let text = print(&p);
        let q = parse(&text).unwrap();
        assert_eq!(q.instructions, p.instructions);
    }
}
