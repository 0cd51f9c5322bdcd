//! Source parsing and printing.
//!
//! Lines hold an optional label starting in column 1, a mnemonic, and
//! comma-separated operands; `;` starts a comment and a `*` in column 1
//! comments out the whole line. Two operand dialects are accepted, chosen
//! per line:
//!
//! * symbolic operands: `MOV XR, -(XS)`, `BNE WA, =7FFF, EXSI1`,
//!   `MOV @25, WA`, `MOV WA, 2(XR)`, `MOV =NULLS, -(XS)`;
//! * hex items, where the first operand is the header byte written as two
//!   or four hex digits: `MOV 94`, `BNE B0, 7FFF, +EXSI1`, `MOV 9B, NULLS`.
//!
//! Both produce the same [`Instruction`]s.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::isa::{Access, Instruction, Mnemonic, Operand, Reg, Target, Value, BRANCH_HEADER, MAX_LITERAL};
use super::AsmError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub line: usize,
    pub label: Option<String>,
    pub insn: Option<Instruction>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

impl Program {
    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.stmts.iter().filter_map(|s| s.insn.as_ref())
    }

    pub fn instruction_count(&self) -> usize {
        self.instructions().count()
    }

    /// Render with symbolic operands; parses back to an equal program
    /// (up to line numbers).
    pub fn to_source(&self) -> String {
        self.render(format_symbolic)
    }

    /// Render with hex items.
    pub fn to_hex_source(&self) -> String {
        self.render(format_items)
    }

    fn render(&self, f: fn(&Instruction) -> String) -> String {
        let mut out = String::new();
        for s in &self.stmts {
            let label = s.label.as_deref().unwrap_or("");
            match &s.insn {
                Some(i) => writeln!(out, "{label:<6}{}", f(i)).unwrap(),
                None => writeln!(out, "{label}").unwrap(),
            }
        }
        out
    }

    /// Structural equality ignoring line numbers.
    pub fn same_shape(&self, other: &Program) -> bool {
        self.stmts.len() == other.stmts.len()
            && self
                .stmts
                .iter()
                .zip(&other.stmts)
                .all(|(a, b)| a.label == b.label && a.insn == b.insn)
    }
}

fn is_hex(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_hexdigit())
}

/// A two- or four-digit hex item.
fn is_hex_item(s: &str) -> bool {
    (s.len() == 2 || s.len() == 4) && is_hex(s)
}

fn parse_hex(s: &str, line: usize) -> Result<u16, AsmError> {
    if s.len() > 4 || !is_hex(s) {
        return Err(AsmError::Parse {
            line,
            msg: format!("malformed hex number '{s}'"),
        });
    }
    Ok(u16::from_str_radix(s, 16).expect("checked hex"))
}

/// Labels: one to five characters, a letter first, then letters, digits or
/// `$`. Names that read as hex numbers or registers are refused.
pub fn valid_label(s: &str) -> bool {
    let mut chars = s.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
    first_ok
        && s.len() <= 5
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '$')
        && !(s.len() <= 4 && is_hex(s))
        && Reg::from_name(s).is_none()
}

fn label_at(s: &str, line: usize) -> Result<String, AsmError> {
    if valid_label(s) {
        Ok(s.to_string())
    } else {
        Err(AsmError::Parse {
            line,
            msg: format!("invalid label '{s}'"),
        })
    }
}

fn symbolic_operand(text: &str, access: Access, line: usize) -> Result<Operand, AsmError> {
    let t = text.trim();
    let up = t.to_ascii_uppercase();
    if let Some(r) = Reg::from_name(&up) {
        return Ok(Operand::Reg(r));
    }
    match up.as_str() {
        "(XL)" => return Ok(Operand::Indirect(Reg::Xl)),
        "(XR)" => return Ok(Operand::Indirect(Reg::Xr)),
        "(XS)+" => return Ok(Operand::Pop),
        "-(XS)" => return Ok(Operand::Push),
        _ => {}
    }
    if let Some(rest) = t.strip_prefix('=') {
        return Ok(if rest.len() <= 4 && is_hex(rest) {
            Operand::Literal(Value::Const(parse_hex(rest, line)?))
        } else {
            Operand::Literal(Value::Label(label_at(rest, line)?))
        });
    }
    if let Some(rest) = t.strip_prefix('@') {
        return Ok(if is_hex(rest) && rest.len() <= 2 {
            Operand::Work(parse_hex(rest, line)? as u8)
        } else if is_hex(rest) && rest.len() <= 4 {
            Operand::Direct(Value::Const(parse_hex(rest, line)?))
        } else {
            Operand::Direct(Value::Label(label_at(rest, line)?))
        });
    }
    if let Some(open) = t.find('(') {
        if t.ends_with(')') {
            let off = parse_hex(&t[..open], line)?;
            let reg = Reg::from_name(&t[open + 1..t.len() - 1]).ok_or_else(|| AsmError::Parse {
                line,
                msg: format!("unknown register in '{t}'"),
            })?;
            return Ok(Operand::Offset(reg, off));
        }
    }
    let _ = access;
    Err(AsmError::Parse {
        line,
        msg: format!("unrecognised operand '{t}'"),
    })
}

fn symbolic_target(text: &str, line: usize) -> Result<Target, AsmError> {
    Ok(Target {
        value: Value::Label(label_at(text.trim(), line)?),
        relax: true,
    })
}

fn parse_symbolic(m: Mnemonic, items: &[&str], line: usize) -> Result<Instruction, AsmError> {
    let sig = m.signature();
    let want = sig.operands.len() + usize::from(sig.target);
    if items.len() != want {
        return Err(AsmError::Operand {
            line,
            mnemonic: m.name(),
            msg: format!("expected {want} operands, found {}", items.len()),
        });
    }
    let mut operands = Vec::new();
    for (text, access) in items.iter().zip(sig.operands) {
        operands.push(symbolic_operand(text, *access, line)?);
    }
    let target = if sig.target {
        Some(symbolic_target(items[want - 1], line)?)
    } else {
        None
    };
    Ok(Instruction::new(m, operands, target))
}

/// Hex-item operand for `mode`, consuming items as needed.
fn item_operand<'a>(
    mode: u8,
    items: &mut impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<Operand, AsmError> {
    let mut next = || {
        items.next().ok_or_else(|| AsmError::Parse {
            line,
            msg: format!("missing extension item for operand mode {mode:X}"),
        })
    };
    let short_or_long = |s: &str| -> Result<u16, AsmError> {
        let v = parse_hex(s, line)?;
        match s.len() {
            2 if v >= 0x80 => Ok(v - 0x80),
            4 if v <= MAX_LITERAL => Ok(v),
            _ => Err(AsmError::Parse {
                line,
                msg: format!("'{s}' is neither a short (80..FF) nor a long (0000..7FFF) value"),
            }),
        }
    };
    Ok(match mode {
        0..=5 => Operand::Reg(Reg::ALL[mode as usize]),
        0x6 => Operand::Indirect(Reg::Xl),
        0x7 => Operand::Indirect(Reg::Xr),
        0x8 => Operand::Pop,
        0x9 => Operand::Push,
        0xA => {
            let s = next()?;
            if s.len() != 2 {
                return Err(AsmError::Parse {
                    line,
                    msg: format!("work-area address '{s}' must be two hex digits"),
                });
            }
            Operand::Work(parse_hex(s, line)? as u8)
        }
        0xB => {
            let s = next()?;
            if is_hex_item(s) {
                Operand::Literal(Value::Const(short_or_long(s)?))
            } else {
                Operand::Literal(Value::Label(label_at(s, line)?))
            }
        }
        0xC => {
            let s = next()?;
            if is_hex_item(s) && s.len() == 4 {
                Operand::Direct(Value::Const(parse_hex(s, line)?))
            } else {
                Operand::Direct(Value::Label(label_at(s, line)?))
            }
        }
        _ => {
            let reg = [Reg::Xl, Reg::Xr, Reg::Xs][(mode - 0xD) as usize];
            Operand::Offset(reg, short_or_long(next()?)?)
        }
    })
}

fn item_target(s: &str, line: usize) -> Result<Target, AsmError> {
    let (name, relax) = match s.strip_prefix(['+', '-']) {
        Some(rest) => (rest, true),
        None => (s, false),
    };
    Ok(Target {
        value: Value::Label(label_at(name, line)?),
        relax,
    })
}

fn parse_items(m: Mnemonic, items: &[&str], line: usize) -> Result<Instruction, AsmError> {
    let sig = m.signature();
    let mut it = items.iter().copied().peekable();
    let header = if sig.operands.is_empty() && sig.target {
        // branch header may be implied
        match it.peek() {
            Some(s) if is_hex_item(s) => parse_hex(it.next().unwrap(), line)? as u8,
            _ => BRANCH_HEADER,
        }
    } else if sig.has_header() {
        let s = it.next().unwrap_or("");
        if s.len() != 2 || !is_hex(s) {
            return Err(AsmError::Parse {
                line,
                msg: format!("expected two-digit header byte, found '{s}'"),
            });
        }
        parse_hex(s, line)? as u8
    } else {
        0
    };
    let mut operands = Vec::new();
    for k in 0..sig.operands.len() {
        let mode = if k == 0 { header & 0xF } else { header >> 4 };
        operands.push(item_operand(mode, &mut it, line)?);
    }
    let bad_header = match sig.operands.len() {
        0 => sig.target && header != BRANCH_HEADER,
        1 => header >> 4 != 0,
        _ => false,
    };
    if bad_header {
        return Err(AsmError::Parse {
            line,
            msg: format!("header {header:02X} does not fit {}", m.name()),
        });
    }
    let target = if sig.target {
        let s = it.next().ok_or_else(|| AsmError::Parse {
            line,
            msg: "missing branch target".to_string(),
        })?;
        Some(item_target(s, line)?)
    } else {
        None
    };
    if let Some(extra) = it.next() {
        return Err(AsmError::Parse {
            line,
            msg: format!("unexpected item '{extra}'"),
        });
    }
    Ok(Instruction::new(m, operands, target))
}

/// Parse a whole source text.
pub fn parse_source(text: &str) -> Result<Program, AsmError> {
    let mut stmts = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.starts_with('*') {
            continue;
        }
        let code = raw.split(';').next().unwrap_or("").trim_end();
        if code.trim().is_empty() {
            continue;
        }
        let (label, rest) = if code.starts_with(|c: char| !c.is_whitespace()) {
            let end = code.find(char::is_whitespace).unwrap_or(code.len());
            (Some(label_at(&code[..end], line)?), &code[end..])
        } else {
            (None, code)
        };
        if let Some(l) = &label {
            if !seen.insert(l.clone()) {
                return Err(AsmError::DuplicateLabel {
                    line,
                    label: l.clone(),
                });
            }
        }
        let rest = rest.trim();
        if rest.is_empty() {
            stmts.push(Stmt {
                line,
                label,
                insn: None,
            });
            continue;
        }
        let (name, ops) = match rest.find(char::is_whitespace) {
            Some(p) => (&rest[..p], rest[p..].trim()),
            None => (rest, ""),
        };
        let m = Mnemonic::from_name(name).ok_or_else(|| AsmError::UnknownMnemonic {
            line,
            name: name.to_string(),
        })?;
        let items: Vec<&str> = if ops.is_empty() {
            Vec::new()
        } else {
            ops.split(',').map(str::trim).collect()
        };
        let insn = match items.first() {
            Some(first) if is_hex_item(first) || first.starts_with(['+', '-']) && !first.contains('(') => {
                parse_items(m, &items, line)?
            }
            _ => parse_symbolic(m, &items, line)?,
        };
        insn.validate(line)?;
        stmts.push(Stmt {
            line,
            label,
            insn: Some(insn),
        });
    }
    Ok(Program { stmts })
}

fn format_value(v: &Value, digits: usize) -> String {
    match v {
        Value::Const(c) => format!("{c:0digits$X}"),
        Value::Label(l) => l.clone(),
    }
}

pub fn format_operand(op: &Operand) -> String {
    match op {
        Operand::Reg(r) => r.name().to_string(),
        Operand::Indirect(r) => format!("({})", r.name()),
        Operand::Pop => "(XS)+".to_string(),
        Operand::Push => "-(XS)".to_string(),
        Operand::Work(a) => format!("@{a:02X}"),
        Operand::Literal(v) => format!("={}", format_value(v, 4)),
        Operand::Direct(v) => format!("@{}", format_value(v, 4)),
        Operand::Offset(r, off) => format!("{off:X}({})", r.name()),
    }
}

fn format_target(t: &Target) -> String {
    format_value(&t.value, 4)
}

/// `MOV XR, -(XS)` style.
pub fn format_symbolic(i: &Instruction) -> String {
    let mut parts: Vec<String> = i.operands.iter().map(format_operand).collect();
    if let Some(t) = &i.target {
        parts.push(format_target(t));
    }
    if parts.is_empty() {
        i.mnemonic.name().to_string()
    } else {
        format!("{} {}", i.mnemonic.name(), parts.join(", "))
    }
}

/// `MOV 9B, NULLS` style.
pub fn format_items(i: &Instruction) -> String {
    let mut parts = Vec::new();
    let sig = i.mnemonic.signature();
    if let Some(h) = i.header() {
        // A bare label after BRN reads as a relaxable symbolic target.
        let long_branch = i.target.as_ref().is_some_and(|t| !t.relax);
        if !sig.operands.is_empty() || long_branch {
            parts.push(format!("{h:02X}"));
        }
    }
    let short_or_long = |v: u16| {
        if v <= 0x7F {
            format!("{:02X}", v + 0x80)
        } else {
            format!("{v:04X}")
        }
    };
    for op in &i.operands {
        match op {
            Operand::Work(a) => parts.push(format!("{a:02X}")),
            Operand::Literal(Value::Const(v)) | Operand::Offset(_, v) => parts.push(short_or_long(*v)),
            Operand::Literal(v) | Operand::Direct(v) => parts.push(format_value(v, 4)),
            _ => {}
        }
    }
    if let Some(t) = &i.target {
        let sign = if t.relax { "+" } else { "" };
        parts.push(format!("{sign}{}", format_target(t)));
    }
    if parts.is_empty() {
        i.mnemonic.name().to_string()
    } else {
        format!("{} {}", i.mnemonic.name(), parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(src: &str) -> Stmt {
        let p = parse_source(src).unwrap();
        assert_eq!(p.stmts.len(), 1);
        p.stmts[0].clone()
    }

    #[test]
    fn hex_item_examples() {
        let s = one("EXITS LCW 04");
        assert_eq!(s.label.as_deref(), Some("EXITS"));
        let i = s.insn.unwrap();
        assert_eq!(i.mnemonic, Mnemonic::Lcw);
        assert_eq!(i.operands, vec![Operand::Reg(Reg::Xr)]);

        let i = one("      BNE B0,7FFF,+EXSI1").insn.unwrap();
        assert_eq!(i.mnemonic, Mnemonic::Bne);
        assert_eq!(i.header(), Some(0xB0));
        assert_eq!(
            i.operands,
            vec![Operand::Reg(Reg::Wa), Operand::Literal(Value::Const(0x7FFF))]
        );
        assert_eq!(
            i.target,
            Some(Target {
                value: Value::Label("EXSI1".into()),
                relax: true
            })
        );

        let i = one("  MOV 9B, NULLS").insn.unwrap();
        assert_eq!(i.operands, vec![Operand::Literal(Value::Label("NULLS".into())), Operand::Push]);
        let i = one("  MOV E0, 82").insn.unwrap();
        assert_eq!(i.operands, vec![Operand::Reg(Reg::Wa), Operand::Offset(Reg::Xr, 2)]);
        let i = one("  MOV 0A, 25").insn.unwrap();
        assert_eq!(i.operands, vec![Operand::Work(0x25), Operand::Reg(Reg::Wa)]);
        let i = one("  BRN EXITS").insn.unwrap();
        assert_eq!(i.header(), Some(0x0C));
    }

    #[test]
    fn symbolic_examples() {
        let i = one(" MOV XR, -(XS)  ; STACK RESULT").insn.unwrap();
        assert_eq!(i.header(), Some(0x94));
        let i = one(" BNE WA, =7FFF, EXSI1").insn.unwrap();
        assert_eq!(i.header(), Some(0xB0));
        assert!(i.target.unwrap().relax);
        let i = one(" MOV =NULLS, -(XS)").insn.unwrap();
        assert_eq!(i.header(), Some(0x9B));
        let i = one(" MOV @25, WA").insn.unwrap();
        assert_eq!(i.header(), Some(0x0A));
        let i = one(" ADD @0123, 1F(XS)").insn.unwrap();
        assert_eq!(
            i.operands,
            vec![Operand::Direct(Value::Const(0x123)), Operand::Offset(Reg::Xs, 0x1F)]
        );
    }

    #[test]
    fn blank_and_comment_lines() {
        assert!(parse_source("").unwrap().stmts.is_empty());
        assert!(parse_source("\n   \n* full comment\n ; note\n").unwrap().stmts.is_empty());
        let p = parse_source("LOOP\n HLT\n").unwrap();
        assert_eq!(p.stmts[0].insn, None);
        assert_eq!(p.instruction_count(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            parse_source(" HLT\n FOO WA"),
            Err(AsmError::UnknownMnemonic { line: 2, .. })
        ));
        assert!(matches!(
            parse_source("L1 HLT\nL1 NOP"),
            Err(AsmError::DuplicateLabel { line: 2, .. })
        ));
        assert!(matches!(
            parse_source(" NOP\n\n MOV =12G4, WA"),
            Err(AsmError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_source(" MOV 9B"),
            Err(AsmError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_source(" MOV WA, =0001"),
            Err(AsmError::Operand { line: 1, .. })
        ));
        assert!(matches!(parse_source("ABCD HLT"), Err(AsmError::Parse { .. })));
        assert!(matches!(parse_source("TOOLONG HLT"), Err(AsmError::Parse { .. })));
    }

    #[test]
    fn print_parse_round_trip() {
        let src = "\
EXIXR MOV XR, -(XS)
EXITS LCW XR
      MOV (XR), XL
      BRI XL
EXNUL MOV =NULLS, -(XS)
      BRN EXITS
EXSID MOV @25, WA
      BNE WA, =7FFF, EXSI1
      ZER WA
EXSI1 ICV WA
      MOV WA, 2(XR)
      MOV 1234(XS), @0456
NULLS HLT
";
        let p = parse_source(src).unwrap();
        let again = parse_source(&p.to_source()).unwrap();
        assert!(p.same_shape(&again));
        let hex = parse_source(&p.to_hex_source()).unwrap();
        assert!(p.same_shape(&hex));
    }
}
