//! Instruction set: mnemonics, registers, operand modes.

use std::fmt;

use super::AsmError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mnemonic {
    Hlt,
    Nop,
    Brn,
    Beq,
    Bne,
    Blt,
    Bri,
    Add,
    Sub,
    Icv,
    Dcv,
    Lcw,
    Mov,
    Out,
    Zer,
}

/// How an instruction uses one of its header-described operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Read,
    /// Written (and possibly read); literals are illegal here.
    Write,
}

/// Operand layout of a mnemonic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub operands: &'static [Access],
    /// Trailing code-address operand.
    pub target: bool,
}

impl Signature {
    /// Whether an operand header byte follows the opcode.
    pub fn has_header(&self) -> bool {
        !self.operands.is_empty() || self.target
    }
}

/// Header byte of a branch whose only operand is its target.
pub const BRANCH_HEADER: u8 = 0x0C;

const NONE: &[Access] = &[];
const R: &[Access] = &[Access::Read];
const W: &[Access] = &[Access::Write];
const RR: &[Access] = &[Access::Read, Access::Read];
const RW: &[Access] = &[Access::Read, Access::Write];

impl Mnemonic {
    pub const ALL: [Mnemonic; 15] = [
        Mnemonic::Hlt,
        Mnemonic::Nop,
        Mnemonic::Brn,
        Mnemonic::Beq,
        Mnemonic::Bne,
        Mnemonic::Blt,
        Mnemonic::Bri,
        Mnemonic::Add,
        Mnemonic::Sub,
        Mnemonic::Icv,
        Mnemonic::Dcv,
        Mnemonic::Lcw,
        Mnemonic::Mov,
        Mnemonic::Out,
        Mnemonic::Zer,
    ];

    pub fn opcode(self) -> u8 {
        match self {
            Mnemonic::Hlt => 0x00,
            Mnemonic::Nop => 0x01,
            Mnemonic::Brn => 0x03,
            Mnemonic::Beq => 0x08,
            Mnemonic::Bne => 0x09,
            Mnemonic::Blt => 0x0A,
            Mnemonic::Bri => 0x0B,
            Mnemonic::Add => 0x10,
            Mnemonic::Sub => 0x11,
            Mnemonic::Icv => 0x1C,
            Mnemonic::Dcv => 0x1D,
            Mnemonic::Lcw => 0x2A,
            Mnemonic::Mov => 0x32,
            Mnemonic::Out => 0x40,
            Mnemonic::Zer => 0x44,
        }
    }

    pub fn from_opcode(op: u8) -> Option<Mnemonic> {
        Mnemonic::ALL.into_iter().find(|m| m.opcode() == op)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mnemonic::Hlt => "HLT",
            Mnemonic::Nop => "NOP",
            Mnemonic::Brn => "BRN",
            Mnemonic::Beq => "BEQ",
            Mnemonic::Bne => "BNE",
            Mnemonic::Blt => "BLT",
            Mnemonic::Bri => "BRI",
            Mnemonic::Add => "ADD",
            Mnemonic::Sub => "SUB",
            Mnemonic::Icv => "ICV",
            Mnemonic::Dcv => "DCV",
            Mnemonic::Lcw => "LCW",
            Mnemonic::Mov => "MOV",
            Mnemonic::Out => "OUT",
            Mnemonic::Zer => "ZER",
        }
    }

    pub fn from_name(s: &str) -> Option<Mnemonic> {
        Mnemonic::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    pub fn signature(self) -> Signature {
        let (operands, target) = match self {
            Mnemonic::Hlt | Mnemonic::Nop => (NONE, false),
            Mnemonic::Brn => (NONE, true),
            Mnemonic::Beq | Mnemonic::Bne | Mnemonic::Blt => (RR, true),
            Mnemonic::Bri | Mnemonic::Out => (R, false),
            Mnemonic::Add | Mnemonic::Sub | Mnemonic::Mov => (RW, false),
            Mnemonic::Icv | Mnemonic::Dcv | Mnemonic::Zer | Mnemonic::Lcw => (W, false),
        };
        Signature { operands, target }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reg {
    Wa,
    Wb,
    Wc,
    Xl,
    Xr,
    Xs,
}

impl Reg {
    pub const ALL: [Reg; 6] = [Reg::Wa, Reg::Wb, Reg::Wc, Reg::Xl, Reg::Xr, Reg::Xs];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["WA", "WB", "WC", "XL", "XR", "XS"][self.index()]
    }

    pub fn from_name(s: &str) -> Option<Reg> {
        Reg::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }
}

/// A numeric value or a label whose address is filled in at layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Const(u16),
    Label(String),
}

/// Largest literal or offset value.
pub const MAX_LITERAL: u16 = 0x7FFF;

/// Operand addressing modes, one per header nibble.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    /// Register contents (nibbles 0..=5).
    Reg(Reg),
    /// Word addressed by XL (6) or XR (7).
    Indirect(Reg),
    /// `(XS)+`: word at XS, then XS += 2 (8).
    Pop,
    /// `-(XS)`: XS -= 2, then word at XS (9).
    Push,
    /// Work-area word at a one-byte address (A).
    Work(u8),
    /// Literal value (B).
    Literal(Value),
    /// Word at a two-byte address (C).
    Direct(Value),
    /// Word at register + offset, for XL (D), XR (E), XS (F).
    Offset(Reg, u16),
}

impl Operand {
    pub fn mode(&self) -> u8 {
        match self {
            Operand::Reg(r) => r.index() as u8,
            Operand::Indirect(Reg::Xl) => 0x6,
            Operand::Indirect(_) => 0x7,
            Operand::Pop => 0x8,
            Operand::Push => 0x9,
            Operand::Work(_) => 0xA,
            Operand::Literal(_) => 0xB,
            Operand::Direct(_) => 0xC,
            Operand::Offset(Reg::Xl, _) => 0xD,
            Operand::Offset(Reg::Xr, _) => 0xE,
            Operand::Offset(_, _) => 0xF,
        }
    }

    fn check(&self, access: Access) -> Result<(), String> {
        match self {
            Operand::Indirect(r) if !matches!(r, Reg::Xl | Reg::Xr) => {
                Err(format!("indirect through {} is not addressable", r.name()))
            }
            Operand::Offset(r, _) if !matches!(r, Reg::Xl | Reg::Xr | Reg::Xs) => {
                Err(format!("offset from {} is not addressable", r.name()))
            }
            Operand::Offset(_, off) if *off > MAX_LITERAL => {
                Err(format!("offset {off:#X} out of range 0..7FFF"))
            }
            Operand::Literal(Value::Const(v)) if *v > MAX_LITERAL => {
                Err(format!("literal {v:#X} out of range 0..7FFF"))
            }
            Operand::Literal(_) if access == Access::Write => {
                Err("literal cannot be a destination".to_string())
            }
            _ => Ok(()),
        }
    }
}

/// Branch destination.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Target {
    pub value: Value,
    /// May be shortened to the one-byte relative form.
    pub relax: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub mnemonic: Mnemonic,
    pub operands: Vec<Operand>,
    pub target: Option<Target>,
}

impl Instruction {
    pub fn new(mnemonic: Mnemonic, operands: Vec<Operand>, target: Option<Target>) -> Self {
        Instruction {
            mnemonic,
            operands,
            target,
        }
    }

    /// Check operand count, kinds and ranges against the signature.
    pub fn validate(&self, line: usize) -> Result<(), AsmError> {
        let sig = self.mnemonic.signature();
        let bad = |msg: String| AsmError::Operand {
            line,
            mnemonic: self.mnemonic.name(),
            msg,
        };
        let expected = sig.operands.len() + usize::from(sig.target);
        let got = self.operands.len() + usize::from(self.target.is_some());
        if self.operands.len() != sig.operands.len() || self.target.is_some() != sig.target {
            return Err(bad(format!("expected {expected} operands, found {got}")));
        }
        for (op, access) in self.operands.iter().zip(sig.operands) {
            op.check(*access).map_err(bad)?;
        }
        Ok(())
    }

    /// Operand header byte, if the mnemonic has one.
    pub fn header(&self) -> Option<u8> {
        let sig = self.mnemonic.signature();
        if !sig.has_header() {
            return None;
        }
        if sig.operands.is_empty() {
            return Some(BRANCH_HEADER);
        }
        let lo = self.operands[0].mode();
        let hi = self.operands.get(1).map_or(0, Operand::mode);
        Some(hi << 4 | lo)
    }

    /// Replace every label by its address.
    pub fn resolve(&self, lookup: impl Fn(&str) -> Option<u16>) -> Option<Instruction> {
        let value = |v: &Value| match v {
            Value::Const(c) => Some(Value::Const(*c)),
            Value::Label(l) => lookup(l).map(Value::Const),
        };
        let operands = self
            .operands
            .iter()
            .map(|op| {
                Some(match op {
                    Operand::Literal(v) => Operand::Literal(value(v)?),
                    Operand::Direct(v) => Operand::Direct(value(v)?),
                    other => other.clone(),
                })
            })
            .collect::<Option<Vec<_>>>()?;
        let target = match &self.target {
            None => None,
            Some(t) => Some(Target {
                value: value(&t.value)?,
                relax: t.relax,
            }),
        };
        Some(Instruction::new(self.mnemonic, operands, target))
    }
}
