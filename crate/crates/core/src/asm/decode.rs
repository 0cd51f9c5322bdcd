//! Instruction decoding over a byte source that expands macro opcodes.
//!
//! Shared by the emulator and the disassembler. A byte read in opcode
//! position that is `>= 0x50` names a macro: its body is read next, as if it
//! stood in place of the macro byte, and reading returns to the main
//! stream once the body is exhausted. Bodies are never nested.

use thiserror::Error;

use super::encode::{decode_literal, decode_short_branch};
use super::isa::{Access, Instruction, Mnemonic, Operand, Reg, Target, Value, BRANCH_HEADER};
use super::MACRO_BASE;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("undefined opcode {opcode:#04x} at {at:#06x}")]
    UnknownOpcode { opcode: u8, at: u16 },
    #[error("macro opcode {0:#04x} has no table entry")]
    UndefinedMacro(u8),
    #[error("macro opcode {0:#04x} encountered inside a macro body")]
    NestedMacro(u8),
    #[error("empty body for macro {0:#04x}")]
    EmptyMacro(u8),
    #[error("header {header:#04x} does not fit {mnemonic}")]
    BadHeader { mnemonic: Mnemonic, header: u8 },
    #[error("one-byte branch offset inside a macro body")]
    ShortBranchInMacro,
    #[error("short branch at {0:#06x} leaves the address space")]
    BranchOutOfRange(u16),
    #[error("read past the end of code at {0:#06x}")]
    OutOfBounds(u32),
}

/// Where bytes come from: the main stream by address, macro bodies by opcode.
pub trait Source {
    fn main(&self, addr: u32) -> Option<u8>;
    fn body(&self, opcode: u8) -> Option<&[u8]>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub opcode: u8,
    pub offset: usize,
    /// Address of the macro byte in the main stream.
    pub at: u16,
}

/// Read position: the next main-stream address plus an optional active
/// macro expansion. While an expansion is active `pc` already points past
/// the macro byte, which is where reading resumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cursor {
    pub pc: u32,
    pub expansion: Option<Expansion>,
}

impl Cursor {
    pub fn new(pc: u16) -> Self {
        Cursor {
            pc: u32::from(pc),
            expansion: None,
        }
    }

    /// Continue at `target`, abandoning any expansion.
    pub fn jump(&mut self, target: u16) {
        self.pc = u32::from(target);
        self.expansion = None;
    }

    fn next_body_byte<S: Source>(&mut self, s: &S) -> Option<u8> {
        let e = self.expansion.as_mut()?;
        let body = s.body(e.opcode).expect("active expansion has a body");
        let b = body[e.offset];
        e.offset += 1;
        if e.offset == body.len() {
            self.expansion = None;
        }
        Some(b)
    }

    fn next_main_byte<S: Source>(&mut self, s: &S) -> Result<(u8, u16), DecodeError> {
        let at = self.pc;
        let b = s.main(at).ok_or(DecodeError::OutOfBounds(at))?;
        self.pc += 1;
        Ok((b, at as u16))
    }

    /// Byte in opcode position. Returns the byte and, when a macro was
    /// entered to produce it, the macro opcode.
    pub fn opcode<S: Source>(&mut self, s: &S) -> Result<(u8, Option<u8>), DecodeError> {
        if let Some(b) = self.next_body_byte(s) {
            return if b >= MACRO_BASE {
                Err(DecodeError::NestedMacro(b))
            } else {
                Ok((b, None))
            };
        }
        let (b, at) = self.next_main_byte(s)?;
        if b < MACRO_BASE {
            return Ok((b, None));
        }
        let body = s.body(b).ok_or(DecodeError::UndefinedMacro(b))?;
        if body.is_empty() {
            return Err(DecodeError::EmptyMacro(b));
        }
        self.expansion = Some(Expansion {
            opcode: b,
            offset: 0,
            at,
        });
        let first = self.next_body_byte(s).expect("expansion just started");
        if first >= MACRO_BASE {
            return Err(DecodeError::NestedMacro(first));
        }
        Ok((first, Some(b)))
    }

    /// Byte in operand position, with its main-stream address when it did
    /// not come from a macro body.
    pub fn operand<S: Source>(&mut self, s: &S) -> Result<(u8, Option<u16>), DecodeError> {
        if let Some(b) = self.next_body_byte(s) {
            return Ok((b, None));
        }
        let (b, at) = self.next_main_byte(s)?;
        Ok((b, Some(at)))
    }
}

/// A decoded instruction; all values are constants and the target is an
/// absolute address (`relax` records whether it was in one-byte form).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub insn: Instruction,
    /// Set when this instruction's opcode came from entering a macro.
    pub entered_macro: Option<u8>,
    /// Set when decoding started inside an already active expansion.
    pub continued_macro: bool,
}

fn operand<S: Source>(mode: u8, cur: &mut Cursor, s: &S) -> Result<Operand, DecodeError> {
    let mut byte = || cur.operand(s).map(|(b, _)| b);
    Ok(match mode {
        0..=5 => Operand::Reg(Reg::ALL[mode as usize]),
        0x6 => Operand::Indirect(Reg::Xl),
        0x7 => Operand::Indirect(Reg::Xr),
        0x8 => Operand::Pop,
        0x9 => Operand::Push,
        0xA => Operand::Work(byte()?),
        0xB => {
            let first = byte()?;
            Operand::Literal(Value::Const(decode_literal(first, &mut byte)?))
        }
        0xC => {
            let hi = byte()?;
            let lo = byte()?;
            Operand::Direct(Value::Const(u16::from_be_bytes([hi, lo])))
        }
        _ => {
            let reg = [Reg::Xl, Reg::Xr, Reg::Xs][usize::from(mode - 0xD)];
            let first = byte()?;
            Operand::Offset(reg, decode_literal(first, &mut byte)?)
        }
    })
}

fn target<S: Source>(cur: &mut Cursor, s: &S) -> Result<Target, DecodeError> {
    let (first, at) = cur.operand(s)?;
    if first >= 0x80 {
        let at = at.ok_or(DecodeError::ShortBranchInMacro)?;
        let addr = decode_short_branch(at, first).ok_or(DecodeError::BranchOutOfRange(at))?;
        return Ok(Target {
            value: Value::Const(addr),
            relax: true,
        });
    }
    let (lo, _) = cur.operand(s)?;
    Ok(Target {
        value: Value::Const(u16::from_be_bytes([first, lo])),
        relax: false,
    })
}

/// Decode one instruction at the cursor.
pub fn decode<S: Source>(cur: &mut Cursor, s: &S) -> Result<Decoded, DecodeError> {
    let continued_macro = cur.expansion.is_some();
    let start = cur.pc;
    let (op, entered_macro) = cur.opcode(s)?;
    let mnemonic = Mnemonic::from_opcode(op).ok_or(DecodeError::UnknownOpcode {
        opcode: op,
        at: start as u16,
    })?;
    let sig = mnemonic.signature();
    let mut operands = Vec::with_capacity(sig.operands.len());
    if sig.has_header() {
        let (header, _) = cur.operand(s)?;
        let fits = match sig.operands.len() {
            0 => header == BRANCH_HEADER,
            1 => header >> 4 == 0,
            _ => true,
        };
        if !fits {
            return Err(DecodeError::BadHeader { mnemonic, header });
        }
        for k in 0..sig.operands.len() {
            let mode = if k == 0 { header & 0xF } else { header >> 4 };
            if mode == 0xB && sig.operands[k] == Access::Write {
                return Err(DecodeError::BadHeader { mnemonic, header });
            }
            operands.push(operand(mode, cur, s)?);
        }
    }
    let target = if sig.target { Some(target(cur, s)?) } else { None };
    Ok(Decoded {
        insn: Instruction::new(mnemonic, operands, target),
        entered_macro,
        continued_macro,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Mem {
        origin: u32,
        code: Vec<u8>,
        table: Vec<(u8, Vec<u8>)>,
    }

    impl Source for Mem {
        fn main(&self, addr: u32) -> Option<u8> {
            addr.checked_sub(self.origin).and_then(|i| self.code.get(i as usize).copied())
        }
        fn body(&self, opcode: u8) -> Option<&[u8]> {
            self.table.iter().find(|(o, _)| *o == opcode).map(|(_, b)| b.as_slice())
        }
    }

    fn mem(code: &[u8], table: &[(u8, &[u8])]) -> Mem {
        Mem {
            origin: 0x100,
            code: code.to_vec(),
            table: table.iter().map(|(o, b)| (*o, b.to_vec())).collect(),
        }
    }

    #[test]
    fn decodes_figure_bytes() {
        let m = mem(&[0x32, 0x94, 0x09, 0xB0, 0x7F, 0xFF, 0x01, 0x23], &[]);
        let mut c = Cursor::new(0x100);
        let d = decode(&mut c, &m).unwrap();
        assert_eq!(d.insn.operands, vec![Operand::Reg(Reg::Xr), Operand::Push]);
        let d = decode(&mut c, &m).unwrap();
        assert_eq!(d.insn.mnemonic, Mnemonic::Bne);
        assert_eq!(d.insn.operands[1], Operand::Literal(Value::Const(0x7FFF)));
        assert_eq!(d.insn.target.unwrap().value, Value::Const(0x0123));
        assert_eq!(c.pc, 0x108);
    }

    #[test]
    fn macro_body_then_main_stream() {
        // macro 50 = "32 9B" (MOV =..., -(XS) prefix); literal follows in main stream
        let m = mem(&[0x50, 0x01, 0x23, 0x00], &[(0x50, &[0x32, 0x9B])]);
        let mut c = Cursor::new(0x100);
        let d = decode(&mut c, &m).unwrap();
        assert_eq!(d.entered_macro, Some(0x50));
        assert_eq!(d.insn.operands, vec![Operand::Literal(Value::Const(0x123)), Operand::Push]);
        assert_eq!(c.expansion, None);
        let d = decode(&mut c, &m).unwrap();
        assert_eq!(d.insn.mnemonic, Mnemonic::Hlt);
    }

    #[test]
    fn multi_instruction_macro() {
        let m = mem(&[0x50, 0x00], &[(0x50, &[0x1C, 0x00, 0x40, 0x00])]);
        let mut c = Cursor::new(0x100);
        assert_eq!(decode(&mut c, &m).unwrap().insn.mnemonic, Mnemonic::Icv);
        let d = decode(&mut c, &m).unwrap();
        assert!(d.continued_macro);
        assert_eq!(d.insn.mnemonic, Mnemonic::Out);
        assert_eq!(decode(&mut c, &m).unwrap().insn.mnemonic, Mnemonic::Hlt);
    }

    #[test]
    fn faults() {
        let m = mem(&[0x50], &[(0x50, &[0x51, 0x00])]);
        assert_eq!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::NestedMacro(0x51)));
        let m = mem(&[0x60], &[]);
        assert_eq!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::UndefinedMacro(0x60)));
        let m = mem(&[0x4F], &[]);
        assert!(matches!(
            decode(&mut Cursor::new(0x100), &m),
            Err(DecodeError::UnknownOpcode { opcode: 0x4F, .. })
        ));
        let m = mem(&[0x32], &[]);
        assert_eq!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::OutOfBounds(0x101)));
        let m = mem(&[0x50], &[(0x50, &[0x03, 0x0C, 0xC0])]);
        assert_eq!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::ShortBranchInMacro));
        let m = mem(&[0x44, 0x0B, 0x81], &[]);
        assert!(matches!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::BadHeader { .. })));
        let m = mem(&[0x44, 0x10], &[]);
        assert!(matches!(decode(&mut Cursor::new(0x100), &m), Err(DecodeError::BadHeader { .. })));
    }
}
