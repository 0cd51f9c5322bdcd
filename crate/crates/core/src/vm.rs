//! Emulator for object images.
//!
//! Six 16-bit registers, 64 KiB of byte memory holding big-endian words,
//! and a descending stack in `0x8000..0xFF00`. Macro opcodes are expanded
//! from the table one level deep through the shared [`Cursor`]; a step
//! executes exactly one instruction wherever its bytes come from, so step
//! counts agree between an image and its macro-free counterpart.

use thiserror::Error;

use crate::asm::{decode, Cursor, DecodeError, Instruction, Mnemonic, ObjectError, ObjectImage, Operand, Reg, Source, Value};
use crate::asm::MACRO_BASE;

pub const MEMORY_SIZE: usize = 0x1_0000;
/// Code may not be loaded below this address; the work area lives there.
pub const WORK_AREA_END: u16 = 0x0100;
pub const STACK_TOP: u16 = 0xFF00;
pub const STACK_LIMIT: u16 = 0x8000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("code origin {0:#06x} overlaps the work area")]
    WorkArea(u16),
    #[error("code ends at {0:#x}, beyond memory")]
    TooLarge(usize),
    #[error(transparent)]
    Object(#[from] ObjectError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Fault {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("stack overflow: push below {STACK_LIMIT:#06x} (XS={0:#06x})")]
    StackOverflow(u16),
    #[error("stack underflow: pop above {STACK_TOP:#06x} (XS={0:#06x})")]
    StackUnderflow(u16),
    #[error("word access at {0:#06x} runs past the end of memory")]
    Memory(u16),
    #[error("machine already halted")]
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepEvent {
    Executed,
    Output(u16),
    Halted,
    Fault(Fault),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Halted,
    OutOfFuel,
    Fault(Fault),
}

impl Outcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Halted => "halted",
            Outcome::OutOfFuel => "out-of-fuel",
            Outcome::Fault(_) => "fault",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub trace: Vec<u16>,
    pub steps: u64,
}

struct Memory {
    bytes: Vec<u8>,
    /// Indexed by `opcode - 0x50`.
    table: Vec<Vec<u8>>,
}

impl Source for Memory {
    fn main(&self, addr: u32) -> Option<u8> {
        self.bytes.get(addr as usize).copied()
    }

    fn body(&self, opcode: u8) -> Option<&[u8]> {
        let i = opcode.checked_sub(MACRO_BASE)?;
        self.table.get(usize::from(i)).map(Vec::as_slice)
    }
}

impl Memory {
    fn word(&self, addr: u16) -> Result<u16, Fault> {
        let a = usize::from(addr);
        match self.bytes.get(a..a + 2) {
            Some(b) => Ok(u16::from_be_bytes([b[0], b[1]])),
            None => Err(Fault::Memory(addr)),
        }
    }

    fn set_word(&mut self, addr: u16, v: u16) -> Result<(), Fault> {
        let a = usize::from(addr);
        match self.bytes.get_mut(a..a + 2) {
            Some(b) => {
                b.copy_from_slice(&v.to_be_bytes());
                Ok(())
            }
            None => Err(Fault::Memory(addr)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    Reg(usize),
    Mem(u16),
    Imm(u16),
}

fn constant(v: &Value) -> u16 {
    match v {
        Value::Const(c) => *c,
        Value::Label(_) => unreachable!("decoded instructions carry addresses"),
    }
}

pub struct VmState {
    regs: [u16; 6],
    cursor: Cursor,
    mem: Memory,
    trace: Vec<u16>,
    steps: u64,
    halted: bool,
    fault: Option<Fault>,
}

impl VmState {
    /// Copy the code to its origin, install the macro table, and point
    /// PC at the entry with XS at the stack top.
    pub fn load(image: &ObjectImage) -> Result<VmState, LoadError> {
        image.validate_executable()?;
        if image.origin < WORK_AREA_END {
            return Err(LoadError::WorkArea(image.origin));
        }
        let start = usize::from(image.origin);
        let end = start + image.code.len();
        if end > MEMORY_SIZE {
            return Err(LoadError::TooLarge(end));
        }
        let mut bytes = vec![0u8; MEMORY_SIZE];
        bytes[start..end].copy_from_slice(&image.code);
        let mut regs = [0u16; 6];
        regs[Reg::Xs.index()] = STACK_TOP;
        Ok(VmState {
            regs,
            cursor: Cursor::new(image.entry),
            mem: Memory {
                bytes,
                table: image.macros.iter().map(|m| m.body.clone()).collect(),
            },
            trace: Vec::new(),
            steps: 0,
            halted: false,
            fault: None,
        })
    }

    pub fn reg(&self, r: Reg) -> u16 {
        self.regs[r.index()]
    }

    pub fn set_reg(&mut self, r: Reg, v: u16) {
        self.regs[r.index()] = v;
    }

    pub fn pc(&self) -> u32 {
        self.cursor.pc
    }

    pub fn macro_active(&self) -> bool {
        self.cursor.expansion.is_some()
    }

    pub fn macro_count(&self) -> usize {
        self.mem.table.len()
    }

    pub fn word(&self, addr: u16) -> Option<u16> {
        self.mem.word(addr).ok()
    }

    pub fn trace(&self) -> &[u16] {
        &self.trace
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    fn xs(&mut self) -> &mut u16 {
        &mut self.regs[Reg::Xs.index()]
    }

    /// Where an operand lives. Pushes and pops adjust XS here, once.
    fn locate(&mut self, op: &Operand) -> Result<Loc, Fault> {
        Ok(match op {
            Operand::Reg(r) => Loc::Reg(r.index()),
            Operand::Indirect(r) => Loc::Mem(self.reg(*r)),
            Operand::Pop => {
                let xs = *self.xs();
                if xs > STACK_TOP - 2 {
                    return Err(Fault::StackUnderflow(xs));
                }
                *self.xs() = xs + 2;
                Loc::Mem(xs)
            }
            Operand::Push => {
                let xs = *self.xs();
                if !(STACK_LIMIT + 2..=STACK_TOP).contains(&xs) {
                    return Err(Fault::StackOverflow(xs));
                }
                *self.xs() = xs - 2;
                Loc::Mem(xs - 2)
            }
            Operand::Work(a) => Loc::Mem(u16::from(*a)),
            Operand::Literal(v) => Loc::Imm(constant(v)),
            Operand::Direct(v) => Loc::Mem(constant(v)),
            Operand::Offset(r, off) => Loc::Mem(self.reg(*r).wrapping_add(*off)),
        })
    }

    fn read(&self, loc: Loc) -> Result<u16, Fault> {
        match loc {
            Loc::Reg(i) => Ok(self.regs[i]),
            Loc::Mem(a) => self.mem.word(a),
            Loc::Imm(v) => Ok(v),
        }
    }

    fn write(&mut self, loc: Loc, v: u16) -> Result<(), Fault> {
        match loc {
            Loc::Reg(i) => {
                self.regs[i] = v;
                Ok(())
            }
            Loc::Mem(a) => self.mem.set_word(a, v),
            Loc::Imm(_) => unreachable!("decode rejects literal destinations"),
        }
    }

    fn modify(&mut self, op: &Operand, f: impl FnOnce(u16) -> u16) -> Result<(), Fault> {
        let loc = self.locate(op)?;
        let v = self.read(loc)?;
        self.write(loc, f(v))
    }

    fn fetch_value(&mut self, op: &Operand) -> Result<u16, Fault> {
        let loc = self.locate(op)?;
        self.read(loc)
    }

    fn execute(&mut self, insn: &Instruction) -> Result<StepEvent, Fault> {
        let ops = &insn.operands;
        let target = insn.target.as_ref().map(|t| constant(&t.value));
        match insn.mnemonic {
            Mnemonic::Hlt => {
                self.halted = true;
                return Ok(StepEvent::Halted);
            }
            Mnemonic::Nop => {}
            Mnemonic::Brn => self.cursor.jump(target.expect("BRN has a target")),
            Mnemonic::Beq | Mnemonic::Bne | Mnemonic::Blt => {
                let a = self.fetch_value(&ops[0])?;
                let b = self.fetch_value(&ops[1])?;
                let taken = match insn.mnemonic {
                    Mnemonic::Beq => a == b,
                    Mnemonic::Bne => a != b,
                    _ => a < b,
                };
                if taken {
                    self.cursor.jump(target.expect("conditional branch has a target"));
                }
            }
            Mnemonic::Bri => {
                let to = self.fetch_value(&ops[0])?;
                self.cursor.jump(to);
            }
            Mnemonic::Add | Mnemonic::Sub => {
                let src = self.fetch_value(&ops[0])?;
                let add = insn.mnemonic == Mnemonic::Add;
                self.modify(&ops[1], |d| if add { d.wrapping_add(src) } else { d.wrapping_sub(src) })?;
            }
            Mnemonic::Icv => self.modify(&ops[0], |d| d.wrapping_add(1))?,
            Mnemonic::Dcv => self.modify(&ops[0], |d| d.wrapping_sub(1))?,
            Mnemonic::Zer => {
                let loc = self.locate(&ops[0])?;
                self.write(loc, 0)?;
            }
            Mnemonic::Mov => {
                let v = self.fetch_value(&ops[0])?;
                let loc = self.locate(&ops[1])?;
                self.write(loc, v)?;
            }
            Mnemonic::Lcw => {
                let loc = self.locate(&ops[0])?;
                let xl = self.reg(Reg::Xl);
                let v = self.mem.word(xl)?;
                self.set_reg(Reg::Xl, xl.wrapping_add(2));
                self.write(loc, v)?;
            }
            Mnemonic::Out => {
                let v = self.fetch_value(&ops[0])?;
                self.trace.push(v);
                return Ok(StepEvent::Output(v));
            }
        }
        Ok(StepEvent::Executed)
    }

    /// Execute one instruction. Faults and halts are terminal.
    pub fn step(&mut self) -> StepEvent {
        if let Some(f) = &self.fault {
            return StepEvent::Fault(f.clone());
        }
        if self.halted {
            return StepEvent::Fault(Fault::Halted);
        }
        let result = decode(&mut self.cursor, &self.mem)
            .map_err(Fault::from)
            .and_then(|d| self.execute(&d.insn));
        self.steps += 1;
        match result {
            Ok(ev) => ev,
            Err(f) => {
                self.fault = Some(f.clone());
                StepEvent::Fault(f)
            }
        }
    }

    /// Step until halt, fault, or `fuel` instructions have run.
    pub fn run(&mut self, fuel: u64) -> RunResult {
        let mut outcome = Outcome::OutOfFuel;
        for _ in 0..fuel {
            match self.step() {
                StepEvent::Halted => {
                    outcome = Outcome::Halted;
                    break;
                }
                StepEvent::Fault(f) => {
                    outcome = Outcome::Fault(f);
                    break;
                }
                StepEvent::Executed | StepEvent::Output(_) => {}
            }
        }
        RunResult {
            outcome,
            trace: self.trace.clone(),
            steps: self.steps,
        }
    }
}

/// Load and run in one go.
pub fn run_image(image: &ObjectImage, fuel: u64) -> Result<RunResult, LoadError> {
    Ok(VmState::load(image)?.run(fuel))
}
