//! Linear-sweep disassembly of object images.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::decode::{decode, Cursor, DecodeError, Source};
use super::isa::{Instruction, Value};
use super::layout::SymbolTable;
use super::object::ObjectImage;
use super::parse::format_symbolic;

impl Source for ObjectImage {
    fn main(&self, addr: u32) -> Option<u8> {
        let i = addr.checked_sub(u32::from(self.origin))?;
        self.code.get(i as usize).copied()
    }

    fn body(&self, opcode: u8) -> Option<&[u8]> {
        self.macro_body(opcode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    /// Address of the first main-stream byte; for an instruction that
    /// continues a macro body, the address of the macro byte.
    pub addr: u16,
    /// Main-stream bytes consumed by this instruction.
    pub bytes: Vec<u8>,
    pub insn: Instruction,
    /// Macro entered to fetch this instruction's opcode.
    pub entered: Option<u8>,
    /// Decoding began inside an expansion started by an earlier line.
    pub continued: bool,
}

impl Line {
    pub fn from_macro(&self) -> bool {
        self.entered.is_some() || self.continued
    }
}

/// Decode every instruction in the image's code, following macro bodies.
pub fn decode_image(image: &ObjectImage) -> Result<Vec<Line>, DecodeError> {
    let end = u32::from(image.origin) + image.code.len() as u32;
    let mut cur = Cursor::new(image.origin);
    let mut lines = Vec::new();
    while cur.pc < end || cur.expansion.is_some() {
        let start = cur.pc;
        let addr = cur.expansion.map_or(start as u16, |e| e.at);
        let d = decode(&mut cur, image)?;
        let lo = (start - u32::from(image.origin)) as usize;
        let hi = (cur.pc - u32::from(image.origin)) as usize;
        lines.push(Line {
            addr,
            bytes: image.code[lo..hi].to_vec(),
            insn: d.insn,
            entered: d.entered_macro,
            continued: d.continued_macro,
        });
    }
    Ok(lines)
}

fn with_labels(insn: &Instruction, names: &BTreeMap<u16, &str>) -> Instruction {
    let mut out = insn.clone();
    if let Some(t) = &mut out.target {
        if let Value::Const(a) = t.value {
            if let Some(name) = names.get(&a) {
                t.value = Value::Label(name.to_string());
            }
        }
    }
    out
}

/// Listing with address, bytes and symbolic instruction per line. Lines
/// that use a macro carry `***`; a macro-table dump follows the code.
pub fn disassemble(image: &ObjectImage, symbols: Option<&SymbolTable>) -> Result<String, DecodeError> {
    let mut names: BTreeMap<u16, &str> = BTreeMap::new();
    for (name, &addr) in symbols.into_iter().flatten() {
        names.entry(addr).or_insert(name.as_str());
    }
    let mut out = String::new();
    for line in decode_image(image)? {
        let label = if line.continued { "" } else { names.get(&line.addr).copied().unwrap_or("") };
        let bytes: Vec<String> = line.bytes.iter().map(|b| format!("{b:02X}")).collect();
        let mark = if line.from_macro() { "***" } else { "" };
        let text = format_symbolic(&with_labels(&line.insn, &names));
        let row = format!("{label:<6}{:04X}  {:<15} {mark:<3}  {text}", line.addr, bytes.join(" "));
        writeln!(out, "{}", row.trim_end()).unwrap();
    }
    if !image.macros.is_empty() {
        writeln!(out, "\nMACRO TABLE").unwrap();
        for m in &image.macros {
            let body: Vec<String> = m.body.iter().map(|b| format!("{b:02X}")).collect();
            writeln!(out, "{:02X}  {:02X}  {}", m.opcode, m.body.len(), body.join(" ")).unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::object::MacroEntry;
    use crate::asm::{assemble, parse::parse_source, DEFAULT_ORIGIN};

    const SRC: &str = "\
START ZER WA
LOOP  ICV WA
      BNE WA, =3, LOOP
      OUT WA
      HLT
";

    #[test]
    fn round_trips_assembled_instructions() {
        let program = parse_source(SRC).unwrap();
        let layout = assemble(&program, DEFAULT_ORIGIN).unwrap();
        let lines = decode_image(&layout.image).unwrap();
        let expected: Vec<Instruction> = program
            .instructions()
            .map(|i| i.resolve(|l| layout.symbols.get(l).copied()).unwrap())
            .collect();
        assert_eq!(lines.len(), expected.len());
        for (line, want) in lines.iter().zip(&expected) {
            let mut got = line.insn.clone();
            if let (Some(g), Some(w)) = (&mut got.target, &want.target) {
                g.relax = w.relax;
            }
            assert_eq!(&got, want);
        }
    }

    #[test]
    fn listing_uses_labels_and_marks_macros() {
        let program = parse_source(SRC).unwrap();
        let layout = assemble(&program, DEFAULT_ORIGIN).unwrap();
        let text = disassemble(&layout.image, Some(&layout.symbols)).unwrap();
        assert!(text.starts_with("START 0100  44 00"));
        assert!(text.contains("BNE WA, =0003, LOOP"));
        let bare = disassemble(&layout.image, None).unwrap();
        assert!(bare.contains("BNE WA, =0003, 0102"));

        let img = ObjectImage {
            entry: 0x100,
            origin: 0x100,
            code: vec![0x50, 0x00],
            macros: vec![MacroEntry {
                opcode: 0x50,
                body: vec![0x1C, 0x00, 0x40, 0x00],
            }],
            raw: false,
        };
        let text = disassemble(&img, None).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "      0100  50              ***  ICV WA");
        assert_eq!(rows[1], "      0100                  ***  OUT WA");
        assert_eq!(rows[2], "      0101  00                   HLT");
        assert!(text.contains("MACRO TABLE\n50  04  1C 00 40 00"));
    }

    #[test]
    fn empty_and_bad_images() {
        let img = ObjectImage {
            entry: 0x100,
            origin: 0x100,
            code: vec![],
            macros: vec![],
            raw: false,
        };
        assert_eq!(disassemble(&img, None).unwrap(), "");
        let img = ObjectImage {
            code: vec![0x10, 0x0B],
            ..img
        };
        assert!(matches!(disassemble(&img, None), Err(DecodeError::OutOfBounds(_))));
    }
}
