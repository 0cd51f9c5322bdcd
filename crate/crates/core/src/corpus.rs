//! Seeded synthetic programs with the repetitive texture of compiler output.
//!
//! Programs are built from a handful of idioms (counted loops, stack
//! save/restore, work-area arithmetic, subroutine calls through a pushed
//! return address and `BRI`, `LCW` table reads) over a small per-program
//! vocabulary of registers, work-area addresses and literals. Every program
//! halts well within 10⁵ steps and emits output.
//!
//! Traces never depend on code addresses: return addresses only ever flow
//! into `BRI`, `LCW` reads only the work area, and nothing writes to code.
//! So a program and any macro-compacted image of it produce equal traces.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MIN_INSTRUCTIONS: usize = 50;
pub const MAX_INSTRUCTIONS: usize = 300;

/// Largest instruction count a single idiom adds.
const MAX_IDIOM: usize = 10;

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    out: String,
    count: usize,
    labels: usize,
    work: Vec<u8>,
    literals: Vec<u16>,
    subs: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn emit(&mut self, label: Option<&str>, text: &str) {
        writeln!(self.out, "{:<6}{text}", label.unwrap_or("")).unwrap();
        self.count += 1;
    }

    fn label(&mut self) -> String {
        self.labels += 1;
        format!("L{:04}", self.labels)
    }

    fn work(&mut self) -> u8 {
        *self.work.choose(self.rng).unwrap()
    }

    fn literal(&mut self) -> u16 {
        *self.literals.choose(self.rng).unwrap()
    }

    fn data_reg(&mut self) -> &'static str {
        ["WA", "WB"].choose(self.rng).unwrap()
    }

    /// One instruction touching only WA, WB and the work area.
    fn arith(&mut self) -> String {
        let r = self.data_reg();
        let other = if r == "WA" { "WB" } else { "WA" };
        let a = self.work();
        let lit = self.literal();
        match self.rng.gen_range(0..11) {
            0 => format!("MOV ={lit:04X}, {r}"),
            1 => format!("ADD ={lit:04X}, {r}"),
            2 => format!("SUB {other}, {r}"),
            3 => format!("MOV {r}, @{a:02X}"),
            4 => format!("ADD @{a:02X}, {r}"),
            5 => format!("MOV @{a:02X}, {r}"),
            6 => format!("ICV {r}"),
            7 => format!("DCV {r}"),
            8 => format!("MOV {other}, {r}"),
            9 => format!("ADD {other}, {r}"),
            _ => format!("ZER {r}"),
        }
    }

    fn out(&mut self) {
        let text = match self.rng.gen_range(0..3) {
            0 => "OUT WA".to_string(),
            1 => "OUT WB".to_string(),
            _ => format!("OUT @{:02X}", self.work()),
        };
        self.emit(None, &text);
    }

    fn counted_loop(&mut self) {
        let top = self.label();
        let k = self.rng.gen_range(1..=5);
        self.emit(None, "ZER WC");
        let first = self.arith();
        self.emit(Some(&top), &first);
        for _ in 0..self.rng.gen_range(0..3) {
            let t = self.arith();
            self.emit(None, &t);
        }
        self.emit(None, "ICV WC");
        self.emit(None, &format!("BNE WC, ={k:04X}, {top}"));
        self.out();
    }

    fn save_restore(&mut self) {
        self.emit(None, "MOV WA, -(XS)");
        self.emit(None, "MOV WB, -(XS)");
        for _ in 0..self.rng.gen_range(1..=3) {
            let t = self.arith();
            self.emit(None, &t);
        }
        if self.rng.gen_bool(0.5) {
            self.emit(None, "ADD 2(XS), WA");
        }
        self.out();
        self.emit(None, "MOV (XS)+, WB");
        self.emit(None, "MOV (XS)+, WA");
    }

    fn call(&mut self) {
        if self.subs == 0 {
            return self.straight();
        }
        let ret = self.label();
        let sub = self.rng.gen_range(0..self.subs);
        self.emit(None, &format!("MOV ={ret}, -(XS)"));
        self.emit(None, &format!("BRN S{sub}"));
        writeln!(self.out, "{ret}").unwrap();
    }

    fn table_read(&mut self) {
        let a = self.rng.gen_range(0x10u8..0x70) & !1;
        self.emit(None, &format!("MOV ={a:04X}, XL"));
        self.emit(None, "LCW WA");
        self.emit(None, "LCW WB");
        if self.rng.gen_bool(0.5) {
            self.emit(None, "MOV (XL), WA");
            self.emit(None, "MOV WB, (XL)");
        }
        self.emit(None, "ADD WB, WA");
        self.out();
    }

    fn conditional(&mut self) {
        let skip = self.label();
        let test = if self.rng.gen_bool(0.5) {
            format!("BEQ WA, WB, {skip}")
        } else {
            format!("BLT WA, ={:04X}, {skip}", self.literal())
        };
        self.emit(None, &test);
        let t = self.arith();
        self.emit(None, &t);
        let t = self.arith();
        self.emit(Some(&skip), &t);
        self.out();
    }

    fn straight(&mut self) {
        for _ in 0..self.rng.gen_range(2..=5) {
            let t = self.arith();
            self.emit(None, &t);
        }
        self.out();
    }

    fn idiom(&mut self) {
        match self.rng.gen_range(0..10) {
            0 | 1 => self.counted_loop(),
            2 => self.save_restore(),
            3 | 4 => self.call(),
            5 => self.table_read(),
            6 => self.conditional(),
            _ => self.straight(),
        }
    }

    fn subroutine(&mut self, k: usize) {
        let first = self.arith();
        self.emit(Some(&format!("S{k}")), &first);
        for _ in 0..self.rng.gen_range(1..=4) {
            let t = self.arith();
            self.emit(None, &t);
        }
        self.out();
        self.emit(None, "MOV (XS)+, XR");
        self.emit(None, "BRI XR");
    }
}

/// A program of roughly `target` instructions (never fewer).
pub fn generate_program<R: Rng>(rng: &mut R, target: usize) -> String {
    let work: Vec<u8> = (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(0x10u8..0x70) & !1).collect();
    let literals: Vec<u16> = (0..rng.gen_range(2..=5))
        .map(|_| *[1u16, 2, 3, 4, 7, 0x10, 0x20, 0x7F, 0x100, 0x1234].choose(rng).unwrap())
        .collect();
    let subs = rng.gen_range(0..=3);
    let mut g = Gen {
        rng,
        out: String::new(),
        count: 0,
        labels: 0,
        work,
        literals,
        subs,
    };
    // subroutines take 5..=8 instructions each
    let body_target = target.saturating_sub(1 + 5 * subs).max(1);
    g.emit(Some("START"), "ZER WA");
    g.emit(None, "ZER WB");
    while g.count < body_target {
        g.idiom();
    }
    g.emit(None, "HLT");
    for k in 0..subs {
        g.subroutine(k);
    }
    g.out
}

/// `count` programs of 50..=300 instructions from one seed.
pub fn corpus(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let target = rng.gen_range(MIN_INSTRUCTIONS..=MAX_INSTRUCTIONS - MAX_IDIOM - 3 * 3);
            generate_program(&mut rng, target)
        })
        .collect()
}

/// One long program whose instruction count is at least `instructions`.
pub fn large_program(seed: u64, instructions: usize) -> String {
    generate_program(&mut ChaCha8Rng::seed_from_u64(seed), instructions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{assemble_source, parse_source};
    use crate::vm::{run_image, Outcome};

    #[test]
    fn programs_assemble_halt_and_stay_in_bounds() {
        for src in corpus(7, 40) {
            let n = parse_source(&src).unwrap().instruction_count();
            assert!((MIN_INSTRUCTIONS..=MAX_INSTRUCTIONS).contains(&n), "{n} instructions");
            let img = assemble_source(&src).unwrap().image;
            let r = run_image(&img, 100_000).unwrap();
            assert_eq!(r.outcome, Outcome::Halted, "{src}");
            assert!(!r.trace.is_empty());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(corpus(3, 5), corpus(3, 5));
        assert_ne!(corpus(3, 5), corpus(4, 5));
    }

    #[test]
    fn large_program_is_large() {
        let src = large_program(1, 4000);
        let img = assemble_source(&src).unwrap().image;
        assert!(img.code.len() >= 8000);
        assert_eq!(run_image(&img, 1_000_000).unwrap().outcome, Outcome::Halted);
    }
}
