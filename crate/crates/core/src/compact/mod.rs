//! Macro selection: choose byte sequences to move into a macro table so
//! that residual code plus table is as short as possible.
//!
//! The objective throughout is the length function
//! `L(B, M) = |B(M)| + ||M||`, the residual string after substitution plus
//! the summed size of all macro bodies.

mod greedy;
mod matching;
mod optimal;

pub use greedy::{
    best_single_macro, build_freq_table, greedy_select, single_macro_objective, FreqTable,
};
pub use matching::{count_occurrences, find_non_overlapping, substitute};
pub use optimal::{
    brute_force_select, enumerate_occurrences, estimate_cost, exact_select, mwis, CostEstimate,
    IndependentChoice, Occurrence, OccurrenceGraph, Partition, BRUTE_MAX_LEN, BRUTE_MAX_MACROS,
    BRUTE_MAX_WIDTH, DEFAULT_BUDGET,
};

use crate::symbol::{lift, width_of, Symbol, Unit};
use thiserror::Error;

/// Opcodes `0x50..=0xFF` are free for macros.
pub const MAX_MACROS: usize = 176;

/// Shortest body that can save anything.
pub const MIN_MACRO_LEN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompactError {
    #[error("empty pattern")]
    EmptyPattern,
    #[error("macro body of {0} bytes is shorter than the minimum of 2")]
    BodyTooShort(usize),
    #[error("maximum macro length must be at least 2, got {0}")]
    MaxLenTooSmall(usize),
    #[error("at most {MAX_MACROS} macros fit the opcode space, requested {0}")]
    TooManyMacros(usize),
    #[error("duplicate macro body at index {0}")]
    DuplicateBody(usize),
    #[error("exact search refused: estimated {estimate} steps exceeds budget of {budget}")]
    BudgetExceeded { estimate: u128, budget: u128 },
    #[error("brute-force oracle limited to width <= {BRUTE_MAX_WIDTH}, length <= {BRUTE_MAX_LEN}, macros <= {BRUTE_MAX_MACROS}")]
    OracleCap,
}

/// An ordered set of macro bodies. The `i`th body is referenced from a
/// residual string as `Unit::Macro(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroSet<T> {
    bodies: Vec<Vec<Unit<T>>>,
}

impl<T> Default for MacroSet<T> {
    fn default() -> Self {
        MacroSet { bodies: Vec::new() }
    }
}

impl<T: Symbol> MacroSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a set of plain (non-embedding) bodies.
    pub fn from_bodies<I, B>(bodies: I) -> Result<Self, CompactError>
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[T]>,
    {
        let mut set = MacroSet::new();
        for b in bodies {
            set.push(lift(b.as_ref()))?;
        }
        Ok(set)
    }

    pub fn push(&mut self, body: Vec<Unit<T>>) -> Result<(), CompactError> {
        if width_of(&body) < MIN_MACRO_LEN {
            return Err(CompactError::BodyTooShort(width_of(&body)));
        }
        if self.bodies.len() == MAX_MACROS {
            return Err(CompactError::TooManyMacros(MAX_MACROS + 1));
        }
        if self.bodies.contains(&body) {
            return Err(CompactError::DuplicateBody(self.bodies.len()));
        }
        self.bodies.push(body);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn bodies(&self) -> &[Vec<Unit<T>>] {
        &self.bodies
    }

    /// `||M||`, the summed width of every body.
    pub fn table_size(&self) -> usize {
        self.bodies.iter().map(|b| width_of(b)).sum()
    }

    /// Apply every macro in order by leftmost-greedy substitution.
    pub fn apply(&self, text: &[T]) -> Vec<Unit<T>> {
        let mut residual = lift(text);
        for (i, body) in self.bodies.iter().enumerate() {
            residual = substitute(&residual, body, Unit::Macro(i as u16));
        }
        residual
    }

    /// Expand a residual string back to the original symbols.
    pub fn expand(&self, residual: &[Unit<T>]) -> Vec<T> {
        let mut out = Vec::new();
        self.expand_into(residual, &mut out, 0);
        out
    }

    fn expand_into(&self, seq: &[Unit<T>], out: &mut Vec<T>, depth: usize) {
        assert!(depth <= self.bodies.len(), "cyclic macro embedding");
        for u in seq {
            match u {
                Unit::Sym(s) => out.push(*s),
                Unit::Macro(i) => self.expand_into(&self.bodies[*i as usize], out, depth + 1),
            }
        }
    }
}

/// Outcome of any selection strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompactionResult<T> {
    pub macros: MacroSet<T>,
    pub residual: Vec<Unit<T>>,
    pub objective: usize,
}

impl<T: Symbol> CompactionResult<T> {
    pub(crate) fn new(macros: MacroSet<T>, residual: Vec<Unit<T>>) -> Self {
        let objective = width_of(&residual) + macros.table_size();
        CompactionResult {
            macros,
            residual,
            objective,
        }
    }

    /// The identity result: no macros, residual equals the input.
    pub fn unchanged(text: &[T]) -> Self {
        Self::new(MacroSet::new(), lift(text))
    }
}

/// `L(B, M) = |B(M)| + ||M||` with macros applied in set order.
pub fn length_function<T: Symbol>(text: &[T], macros: &MacroSet<T>) -> usize {
    width_of(&macros.apply(text)) + macros.table_size()
}
