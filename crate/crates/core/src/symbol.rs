//! Alphabet abstraction shared by the compactors.
//!
//! The selection algorithms only need equality, a total order for
//! tie-breaking, and the encoded width of each symbol. Raw bytes use the
//! defaults; the assembler plugs in a richer token type whose symbols carry
//! widths (two-byte label references) and barriers (label definitions,
//! short-branch offsets).

use std::fmt;
use std::hash::Hash;

pub trait Symbol: Copy + Eq + Ord + Hash + fmt::Debug {
    /// Encoded size in bytes.
    fn width(&self) -> usize {
        1
    }

    /// Barrier symbols may never appear inside a macro body.
    fn is_barrier(&self) -> bool {
        false
    }

    /// Whether a macro body may begin with this symbol.
    fn can_start(&self) -> bool {
        true
    }
}

impl Symbol for u8 {}
impl Symbol for u16 {}
impl Symbol for char {}

/// A position in a partially compacted string: either an original symbol
/// or a reference to the `n`th macro of the set being built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit<T> {
    Sym(T),
    Macro(u16),
}

impl<T: Symbol> Symbol for Unit<T> {
    fn width(&self) -> usize {
        match self {
            Unit::Sym(s) => s.width(),
            Unit::Macro(_) => 1,
        }
    }

    fn is_barrier(&self) -> bool {
        match self {
            Unit::Sym(s) => s.is_barrier(),
            Unit::Macro(_) => false,
        }
    }

    fn can_start(&self) -> bool {
        match self {
            Unit::Sym(s) => s.can_start(),
            Unit::Macro(_) => true,
        }
    }
}

impl<T> Unit<T> {
    pub fn is_macro(&self) -> bool {
        matches!(self, Unit::Macro(_))
    }

    pub fn symbol(&self) -> Option<&T> {
        match self {
            Unit::Sym(s) => Some(s),
            Unit::Macro(_) => None,
        }
    }
}

/// Total encoded width of a sequence.
pub fn width_of<T: Symbol>(seq: &[T]) -> usize {
    seq.iter().map(Symbol::width).sum()
}

/// Lift a plain sequence into units.
pub fn lift<T: Copy>(seq: &[T]) -> Vec<Unit<T>> {
    seq.iter().copied().map(Unit::Sym).collect()
}

/// Strip units back to symbols; `None` if any macro reference remains.
pub fn lower<T: Copy>(seq: &[Unit<T>]) -> Option<Vec<T>> {
    seq.iter().map(|u| u.symbol().copied()).collect()
}
