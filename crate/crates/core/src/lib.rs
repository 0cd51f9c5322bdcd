//! Compact interpretive bytecode toolchain.
//!
//! * [`compact`] selects macro sets that minimise residual code plus macro
//!   table, greedily or exactly, over any [`Symbol`] alphabet.
//! * [`asm`] assembles mnemonic or hex-item sources into object images and
//!   applies macro sets to the symbolic item stream before resolution.
//! * [`vm`] executes images, expanding macro opcodes from the table.
//! * [`toolchain`] ties the pieces together (compaction pipeline, raw
//!   packing, equivalence checking, statistics).

pub mod asm;
pub mod compact;
pub mod corpus;
pub mod symbol;
pub mod toolchain;
pub mod vm;

pub use compact::{CompactError, CompactionResult, MacroSet};
pub use symbol::{Symbol, Unit};

/// A finite string of bytes, the raw compaction substrate.
pub type ByteString = Vec<u8>;
pub type ByteMacroSet = MacroSet<u8>;
pub type ByteCompaction = CompactionResult<u8>;
