//! Address assignment, branch relaxation and final byte emission.

use std::collections::BTreeMap;

use super::encode::encode_short_branch;
use super::object::{MacroEntry, ObjectImage};
use super::stream::{AnnotatedStream, Item};
use super::{AsmError, ADDRESS_LIMIT, MACRO_BASE};

pub type SymbolTable = BTreeMap<String, u16>;

#[derive(Clone, Debug)]
pub struct Layout {
    pub image: ObjectImage,
    pub symbols: SymbolTable,
    /// Start address of every item.
    pub addresses: Vec<u16>,
    /// Which relaxable references ended up in one-byte form.
    pub relaxed: Vec<bool>,
    /// Address-assignment passes until the fixpoint.
    pub passes: usize,
}

/// Per-item addresses, label addresses and the end address.
type Assignment<'a> = (Vec<u32>, BTreeMap<&'a str, u32>, u32);

fn assign<'a>(
    items: &'a [Item],
    relaxed: &[bool],
    origin: u16,
) -> Result<Assignment<'a>, AsmError> {
    let mut addr = u32::from(origin);
    let mut addrs = Vec::with_capacity(items.len());
    let mut symbols = BTreeMap::new();
    for (k, item) in items.iter().enumerate() {
        addrs.push(addr);
        addr += match item {
            Item::Byte { .. } | Item::Macro(_) => 1,
            Item::Ref { .. } => {
                if relaxed[k] {
                    1
                } else {
                    2
                }
            }
            Item::Def(l) => {
                symbols.insert(l.as_str(), addr);
                0
            }
        };
    }
    if addr > 0x1_0000 {
        return Err(AsmError::CodeOverflow(addr));
    }
    Ok((addrs, symbols, addr))
}

fn lookup(symbols: &BTreeMap<&str, u32>, label: &str) -> Result<u16, AsmError> {
    symbols
        .get(label)
        .map(|&a| a as u16)
        .ok_or_else(|| AsmError::UndefinedSymbol(label.to_string()))
}

/// Lay out `stream` from `origin`, shortening relaxable branch references
/// whenever their target is in short range, until nothing changes.
///
/// Items only ever shrink, so distances only shrink and every reference
/// relaxed in one pass stays in range in the next.
pub fn layout_and_resolve(stream: &AnnotatedStream, origin: u16) -> Result<Layout, AsmError> {
    let items = &stream.items;
    let mut relaxed = vec![false; items.len()];
    let guard = items.len() + 1;
    let mut passes = 0;
    let (addrs, symbols) = loop {
        passes += 1;
        if passes > guard {
            return Err(AsmError::RelaxationDiverged(passes));
        }
        let (addrs, symbols, _) = assign(items, &relaxed, origin)?;
        let mut changed = false;
        for (k, item) in items.iter().enumerate() {
            if let Item::Ref { label, relax: true } = item {
                if relaxed[k] {
                    continue;
                }
                let target = lookup(&symbols, label)?;
                if encode_short_branch(addrs[k] as u16, target).is_some() {
                    relaxed[k] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break (addrs, symbols);
        }
    };

    for (label, &addr) in &symbols {
        if addr >= ADDRESS_LIMIT {
            return Err(AsmError::AddressRange {
                label: label.to_string(),
                addr,
            });
        }
    }

    let mut code = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        match item {
            Item::Byte { value, .. } => code.push(*value),
            Item::Macro(op) => {
                let idx = op.checked_sub(MACRO_BASE).map(usize::from);
                if idx.is_none_or(|i| i >= stream.macros.len()) {
                    return Err(AsmError::UndefinedMacro(*op));
                }
                code.push(*op);
            }
            Item::Ref { label, .. } => {
                let target = lookup(&symbols, label)?;
                if relaxed[k] {
                    let b = encode_short_branch(addrs[k] as u16, target)
                        .ok_or(AsmError::RelaxationDiverged(passes))?;
                    code.push(b);
                } else {
                    code.extend(target.to_be_bytes());
                }
            }
            Item::Def(_) => {}
        }
    }

    let mut macros = Vec::with_capacity(stream.macros.len());
    for (i, body) in stream.macros.iter().enumerate() {
        let mut bytes = Vec::new();
        for item in body {
            match item {
                Item::Byte { value, .. } => bytes.push(*value),
                Item::Ref { label, .. } => bytes.extend(lookup(&symbols, label)?.to_be_bytes()),
                Item::Macro(_) => return Err(AsmError::EmbeddedMacro(i)),
                Item::Def(_) => return Err(AsmError::InvalidBody(i)),
            }
        }
        macros.push(MacroEntry {
            opcode: MACRO_BASE + i as u8,
            body: bytes,
        });
    }

    Ok(Layout {
        image: ObjectImage {
            entry: origin,
            origin,
            code,
            macros,
            raw: false,
        },
        symbols: symbols.into_iter().map(|(k, v)| (k.to_string(), v as u16)).collect(),
        addresses: addrs.into_iter().map(|a| a as u16).collect(),
        relaxed,
        passes,
    })
}
