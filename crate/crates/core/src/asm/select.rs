//! Macro selection by instruction frequency.
//!
//! Every instruction offers its prefixes of 2..=ℓ bytes that stop before
//! any short-form branch byte. Prefixes are grouped in lexicographic order
//! (opcode first, then operand bytes) and a group of `n` instructions
//! sharing a `w`-byte prefix saves `(w - 1)(n - 1) - 1` bytes. Groups are
//! adopted best first; each adoption claims its instructions, and the
//! remaining groups are rescored over unclaimed instructions, so the
//! scores add up exactly when the bodies are applied in adoption order.

use std::collections::BTreeMap;

use super::layout::layout_and_resolve;
use super::stream::{AnnotatedStream, Item, Tok, TokenView};
use super::AsmError;
use crate::compact::{MAX_MACROS, MIN_MACRO_LEN};
use crate::symbol::Symbol;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyChoice {
    pub body: Vec<Item>,
    pub occurrences: usize,
    pub saving: i64,
}

/// Net saving of one table entry of `width` bytes used `count` times.
pub fn frequency_saving(width: usize, count: usize) -> i64 {
    (width as i64 - 1) * (count as i64 - 1) - 1
}

pub fn select_by_instruction_frequency(
    stream: &AnnotatedStream,
    max_macros: usize,
    max_len: usize,
    origin: u16,
) -> Result<Vec<FrequencyChoice>, AsmError> {
    let v = max_macros.min(MAX_MACROS.saturating_sub(stream.macros.len()));
    if v == 0 || max_len < MIN_MACRO_LEN {
        return Ok(Vec::new());
    }
    let layout = layout_and_resolve(stream, origin)?;
    let view = TokenView::new(stream, &layout);
    let toks = &view.toks;

    // Prefixes of each instruction, by token count.
    let mut prefixes: BTreeMap<&[Tok], Vec<usize>> = BTreeMap::new();
    let starts: Vec<usize> = (0..toks.len()).filter(|&i| toks[i].can_start()).collect();
    for (n, &i) in starts.iter().enumerate() {
        let mut width = 0;
        for j in i..toks.len() {
            if j > i && toks[j].can_start() || toks[j].is_barrier() {
                break;
            }
            width += toks[j].width();
            if width > max_len {
                break;
            }
            if width >= MIN_MACRO_LEN {
                prefixes.entry(&toks[i..=j]).or_default().push(n);
            }
        }
    }

    let mut claimed = vec![false; starts.len()];
    let mut chosen = Vec::new();
    while chosen.len() < v {
        let mut best: Option<(i64, usize, &[Tok])> = None;
        for (body, users) in &prefixes {
            let count = users.iter().filter(|&&n| !claimed[n]).count();
            let width: usize = body.iter().map(Symbol::width).sum();
            let saving = frequency_saving(width, count);
            let better = match best {
                None => true,
                Some((s, w, _)) => saving > s || saving == s && width > w,
            };
            if better {
                best = Some((saving, width, body));
            }
        }
        let Some((saving, _, body)) = best.filter(|b| b.0 > 0) else {
            break;
        };
        let users = prefixes.remove(body).expect("chosen from the map");
        let mut occurrences = 0;
        for n in users {
            if !claimed[n] {
                claimed[n] = true;
                occurrences += 1;
            }
        }
        chosen.push(FrequencyChoice {
            body: body.iter().map(|t| view.item_of(t)).collect(),
            occurrences,
            saving,
        });
    }
    Ok(chosen)
}
