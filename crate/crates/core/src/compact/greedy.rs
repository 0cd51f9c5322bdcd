//! Single-macro search and its iterated (greedy) form.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use super::{substitute, CompactError, CompactionResult, MacroSet, MAX_MACROS, MIN_MACRO_LEN};
use crate::symbol::{lift, width_of, Symbol, Unit};

/// Non-overlapping occurrence counts of every candidate subsequence.
#[derive(Clone, Debug)]
pub struct FreqTable<T> {
    counts: HashMap<Vec<T>, usize>,
    best_per_width: BTreeMap<usize, (Vec<T>, usize)>,
}

impl<T: Symbol> FreqTable<T> {
    pub fn get(&self, body: &[T]) -> Option<usize> {
        self.counts.get(body).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], usize)> {
        self.counts.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// The most frequent body of each width (ties go to the smallest body).
    pub fn max_per_width(&self) -> &BTreeMap<usize, (Vec<T>, usize)> {
        &self.best_per_width
    }
}

/// Counts per candidate window, keyed by slices borrowed from `text`.
///
/// A window starts at a symbol allowed to start a macro, never includes a
/// barrier or a symbol rejected by `admit`, and has width in `2..=max_len`.
/// Counting is leftmost-greedy: an occurrence is counted only if it starts
/// after the end of the last counted occurrence of the same body.
fn window_counts<T, F>(text: &[T], max_len: usize, admit: F) -> HashMap<&[T], usize>
where
    T: Symbol,
    F: Fn(&T) -> bool,
{
    // (count, first index free for the next counted occurrence)
    let mut table: HashMap<&[T], (usize, usize)> = HashMap::new();
    for i in 0..text.len() {
        if !text[i].can_start() {
            continue;
        }
        let mut width = 0;
        for j in i..text.len() {
            let s = &text[j];
            if s.is_barrier() || !admit(s) {
                break;
            }
            width += s.width();
            if width > max_len {
                break;
            }
            if width >= MIN_MACRO_LEN {
                let entry = table.entry(&text[i..=j]).or_insert((0, 0));
                if i >= entry.1 {
                    entry.0 += 1;
                    entry.1 = j + 1;
                }
            }
        }
    }
    table.into_iter().map(|(k, (n, _))| (k, n)).collect()
}

pub fn build_freq_table<T: Symbol>(text: &[T], max_len: usize) -> Result<FreqTable<T>, CompactError> {
    if max_len < MIN_MACRO_LEN {
        return Err(CompactError::MaxLenTooSmall(max_len));
    }
    let counts: HashMap<Vec<T>, usize> = window_counts(text, max_len, |_| true)
        .into_iter()
        .map(|(k, n)| (k.to_vec(), n))
        .collect();
    let mut best_per_width: BTreeMap<usize, (Vec<T>, usize)> = BTreeMap::new();
    for (body, &n) in &counts {
        let w = width_of(body);
        let replace = match best_per_width.get(&w) {
            None => true,
            Some((b, m)) => n > *m || (n == *m && body < b),
        };
        if replace {
            best_per_width.insert(w, (body.clone(), n));
        }
    }
    Ok(FreqTable {
        counts,
        best_per_width,
    })
}

/// Objective of adopting a body of width `width` that occurs `f` times in a
/// string of width `total`.
fn objective(total: usize, width: usize, f: usize) -> usize {
    if f == 0 {
        total
    } else {
        total - f * (width - 1) + width
    }
}

/// `L(B, {m})`: residual plus table when `m` is the only macro.
pub fn single_macro_objective<T: Symbol>(text: &[T], body: &[T]) -> Result<usize, CompactError> {
    let w = width_of(body);
    if w < MIN_MACRO_LEN {
        return Err(CompactError::BodyTooShort(w));
    }
    let f = super::count_occurrences(text, body)?;
    Ok(objective(width_of(text), w, f))
}

/// Ranking: lower objective, then wider body, then smaller body.
fn better<T: Ord>(a: (usize, usize, &[T]), b: (usize, usize, &[T])) -> bool {
    match a.0.cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match a.1.cmp(&b.1) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a.2 < b.2,
        },
    }
}

fn best_candidate<T, F>(text: &[T], max_len: usize, admit: F) -> Option<(Vec<T>, usize)>
where
    T: Symbol,
    F: Fn(&T) -> bool,
{
    let total = width_of(text);
    let mut best: Option<(usize, usize, &[T])> = None;
    for (body, f) in window_counts(text, max_len, admit) {
        if f < 2 {
            continue;
        }
        let w = width_of(body);
        let cand = (objective(total, w, f), w, body);
        if best.is_none_or(|b| better(cand, b)) {
            best = Some(cand);
        }
    }
    best.filter(|b| b.0 < total).map(|(l, _, body)| (body.to_vec(), l))
}

/// The single macro minimising `L(B, {m})`, or `None` when no candidate
/// shortens the string.
pub fn best_single_macro<T: Symbol>(
    text: &[T],
    max_len: usize,
) -> Result<Option<(Vec<T>, usize)>, CompactError> {
    if max_len < MIN_MACRO_LEN {
        return Err(CompactError::MaxLenTooSmall(max_len));
    }
    Ok(best_candidate(text, max_len, |_| true))
}

/// Iterate the single-macro search on the residual string, at most
/// `max_macros` times, stopping as soon as nothing improves the objective.
pub fn greedy_select<T: Symbol>(
    text: &[T],
    max_macros: usize,
    max_len: usize,
    allow_embed: bool,
) -> Result<CompactionResult<T>, CompactError> {
    if max_macros > MAX_MACROS {
        return Err(CompactError::TooManyMacros(max_macros));
    }
    if max_len < MIN_MACRO_LEN {
        return Err(CompactError::MaxLenTooSmall(max_len));
    }
    let mut macros = MacroSet::new();
    let mut residual: Vec<Unit<T>> = lift(text);
    while macros.len() < max_macros {
        let admit = |u: &Unit<T>| allow_embed || !u.is_macro();
        let Some((body, _)) = best_candidate(&residual, max_len, admit) else {
            break;
        };
        let code = Unit::Macro(macros.len() as u16);
        residual = substitute(&residual, &body, code);
        macros.push(body)?;
    }
    Ok(CompactionResult::new(macros, residual))
}
