//! Morris-Pratt style matching with leftmost, non-overlapping semantics.
//!
//! After each match the automaton restarts from the empty state at the byte
//! following the match, so reported occurrences never overlap.

use super::CompactError;

/// Failure function: `fail[q]` is the length of the longest proper border
/// of `pattern[..=q]`.
fn failure<T: Eq>(pattern: &[T]) -> Vec<usize> {
    let mut fail = vec![0; pattern.len()];
    let mut k = 0;
    for q in 1..pattern.len() {
        while k > 0 && pattern[k] != pattern[q] {
            k = fail[k - 1];
        }
        if pattern[k] == pattern[q] {
            k += 1;
        }
        fail[q] = k;
    }
    fail
}

/// Zero-based start positions of the leftmost-greedy non-overlapping
/// occurrences of `pattern` in `text`.
pub fn find_non_overlapping<T: Eq>(text: &[T], pattern: &[T]) -> Result<Vec<usize>, CompactError> {
    if pattern.is_empty() {
        return Err(CompactError::EmptyPattern);
    }
    let fail = failure(pattern);
    let m = pattern.len();
    let mut hits = Vec::new();
    let mut q = 0;
    for (i, c) in text.iter().enumerate() {
        while q > 0 && pattern[q] != *c {
            q = fail[q - 1];
        }
        if pattern[q] == *c {
            q += 1;
        }
        if q == m {
            hits.push(i + 1 - m);
            q = 0;
        }
    }
    Ok(hits)
}

/// Number of leftmost-greedy non-overlapping occurrences.
pub fn count_occurrences<T: Eq>(text: &[T], pattern: &[T]) -> Result<usize, CompactError> {
    find_non_overlapping(text, pattern).map(|h| h.len())
}

/// Replace every leftmost-greedy occurrence of `pattern` by `code`.
///
/// An empty pattern leaves the text unchanged.
pub fn substitute<T: Eq + Copy>(text: &[T], pattern: &[T], code: T) -> Vec<T> {
    let hits = match find_non_overlapping(text, pattern) {
        Ok(h) => h,
        Err(_) => return text.to_vec(),
    };
    let mut out = Vec::with_capacity(text.len());
    let mut pos = 0;
    for h in hits {
        out.extend_from_slice(&text[pos..h]);
        out.push(code);
        pos = h + pattern.len();
    }
    out.extend_from_slice(&text[pos..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const B_STAR: &[u8] = b"jabcdefmrhabcdegkcdefnshabcp";

    fn naive_count(text: &[u8], pat: &[u8]) -> usize {
        let mut i = 0;
        let mut n = 0;
        while i + pat.len() <= text.len() {
            if &text[i..i + pat.len()] == pat {
                n += 1;
                i += pat.len();
            } else {
                i += 1;
            }
        }
        n
    }

    #[test]
    fn counts() {
        assert_eq!(count_occurrences(B_STAR, b"abcde").unwrap(), 2);
        assert_eq!(count_occurrences(b"aaaa", b"aa").unwrap(), 2);
        assert_eq!(count_occurrences(b"abc", b"xy").unwrap(), 0);
        assert_eq!(count_occurrences(b"aaaaa", b"aa").unwrap(), 2);
        assert_eq!(count_occurrences(b"abababab", b"abab").unwrap(), 2);
        assert_eq!(count_occurrences(b"aabaabaab", b"aabaab").unwrap(), 1);
    }

    #[test]
    fn empty_pattern_rejected() {
        assert!(matches!(count_occurrences(b"abc", b""), Err(CompactError::EmptyPattern)));
    }

    #[test]
    fn substitute_examples() {
        const MU: u8 = 0x50;
        let out = substitute(B_STAR, b"abcde", MU);
        assert_eq!(out, b"j\x50fmrh\x50gkcdefnshabcp");
        assert_eq!(out.len(), 20);
        assert_eq!(substitute(b"aaaa", b"aa", MU), vec![MU, MU]);
        assert_eq!(substitute(b"abc", b"zz", MU), b"abc".to_vec());
    }

    proptest! {
        #[test]
        fn matches_naive(text in proptest::collection::vec(0u8..3, 0..40),
                         pat in proptest::collection::vec(0u8..3, 1..5)) {
            prop_assert_eq!(count_occurrences(&text, &pat).unwrap(), naive_count(&text, &pat));
        }

        #[test]
        fn substitution_length(text in proptest::collection::vec(0u8..3, 0..40),
                               pat in proptest::collection::vec(0u8..3, 2..5)) {
            let f = naive_count(&text, &pat);
            let out = substitute(&text, &pat, 9);
            prop_assert_eq!(out.len(), text.len() - f * (pat.len() - 1));
        }
    }
}
