//! Exact macro-set selection over the weighted interval graph of all
//! candidate occurrences, plus an exhaustive oracle and the cost guard.

use std::collections::{BTreeMap, BTreeSet};

use super::{CompactError, CompactionResult, MacroSet, MAX_MACROS, MIN_MACRO_LEN};
use crate::symbol::{lift, width_of, Symbol, Unit};

/// Default exact-search budget in elementary steps.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

pub const BRUTE_MAX_WIDTH: usize = 32;
pub const BRUTE_MAX_LEN: usize = 5;
pub const BRUTE_MAX_MACROS: usize = 2;

/// One occurrence of a candidate body. Positions are 1-based and inclusive,
/// counted in symbols of the input string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occurrence {
    /// Index into [`OccurrenceGraph::contents`].
    pub content: usize,
    pub start: usize,
    pub end: usize,
    pub weight: usize,
}

impl Occurrence {
    pub fn overlaps(&self, other: &Occurrence) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// All occurrences of one body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub content: usize,
    pub members: Vec<Occurrence>,
}

/// Interval graph over every candidate occurrence; two vertices are
/// adjacent iff their intervals intersect, so edges stay implicit.
#[derive(Clone, Debug)]
pub struct OccurrenceGraph<T> {
    /// Distinct bodies in ascending order.
    pub contents: Vec<Vec<T>>,
    /// Sorted by (start, end).
    pub vertices: Vec<Occurrence>,
}

impl<T: Symbol> OccurrenceGraph<T> {
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.vertices[a].overlaps(&self.vertices[b])
    }

    pub fn content(&self, occ: &Occurrence) -> &[T] {
        &self.contents[occ.content]
    }

    /// Group vertices by body; one partition per content, in content order.
    pub fn partitions(&self) -> Vec<Partition> {
        let mut parts: Vec<Partition> = (0..self.contents.len())
            .map(|content| Partition {
                content,
                members: Vec::new(),
            })
            .collect();
        for v in &self.vertices {
            parts[v.content].members.push(*v);
        }
        parts
    }
}

pub fn enumerate_occurrences<T: Symbol>(
    text: &[T],
    max_len: usize,
) -> Result<OccurrenceGraph<T>, CompactError> {
    if max_len < MIN_MACRO_LEN {
        return Err(CompactError::MaxLenTooSmall(max_len));
    }
    let mut raw: Vec<(&[T], usize, usize)> = Vec::new();
    for i in 0..text.len() {
        if !text[i].can_start() {
            continue;
        }
        let mut width = 0;
        for j in i..text.len() {
            if text[j].is_barrier() {
                break;
            }
            width += text[j].width();
            if width > max_len {
                break;
            }
            if width >= MIN_MACRO_LEN {
                raw.push((&text[i..=j], i + 1, width));
            }
        }
    }
    let index: BTreeMap<&[T], usize> = raw
        .iter()
        .map(|(c, _, _)| *c)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut vertices: Vec<Occurrence> = raw
        .iter()
        .map(|(c, start, width)| Occurrence {
            content: index[c],
            start: *start,
            end: start + c.len() - 1,
            weight: width - 1,
        })
        .collect();
    vertices.sort_by_key(|v| (v.start, v.end));
    let mut contents: Vec<(usize, Vec<T>)> = index.into_iter().map(|(c, i)| (i, c.to_vec())).collect();
    contents.sort_by_key(|(i, _)| *i);
    Ok(OccurrenceGraph {
        contents: contents.into_iter().map(|(_, c)| c).collect(),
        vertices,
    })
}

/// A set of pairwise non-overlapping occurrences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndependentChoice {
    /// Sorted by start position.
    pub chosen: Vec<Occurrence>,
    pub total_weight: usize,
}

/// Maximum-weight independent set of an interval graph: weighted interval
/// scheduling by dynamic programming over right endpoints.
pub fn mwis(vertices: &[Occurrence]) -> IndependentChoice {
    let mut order: Vec<&Occurrence> = vertices.iter().collect();
    order.sort_by_key(|v| (v.end, v.start));
    let ends: Vec<usize> = order.iter().map(|v| v.end).collect();
    // pred[i]: number of intervals (in end order) ending strictly before order[i] starts
    let pred: Vec<usize> = order
        .iter()
        .map(|v| ends.partition_point(|&e| e < v.start))
        .collect();
    let n = order.len();
    let mut best = vec![0usize; n + 1];
    for i in 0..n {
        best[i + 1] = best[i].max(order[i].weight + best[pred[i]]);
    }
    let mut chosen = Vec::new();
    let mut i = n;
    while i > 0 {
        if order[i - 1].weight + best[pred[i - 1]] > best[i - 1] {
            chosen.push(*order[i - 1]);
            i = pred[i - 1];
        } else {
            i -= 1;
        }
    }
    chosen.reverse();
    IndependentChoice {
        chosen,
        total_weight: best[n],
    }
}

/// Result of the pure-arithmetic cost guard.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostEstimate {
    pub steps: u128,
    pub budget: u128,
}

impl CostEstimate {
    pub fn approved(&self) -> bool {
        self.steps <= self.budget
    }
}

/// `sum_{k=0}^{v} C(n, k)`, saturating.
fn combinations_up_to(n: u128, v: u128) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=v.min(n) {
        total = total.saturating_add(c);
        if c == u128::MAX {
            return u128::MAX;
        }
        // C(n, k+1) = C(n, k) * (n - k) / (k + 1)
        c = match c.checked_mul(n - k) {
            Some(x) => x / (k + 1),
            None => u128::MAX,
        };
    }
    total
}

/// Estimated steps of the exact search on a string of width `eta`:
/// graph construction `eta * l^4` plus, for every combination of up to `v`
/// of the at most `eta * (l - 1)` partitions, an independent-set solve on at
/// most `v * eta` vertices costed at `(v * eta)^2`.
pub fn estimate_cost(eta: usize, max_len: usize, max_macros: usize, budget: u128) -> CostEstimate {
    let eta = eta as u128;
    let l = max_len as u128;
    let v = max_macros as u128;
    let partitions = eta.saturating_mul(l.saturating_sub(1));
    let combos = combinations_up_to(partitions, v);
    let solve = (v.saturating_mul(eta)).saturating_pow(2);
    let build = eta.saturating_mul(l.saturating_pow(4));
    CostEstimate {
        steps: build.saturating_add(combos.saturating_mul(solve)),
        budget,
    }
}

/// Calls `f` on every strictly increasing index list of length `k` over `0..n`.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost slot that can still advance
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Largest number of pairwise disjoint members of one partition. Members
/// share a length, so scanning by start is the earliest-deadline greedy.
fn disjoint_count(members: &[Occurrence]) -> usize {
    let mut n = 0;
    let mut next = 0;
    for m in members {
        if m.start >= next {
            n += 1;
            next = m.end + 1;
        }
    }
    n
}

fn residual_from<T: Copy>(text: &[T], chosen: &[(usize, usize, u16)]) -> Vec<Unit<T>> {
    let mut out = Vec::with_capacity(text.len());
    let mut pos = 0;
    for &(start, end, code) in chosen {
        out.extend(text[pos..start].iter().copied().map(Unit::Sym));
        out.push(Unit::Macro(code));
        pos = end;
    }
    out.extend(text[pos..].iter().copied().map(Unit::Sym));
    out
}

/// Globally optimal set of at most `max_macros` non-embedding macros.
///
/// Ties go to fewer macros, then to the lexicographically smallest sorted
/// list of bodies.
pub fn exact_select<T: Symbol>(
    text: &[T],
    max_macros: usize,
    max_len: usize,
    budget: u128,
) -> Result<CompactionResult<T>, CompactError> {
    if max_macros > MAX_MACROS {
        return Err(CompactError::TooManyMacros(max_macros));
    }
    let total = width_of(text);
    let est = estimate_cost(total, max_len, max_macros, budget);
    if !est.approved() {
        return Err(CompactError::BudgetExceeded {
            estimate: est.steps,
            budget,
        });
    }
    let graph = enumerate_occurrences(text, max_len)?;
    // A body that can be used at most once costs more table than it saves,
    // so any set containing it is strictly beaten by the set without it.
    let parts: Vec<Partition> = graph
        .partitions()
        .into_iter()
        .filter(|p| disjoint_count(&p.members) >= 2)
        .collect();

    let mut best: (usize, Vec<usize>, IndependentChoice) = (total, Vec::new(), IndependentChoice::default());
    let mut pool: Vec<Occurrence> = Vec::new();
    for k in 1..=max_macros.min(parts.len()) {
        for_each_combination(parts.len(), k, |combo| {
            pool.clear();
            let mut table = 0;
            for &p in combo {
                pool.extend_from_slice(&parts[p].members);
                table += graph.contents[parts[p].content].iter().map(Symbol::width).sum::<usize>();
            }
            let choice = mwis(&pool);
            let l = total - choice.total_weight + table;
            if l < best.0 {
                best = (l, combo.to_vec(), choice);
            }
        });
    }

    let (_, combo, choice) = best;
    let mut macros = MacroSet::new();
    let mut code_of: BTreeMap<usize, u16> = BTreeMap::new();
    for (i, &p) in combo.iter().enumerate() {
        macros.push(lift(&graph.contents[parts[p].content]))?;
        code_of.insert(parts[p].content, i as u16);
    }
    let spans: Vec<(usize, usize, u16)> = choice
        .chosen
        .iter()
        .map(|o| (o.start - 1, o.end, code_of[&o.content]))
        .collect();
    Ok(CompactionResult::new(macros, residual_from(text, &spans)))
}

/// Shortest residual width for a fixed set of bodies, exploring at every
/// position either the literal symbol or any body that matches there.
fn shortest_residual<T: Symbol>(text: &[T], bodies: &[&[T]]) -> (usize, Vec<(usize, usize, u16)>) {
    let n = text.len();
    // cost[i]: best residual width of text[i..]; step[i]: body chosen at i
    let mut cost = vec![0usize; n + 1];
    let mut step: Vec<Option<u16>> = vec![None; n + 1];
    for i in (0..n).rev() {
        cost[i] = text[i].width() + cost[i + 1];
        for (b, body) in bodies.iter().enumerate() {
            if text[i..].starts_with(body) {
                let c = 1 + cost[i + body.len()];
                if c < cost[i] {
                    cost[i] = c;
                    step[i] = Some(b as u16);
                }
            }
        }
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        match step[i] {
            Some(b) => {
                spans.push((i, i + bodies[b as usize].len(), b));
                i += bodies[b as usize].len();
            }
            None => i += 1,
        }
    }
    (cost[0], spans)
}

/// Exhaustive oracle: every set of at most `max_macros` distinct bodies,
/// each scored by its best non-overlapping placement. Limited to tiny inputs.
pub fn brute_force_select<T: Symbol>(
    text: &[T],
    max_macros: usize,
    max_len: usize,
) -> Result<CompactionResult<T>, CompactError> {
    if width_of(text) > BRUTE_MAX_WIDTH || max_len > BRUTE_MAX_LEN || max_macros > BRUTE_MAX_MACROS {
        return Err(CompactError::OracleCap);
    }
    if max_len < MIN_MACRO_LEN {
        return Err(CompactError::MaxLenTooSmall(max_len));
    }
    let mut universe: BTreeSet<&[T]> = BTreeSet::new();
    for i in 0..text.len() {
        if !text[i].can_start() {
            continue;
        }
        for j in i..text.len() {
            if text[i..=j].iter().any(|s| s.is_barrier()) {
                break;
            }
            let w = width_of(&text[i..=j]);
            if w > max_len {
                break;
            }
            if w >= MIN_MACRO_LEN {
                universe.insert(&text[i..=j]);
            }
        }
    }
    let universe: Vec<&[T]> = universe.into_iter().collect();

    let mut best_l = width_of(text);
    let mut best_set: Vec<&[T]> = Vec::new();
    let mut best_spans = Vec::new();
    for k in 1..=max_macros {
        for_each_combination(universe.len(), k, |combo| {
            let set: Vec<&[T]> = combo.iter().map(|&c| universe[c]).collect();
            let (residual, spans) = shortest_residual(text, &set);
            let l = residual + set.iter().map(|b| width_of(b)).sum::<usize>();
            if l < best_l {
                best_l = l;
                best_set = set;
                best_spans = spans;
            }
        });
    }
    let mut macros = MacroSet::new();
    for b in &best_set {
        macros.push(lift(b))?;
    }
    Ok(CompactionResult::new(macros, residual_from(text, &best_spans)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::{greedy_select, length_function};
    use proptest::prelude::*;

    const B_STAR: &[u8] = b"jabcdefmrhabcdegkcdefnshabcp";

    fn occ(start: usize, end: usize, weight: usize) -> Occurrence {
        Occurrence {
            content: 0,
            start,
            end,
            weight,
        }
    }

    /// Exhaustive subset enumeration.
    fn mwis_oracle(v: &[Occurrence]) -> usize {
        let mut best = 0;
        for mask in 0u32..(1 << v.len()) {
            let picked: Vec<&Occurrence> = (0..v.len()).filter(|i| mask >> i & 1 == 1).map(|i| &v[i]).collect();
            let ok = picked.iter().enumerate().all(|(i, a)| picked[i + 1..].iter().all(|b| !a.overlaps(b)));
            if ok {
                best = best.max(picked.iter().map(|o| o.weight).sum());
            }
        }
        best
    }

    #[test]
    fn enumerate_examples() {
        let g = enumerate_occurrences(B_STAR, 5).unwrap();
        let abcde = g.contents.iter().position(|c| c == b"abcde").unwrap();
        let spans: Vec<(usize, usize, usize)> = g
            .vertices
            .iter()
            .filter(|v| v.content == abcde)
            .map(|v| (v.start, v.end, v.weight))
            .collect();
        assert_eq!(spans, vec![(2, 6, 4), (11, 15, 4)]);
        assert!(g.vertices.len() <= B_STAR.len() * 4);

        let g = enumerate_occurrences(b"aaa", 2).unwrap();
        assert_eq!(g.contents, vec![b"aa".to_vec()]);
        assert_eq!(g.vertices, vec![occ(1, 2, 1), occ(2, 3, 1)]);
        assert!(g.adjacent(0, 1));

        let g = enumerate_occurrences(b"ab", 5).unwrap();
        assert_eq!(g.vertices, vec![occ(1, 2, 1)]);
    }

    #[test]
    fn mwis_examples() {
        let four = [occ(4, 7, 3), occ(18, 21, 3), occ(10, 13, 3), occ(24, 27, 3)];
        let r = mwis(&four);
        assert_eq!(r.total_weight, 12);
        assert_eq!(r.chosen.len(), 4);
        assert_eq!(mwis_oracle(&four), 12);

        let r = mwis(&[occ(1, 5, 4), occ(3, 6, 3)]);
        assert_eq!(r.chosen, vec![occ(1, 5, 4)]);
        assert_eq!(mwis(&[]), IndependentChoice::default());
    }

    #[test]
    fn exact_examples() {
        let r = exact_select(B_STAR, 2, 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.objective, 24);
        assert_eq!(exact_select(B_STAR, 1, 5, DEFAULT_BUDGET).unwrap().objective, 25);
        let r = exact_select(b"abab", 1, 2, DEFAULT_BUDGET).unwrap();
        assert!(r.macros.is_empty());
        assert_eq!(r.objective, 4);
        assert!(matches!(
            exact_select(B_STAR, 2, 5, 10),
            Err(CompactError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn brute_examples() {
        assert_eq!(brute_force_select(B_STAR, 2, 5).unwrap().objective, 24);
        assert_eq!(brute_force_select(B_STAR, 1, 5).unwrap().objective, 25);
        let r = brute_force_select(b"abcdef", 2, 3).unwrap();
        assert!(r.macros.is_empty());
        assert_eq!(r.objective, 6);
        assert_eq!(brute_force_select(&[0u8; 33], 1, 2), Err(CompactError::OracleCap));
        assert_eq!(brute_force_select(b"ab", 3, 2), Err(CompactError::OracleCap));
        assert_eq!(brute_force_select(b"ab", 1, 6), Err(CompactError::OracleCap));
    }

    #[test]
    fn counterexample_greedy_is_not_optimal() {
        let g = greedy_select(B_STAR, 2, 5, false).unwrap();
        let e = exact_select(B_STAR, 2, 5, DEFAULT_BUDGET).unwrap();
        assert_eq!((g.objective, e.objective), (25, 24));
    }

    #[test]
    fn cost_guard() {
        assert!(estimate_cost(28, 5, 2, DEFAULT_BUDGET).approved());
        assert!(!estimate_cost(23_000, 20, 176, DEFAULT_BUDGET).approved());
        assert_eq!(estimate_cost(23_000, 20, 176, DEFAULT_BUDGET).steps, u128::MAX);
        assert!(estimate_cost(0, 2, 1, DEFAULT_BUDGET).approved());
        assert_eq!(combinations_up_to(5, 2), 1 + 5 + 10);
        assert_eq!(combinations_up_to(3, 9), 8);
    }

    #[test]
    fn combinations_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut n = 0;
        for_each_combination(3, 0, |_| n += 1);
        assert_eq!(n, 1);
        for_each_combination(2, 3, |_| n += 1);
        assert_eq!(n, 1);
    }

    fn interval_set() -> impl Strategy<Value = Vec<Occurrence>> {
        proptest::collection::vec((1usize..30, 0usize..6, 1usize..10), 0..12)
            .prop_map(|v| v.into_iter().map(|(s, len, w)| occ(s, s + len, w)).collect())
    }

    proptest! {
        #[test]
        fn mwis_is_optimal_and_independent(v in interval_set()) {
            let r = mwis(&v);
            prop_assert_eq!(r.total_weight, mwis_oracle(&v));
            prop_assert_eq!(r.total_weight, r.chosen.iter().map(|o| o.weight).sum::<usize>());
            for (i, a) in r.chosen.iter().enumerate() {
                for b in &r.chosen[i + 1..] {
                    prop_assert!(!a.overlaps(b));
                }
            }
        }

        #[test]
        fn exact_matches_oracle_and_dominates_greedy(
            text in proptest::collection::vec(0u8..4, 0..20), v in 0usize..3, l in 2usize..5,
        ) {
            let e = exact_select(&text, v, l, DEFAULT_BUDGET).unwrap();
            let b = brute_force_select(&text, v, l).unwrap();
            let g = greedy_select(&text, v, l, false).unwrap();
            prop_assert_eq!(e.objective, b.objective);
            prop_assert!(e.objective <= g.objective);
            prop_assert_eq!(e.macros.expand(&e.residual), text.clone());
            prop_assert_eq!(b.macros.expand(&b.residual), text.clone());
            prop_assert!(length_function(&text, &e.macros) >= e.objective);
        }
    }
}
