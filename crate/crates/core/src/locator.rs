//! First alignment stage: close matches and the longest monotone chain.
//!
//! The query is concatenated in front of the target and one suffix array is
//! built over the result. The close matches of query position `i` are the
//! nearest target suffixes on either side of the query suffix at `i` in
//! suffix order. Query suffixes run on into the target text, exactly as in
//! the concatenated sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::suffix_array::{build_suffix_array_with, SuffixAlgorithm, SymbolSeq};

/// A query index paired with a target index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchPair {
    pub i: usize,
    pub j: usize,
}

impl MatchPair {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Pairs with non-decreasing `i` and non-decreasing `j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnchorChain {
    pub pairs: Vec<MatchPair>,
}

impl AnchorChain {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of distinct query positions covered by the chain.
    pub fn query_coverage(&self) -> usize {
        let mut count = 0;
        let mut last = None;
        for p in &self.pairs {
            if last != Some(p.i) {
                count += 1;
                last = Some(p.i);
            }
        }
        count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloseMatchOptions {
    /// Target neighbours taken on each side of every query suffix.
    pub per_side: usize,
    /// Only every `stride`-th query position is looked up.
    pub stride: usize,
    pub algorithm: SuffixAlgorithm,
}

impl Default for CloseMatchOptions {
    fn default() -> Self {
        Self {
            per_side: 2,
            stride: 1,
            algorithm: SuffixAlgorithm::Dc3,
        }
    }
}

/// Close matches with one neighbour per side.
pub fn find_close_matches(query: &SymbolSeq, target: &SymbolSeq) -> Vec<MatchPair> {
    find_close_matches_with(
        query,
        target,
        &CloseMatchOptions {
            per_side: 1,
            ..Default::default()
        },
    )
}

/// Emits, for every (strided) query position, up to `per_side` target
/// positions preceding and following it in suffix order. Pairs come out
/// grouped by `i`; predecessors first (nearest first), then successors.
pub fn find_close_matches_with(
    query: &SymbolSeq,
    target: &SymbolSeq,
    opts: &CloseMatchOptions,
) -> Vec<MatchPair> {
    let q = query.body();
    let t = target.body();
    let m = q.len();
    if m == 0 || t.is_empty() || opts.per_side == 0 {
        return Vec::new();
    }
    let stride = opts.stride.max(1);
    let alphabet = query.alphabet_size().max(target.alphabet_size());
    let mut concat = Vec::with_capacity(m + t.len() + 1);
    concat.extend_from_slice(q);
    concat.extend_from_slice(t);
    concat.push(crate::suffix_array::SENTINEL);
    let concat = SymbolSeq::new(concat, alphabet).expect("bodies carry no sentinel");
    let sa = build_suffix_array_with(&concat, opts.algorithm).sa;
    let n_text = m + t.len();

    let k = opts.per_side;
    let mut before: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut after: Vec<Vec<usize>> = vec![Vec::new(); m];

    // Forward sweep keeps the k most recent target suffixes.
    let mut recent: std::collections::VecDeque<usize> =
        std::collections::VecDeque::with_capacity(k);
    for &p in &sa {
        if p < m {
            if p % stride == 0 {
                before[p].extend(recent.iter().rev());
            }
        } else if p < n_text {
            if recent.len() == k {
                recent.pop_front();
            }
            recent.push_back(p - m);
        }
    }
    recent.clear();
    for &p in sa.iter().rev() {
        if p < m {
            if p % stride == 0 {
                after[p].extend(recent.iter().rev());
            }
        } else if p < n_text {
            if recent.len() == k {
                recent.pop_front();
            }
            recent.push_back(p - m);
        }
    }

    let mut pairs = Vec::with_capacity(m * 2 * k / stride + 1);
    for i in (0..m).step_by(stride) {
        pairs.extend(before[i].iter().map(|&j| MatchPair::new(i, j)));
        pairs.extend(after[i].iter().map(|&j| MatchPair::new(i, j)));
    }
    pairs
}

/// Longest chain of pairs that is non-decreasing in both coordinates.
///
/// Pairs are deduplicated and sorted by `(i, j)`; the chain is then a longest
/// non-decreasing subsequence of the `j` values, found with patience sorting
/// in `O(n log n)`. Among chains of maximal length the one ending at the
/// smallest `j` is returned.
pub fn longest_chain(pairs: &[MatchPair]) -> AnchorChain {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return AnchorChain::default();
    }

    // tails[l] = index of the element ending the best chain of length l + 1.
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; sorted.len()];
    for (idx, p) in sorted.iter().enumerate() {
        // First pile whose tail is strictly greater than p.j.
        let pile = tails.partition_point(|&t| sorted[t].j <= p.j);
        prev[idx] = pile.checked_sub(1).map(|l| tails[l]);
        if pile == tails.len() {
            tails.push(idx);
        } else {
            tails[pile] = idx;
        }
    }

    let mut chain = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied();
    while let Some(idx) = cur {
        chain.push(sorted[idx]);
        cur = prev[idx];
    }
    chain.reverse();
    AnchorChain { pairs: chain }
}

/// Drops chain pairs that stray from the dominant diagonal.
///
/// The chain is cut into runs wherever the diagonal `j - i` of consecutive
/// pairs jumps by more than `tolerance + Δi / 2`. The longest run is kept and
/// grown outwards by every run that is diagonal-consistent with the kept pair
/// nearest to it; isolated stray matches in between are skipped.
pub fn trim_chain(chain: &AnchorChain, tolerance: usize) -> AnchorChain {
    let pairs = &chain.pairs;
    if pairs.len() < 2 {
        return chain.clone();
    }
    let fits = |a: &MatchPair, b: &MatchPair| {
        let da = a.j as i64 - a.i as i64;
        let db = b.j as i64 - b.i as i64;
        let di = b.i.abs_diff(a.i) as i64;
        (db - da).abs() <= tolerance as i64 + di / 2
    };

    let mut runs: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for k in 1..=pairs.len() {
        if k == pairs.len() || !fits(&pairs[k - 1], &pairs[k]) {
            runs.push(start..k);
            start = k;
        }
    }
    // Longest run; the earliest on ties.
    let main = (0..runs.len())
        .rev()
        .max_by_key(|&r| runs[r].len())
        .unwrap_or(0);

    let mut keep = vec![false; runs.len()];
    keep[main] = true;
    let mut edge = pairs[runs[main].start];
    for r in (0..main).rev() {
        let last = pairs[runs[r].end - 1];
        if fits(&last, &edge) {
            keep[r] = true;
            edge = pairs[runs[r].start];
        }
    }
    let mut edge = pairs[runs[main].end - 1];
    for r in main + 1..runs.len() {
        let first = pairs[runs[r].start];
        if fits(&edge, &first) {
            keep[r] = true;
            edge = pairs[runs[r].end - 1];
        }
    }
    AnchorChain {
        pairs: runs
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .flat_map(|(r, _)| pairs[r.clone()].iter().copied())
            .collect(),
    }
}

/// Default slack around the located region.
pub fn default_margin(query_len: usize) -> usize {
    64.max(query_len / 100)
}

/// Rough target span `[begin, end)` of the query implied by the chain.
///
/// The span is widened by the query symbols before the first anchor and
/// after the last one, plus `margin` on each side, and clamped to the target.
pub fn locate_region(
    chain: &AnchorChain,
    query_len: usize,
    target_len: usize,
    margin: usize,
) -> Result<(usize, usize)> {
    let (first, last) = match (chain.pairs.first(), chain.pairs.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::LocationFailed),
    };
    let begin = first.j.saturating_sub(first.i + margin);
    let tail = query_len.saturating_sub(last.i);
    let end = (last.j + tail + margin).min(target_len);
    Ok((begin.min(end), end))
}
