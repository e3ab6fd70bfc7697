//! Second alignment stage: Levenshtein alignment of the whole query against
//! the located target region.
//!
//! Everything runs on one row-banded DP engine. Each DP row `r` (query
//! prefix length) carries an inclusive column range; cells outside the
//! ranges are unreachable. Plain alignment uses full rows. Anchored
//! alignment uses the union of the rectangles between consecutive anchors,
//! each widened by a slack border that stops at the next anchor over, so the
//! cell count is the sum of the block areas.

use std::ops::Range;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::locator::{AnchorChain, MatchPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Match,
    Substitute,
    /// Target symbol with no query counterpart.
    Insert,
    /// Query symbol with no target counterpart.
    Delete,
}

impl OpKind {
    pub fn code(self) -> char {
        match self {
            OpKind::Match => 'M',
            OpKind::Substitute => 'S',
            OpKind::Insert => 'I',
            OpKind::Delete => 'D',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: OpKind,
    pub qi: Option<usize>,
    pub tj: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
    pub q_span: Range<usize>,
    pub t_span: Range<usize>,
    pub cost: usize,
}

impl Alignment {
    /// Compact op string, one of `MSID` per op.
    pub fn op_string(&self) -> String {
        self.ops.iter().map(|op| op.kind.code()).collect()
    }

    pub fn matches(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| op.kind == OpKind::Match)
            .count()
    }

    /// Moves all target indices by `offset`, e.g. from region-local to
    /// document coordinates.
    pub fn shift_target(mut self, offset: usize) -> Self {
        for op in &mut self.ops {
            if let Some(tj) = op.tj.as_mut() {
                *tj += offset;
            }
        }
        self.t_span = self.t_span.start + offset..self.t_span.end + offset;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    /// Both sequences consumed end to end.
    Global,
    /// Query consumed end to end; target start and end are free.
    Infix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignConfig {
    /// At most one anchor is kept per this many query symbols.
    pub anchor_spacing: usize,
    /// Extra columns added on each side of a block rectangle.
    pub slack: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            anchor_spacing: 32,
            slack: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignStats {
    /// DP cells evaluated.
    pub cells: u64,
    /// Anchors that survived filtering and sparsification.
    pub anchors_used: usize,
}

/// Unconstrained minimum-cost alignment.
pub fn levenshtein_align(query: &[u8], target: &[u8], mode: AlignMode) -> Alignment {
    let band = vec![(0, target.len()); query.len() + 1];
    let free = mode == AlignMode::Infix;
    band_align(query, target, &band, free, free).0
}

/// Alignment restricted to blocks around the anchors of `chain`. Anchor
/// coordinates are relative to `target_region`.
pub fn align_with_anchors(
    query: &[u8],
    target_region: &[u8],
    chain: &AnchorChain,
    cfg: &AlignConfig,
) -> Alignment {
    align_with_anchors_stats(query, target_region, chain, cfg).0
}

pub fn align_with_anchors_stats(
    query: &[u8],
    target_region: &[u8],
    chain: &AnchorChain,
    cfg: &AlignConfig,
) -> (Alignment, AlignStats) {
    let anchors = usable_anchors(query, target_region, &chain.pairs, cfg.anchor_spacing);
    if anchors.is_empty() && !query.is_empty() {
        warn!(
            "no usable anchors; falling back to a full {}x{} alignment",
            query.len(),
            target_region.len()
        );
    }
    let band = block_band(query.len(), target_region.len(), &anchors, cfg.slack);
    let (alignment, cells) = band_align(query, target_region, &band, true, true);
    (
        alignment,
        AlignStats {
            cells,
            anchors_used: anchors.len(),
        },
    )
}

/// Keeps anchors that are in range, sit on equal symbols, strictly increase
/// in both coordinates and are at least `spacing` query symbols apart.
fn usable_anchors(
    query: &[u8],
    target: &[u8],
    pairs: &[MatchPair],
    spacing: usize,
) -> Vec<MatchPair> {
    let spacing = spacing.max(1);
    let mut kept: Vec<MatchPair> = Vec::new();
    for &p in pairs {
        if p.i >= query.len() || p.j >= target.len() || query[p.i] != target[p.j] {
            continue;
        }
        match kept.last() {
            Some(last) if p.i < last.i + spacing || p.j <= last.j => {}
            _ => kept.push(p),
        }
    }
    kept
}

/// Per-row inclusive column ranges covering every slack-widened block.
fn block_band(m: usize, n: usize, anchors: &[MatchPair], slack: usize) -> Vec<(usize, usize)> {
    let mut band: Vec<Option<(usize, usize)>> = vec![None; m + 1];
    let mut cover = |rows: std::ops::RangeInclusive<usize>, lo: usize, hi: usize| {
        for r in rows {
            band[r] = Some(match band[r] {
                Some((a, b)) => (a.min(lo), b.max(hi)),
                None => (lo, hi),
            });
        }
    };
    let k = anchors.len();
    // Block b spans anchor b-1 .. anchor b, with virtual anchors at the
    // corners (0, 0) and (m, n).
    for b in 0..=k {
        let row0 = if b == 0 { 0 } else { anchors[b - 1].i };
        let row1 = if b == k { m } else { anchors[b].i };
        let lo = if b == 0 {
            0
        } else {
            let floor = if b >= 2 { anchors[b - 2].j } else { 0 };
            anchors[b - 1].j.saturating_sub(slack).max(floor)
        };
        let hi = if b == k {
            n
        } else {
            let ceil = if b + 1 < k { anchors[b + 1].j } else { n };
            (anchors[b].j + slack).min(ceil)
        };
        cover(row0..=row1, lo, hi);
    }
    band.into_iter()
        .map(|r| r.expect("blocks cover every row"))
        .collect()
}

const INF: u32 = u32::MAX / 2;

const TB_START: u8 = 0;
const TB_DIAG: u8 = 1;
const TB_UP: u8 = 2;
const TB_LEFT: u8 = 3;

/// Runs the DP over `band` and traces back one optimal path. Ties prefer
/// match, then substitute, then delete, then insert.
fn band_align(
    query: &[u8],
    target: &[u8],
    band: &[(usize, usize)],
    start_free: bool,
    end_free: bool,
) -> (Alignment, u64) {
    let m = query.len();
    let n = target.len();
    debug_assert_eq!(band.len(), m + 1);

    let mut offsets = Vec::with_capacity(m + 2);
    let mut total = 0usize;
    for &(lo, hi) in band {
        debug_assert!(lo <= hi && hi <= n);
        offsets.push(total);
        total += hi - lo + 1;
    }
    offsets.push(total);
    let mut trace = vec![TB_START; total];

    let (lo0, hi0) = band[0];
    let mut prev: Vec<u32> = (lo0..=hi0)
        .map(|c| {
            if start_free {
                0
            } else if lo0 == 0 {
                c as u32
            } else {
                INF
            }
        })
        .collect();
    if !start_free {
        for c in lo0.max(1)..=hi0 {
            trace[c - lo0] = TB_LEFT;
        }
    }
    let mut cur: Vec<u32> = Vec::new();

    for r in 1..=m {
        let (plo, phi) = band[r - 1];
        let (lo, hi) = band[r];
        let qs = query[r - 1];
        let row_trace = &mut trace[offsets[r]..offsets[r + 1]];
        cur.clear();
        let prev_at = |c: usize| {
            if c >= plo && c <= phi {
                prev[c - plo]
            } else {
                INF
            }
        };
        for c in lo..=hi {
            let mut best = INF;
            let mut how = TB_START;
            if c > 0 {
                let d = prev_at(c - 1);
                if d < INF {
                    best = d + u32::from(qs != target[c - 1]);
                    how = TB_DIAG;
                }
            }
            let u = prev_at(c);
            if u < INF && u + 1 < best {
                best = u + 1;
                how = TB_UP;
            }
            if c > lo {
                let l = cur[c - 1 - lo];
                if l < INF && l + 1 < best {
                    best = l + 1;
                    how = TB_LEFT;
                }
            }
            cur.push(best);
            row_trace[c - lo] = how;
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let (lom, him) = band[m];
    let end_col = if end_free {
        (lom..=him)
            .min_by_key(|&c| (prev[c - lom], c))
            .expect("non-empty last row")
    } else {
        assert_eq!(him, n, "global alignment needs the last cell in band");
        n
    };
    let cost = prev[end_col - lom];
    assert!(cost < INF, "band admits no path");

    let mut ops = Vec::with_capacity(m + 16);
    let (mut r, mut c) = (m, end_col);
    loop {
        let (lo, _) = band[r];
        let how = trace[offsets[r] + c - lo];
        if r == 0 && (start_free || c == 0) {
            break;
        }
        match how {
            TB_DIAG => {
                let kind = if query[r - 1] == target[c - 1] {
                    OpKind::Match
                } else {
                    OpKind::Substitute
                };
                ops.push(EditOp {
                    kind,
                    qi: Some(r - 1),
                    tj: Some(c - 1),
                });
                r -= 1;
                c -= 1;
            }
            TB_UP => {
                ops.push(EditOp {
                    kind: OpKind::Delete,
                    qi: Some(r - 1),
                    tj: None,
                });
                r -= 1;
            }
            TB_LEFT => {
                ops.push(EditOp {
                    kind: OpKind::Insert,
                    qi: None,
                    tj: Some(c - 1),
                });
                c -= 1;
            }
            _ => unreachable!("traceback reached a start cell at row {r}"),
        }
    }
    ops.reverse();
    let alignment = Alignment {
        ops,
        q_span: 0..m,
        t_span: c..end_col,
        cost: cost as usize,
    };
    (alignment, total as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook DP, costs only.
    fn dp_cost(q: &[u8], t: &[u8], infix: bool) -> usize {
        let mut prev: Vec<usize> = (0..=t.len()).map(|j| if infix { 0 } else { j }).collect();
        for i in 1..=q.len() {
            let mut cur = vec![i; t.len() + 1];
            for j in 1..=t.len() {
                cur[j] = (prev[j - 1] + usize::from(q[i - 1] != t[j - 1]))
                    .min(prev[j] + 1)
                    .min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        if infix {
            *prev.iter().min().unwrap()
        } else {
            prev[t.len()]
        }
    }

    /// Replays ops and checks spans, consecutiveness and cost.
    fn check_valid(a: &Alignment, q: &[u8], t: &[u8]) {
        let qi: Vec<usize> = a.ops.iter().filter_map(|o| o.qi).collect();
        let tj: Vec<usize> = a.ops.iter().filter_map(|o| o.tj).collect();
        assert_eq!(qi, a.q_span.clone().collect::<Vec<_>>());
        assert_eq!(tj, a.t_span.clone().collect::<Vec<_>>());
        for op in &a.ops {
            match op.kind {
                OpKind::Match => assert_eq!(q[op.qi.unwrap()], t[op.tj.unwrap()]),
                OpKind::Substitute => assert_ne!(q[op.qi.unwrap()], t[op.tj.unwrap()]),
                OpKind::Insert => assert!(op.qi.is_none() && op.tj.is_some()),
                OpKind::Delete => assert!(op.qi.is_some() && op.tj.is_none()),
            }
        }
        assert_eq!(
            a.cost,
            a.ops.iter().filter(|o| o.kind != OpKind::Match).count()
        );
    }

    #[test]
    fn identity() {
        let a = levenshtein_align(b"ABC", b"ABC", AlignMode::Global);
        assert_eq!(a.cost, 0);
        assert_eq!(a.op_string(), "MMM");
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(dp_cost(b"KITTEN", b"SITTING", false), 3);
        let a = levenshtein_align(b"KITTEN", b"SITTING", AlignMode::Global);
        assert_eq!(a.cost, 3);
        check_valid(&a, b"KITTEN", b"SITTING");
    }

    #[test]
    fn infix_finds_window() {
        let a = levenshtein_align(b"OVE", b"ILOVEYOU", AlignMode::Infix);
        assert_eq!(a.cost, 0);
        assert_eq!(a.t_span, 2..5);
    }

    #[test]
    fn empty_inputs() {
        let a = levenshtein_align(b"", b"", AlignMode::Global);
        assert!(a.ops.is_empty() && a.cost == 0);
        let a = levenshtein_align(b"", b"AB", AlignMode::Global);
        assert_eq!(a.op_string(), "II");
        let a = levenshtein_align(b"AB", b"", AlignMode::Infix);
        assert_eq!(a.op_string(), "DD");
        let a = levenshtein_align(b"", b"AB", AlignMode::Infix);
        assert_eq!((a.cost, a.t_span), (0, 0..0));
    }

    #[test]
    fn tie_break_prefers_substitute_over_indels() {
        // AB vs BA: cost 2 either as two substitutions or delete+insert.
        let a = levenshtein_align(b"AB", b"BA", AlignMode::Global);
        assert_eq!(a.op_string(), "SS");
    }

    #[test]
    fn anchored_identity() {
        let q: Vec<u8> = (0..200).map(|k| b'A' + (k * 7 % 26) as u8).collect();
        let chain = AnchorChain {
            pairs: (0..200).step_by(16).map(|i| MatchPair::new(i, i)).collect(),
        };
        let (a, stats) = align_with_anchors_stats(&q, &q, &chain, &AlignConfig::default());
        assert_eq!(a.cost, 0);
        assert_eq!(a, levenshtein_align(&q, &q, AlignMode::Infix));
        assert!(stats.anchors_used > 0);
    }

    #[test]
    fn empty_chain_falls_back_to_infix() {
        let q = b"LOVE";
        let t = b"ILOVEYOU";
        let a = align_with_anchors(q, t, &AnchorChain::default(), &AlignConfig::default());
        assert_eq!(a, levenshtein_align(q, t, AlignMode::Infix));
    }

    #[test]
    fn mismatched_anchors_are_dropped() {
        let q = b"ABCDEF";
        let t = b"XXABCDEFXX";
        let chain = AnchorChain {
            pairs: vec![
                MatchPair::new(0, 0),
                MatchPair::new(3, 5),
                MatchPair::new(9, 1),
            ],
        };
        let cfg = AlignConfig {
            anchor_spacing: 1,
            slack: 0,
        };
        let (a, stats) = align_with_anchors_stats(q, t, &chain, &cfg);
        assert_eq!(stats.anchors_used, 1);
        assert_eq!(a.cost, 0);
        assert_eq!(a.t_span, 2..8);
    }

    #[test]
    fn cells_scale_with_spacing() {
        let n = 3000;
        let q: Vec<u8> = (0..n)
            .map(|k| b'A' + ((k * 31 + k / 7) % 26) as u8)
            .collect();
        let chain = AnchorChain {
            pairs: (0..n).map(|i| MatchPair::new(i, i)).collect(),
        };
        for spacing in [8, 32, 128] {
            let cfg = AlignConfig {
                anchor_spacing: spacing,
                slack: 8,
            };
            let (a, stats) = align_with_anchors_stats(&q, &q, &chain, &cfg);
            assert_eq!(a.cost, 0);
            let bound = (n as u64 + 1) * (2 * spacing as u64 + 2 * 8 + 2);
            assert!(
                stats.cells <= bound,
                "spacing {spacing}: {} > {bound}",
                stats.cells
            );
        }
        let full = (n as u64 + 1) * (n as u64 + 1);
        let cfg = AlignConfig::default();
        assert!(align_with_anchors_stats(&q, &q, &chain, &cfg).1.cells * 20 < full);
    }

    fn corrupt(src: &[u8], edits: &[(usize, u8, u8)]) -> Vec<u8> {
        let mut out = src.to_vec();
        for &(pos, kind, sym) in edits {
            if out.is_empty() {
                break;
            }
            let p = pos % out.len();
            match kind % 3 {
                0 => out[p] = sym,
                1 => {
                    out.remove(p);
                }
                _ => out.insert(p, sym),
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_textbook_cost(
            q in prop::collection::vec(b'A'..b'E', 0..40),
            t in prop::collection::vec(b'A'..b'E', 0..40),
        ) {
            let g = levenshtein_align(&q, &t, AlignMode::Global);
            prop_assert_eq!(g.cost, dp_cost(&q, &t, false));
            check_valid(&g, &q, &t);
            let i = levenshtein_align(&q, &t, AlignMode::Infix);
            prop_assert_eq!(i.cost, dp_cost(&q, &t, true));
            check_valid(&i, &q, &t);
        }

        #[test]
        fn planted_anchors_keep_optimum(
            t in prop::collection::vec(b'A'..=b'Z', 20..200),
            edits in prop::collection::vec((0usize..1000, 0u8..3, b'A'..=b'Z'), 1..30),
            every in 1usize..12,
            slack in 0usize..10,
        ) {
            let q = corrupt(&t, &edits);
            prop_assume!(!q.is_empty());
            let full = levenshtein_align(&q, &t, AlignMode::Infix);
            let planted = AnchorChain {
                pairs: full.ops.iter()
                    .filter(|o| o.kind == OpKind::Match)
                    .map(|o| MatchPair::new(o.qi.unwrap(), o.tj.unwrap()))
                    .step_by(every)
                    .collect(),
            };
            let cfg = AlignConfig { anchor_spacing: 1, slack };
            let a = align_with_anchors(&q, &t, &planted, &cfg);
            prop_assert_eq!(a.cost, full.cost);
            check_valid(&a, &q, &t);
        }

        #[test]
        fn arbitrary_anchors_never_beat_optimum(
            q in prop::collection::vec(b'A'..b'D', 1..60),
            t in prop::collection::vec(b'A'..b'D', 1..60),
            raw in prop::collection::vec((0usize..60, 0usize..60), 0..12),
        ) {
            let mut pairs: Vec<MatchPair> = raw.iter().map(|&(i, j)| MatchPair::new(i, j)).collect();
            pairs.sort_unstable();
            let chain = AnchorChain { pairs };
            let a = align_with_anchors(&q, &t, &chain, &AlignConfig { anchor_spacing: 1, slack: 2 });
            prop_assert!(a.cost >= dp_cost(&q, &t, true));
            check_valid(&a, &q, &t);
        }
    }
}
