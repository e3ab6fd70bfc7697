//! Sentence-level segmentation of an aligned recording.
//!
//! Candidate cut points sit at sentence-final punctuation (`.`, `?`, `!`) of
//! the original text: a begin-of-segment (BOS) right after the mark and an
//! end-of-segment (EOS) right before it. Boundaries are scored by the
//! silence around them and by nearby alignment errors; every BOS is paired
//! with its best EOS candidates and vice versa; a greedy pass then keeps the
//! best-scoring segments that overlap little.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::aligner::{Alignment, OpKind};
use crate::manifest::TimedTranscript;
use crate::normalize::{NormalizedQuery, TextSource, SPACE};
use crate::scalar::{min_max, Scalar};

/// Characters that end a sentence.
pub const SENTENCE_END: &[u8; 3] = b".?!";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoundaryKind {
    Bos,
    Eos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundaryCandidate<T> {
    pub kind: BoundaryKind,
    /// First symbol of the segment (BOS) or its last symbol (EOS).
    pub sym_index: usize,
    /// Segment start byte (BOS) or exclusive end byte, after the
    /// punctuation (EOS).
    pub byte_index: usize,
    pub time_s: T,
    pub silence_s: T,
    pub local_errors: usize,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SegmentCandidate<T> {
    pub bos: BoundaryCandidate<T>,
    pub eos: BoundaryCandidate<T>,
    pub duration_s: T,
    pub matches: usize,
    pub errors: usize,
    pub score: T,
}

impl<T: Scalar> SegmentCandidate<T> {
    pub fn start(&self) -> T {
        self.bos.time_s
    }

    pub fn end(&self) -> T {
        self.eos.time_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct SegmenterConfig<T> {
    /// Alignment ops counted on each side of a boundary.
    pub error_window: usize,
    pub w_sil: T,
    pub w_match: T,
    pub w_err: T,
    pub min_duration: T,
    /// Duration score ramps up until here...
    pub preferred_min: T,
    /// ...stays flat until here, then ramps down.
    pub preferred_max: T,
    pub max_duration: T,
    pub silence_cap: T,
    /// Partners kept per boundary when pairing BOS and EOS.
    pub partners: usize,
    /// Allowed overlap as a fraction of the shorter segment.
    pub overlap_fraction: T,
    /// Inter-word silence that creates extra boundaries; `None` disables it.
    pub silence_split: Option<T>,
    /// Symbols outside the aligned span, on either side, in which boundaries
    /// are still accepted. Rounded out to whole words.
    pub edge_reach: usize,
}

impl<T: Scalar> Default for SegmenterConfig<T> {
    fn default() -> Self {
        Self {
            error_window: 10,
            w_sil: T::one(),
            w_match: T::one(),
            w_err: T::lit(2.0),
            min_duration: T::lit(2.0),
            preferred_min: T::lit(5.0),
            preferred_max: T::lit(20.0),
            max_duration: T::lit(30.0),
            silence_cap: T::lit(3.0),
            partners: 4,
            overlap_fraction: T::lit(0.25),
            silence_split: None,
            edge_reach: 10,
        }
    }
}

impl<T: Scalar> SegmenterConfig<T> {
    /// Duration preference: 0 outside `[min, max]`, linear ramps on
    /// `[min, preferred_min]` and `[preferred_max, max]`, 1 in between.
    pub fn duration_score(&self, d: T) -> T {
        if d < self.min_duration || d > self.max_duration {
            T::zero()
        } else if d < self.preferred_min {
            (d - self.min_duration) / (self.preferred_min - self.min_duration)
        } else if d <= self.preferred_max {
            T::one()
        } else {
            (self.max_duration - d) / (self.max_duration - self.preferred_max)
        }
    }

    fn feasible(&self, d: T) -> bool {
        d >= self.min_duration && d <= self.max_duration
    }
}

/// Lookups from target symbols into an alignment.
#[derive(Debug, Clone)]
pub struct AlignmentIndex {
    t_begin: usize,
    /// Op index carrying each target symbol of `t_span`.
    op_of_target: Vec<usize>,
    /// Query index aligned (match or substitute) to each target symbol.
    query_of_target: Vec<Option<usize>>,
    matches_prefix: Vec<usize>,
    errors_prefix: Vec<usize>,
}

impl AlignmentIndex {
    pub fn new(alignment: &Alignment) -> Self {
        let t_begin = alignment.t_span.start;
        let span = alignment.t_span.len();
        let mut op_of_target = vec![0; span];
        let mut query_of_target = vec![None; span];
        let mut matches_prefix = Vec::with_capacity(alignment.ops.len() + 1);
        let mut errors_prefix = Vec::with_capacity(alignment.ops.len() + 1);
        matches_prefix.push(0);
        errors_prefix.push(0);
        for (k, op) in alignment.ops.iter().enumerate() {
            if let Some(tj) = op.tj {
                op_of_target[tj - t_begin] = k;
                if op.kind != OpKind::Insert {
                    query_of_target[tj - t_begin] = op.qi;
                }
            }
            let is_match = op.kind == OpKind::Match;
            matches_prefix.push(matches_prefix[k] + usize::from(is_match));
            errors_prefix.push(errors_prefix[k] + usize::from(!is_match));
        }
        Self {
            t_begin,
            op_of_target,
            query_of_target,
            matches_prefix,
            errors_prefix,
        }
    }

    /// Op covering target symbol `t`, clamped to the aligned span.
    fn op(&self, t: usize) -> usize {
        let k = t
            .saturating_sub(self.t_begin)
            .min(self.op_of_target.len() - 1);
        self.op_of_target[k]
    }

    fn n_ops(&self) -> usize {
        self.matches_prefix.len() - 1
    }

    /// (matches, errors) over ops `lo..=hi`.
    fn counts(&self, lo: usize, hi: usize) -> (usize, usize) {
        (
            self.matches_prefix[hi + 1] - self.matches_prefix[lo],
            self.errors_prefix[hi + 1] - self.errors_prefix[lo],
        )
    }

    fn errors_around(&self, op: usize, window: usize) -> usize {
        let lo = op.saturating_sub(window);
        let hi = (op + window).min(self.n_ops() - 1);
        self.counts(lo, hi).1
    }
}

/// Everything needed to place boundaries on one aligned recording.
pub struct SegmentInput<'a, T> {
    pub text: &'a TextSource,
    pub alignment: &'a Alignment,
    pub query: &'a NormalizedQuery,
    pub transcript: &'a TimedTranscript<T>,
}

/// Word indices nearest to each target symbol of the span: the last word
/// aligned at or before it and the first aligned at or after it.
fn nearest_words(
    index: &AlignmentIndex,
    query: &NormalizedQuery,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let word = |q: Option<usize>| q.map(|q| query.word_of_symbol[q]);
    let n = index.query_of_target.len();
    let mut before = vec![None; n];
    let mut after = vec![None; n];
    let mut last = None;
    for (slot, &q) in before.iter_mut().zip(&index.query_of_target) {
        if let Some(w) = word(q) {
            last = Some(w);
        }
        *slot = last;
    }
    last = None;
    for k in (0..n).rev() {
        if let Some(w) = word(index.query_of_target[k]) {
            last = Some(w);
        }
        after[k] = last;
    }
    (before, after)
}

struct Timing<T> {
    time: T,
    silence: T,
}

fn boundary_timing<T: Scalar>(
    transcript: &TimedTranscript<T>,
    prev: Option<usize>,
    next: Option<usize>,
    cap: T,
) -> Option<Timing<T>> {
    let two = T::lit(2.0);
    let words = &transcript.words;
    match (prev, next) {
        (None, None) => None,
        (Some(p), Some(n)) if n > p => {
            let gap = (words[n].start - words[p].end).max(T::zero());
            Some(Timing {
                time: words[p].end + gap / two,
                silence: gap.min(cap),
            })
        }
        (Some(p), _) => Some(Timing {
            time: words[p].end,
            silence: T::zero(),
        }),
        (None, Some(n)) => {
            let gap = words[n].start.max(T::zero());
            Some(Timing {
                time: gap / two,
                silence: gap.min(cap),
            })
        }
    }
}

/// Places BOS/EOS candidates around sentence-final punctuation inside the
/// aligned region, plus optional silence-split candidates. Scores are left
/// at zero.
pub fn find_boundaries<T: Scalar>(
    input: &SegmentInput<'_, T>,
    cfg: &SegmenterConfig<T>,
) -> Vec<BoundaryCandidate<T>> {
    let SegmentInput {
        text,
        alignment,
        query,
        transcript,
    } = *input;
    if alignment.t_span.is_empty() {
        return Vec::new();
    }
    let index = AlignmentIndex::new(alignment);
    let (before, after) = nearest_words(&index, query);
    let t0 = index.t_begin;
    let t_end = alignment.t_span.end;
    let syms = &text.symbols;
    let bytes = &text.raw;

    let mut out: Vec<BoundaryCandidate<T>> = Vec::new();
    let mut push =
        |kind, sym: usize, byte_index: usize, prev: Option<usize>, next: Option<usize>| {
            if let Some(timing) = boundary_timing(transcript, prev, next, cfg.silence_cap) {
                out.push(BoundaryCandidate {
                    kind,
                    sym_index: sym,
                    byte_index,
                    time_s: timing.time,
                    silence_s: timing.silence,
                    local_errors: index.errors_around(index.op(sym), cfg.error_window),
                    score: T::zero(),
                });
            }
        };

    // Edge words are often garbled enough that the optimal alignment starts
    // or ends a word or two inside the passage; look a little beyond it.
    let mut word_lo = t0.saturating_sub(cfg.edge_reach);
    while word_lo > 0 && syms[word_lo - 1] != SPACE {
        word_lo -= 1;
    }
    let mut word_hi = (t_end + cfg.edge_reach).min(syms.len());
    while word_hi < syms.len() && syms[word_hi] != SPACE {
        word_hi += 1;
    }
    let covers = |s: usize| s >= word_lo && s < word_hi;

    // Alphanumeric symbols from one before the widened span to one after it.
    let lo = word_lo.saturating_sub(2);
    let hi = (word_hi + 2).min(syms.len());
    let alnum: Vec<usize> = (lo..hi).filter(|&s| syms[s] != SPACE).collect();
    let gap_end_mark = |from: usize, to: usize| {
        bytes[from..to]
            .iter()
            .rposition(|b| SENTENCE_END.contains(b))
            .map(|p| from + p + 1)
    };
    for pair in alnum.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let Some(mark_end) = gap_end_mark(text.byte_of_symbol[a] + 1, text.byte_of_symbol[b])
        else {
            continue;
        };
        // The word before the boundary ends at or before `a`; the next one
        // starts at or after `b`.
        let prev = (a >= t0).then(|| before[a.min(t_end - 1) - t0]).flatten();
        let next = (b < t_end).then(|| after[b.max(t0) - t0]).flatten();
        if covers(a) {
            push(BoundaryKind::Eos, a, mark_end, prev, next);
        }
        if covers(b) {
            push(BoundaryKind::Bos, b, text.byte_of_symbol[b], prev, next);
        }
    }
    // Sentence marks after the last symbol of the document.
    if let Some(&last) = alnum.last() {
        if last + 1 == syms.len() && covers(last) {
            if let Some(mark_end) = gap_end_mark(text.byte_of_symbol[last] + 1, bytes.len()) {
                push(
                    BoundaryKind::Eos,
                    last,
                    mark_end,
                    before[last.min(t_end - 1) - t0],
                    None,
                );
            }
        }
    }

    if let Some(threshold) = cfg.silence_split {
        silence_boundaries(input, &index, threshold, &mut push);
    }

    out.sort_by_key(|b| (b.sym_index, b.kind));
    out.dedup_by_key(|b| (b.sym_index, b.kind));
    if out.is_empty() {
        warn!(
            "{}: no sentence boundaries in aligned region {}..{}",
            transcript.recording_id, t0, t_end
        );
    }
    out
}

fn silence_boundaries<T: Scalar, F>(
    input: &SegmentInput<'_, T>,
    index: &AlignmentIndex,
    threshold: T,
    push: &mut F,
) where
    F: FnMut(BoundaryKind, usize, usize, Option<usize>, Option<usize>),
{
    let words = &input.transcript.words;
    let syms = &input.text.symbols;
    // First and last aligned alphanumeric target symbol of every word.
    let mut span: Vec<Option<(usize, usize)>> = vec![None; words.len()];
    for (k, q) in index.query_of_target.iter().enumerate() {
        let t = index.t_begin + k;
        let Some(q) = *q else { continue };
        if syms[t] == SPACE || input.query.symbols[q] == SPACE {
            continue;
        }
        let w = input.query.word_of_symbol[q];
        span[w] = Some(match span[w] {
            Some((a, b)) => (a.min(t), b.max(t)),
            None => (t, t),
        });
    }
    let aligned: Vec<usize> = (0..words.len()).filter(|&w| span[w].is_some()).collect();
    for pair in aligned.windows(2) {
        let (p, n) = (pair[0], pair[1]);
        if words[n].start - words[p].end < threshold {
            continue;
        }
        let (_, a) = span[p].unwrap();
        let (b, _) = span[n].unwrap();
        if a >= b {
            continue;
        }
        push(
            BoundaryKind::Eos,
            a,
            input.text.byte_of_symbol[a] + 1,
            Some(p),
            Some(n),
        );
        push(
            BoundaryKind::Bos,
            b,
            input.text.byte_of_symbol[b],
            Some(p),
            Some(n),
        );
    }
}

/// Fills boundary scores: `w_sil * norm(silence) - w_err * norm(errors)`
/// with min-max normalization over all candidates of the recording.
pub fn score_boundaries<T: Scalar>(cands: &mut [BoundaryCandidate<T>], cfg: &SegmenterConfig<T>) {
    let silence: Vec<T> = cands.iter().map(|c| c.silence_s).collect();
    let errors: Vec<T> = cands.iter().map(|c| T::count(c.local_errors)).collect();
    let silence = min_max(&silence);
    let errors = min_max(&errors);
    for (k, c) in cands.iter_mut().enumerate() {
        c.score = cfg.w_sil * silence[k] - cfg.w_err * errors[k];
    }
}

fn by_score_then_position<T: Scalar>(
    a: &BoundaryCandidate<T>,
    b: &BoundaryCandidate<T>,
) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.sym_index.cmp(&b.sym_index))
}

/// Pairs every BOS with its best feasible EOS candidates and every EOS with
/// its best BOS candidates, then scores the union.
pub fn enumerate_segments<T: Scalar>(
    bounds: &[BoundaryCandidate<T>],
    index: &AlignmentIndex,
    cfg: &SegmenterConfig<T>,
) -> Vec<SegmentCandidate<T>> {
    let mut bos: Vec<&BoundaryCandidate<T>> = bounds
        .iter()
        .filter(|b| b.kind == BoundaryKind::Bos)
        .collect();
    let mut eos: Vec<&BoundaryCandidate<T>> = bounds
        .iter()
        .filter(|b| b.kind == BoundaryKind::Eos)
        .collect();
    bos.sort_by_key(|b| b.sym_index);
    eos.sort_by_key(|b| b.sym_index);

    let fits = |b: &BoundaryCandidate<T>, e: &BoundaryCandidate<T>| {
        b.sym_index < e.sym_index
            && b.byte_index < e.byte_index
            && cfg.feasible(e.time_s - b.time_s)
    };

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (bi, b) in bos.iter().enumerate() {
        let first = eos.partition_point(|e| e.sym_index <= b.sym_index);
        let mut options: Vec<usize> = (first..eos.len())
            .take_while(|&ei| eos[ei].time_s - b.time_s <= cfg.max_duration)
            .filter(|&ei| fits(b, eos[ei]))
            .collect();
        options.sort_by(|&x, &y| by_score_then_position(eos[x], eos[y]));
        pairs.extend(options.into_iter().take(cfg.partners).map(|ei| (bi, ei)));
    }
    for (ei, e) in eos.iter().enumerate() {
        let last = bos.partition_point(|b| b.sym_index < e.sym_index);
        let mut options: Vec<usize> = (0..last)
            .rev()
            .take_while(|&bi| e.time_s - bos[bi].time_s <= cfg.max_duration)
            .filter(|&bi| fits(bos[bi], e))
            .collect();
        options.sort_by(|&x, &y| by_score_then_position(bos[x], bos[y]));
        pairs.extend(options.into_iter().take(cfg.partners).map(|bi| (bi, ei)));
    }

    let mut segs: Vec<SegmentCandidate<T>> = pairs
        .into_iter()
        .map(|(bi, ei)| {
            let (b, e) = (bos[bi], eos[ei]);
            let (matches, errors) = index.counts(index.op(b.sym_index), index.op(e.sym_index));
            SegmentCandidate {
                bos: b.clone(),
                eos: e.clone(),
                duration_s: e.time_s - b.time_s,
                matches,
                errors,
                score: T::zero(),
            }
        })
        .collect();

    let matches = min_max(&segs.iter().map(|s| T::count(s.matches)).collect::<Vec<_>>());
    let errors = min_max(&segs.iter().map(|s| T::count(s.errors)).collect::<Vec<_>>());
    for (k, s) in segs.iter_mut().enumerate() {
        s.score =
            s.bos.score + s.eos.score + cfg.duration_score(s.duration_s) + cfg.w_match * matches[k]
                - cfg.w_err * errors[k];
    }
    segs
}

fn overlap<T: Scalar>(a: &SegmentCandidate<T>, b: &SegmentCandidate<T>) -> T {
    (a.end().min(b.end()) - a.start().max(b.start())).max(T::zero())
}

/// Greedy selection by descending score. A candidate is kept when its
/// overlap with every kept segment is below `overlap_fraction` of the
/// shorter of the two. Ties go to the earlier start, then the longer
/// segment. Output is ordered by start time.
pub fn select_segments<T: Scalar>(
    cands: &[SegmentCandidate<T>],
    cfg: &SegmenterConfig<T>,
) -> Vec<SegmentCandidate<T>> {
    let mut order: Vec<&SegmentCandidate<T>> = cands.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.start().partial_cmp(&b.start()).unwrap_or(Ordering::Equal))
            .then(
                b.duration_s
                    .partial_cmp(&a.duration_s)
                    .unwrap_or(Ordering::Equal),
            )
            .then(a.bos.sym_index.cmp(&b.bos.sym_index))
            .then(a.eos.sym_index.cmp(&b.eos.sym_index))
    });
    let mut kept: Vec<SegmentCandidate<T>> = Vec::new();
    for cand in order {
        let ok = kept.iter().all(|k| {
            let shorter = cand.duration_s.min(k.duration_s);
            overlap(cand, k) < cfg.overlap_fraction * shorter
        });
        if ok {
            kept.push(cand.clone());
        }
    }
    kept.sort_by(|a, b| {
        a.start()
            .partial_cmp(&b.start())
            .unwrap_or(Ordering::Equal)
            .then(a.end().partial_cmp(&b.end()).unwrap_or(Ordering::Equal))
    });
    kept
}

/// Runs boundary placement, scoring, pairing and selection.
pub fn segment<T: Scalar>(
    input: &SegmentInput<'_, T>,
    cfg: &SegmenterConfig<T>,
) -> SegmentOutput<T> {
    let mut boundaries = find_boundaries(input, cfg);
    if boundaries.is_empty() {
        return SegmentOutput::default();
    }
    score_boundaries(&mut boundaries, cfg);
    let index = AlignmentIndex::new(input.alignment);
    let candidates = enumerate_segments(&boundaries, &index, cfg);
    let selected = select_segments(&candidates, cfg);
    SegmentOutput {
        boundaries,
        candidates,
        selected,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutput<T> {
    pub boundaries: Vec<BoundaryCandidate<T>>,
    pub candidates: Vec<SegmentCandidate<T>>,
    pub selected: Vec<SegmentCandidate<T>>,
}

impl<T> Default for SegmentOutput<T> {
    fn default() -> Self {
        Self {
            boundaries: Vec::new(),
            candidates: Vec::new(),
            selected: Vec::new(),
        }
    }
}
