//! End-to-end orchestration: locate, align, segment, emit cuts.
//!
//! One book index (normalized text plus coded symbols) is shared by every
//! recording. Recordings are processed independently, optionally on a
//! thread pool, and results are written in recording-id order so output
//! does not depend on the degree of parallelism.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aligner::{
    align_with_anchors_stats, levenshtein_align, AlignConfig, AlignMode, Alignment,
};
use crate::error::{Error, Result};
use crate::locator::{
    default_margin, find_close_matches_with, locate_region, longest_chain, trim_chain, AnchorChain,
    CloseMatchOptions, MatchPair,
};
use crate::manifest::{
    emit_cut, read_speakers, read_transcripts, write_cuts, Cut, DEFAULT_CONTEXT_BYTES,
};
use crate::normalize::{normalize_text, normalize_transcript, NormalizedQuery, TextSource};
use crate::segmenter::{
    segment, BoundaryCandidate, SegmentCandidate, SegmentInput, SegmenterConfig,
};
use crate::suffix_array::{SuffixAlgorithm, SymbolSeq};

pub type TimedTranscript = crate::manifest::TimedTranscript<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Bytes of preceding text stored with every cut.
    pub context_bytes: usize,
    pub close_matches_per_side: usize,
    /// Look up close matches for every n-th query symbol only.
    pub query_stride: usize,
    pub suffix_algorithm: SuffixAlgorithm,
    pub anchor_spacing: usize,
    pub block_slack: usize,
    /// Region margin in symbols; `None` uses max(64, 1% of the query).
    pub region_margin: Option<usize>,
    /// Recordings whose chain covers less than this fraction of the query
    /// are reported unlocatable.
    pub min_chain_coverage: f64,
    /// Diagonal drift allowed between neighbouring chain pairs before the
    /// chain is split; stray pieces away from the main run are dropped.
    pub chain_diagonal_tolerance: usize,
    pub segmenter: SegmenterConfig<f64>,
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            context_bytes: DEFAULT_CONTEXT_BYTES,
            close_matches_per_side: 2,
            query_stride: 1,
            suffix_algorithm: SuffixAlgorithm::Dc3,
            anchor_spacing: 32,
            block_slack: 8,
            region_margin: None,
            min_chain_coverage: 0.2,
            chain_diagonal_tolerance: 16,
            segmenter: SegmenterConfig::default(),
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|source| Error::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let s = &self.segmenter;
        let bands = [
            s.min_duration,
            s.preferred_min,
            s.preferred_max,
            s.max_duration,
        ];
        if !(bands[0] > 0.0 && bands[0] < bands[1] && bands[1] <= bands[2] && bands[2] < bands[3]) {
            return Err(Error::Config(format!(
                "duration bands must satisfy 0 < min < preferred_min <= preferred_max < max, got {bands:?}"
            )));
        }
        if !(s.silence_cap > 0.0) {
            return Err(Error::Config("silence_cap must be positive".into()));
        }
        if let Some(t) = s.silence_split {
            if !(t > 0.0) {
                return Err(Error::Config("silence_split must be positive".into()));
            }
        }
        if !(0.0..=1.0).contains(&s.overlap_fraction) {
            return Err(Error::Config("overlap_fraction must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.min_chain_coverage) {
            return Err(Error::Config(
                "min_chain_coverage must lie in [0, 1]".into(),
            ));
        }
        if self.close_matches_per_side == 0
            || self.query_stride == 0
            || self.anchor_spacing == 0
            || s.partners == 0
        {
            return Err(Error::Config(
                "close_matches_per_side, query_stride, anchor_spacing and partners must be positive".into(),
            ));
        }
        Ok(())
    }

    fn align_config(&self) -> AlignConfig {
        AlignConfig {
            anchor_spacing: self.anchor_spacing,
            slack: self.block_slack,
        }
    }
}

/// A normalized book ready for matching.
#[derive(Debug, Clone)]
pub struct BookIndex {
    pub text: TextSource,
    pub target: SymbolSeq,
}

impl BookIndex {
    pub fn new(text: TextSource) -> Self {
        let target = SymbolSeq::from_symbols(&text.symbols);
        Self { text, target }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(normalize_text(
            &raw,
            &path.display().to_string(),
        )?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub chain: AnchorChain,
    /// Distinct query positions covered by the chain over the query length.
    pub coverage: f64,
    /// Target symbol span `[begin, end)`; absent when unlocatable.
    pub region: Option<(usize, usize)>,
}

impl Location {
    pub fn is_located(&self) -> bool {
        self.region.is_some()
    }
}

pub fn locate(book: &BookIndex, query: &NormalizedQuery, cfg: &PipelineConfig) -> Location {
    let qseq = SymbolSeq::from_symbols(&query.symbols);
    let opts = CloseMatchOptions {
        per_side: cfg.close_matches_per_side,
        stride: cfg.query_stride,
        algorithm: cfg.suffix_algorithm,
    };
    let pairs = find_close_matches_with(&qseq, &book.target, &opts);
    let chain = trim_chain(&longest_chain(&pairs), cfg.chain_diagonal_tolerance);
    let qlen = query.symbols.len();
    let looked_up = qlen.div_ceil(cfg.query_stride.max(1));
    let coverage = chain.query_coverage() as f64 / looked_up.max(1) as f64;
    let margin = cfg.region_margin.unwrap_or_else(|| default_margin(qlen));
    let region = if coverage >= cfg.min_chain_coverage {
        locate_region(&chain, qlen, book.text.symbols.len(), margin).ok()
    } else {
        None
    };
    Location {
        chain,
        coverage,
        region,
    }
}

/// Aligns the query against its located region. Target indices in the
/// result are document symbol indices.
pub fn align(
    book: &BookIndex,
    query: &NormalizedQuery,
    location: &Location,
    cfg: &PipelineConfig,
    use_anchors: bool,
) -> Result<(Alignment, AlignStatsReport)> {
    let (begin, end) = location.region.ok_or(Error::LocationFailed)?;
    let region = &book.text.symbols[begin..end];
    if !use_anchors {
        let a = levenshtein_align(&query.symbols, region, AlignMode::Infix);
        let cells = (query.symbols.len() as u64 + 1) * (region.len() as u64 + 1);
        return Ok((
            a.shift_target(begin),
            AlignStatsReport {
                dp_cells: cells,
                anchors_used: 0,
            },
        ));
    }
    let local = AnchorChain {
        pairs: location
            .chain
            .pairs
            .iter()
            .filter(|p| p.j >= begin && p.j < end)
            .map(|p| MatchPair::new(p.i, p.j - begin))
            .collect(),
    };
    let (a, stats) = align_with_anchors_stats(&query.symbols, region, &local, &cfg.align_config());
    Ok((
        a.shift_target(begin),
        AlignStatsReport {
            dp_cells: stats.cells,
            anchors_used: stats.anchors_used,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignStatsReport {
    pub dp_cells: u64,
    pub anchors_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordingStatus {
    Segmented,
    NoSegments,
    Unlocatable,
    EmptyQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingReport {
    pub id: String,
    pub status: RecordingStatus,
    pub query_symbols: usize,
    pub chain_length: usize,
    pub chain_coverage: f64,
    /// Aligned target symbol span.
    pub located_span: Option<(usize, usize)>,
    /// Aligned span in bytes of the original text.
    pub located_bytes: Option<(usize, usize)>,
    pub alignment_error_rate: Option<f64>,
    pub segments: usize,
    pub aligned_seconds: f64,
    pub discarded_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub book: String,
    pub recordings: usize,
    pub located: usize,
    pub segments: usize,
    pub segmented_seconds: f64,
    pub reports: Vec<RecordingReport>,
}

impl PipelineSummary {
    /// True when at least one recording produced a segment.
    pub fn succeeded(&self) -> bool {
        self.segments > 0
    }
}

/// Cuts and report for one recording.
#[derive(Debug, Clone)]
pub struct RecordingOutput {
    pub report: RecordingReport,
    pub cuts: Vec<Cut<f64>>,
}

fn byte_span(text: &TextSource, span: (usize, usize)) -> Option<(usize, usize)> {
    if span.0 >= span.1 {
        return None;
    }
    let end = text.byte_of_symbol[span.1 - 1] + 1;
    Some((text.byte_of_symbol[span.0], end))
}

/// Length of the union of `intervals` clipped to `[lo, hi]`.
fn covered_seconds(mut intervals: Vec<(f64, f64)>, lo: f64, hi: f64) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut reach = lo;
    for (s, e) in intervals {
        let s = s.max(reach);
        let e = e.min(hi);
        if e > s {
            total += e - s;
            reach = e;
        }
    }
    total
}

pub fn process_recording(
    book: &BookIndex,
    transcript: &TimedTranscript,
    speaker: &str,
    cfg: &PipelineConfig,
) -> Result<RecordingOutput> {
    let mut report = RecordingReport {
        id: transcript.recording_id.clone(),
        status: RecordingStatus::EmptyQuery,
        query_symbols: 0,
        chain_length: 0,
        chain_coverage: 0.0,
        located_span: None,
        located_bytes: None,
        alignment_error_rate: None,
        segments: 0,
        aligned_seconds: 0.0,
        discarded_seconds: 0.0,
    };
    if let (Some(first), Some(last)) = (transcript.words.first(), transcript.words.last()) {
        report.aligned_seconds = (last.end - first.start).max(0.0);
        report.discarded_seconds = report.aligned_seconds;
    }
    let query = match normalize_transcript(transcript) {
        Ok(q) => q,
        Err(Error::EmptyQuery) => {
            warn!(
                "{}: transcript has no usable symbols",
                transcript.recording_id
            );
            return Ok(RecordingOutput {
                report,
                cuts: Vec::new(),
            });
        }
        Err(e) => return Err(e),
    };
    report.query_symbols = query.symbols.len();

    let location = locate(book, &query, cfg);
    report.chain_length = location.chain.len();
    report.chain_coverage = location.coverage;
    if !location.is_located() {
        warn!(
            "{}: unlocatable (chain covers {:.1}% of the query)",
            transcript.recording_id,
            100.0 * location.coverage
        );
        report.status = RecordingStatus::Unlocatable;
        return Ok(RecordingOutput {
            report,
            cuts: Vec::new(),
        });
    }

    let (alignment, _) = align(book, &query, &location, cfg, true)?;
    let span = (alignment.t_span.start, alignment.t_span.end);
    report.located_span = Some(span);
    report.located_bytes = byte_span(&book.text, span);
    report.alignment_error_rate = Some(alignment.cost as f64 / query.symbols.len() as f64);

    let input = SegmentInput {
        text: &book.text,
        alignment: &alignment,
        query: &query,
        transcript,
    };
    let selected = segment(&input, &cfg.segmenter).selected;
    let cuts = selected
        .iter()
        .enumerate()
        .map(|(k, seg)| {
            emit_cut(
                format!("{}-{:04}", transcript.recording_id, k),
                seg,
                &book.text,
                cfg.context_bytes,
                speaker,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    report.segments = cuts.len();
    report.status = if cuts.is_empty() {
        RecordingStatus::NoSegments
    } else {
        RecordingStatus::Segmented
    };
    if let (Some(first), Some(last)) = (transcript.words.first(), transcript.words.last()) {
        let covered = covered_seconds(
            selected.iter().map(|s| (s.start(), s.end())).collect(),
            first.start,
            last.end,
        );
        report.discarded_seconds = (report.aligned_seconds - covered).max(0.0);
    }
    info!(
        "{}: {} segments, error rate {:.3}",
        report.id,
        report.segments,
        report.alignment_error_rate.unwrap_or(0.0)
    );
    Ok(RecordingOutput { report, cuts })
}

/// Runs `f` on every transcript on a pool of `jobs` threads and returns the
/// results ordered by recording id.
pub fn map_recordings<R, F>(transcripts: &[TimedTranscript], jobs: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&TimedTranscript) -> Result<R> + Sync + Send,
{
    let mut order: Vec<&TimedTranscript> = transcripts.iter().collect();
    order.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| order.par_iter().map(|t| f(t)).collect())
}

/// Processes all transcripts against one book.
pub fn run_recordings(
    book: &BookIndex,
    transcripts: &[TimedTranscript],
    speakers: &HashMap<String, String>,
    cfg: &PipelineConfig,
) -> Result<(Vec<Cut<f64>>, PipelineSummary)> {
    cfg.validate()?;
    let outputs = map_recordings(transcripts, cfg.jobs, |t| {
        let speaker = speakers
            .get(&t.recording_id)
            .map(String::as_str)
            .unwrap_or("");
        process_recording(book, t, speaker, cfg)
    })?;
    let mut cuts = Vec::new();
    let mut reports = Vec::with_capacity(outputs.len());
    for out in outputs {
        cuts.extend(out.cuts);
        reports.push(out.report);
    }
    let summary = PipelineSummary {
        book: book.text.text_path.clone(),
        recordings: reports.len(),
        located: reports.iter().filter(|r| r.located_span.is_some()).count(),
        segments: cuts.len(),
        segmented_seconds: cuts.iter().map(|c| c.duration).sum(),
        reports,
    };
    Ok((cuts, summary))
}

pub fn load_transcripts(path: &Path) -> Result<Vec<TimedTranscript>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_transcripts(BufReader::new(file))
}

pub fn load_speakers(path: Option<&Path>) -> Result<HashMap<String, String>> {
    match path {
        None => Ok(HashMap::new()),
        Some(p) => {
            let file = File::open(p).map_err(|e| Error::io(p, e))?;
            read_speakers(BufReader::new(file))
        }
    }
}

/// Full pipeline from files: writes the cuts JSONL to `out` and returns the
/// summary.
pub fn run_pipeline(
    book: &Path,
    transcripts: &Path,
    out: &Path,
    speakers: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<PipelineSummary> {
    let book = BookIndex::load(book)?;
    let transcripts = load_transcripts(transcripts)?;
    let speakers = load_speakers(speakers)?;
    let (cuts, summary) = run_recordings(&book, &transcripts, &speakers, cfg)?;
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut writer = BufWriter::new(file);
    write_cuts(&cuts, &mut writer)?;
    writer.flush()?;
    Ok(summary)
}

/// Output of the `locate` stage for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateRecord {
    pub id: String,
    pub query_symbols: usize,
    pub coverage: f64,
    pub locatable: bool,
    pub region: Option<(usize, usize)>,
    pub chain: Vec<(usize, usize)>,
}

pub fn locate_stage(
    book: &BookIndex,
    transcript: &TimedTranscript,
    cfg: &PipelineConfig,
) -> Result<LocateRecord> {
    let query = normalize_transcript(transcript)?;
    let loc = locate(book, &query, cfg);
    Ok(LocateRecord {
        id: transcript.recording_id.clone(),
        query_symbols: query.symbols.len(),
        coverage: loc.coverage,
        locatable: loc.is_located(),
        region: loc.region,
        chain: loc.chain.pairs.iter().map(|p| (p.i, p.j)).collect(),
    })
}

/// Output of the `align` stage for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignRecord {
    pub id: String,
    pub q_span: (usize, usize),
    pub t_span: (usize, usize),
    pub cost: usize,
    pub error_rate: f64,
    pub dp_cells: u64,
    pub anchors_used: usize,
    pub ops: String,
}

pub fn align_stage(
    book: &BookIndex,
    transcript: &TimedTranscript,
    cfg: &PipelineConfig,
    use_anchors: bool,
) -> Result<AlignRecord> {
    let query = normalize_transcript(transcript)?;
    let loc = locate(book, &query, cfg);
    let (a, stats) = align(book, &query, &loc, cfg, use_anchors)?;
    Ok(AlignRecord {
        id: transcript.recording_id.clone(),
        q_span: (a.q_span.start, a.q_span.end),
        t_span: (a.t_span.start, a.t_span.end),
        cost: a.cost,
        error_rate: a.cost as f64 / query.symbols.len() as f64,
        dp_cells: stats.dp_cells,
        anchors_used: stats.anchors_used,
        ops: a.op_string(),
    })
}

/// Output of the `segment` stage for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    pub boundaries: Vec<BoundaryCandidate<f64>>,
    pub candidates: Vec<SegmentCandidate<f64>>,
    pub selected: Vec<SegmentCandidate<f64>>,
}

pub fn segment_stage(
    book: &BookIndex,
    transcript: &TimedTranscript,
    cfg: &PipelineConfig,
) -> Result<SegmentRecord> {
    let query = normalize_transcript(transcript)?;
    let loc = locate(book, &query, cfg);
    let (alignment, _) = align(book, &query, &loc, cfg, true)?;
    let out = segment(
        &SegmentInput {
            text: &book.text,
            alignment: &alignment,
            query: &query,
            transcript,
        },
        &cfg.segmenter,
    );
    Ok(SegmentRecord {
        id: transcript.recording_id.clone(),
        boundaries: out.boundaries,
        candidates: out.candidates,
        selected: out.selected,
    })
}
