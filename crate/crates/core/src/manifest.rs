//! Transcript input and cut output, both as JSON lines.
//!
//! Transcript lines look like
//! `{"id": "rec1", "audio_path": "rec1.flac", "words": [{"word": "Hi", "start": 0.0, "end": 0.3}]}`.
//! Cut lines carry exactly `id`, `start`, `duration`, `text`, `pre_texts`,
//! `begin_byte`, `end_byte`, `text_path` and `speaker`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::TextSource;
use crate::scalar::Scalar;
use crate::segmenter::SegmentCandidate;

/// Default number of context bytes stored in `pre_texts`.
pub const DEFAULT_CONTEXT_BYTES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TimedWord<T> {
    pub word: String,
    pub start: T,
    pub end: T,
}

impl<T: Scalar> TimedWord<T> {
    pub fn midpoint(&self) -> T {
        (self.start + self.end) / T::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TimedTranscript<T> {
    #[serde(rename = "id")]
    pub recording_id: String,
    pub audio_path: String,
    pub words: Vec<TimedWord<T>>,
}

impl<T: Scalar> TimedTranscript<T> {
    /// Checks `0 <= start <= end` per word and ordering by start time.
    pub fn validate(&self) -> Result<()> {
        for (k, w) in self.words.iter().enumerate() {
            if !(w.start >= T::zero() && w.end >= w.start) {
                return Err(Error::Transcript(format!(
                    "{}: word {k} ({:?}) has invalid times {}..{}",
                    self.recording_id, w.word, w.start, w.end
                )));
            }
        }
        if let Some(k) = self.words.windows(2).position(|p| p[1].start < p[0].start) {
            return Err(Error::Transcript(format!(
                "{}: word {} starts before word {k}",
                self.recording_id,
                k + 1
            )));
        }
        Ok(())
    }
}

/// Transcript of one fixed window of a longer recording. Word times are
/// absolute within the recording.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk<T> {
    pub start: T,
    pub end: T,
    pub transcript: TimedTranscript<T>,
}

/// Merges overlapping chunk transcripts into one.
///
/// Where two neighbouring chunks overlap, the earlier chunk keeps the words
/// whose midpoint lies before the middle of the overlap and the later chunk
/// keeps the rest.
pub fn merge_chunk_transcripts<T: Scalar>(chunks: &[AudioChunk<T>]) -> Result<TimedTranscript<T>> {
    let first = match chunks.first() {
        Some(c) => c,
        None => return Err(Error::Transcript("no chunks to merge".into())),
    };
    for (k, pair) in chunks.windows(2).enumerate() {
        if pair[1].start < pair[0].start {
            return Err(Error::ChunkOrder {
                index: k + 1,
                start: pair[1].start.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let two = T::lit(2.0);
    // Cut points between consecutive chunks.
    let cuts: Vec<T> = chunks
        .windows(2)
        .map(|p| (p[1].start + p[0].end.min(p[1].end)) / two)
        .collect();

    let mut words: Vec<TimedWord<T>> = Vec::new();
    for (k, chunk) in chunks.iter().enumerate() {
        let lo = if k == 0 { None } else { Some(cuts[k - 1]) };
        let hi = cuts.get(k).copied();
        words.extend(
            chunk
                .transcript
                .words
                .iter()
                .filter(|w| {
                    let mid = w.midpoint();
                    lo.is_none_or(|lo| mid >= lo) && hi.is_none_or(|hi| mid < hi)
                })
                .cloned(),
        );
    }
    words.sort_by(|a, b| {
        a.start
            .partial_cmp(&b.start)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    words.dedup();
    let merged = TimedTranscript {
        recording_id: first.transcript.recording_id.clone(),
        audio_path: first.transcript.audio_path.clone(),
        words,
    };
    merged.validate()?;
    Ok(merged)
}

/// Reads one transcript per line. Blank lines are skipped.
pub fn read_transcripts<T: Scalar, R: BufRead>(input: R) -> Result<Vec<TimedTranscript<T>>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TimedTranscript<T> = serde_json::from_str(&line).map_err(|source| Error::Parse {
            line: k + 1,
            source,
        })?;
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_transcripts<T: Scalar, W: Write>(
    transcripts: &[TimedTranscript<T>],
    mut out: W,
) -> Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SpeakerLine {
    id: String,
    speaker: String,
}

/// Reads a recording-metadata sidecar: lines of `{"id": ..., "speaker": ...}`.
pub fn read_speakers<R: BufRead>(input: R) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: SpeakerLine = serde_json::from_str(&line).map_err(|source| Error::Parse {
            line: k + 1,
            source,
        })?;
        out.insert(s.id, s.speaker);
    }
    Ok(out)
}

/// One training segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Cut<T> {
    pub id: String,
    pub start: T,
    pub duration: T,
    pub text: String,
    pub pre_texts: String,
    pub begin_byte: usize,
    pub end_byte: usize,
    pub text_path: String,
    pub speaker: String,
}

fn round_ms<T: Scalar>(x: T) -> T {
    let k = T::lit(1000.0);
    (x * k).round() / k
}

/// Largest char boundary of `s` that is `<= at`.
fn floor_boundary(s: &str, mut at: usize) -> usize {
    while !s.is_char_boundary(at) {
        at -= 1;
    }
    at
}

/// Smallest char boundary of `s` that is `>= at`.
fn ceil_boundary(s: &str, mut at: usize) -> usize {
    while !s.is_char_boundary(at) {
        at += 1;
    }
    at
}

/// Builds the cut record for a selected segment. Times are rounded to
/// milliseconds.
pub fn emit_cut<T: Scalar>(
    id: String,
    seg: &SegmentCandidate<T>,
    text: &TextSource,
    ctx_bytes: usize,
    speaker: &str,
) -> Result<Cut<T>> {
    let raw = text.raw_str();
    let begin = seg.bos.byte_index;
    let end = seg.eos.byte_index;
    if begin >= end || end > raw.len() || !raw.is_char_boundary(begin) || !raw.is_char_boundary(end)
    {
        return Err(Error::Invariant(format!(
            "segment {id} maps to bad byte span {begin}..{end} of {}",
            raw.len()
        )));
    }
    let ctx_begin = ceil_boundary(raw, begin.saturating_sub(ctx_bytes));
    let start = round_ms(seg.bos.time_s);
    let duration = round_ms(seg.eos.time_s) - start;
    Ok(Cut {
        id,
        start,
        duration,
        text: raw[begin..end].to_string(),
        pre_texts: raw[ctx_begin..floor_boundary(raw, begin)].to_string(),
        begin_byte: begin,
        end_byte: end,
        text_path: text.text_path.clone(),
        speaker: speaker.to_string(),
    })
}

pub fn write_cuts<T: Scalar, W: Write>(cuts: &[Cut<T>], mut out: W) -> Result<()> {
    for cut in cuts {
        serde_json::to_writer(&mut out, cut)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_cuts<T: Scalar, R: BufRead>(input: R) -> Result<Vec<Cut<T>>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Parse {
            line: k + 1,
            source,
        })?);
    }
    Ok(out)
}
