//! Synthetic books and timed transcripts with known ground truth.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use textanchor::normalize::normalize_str;
use textanchor::{TimedTranscript, TimedWord};

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "br",
    "ch", "cl", "dr", "fl", "gr", "pl", "pr", "sh", "st", "th", "tr", "wh",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ee", "oo", "ou", "ie"];
const CODAS: &[&str] = &["", "", "n", "r", "s", "t", "l", "m", "nd", "st", "ck", "ng"];

/// A vocabulary of random pseudo-words.
pub fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let syllables = rng.gen_range(1..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
            w.push_str(CODAS.choose(rng).unwrap());
        }
        words.push(w);
    }
    words
}

/// Word of the book with the byte span it occupies.
#[derive(Debug, Clone)]
pub struct BookWord {
    /// As written, with trailing punctuation.
    pub written: String,
    pub begin: usize,
    pub end: usize,
    pub sentence_end: bool,
}

#[derive(Debug, Clone)]
pub struct Book {
    pub text: String,
    pub words: Vec<BookWord>,
    /// Word index that starts each sentence.
    pub sentence_starts: Vec<usize>,
}

/// Generates a book of at least `min_chars` bytes with sentences ending in
/// `.`, `?` or `!`, occasional commas and paragraph breaks.
pub fn book(rng: &mut ChaCha8Rng, vocab: &[String], min_chars: usize) -> Book {
    let mut text = String::from("Chapter One\n\n");
    let mut words = Vec::new();
    let mut sentence_starts = Vec::new();
    while text.len() < min_chars {
        sentence_starts.push(words.len());
        let n = rng.gen_range(6..=22);
        for k in 0..n {
            let mut w = vocab.choose(rng).unwrap().clone();
            if k == 0 {
                w[..1].make_ascii_uppercase();
            }
            let last = k + 1 == n;
            let mut written = w;
            if last {
                let r: f64 = rng.gen();
                written.push(if r < 0.75 {
                    '.'
                } else if r < 0.9 {
                    '?'
                } else {
                    '!'
                });
            } else if rng.gen_bool(0.08) {
                written.push(',');
            }
            let begin = text.len();
            text.push_str(&written);
            words.push(BookWord {
                end: text.len(),
                begin,
                written,
                sentence_end: last,
            });
            if last && rng.gen_bool(0.15) {
                text.push_str("\n\n");
            } else {
                text.push(' ');
            }
        }
    }
    Book {
        text,
        words,
        sentence_starts,
    }
}

/// A passage of the book read aloud, with its clean timeline.
#[derive(Debug, Clone)]
pub struct Passage {
    pub id: String,
    /// Book word range.
    pub words: std::ops::Range<usize>,
    pub begin_byte: usize,
    pub end_byte: usize,
    /// Clean per-word timing, one entry per book word of the passage.
    pub timeline: Vec<(f64, f64)>,
    pub transcript: TimedTranscript,
}

/// Samples `count` passages of whole sentences and speaks them.
pub fn passages(rng: &mut ChaCha8Rng, book: &Book, count: usize, corruption: f64) -> Vec<Passage> {
    let mut out = Vec::with_capacity(count);
    for p in 0..count {
        let n_sent = rng.gen_range(8..=20);
        let first = rng.gen_range(0..book.sentence_starts.len() - n_sent);
        let w0 = book.sentence_starts[first];
        let w1 = book.sentence_starts[first + n_sent];
        out.push(speak(rng, book, format!("rec{p:03}"), w0..w1, corruption));
    }
    out
}

/// Times every word and corrupts letters at rate `corruption`.
pub fn speak(
    rng: &mut ChaCha8Rng,
    book: &Book,
    id: String,
    range: std::ops::Range<usize>,
    corruption: f64,
) -> Passage {
    let mut t = rng.gen_range(0.2..1.0);
    let mut timeline = Vec::with_capacity(range.len());
    let mut words = Vec::with_capacity(range.len());
    for w in &book.words[range.clone()] {
        let clean = normalize_str(&w.written);
        let dur = 0.12 + 0.055 * clean.len() as f64;
        timeline.push((t, t + dur));
        let heard = corrupt_letters(rng, &clean, corruption);
        if !heard.is_empty() {
            words.push(TimedWord {
                word: heard,
                start: t,
                end: t + dur,
            });
        }
        t += dur;
        t += if w.sentence_end {
            rng.gen_range(0.5..2.0)
        } else {
            rng.gen_range(0.02..0.15)
        };
    }
    Passage {
        begin_byte: book.words[range.start].begin,
        end_byte: book.words[range.end - 1].end,
        words: range,
        timeline,
        transcript: TimedTranscript {
            recording_id: id.clone(),
            audio_path: format!("{id}.flac"),
            words,
        },
        id,
    }
}

fn corrupt_letters(rng: &mut ChaCha8Rng, word: &str, rate: f64) -> String {
    let mut out = String::with_capacity(word.len() + 2);
    for c in word.chars() {
        if rng.gen_bool(rate) {
            match rng.gen_range(0..3) {
                0 => out.push(random_letter(rng)),
                1 => {}
                _ => {
                    out.push(c);
                    out.push(random_letter(rng));
                }
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn random_letter(rng: &mut ChaCha8Rng) -> char {
    (b'A' + rng.gen_range(0..26u8)) as char
}

/// Textbook edit distance.
pub fn edit_distance(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            cur[j] = (prev[j - 1] + usize::from(a[i - 1] != b[j - 1]))
                .min(prev[j] + 1)
                .min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Normalized book text of the passage words whose clean timing midpoint
/// falls inside `[start, end]`.
pub fn spoken_text(book: &Book, passage: &Passage, start: f64, end: f64) -> String {
    let words: Vec<&str> = passage
        .words
        .clone()
        .zip(&passage.timeline)
        .filter(|(_, (s, e))| {
            let mid = (s + e) / 2.0;
            mid >= start && mid <= end
        })
        .map(|(w, _)| book.words[w].written.as_str())
        .collect();
    normalize_str(&words.join(" "))
}

/// Fraction of `[lo, hi]` covered by the union of `intervals`.
pub fn coverage(mut intervals: Vec<(f64, f64)>, lo: f64, hi: f64) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered = 0.0;
    let mut reach = lo;
    for (s, e) in intervals {
        let (s, e) = (s.max(reach), e.min(hi));
        if e > s {
            covered += e - s;
            reach = e;
        }
    }
    covered / (hi - lo)
}
