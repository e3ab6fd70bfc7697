//! Text normalization onto the matching alphabet.
//!
//! Both the reference text and the transcript are reduced to uppercase ASCII
//! letters, digits and single spaces. Every emitted symbol keeps a tag that
//! points back to where it came from: a byte offset into the raw document,
//! or a word index into the transcript.
//!
//! Classification of each input character:
//!
//! * ASCII letters and digits are kept (letters uppercased).
//! * Apostrophes and non-ASCII letters or digits are deleted in place, so
//!   `it's` becomes `ITS`.
//! * Whitespace and all remaining punctuation separate words. A run of
//!   separators collapses to one space and leading/trailing runs vanish.

use crate::error::{Error, Result};
use crate::manifest::TimedTranscript;
use crate::scalar::Scalar;

/// Space symbol of the normalized alphabet.
pub const SPACE: u8 = b' ';

/// Number of codes used by [`symbol_code`], including the sentinel code 0.
pub const ALPHABET_SIZE: u32 = 38;

/// Dense code for a normalized symbol: space is 1, digits 2..=11, letters
/// 12..=37. Code 0 is reserved for the suffix array sentinel.
pub fn symbol_code(sym: u8) -> u32 {
    match sym {
        b' ' => 1,
        b'0'..=b'9' => 2 + u32::from(sym - b'0'),
        b'A'..=b'Z' => 12 + u32::from(sym - b'A'),
        _ => panic!("not a normalized symbol: {sym:#04x}"),
    }
}

/// Returns true if `sym` belongs to the normalized alphabet.
pub fn is_symbol(sym: u8) -> bool {
    sym == SPACE || sym.is_ascii_digit() || sym.is_ascii_uppercase()
}

/// A reference document and its normalized symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextSource {
    pub text_path: String,
    pub raw: Vec<u8>,
    pub symbols: Vec<u8>,
    /// Offset into `raw` of the first byte that produced each symbol.
    pub byte_of_symbol: Vec<usize>,
}

impl TextSource {
    /// The raw document as a string. Construction guarantees valid UTF-8.
    pub fn raw_str(&self) -> &str {
        std::str::from_utf8(&self.raw).expect("TextSource holds validated UTF-8")
    }
}

/// Normalized transcript symbols, each tagged with its source word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedQuery {
    pub symbols: Vec<u8>,
    pub word_of_symbol: Vec<usize>,
}

enum Class {
    Keep(u8),
    Separate,
    Drop,
}

fn classify(c: char) -> Class {
    if c.is_ascii_alphanumeric() {
        return Class::Keep(c.to_ascii_uppercase() as u8);
    }
    match c {
        '\'' | '\u{2018}' | '\u{2019}' | '\u{02bc}' => Class::Drop,
        '\u{0300}'..='\u{036f}' => Class::Drop,
        c if c.is_alphanumeric() => Class::Drop,
        _ => Class::Separate,
    }
}

/// Streaming collapse of characters into tagged symbols.
struct Collapser<T> {
    symbols: Vec<u8>,
    tags: Vec<T>,
    pending: Option<T>,
}

impl<T: Copy> Collapser<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            symbols: Vec::with_capacity(n),
            tags: Vec::with_capacity(n),
            pending: None,
        }
    }

    fn push(&mut self, c: char, tag: T) {
        match classify(c) {
            Class::Keep(sym) => {
                if let Some(space_tag) = self.pending.take() {
                    if !self.symbols.is_empty() {
                        self.symbols.push(SPACE);
                        self.tags.push(space_tag);
                    }
                }
                self.symbols.push(sym);
                self.tags.push(tag);
            }
            Class::Separate => self.separate(tag),
            Class::Drop => {}
        }
    }

    fn separate(&mut self, tag: T) {
        if self.pending.is_none() {
            self.pending = Some(tag);
        }
    }

    fn finish(self) -> (Vec<u8>, Vec<T>) {
        (self.symbols, self.tags)
    }
}

/// Normalizes a UTF-8 document, keeping a byte offset for every symbol.
pub fn normalize_text(raw: &[u8], path: &str) -> Result<TextSource> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Decode {
        path: path.to_string(),
        offset: e.valid_up_to(),
    })?;
    let mut collapser = Collapser::with_capacity(raw.len());
    for (offset, c) in text.char_indices() {
        collapser.push(c, offset);
    }
    let (symbols, byte_of_symbol) = collapser.finish();
    Ok(TextSource {
        text_path: path.to_string(),
        raw: raw.to_vec(),
        symbols,
        byte_of_symbol,
    })
}

/// Normalizes a string without tracking offsets.
pub fn normalize_str(text: &str) -> String {
    let mut collapser = Collapser::with_capacity(text.len());
    for c in text.chars() {
        collapser.push(c, ());
    }
    let (symbols, _) = collapser.finish();
    String::from_utf8(symbols).expect("normalized symbols are ASCII")
}

/// Normalizes transcript words into one query. The space between two words
/// is attributed to the earlier word.
pub fn normalize_transcript<T: Scalar>(transcript: &TimedTranscript<T>) -> Result<NormalizedQuery> {
    transcript.validate()?;
    let mut collapser = Collapser::with_capacity(transcript.words.len() * 6);
    for (w, word) in transcript.words.iter().enumerate() {
        for c in word.word.chars() {
            collapser.push(c, w);
        }
        collapser.separate(w);
    }
    let (symbols, word_of_symbol) = collapser.finish();
    if symbols.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(NormalizedQuery {
        symbols,
        word_of_symbol,
    })
}
