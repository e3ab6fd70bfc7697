//! Suffix array construction.
//!
//! The default builder is the difference-cover (DC3, "skew") algorithm of
//! Kärkkäinen and Sanders: sort the suffixes at positions `i mod 3 != 0`
//! recursively through their character triples, derive the order of the
//! remaining third with one radix pass, then merge. It runs in `O(n)` time
//! for integer alphabets of size `O(n)`.
//!
//! [`SuffixAlgorithm::PrefixDoubling`] is an `O(n log^2 n)` alternative kept
//! behind the same interface for cross-checking.

use crate::error::{Error, Result};
use crate::normalize::{symbol_code, ALPHABET_SIZE};

/// Code of the end-of-sequence sentinel.
pub const SENTINEL: u32 = 0;

/// Alphabet-coded sequence terminated by a unique sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeq {
    data: Vec<u32>,
    alphabet_size: u32,
}

impl SymbolSeq {
    /// Wraps coded data. The last value must be the sentinel and no other
    /// value may be; every value must be below `alphabet_size`.
    pub fn new(data: Vec<u32>, alphabet_size: u32) -> Result<Self> {
        match data.iter().position(|&v| v == SENTINEL) {
            None => return Err(Error::SymbolSeq("missing sentinel".into())),
            Some(p) if p + 1 != data.len() => {
                return Err(Error::SymbolSeq(format!(
                    "sentinel at position {p} is not the last of {} values",
                    data.len()
                )))
            }
            Some(_) => {}
        }
        if let Some(&v) = data.iter().find(|&&v| v >= alphabet_size) {
            return Err(Error::SymbolSeq(format!(
                "value {v} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(Self {
            data,
            alphabet_size,
        })
    }

    /// Codes normalized symbols densely from 1 and appends the sentinel.
    pub fn from_symbols(symbols: &[u8]) -> Self {
        let mut data: Vec<u32> = symbols.iter().map(|&s| symbol_code(s)).collect();
        data.push(SENTINEL);
        Self {
            data,
            alphabet_size: ALPHABET_SIZE,
        }
    }

    /// All values, sentinel included.
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    /// Values without the trailing sentinel.
    pub fn body(&self) -> &[u32] {
        &self.data[..self.data.len() - 1]
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    /// Length including the sentinel.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuffixAlgorithm {
    #[default]
    Dc3,
    PrefixDoubling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixArray {
    pub sa: Vec<usize>,
    pub rank: Vec<usize>,
}

impl SuffixArray {
    pub fn len(&self) -> usize {
        self.sa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sa.is_empty()
    }
}

/// Builds the suffix array of `seq` with the DC3 algorithm.
pub fn build_suffix_array(seq: &SymbolSeq) -> SuffixArray {
    build_suffix_array_with(seq, SuffixAlgorithm::Dc3)
}

pub fn build_suffix_array_with(seq: &SymbolSeq, algorithm: SuffixAlgorithm) -> SuffixArray {
    let sa = match algorithm {
        SuffixAlgorithm::Dc3 => dc3_sort(seq.data(), seq.alphabet_size() as usize),
        SuffixAlgorithm::PrefixDoubling => prefix_doubling(seq.data()),
    };
    let mut rank = vec![0; sa.len()];
    for (k, &p) in sa.iter().enumerate() {
        rank[p] = k;
    }
    SuffixArray { sa, rank }
}

/// Suffix sorts arbitrary values below `alphabet_size`. Shifts every value
/// up by one so that 0 can pad the end.
fn dc3_sort(data: &[u32], alphabet_size: usize) -> Vec<usize> {
    let n = data.len();
    if n < 3 {
        return prefix_doubling(data);
    }
    let mut s: Vec<usize> = Vec::with_capacity(n + 3);
    s.extend(data.iter().map(|&v| v as usize + 1));
    s.extend([0, 0, 0]);
    let mut sa = vec![0; n];
    dc3(&s, &mut sa, n, alphabet_size + 1);
    sa
}

/// Stable counting sort of the indices in `src` by key `r[src[i]]`.
fn radix_pass(src: &[usize], dst: &mut [usize], r: &[usize], n: usize, k: usize) {
    let mut count = vec![0usize; k + 1];
    for &a in &src[..n] {
        count[r[a]] += 1;
    }
    let mut sum = 0;
    for c in count.iter_mut() {
        let t = *c;
        *c = sum;
        sum += t;
    }
    for &a in &src[..n] {
        dst[count[r[a]]] = a;
        count[r[a]] += 1;
    }
}

#[inline]
fn leq2(a1: usize, a2: usize, b1: usize, b2: usize) -> bool {
    a1 < b1 || (a1 == b1 && a2 <= b2)
}

#[inline]
fn leq3(a1: usize, a2: usize, a3: usize, b1: usize, b2: usize, b3: usize) -> bool {
    a1 < b1 || (a1 == b1 && leq2(a2, a3, b2, b3))
}

/// `s` has length `n + 3` with `s[n..] == [0, 0, 0]` and values in `1..=k`.
fn dc3(s: &[usize], sa: &mut [usize], n: usize, k: usize) {
    let n0 = n.div_ceil(3);
    let n1 = (n + 1) / 3;
    let n2 = n / 3;
    let n02 = n0 + n2;

    let mut s12 = vec![0usize; n02 + 3];
    let mut sa12 = vec![0usize; n02 + 3];
    let mut s0 = vec![0usize; n0];
    let mut sa0 = vec![0usize; n0];

    // Positions i mod 3 != 0, plus a dummy mod-1 position when n0 > n1.
    let mut j = 0;
    for i in 0..n + (n0 - n1) {
        if i % 3 != 0 {
            s12[j] = i;
            j += 1;
        }
    }

    radix_pass(&s12, &mut sa12, &s[2..], n02, k);
    radix_pass(&sa12, &mut s12, &s[1..], n02, k);
    radix_pass(&s12, &mut sa12, s, n02, k);

    // Lexicographic names of the triples.
    let mut name = 0;
    let mut last = (usize::MAX, usize::MAX, usize::MAX);
    for &p in &sa12[..n02] {
        let triple = (s[p], s[p + 1], s[p + 2]);
        if triple != last {
            name += 1;
            last = triple;
        }
        if p % 3 == 1 {
            s12[p / 3] = name;
        } else {
            s12[p / 3 + n0] = name;
        }
    }

    if name < n02 {
        dc3(&s12, &mut sa12[..n02], n02, name);
        for (i, &p) in sa12[..n02].iter().enumerate() {
            s12[p] = i + 1;
        }
    } else {
        for i in 0..n02 {
            sa12[s12[i] - 1] = i;
        }
    }

    let mut j = 0;
    for &p in &sa12[..n02] {
        if p < n0 {
            s0[j] = 3 * p;
            j += 1;
        }
    }
    radix_pass(&s0, &mut sa0, s, n0, k);

    let pos12 = |t: usize, sa12: &[usize]| {
        if sa12[t] < n0 {
            sa12[t] * 3 + 1
        } else {
            (sa12[t] - n0) * 3 + 2
        }
    };

    let mut p = 0;
    let mut t = n0 - n1;
    let mut out = 0;
    while out < n {
        let i = pos12(t, &sa12);
        let j = sa0[p];
        let twelve_first = if sa12[t] < n0 {
            leq2(s[i], s12[sa12[t] + n0], s[j], s12[j / 3])
        } else {
            leq3(
                s[i],
                s[i + 1],
                s12[sa12[t] - n0 + 1],
                s[j],
                s[j + 1],
                s12[j / 3 + n0],
            )
        };
        if twelve_first {
            sa[out] = i;
            t += 1;
            if t == n02 {
                out += 1;
                while p < n0 {
                    sa[out] = sa0[p];
                    p += 1;
                    out += 1;
                }
            }
        } else {
            sa[out] = j;
            p += 1;
            if p == n0 {
                out += 1;
                while t < n02 {
                    sa[out] = pos12(t, &sa12);
                    t += 1;
                    out += 1;
                }
            }
        }
        out += 1;
    }
}

/// Manber-Myers style rank doubling with comparison sorts.
fn prefix_doubling(data: &[u32]) -> Vec<usize> {
    let n = data.len();
    let mut sa: Vec<usize> = (0..n).collect();
    let mut rank: Vec<usize> = data.iter().map(|&v| v as usize).collect();
    let mut next = vec![0usize; n];
    let mut h = 1;
    loop {
        let key = |i: usize| (rank[i], if i + h < n { rank[i + h] + 1 } else { 0 });
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0]] = 0;
        for w in 1..n {
            next[sa[w]] = next[sa[w - 1]] + usize::from(key(sa[w - 1]) != key(sa[w]));
        }
        std::mem::swap(&mut rank, &mut next);
        if n == 0 || rank[sa[n - 1]] == n - 1 || h >= n {
            break;
        }
        h *= 2;
    }
    sa
}
