//! Deterministic canonical Huffman codes over class labels.
//!
//! Construction merges the two lightest subtrees, comparing first by weight
//! and then by the smallest symbol each subtree contains, so the resulting
//! code lengths depend only on the frequency vector. Codes are then assigned
//! canonically in (length, symbol) order. A lone present symbol gets a 1-bit
//! code.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::bits::{BitReader, BitWriter};
use crate::{Error, Result};

/// Longest code the decoder accepts. Optimal codes over `u64` counts never
/// exceed ~92 bits.
pub const MAX_CODE_LEN: u8 = 120;

/// Optimal prefix-code lengths for `freqs`; absent symbols get length 0.
pub fn code_lengths(freqs: &[u64]) -> Vec<u8> {
    let mut lengths = vec![0u8; freqs.len()];
    let present: Vec<usize> = (0..freqs.len()).filter(|&s| freqs[s] > 0).collect();
    match present.len() {
        0 => return lengths,
        1 => {
            lengths[present[0]] = 1;
            return lengths;
        }
        _ => {}
    }

    // Node arena: leaves first, then internal nodes as they are created.
    let mut parent: Vec<usize> = Vec::with_capacity(2 * present.len());
    let mut heap = BinaryHeap::with_capacity(present.len());
    for (node, &sym) in present.iter().enumerate() {
        parent.push(usize::MAX);
        heap.push(Reverse((freqs[sym] as u128, sym, node)));
    }
    while heap.len() > 1 {
        let Reverse((w1, s1, a)) = heap.pop().unwrap();
        let Reverse((w2, s2, b)) = heap.pop().unwrap();
        let node = parent.len();
        parent.push(usize::MAX);
        parent[a] = node;
        parent[b] = node;
        heap.push(Reverse((w1 + w2, s1.min(s2), node)));
    }

    // Parents always have larger ids than children, so one reverse sweep
    // resolves every depth.
    let mut depth = vec![0u8; parent.len()];
    for node in (0..parent.len()).rev() {
        if parent[node] != usize::MAX {
            depth[node] = depth[parent[node]] + 1;
        }
    }
    for (leaf, &sym) in present.iter().enumerate() {
        lengths[sym] = depth[leaf];
    }
    lengths
}

/// Canonical code table derived from code lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    lengths: Vec<u8>,
    codes: Vec<u128>,
}

impl HuffmanTable {
    pub fn from_frequencies(freqs: &[u64]) -> Self {
        Self::from_lengths(code_lengths(freqs)).expect("constructed lengths are a prefix code")
    }

    /// Validates the lengths and assigns canonical codes.
    pub fn from_lengths(lengths: Vec<u8>) -> Result<Self> {
        if lengths.iter().any(|&l| l > MAX_CODE_LEN) {
            return Err(Error::NonCanonical(
                "code length exceeds the supported maximum",
            ));
        }
        if kraft_excess(&lengths) {
            return Err(Error::KraftViolation);
        }
        let mut order: Vec<usize> = (0..lengths.len()).filter(|&s| lengths[s] > 0).collect();
        order.sort_by_key(|&s| (lengths[s], s));
        let mut codes = vec![0u128; lengths.len()];
        let mut code = 0u128;
        let mut prev_len = 0u8;
        for (i, &sym) in order.iter().enumerate() {
            let len = lengths[sym];
            if i > 0 {
                code += 1;
            }
            code <<= len - prev_len;
            prev_len = len;
            codes[sym] = code;
        }
        Ok(Self { lengths, codes })
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    pub fn code(&self, symbol: usize) -> (u128, u8) {
        (self.codes[symbol], self.lengths[symbol])
    }

    /// Sum of `freq * length`, i.e. the encoded stream length in bits.
    pub fn cost(&self, freqs: &[u64]) -> u64 {
        freqs
            .iter()
            .zip(&self.lengths)
            .map(|(&f, &l)| f * l as u64)
            .sum()
    }

    pub(crate) fn write_symbol(&self, symbol: usize, out: &mut BitWriter) {
        let (code, len) = self.code(symbol);
        out.write(code, len);
    }

    pub(crate) fn decoder(&self) -> Decoder {
        let max = self.lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut count = vec![0u128; max + 1];
        for &l in &self.lengths {
            if l > 0 {
                count[l as usize] += 1;
            }
        }
        let mut sorted: Vec<usize> = (0..self.lengths.len())
            .filter(|&s| self.lengths[s] > 0)
            .collect();
        sorted.sort_by_key(|&s| (self.lengths[s], s));
        let mut first_code = vec![0u128; max + 1];
        let mut first_index = vec![0usize; max + 1];
        let mut code = 0u128;
        let mut index = 0usize;
        for len in 1..=max {
            code = (code + count[len - 1]) << 1;
            first_code[len] = code;
            first_index[len] = index;
            index += count[len] as usize;
        }
        Decoder {
            count,
            first_code,
            first_index,
            sorted,
        }
    }
}

/// True when the lengths overfill the code space (Kraft sum > 1).
fn kraft_excess(lengths: &[u8]) -> bool {
    let max = lengths.iter().copied().max().unwrap_or(0) as u32;
    if max == 0 {
        return false;
    }
    let capacity = 1u128 << max;
    let mut used = 0u128;
    for &l in lengths.iter().filter(|&&l| l > 0) {
        used += 1u128 << (max - l as u32);
        if used > capacity {
            return true;
        }
    }
    false
}

pub(crate) struct Decoder {
    count: Vec<u128>,
    first_code: Vec<u128>,
    first_index: Vec<usize>,
    sorted: Vec<usize>,
}

impl Decoder {
    /// Decodes one symbol. `Ok(None)` means the reader ran out of bits.
    pub fn read_symbol(&self, bits: &mut BitReader<'_>) -> Result<Option<usize>> {
        let start = bits.position();
        let mut code = 0u128;
        for len in 1..self.count.len() {
            let Some(bit) = bits.read_bit() else {
                return Ok(None);
            };
            code = (code << 1) | bit as u128;
            let offset = code.wrapping_sub(self.first_code[len]);
            if code >= self.first_code[len] && offset < self.count[len] {
                return Ok(Some(self.sorted[self.first_index[len] + offset as usize]));
            }
        }
        Err(Error::InvalidCodeword { bit_offset: start })
    }
}
