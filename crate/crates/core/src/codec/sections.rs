//! Mask and label section codecs.
//!
//! Each encoding is a unit struct behind [`MaskCodec`] or [`LabelCodec`],
//! looked up from its wire tag.

use super::bits::{BitReader, BitWriter, Cursor};
use super::huffman::{code_lengths, HuffmanTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskEncoding {
    Bitmap,
    DeltaIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelEncoding {
    FixedWidth,
    Huffman,
}

impl MaskEncoding {
    pub const ALL: [MaskEncoding; 2] = [MaskEncoding::Bitmap, MaskEncoding::DeltaIndex];

    pub fn tag(self) -> u8 {
        match self {
            MaskEncoding::Bitmap => 0,
            MaskEncoding::DeltaIndex => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(MaskEncoding::Bitmap),
            1 => Ok(MaskEncoding::DeltaIndex),
            _ => Err(Error::UnknownTag {
                what: "mask encoding",
                tag,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MaskEncoding::Bitmap => "bitmap",
            MaskEncoding::DeltaIndex => "delta",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "mask encoding",
                name: name.to_string(),
            })
    }

    pub fn codec(self) -> &'static dyn MaskCodec {
        match self {
            MaskEncoding::Bitmap => &Bitmap,
            MaskEncoding::DeltaIndex => &DeltaIndex,
        }
    }
}

impl LabelEncoding {
    pub const ALL: [LabelEncoding; 2] = [LabelEncoding::FixedWidth, LabelEncoding::Huffman];

    pub fn tag(self) -> u8 {
        match self {
            LabelEncoding::FixedWidth => 0,
            LabelEncoding::Huffman => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(LabelEncoding::FixedWidth),
            1 => Ok(LabelEncoding::Huffman),
            _ => Err(Error::UnknownTag {
                what: "label encoding",
                tag,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelEncoding::FixedWidth => "fixed",
            LabelEncoding::Huffman => "huffman",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "label encoding",
                name: name.to_string(),
            })
    }

    pub fn codec(self) -> &'static dyn LabelCodec {
        match self {
            LabelEncoding::FixedWidth => &FixedWidth,
            LabelEncoding::Huffman => &Huffman,
        }
    }
}

pub trait MaskCodec: Sync {
    fn encoding(&self) -> MaskEncoding;

    /// Appends the section for strictly increasing `kept < n_ref`.
    fn encode(&self, kept: &[usize], n_ref: u64, out: &mut Vec<u8>) -> Result<()>;

    fn decode(&self, input: &mut Cursor<'_>, n_ref: u64, m: u64) -> Result<Vec<usize>>;
}

pub trait LabelCodec: Sync {
    fn encoding(&self) -> LabelEncoding;

    fn encode(&self, labels: &[u32], k: usize, out: &mut Vec<u8>) -> Result<()>;

    fn decode(&self, input: &mut Cursor<'_>, k: usize, m: u64) -> Result<Vec<u32>>;
}

/// One bit per reference row, least-significant bit first within a byte.
pub struct Bitmap;

/// Gaps between consecutive kept indices at one fixed byte width.
pub struct DeltaIndex;

/// `ceil(log2 k)` bits per label, MSB-first.
pub struct FixedWidth;

/// Canonical Huffman code lengths plus an explicit-length bitstream.
pub struct Huffman;

pub fn bitmap_len(n_ref: u64) -> u64 {
    n_ref.div_ceil(8)
}

/// Smallest of 1, 2, 4, 8 bytes that holds `max_delta`.
pub fn delta_width(max_delta: u64) -> u8 {
    match max_delta {
        0..=0xFF => 1,
        0x100..=0xFFFF => 2,
        0x1_0000..=0xFFFF_FFFF => 4,
        _ => 8,
    }
}

/// Bits per label for fixed-width packing: `ceil(log2 k)`.
pub fn label_width(k: usize) -> u8 {
    debug_assert!(k >= 2);
    (usize::BITS - (k - 1).leading_zeros()) as u8
}

fn check_kept(kept: &[usize], n_ref: u64) -> Result<()> {
    for (pos, pair) in kept.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::NonMonotoneIndices {
                position: pos as u64 + 1,
            });
        }
    }
    match kept.last() {
        Some(&last) if last as u64 >= n_ref => Err(Error::IndexOverflow {
            index: last as u64,
            n_ref,
        }),
        _ => Ok(()),
    }
}

impl MaskCodec for Bitmap {
    fn encoding(&self) -> MaskEncoding {
        MaskEncoding::Bitmap
    }

    fn encode(&self, kept: &[usize], n_ref: u64, out: &mut Vec<u8>) -> Result<()> {
        check_kept(kept, n_ref)?;
        let start = out.len();
        out.resize(start + bitmap_len(n_ref) as usize, 0);
        for &i in kept {
            out[start + i / 8] |= 1 << (i % 8);
        }
        Ok(())
    }

    fn decode(&self, input: &mut Cursor<'_>, n_ref: u64, m: u64) -> Result<Vec<usize>> {
        let bytes = input.take_u64(bitmap_len(n_ref))?;
        let mut kept = Vec::with_capacity(m.min(n_ref) as usize);
        for (b, &byte) in bytes.iter().enumerate() {
            let mut bits = byte;
            while bits != 0 {
                let bit = bits.trailing_zeros() as usize;
                let index = b * 8 + bit;
                if index as u64 >= n_ref {
                    return Err(Error::NonCanonical("bitmap padding bits are set"));
                }
                kept.push(index);
                bits &= bits - 1;
            }
        }
        if kept.len() as u64 != m {
            return Err(Error::CountMismatch {
                expected: m,
                found: kept.len() as u64,
            });
        }
        Ok(kept)
    }
}

impl MaskCodec for DeltaIndex {
    fn encoding(&self) -> MaskEncoding {
        MaskEncoding::DeltaIndex
    }

    fn encode(&self, kept: &[usize], n_ref: u64, out: &mut Vec<u8>) -> Result<()> {
        check_kept(kept, n_ref)?;
        let deltas: Vec<u64> = kept
            .iter()
            .scan(None, |prev: &mut Option<usize>, &i| {
                let d = prev.map_or(i, |p| i - p) as u64;
                *prev = Some(i);
                Some(d)
            })
            .collect();
        let width = delta_width(deltas.iter().copied().max().unwrap_or(0));
        out.push(width);
        for d in deltas {
            out.extend_from_slice(&d.to_le_bytes()[..width as usize]);
        }
        Ok(())
    }

    fn decode(&self, input: &mut Cursor<'_>, n_ref: u64, m: u64) -> Result<Vec<usize>> {
        let width = input.u8()?;
        if !matches!(width, 1 | 2 | 4 | 8) {
            return Err(Error::UnknownTag {
                what: "delta width",
                tag: width,
            });
        }
        let len = m.checked_mul(width as u64).ok_or(Error::Truncated {
            offset: input.position() as u64,
        })?;
        let bytes = input.take_u64(len)?;
        let mut kept = Vec::with_capacity(m as usize);
        let mut max_delta = 0u64;
        let mut prev: Option<u64> = None;
        for (pos, chunk) in bytes.chunks_exact(width as usize).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            let delta = u64::from_le_bytes(buf);
            max_delta = max_delta.max(delta);
            let index = match prev {
                None => delta,
                Some(_) if delta == 0 => {
                    return Err(Error::NonMonotoneIndices {
                        position: pos as u64,
                    });
                }
                Some(p) => p.checked_add(delta).ok_or(Error::IndexOverflow {
                    index: u64::MAX,
                    n_ref,
                })?,
            };
            if index >= n_ref {
                return Err(Error::IndexOverflow { index, n_ref });
            }
            kept.push(index as usize);
            prev = Some(index);
        }
        if width != delta_width(max_delta) {
            return Err(Error::NonCanonical(
                "delta width is not the smallest that fits",
            ));
        }
        Ok(kept)
    }
}

fn check_labels(labels: &[u32], k: usize) -> Result<()> {
    match labels.iter().find(|&&l| l as usize >= k) {
        Some(&bad) => Err(Error::LabelOutOfRange {
            label: bad as u64,
            k,
        }),
        None => Ok(()),
    }
}

impl LabelCodec for FixedWidth {
    fn encoding(&self) -> LabelEncoding {
        LabelEncoding::FixedWidth
    }

    fn encode(&self, labels: &[u32], k: usize, out: &mut Vec<u8>) -> Result<()> {
        check_labels(labels, k)?;
        let width = label_width(k);
        let mut bits = BitWriter::new();
        for &l in labels {
            bits.write(l as u128, width);
        }
        out.extend_from_slice(&bits.into_bytes());
        Ok(())
    }

    fn decode(&self, input: &mut Cursor<'_>, k: usize, m: u64) -> Result<Vec<u32>> {
        let width = label_width(k);
        let total_bits = m.checked_mul(width as u64).ok_or(Error::Truncated {
            offset: input.position() as u64,
        })?;
        let bytes = input.take_u64(total_bits.div_ceil(8))?;
        let mut reader = BitReader::new(bytes, total_bits);
        let mut labels = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let v = reader
                .read(width)
                .expect("section length covers every label");
            if v >= k as u128 {
                return Err(Error::LabelOutOfRange { label: v as u64, k });
            }
            labels.push(v as u32);
        }
        if !reader.rest_is_zero() {
            return Err(Error::NonCanonical("fixed-width padding bits are set"));
        }
        Ok(labels)
    }
}

fn frequencies(labels: &[u32], k: usize) -> Vec<u64> {
    let mut freqs = vec![0u64; k];
    for &l in labels {
        freqs[l as usize] += 1;
    }
    freqs
}

impl LabelCodec for Huffman {
    fn encoding(&self) -> LabelEncoding {
        LabelEncoding::Huffman
    }

    fn encode(&self, labels: &[u32], k: usize, out: &mut Vec<u8>) -> Result<()> {
        check_labels(labels, k)?;
        let table = HuffmanTable::from_frequencies(&frequencies(labels, k));
        let mut bits = BitWriter::new();
        for &l in labels {
            table.write_symbol(l as usize, &mut bits);
        }
        out.extend_from_slice(table.lengths());
        out.extend_from_slice(&bits.bit_len().to_le_bytes());
        out.extend_from_slice(&bits.into_bytes());
        Ok(())
    }

    fn decode(&self, input: &mut Cursor<'_>, k: usize, m: u64) -> Result<Vec<u32>> {
        let lengths = input.take(k)?.to_vec();
        let bit_len = input.u64()?;
        let bytes = input.take_u64(bit_len.div_ceil(8))?;
        let table = HuffmanTable::from_lengths(lengths)?;
        let decoder = table.decoder();
        let mut reader = BitReader::new(bytes, bit_len);
        let mut labels = Vec::with_capacity(m.min(bit_len) as usize);
        for _ in 0..m {
            match decoder.read_symbol(&mut reader)? {
                Some(sym) => labels.push(sym as u32),
                None => {
                    return Err(Error::BitLengthMismatch {
                        expected: bit_len,
                        found: reader.position(),
                    })
                }
            }
        }
        if reader.position() != bit_len {
            return Err(Error::BitLengthMismatch {
                expected: bit_len,
                found: reader.position(),
            });
        }
        if !reader.rest_is_zero() {
            return Err(Error::NonCanonical("huffman padding bits are set"));
        }
        if table.lengths() != code_lengths(&frequencies(&labels, k)).as_slice() {
            return Err(Error::NonCanonical(
                "code lengths differ from the canonical construction",
            ));
        }
        Ok(labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip_mask(codec: &dyn MaskCodec, kept: &[usize], n_ref: u64) -> Vec<u8> {
        let mut out = Vec::new();
        codec.encode(kept, n_ref, &mut out).unwrap();
        let mut c = Cursor::new(&out);
        assert_eq!(
            codec.decode(&mut c, n_ref, kept.len() as u64).unwrap(),
            kept
        );
        assert_eq!(c.remaining(), 0);
        out
    }

    #[test]
    fn delta_fixture() {
        let out = round_trip_mask(&DeltaIndex, &[5, 1000, 1001], 2000);
        assert_eq!(out, [2, 5, 0, 0xE3, 0x03, 1, 0]);
    }

    #[test]
    fn full_bitmap_is_all_ones() {
        let out = round_trip_mask(&Bitmap, &(0..8).collect::<Vec<_>>(), 8);
        assert_eq!(out, [0xFF]);
        let out = round_trip_mask(&Bitmap, &[0, 9], 10);
        assert_eq!(out, [0x01, 0x02]);
    }

    #[test]
    fn widths() {
        assert_eq!(delta_width(255), 1);
        assert_eq!(delta_width(256), 2);
        assert_eq!(delta_width(1 << 32), 8);
        assert_eq!(label_width(2), 1);
        assert_eq!(label_width(3), 2);
        assert_eq!(label_width(64), 6);
        assert_eq!(label_width(365), 9);
    }

    #[test]
    fn delta_rejects_oversized_width() {
        let data = [2, 3, 0];
        let err = DeltaIndex
            .decode(&mut Cursor::new(&data), 10, 1)
            .unwrap_err();
        assert!(matches!(err, Error::NonCanonical(_)), "{err:?}");
        let data = [1, 3, 0];
        let err = DeltaIndex
            .decode(&mut Cursor::new(&data), 10, 2)
            .unwrap_err();
        assert!(
            matches!(err, Error::NonMonotoneIndices { position: 1 }),
            "{err:?}"
        );
        let data = [1, 3, 9];
        let err = DeltaIndex
            .decode(&mut Cursor::new(&data), 10, 2)
            .unwrap_err();
        assert!(
            matches!(err, Error::IndexOverflow { index: 12, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bitmap_rejects_padding_and_count() {
        let data = [0x81];
        assert!(matches!(
            Bitmap.decode(&mut Cursor::new(&data), 7, 2),
            Err(Error::NonCanonical(_))
        ));
        assert!(matches!(
            Bitmap.decode(&mut Cursor::new(&data), 8, 1),
            Err(Error::CountMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn fixed_width_section_size_and_range() {
        let mut out = Vec::new();
        FixedWidth.encode(&[0, 4, 2], 5, &mut out).unwrap();
        assert_eq!(out.len(), 2); // 3 labels * 3 bits
        assert_eq!(out, [0b0001_0001, 0b0000_0000]);
        assert_eq!(
            FixedWidth.decode(&mut Cursor::new(&out), 5, 3).unwrap(),
            [0, 4, 2]
        );
        let bad = [0b1110_0000];
        assert!(matches!(
            FixedWidth.decode(&mut Cursor::new(&bad), 5, 1),
            Err(Error::LabelOutOfRange { label: 7, k: 5 })
        ));
        assert!(FixedWidth.encode(&[5], 5, &mut out).is_err());
    }

    #[test]
    fn huffman_single_symbol() {
        let mut out = Vec::new();
        Huffman.encode(&[2, 2, 2], 4, &mut out).unwrap();
        assert_eq!(&out[..4], &[0, 0, 1, 0]);
        assert_eq!(&out[4..12], &3u64.to_le_bytes());
        assert_eq!(&out[12..], &[0]);
        assert_eq!(
            Huffman.decode(&mut Cursor::new(&out), 4, 3).unwrap(),
            [2, 2, 2]
        );
    }

    #[test]
    fn huffman_rejects_non_canonical_table() {
        // Valid prefix code, but not what the frequencies {0: 2} produce.
        let mut out = vec![2, 2];
        out.extend_from_slice(&4u64.to_le_bytes());
        out.push(0);
        assert!(matches!(
            Huffman.decode(&mut Cursor::new(&out), 2, 2),
            Err(Error::NonCanonical(_))
        ));
    }

    #[test]
    fn huffman_length_mismatch() {
        let mut out = Vec::new();
        Huffman.encode(&[0, 1, 1], 2, &mut out).unwrap();
        // Claim one more bit than the stream holds.
        out[2..10].copy_from_slice(&4u64.to_le_bytes());
        assert!(matches!(
            Huffman.decode(&mut Cursor::new(&out), 2, 3),
            Err(Error::BitLengthMismatch {
                expected: 4,
                found: 3
            })
        ));
    }
}
