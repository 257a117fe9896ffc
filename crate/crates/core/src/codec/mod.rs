//! The PLP1 payload container.
//!
//! ```text
//! "PLP1" | version u8 = 1 | flags u8 (bit 0: body is a zstd frame) | body
//! body = n_ref u64 | k u32 | m u64 | mask_encoding u8 | label_encoding u8
//!        | mask section | label section
//! ```
//!
//! All integers are little-endian. The body is optionally compressed as a
//! single Zstandard frame at level 19; the 6-byte preamble is never
//! compressed. Decoding validates everything needed for re-encoding with
//! the same settings to reproduce the input bytes exactly.

mod analyze;
mod bits;
pub mod huffman;
mod sections;

pub use analyze::{analyze, MaskLayout, SizeReport, SizeRow};
pub use bits::Cursor;
pub use huffman::{code_lengths, HuffmanTable};
pub use sections::{
    bitmap_len, delta_width, label_width, Bitmap, DeltaIndex, FixedWidth, Huffman, LabelCodec,
    LabelEncoding, MaskCodec, MaskEncoding,
};

use crate::selection::SelectionResult;
use crate::{Error, Result};

pub const PAYLOAD_MAGIC: &[u8; 4] = b"PLP1";
pub const PAYLOAD_VERSION: u8 = 1;
pub const ZSTD_LEVEL: i32 = 19;
const FLAG_ZSTD: u8 = 0x01;
/// Magic, version and flags.
pub const PREAMBLE_LEN: usize = 6;
/// n_ref, k, m and the two encoding tags.
pub const BODY_HEADER_LEN: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodeOptions {
    pub mask: MaskEncoding,
    pub labels: LabelEncoding,
    pub zstd: bool,
}

impl EncodeOptions {
    pub fn new(mask: MaskEncoding, labels: LabelEncoding, zstd: bool) -> Self {
        Self { mask, labels, zstd }
    }

    /// Every mask x label x zstd combination.
    pub fn all() -> impl Iterator<Item = EncodeOptions> {
        MaskEncoding::ALL.into_iter().flat_map(|mask| {
            LabelEncoding::ALL.into_iter().flat_map(move |labels| {
                [false, true]
                    .into_iter()
                    .map(move |zstd| EncodeOptions { mask, labels, zstd })
            })
        })
    }
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self::new(MaskEncoding::DeltaIndex, LabelEncoding::Huffman, true)
    }
}

/// A parsed container: header fields plus the raw section bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadContainer {
    pub n_ref: u64,
    pub k: u32,
    pub m: u64,
    pub mask_encoding: MaskEncoding,
    pub label_encoding: LabelEncoding,
    pub mask_bytes: Vec<u8>,
    pub label_bytes: Vec<u8>,
    pub zstd_wrapped: bool,
}

impl PayloadContainer {
    /// Builds the sections for `kept` and their `labels`.
    pub fn build(
        kept: &[usize],
        n_ref: u64,
        labels: &[u32],
        k: usize,
        options: EncodeOptions,
    ) -> Result<Self> {
        if k < 2 || k > u32::MAX as usize {
            return Err(Error::InvalidShape(format!(
                "class count {k} is not in [2, 2^32)"
            )));
        }
        if labels.len() != kept.len() {
            return Err(Error::ShapeMismatch {
                expected: kept.len(),
                found: labels.len(),
            });
        }
        let mut mask_bytes = Vec::new();
        options.mask.codec().encode(kept, n_ref, &mut mask_bytes)?;
        let mut label_bytes = Vec::new();
        options.labels.codec().encode(labels, k, &mut label_bytes)?;
        Ok(Self {
            n_ref,
            k: k as u32,
            m: kept.len() as u64,
            mask_encoding: options.mask,
            label_encoding: options.labels,
            mask_bytes,
            label_bytes,
            zstd_wrapped: options.zstd,
        })
    }

    pub fn options(&self) -> EncodeOptions {
        EncodeOptions::new(self.mask_encoding, self.label_encoding, self.zstd_wrapped)
    }

    /// The uncompressed body.
    pub fn body(&self) -> Vec<u8> {
        let mut body =
            Vec::with_capacity(BODY_HEADER_LEN + self.mask_bytes.len() + self.label_bytes.len());
        body.extend_from_slice(&self.n_ref.to_le_bytes());
        body.extend_from_slice(&self.k.to_le_bytes());
        body.extend_from_slice(&self.m.to_le_bytes());
        body.push(self.mask_encoding.tag());
        body.push(self.label_encoding.tag());
        body.extend_from_slice(&self.mask_bytes);
        body.extend_from_slice(&self.label_bytes);
        body
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let body = self.body();
        let mut out = Vec::with_capacity(PREAMBLE_LEN + body.len());
        out.extend_from_slice(PAYLOAD_MAGIC);
        out.push(PAYLOAD_VERSION);
        if self.zstd_wrapped {
            out.push(FLAG_ZSTD);
            out.extend_from_slice(&zstd_wrap(&body)?);
        } else {
            out.push(0);
            out.extend_from_slice(&body);
        }
        Ok(out)
    }

    /// Parses and fully validates a container, returning it with its decoded
    /// indices and labels.
    pub fn parse(bytes: &[u8]) -> Result<(Self, Vec<usize>, Vec<u32>)> {
        let mut pre = Cursor::new(bytes);
        let magic = pre.take(4).map_err(|_| match bytes {
            b if PAYLOAD_MAGIC.starts_with(b) => Error::Truncated {
                offset: b.len() as u64,
            },
            _ => Error::BadMagic { offset: 0 },
        })?;
        if magic != PAYLOAD_MAGIC {
            return Err(Error::BadMagic { offset: 0 });
        }
        let version = pre.u8()?;
        if version != PAYLOAD_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let flags = pre.u8()?;
        if flags & !FLAG_ZSTD != 0 {
            return Err(Error::UnknownTag {
                what: "flags",
                tag: flags,
            });
        }
        let zstd_wrapped = flags & FLAG_ZSTD != 0;
        let rest = &bytes[PREAMBLE_LEN..];
        let unwrapped;
        let body = if zstd_wrapped {
            unwrapped = zstd_unwrap(rest)?;
            &unwrapped[..]
        } else {
            rest
        };

        let mut c = Cursor::new(body);
        let n_ref = c.u64()?;
        let k = c.u32()?;
        let m = c.u64()?;
        let mask_encoding = MaskEncoding::from_tag(c.u8()?)?;
        let label_encoding = LabelEncoding::from_tag(c.u8()?)?;
        if k < 2 {
            return Err(Error::InvalidShape(format!("class count {k} is below 2")));
        }
        if m > n_ref {
            return Err(Error::CountMismatch {
                expected: n_ref,
                found: m,
            });
        }

        let mask_start = c.position();
        let kept = mask_encoding.codec().decode(&mut c, n_ref, m)?;
        let label_start = c.position();
        let labels = label_encoding.codec().decode(&mut c, k as usize, m)?;
        if c.remaining() != 0 {
            return Err(Error::TrailingBytes(c.remaining()));
        }
        let container = Self {
            n_ref,
            k,
            m,
            mask_encoding,
            label_encoding,
            mask_bytes: body[mask_start..label_start].to_vec(),
            label_bytes: body[label_start..].to_vec(),
            zstd_wrapped,
        };
        Ok((container, kept, labels))
    }
}

/// A decoded payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPayload {
    pub selection: SelectionResult,
    pub labels: Vec<u32>,
    pub k: usize,
    pub options: EncodeOptions,
}

/// Serializes a selection and its labels (one per kept row, in index order).
pub fn encode(
    sel: &SelectionResult,
    labels: &[u32],
    k: usize,
    options: EncodeOptions,
) -> Result<Vec<u8>> {
    PayloadContainer::build(sel.kept(), sel.n_ref() as u64, labels, k, options)?.to_bytes()
}

pub fn decode(bytes: &[u8]) -> Result<DecodedPayload> {
    let (container, kept, labels) = PayloadContainer::parse(bytes)?;
    let n_ref = usize::try_from(container.n_ref)
        .map_err(|_| Error::InvalidShape(format!("n_ref {} exceeds usize", container.n_ref)))?;
    Ok(DecodedPayload {
        selection: SelectionResult::from_indices(kept, n_ref)?,
        labels,
        k: container.k as usize,
        options: container.options(),
    })
}

pub fn zstd_wrap(body: &[u8]) -> Result<Vec<u8>> {
    Ok(zstd::bulk::compress(body, ZSTD_LEVEL)?)
}

/// Decompresses one complete frame. Any decoder failure, including a frame
/// cut short, is reported as truncation of the wrapped body.
pub fn zstd_unwrap(frame: &[u8]) -> Result<Vec<u8>> {
    zstd::stream::decode_all(frame).map_err(|_| Error::Truncated {
        offset: (PREAMBLE_LEN + frame.len()) as u64,
    })
}

/// Analytic payload cost of the naive scheme: one mask bit per reference row
/// plus one label per kept row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSize {
    pub mask_bits: f64,
    /// `n_ref * p * log2(k)`.
    pub label_bits_ideal: f64,
    /// `n_ref * p * ceil(log2(k))`.
    pub label_bits_packed: f64,
}

impl RawSize {
    pub fn total_bits_ideal(&self) -> f64 {
        self.mask_bits + self.label_bits_ideal
    }

    pub fn total_bits_packed(&self) -> f64 {
        self.mask_bits + self.label_bits_packed
    }
}

pub fn raw_size_bits(n_ref: u64, p: f64, k: usize) -> RawSize {
    let n = n_ref as f64;
    RawSize {
        mask_bits: n,
        label_bits_ideal: n * p * (k as f64).log2(),
        label_bits_packed: n * p * label_width(k.max(2)) as f64,
    }
}

pub fn bits_to_mib(bits: f64) -> f64 {
    bits / 8.0 / (1024.0 * 1024.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(kept: &[usize], n_ref: usize) -> SelectionResult {
        SelectionResult::from_indices(kept.to_vec(), n_ref).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(
            &sel(&[1, 3], 8),
            &[0, 2],
            3,
            EncodeOptions::new(MaskEncoding::Bitmap, LabelEncoding::FixedWidth, false),
        )
        .unwrap();
        assert_eq!(&bytes[..6], b"PLP1\x01\x00");
        assert_eq!(&bytes[6..14], &8u64.to_le_bytes());
        assert_eq!(&bytes[14..18], &3u32.to_le_bytes());
        assert_eq!(&bytes[18..26], &2u64.to_le_bytes());
        assert_eq!(&bytes[26..28], &[0, 0]);
        assert_eq!(bytes[28], 0b0000_1010);
        assert_eq!(bytes[29], 0b0010_0000);
        assert_eq!(bytes.len(), 30);
    }

    #[test]
    fn every_combination_round_trips() {
        let s = sel(&[0, 7, 300, 301, 999], 1000);
        let labels = [4, 0, 4, 4, 1];
        for opts in EncodeOptions::all() {
            let bytes = encode(&s, &labels, 5, opts).unwrap();
            let back = decode(&bytes).unwrap();
            assert_eq!(back.selection.kept(), s.kept());
            assert_eq!(back.selection.n_ref(), 1000);
            assert_eq!(back.labels, labels);
            assert_eq!(back.k, 5);
            assert_eq!(back.options, opts);
            assert_eq!(
                encode(&back.selection, &back.labels, back.k, opts).unwrap(),
                bytes
            );
        }
    }

    #[test]
    fn rejects_framing_errors() {
        let good = encode(&sel(&[2], 4), &[1], 2, EncodeOptions::default()).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::BadMagic { offset: 0 })));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad), Err(Error::UnsupportedVersion(2))));
        let mut bad = good.clone();
        bad[5] |= 0x80;
        assert!(matches!(
            decode(&bad),
            Err(Error::UnknownTag { what: "flags", .. })
        ));
        assert!(matches!(decode(b"PL"), Err(Error::Truncated { offset: 2 })));
        assert!(matches!(decode(b"ZZ"), Err(Error::BadMagic { offset: 0 })));
    }

    #[test]
    fn rejects_trailing_bytes() {
        let opts = EncodeOptions::new(MaskEncoding::DeltaIndex, LabelEncoding::FixedWidth, false);
        let mut bytes = encode(&sel(&[2], 4), &[1], 2, opts).unwrap();
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(Error::TrailingBytes(1))));
    }

    #[test]
    fn encode_checks_inputs() {
        let s = sel(&[0, 1], 2);
        let opts = EncodeOptions::default();
        assert!(matches!(
            encode(&s, &[0], 2, opts),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            encode(&s, &[0, 2], 2, opts),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            PayloadContainer::build(&[0, 5], 5, &[0, 0], 2, opts),
            Err(Error::IndexOverflow { index: 5, n_ref: 5 })
        ));
    }

    #[test]
    fn raw_size_arithmetic() {
        let r = raw_size_bits(1000, 0.1, 16);
        assert_eq!(r.total_bits_ideal(), 1400.0);
        assert_eq!(r.total_bits_ideal() / 8.0, 175.0);
        let r = raw_size_bits(500, 1.0, 2);
        assert_eq!(r.total_bits_ideal(), 1000.0);
        let r = raw_size_bits(100, 0.5, 10);
        assert_eq!(r.label_bits_packed, 200.0);
    }

    #[test]
    fn zstd_round_trip() {
        let body: Vec<u8> = (0..5000u32).map(|i| (i % 7) as u8).collect();
        let wrapped = zstd_wrap(&body).unwrap();
        assert!(wrapped.len() < body.len());
        assert_eq!(zstd_unwrap(&wrapped).unwrap(), body);
        assert!(zstd_unwrap(&wrapped[..wrapped.len() - 1]).is_err());
    }
}
