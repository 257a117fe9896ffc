//! Measured payload sizes per encoding, in the Raw / Compact / Huffman /
//! Zstd grid layout.

use super::sections::{LabelEncoding, MaskEncoding};
use super::{raw_size_bits, zstd_wrap, EncodeOptions, PayloadContainer};
use crate::selection::SelectionResult;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskLayout {
    /// Kept indices as a list (delta-encoded in the compact columns).
    Idx,
    /// One bit per reference row.
    Bmp,
    /// Nothing was filtered, so only labels are sent.
    None,
}

impl MaskLayout {
    pub fn name(self) -> &'static str {
        match self {
            MaskLayout::Idx => "idx",
            MaskLayout::Bmp => "bmp",
            MaskLayout::None => "none",
        }
    }
}

/// One measurement row. All sizes are bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub keep_ratio: f64,
    pub mask: MaskLayout,
    pub m: u64,
    /// Fixed-width records: `u64` per index (or the bitmap) plus `u32` per
    /// label.
    pub raw: u64,
    /// Container with fixed-width labels, no compression.
    pub compact: u64,
    /// Container with Huffman labels, no compression.
    pub huffman: u64,
    /// Compact container, zstd-wrapped.
    pub zstd_compact: u64,
    /// Huffman container, zstd-wrapped.
    pub zstd_huffman: u64,
    /// Mask section alone, before compression.
    pub mask_section: u64,
    /// `n_ref (1 + p log2 k)` in bits.
    pub analytic_ideal_bits: f64,
    /// Same with `ceil(log2 k)` bits per label.
    pub analytic_packed_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub n_ref: u64,
    pub k: usize,
    pub rows: Vec<SizeRow>,
}

impl SizeReport {
    pub fn row(&self, mask: MaskLayout) -> Option<&SizeRow> {
        self.rows.iter().find(|r| r.mask == mask)
    }

    /// Bytes shipped under `opts`. A labels-only report ignores the mask
    /// choice.
    pub fn payload_bytes(&self, opts: EncodeOptions) -> u64 {
        let layout = match opts.mask {
            MaskEncoding::Bitmap => MaskLayout::Bmp,
            MaskEncoding::DeltaIndex => MaskLayout::Idx,
        };
        let row = self
            .row(MaskLayout::None)
            .or_else(|| self.row(layout))
            .expect("report has a row per layout");
        match (opts.labels, opts.zstd) {
            (LabelEncoding::FixedWidth, false) => row.compact,
            (LabelEncoding::Huffman, false) => row.huffman,
            (LabelEncoding::FixedWidth, true) => row.zstd_compact,
            (LabelEncoding::Huffman, true) => row.zstd_huffman,
        }
    }

    pub const CSV_HEADER: &'static str = "keep_ratio,mask,m,raw,compact,huffman,zstd_compact,\
zstd_huffman,mask_section,analytic_ideal_bits,analytic_packed_bits";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                crate::table::format_f64(r.keep_ratio),
                r.mask.name(),
                r.m,
                r.raw,
                r.compact,
                r.huffman,
                r.zstd_compact,
                r.zstd_huffman,
                r.mask_section,
                crate::table::format_f64(r.analytic_ideal_bits),
                crate::table::format_f64(r.analytic_packed_bits),
            ));
        }
        out
    }
}

/// Measures every encoding for one selection. When every row is kept the
/// mask carries no information and a single labels-only row is reported.
pub fn analyze(sel: &SelectionResult, labels: &[u32], k: usize) -> Result<SizeReport> {
    let n_ref = sel.n_ref() as u64;
    let m = sel.len() as u64;
    let p = if n_ref == 0 {
        0.0
    } else {
        m as f64 / n_ref as f64
    };
    let analytic = raw_size_bits(n_ref, p, k);
    let mut rows = Vec::new();

    if m == n_ref {
        let fixed = label_only(labels, k, LabelEncoding::FixedWidth)?;
        let huff = label_only(labels, k, LabelEncoding::Huffman)?;
        rows.push(SizeRow {
            keep_ratio: p,
            mask: MaskLayout::None,
            m,
            raw: 4 * m,
            compact: fixed.len() as u64,
            huffman: huff.len() as u64,
            zstd_compact: zstd_wrap(&fixed)?.len() as u64,
            zstd_huffman: zstd_wrap(&huff)?.len() as u64,
            mask_section: 0,
            analytic_ideal_bits: analytic.label_bits_ideal,
            analytic_packed_bits: analytic.label_bits_packed,
        });
    } else {
        for (layout, mask) in [
            (MaskLayout::Idx, MaskEncoding::DeltaIndex),
            (MaskLayout::Bmp, MaskEncoding::Bitmap),
        ] {
            let size = |labels_enc, zstd| -> Result<u64> {
                let opts = EncodeOptions::new(mask, labels_enc, zstd);
                Ok(PayloadContainer::build(sel.kept(), n_ref, labels, k, opts)?
                    .to_bytes()?
                    .len() as u64)
            };
            let compact = PayloadContainer::build(
                sel.kept(),
                n_ref,
                labels,
                k,
                EncodeOptions::new(mask, LabelEncoding::FixedWidth, false),
            )?;
            let raw_mask = match layout {
                MaskLayout::Bmp => n_ref.div_ceil(8),
                _ => 8 * m,
            };
            rows.push(SizeRow {
                keep_ratio: p,
                mask: layout,
                m,
                raw: raw_mask + 4 * m,
                compact: compact.to_bytes()?.len() as u64,
                huffman: size(LabelEncoding::Huffman, false)?,
                zstd_compact: size(LabelEncoding::FixedWidth, true)?,
                zstd_huffman: size(LabelEncoding::Huffman, true)?,
                mask_section: compact.mask_bytes.len() as u64,
                analytic_ideal_bits: analytic.total_bits_ideal(),
                analytic_packed_bits: analytic.total_bits_packed(),
            });
        }
    }
    Ok(SizeReport { n_ref, k, rows })
}

fn label_only(labels: &[u32], k: usize, enc: LabelEncoding) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    enc.codec().encode(labels, k, &mut out)?;
    Ok(out)
}
