//! Logit matrices and the PLG1 on-disk format.
//!
//! PLG1 layout, little-endian: `b"PLG1"`, `n: u64`, `k: u32`, then `n * k`
//! IEEE-754 `f32` values in row-major order. Values are widened to `f64` on
//! read.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub const LOGITS_MAGIC: &[u8; 4] = b"PLG1";
pub const LOGITS_HEADER_LEN: usize = 16;

/// An `n x k` row-major matrix of finite teacher logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl LogitMatrix {
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidShape("matrix needs at least one row".into()));
        }
        if k < 2 {
            return Err(Error::InvalidShape(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        let expected = n
            .checked_mul(k)
            .ok_or_else(|| Error::InvalidShape(format!("{n} x {k} overflows")))?;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                offset: (LOGITS_HEADER_LEN + 4 * i) as u64,
            });
        }
        Ok(Self { n, k, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let k = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * k);
        for row in rows {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::ShapeMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), k, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.k)
    }

    /// Rounds every value through `f32`, the precision PLG1 stores.
    pub fn quantized(&self) -> Self {
        Self {
            n: self.n,
            k: self.k,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(LOGITS_HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(LOGITS_MAGIC);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        for (i, &v) in self.values.iter().enumerate() {
            let narrowed = v as f32;
            if !narrowed.is_finite() {
                return Err(Error::NonFiniteValue {
                    offset: (LOGITS_HEADER_LEN + 4 * i) as u64,
                });
            }
            out.extend_from_slice(&narrowed.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated {
                offset: bytes.len() as u64,
            });
        }
        if &bytes[..4] != LOGITS_MAGIC {
            return Err(Error::BadMagic { offset: 0 });
        }
        if bytes.len() < LOGITS_HEADER_LEN {
            return Err(Error::Truncated {
                offset: bytes.len() as u64,
            });
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let k = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let n = usize::try_from(n).map_err(|_| Error::InvalidShape(format!("{n} rows")))?;
        let count = n
            .checked_mul(k)
            .ok_or_else(|| Error::InvalidShape(format!("{n} x {k} overflows")))?;
        let payload = &bytes[LOGITS_HEADER_LEN..];
        let needed = count
            .checked_mul(4)
            .ok_or_else(|| Error::InvalidShape(format!("{n} x {k} overflows")))?;
        if payload.len() < needed {
            // Report the first byte of the first value that is incomplete.
            let complete = payload.len() / 4 * 4;
            return Err(Error::Truncated {
                offset: (LOGITS_HEADER_LEN + complete) as u64,
            });
        }
        if payload.len() > needed {
            return Err(Error::TrailingBytes(payload.len() - needed));
        }
        let mut values = Vec::with_capacity(count);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    offset: (LOGITS_HEADER_LEN + 4 * i) as u64,
                });
            }
            values.push(v as f64);
        }
        Self::new(n, k, values)
    }
}

pub fn read_logits(path: impl AsRef<Path>) -> Result<LogitMatrix> {
    LogitMatrix::from_bytes(&fs::read(path)?)
}

pub fn write_logits(m: &LogitMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, m.to_bytes()?)?;
    Ok(())
}

/// Counts how many labels fall in each of `k` classes.
pub fn class_histogram(labels: &[u32], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for &label in labels {
        let slot = counts
            .get_mut(label as usize)
            .ok_or(Error::LabelOutOfRange {
                label: label as u64,
                k,
            })?;
        *slot += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_two_zero_matrix_is_24_bytes() {
        let m = LogitMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let bytes = m.to_bytes().unwrap();
        assert_eq!(bytes.len(), 4 + 8 + 4 + 8);
        assert_eq!(&bytes[..4], b"PLG1");
        assert_eq!(&bytes[4..12], &1u64.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
    }

    #[test]
    fn two_by_three_round_trip() {
        let rows = [[1.5, -2.0, 0.25], [3.0, 0.0, -7.75]];
        let m = LogitMatrix::from_rows(&rows).unwrap();
        let back = LogitMatrix::from_bytes(&m.to_bytes().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.row(1), &[3.0, 0.0, -7.75]);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = LogitMatrix::new(1, 2, vec![0.0, 1.0])
            .unwrap()
            .to_bytes()
            .unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            LogitMatrix::from_bytes(&bytes),
            Err(Error::BadMagic { offset: 0 })
        ));
    }

    #[test]
    fn rejects_truncation_with_offset() {
        let bytes = LogitMatrix::new(2, 2, vec![0.0; 4])
            .unwrap()
            .to_bytes()
            .unwrap();
        let err = LogitMatrix::from_bytes(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, Error::Truncated { offset: 28 }), "{err:?}");
        let err = LogitMatrix::from_bytes(&bytes[..10]).unwrap_err();
        assert!(matches!(err, Error::Truncated { offset: 10 }), "{err:?}");
    }

    #[test]
    fn rejects_nan_with_offset() {
        let mut bytes = LogitMatrix::new(1, 3, vec![0.0; 3])
            .unwrap()
            .to_bytes()
            .unwrap();
        bytes[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            LogitMatrix::from_bytes(&bytes),
            Err(Error::NonFiniteValue { offset: 20 })
        ));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            LogitMatrix::new(0, 3, vec![]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            LogitMatrix::new(2, 1, vec![0.0; 2]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            LogitMatrix::new(2, 2, vec![0.0; 3]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn writing_out_of_f32_range_fails() {
        let m = LogitMatrix::new(1, 2, vec![0.0, 1e300]).unwrap();
        assert!(matches!(
            m.to_bytes(),
            Err(Error::NonFiniteValue { offset: 20 })
        ));
    }

    #[test]
    fn histogram_counts() {
        assert_eq!(class_histogram(&[0, 0, 1], 3).unwrap(), vec![2, 1, 0]);
        assert_eq!(class_histogram(&[], 4).unwrap(), vec![0; 4]);
        assert!(matches!(
            class_histogram(&[3], 3),
            Err(Error::LabelOutOfRange { label: 3, k: 3 })
        ));
    }
}
