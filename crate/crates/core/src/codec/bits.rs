//! MSB-first bit packing and a bounds-checked byte cursor.

use crate::{Error, Result};

#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `len` bits of `value`, most significant first.
    pub fn write(&mut self, value: u128, len: u8) {
        for shift in (0..len).rev() {
            let bit = (value >> shift) & 1 == 1;
            let offset = (self.bits % 8) as u8;
            if offset == 0 {
                self.bytes.push(0);
            }
            if bit {
                *self.bytes.last_mut().unwrap() |= 0x80 >> offset;
            }
            self.bits += 1;
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits MSB-first from `data`, refusing to go past `limit` bits.
#[derive(Debug)]
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
    limit: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], limit: u64) -> Self {
        debug_assert!(limit <= data.len() as u64 * 8);
        Self {
            data,
            pos: 0,
            limit,
        }
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.limit {
            return None;
        }
        let byte = self.data[(self.pos / 8) as usize];
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }

    pub fn read(&mut self, len: u8) -> Option<u128> {
        let mut v = 0u128;
        for _ in 0..len {
            v = (v << 1) | self.read_bit()? as u128;
        }
        Some(v)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    /// True when every bit from the current position to the end of the
    /// backing bytes is zero.
    pub fn rest_is_zero(&self) -> bool {
        let total = self.data.len() as u64 * 8;
        (self.pos..total).all(|p| self.data[(p / 8) as usize] & (0x80 >> (p % 8)) == 0)
    }
}

/// Byte cursor that reports the offset of any read that runs off the end.
#[derive(Debug)]
pub struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.data.len())
            .ok_or(Error::Truncated {
                offset: self.data.len() as u64,
            })?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    /// Like [`Cursor::take`] with a length computed in `u64`.
    pub fn take_u64(&mut self, len: u64) -> Result<&'a [u8]> {
        let len = usize::try_from(len).map_err(|_| Error::Truncated {
            offset: self.data.len() as u64,
        })?;
        self.take(len)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}
