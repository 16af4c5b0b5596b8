//! Low-level encoding shared by the store segments.

use crate::bucket::{TimeBucket, YearMonth};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LXTS";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub const TRAILER_LEN: usize = 4;

pub fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub fn bucket_code(b: TimeBucket) -> u32 {
    match b {
        TimeBucket::Prior => 0,
        TimeBucket::Month(ym) => (ym.year as u32) * 12 + (ym.month - 1) + 1,
    }
}

pub fn bucket_from_code(code: u32) -> Result<TimeBucket> {
    if code == 0 {
        return Ok(TimeBucket::Prior);
    }
    let c = code - 1;
    YearMonth::new((c / 12) as i32, c % 12 + 1).map(TimeBucket::Month)
}

/// Bounds-checked little-endian cursor over a segment body.
pub struct Cursor<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
    pub segment: &'a str,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8], segment: &'a str) -> Self {
        Cursor { bytes, pos: 0, segment }
    }

    pub fn corrupt(&self, message: impl Into<String>) -> Error {
        Error::Corrupt {
            segment: self.segment.to_string(),
            message: message.into(),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(self.corrupt(format!("truncated at byte {}", self.pos)));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                if shift == 63 && b > 1 {
                    break;
                }
                return Ok(v);
            }
        }
        Err(self.corrupt("varint overflow"))
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn read_u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn varint_examples() {
        let mut out = Vec::new();
        put_varint(&mut out, 0);
        put_varint(&mut out, 127);
        put_varint(&mut out, 300);
        assert_eq!(out, vec![0x00, 0x7f, 0xac, 0x02]);
        let mut c = Cursor::new(&[0xff; 11], "t");
        assert!(c.varint().is_err());
    }

    #[test]
    fn bucket_codes() {
        assert_eq!(bucket_code(TimeBucket::Prior), 0);
        assert_eq!(bucket_code(TimeBucket::month(2020, 1)), 2020 * 12 + 1);
        for b in [TimeBucket::Prior, TimeBucket::month(2020, 12), TimeBucket::month(2022, 1)] {
            assert_eq!(bucket_from_code(bucket_code(b)).unwrap(), b);
        }
    }

    proptest! {
        #[test]
        fn varint_round_trip(v in any::<u64>()) {
            let mut out = Vec::new();
            put_varint(&mut out, v);
            let mut c = Cursor::new(&out, "t");
            prop_assert_eq!(c.varint().unwrap(), v);
            prop_assert!(c.is_empty());
        }

        #[test]
        fn bucket_codes_preserve_order(a in 2000i32..2100, ma in 1u32..=12, b in 2000i32..2100, mb in 1u32..=12) {
            let (x, y) = (TimeBucket::month(a, ma), TimeBucket::month(b, mb));
            prop_assert_eq!(x.cmp(&y), bucket_code(x).cmp(&bucket_code(y)));
        }
    }
}
