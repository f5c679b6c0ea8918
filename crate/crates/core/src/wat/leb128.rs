//! LEB128 varints as used throughout the binary format.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LebError {
    /// Input ended before the terminating byte.
    Truncated,
    /// More groups than the target width allows, or unused bits set in the last group.
    Overflow,
}

impl fmt::Display for LebError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LebError::Truncated => f.write_str("truncated varint"),
            LebError::Overflow => f.write_str("varint overflows target width"),
        }
    }
}

pub fn write_u64(out: &mut Vec<u8>, mut value: u64) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub fn write_u32(out: &mut Vec<u8>, value: u32) {
    write_u64(out, u64::from(value));
}

pub fn write_i64(out: &mut Vec<u8>, mut value: i64) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        let sign_clear = byte & 0x40 == 0;
        if (value == 0 && sign_clear) || (value == -1 && !sign_clear) {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub fn write_i32(out: &mut Vec<u8>, value: i32) {
    write_i64(out, i64::from(value));
}

/// Reads an unsigned varint of at most `bits` significant bits. Returns the
/// value and the number of bytes consumed.
pub fn read_unsigned(bytes: &[u8], bits: u32) -> Result<(u64, usize), LebError> {
    let max_len = bits.div_ceil(7) as usize;
    let mut result: u64 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        if i >= max_len {
            return Err(LebError::Overflow);
        }
        let shift = 7 * i as u32;
        let group = u64::from(byte & 0x7f);
        if i + 1 == max_len {
            // Bits beyond the target width must be zero.
            let room = bits - shift;
            if room < 7 && group >> room != 0 {
                return Err(LebError::Overflow);
            }
        }
        result |= group << shift;
        if byte & 0x80 == 0 {
            return Ok((result, i + 1));
        }
    }
    Err(LebError::Truncated)
}

/// Reads a signed varint of at most `bits` bits.
pub fn read_signed(bytes: &[u8], bits: u32) -> Result<(i64, usize), LebError> {
    let max_len = bits.div_ceil(7) as usize;
    let mut result: i64 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        if i >= max_len {
            return Err(LebError::Overflow);
        }
        let shift = 7 * i as u32;
        let group = i64::from(byte & 0x7f);
        if i + 1 == max_len && bits < shift + 7 {
            // Unused high bits must all equal the sign bit.
            let room = bits - shift;
            let sign_and_unused = group >> (room - 1);
            let all_ones = (1i64 << (8 - room)) - 1;
            if sign_and_unused != 0 && sign_and_unused != all_ones {
                return Err(LebError::Overflow);
            }
        }
        result |= group << shift;
        if byte & 0x80 == 0 {
            let consumed = shift + 7;
            if consumed < 64 && byte & 0x40 != 0 {
                result |= -1i64 << consumed;
            }
            return Ok((result, i + 1));
        }
    }
    Err(LebError::Truncated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc_u(v: u64) -> Vec<u8> {
        let mut out = Vec::new();
        write_u64(&mut out, v);
        out
    }

    fn enc_s(v: i64) -> Vec<u8> {
        let mut out = Vec::new();
        write_i64(&mut out, v);
        out
    }

    #[test]
    fn unsigned_known_vectors() {
        assert_eq!(enc_u(0), [0x00]);
        assert_eq!(enc_u(127), [0x7f]);
        assert_eq!(enc_u(128), [0x80, 0x01]);
        assert_eq!(enc_u(624485), [0xe5, 0x8e, 0x26]);
    }

    #[test]
    fn signed_known_vectors() {
        assert_eq!(enc_s(0), [0x00]);
        assert_eq!(enc_s(-1), [0x7f]);
        assert_eq!(enc_s(63), [0x3f]);
        assert_eq!(enc_s(64), [0xc0, 0x00]);
        assert_eq!(enc_s(-64), [0x40]);
        assert_eq!(enc_s(-123456), [0xc0, 0xbb, 0x78]);
    }

    #[test]
    fn rejects_overlong_u32() {
        assert_eq!(
            read_unsigned(&[0xff, 0xff, 0xff, 0xff, 0x1f], 32),
            Err(LebError::Overflow)
        );
        assert_eq!(
            read_unsigned(&[0xff, 0xff, 0xff, 0xff, 0x0f], 32),
            Ok((u64::from(u32::MAX), 5))
        );
        assert_eq!(
            read_unsigned(&[0x80, 0x80, 0x80, 0x80, 0x80, 0x00], 32),
            Err(LebError::Overflow)
        );
    }

    #[test]
    fn signed_width_checks() {
        assert_eq!(read_signed(&[0xff, 0xff, 0xff, 0xff, 0x7f], 32), Ok((-1, 5)));
        assert_eq!(
            read_signed(&[0x80, 0x80, 0x80, 0x80, 0x78], 32),
            Ok((i64::from(i32::MIN), 5))
        );
        assert_eq!(
            read_signed(&[0xff, 0xff, 0xff, 0xff, 0x4f], 32),
            Err(LebError::Overflow)
        );
    }

    #[test]
    fn truncated() {
        assert_eq!(read_unsigned(&[0x80], 32), Err(LebError::Truncated));
        assert_eq!(read_signed(&[], 64), Err(LebError::Truncated));
    }
}
