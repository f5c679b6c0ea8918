//! Numeric literal parsing: integers, decimal and hexadecimal floats, NaN payloads.

/// Binary layout of an IEEE-754 format.
#[derive(Clone, Copy)]
struct FloatFormat {
    mant_bits: u32,
    exp_bits: u32,
}

const F32_FMT: FloatFormat = FloatFormat {
    mant_bits: 23,
    exp_bits: 8,
};
const F64_FMT: FloatFormat = FloatFormat {
    mant_bits: 52,
    exp_bits: 11,
};

impl FloatFormat {
    fn bias(self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    fn inf_bits(self) -> u64 {
        ((1u64 << self.exp_bits) - 1) << self.mant_bits
    }

    fn sign_bit(self) -> u64 {
        1u64 << (self.mant_bits + self.exp_bits)
    }
}

fn strip_underscores(s: &str) -> Option<String> {
    if s.starts_with('_') || s.ends_with('_') || s.contains("__") {
        return None;
    }
    Some(s.replace('_', ""))
}

fn split_sign(s: &str) -> (bool, &str) {
    if let Some(rest) = s.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = s.strip_prefix('+') {
        (false, rest)
    } else {
        (false, s)
    }
}

/// Parses an unsigned magnitude, decimal or `0x` hex, with `_` separators.
fn parse_magnitude(s: &str) -> Option<u64> {
    let (digits, radix) = match s.strip_prefix("0x") {
        Some(hex) => (hex, 16),
        None => (s, 10),
    };
    let digits = strip_underscores(digits)?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return None;
    }
    u64::from_str_radix(&digits, radix).ok()
}

/// Integer literal of `bits` width: accepts the signed and unsigned ranges and
/// returns the two's complement bit pattern.
pub fn parse_int(s: &str, bits: u32) -> Option<u64> {
    let (negative, body) = split_sign(s);
    let mag = parse_magnitude(body)?;
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    if negative {
        if mag > 1u64 << (bits - 1) {
            return None;
        }
        Some(mag.wrapping_neg() & mask)
    } else {
        if mag > mask {
            return None;
        }
        Some(mag)
    }
}

pub fn parse_f32(s: &str) -> Option<u32> {
    parse_float(s, F32_FMT).map(|b| b as u32)
}

pub fn parse_f64(s: &str) -> Option<u64> {
    parse_float(s, F64_FMT)
}

fn parse_float(s: &str, fmt: FloatFormat) -> Option<u64> {
    let (negative, body) = split_sign(s);
    let sign = if negative { fmt.sign_bit() } else { 0 };
    let magnitude = if body == "inf" {
        fmt.inf_bits()
    } else if body == "nan" {
        fmt.inf_bits() | 1u64 << (fmt.mant_bits - 1)
    } else if let Some(payload) = body.strip_prefix("nan:0x") {
        let payload = u64::from_str_radix(&strip_underscores(payload)?, 16).ok()?;
        if payload == 0 || payload >= 1u64 << fmt.mant_bits {
            return None;
        }
        fmt.inf_bits() | payload
    } else if let Some(hex) = body.strip_prefix("0x") {
        parse_hex_float(&strip_underscores(hex)?, fmt)?
    } else {
        let dec = strip_underscores(body)?;
        if dec.is_empty()
            || !dec.starts_with(|c: char| c.is_ascii_digit())
            || !dec
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        {
            return None;
        }
        if fmt.mant_bits == 23 {
            u64::from(dec.parse::<f32>().ok()?.to_bits())
        } else {
            dec.parse::<f64>().ok()?.to_bits()
        }
    };
    Some(sign | magnitude)
}

/// Correctly rounded (ties-to-even) conversion of a hexadecimal float body
/// such as `1.8p3` (without the `0x` prefix or sign).
fn parse_hex_float(s: &str, fmt: FloatFormat) -> Option<u64> {
    let (mantissa_str, exp_str) = match s.find(['p', 'P']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (int_part, frac_part) = match mantissa_str.find('.') {
        Some(i) => (&mantissa_str[..i], &mantissa_str[i + 1..]),
        None => (mantissa_str, ""),
    };
    if int_part.is_empty() || !int_part.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    if !frac_part.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    let mut exp: i64 = match exp_str {
        Some(e) => {
            let (neg, digits) = split_sign(e);
            if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                return None;
            }
            let v: i64 = digits.parse().unwrap_or(i64::from(i32::MAX));
            let v = v.min(100_000);
            if neg {
                -v
            } else {
                v
            }
        }
        None => 0,
    };

    // Collect up to 124 significant bits; anything beyond only feeds the sticky bit.
    let mut mant: u128 = 0;
    let mut sticky = false;
    for (i, c) in int_part.chars().chain(frac_part.chars()).enumerate() {
        let d = c.to_digit(16).expect("checked hex digit") as u128;
        let in_frac = i >= int_part.len();
        if mant >> 120 == 0 {
            mant = mant << 4 | d;
            if in_frac {
                exp -= 4;
            }
        } else {
            sticky |= d != 0;
            if !in_frac {
                exp += 4;
            }
        }
    }
    if mant == 0 {
        return Some(0);
    }

    let top = 127 - mant.leading_zeros() as i64; // value = 1.xxx * 2^(top + exp)
    let unbiased = top + exp;
    let bias = i64::from(fmt.bias());
    let mant_bits = i64::from(fmt.mant_bits);
    let min_normal = 1 - bias;

    // Scale so that the kept integer has `mant_bits` fraction bits (or fewer for subnormals).
    let lsb_exp = if unbiased >= min_normal {
        unbiased - mant_bits
    } else {
        min_normal - mant_bits
    };
    let shift = lsb_exp - exp; // bits to drop from `mant`
    let rounded: u128 = if shift <= 0 {
        if -shift >= 127 {
            return Some(fmt.inf_bits());
        }
        mant << (-shift)
    } else if shift > 127 {
        0
    } else {
        let shift = shift as u32;
        let kept = mant >> shift;
        let rem = mant & ((1u128 << shift) - 1);
        let half = 1u128 << (shift - 1);
        let round_up = rem > half || (rem == half && (sticky || kept & 1 == 1));
        kept + u128::from(round_up)
    };

    // `rounded` is either a subnormal mantissa (< 2^mant_bits) or a full
    // significand in [2^mant_bits, 2^(mant_bits+1)]; adding the biased exponent
    // handles the carry into the next binade.
    let bits: u128 = if unbiased >= min_normal {
        (((unbiased + bias - 1) as u128) << fmt.mant_bits) + rounded
    } else {
        rounded
    };
    if bits >= u128::from(fmt.inf_bits()) {
        return Some(fmt.inf_bits());
    }
    Some(bits as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ints() {
        assert_eq!(parse_int("0", 32), Some(0));
        assert_eq!(parse_int("-1", 32), Some(0xffff_ffff));
        assert_eq!(parse_int("4294967295", 32), Some(0xffff_ffff));
        assert_eq!(parse_int("4294967296", 32), None);
        assert_eq!(parse_int("-2147483648", 32), Some(0x8000_0000));
        assert_eq!(parse_int("-2147483649", 32), None);
        assert_eq!(parse_int("0x8000_0000_0000_0000", 64), Some(1 << 63));
        assert_eq!(parse_int("1_000", 32), Some(1000));
        assert_eq!(parse_int("1__0", 32), None);
        assert_eq!(parse_int("abc", 32), None);
    }

    #[test]
    fn decimal_floats() {
        assert_eq!(parse_f64("3.5"), Some(3.5f64.to_bits()));
        assert_eq!(parse_f64("-0.0"), Some((-0.0f64).to_bits()));
        assert_eq!(parse_f64("1e10"), Some(1e10f64.to_bits()));
        assert_eq!(parse_f32("0.1"), Some(0.1f32.to_bits()));
        assert_eq!(parse_f64("inf"), Some(f64::INFINITY.to_bits()));
        assert_eq!(parse_f64("-inf"), Some(f64::NEG_INFINITY.to_bits()));
        assert_eq!(parse_f64("nan"), Some(0x7ff8_0000_0000_0000));
        assert_eq!(parse_f32("-nan:0x1"), Some(0xff80_0001));
        assert_eq!(parse_f32("nan:0x800000"), None);
        assert_eq!(parse_f64(".5"), None);
    }

    #[test]
    fn hex_floats() {
        assert_eq!(parse_f64("0x1p0"), Some(1.0f64.to_bits()));
        assert_eq!(parse_f64("0x1.8p1"), Some(3.0f64.to_bits()));
        assert_eq!(parse_f64("-0x1.8p-1"), Some((-0.75f64).to_bits()));
        assert_eq!(parse_f64("0x10"), Some(16.0f64.to_bits()));
        assert_eq!(parse_f64("0x1p-1074"), Some(1));
        assert_eq!(parse_f64("0x1p-1075"), Some(0));
        assert_eq!(parse_f64("0x1.8p-1075"), Some(1));
        assert_eq!(parse_f64("0x1p1024"), Some(f64::INFINITY.to_bits()));
        assert_eq!(parse_f64("0x1.fffffffffffffp1023"), Some(f64::MAX.to_bits()));
        // halfway between 1 and next f32, ties to even -> 1
        assert_eq!(parse_f32("0x1.000001p0"), Some(1.0f32.to_bits()));
        // just above halfway -> rounds up
        assert_eq!(parse_f32("0x1.0000011p0"), Some(1.0f32.to_bits() + 1));
        // halfway with odd kept bit -> up
        assert_eq!(parse_f32("0x1.000003p0"), Some(1.0f32.to_bits() + 2));
        assert_eq!(parse_f32("0x1p-149"), Some(1));
        assert_eq!(parse_f32("0x1.fffffep127"), Some(f32::MAX.to_bits()));
        assert_eq!(parse_f32("0x1.ffffffp127"), Some(f32::INFINITY.to_bits()));
    }
}
