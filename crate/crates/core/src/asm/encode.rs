//! Self-describing extension encodings.
//!
//! A one-byte form always has its high bit set; a two-byte form always
//! starts below `0x80` because values and addresses stay under `0x8000`.
//! A decoder therefore knows the width from the first byte alone.

use super::isa::MAX_LITERAL;
use super::AsmError;

/// Closest backward distance reachable by a short branch.
pub const SHORT_BACK: i32 = -0x3F;
/// Furthest forward distance reachable by a short branch.
pub const SHORT_FORWARD: i32 = 0x40;

/// `0x80 + v` for `v <= 0x7F`, otherwise two bytes, high byte first.
pub fn encode_literal(v: u16) -> Result<Vec<u8>, AsmError> {
    if v > MAX_LITERAL {
        return Err(AsmError::LiteralRange(v));
    }
    Ok(if v <= 0x7F {
        vec![0x80 + v as u8]
    } else {
        v.to_be_bytes().to_vec()
    })
}

/// Inverse of [`encode_literal`]; `next` supplies the second byte when the
/// first one announces the long form.
pub fn decode_literal<E>(first: u8, next: impl FnOnce() -> Result<u8, E>) -> Result<u16, E> {
    if first >= 0x80 {
        Ok(u16::from(first - 0x80))
    } else {
        Ok(u16::from_be_bytes([first, next()?]))
    }
}

/// One-byte branch to `target` from an offset byte stored at `at`, if the
/// distance `target - at` lies in `SHORT_BACK..=SHORT_FORWARD`.
pub fn encode_short_branch(at: u16, target: u16) -> Option<u8> {
    let d = i32::from(target) - i32::from(at);
    (SHORT_BACK..=SHORT_FORWARD)
        .contains(&d)
        .then(|| (0xC0 - d) as u8)
}

/// Target of the short-branch byte `b` stored at `at`.
pub fn decode_short_branch(at: u16, b: u8) -> Option<u16> {
    if b < 0x80 {
        return None;
    }
    u16::try_from(i32::from(at) + 0xC0 - i32::from(b)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn lit(bytes: &[u8]) -> u16 {
        decode_literal::<Infallible>(bytes[0], || Ok(bytes[1])).unwrap()
    }

    #[test]
    fn literal_examples() {
        assert_eq!(encode_literal(0x00).unwrap(), vec![0x80]);
        assert_eq!(encode_literal(0x02).unwrap(), vec![0x82]);
        assert_eq!(encode_literal(0x7F).unwrap(), vec![0xFF]);
        assert_eq!(encode_literal(0x80).unwrap(), vec![0x00, 0x80]);
        assert_eq!(encode_literal(0x7FFF).unwrap(), vec![0x7F, 0xFF]);
        assert!(matches!(encode_literal(0x8000), Err(AsmError::LiteralRange(0x8000))));
    }

    #[test]
    fn literal_round_trip_full_range() {
        for v in 0..=MAX_LITERAL {
            let mut b = encode_literal(v).unwrap();
            b.push(0);
            assert_eq!(lit(&b), v);
        }
    }

    #[test]
    fn short_branch_examples() {
        let at = 0x0400;
        assert_eq!(encode_short_branch(at, at), Some(0xC0));
        assert_eq!(encode_short_branch(at, at + 0x3F), Some(0x81));
        assert_eq!(encode_short_branch(at, at + 0x40), Some(0x80));
        assert_eq!(encode_short_branch(at, at - 0x3F), Some(0xFF));
        assert_eq!(encode_short_branch(at, at + 0x41), None);
        assert_eq!(encode_short_branch(at, at - 0x40), None);
    }

    #[test]
    fn short_branch_round_trip_full_range() {
        let at = 0x1000u16;
        for d in SHORT_BACK..=SHORT_FORWARD {
            let target = (i32::from(at) + d) as u16;
            let b = encode_short_branch(at, target).unwrap();
            assert!(b >= 0x80);
            assert_eq!(decode_short_branch(at, b), Some(target));
        }
    }
}
