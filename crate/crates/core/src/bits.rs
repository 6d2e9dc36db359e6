//! Bit-string helpers.
//!
//! Bit strings are stored as integer indices into the statevector. Qubit 0 is
//! the most significant bit, so the textual form `"011"` (qubit 0 leftmost) is
//! the binary literal of the index.

use crate::error::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Mask selecting qubit `q` of an `n`-qubit index.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> usize {
    debug_assert!(q < n);
    1usize << (n - 1 - q)
}

#[inline]
pub fn bit(s: usize, n: usize, q: usize) -> u8 {
    ((s & qubit_mask(n, q)) != 0) as u8
}

/// Renders `s` as `n` characters of `0`/`1`, qubit 0 first.
pub fn format_bits(s: usize, n: usize) -> String {
    (0..n).map(|q| if bit(s, n, q) == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(text: &str) -> Result<(usize, usize)> {
    let n = text.len();
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidBits(text.to_string()));
    }
    let mut s = 0usize;
    for ch in text.chars() {
        s <<= 1;
        match ch {
            '0' => {}
            '1' => s |= 1,
            _ => return Err(Error::InvalidBits(text.to_string())),
        }
    }
    Ok((s, n))
}

/// `+1.0` for even parity of `s & mask`, `-1.0` otherwise.
#[inline]
pub fn parity_sign(s: usize, mask: usize) -> f64 {
    if (s & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Encodes `s` as the ±1 vector used as neural-network input (bit b -> 1 - 2b).
pub fn spin_encoding(s: usize, n: usize) -> Vec<f64> {
    (0..n).map(|q| 1.0 - 2.0 * bit(s, n, q) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_is_leftmost() {
        assert_eq!(format_bits(0b100, 3), "100");
        assert_eq!(bit(0b100, 3, 0), 1);
        assert_eq!(parse_bits("011").unwrap(), (3, 3));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_bits("01a").is_err());
        assert!(parse_bits("").is_err());
    }

    #[test]
    fn spin_encoding_maps_bits_to_signs() {
        assert_eq!(spin_encoding(0b10, 2), vec![-1.0, 1.0]);
    }
}
