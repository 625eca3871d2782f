use std::fmt;

/// A value together with an explicit bit length (1..=64).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u64,
    len: u32,
}

impl BitString {
    /// Returns `None` unless `1 <= len <= 64` and `value < 2^len`.
    pub fn new(value: u64, len: u32) -> Option<Self> {
        if len == 0 || len > 64 || (len < 64 && value >> len != 0) {
            return None;
        }
        Some(BitString { value, len })
    }

    /// Parses a string of `0`/`1` characters; periods are ignored.
    pub fn from_binary(digits: &str) -> Option<Self> {
        let mut value = 0u64;
        let mut len = 0u32;
        for c in digits.chars() {
            match c {
                '0' | '1' => {
                    if len == 64 {
                        return None;
                    }
                    value = (value << 1) | (c == '1') as u64;
                    len += 1;
                }
                '.' => {}
                _ => return None,
            }
        }
        BitString::new(value, len)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit `i`, counting from the most significant (first transmitted) bit.
    pub fn bit(&self, i: u32) -> bool {
        debug_assert!(i < self.len);
        (self.value >> (self.len - 1 - i)) & 1 == 1
    }

    /// True when `self` is a prefix of `other` (equal strings included).
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.value >> (other.len - self.len) == self.value
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0b")?;
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
