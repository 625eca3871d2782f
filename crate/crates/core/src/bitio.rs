//! Bit-granular cursors over byte buffers.
//!
//! Fields are MSB-first. Multi-byte fields may additionally be stored with
//! little-endian byte order, in which case the field width must be a whole
//! number of bytes and the bytes are reassembled least-significant first.
//!
//! [`BitSource`] and [`BitSink`] are the substitution points for user streams:
//! anything that implements the handful of required methods gets the typed
//! helpers (`read_uint`, `align`, floats, ...) for free.

use thiserror::Error;

/// Widest integer field the cursors handle.
pub const MAX_FIELD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ByteOrder {
    #[default]
    Big,
    Little,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("end of stream")]
    EndOfStream { position: u64, requested: u64, available: u64 },
    #[error("invalid field width {0}")]
    InvalidWidth(u32),
    #[error("little-endian field width {0} is not a multiple of 8")]
    LittleEndianWidth(u32),
    #[error("value {value} does not fit in {width} bits")]
    OutOfRange { value: String, width: u32 },
    #[error("alignment length must be positive")]
    ZeroAlignment,
}

/// Result of a peek: the requested bits, zero-padded on the right when the
/// stream ends early, and how many of them are real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Peeked {
    pub value: u64,
    pub available: u32,
}

impl Peeked {
    pub fn complete(&self, width: u32) -> bool {
        self.available == width
    }
}

fn check_width(n: u32) -> Result<(), BitError> {
    if n == 0 || n > MAX_FIELD_BITS {
        Err(BitError::InvalidWidth(n))
    } else {
        Ok(())
    }
}

fn check_order(n: u32, order: ByteOrder) -> Result<(), BitError> {
    if order == ByteOrder::Little && !n.is_multiple_of(8) {
        Err(BitError::LittleEndianWidth(n))
    } else {
        Ok(())
    }
}

/// Reverses the byte order of the low `n` bits of `v` (`n` a multiple of 8).
pub fn swap_bytes(v: u64, n: u32) -> u64 {
    debug_assert!(n.is_multiple_of(8) && n <= 64 && n > 0);
    v.swap_bytes() >> (64 - n)
}

/// Low `n` bits set.
pub fn mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Two's-complement value of the low `n` bits of `v`.
pub fn sign_extend(v: u64, n: u32) -> i64 {
    if n >= 64 {
        v as i64
    } else {
        let shift = 64 - n;
        ((v << shift) as i64) >> shift
    }
}

/// Read side of the bitstream contract.
pub trait BitSource {
    /// Absolute bit offset from the start of the stream.
    fn position(&self) -> u64;

    /// Bits left before end of stream.
    fn remaining(&self) -> u64;

    /// Peeks `n` (1..=64) raw MSB-first bits without moving.
    fn peek_raw(&self, n: u32) -> Result<Peeked, BitError>;

    /// Advances by `n` bits.
    fn skip(&mut self, n: u64) -> Result<(), BitError>;

    fn read_raw(&mut self, n: u32) -> Result<u64, BitError> {
        let p = self.peek_raw(n)?;
        if !p.complete(n) {
            return Err(BitError::EndOfStream {
                position: self.position(),
                requested: n as u64,
                available: p.available as u64,
            });
        }
        self.skip(n as u64)?;
        Ok(p.value)
    }

    fn read_uint(&mut self, n: u32, order: ByteOrder) -> Result<u64, BitError> {
        check_width(n)?;
        check_order(n, order)?;
        let v = self.read_raw(n)?;
        Ok(match order {
            ByteOrder::Big => v,
            ByteOrder::Little => swap_bytes(v, n),
        })
    }

    /// Reads a two's-complement field, sign-extending from bit `n - 1`.
    fn read_int(&mut self, n: u32, order: ByteOrder) -> Result<i64, BitError> {
        self.read_uint(n, order).map(|v| sign_extend(v, n))
    }

    /// Peeks a typed field. Short peeks near the end of stream report the
    /// real bit count in `available`; byte reordering only applies to
    /// complete peeks.
    fn peek_uint(&self, n: u32, order: ByteOrder) -> Result<Peeked, BitError> {
        check_width(n)?;
        check_order(n, order)?;
        let p = self.peek_raw(n)?;
        Ok(match order {
            ByteOrder::Little if p.complete(n) => Peeked { value: swap_bytes(p.value, n), ..p },
            _ => p,
        })
    }

    /// Skips to the next multiple of `alength`; returns the bits skipped.
    fn align(&mut self, alength: u32) -> Result<u32, BitError> {
        if alength == 0 {
            return Err(BitError::ZeroAlignment);
        }
        let pos = self.position();
        let skip = ((alength as u64 - pos % alength as u64) % alength as u64) as u32;
        if skip as u64 > self.remaining() {
            return Err(BitError::EndOfStream { position: pos, requested: skip as u64, available: self.remaining() });
        }
        self.skip(skip as u64)?;
        Ok(skip)
    }

    /// Bits `align` would skip, without moving.
    fn align_gap(&self, alength: u32) -> u32 {
        if alength == 0 {
            return 0;
        }
        let pos = self.position();
        ((alength as u64 - pos % alength as u64) % alength as u64) as u32
    }

    /// IEEE-754 binary32 (`width == 32`) or binary64 (`width == 64`).
    fn read_float(&mut self, width: u32, order: ByteOrder) -> Result<f64, BitError> {
        match width {
            32 => self.read_uint(32, order).map(|b| f32::from_bits(b as u32) as f64),
            64 => self.read_uint(64, order).map(f64::from_bits),
            w => Err(BitError::InvalidWidth(w)),
        }
    }
}

/// Write side of the bitstream contract.
pub trait BitSink {
    fn position(&self) -> u64;

    /// Appends the low `n` bits of `value`, MSB first. `value` must fit.
    fn write_raw(&mut self, n: u32, value: u64) -> Result<(), BitError>;

    fn write_uint(&mut self, n: u32, value: u64, order: ByteOrder) -> Result<(), BitError> {
        check_width(n)?;
        check_order(n, order)?;
        if value & !mask(n) != 0 {
            return Err(BitError::OutOfRange { value: value.to_string(), width: n });
        }
        let v = match order {
            ByteOrder::Big => value,
            ByteOrder::Little => swap_bytes(value, n),
        };
        self.write_raw(n, v)
    }

    /// Writes a two's-complement field; `value` must lie in
    /// `[-2^(n-1), 2^(n-1))`.
    fn write_int(&mut self, n: u32, value: i64, order: ByteOrder) -> Result<(), BitError> {
        check_width(n)?;
        if n < 64 {
            let lo = -(1i64 << (n - 1));
            let hi = 1i64 << (n - 1);
            if value < lo || value >= hi {
                return Err(BitError::OutOfRange { value: value.to_string(), width: n });
            }
        }
        self.write_uint(n, value as u64 & mask(n), order)
    }

    /// Pads zero bits up to the next multiple of `alength`.
    fn align(&mut self, alength: u32) -> Result<u32, BitError> {
        if alength == 0 {
            return Err(BitError::ZeroAlignment);
        }
        let pos = self.position();
        let mut pad = ((alength as u64 - pos % alength as u64) % alength as u64) as u32;
        let total = pad;
        while pad > 0 {
            let chunk = pad.min(64);
            self.write_raw(chunk, 0)?;
            pad -= chunk;
        }
        Ok(total)
    }

    fn write_float(&mut self, width: u32, value: f64, order: ByteOrder) -> Result<(), BitError> {
        match width {
            32 => self.write_uint(32, (value as f32).to_bits() as u64, order),
            64 => self.write_uint(64, value.to_bits(), order),
            w => Err(BitError::InvalidWidth(w)),
        }
    }
}

/// Read cursor over an in-memory buffer.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    len_bits: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, len_bits: data.len() as u64 * 8, pos: 0 }
    }

    /// A reader that sees only the first `len_bits` bits of `data`.
    pub fn with_bit_len(data: &'a [u8], len_bits: u64) -> Self {
        let len_bits = len_bits.min(data.len() as u64 * 8);
        BitReader { data, len_bits, pos: 0 }
    }

    pub fn len_bits(&self) -> u64 {
        self.len_bits
    }

    /// Moves the cursor back (or forward) to an absolute offset.
    pub fn rewind_to(&mut self, pos: u64) {
        self.pos = pos.min(self.len_bits);
    }

    #[inline]
    fn window(&self, pos: u64) -> u128 {
        let start = (pos / 8) as usize;
        let mut buf = [0u8; 16];
        if start < self.data.len() {
            let end = (start + 16).min(self.data.len());
            buf[..end - start].copy_from_slice(&self.data[start..end]);
        }
        u128::from_be_bytes(buf)
    }
}

impl BitSource for BitReader<'_> {
    fn position(&self) -> u64 {
        self.pos
    }

    fn remaining(&self) -> u64 {
        self.len_bits - self.pos
    }

    #[inline]
    fn peek_raw(&self, n: u32) -> Result<Peeked, BitError> {
        check_width(n)?;
        let shift = (self.pos % 8) as u32;
        let w = self.window(self.pos) << shift;
        let mut value = (w >> (128 - n)) as u64;
        let rem = self.remaining();
        let available = if rem >= n as u64 { n } else { rem as u32 };
        if available < n {
            // zero the bits past the logical end
            let missing = n - available;
            value &= !mask(missing);
        }
        Ok(Peeked { value, available })
    }

    #[inline]
    fn skip(&mut self, n: u64) -> Result<(), BitError> {
        if n > self.remaining() {
            return Err(BitError::EndOfStream { position: self.pos, requested: n, available: self.remaining() });
        }
        self.pos += n;
        Ok(())
    }
}

/// Write cursor accumulating into a byte vector. The final partial byte is
/// zero padded.
#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    pos: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

impl BitSink for BitWriter {
    fn position(&self) -> u64 {
        self.pos
    }

    fn write_raw(&mut self, n: u32, value: u64) -> Result<(), BitError> {
        check_width(n)?;
        if value & !mask(n) != 0 {
            return Err(BitError::OutOfRange { value: value.to_string(), width: n });
        }
        let mut left = n;
        while left > 0 {
            let used = (self.pos % 8) as u32;
            if used == 0 {
                self.buf.push(0);
            }
            let room = 8 - used;
            let take = room.min(left);
            let chunk = ((value >> (left - take)) & mask(take)) as u8;
            let last = self.buf.len() - 1;
            self.buf[last] |= chunk << (room - take);
            left -= take;
            self.pos += take as u64;
        }
        Ok(())
    }
}
