//! MSB-first bit packing.

/// Appends codes most significant bit first; the last byte is zero-padded.
pub(crate) struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    acc: u64,
    pending: u32,
    written: u64,
}

impl<'a> BitWriter<'a> {
    pub(crate) fn new(out: &'a mut Vec<u8>) -> Self {
        Self {
            out,
            acc: 0,
            pending: 0,
            written: 0,
        }
    }

    /// Writes the low `len` bits of `code`, `len <= 32`.
    #[inline]
    pub(crate) fn put(&mut self, code: u32, len: u32) {
        self.acc = (self.acc << len) | code as u64;
        self.pending += len;
        self.written += len as u64;
        if self.pending >= 32 {
            self.pending -= 32;
            let word = (self.acc >> self.pending) as u32;
            self.out.extend_from_slice(&word.to_be_bytes());
        }
    }

    /// Flushes the tail and returns the number of bits written.
    pub(crate) fn finish(self) -> u64 {
        let mut left = self.pending;
        while left >= 8 {
            left -= 8;
            self.out.push((self.acc >> left) as u8);
        }
        if left > 0 {
            self.out.push((self.acc << (8 - left)) as u8);
        }
        self.written
    }
}

/// Reads MSB-first. Bytes past the end of `data` read as zero; callers
/// track [`BitReader::consumed`] against the declared bit length.
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    bits: u32,
    consumed: u64,
}

impl<'a> BitReader<'a> {
    pub(crate) fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            acc: 0,
            bits: 0,
            consumed: 0,
        }
    }

    /// Tops the accumulator up to at least 57 bits.
    #[inline]
    pub(crate) fn refill(&mut self) {
        if self.pos + 8 <= self.data.len() {
            let word = u64::from_be_bytes(self.data[self.pos..self.pos + 8].try_into().unwrap());
            self.acc |= word >> self.bits;
            let take = (63 - self.bits) >> 3;
            self.pos += take as usize;
            self.bits += take * 8;
        } else {
            while self.bits <= 56 {
                let b = self.data.get(self.pos).copied().unwrap_or(0);
                self.pos += 1;
                self.acc |= (b as u64) << (56 - self.bits);
                self.bits += 8;
            }
        }
    }

    /// Next `n` bits without consuming them, `1 <= n <= 32`.
    #[inline]
    pub(crate) fn peek(&self, n: u32) -> u32 {
        (self.acc >> (64 - n)) as u32
    }

    #[inline]
    pub(crate) fn consume(&mut self, n: u32) {
        self.acc <<= n;
        self.bits -= n;
        self.consumed += n as u64;
    }

    pub(crate) fn consumed(&self) -> u64 {
        self.consumed
    }
}
