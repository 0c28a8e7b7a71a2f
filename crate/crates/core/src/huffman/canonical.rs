use super::bitio::{BitReader, BitWriter};
use super::codebook::{BlockCodebook, MAX_CODE_LENGTH};
use crate::error::{LmcError, Result};

/// Codes assigned by the canonical rule: shorter codes first, equal lengths
/// in ascending symbol order, consecutive values within a length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCodes {
    codes: [u16; 256],
    lengths: [u8; 256],
}

impl CanonicalCodes {
    /// `(code, length)` of `symbol`; length 0 means absent.
    pub fn code(&self, symbol: u8) -> (u16, u8) {
        (self.codes[symbol as usize], self.lengths[symbol as usize])
    }

    pub fn lengths(&self) -> &[u8; 256] {
        &self.lengths
    }
}

pub fn assign_canonical(cb: &BlockCodebook) -> Result<CanonicalCodes> {
    let lengths = *cb.lengths();
    if cb.kraft_units() > 1 << MAX_CODE_LENGTH {
        return Err(LmcError::MalformedCodebook(
            "code lengths violate the Kraft inequality".into(),
        ));
    }
    let next = first_codes(&lengths);
    let mut next = next;
    let mut codes = [0u16; 256];
    for (sym, &len) in lengths.iter().enumerate() {
        if len > 0 {
            codes[sym] = next[len as usize];
            next[len as usize] += 1;
        }
    }
    Ok(CanonicalCodes { codes, lengths })
}

/// First canonical code of each length.
fn first_codes(lengths: &[u8; 256]) -> [u16; MAX_CODE_LENGTH as usize + 1] {
    let mut per_len = [0u16; MAX_CODE_LENGTH as usize + 1];
    for &l in lengths.iter().filter(|&&l| l > 0) {
        per_len[l as usize] += 1;
    }
    let mut first = [0u16; MAX_CODE_LENGTH as usize + 1];
    let mut code = 0u16;
    for len in 1..=MAX_CODE_LENGTH as usize {
        code = (code + per_len[len - 1]) << 1;
        first[len] = code;
    }
    first
}

/// Packed bits of one Huffman-coded block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBits {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

pub fn encode_block(block: &[u8], codes: &CanonicalCodes) -> Result<EncodedBits> {
    let mut bytes = Vec::new();
    let bit_len = encode_into(block, codes, &mut bytes)?;
    Ok(EncodedBits { bytes, bit_len })
}

/// Appends the packed code bits of `block` to `out`; returns the bit count.
pub(crate) fn encode_into(block: &[u8], codes: &CanonicalCodes, out: &mut Vec<u8>) -> Result<u64> {
    if let Some(&missing) = block.iter().find(|&&b| codes.lengths[b as usize] == 0) {
        return Err(LmcError::MalformedInput(format!(
            "byte {missing:#04x} has no code in this codebook"
        )));
    }
    let total: u64 = block.iter().map(|&b| codes.lengths[b as usize] as u64).sum();
    out.reserve(total.div_ceil(8) as usize + 4);
    let mut w = BitWriter::new(out);
    for &b in block {
        w.put(codes.codes[b as usize] as u32, codes.lengths[b as usize] as u32);
    }
    Ok(w.finish())
}

const LOOKUP_BITS: u32 = 11;

/// Table-driven canonical decoder: one lookup for codes up to 11 bits,
/// a per-length range walk for the rest.
pub(crate) struct DecodeTable {
    /// `symbol << 4 | length`, or 0 when the prefix belongs to a longer code.
    fast: Vec<u16>,
    first_code: [u32; MAX_CODE_LENGTH as usize + 1],
    count: [u32; MAX_CODE_LENGTH as usize + 1],
    offset: [u32; MAX_CODE_LENGTH as usize + 1],
    sorted: Vec<u8>,
}

impl DecodeTable {
    pub(crate) fn new(cb: &BlockCodebook) -> Self {
        let lengths = cb.lengths();
        let first = first_codes(lengths);
        let mut count = [0u32; MAX_CODE_LENGTH as usize + 1];
        for &l in lengths.iter().filter(|&&l| l > 0) {
            count[l as usize] += 1;
        }
        let mut offset = [0u32; MAX_CODE_LENGTH as usize + 1];
        let mut acc = 0;
        for len in 1..=MAX_CODE_LENGTH as usize {
            offset[len] = acc;
            acc += count[len];
        }
        let mut sorted = vec![0u8; acc as usize];
        let mut fill = offset;
        let mut next = first;
        let mut fast = vec![0u16; 1 << LOOKUP_BITS];
        for len in 1..=MAX_CODE_LENGTH {
            for (sym, _) in lengths.iter().enumerate().filter(|(_, &l)| l == len) {
                sorted[fill[len as usize] as usize] = sym as u8;
                fill[len as usize] += 1;
                let code = next[len as usize] as u32;
                next[len as usize] += 1;
                if len as u32 <= LOOKUP_BITS {
                    let shift = LOOKUP_BITS - len as u32;
                    let start = (code << shift) as usize;
                    let entry = ((sym as u16) << 4) | len as u16;
                    fast[start..start + (1 << shift)].fill(entry);
                }
            }
        }
        let mut first_code = [0u32; MAX_CODE_LENGTH as usize + 1];
        for (f, &c) in first_code.iter_mut().zip(first.iter()) {
            *f = c as u32;
        }
        Self {
            fast,
            first_code,
            count,
            offset,
            sorted,
        }
    }

    /// Decodes exactly `out.len()` symbols from `bits`, which must hold
    /// exactly `bit_len` meaningful bits.
    pub(crate) fn decode_into(&self, bits: &[u8], bit_len: u64, out: &mut [u8]) -> Result<()> {
        if bits.len() as u64 != bit_len.div_ceil(8) {
            return Err(LmcError::corrupt(format!(
                "{} payload bytes cannot hold exactly {bit_len} bits",
                bits.len()
            )));
        }
        let mut r = BitReader::new(bits);
        for slot in out.iter_mut() {
            r.refill();
            let entry = self.fast[r.peek(LOOKUP_BITS) as usize];
            let (sym, len) = if entry != 0 {
                ((entry >> 4) as u8, (entry & 0xF) as u32)
            } else {
                self.decode_long(r.peek(MAX_CODE_LENGTH as u32))?
            };
            r.consume(len);
            *slot = sym;
        }
        if r.consumed() > bit_len {
            return Err(LmcError::corrupt("Huffman payload exhausted before block end"));
        }
        if r.consumed() != bit_len {
            return Err(LmcError::corrupt(format!(
                "Huffman payload has {} unused bits",
                bit_len - r.consumed()
            )));
        }
        if bit_len % 8 != 0 {
            let pad_mask = 0xFFu8 >> (bit_len % 8);
            if bits[bits.len() - 1] & pad_mask != 0 {
                return Err(LmcError::corrupt("nonzero padding after Huffman payload"));
            }
        }
        Ok(())
    }

    fn decode_long(&self, window: u32) -> Result<(u8, u32)> {
        for len in LOOKUP_BITS + 1..=MAX_CODE_LENGTH as u32 {
            let code = window >> (MAX_CODE_LENGTH as u32 - len);
            let rel = code.wrapping_sub(self.first_code[len as usize]);
            if rel < self.count[len as usize] {
                let idx = self.offset[len as usize] + rel;
                return Ok((self.sorted[idx as usize], len));
            }
        }
        Err(LmcError::corrupt("invalid Huffman prefix"))
    }
}

/// Decodes `out_len` symbols coded with `codebook` from `bits`, of which the
/// first `bit_len` are meaningful.
pub fn decode_block(
    bits: &[u8],
    bit_len: u64,
    codebook: &BlockCodebook,
    out_len: usize,
) -> Result<Vec<u8>> {
    let mut out = vec![0u8; out_len];
    if out_len == 0 {
        if bit_len != 0 {
            return Err(LmcError::corrupt("bits present for an empty block"));
        }
        return Ok(out);
    }
    DecodeTable::new(codebook).decode_into(bits, bit_len, &mut out)?;
    Ok(out)
}
