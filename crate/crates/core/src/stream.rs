//! The LMC code stream.
//!
//! ```text
//! header (28 bytes, little-endian integers)
//!   0  magic "LMC1"
//!   4  version            u8   = 1
//!   5  flags              u8   bit0 byte-grouped, bit1 XOR delta
//!   6  element type       u8   0 raw, 1 bf16, 2 fp16, 3 fp32
//!   7  reserved           u8   = 0
//!   8  original length    u64
//!  16  block size         u32  power of two, 4 KiB ..= 1 MiB
//!  20  segment count      u32  >= 1
//!  24  crc32              u32  IEEE, over the uncompressed payload
//! then, per window until `original length` bytes are covered:
//!   segment table  segment_count x (original u64, compressed u64)
//!   segment payloads, concatenated in table order
//! each segment payload is a run of block records:
//!   mode u8 (0 Huffman, 1 RLE, 2 stored), original length u32, payload
//!   Huffman: 128-byte codebook, bit count u32, packed bits (MSB first)
//!   RLE:     the repeated byte
//!   stored:  the raw bytes
//! ```
//!
//! Version 1 fixes the byte-group order (least significant group first), the
//! MSB-first bit order and the nibble-packed codebook.

use std::borrow::Cow;

use crate::bytegroup::{group_into, group_into_par, ungroup_into, ungroup_into_par};
use crate::delta::DeltaBuffer;
use crate::element::{ElementType, TensorBuffer};
use crate::entropy::{histogram, validate_block_size, DEFAULT_BLOCK_SIZE};
use crate::error::{LmcError, Result};
use crate::huffman::{
    assign_canonical, build_codebook, encode_into, BlockCodebook, DecodeTable, CODEBOOK_WIRE_LEN,
};
use crate::par::*;

pub const MAGIC: [u8; 4] = *b"LMC1";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 28;
pub const SEGMENT_ENTRY_LEN: usize = 16;
/// Mode byte plus original length.
pub const RECORD_HEADER_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamFlags(u8);

impl StreamFlags {
    pub const BYTE_GROUPED: u8 = 0b01;
    pub const DELTA: u8 = 0b10;
    const KNOWN: u8 = Self::BYTE_GROUPED | Self::DELTA;

    pub fn new(byte_grouped: bool, delta: bool) -> Self {
        let mut bits = 0;
        if byte_grouped {
            bits |= Self::BYTE_GROUPED;
        }
        if delta {
            bits |= Self::DELTA;
        }
        Self(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn byte_grouped(self) -> bool {
        self.0 & Self::BYTE_GROUPED != 0
    }

    pub fn delta(self) -> bool {
        self.0 & Self::DELTA != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub flags: StreamFlags,
    pub element_type: ElementType,
    pub original_length: u64,
    pub block_size: u32,
    pub segment_count: u32,
    pub crc32: u32,
}

impl StreamHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4] = FORMAT_VERSION;
        b[5] = self.flags.bits();
        b[6] = self.element_type.code();
        b[7] = 0;
        b[8..16].copy_from_slice(&self.original_length.to_le_bytes());
        b[16..20].copy_from_slice(&self.block_size.to_le_bytes());
        b[20..24].copy_from_slice(&self.segment_count.to_le_bytes());
        b[24..28].copy_from_slice(&self.crc32.to_le_bytes());
        b
    }

    pub fn parse(stream: &[u8]) -> Result<Self> {
        if stream.len() < MAGIC.len() || stream[..4] != MAGIC {
            return Err(LmcError::UnsupportedFormat("missing LMC1 magic".into()));
        }
        if stream.len() < 5 {
            return Err(LmcError::corrupt("truncated header"));
        }
        if stream[4] != FORMAT_VERSION {
            return Err(LmcError::UnsupportedFormat(format!(
                "stream version {} (this build reads version {FORMAT_VERSION})",
                stream[4]
            )));
        }
        if stream.len() < HEADER_LEN {
            return Err(LmcError::corrupt("truncated header"));
        }
        let flags = stream[5];
        if flags & !StreamFlags::KNOWN != 0 {
            return Err(LmcError::UnsupportedFormat(format!("unknown flag bits {flags:#04x}")));
        }
        let element_type = ElementType::from_code(stream[6])?;
        if stream[7] != 0 {
            return Err(LmcError::UnsupportedFormat("reserved header byte is set".into()));
        }
        let header = Self {
            flags: StreamFlags(flags),
            element_type,
            original_length: u64::from_le_bytes(stream[8..16].try_into().unwrap()),
            block_size: u32::from_le_bytes(stream[16..20].try_into().unwrap()),
            segment_count: u32::from_le_bytes(stream[20..24].try_into().unwrap()),
            crc32: u32::from_le_bytes(stream[24..28].try_into().unwrap()),
        };
        validate_block_size(header.block_size as usize)
            .map_err(|_| LmcError::corrupt(format!("invalid block size {}", header.block_size)))?;
        if header.segment_count == 0 {
            return Err(LmcError::corrupt("segment count is zero"));
        }
        if header.original_length % element_type.width() as u64 != 0 {
            return Err(LmcError::corrupt("original length is not a whole number of elements"));
        }
        Ok(header)
    }
}

/// Reads and validates just the header of a stream.
pub fn read_header(stream: &[u8]) -> Result<StreamHeader> {
    StreamHeader::parse(stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum BlockMode {
    Huffman = 0,
    Rle = 1,
    Stored = 2,
}

/// One coded block as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockRecord<'a> {
    Huffman {
        original_len: u32,
        codebook: BlockCodebook,
        bit_len: u32,
        bits: Cow<'a, [u8]>,
    },
    /// The whole block is `original_len` copies of `symbol`.
    Rle { original_len: u32, symbol: u8 },
    Stored { bytes: Cow<'a, [u8]> },
}

impl<'a> BlockRecord<'a> {
    pub fn mode(&self) -> BlockMode {
        match self {
            BlockRecord::Huffman { .. } => BlockMode::Huffman,
            BlockRecord::Rle { .. } => BlockMode::Rle,
            BlockRecord::Stored { .. } => BlockMode::Stored,
        }
    }

    pub fn original_len(&self) -> usize {
        match self {
            BlockRecord::Huffman { original_len, .. } | BlockRecord::Rle { original_len, .. } => {
                *original_len as usize
            }
            BlockRecord::Stored { bytes } => bytes.len(),
        }
    }

    pub fn serialized_len(&self) -> usize {
        RECORD_HEADER_LEN
            + match self {
                BlockRecord::Huffman { bits, .. } => CODEBOOK_WIRE_LEN + 4 + bits.len(),
                BlockRecord::Rle { .. } => 1,
                BlockRecord::Stored { bytes } => bytes.len(),
            }
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.push(self.mode() as u8);
        out.extend_from_slice(&(self.original_len() as u32).to_le_bytes());
        match self {
            BlockRecord::Huffman {
                codebook,
                bit_len,
                bits,
                ..
            } => {
                out.extend_from_slice(&codebook.to_wire());
                out.extend_from_slice(&bit_len.to_le_bytes());
                out.extend_from_slice(bits);
            }
            BlockRecord::Rle { symbol, .. } => out.push(*symbol),
            BlockRecord::Stored { bytes } => out.extend_from_slice(bytes),
        }
    }

    /// Parses one record from the front of `input`, borrowing its payload.
    pub fn parse(input: &'a [u8]) -> Result<(Self, usize)> {
        if input.len() < RECORD_HEADER_LEN {
            return Err(LmcError::corrupt("truncated block record"));
        }
        let mode = input[0];
        let original_len = u32::from_le_bytes(input[1..5].try_into().unwrap());
        if original_len == 0 {
            return Err(LmcError::corrupt("zero-length block record"));
        }
        let body = &input[RECORD_HEADER_LEN..];
        match mode {
            0 => {
                if body.len() < CODEBOOK_WIRE_LEN + 4 {
                    return Err(LmcError::corrupt("truncated Huffman block"));
                }
                let codebook = BlockCodebook::from_wire(&body[..CODEBOOK_WIRE_LEN])
                    .map_err(|e| LmcError::corrupt(e.to_string()))?;
                let bit_len = u32::from_le_bytes(
                    body[CODEBOOK_WIRE_LEN..CODEBOOK_WIRE_LEN + 4].try_into().unwrap(),
                );
                let nbytes = (bit_len as usize).div_ceil(8);
                let start = CODEBOOK_WIRE_LEN + 4;
                if body.len() - start < nbytes {
                    return Err(LmcError::corrupt("truncated Huffman payload"));
                }
                let record = BlockRecord::Huffman {
                    original_len,
                    codebook,
                    bit_len,
                    bits: Cow::Borrowed(&body[start..start + nbytes]),
                };
                Ok((record, RECORD_HEADER_LEN + start + nbytes))
            }
            1 => {
                let symbol = *body.first().ok_or_else(|| LmcError::corrupt("truncated RLE block"))?;
                Ok((BlockRecord::Rle { original_len, symbol }, RECORD_HEADER_LEN + 1))
            }
            2 => {
                let n = original_len as usize;
                if body.len() < n {
                    return Err(LmcError::corrupt("truncated stored block"));
                }
                let bytes = Cow::Borrowed(&body[..n]);
                Ok((BlockRecord::Stored { bytes }, RECORD_HEADER_LEN + n))
            }
            other => Err(LmcError::corrupt(format!("unknown block mode {other}"))),
        }
    }

    /// Decodes into `out`, whose length must equal the record's original length.
    pub fn decode_into(&self, out: &mut [u8]) -> Result<()> {
        if out.len() != self.original_len() {
            return Err(LmcError::corrupt("block length does not match its slot"));
        }
        match self {
            BlockRecord::Huffman {
                codebook,
                bit_len,
                bits,
                ..
            } => DecodeTable::new(codebook).decode_into(bits, *bit_len as u64, out),
            BlockRecord::Rle { symbol, .. } => {
                out.fill(*symbol);
                Ok(())
            }
            BlockRecord::Stored { bytes } => {
                out.copy_from_slice(bytes);
                Ok(())
            }
        }
    }

    pub fn into_owned(self) -> BlockRecord<'static> {
        match self {
            BlockRecord::Huffman {
                original_len,
                codebook,
                bit_len,
                bits,
            } => BlockRecord::Huffman {
                original_len,
                codebook,
                bit_len,
                bits: Cow::Owned(bits.into_owned()),
            },
            BlockRecord::Rle { original_len, symbol } => BlockRecord::Rle { original_len, symbol },
            BlockRecord::Stored { bytes } => BlockRecord::Stored {
                bytes: Cow::Owned(bytes.into_owned()),
            },
        }
    }
}

enum BlockPlan {
    Huffman { codebook: BlockCodebook, bits: u64 },
    Rle(u8),
    Stored,
}

/// Picks the mode with the smallest serialized size; ties go to the lower
/// mode number. `block` must be non-empty.
fn plan_block(block: &[u8]) -> Result<BlockPlan> {
    let h = histogram(block)?;
    if let Some(symbol) = h.single_symbol() {
        // 6 bytes; a Huffman record is at least 138 and stored at least 6.
        return Ok(BlockPlan::Rle(symbol));
    }
    let codebook = build_codebook(&h)?;
    let bits = codebook.payload_bits(&h);
    let huffman_size = CODEBOOK_WIRE_LEN as u64 + 4 + bits.div_ceil(8);
    if huffman_size <= block.len() as u64 {
        Ok(BlockPlan::Huffman { codebook, bits })
    } else {
        Ok(BlockPlan::Stored)
    }
}

/// Codes one block with the cheapest mode.
pub fn encode_block_record(block: &[u8]) -> Result<BlockRecord<'_>> {
    let original_len = record_len(block)?;
    Ok(match plan_block(block)? {
        BlockPlan::Rle(symbol) => BlockRecord::Rle { original_len, symbol },
        BlockPlan::Stored => BlockRecord::Stored {
            bytes: Cow::Borrowed(block),
        },
        BlockPlan::Huffman { codebook, .. } => {
            let mut bits = Vec::new();
            let bit_len = encode_into(block, &assign_canonical(&codebook)?, &mut bits)?;
            BlockRecord::Huffman {
                original_len,
                codebook,
                bit_len: bit_len as u32,
                bits: Cow::Owned(bits),
            }
        }
    })
}

fn record_len(block: &[u8]) -> Result<u32> {
    if block.is_empty() {
        return Err(LmcError::EmptyInput);
    }
    u32::try_from(block.len()).map_err(|_| LmcError::InvalidConfig("block too large".into()))
}

/// Serializes the cheapest record for `block` straight into `out`.
fn write_block(block: &[u8], out: &mut Vec<u8>) -> Result<()> {
    let original_len = record_len(block)?;
    match plan_block(block)? {
        BlockPlan::Rle(symbol) => {
            out.push(BlockMode::Rle as u8);
            out.extend_from_slice(&original_len.to_le_bytes());
            out.push(symbol);
        }
        BlockPlan::Stored => {
            out.push(BlockMode::Stored as u8);
            out.extend_from_slice(&original_len.to_le_bytes());
            out.extend_from_slice(block);
        }
        BlockPlan::Huffman { codebook, bits } => {
            out.push(BlockMode::Huffman as u8);
            out.extend_from_slice(&original_len.to_le_bytes());
            out.extend_from_slice(&codebook.to_wire());
            out.extend_from_slice(&(bits as u32).to_le_bytes());
            let written = encode_into(block, &assign_canonical(&codebook)?, out)?;
            debug_assert_eq!(written, bits);
        }
    }
    Ok(())
}

/// Splits `data` into `block_size` blocks and codes each independently.
pub fn compress_buffer(data: &[u8], block_size: usize) -> Result<Vec<BlockRecord<'_>>> {
    validate_block_size(block_size)?;
    data.chunks(block_size).map(encode_block_record).collect()
}

pub fn decompress_buffer(records: &[BlockRecord<'_>], expected_length: usize) -> Result<Vec<u8>> {
    let total: usize = records.iter().map(BlockRecord::original_len).sum();
    if total != expected_length {
        return Err(LmcError::corrupt(format!(
            "records hold {total} bytes, expected {expected_length}"
        )));
    }
    let mut out = vec![0u8; expected_length];
    let mut at = 0;
    for r in records {
        let n = r.original_len();
        r.decode_into(&mut out[at..at + n])?;
        at += n;
    }
    Ok(out)
}

/// Parses a serialized record run.
pub fn parse_records(mut payload: &[u8]) -> Result<Vec<BlockRecord<'_>>> {
    let mut records = Vec::new();
    while !payload.is_empty() {
        let (r, used) = BlockRecord::parse(payload)?;
        records.push(r);
        payload = &payload[used..];
    }
    Ok(records)
}

pub(crate) fn compress_segment(data: &[u8], block_size: usize) -> Result<Vec<u8>> {
    // Half the input is a decent first guess for checkpoint deltas.
    let mut out = Vec::with_capacity(data.len() / 2 + 64);
    for block in data.chunks(block_size) {
        write_block(block, &mut out)?;
    }
    Ok(out)
}

pub(crate) fn decompress_segment(payload: &[u8], block_size: usize, out: &mut [u8]) -> Result<()> {
    let mut input = payload;
    let mut at = 0;
    while !input.is_empty() {
        let (record, used) = BlockRecord::parse(input)?;
        let n = record.original_len();
        if n > block_size {
            return Err(LmcError::corrupt(format!("block of {n} bytes exceeds block size")));
        }
        if n > out.len() - at {
            return Err(LmcError::corrupt("segment decodes past its declared length"));
        }
        record.decode_into(&mut out[at..at + n])?;
        at += n;
        input = &input[used..];
    }
    if at != out.len() {
        return Err(LmcError::corrupt(format!(
            "segment decoded {at} of {} bytes",
            out.len()
        )));
    }
    Ok(())
}

/// Byte ranges of `segment_count` contiguous, block-aligned segments over a
/// window of `len` bytes. Trailing segments may be empty.
pub(crate) fn segment_ranges(
    len: usize,
    block_size: usize,
    segment_count: usize,
) -> Vec<std::ops::Range<usize>> {
    let blocks = len.div_ceil(block_size);
    (0..segment_count)
        .map(|i| {
            let b0 = i * blocks / segment_count;
            let b1 = (i + 1) * blocks / segment_count;
            (b0 * block_size).min(len)..(b1 * block_size).min(len)
        })
        .collect()
}

pub(crate) fn crc32(data: &[u8], parallel: bool) -> u32 {
    const CHUNK: usize = 8 << 20;
    if !parallel || data.len() <= CHUNK {
        return crc32fast::hash(data);
    }
    let parts: Vec<crc32fast::Hasher> = data
        .par_chunks(CHUNK)
        .map(|c| {
            let mut h = crc32fast::Hasher::new();
            h.update(c);
            h
        })
        .collect();
    let mut acc = crc32fast::Hasher::new();
    for p in &parts {
        acc.combine(p);
    }
    acc.finalize()
}

/// Everything that shapes the bytes of an encoded stream.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EncodeParams {
    pub element_type: ElementType,
    pub flags: StreamFlags,
    pub block_size: usize,
    pub segment_count: usize,
    /// Bytes per window; a multiple of `block_size`.
    pub window: usize,
}

pub(crate) fn encode_stream(data: &[u8], p: &EncodeParams, parallel: bool) -> Result<Vec<u8>> {
    validate_block_size(p.block_size)?;
    if p.segment_count == 0 || p.segment_count > u32::MAX as usize {
        return Err(LmcError::InvalidConfig("segment count must be at least 1".into()));
    }
    if data.len() % p.element_type.width() != 0 {
        return Err(LmcError::Alignment {
            len: data.len(),
            width: p.element_type.width(),
            element_type: p.element_type,
        });
    }
    debug_assert!(p.window >= p.block_size && p.window % p.block_size == 0);

    let width = p.element_type.width();
    let grouping = p.flags.byte_grouped() && width > 1;
    let header = StreamHeader {
        flags: p.flags,
        element_type: p.element_type,
        original_length: data.len() as u64,
        block_size: p.block_size as u32,
        segment_count: p.segment_count as u32,
        crc32: crc32(data, parallel),
    };

    let mut out = Vec::with_capacity(HEADER_LEN + data.len() / 2);
    out.extend_from_slice(&header.to_bytes());
    let mut scratch = if grouping {
        vec![0u8; p.window.min(data.len())]
    } else {
        Vec::new()
    };

    for window in data.chunks(p.window) {
        let source: &[u8] = if grouping {
            let dst = &mut scratch[..window.len()];
            if parallel {
                group_into_par(window, width, dst);
            } else {
                group_into(window, width, dst);
            }
            dst
        } else {
            window
        };
        let ranges = segment_ranges(source.len(), p.block_size, p.segment_count);
        let segments: Vec<Vec<u8>> = if parallel {
            ranges
                .par_iter()
                .map(|r| compress_segment(&source[r.clone()], p.block_size))
                .collect::<Result<_>>()?
        } else {
            ranges
                .iter()
                .map(|r| compress_segment(&source[r.clone()], p.block_size))
                .collect::<Result<_>>()?
        };
        for (r, seg) in ranges.iter().zip(&segments) {
            out.extend_from_slice(&(r.len() as u64).to_le_bytes());
            out.extend_from_slice(&(seg.len() as u64).to_le_bytes());
        }
        for seg in &segments {
            out.extend_from_slice(seg);
        }
    }
    Ok(out)
}

pub(crate) fn decode_stream(stream: &[u8], parallel: bool) -> Result<(StreamHeader, Vec<u8>)> {
    let header = StreamHeader::parse(stream)?;
    let block_size = header.block_size as usize;
    let segment_count = header.segment_count as usize;
    let width = header.element_type.width();
    let grouped = header.flags.byte_grouped() && width > 1;

    // Every record is at least 6 bytes and expands to at most one block.
    let max_plausible = (stream.len() as u64 / 6 + 1).saturating_mul(block_size as u64);
    if header.original_length > max_plausible {
        return Err(LmcError::corrupt("original length is implausible for the stream size"));
    }
    let total = header.original_length as usize;
    let mut out = vec![0u8; total];
    let mut scratch = Vec::new();
    let mut pos = HEADER_LEN;
    let mut written = 0usize;

    while written < total {
        let table_len = segment_count
            .checked_mul(SEGMENT_ENTRY_LEN)
            .ok_or_else(|| LmcError::corrupt("segment table too large"))?;
        let table = stream
            .get(pos..pos.saturating_add(table_len))
            .ok_or_else(|| LmcError::corrupt("truncated segment table"))?;
        pos += table_len;

        let mut entries = Vec::with_capacity(segment_count);
        let (mut window_len, mut payload_len) = (0u64, 0u64);
        for e in table.chunks_exact(SEGMENT_ENTRY_LEN) {
            let orig = u64::from_le_bytes(e[0..8].try_into().unwrap());
            let comp = u64::from_le_bytes(e[8..16].try_into().unwrap());
            window_len = window_len
                .checked_add(orig)
                .ok_or_else(|| LmcError::corrupt("segment lengths overflow"))?;
            payload_len = payload_len
                .checked_add(comp)
                .ok_or_else(|| LmcError::corrupt("segment lengths overflow"))?;
            entries.push((orig as usize, comp as usize));
        }
        if window_len == 0 {
            return Err(LmcError::corrupt("empty window"));
        }
        if window_len > (total - written) as u64 {
            return Err(LmcError::corrupt("segments exceed the original length"));
        }
        if payload_len > (stream.len() - pos) as u64 {
            return Err(LmcError::corrupt("segment table points past the end of the stream"));
        }
        let window_len = window_len as usize;
        if window_len % width != 0 {
            return Err(LmcError::corrupt("window is not a whole number of elements"));
        }

        let target: &mut [u8] = if grouped {
            scratch.resize(window_len, 0);
            &mut scratch[..]
        } else {
            &mut out[written..written + window_len]
        };
        let mut tasks: Vec<(&[u8], &mut [u8])> = Vec::with_capacity(segment_count);
        let mut rest = target;
        let mut at = pos;
        for &(orig, comp) in &entries {
            let (slot, tail) = rest.split_at_mut(orig);
            tasks.push((&stream[at..at + comp], slot));
            rest = tail;
            at += comp;
        }
        if parallel {
            tasks
                .into_par_iter()
                .map(|(src, dst)| decompress_segment(src, block_size, dst))
                .collect::<Result<()>>()?;
        } else {
            tasks
                .into_iter()
                .try_for_each(|(src, dst)| decompress_segment(src, block_size, dst))?;
        }
        if grouped {
            let dst = &mut out[written..written + window_len];
            if parallel {
                ungroup_into_par(&scratch, width, dst);
            } else {
                ungroup_into(&scratch, width, dst);
            }
        }
        pos = at;
        written += window_len;
    }
    if pos != stream.len() {
        return Err(LmcError::corrupt(format!(
            "{} trailing bytes after the last window",
            stream.len() - pos
        )));
    }
    let actual = crc32(&out, parallel);
    if actual != header.crc32 {
        return Err(LmcError::Integrity {
            expected: header.crc32,
            actual,
        });
    }
    Ok((header, out))
}

/// Options for single-threaded LMC compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LmcOptions {
    pub byte_group: bool,
    pub block_size: usize,
}

impl Default for LmcOptions {
    fn default() -> Self {
        Self {
            byte_group: true,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

/// A finished code stream plus the size of what it encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeStream {
    bytes: Vec<u8>,
    original_length: u64,
}

impl CodeStream {
    pub(crate) fn new(bytes: Vec<u8>, original_length: u64) -> Self {
        Self {
            bytes,
            original_length,
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn original_length(&self) -> u64 {
        self.original_length
    }

    /// Compressed size over original size; 0 for an empty original.
    pub fn ratio(&self) -> f64 {
        if self.original_length == 0 {
            return 0.0;
        }
        self.bytes.len() as f64 / self.original_length as f64
    }
}

impl AsRef<[u8]> for CodeStream {
    fn as_ref(&self) -> &[u8] {
        &self.bytes
    }
}

fn serial_params(
    element_type: ElementType,
    flags: StreamFlags,
    options: &LmcOptions,
    len: usize,
) -> EncodeParams {
    // One window covering the whole input, rounded up to whole blocks.
    let window = len.div_ceil(options.block_size).max(1) * options.block_size;
    EncodeParams {
        element_type,
        flags,
        block_size: options.block_size,
        segment_count: 1,
        window,
    }
}

/// Compresses `input` on the calling thread.
pub fn lmc_compress(input: &TensorBuffer, options: &LmcOptions) -> Result<CodeStream> {
    let flags = StreamFlags::new(options.byte_group, false);
    let params = serial_params(input.element_type(), flags, options, input.len());
    let bytes = encode_stream(input.bytes(), &params, false)?;
    Ok(CodeStream::new(bytes, input.len() as u64))
}

/// Like [`lmc_compress`] but marks the stream as holding an XOR delta.
pub fn lmc_compress_delta(delta: &DeltaBuffer, options: &LmcOptions) -> Result<CodeStream> {
    let flags = StreamFlags::new(options.byte_group, true);
    let params = serial_params(delta.element_type(), flags, options, delta.len());
    let bytes = encode_stream(delta.bytes(), &params, false)?;
    Ok(CodeStream::new(bytes, delta.len() as u64))
}

/// Decompresses a stream on the calling thread, verifying its checksum.
pub fn lmc_decompress(stream: &[u8]) -> Result<TensorBuffer> {
    let (header, bytes) = decode_stream(stream, false)?;
    TensorBuffer::new(bytes, header.element_type)
}
