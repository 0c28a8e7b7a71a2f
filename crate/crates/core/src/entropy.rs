//! Byte histograms and order-0 Shannon entropy over blocks.

use crate::error::{LmcError, Result};
use crate::par::*;

pub const DEFAULT_BLOCK_SIZE: usize = 64 * 1024;
pub const MIN_BLOCK_SIZE: usize = 4 * 1024;
pub const MAX_BLOCK_SIZE: usize = 1024 * 1024;

/// Accepts powers of two in `[MIN_BLOCK_SIZE, MAX_BLOCK_SIZE]`.
pub fn validate_block_size(block_size: usize) -> Result<()> {
    if !block_size.is_power_of_two() || !(MIN_BLOCK_SIZE..=MAX_BLOCK_SIZE).contains(&block_size) {
        return Err(LmcError::InvalidConfig(format!(
            "block size {block_size} must be a power of two between {MIN_BLOCK_SIZE} and {MAX_BLOCK_SIZE}"
        )));
    }
    Ok(())
}

/// Occurrence counts of each byte value within one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteHistogram {
    counts: [u64; 256],
    total: u64,
}

impl ByteHistogram {
    /// Builds a histogram from explicit counts; at least one must be nonzero.
    pub fn from_counts(counts: [u64; 256]) -> Result<Self> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(LmcError::EmptyInput);
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn count(&self, symbol: u8) -> u64 {
        self.counts[symbol as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct byte values present.
    pub fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// The only byte value present, if the block is monosymbolic.
    pub fn single_symbol(&self) -> Option<u8> {
        let mut present = self.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        let (sym, _) = present.next()?;
        present.next().is_none().then_some(sym as u8)
    }

    /// Empirical probability of `symbol`.
    pub fn probability(&self, symbol: u8) -> f64 {
        self.counts[symbol as usize] as f64 / self.total as f64
    }
}

/// Entropy of a byte distribution in bits per byte, within `[0, 8]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BlockEntropy(f64);

impl BlockEntropy {
    pub fn bits_per_byte(self) -> f64 {
        self.0
    }
}

pub fn histogram(block: &[u8]) -> Result<ByteHistogram> {
    if block.is_empty() {
        return Err(LmcError::EmptyInput);
    }
    Ok(ByteHistogram {
        counts: count_bytes(block),
        total: block.len() as u64,
    })
}

/// Counts into four interleaved tables to break the store-to-load
/// dependency on runs of equal bytes.
fn count_bytes(block: &[u8]) -> [u64; 256] {
    let mut tables = [[0u32; 256]; 4];
    let mut out = [0u64; 256];
    // u32 tables overflow past 4 GiB per lane; flush well before that.
    for piece in block.chunks(1 << 30) {
        let mut quads = piece.chunks_exact(4);
        for q in &mut quads {
            tables[0][q[0] as usize] += 1;
            tables[1][q[1] as usize] += 1;
            tables[2][q[2] as usize] += 1;
            tables[3][q[3] as usize] += 1;
        }
        for &b in quads.remainder() {
            tables[0][b as usize] += 1;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += tables.iter().map(|t| t[i] as u64).sum::<u64>();
        }
        tables = [[0u32; 256]; 4];
    }
    out
}

pub fn entropy(h: &ByteHistogram) -> Result<BlockEntropy> {
    if h.total == 0 {
        return Err(LmcError::EmptyInput);
    }
    let total = h.total as f64;
    let bits = h
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    // A single symbol sums to -0.0; report it as plain zero.
    Ok(BlockEntropy(if bits <= 0.0 { 0.0 } else { bits.min(8.0) }))
}

/// Entropy of each `block_size` block of `data`, in order.
pub fn block_entropies(data: &[u8], block_size: usize) -> Result<Vec<BlockEntropy>> {
    if block_size == 0 {
        return Err(LmcError::InvalidConfig("block size must be positive".into()));
    }
    if data.is_empty() {
        return Err(LmcError::EmptyInput);
    }
    data.par_chunks(block_size)
        .map(|block| histogram(block).and_then(|h| entropy(&h)))
        .collect()
}

/// Compressed/original ratio an ideal order-0 coder would reach if every
/// block were coded at exactly its own entropy.
pub fn estimate_file_entropy_ratio(data: &[u8], block_size: usize) -> Result<f64> {
    let entropies = block_entropies(data, block_size)?;
    let ideal_bytes: f64 = data
        .chunks(block_size)
        .zip(&entropies)
        .map(|(block, h)| h.bits_per_byte() * block.len() as f64 / 8.0)
        .sum();
    Ok(ideal_bytes / data.len() as f64)
}
