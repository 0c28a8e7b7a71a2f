use crate::entropy::ByteHistogram;
use crate::error::{LmcError, Result};

/// Longest code any block may use.
pub const MAX_CODE_LENGTH: u8 = 15;

/// Serialized codebook size: 256 four-bit lengths.
pub const CODEBOOK_WIRE_LEN: usize = 128;

/// Per-block code lengths, one per byte value; 0 marks an absent symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCodebook {
    lengths: [u8; 256],
}

impl BlockCodebook {
    /// Validates explicit lengths: at most 15 bits, at least one symbol
    /// present, and the Kraft sum not above one.
    pub fn from_lengths(lengths: [u8; 256]) -> Result<Self> {
        if let Some(&l) = lengths.iter().find(|&&l| l > MAX_CODE_LENGTH) {
            return Err(LmcError::MalformedCodebook(format!(
                "code length {l} exceeds {MAX_CODE_LENGTH}"
            )));
        }
        if lengths.iter().all(|&l| l == 0) {
            return Err(LmcError::MalformedCodebook("no symbols present".into()));
        }
        if kraft_units(&lengths) > 1 << MAX_CODE_LENGTH {
            return Err(LmcError::MalformedCodebook(
                "code lengths violate the Kraft inequality".into(),
            ));
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[u8; 256] {
        &self.lengths
    }

    pub fn length(&self, symbol: u8) -> u8 {
        self.lengths[symbol as usize]
    }

    pub fn max_length(&self) -> u8 {
        MAX_CODE_LENGTH
    }

    /// Longest length actually in use.
    pub fn longest(&self) -> u8 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// Kraft sum scaled by 2^15, so a complete code sums to exactly 32768.
    pub fn kraft_units(&self) -> u32 {
        kraft_units(&self.lengths)
    }

    /// Encoded size in bits of a block with histogram `h`.
    pub fn payload_bits(&self, h: &ByteHistogram) -> u64 {
        h.counts()
            .iter()
            .zip(self.lengths.iter())
            .map(|(&c, &l)| c * l as u64)
            .sum()
    }

    /// Two lengths per byte, even symbol in the low nibble.
    pub fn to_wire(&self) -> [u8; CODEBOOK_WIRE_LEN] {
        let mut out = [0u8; CODEBOOK_WIRE_LEN];
        for (o, pair) in out.iter_mut().zip(self.lengths.chunks_exact(2)) {
            *o = pair[0] | (pair[1] << 4);
        }
        out
    }

    pub fn from_wire(wire: &[u8]) -> Result<Self> {
        if wire.len() != CODEBOOK_WIRE_LEN {
            return Err(LmcError::MalformedCodebook(format!(
                "codebook is {} bytes, expected {CODEBOOK_WIRE_LEN}",
                wire.len()
            )));
        }
        let mut lengths = [0u8; 256];
        for (pair, &b) in lengths.chunks_exact_mut(2).zip(wire) {
            pair[0] = b & 0x0F;
            pair[1] = b >> 4;
        }
        Self::from_lengths(lengths)
    }
}

fn kraft_units(lengths: &[u8; 256]) -> u32 {
    lengths
        .iter()
        .filter(|&&l| l > 0)
        .map(|&l| 1u32 << (MAX_CODE_LENGTH - l.min(MAX_CODE_LENGTH)))
        .sum()
}

/// Optimal length-limited code lengths for the block histogram.
///
/// A lone symbol gets a 1-bit code. Otherwise lengths come from
/// package-merge with a 15-bit limit, which is optimal among all prefix codes
/// obeying that limit.
pub fn build_codebook(h: &ByteHistogram) -> Result<BlockCodebook> {
    if h.total() == 0 {
        return Err(LmcError::EmptyInput);
    }
    // (count, symbol) ascending; the symbol tiebreak makes builds deterministic.
    let mut leaves: Vec<(u64, u8)> = h
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| (c, s as u8))
        .collect();
    leaves.sort_unstable();

    let mut lengths = [0u8; 256];
    if leaves.len() == 1 {
        lengths[leaves[0].1 as usize] = 1;
    } else {
        let weights: Vec<u64> = leaves.iter().map(|&(c, _)| c).collect();
        let sorted_lengths = package_merge(&weights, MAX_CODE_LENGTH as usize);
        for (&(_, sym), len) in leaves.iter().zip(sorted_lengths) {
            lengths[sym as usize] = len;
        }
    }
    Ok(BlockCodebook { lengths })
}

/// Package-merge (coin collector) over ascending `weights`, at least two of
/// them and no more than `2^max_len`. Returns lengths in the same order.
fn package_merge(weights: &[u64], max_len: usize) -> Vec<u8> {
    let n = weights.len();
    debug_assert!(n >= 2 && n <= 1 << max_len);

    // levels[0] is the deepest list (leaves only); each later list merges the
    // leaves with pairwise packages of the previous one. We keep only which
    // entries are packages, since leaves always appear in ascending order.
    let mut levels: Vec<Vec<bool>> = Vec::with_capacity(max_len);
    levels.push(vec![false; n]);
    let mut prev: Vec<u64> = weights.to_vec();
    let mut merged = Vec::with_capacity(2 * n);
    let mut is_package = Vec::with_capacity(2 * n);

    for _ in 1..max_len {
        merged.clear();
        is_package.clear();
        let mut leaves = weights.iter().copied().peekable();
        let mut packages = prev.chunks_exact(2).map(|p| p[0] + p[1]).peekable();
        loop {
            match (leaves.peek(), packages.peek()) {
                (Some(&l), Some(&p)) if l <= p => {
                    merged.push(l);
                    is_package.push(false);
                    leaves.next();
                }
                (_, Some(&p)) => {
                    merged.push(p);
                    is_package.push(true);
                    packages.next();
                }
                (Some(&l), None) => {
                    merged.push(l);
                    is_package.push(false);
                    leaves.next();
                }
                (None, None) => break,
            }
        }
        levels.push(is_package.clone());
        std::mem::swap(&mut prev, &mut merged);
    }

    // The cheapest 2n - 2 entries of the top list form the solution; every
    // time a leaf is selected at some level its code grows by one bit.
    let mut lengths = vec![0u8; n];
    let mut take = 2 * n - 2;
    for flags in levels.iter().rev() {
        let chosen = &flags[..take];
        let packages = chosen.iter().filter(|&&p| p).count();
        let leaves = take - packages;
        for l in &mut lengths[..leaves] {
            *l += 1;
        }
        take = 2 * packages;
        if take == 0 {
            break;
        }
    }
    lengths
}
