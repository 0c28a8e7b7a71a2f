//! Helpers shared by the integration tests: a tiny deterministic generator,
//! an exhaustive optimal-prefix-code oracle, and a stream walker written
//! against the documented layout rather than the crate's own parser.
#![allow(dead_code)]

/// SplitMix64; stable forever, unlike library RNG streams.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn bytes(&mut self, n: usize) -> Vec<u8> {
        let mut v = Vec::with_capacity(n + 8);
        while v.len() < n {
            v.extend_from_slice(&self.next_u64().to_le_bytes());
        }
        v.truncate(n);
        v
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Minimum total code length over every prefix code for `counts`, found by
/// trying every assignment of lengths 1..=n-1 that satisfies Kraft.
/// Zero counts are ignored; a lone symbol costs one bit per occurrence.
pub fn brute_force_optimal_cost(counts: &[u64]) -> u64 {
    let present: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    let n = present.len();
    assert!(n > 0);
    if n == 1 {
        return present[0];
    }
    let max_len = (n - 1) as u32;
    let mut lengths = vec![1u32; n];
    let mut best = u64::MAX;
    loop {
        // Kraft sum scaled by 2^max_len.
        let kraft: u64 = lengths.iter().map(|&l| 1u64 << (max_len - l)).sum();
        if kraft <= 1u64 << max_len {
            let cost: u64 = lengths.iter().zip(&present).map(|(&l, &c)| l as u64 * c).sum();
            best = best.min(cost);
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            lengths[i] += 1;
            if lengths[i] <= max_len {
                break;
            }
            lengths[i] = 1;
            i += 1;
        }
    }
}

/// Shannon entropy in bits per byte, computed directly.
pub fn shannon_bits(block: &[u8]) -> f64 {
    let mut counts = [0u64; 256];
    for &b in block {
        counts[b as usize] += 1;
    }
    let n = block.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// A block record as laid out on the wire.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub mode: u8,
    pub original_len: usize,
    /// Huffman only: declared payload bit count.
    pub bit_len: Option<u64>,
    /// Offset of the record within the stream.
    pub offset: usize,
    pub serialized_len: usize,
}

/// Walks header, segment tables and record headers by hand.
pub fn walk_stream(stream: &[u8]) -> Vec<RawRecord> {
    assert_eq!(&stream[..4], b"LMC1");
    let original = u64::from_le_bytes(stream[8..16].try_into().unwrap()) as usize;
    let segments = u32::from_le_bytes(stream[20..24].try_into().unwrap()) as usize;
    let mut pos = 28;
    let mut covered = 0;
    let mut records = Vec::new();
    while covered < original {
        let mut table = Vec::new();
        for s in 0..segments {
            let e = &stream[pos + 16 * s..pos + 16 * s + 16];
            let orig = u64::from_le_bytes(e[..8].try_into().unwrap()) as usize;
            let comp = u64::from_le_bytes(e[8..].try_into().unwrap()) as usize;
            table.push((orig, comp));
        }
        pos += 16 * segments;
        for (orig, comp) in table {
            let end = pos + comp;
            let mut got = 0;
            while pos < end {
                let mode = stream[pos];
                let len = u32::from_le_bytes(stream[pos + 1..pos + 5].try_into().unwrap()) as usize;
                let (bit_len, size) = match mode {
                    0 => {
                        let b = u32::from_le_bytes(stream[pos + 133..pos + 137].try_into().unwrap()) as u64;
                        (Some(b), 137 + b.div_ceil(8) as usize)
                    }
                    1 => (None, 6),
                    2 => (None, 5 + len),
                    m => panic!("bad mode {m}"),
                };
                records.push(RawRecord {
                    mode,
                    original_len: len,
                    bit_len,
                    offset: pos,
                    serialized_len: size,
                });
                pos += size;
                got += len;
            }
            assert_eq!(pos, end);
            assert_eq!(got, orig);
            covered += orig;
        }
    }
    assert_eq!(pos, stream.len());
    records
}
