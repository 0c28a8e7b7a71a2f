use std::io::Write;

use crate::delta::xor_bytes;
use crate::element::{bf16_bits, ElementType, TensorBuffer};
use crate::error::{LmcError, Result};
use crate::par::*;

/// Fraction of elements with each bit set. Bit 0 is the least significant
/// bit of the element's little-endian integer value.
#[derive(Debug, Clone, PartialEq)]
pub struct BitStats {
    pub step: u64,
    pub element_type: ElementType,
    ratios: Vec<f64>,
}

impl BitStats {
    pub fn with_step(mut self, step: u64) -> Self {
        self.step = step;
        self
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn ratio(&self, bit: usize) -> f64 {
        self.ratios[bit]
    }

    pub fn bits(&self) -> usize {
        self.ratios.len()
    }

    /// Rows of `step,bit,ratio`, without a header line.
    pub fn write_csv_rows<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for (bit, r) in self.ratios.iter().enumerate() {
            writeln!(out, "{},{},{}", self.step, bit, r)?;
        }
        Ok(())
    }
}

pub const BITSTATS_CSV_HEADER: &str = "step,bit,ratio";

pub fn bit_set_ratios(shard: &TensorBuffer) -> Result<BitStats> {
    let ty = shard.element_type();
    let counts = match ty.width() {
        2 => count_bits::<2>(shard.bytes()),
        4 => count_bits::<4>(shard.bytes()),
        _ => {
            return Err(LmcError::Unsupported(format!(
                "bit statistics need a 2- or 4-byte element type, got {ty}"
            )))
        }
    };
    let n = shard.element_count();
    let ratios = counts
        .iter()
        .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
        .collect();
    Ok(BitStats {
        step: 0,
        element_type: ty,
        ratios,
    })
}

fn count_bits<const W: usize>(bytes: &[u8]) -> Vec<u64> {
    const CHUNK: usize = 1 << 16;
    let partial: Vec<Vec<u64>> = bytes
        .par_chunks(CHUNK * W)
        .map(|chunk| {
            let mut c = vec![0u64; W * 8];
            // Per byte lane and value, then expand to bits once.
            let mut lanes = [[0u32; 256]; W];
            for e in chunk.chunks_exact(W) {
                for (lane, &b) in lanes.iter_mut().zip(e) {
                    lane[b as usize] += 1;
                }
            }
            for (i, lane) in lanes.iter().enumerate() {
                for (v, &n) in lane.iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    for bit in 0..8 {
                        if v >> bit & 1 == 1 {
                            c[i * 8 + bit] += n as u64;
                        }
                    }
                }
            }
            c
        })
        .collect();
    let mut total = vec![0u64; W * 8];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Bit set ratios of `prev XOR next`: how often each bit flips between steps.
pub fn xor_flip_ratios(prev: &TensorBuffer, next: &TensorBuffer) -> Result<BitStats> {
    if prev.element_type() != next.element_type() {
        return Err(LmcError::TypeMismatch {
            left: prev.element_type(),
            right: next.element_type(),
        });
    }
    if prev.len() != next.len() {
        return Err(LmcError::ShapeMismatch {
            left: prev.len(),
            right: next.len(),
        });
    }
    let x = TensorBuffer::new(xor_bytes(prev.bytes(), next.bytes()), prev.element_type())?;
    bit_set_ratios(&x)
}

/// bf16 bit flips across a sweep of increments.
#[derive(Debug, Clone, PartialEq)]
pub struct BitflipMap {
    /// Starting value of each increment.
    pub values: Vec<f64>,
    pub step: f64,
    /// XOR of the bf16 encodings of `values[i]` and `values[i] + step`.
    pub flips: Vec<u16>,
}

impl BitflipMap {
    pub fn flipped(&self, increment: usize, bit: usize) -> bool {
        self.flips[increment] >> bit & 1 == 1
    }

    /// Share of increments in which `bit` changes.
    pub fn flip_frequency(&self, bit: usize) -> f64 {
        let n = self.flips.iter().filter(|&&f| f >> bit & 1 == 1).count();
        n as f64 / self.flips.len() as f64
    }

    /// Share of increments in which any bit below `bits` changes.
    pub fn low_bits_change_frequency(&self, bits: usize) -> f64 {
        let mask = ((1u32 << bits) - 1) as u16;
        let n = self.flips.iter().filter(|&&f| f & mask != 0).count();
        n as f64 / self.flips.len() as f64
    }

    /// Rows of `value,bit,flipped` for plotting.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "value,bit,flipped")?;
        for (v, f) in self.values.iter().zip(&self.flips) {
            for bit in 0..16 {
                writeln!(out, "{v},{bit},{}", f >> bit & 1)?;
            }
        }
        Ok(())
    }
}

/// For every sweep point `lo + i·step` up to `hi`, records the bf16 bits that
/// differ from the next point. A zero step compares `lo` with itself once.
pub fn increment_bitflip_map(lo: f64, hi: f64, step: f64) -> Result<BitflipMap> {
    if !lo.is_finite() || !hi.is_finite() || !step.is_finite() {
        return Err(LmcError::InvalidInput("sweep bounds must be finite".into()));
    }
    if lo >= hi {
        return Err(LmcError::InvalidInput(format!("empty sweep [{lo}, {hi}]")));
    }
    if step < 0.0 {
        return Err(LmcError::InvalidInput("sweep step must not be negative".into()));
    }
    let values: Vec<f64> = if step == 0.0 {
        vec![lo]
    } else {
        // Points up to hi, tolerating rounding in (hi - lo) / step.
        let increments = ((hi - lo) / step + 1e-9).floor() as usize;
        if increments > 1 << 24 {
            return Err(LmcError::InvalidInput("sweep has too many points".into()));
        }
        (0..increments).map(|i| lo + i as f64 * step).collect()
    };
    let flips = values
        .iter()
        .map(|&v| bf16_bits(v as f32) ^ bf16_bits((v + step) as f32))
        .collect();
    Ok(BitflipMap {
        values,
        step,
        flips,
    })
}
