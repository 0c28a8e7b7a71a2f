//! Throughput measurement for the segment-parallel codec.

use std::io::Write;
use std::time::Instant;

use crate::analysis::synth::{Trajectory, TrajectoryConfig};
use crate::delta::xor_delta;
use crate::element::{ElementType, TensorBuffer};
use crate::error::{LmcError, Result};
use crate::plmc::{plmc_compress, plmc_decompress, PlmcOptions};

pub const BENCH_CSV_HEADER: &str = "threads,compress_mib_s,decompress_mib_s,ratio";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub threads: usize,
    pub compress_mib_s: f64,
    pub decompress_mib_s: f64,
    pub ratio: f64,
}

impl BenchRow {
    pub fn write_csv_row<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{:.2},{:.2},{:.6}",
            self.threads, self.compress_mib_s, self.decompress_mib_s, self.ratio
        )
    }
}

/// For each thread count `t`, compresses with `t` segments on `t` threads
/// and decompresses on `t` threads. Each figure is the median of three timed
/// runs after one untimed warm-up run.
pub fn throughput_bench(
    corpus: &TensorBuffer,
    thread_counts: &[usize],
    base: &PlmcOptions,
) -> Result<Vec<BenchRow>> {
    if thread_counts.is_empty() || thread_counts.contains(&0) {
        return Err(LmcError::InvalidConfig("thread counts must be positive".into()));
    }
    let mib = corpus.len() as f64 / (1024.0 * 1024.0);
    thread_counts
        .iter()
        .map(|&threads| {
            let options = PlmcOptions {
                segment_count: threads,
                workers: Some(threads),
                ..*base
            };
            let stream = plmc_compress(corpus, &options)?;
            let compress_s = median_of_three(|| plmc_compress(corpus, &options).map(drop))?;
            let back = plmc_decompress(stream.as_bytes(), threads)?;
            if back != *corpus {
                return Err(LmcError::corrupt("bench round trip mismatch"));
            }
            let decompress_s =
                median_of_three(|| plmc_decompress(stream.as_bytes(), threads).map(drop))?;
            Ok(BenchRow {
                threads,
                compress_mib_s: mib / compress_s,
                decompress_mib_s: mib / decompress_s,
                ratio: stream.ratio(),
            })
        })
        .collect()
}

fn median_of_three(mut run: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times = [0.0; 3];
    for t in &mut times {
        let start = Instant::now();
        run()?;
        *t = start.elapsed().as_secs_f64();
    }
    times.sort_by(f64::total_cmp);
    Ok(times[1])
}

/// A bf16 XOR delta of about `bytes` bytes, shaped like the delta between
/// steps `step` and `step + 1` of the default synthetic trajectory.
pub fn synthetic_delta_corpus(bytes: usize, step: usize, seed: u64) -> TensorBuffer {
    let defaults = TrajectoryConfig::default();
    let cfg = TrajectoryConfig {
        elements: bytes / 2,
        steps: 2,
        element_type: ElementType::Bf16,
        sigma0: defaults.sigma(step),
        seed,
        ..defaults
    };
    let mut t = Trajectory::new(cfg);
    let a = t.next().expect("two steps");
    let b = t.next().expect("two steps");
    xor_delta(&a, &b).expect("same shape").into_tensor()
}
