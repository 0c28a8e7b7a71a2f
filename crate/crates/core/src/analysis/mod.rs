//! Measurements over checkpoint trajectories: per-bit statistics, bit flips
//! between steps, and compression ratio over time.

mod bits;
mod series;
pub mod synth;

pub use bits::{
    bit_set_ratios, increment_bitflip_map, xor_flip_ratios, BitStats, BitflipMap,
    BITSTATS_CSV_HEADER,
};
pub use series::{
    measure_codec, ratio_over_time, ratio_over_time_with, Codec, ExternalEngine, RatioPoint,
    RatioSeries, RATIOS_CSV_HEADER,
};
pub use synth::{Trajectory, TrajectoryConfig};
