use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lmc_core::ElementType;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  2  bad input (unreadable file, misaligned length, bad arguments)
  3  integrity failure (checksum mismatch, corrupt or unsupported stream)
  4  shape mismatch between steps
  5  missing file (input or chain stream)
  6  configuration error (unknown codec, invalid block or buffer size)";

#[derive(Debug, Parser)]
#[command(name = "lmc", version, about = "Compress model checkpoint tensors", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a raw tensor file into an LMC stream.
    Compress(CompressArgs),
    /// Restore the original bytes of an LMC stream.
    Decompress(DecompressArgs),
    /// Manage a chain of incremental checkpoints.
    #[command(subcommand)]
    Checkpoint(CheckpointCommand),
    /// Emit measurement tables as CSV.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Throughput benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Write a synthetic training trajectory as `step-NNNNNN/<name>` raw files.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CodecArgs {
    /// Element type of the raw input.
    #[arg(long, default_value = "raw", value_parser = parse_dtype)]
    pub dtype: ElementType,
    /// Block size, a power of two from 4K to 1M.
    #[arg(long, default_value = "64K", value_parser = parse_size)]
    pub block_size: usize,
    /// Bytes grouped and segmented at a time.
    #[arg(long, default_value = "128M", value_parser = parse_size)]
    pub buffer_size: usize,
    /// Store element bytes in their original order.
    #[arg(long)]
    pub no_bytegroup: bool,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ThreadArgs {
    /// Worker threads; also the number of segments per window when compressing.
    #[arg(long, env = "LMC_THREADS", value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub threads: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub codec: CodecArgs,
    #[command(flatten)]
    pub threads: ThreadArgs,
    /// Encode the XOR delta against this previous step instead of the raw data.
    #[arg(long, value_name = "PREV")]
    pub delta: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    #[command(flatten)]
    pub threads: ThreadArgs,
    /// Previous step to apply a delta stream to.
    #[arg(long, value_name = "PREV")]
    pub delta: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CheckpointCommand {
    /// Append one step to a chain, creating the chain if needed.
    Add(AddArgs),
    /// Write the shards of one step of a chain.
    Restore(RestoreArgs),
}

#[derive(Debug, Args)]
pub struct AddArgs {
    pub chain: PathBuf,
    /// Shard files of this step; the file name becomes the shard name.
    pub files: Vec<PathBuf>,
    /// Step index; defaults to one past the last step in the chain.
    #[arg(long)]
    pub step: Option<u64>,
    /// JSON-lines shard list with `name`, `dtype`, `path` and optional `shape`.
    #[arg(long, value_name = "JSONL", conflicts_with = "files")]
    pub shards: Option<PathBuf>,
    #[command(flatten)]
    pub codec: CodecArgs,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    pub chain: PathBuf,
    pub output_dir: PathBuf,
    /// Step to restore; defaults to the last one.
    #[arg(long)]
    pub step: Option<u64>,
    #[command(flatten)]
    pub threads: ThreadArgs,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Per-bit set ratios of one shard (`step,bit,ratio`).
    Bits(BitsArgs),
    /// Per-bit flip ratios between two steps (`step,bit,ratio`).
    Flips(FlipsArgs),
    /// Delta compression ratio per step (`step,codec,ratio,encode_s,decode_s`).
    RatioSeries(RatioSeriesArgs),
    /// Order-0 entropy per block (`block,offset,len,bits_per_byte`).
    Entropy(EntropyArgs),
}

#[derive(Debug, Args)]
pub struct BitsArgs {
    #[arg(long, value_parser = parse_dtype)]
    pub dtype: ElementType,
    /// Step label for the output rows.
    #[arg(long, default_value_t = 0)]
    pub step: u64,
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlipsArgs {
    #[arg(long, value_parser = parse_dtype)]
    pub dtype: ElementType,
    #[arg(long, default_value_t = 0)]
    pub step: u64,
    pub prev: PathBuf,
    pub next: PathBuf,
}

#[derive(Debug, Args)]
pub struct RatioSeriesArgs {
    /// lmc, bg-lmc, or bz2, gzip, xz, lz4 and their bg- variants.
    #[arg(long, default_value = "bg-lmc")]
    pub codec: String,
    /// Element type when the inputs are raw step files.
    #[arg(long, value_parser = parse_dtype)]
    pub dtype: Option<ElementType>,
    #[arg(long, default_value = "64K", value_parser = parse_size)]
    pub block_size: usize,
    /// Restrict a chain to one shard; by default all shards are pooled.
    #[arg(long)]
    pub shard: Option<String>,
    /// A chain directory, or two or more raw step files in order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long, default_value = "64K", value_parser = parse_size)]
    pub block_size: usize,
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Compression and decompression throughput per thread count.
    Scale(ScaleArgs),
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Comma-separated thread counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub threads: Vec<usize>,
    #[arg(long, default_value = "raw", value_parser = parse_dtype)]
    pub dtype: ElementType,
    #[arg(long, default_value = "64K", value_parser = parse_size)]
    pub block_size: usize,
    #[arg(long, default_value = "128M", value_parser = parse_size)]
    pub buffer_size: usize,
    #[arg(long)]
    pub no_bytegroup: bool,
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "1M", value_parser = parse_size)]
    pub elements: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value = "bf16", value_parser = parse_dtype)]
    pub dtype: ElementType,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial walk step scale.
    #[arg(long, default_value_t = 0.005)]
    pub sigma0: f64,
    /// Per-step decay of the walk step scale.
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Shard file name inside each step directory.
    #[arg(long, default_value = "shard.bin")]
    pub name: String,
    pub output_dir: PathBuf,
}

pub fn parse_dtype(s: &str) -> Result<ElementType, String> {
    s.parse().map_err(|e: lmc_core::LmcError| e.to_string())
}

/// Accepts plain byte counts and K/M/G suffixes (binary multiples), with an
/// optional `iB` or `B`.
pub fn parse_size(s: &str) -> Result<usize, String> {
    let t = s.trim();
    let upper = t.to_ascii_uppercase();
    let stripped = upper
        .strip_suffix("IB")
        .or_else(|| upper.strip_suffix('B'))
        .unwrap_or(&upper);
    let (digits, shift) = match stripped.chars().last() {
        Some('K') => (&stripped[..stripped.len() - 1], 10),
        Some('M') => (&stripped[..stripped.len() - 1], 20),
        Some('G') => (&stripped[..stripped.len() - 1], 30),
        _ => (stripped, 0),
    };
    let n: usize = digits
        .trim()
        .parse()
        .map_err(|_| format!("invalid size '{s}'"))?;
    n.checked_mul(1usize << shift)
        .ok_or_else(|| format!("size '{s}' is too large"))
}


#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("4096"), Ok(4096));
        assert_eq!(parse_size("64K"), Ok(65536));
        assert_eq!(parse_size("64KiB"), Ok(65536));
        assert_eq!(parse_size("128M"), Ok(128 << 20));
        assert_eq!(parse_size("1mb"), Ok(1 << 20));
        assert!(parse_size("x").is_err());
        assert!(parse_size("").is_err());
    }

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_compress_flags() {
        let cli = Cli::try_parse_from([
            "lmc", "compress", "--dtype", "bf16", "--threads", "4", "--no-bytegroup", "in", "out",
        ])
        .unwrap();
        match cli.command {
            Command::Compress(a) => {
                assert_eq!(a.codec.dtype, ElementType::Bf16);
                assert_eq!(a.threads.threads, Some(4));
                assert!(a.codec.no_bytegroup);
                assert_eq!(a.codec.block_size, 65536);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_bench_thread_list() {
        let cli =
            Cli::try_parse_from(["lmc", "bench", "scale", "--threads", "1,2,4,8", "c.bin"]).unwrap();
        match cli.command {
            Command::Bench(BenchCommand::Scale(a)) => assert_eq!(a.threads, [1, 2, 4, 8]),
            other => panic!("{other:?}"),
        }
    }
}
