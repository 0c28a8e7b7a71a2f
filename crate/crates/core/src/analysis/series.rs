use std::borrow::Borrow;
use std::fmt;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::Instant;

use crate::bytegroup::group_into;
use crate::delta::xor_delta;
use crate::element::TensorBuffer;
use crate::entropy::DEFAULT_BLOCK_SIZE;
use crate::error::{LmcError, Result};
use crate::stream::{lmc_compress_delta, lmc_decompress, LmcOptions};

/// General-purpose compressors driven through their command-line tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExternalEngine {
    Bzip2,
    Gzip,
    Xz,
    Lz4,
}

impl ExternalEngine {
    pub const ALL: [ExternalEngine; 4] = [Self::Bzip2, Self::Gzip, Self::Xz, Self::Lz4];

    pub fn program(self) -> &'static str {
        match self {
            Self::Bzip2 => "bzip2",
            Self::Gzip => "gzip",
            Self::Xz => "xz",
            Self::Lz4 => "lz4",
        }
    }

    fn short_name(self) -> &'static str {
        match self {
            Self::Bzip2 => "bz2",
            Self::Gzip => "gzip",
            Self::Xz => "xz",
            Self::Lz4 => "lz4",
        }
    }

    /// Whether the tool runs on this host.
    pub fn is_available(self) -> bool {
        Command::new(self.program())
            .arg("--version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok()
    }

    fn compress(self, data: &[u8]) -> Result<Vec<u8>> {
        let args: &[&str] = match self {
            Self::Lz4 => &["-c", "-q"],
            _ => &["-c"],
        };
        pipe(self.program(), args, data)
    }

    fn decompress(self, data: &[u8]) -> Result<Vec<u8>> {
        let args: &[&str] = match self {
            Self::Lz4 => &["-d", "-c", "-q"],
            _ => &["-d", "-c"],
        };
        pipe(self.program(), args, data)
    }
}

fn pipe(program: &str, args: &[&str], input: &[u8]) -> Result<Vec<u8>> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| LmcError::InvalidConfig(format!("cannot run {program}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let output = std::thread::scope(|s| {
        let writer = s.spawn(move || stdin.write_all(input));
        let mut out = Vec::new();
        let read = stdout.read_to_end(&mut out);
        let wrote = writer.join().expect("writer thread panicked");
        read.and(wrote).map(|_| out)
    })?;
    let status = child.wait()?;
    if !status.success() {
        return Err(LmcError::Io(std::io::Error::other(format!(
            "{program} exited with {status}"
        ))));
    }
    Ok(output)
}

/// A codec configuration for ratio measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Codec {
    Lmc { byte_group: bool },
    External { engine: ExternalEngine, byte_group: bool },
}

impl Codec {
    pub const LMC: Codec = Codec::Lmc { byte_group: false };
    pub const BG_LMC: Codec = Codec::Lmc { byte_group: true };

    pub fn byte_group(self) -> bool {
        match self {
            Codec::Lmc { byte_group } | Codec::External { byte_group, .. } => byte_group,
        }
    }

    pub fn is_available(self) -> bool {
        match self {
            Codec::Lmc { .. } => true,
            Codec::External { engine, .. } => engine.is_available(),
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.byte_group() {
            f.write_str("bg-")?;
        }
        match self {
            Codec::Lmc { .. } => f.write_str("lmc"),
            Codec::External { engine, .. } => f.write_str(engine.short_name()),
        }
    }
}

impl FromStr for Codec {
    type Err = LmcError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (byte_group, base) = match lower.strip_prefix("bg-") {
            Some(rest) => (true, rest),
            None => (false, lower.as_str()),
        };
        let engine = match base {
            "lmc" => return Ok(Codec::Lmc { byte_group }),
            "bz2" | "bzip2" => ExternalEngine::Bzip2,
            "gz" | "gzip" => ExternalEngine::Gzip,
            "xz" => ExternalEngine::Xz,
            "lz4" => ExternalEngine::Lz4,
            _ => {
                return Err(LmcError::InvalidConfig(format!(
                    "unknown codec '{s}' (expected lmc, bg-lmc, bz2, gzip, xz, lz4 or a bg- variant)"
                )))
            }
        };
        Ok(Codec::External { engine, byte_group })
    }
}

/// One delta of a ratio series: the transition `step -> step + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub step: u64,
    pub ratio: f64,
    pub encode_s: f64,
    pub decode_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub codec: Codec,
    pub points: Vec<RatioPoint>,
}

pub const RATIOS_CSV_HEADER: &str = "step,codec,ratio,encode_s,decode_s";

impl RatioSeries {
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    pub fn mean_ratio(&self) -> f64 {
        mean(self.points.iter().map(|p| p.ratio))
    }

    /// Mean over the first quarter of the series (at least one point).
    pub fn first_quartile_mean(&self) -> f64 {
        let q = (self.points.len() / 4).max(1);
        mean(self.points[..q].iter().map(|p| p.ratio))
    }

    /// Mean over the last quarter of the series (at least one point).
    pub fn last_quartile_mean(&self) -> f64 {
        let q = (self.points.len() / 4).max(1);
        mean(self.points[self.points.len() - q..].iter().map(|p| p.ratio))
    }

    /// Rows of `step,codec,ratio,encode_s,decode_s`, without a header line.
    pub fn write_csv_rows<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.step, self.codec, p.ratio, p.encode_s, p.decode_s
            )?;
        }
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Compresses `data` (an XOR delta) with `codec`, checks the round trip, and
/// returns `(compressed_len, encode_s, decode_s)`.
pub fn measure_codec(codec: Codec, delta: &TensorBuffer, block_size: usize) -> Result<(usize, f64, f64)> {
    match codec {
        Codec::Lmc { byte_group } => {
            let d = crate::delta::DeltaBuffer::from_tensor(delta.clone(), 0);
            let options = LmcOptions {
                byte_group,
                block_size,
            };
            let t0 = Instant::now();
            let stream = lmc_compress_delta(&d, &options)?;
            let t1 = Instant::now();
            let back = lmc_decompress(stream.as_bytes())?;
            let t2 = Instant::now();
            if back.bytes() != delta.bytes() {
                return Err(LmcError::corrupt("round trip mismatch"));
            }
            Ok((stream.len(), (t1 - t0).as_secs_f64(), (t2 - t1).as_secs_f64()))
        }
        Codec::External { engine, byte_group } => {
            let width = delta.element_type().width();
            let grouped;
            let input: &[u8] = if byte_group && width > 1 {
                let mut g = vec![0u8; delta.len()];
                group_into(delta.bytes(), width, &mut g);
                grouped = g;
                &grouped
            } else {
                delta.bytes()
            };
            let t0 = Instant::now();
            let packed = engine.compress(input)?;
            let t1 = Instant::now();
            let back = engine.decompress(&packed)?;
            let t2 = Instant::now();
            if back != input {
                return Err(LmcError::corrupt(format!("{} round trip mismatch", engine.program())));
            }
            Ok((packed.len(), (t1 - t0).as_secs_f64(), (t2 - t1).as_secs_f64()))
        }
    }
}

/// Compression ratio of each consecutive shard delta under `codec`.
pub fn ratio_over_time<I>(steps: I, codec: Codec) -> Result<RatioSeries>
where
    I: IntoIterator,
    I::Item: Borrow<TensorBuffer>,
{
    ratio_over_time_with(steps, codec, DEFAULT_BLOCK_SIZE)
}

pub fn ratio_over_time_with<I>(steps: I, codec: Codec, block_size: usize) -> Result<RatioSeries>
where
    I: IntoIterator,
    I::Item: Borrow<TensorBuffer>,
{
    let mut iter = steps.into_iter();
    let mut prev = iter
        .next()
        .ok_or_else(|| LmcError::InvalidInput("ratio series needs at least two steps".into()))?;
    let mut points = Vec::new();
    for (k, next) in iter.enumerate() {
        let delta = xor_delta(prev.borrow(), next.borrow())?.into_tensor();
        let (compressed, encode_s, decode_s) = measure_codec(codec, &delta, block_size)?;
        let ratio = if delta.is_empty() {
            0.0
        } else {
            compressed as f64 / delta.len() as f64
        };
        points.push(RatioPoint {
            step: k as u64,
            ratio,
            encode_s,
            decode_s,
        });
        prev = next;
    }
    if points.is_empty() {
        return Err(LmcError::InvalidInput("ratio series needs at least two steps".into()));
    }
    Ok(RatioSeries { codec, points })
}
