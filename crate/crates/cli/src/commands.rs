use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lmc_core::analysis::{
    bit_set_ratios, ratio_over_time_with, xor_flip_ratios, Codec, Trajectory, TrajectoryConfig,
    BITSTATS_CSV_HEADER, RATIOS_CSV_HEADER,
};
use lmc_core::bench::{throughput_bench, BENCH_CSV_HEADER};
use lmc_core::entropy::{block_entropies, estimate_file_entropy_ratio, validate_block_size};
use lmc_core::{
    available_workers, plmc_compress, plmc_compress_delta, plmc_decompress, read_header,
    xor_apply, xor_delta, DeltaBuffer, ElementType, PlmcOptions, TensorBuffer,
};

use crate::args::*;
use crate::chain::{self, Chain, ShardInput};
use crate::error::{read_file, write_file, CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Checkpoint(CheckpointCommand::Add(a)) => checkpoint_add(a),
        Command::Checkpoint(CheckpointCommand::Restore(a)) => checkpoint_restore(a),
        Command::Analyze(AnalyzeCommand::Bits(a)) => analyze_bits(a),
        Command::Analyze(AnalyzeCommand::Flips(a)) => analyze_flips(a),
        Command::Analyze(AnalyzeCommand::RatioSeries(a)) => analyze_ratio_series(a),
        Command::Analyze(AnalyzeCommand::Entropy(a)) => analyze_entropy(a),
        Command::Bench(BenchCommand::Scale(a)) => bench_scale(a),
        Command::Generate(a) => generate(a),
    }
}

fn workers(t: ThreadArgs) -> usize {
    t.threads.map_or_else(available_workers, |n| n as usize)
}

fn plmc_options(codec: &CodecArgs, threads: usize) -> CliResult<PlmcOptions> {
    validate_block_size(codec.block_size)?;
    if codec.buffer_size < codec.block_size {
        return Err(CliError::Config(format!(
            "buffer size {} is smaller than block size {}",
            codec.buffer_size, codec.block_size
        )));
    }
    Ok(PlmcOptions {
        byte_group: !codec.no_bytegroup,
        block_size: codec.block_size,
        segment_count: threads,
        buffer_size: codec.buffer_size,
        workers: Some(threads),
    })
}

fn load_tensor(path: &Path, ty: ElementType) -> CliResult<TensorBuffer> {
    Ok(TensorBuffer::new(read_file(path)?, ty)?)
}

fn compress(a: CompressArgs) -> CliResult<()> {
    let threads = workers(a.threads);
    let options = plmc_options(&a.codec, threads)?;
    let input = load_tensor(&a.input, a.codec.dtype)?;
    let start = Instant::now();
    let stream = match &a.delta {
        Some(prev) => {
            let prev = load_tensor(prev, a.codec.dtype)?;
            plmc_compress_delta(&xor_delta(&prev, &input)?, &options)?
        }
        None => plmc_compress(&input, &options)?,
    };
    let secs = start.elapsed().as_secs_f64();
    write_file(&a.output, stream.as_bytes())?;
    let mib = input.len() as f64 / (1024.0 * 1024.0);
    eprintln!("ratio={:.6} MiB/s={:.2}", stream.ratio(), mib / secs.max(1e-9));
    Ok(())
}

fn decompress(a: DecompressArgs) -> CliResult<()> {
    let bytes = read_file(&a.input)?;
    let header = read_header(&bytes)?;
    let decoded = plmc_decompress(&bytes, workers(a.threads))?;
    let out = match (&a.delta, header.flags.delta()) {
        (Some(prev), true) => {
            let prev = load_tensor(prev, header.element_type)?;
            xor_apply(&prev, &DeltaBuffer::from_tensor(decoded, 0))?
        }
        (None, true) => {
            return Err(CliError::Input(format!(
                "{} holds a delta; pass --delta <PREV> to reconstruct the step",
                a.input.display()
            )))
        }
        (Some(_), false) => {
            return Err(CliError::Input(format!(
                "{} is not a delta stream; --delta does not apply",
                a.input.display()
            )))
        }
        (None, false) => decoded,
    };
    write_file(&a.output, out.bytes())
}

fn checkpoint_add(a: AddArgs) -> CliResult<()> {
    let threads = workers(a.threads);
    let options = plmc_options(&a.codec, threads)?;
    let inputs = match &a.shards {
        Some(list) => ShardInput::read_list(list)?,
        None => a
            .files
            .iter()
            .map(|p| {
                let name = p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .ok_or_else(|| CliError::Input(format!("bad shard path {}", p.display())))?;
                Ok(ShardInput {
                    name: name.to_string(),
                    dtype: a.codec.dtype.name().to_string(),
                    path: p.clone(),
                    shape: None,
                })
            })
            .collect::<CliResult<Vec<_>>>()?,
    };
    let step = chain::add_step(&a.chain, a.step, &inputs, &options, threads)?;
    eprintln!("added step {step} ({} shards) to {}", inputs.len(), a.chain.display());
    Ok(())
}

fn checkpoint_restore(a: RestoreArgs) -> CliResult<()> {
    let chain = Chain::open(&a.chain)?;
    let step = match a.step.or(chain.last_step()) {
        Some(s) => s,
        None => return Err(CliError::Input("chain is empty".into())),
    };
    let shards = chain.restore(step, workers(a.threads))?;
    fs::create_dir_all(&a.output_dir).map_err(|e| CliError::io(&a.output_dir, e))?;
    for (name, tensor) in &shards {
        write_file(&a.output_dir.join(name), tensor.bytes())?;
    }
    eprintln!("restored step {step} ({} shards)", shards.len());
    Ok(())
}

fn stdout_csv(header: &str, rows: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let path = PathBuf::from("<stdout>");
    writeln!(out, "{header}").map_err(|e| CliError::io(&path, e))?;
    rows(&mut out).map_err(|e| CliError::io(&path, e))?;
    out.flush().map_err(|e| CliError::io(&path, e))
}

fn analyze_bits(a: BitsArgs) -> CliResult<()> {
    let stats = bit_set_ratios(&load_tensor(&a.input, a.dtype)?)?.with_step(a.step);
    stdout_csv(BITSTATS_CSV_HEADER, |w| stats.write_csv_rows(w))
}

fn analyze_flips(a: FlipsArgs) -> CliResult<()> {
    let prev = load_tensor(&a.prev, a.dtype)?;
    let next = load_tensor(&a.next, a.dtype)?;
    let stats = xor_flip_ratios(&prev, &next)?.with_step(a.step);
    stdout_csv(BITSTATS_CSV_HEADER, |w| stats.write_csv_rows(w))
}

fn analyze_ratio_series(a: RatioSeriesArgs) -> CliResult<()> {
    let codec: Codec = a.codec.parse()?;
    if !codec.is_available() {
        return Err(CliError::Config(format!("codec '{codec}' is not available on this host")));
    }
    validate_block_size(a.block_size)?;
    let series = if a.inputs.len() == 1 && a.inputs[0].is_dir() {
        chain_series(&a.inputs[0], a.shard.as_deref(), codec, a.block_size)?
    } else {
        if a.inputs.len() < 2 {
            return Err(CliError::Input("need a chain directory or at least two step files".into()));
        }
        let ty = a.dtype.ok_or_else(|| CliError::Input("--dtype is required for step files".into()))?;
        let steps = a.inputs.iter().map(|p| load_tensor(p, ty));
        let steps: Vec<TensorBuffer> = steps.collect::<CliResult<_>>()?;
        ratio_over_time_with(&steps, codec, a.block_size)?
    };
    stdout_csv(RATIOS_CSV_HEADER, |w| series.write_csv_rows(w))
}

/// Ratio series over a chain. Several shards are pooled by concatenating
/// them per step.
fn chain_series(
    dir: &Path,
    shard: Option<&str>,
    codec: Codec,
    block_size: usize,
) -> CliResult<lmc_core::analysis::RatioSeries> {
    let chain = Chain::open(dir)?;
    let last = chain
        .last_step()
        .ok_or_else(|| CliError::Input("chain is empty".into()))?;
    if let Some(name) = shard {
        if !chain.step_entries(0).contains_key(name) {
            return Err(CliError::Input(format!("chain has no shard '{name}'")));
        }
    }
    let threads = available_workers();
    let mut steps = Vec::with_capacity(last as usize + 1);
    for step in 0..=last {
        let shards = chain.restore(step, threads)?;
        let mut selected = shards
            .into_iter()
            .filter(|(n, _)| shard.is_none_or(|s| s == n))
            .map(|(_, t)| t);
        let first = selected.next().expect("chain shards are non-empty");
        let ty = first.element_type();
        let mut bytes = first.into_bytes();
        for t in selected {
            if t.element_type() != ty {
                return Err(CliError::Input(
                    "shards have different dtypes; pick one with --shard".into(),
                ));
            }
            bytes.extend_from_slice(t.bytes());
        }
        steps.push(TensorBuffer::new(bytes, ty)?);
    }
    Ok(ratio_over_time_with(&steps, codec, block_size)?)
}

fn analyze_entropy(a: EntropyArgs) -> CliResult<()> {
    let data = read_file(&a.input)?;
    let entropies = block_entropies(&data, a.block_size)?;
    let ratio = estimate_file_entropy_ratio(&data, a.block_size)?;
    stdout_csv("block,offset,len,bits_per_byte", |w| {
        for (i, (h, block)) in entropies.iter().zip(data.chunks(a.block_size)).enumerate() {
            writeln!(w, "{i},{},{},{}", i * a.block_size, block.len(), h.bits_per_byte())?;
        }
        Ok(())
    })?;
    eprintln!("estimated_ratio={ratio:.6}");
    Ok(())
}

fn bench_scale(a: ScaleArgs) -> CliResult<()> {
    let codec = CodecArgs {
        dtype: a.dtype,
        block_size: a.block_size,
        buffer_size: a.buffer_size,
        no_bytegroup: a.no_bytegroup,
    };
    let base = plmc_options(&codec, 1)?;
    let corpus = load_tensor(&a.corpus, a.dtype)?;
    let rows = throughput_bench(&corpus, &a.threads, &base)?;
    stdout_csv(BENCH_CSV_HEADER, |w| {
        for r in &rows {
            r.write_csv_row(w)?;
        }
        Ok(())
    })
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    if a.steps == 0 || a.elements == 0 {
        return Err(CliError::Input("need at least one step and one element".into()));
    }
    if !(a.sigma0.is_finite() && a.sigma0 >= 0.0 && a.gamma.is_finite() && a.gamma >= 0.0) {
        return Err(CliError::Config("sigma0 and gamma must be finite and non-negative".into()));
    }
    let cfg = TrajectoryConfig {
        elements: a.elements,
        steps: a.steps,
        element_type: a.dtype,
        sigma0: a.sigma0,
        gamma: a.gamma,
        seed: a.seed,
        ..TrajectoryConfig::default()
    };
    if a.name.is_empty() || a.name.contains(['/', '\\']) {
        return Err(CliError::Input(format!("invalid shard name '{}'", a.name)));
    }
    for (k, step) in Trajectory::new(cfg).enumerate() {
        let dir = a.output_dir.join(format!("step-{k:06}"));
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        write_file(&dir.join(&a.name), step.bytes())?;
    }
    Ok(())
}
