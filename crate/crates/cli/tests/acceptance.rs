//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test -p lmc-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use common::{brute_force_optimal_cost, shannon_bits, walk_stream, SplitMix};
use lmc_core::analysis::{
    bit_set_ratios, ratio_over_time, xor_flip_ratios, Codec, RatioSeries, Trajectory,
    TrajectoryConfig,
};
use lmc_core::bench::{synthetic_delta_corpus, throughput_bench};
use lmc_core::huffman::build_codebook;
use lmc_core::stream::{encode_block_record, BlockRecord, FORMAT_VERSION};
use lmc_core::{
    available_workers, byte_group, entropy, histogram, lmc_compress, lmc_compress_delta,
    lmc_decompress, plmc_compress, plmc_compress_delta, plmc_decompress, read_header,
    ByteHistogram, DeltaBuffer, ElementType, LmcError, LmcOptions, PlmcOptions, TensorBuffer,
};

const MIB: usize = 1 << 20;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn(&mut Shared) -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($fmt)+)),
        }
    };
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut shared = Shared::default();
    let criteria: [Criterion; 12] = [
        (1, "losslessness", c1_losslessness),
        (2, "entropy bound", c2_entropy_bound),
        (3, "expansion bound", c3_expansion_bound),
        (4, "degenerate compression", c4_degenerate),
        (5, "byte-grouping benefit", c5_bg_benefit),
        (6, "convergence trend", c6_convergence_trend),
        (7, "parallel equivalence and scaling", c7_parallel),
        (8, "entropy estimator", c8_entropy_estimator),
        (9, "huffman oracle", c9_huffman_oracle),
        (10, "analysis fidelity", c10_analysis),
        (11, "chain integrity", c11_chain),
        (12, "format stability", c12_format),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| run(&mut shared)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

#[derive(Default)]
struct Shared {
    series: Option<(RatioSeries, RatioSeries)>,
}

fn tensor(bytes: Vec<u8>, ty: ElementType) -> TensorBuffer {
    TensorBuffer::new(bytes, ty).unwrap()
}

fn delta_corpus(bytes: usize, ty: ElementType, step: usize, seed: u64) -> TensorBuffer {
    let defaults = TrajectoryConfig::default();
    let cfg = TrajectoryConfig {
        elements: bytes / ty.width(),
        steps: 2,
        element_type: ty,
        sigma0: defaults.sigma(step),
        seed,
        ..defaults
    };
    let mut t = Trajectory::new(cfg);
    let a = t.next().unwrap();
    let b = t.next().unwrap();
    lmc_core::xor_delta(&a, &b).unwrap().into_tensor()
}

fn c1_losslessness(_: &mut Shared) -> Outcome {
    let mut rng = SplitMix(1);
    let corpora: Vec<(&str, TensorBuffer)> = vec![
        ("empty", tensor(Vec::new(), ElementType::Raw8)),
        ("1B", tensor(vec![0x5a], ElementType::Raw8)),
        ("64KiB-1", tensor(rng.bytes(65535), ElementType::Raw8)),
        ("64KiB", tensor(rng.bytes(65536), ElementType::Bf16)),
        ("64KiB+1", tensor(rng.bytes(65537), ElementType::Raw8)),
        ("1MiB zeros", tensor(vec![0; MIB], ElementType::Fp32)),
        ("16MiB random", tensor(rng.bytes(16 * MIB), ElementType::Raw8)),
        ("16MiB bf16 delta", delta_corpus(16 * MIB, ElementType::Bf16, 5, 11)),
        ("16MiB fp32 delta", delta_corpus(16 * MIB, ElementType::Fp32, 5, 12)),
    ];
    let mut combos = 0;
    for (name, t) in &corpora {
        let mut types = vec![t.element_type()];
        if t.element_type() != ElementType::Raw8 {
            types.push(ElementType::Raw8);
        }
        for ty in types {
            let t = tensor(t.bytes().to_vec(), ty);
            for bg in [true, false] {
                for bs in [4096, 64 * 1024, MIB] {
                    let opts = LmcOptions { byte_group: bg, block_size: bs };
                    let s = lmc_compress(&t, &opts).map_err(|e| format!("{name}: {e}"))?;
                    ensure!(lmc_decompress(s.as_bytes()).unwrap() == t, "{name} lmc {ty} bg={bg} bs={bs}");
                    let d = DeltaBuffer::from_tensor(t.clone(), 0);
                    let s = lmc_compress_delta(&d, &opts).unwrap();
                    ensure!(lmc_decompress(s.as_bytes()).unwrap() == t, "{name} delta {ty} bg={bg} bs={bs}");
                    for (segments, workers) in [(1, 1), (3, 2), (8, 4)] {
                        let p = PlmcOptions {
                            byte_group: bg,
                            block_size: bs,
                            segment_count: segments,
                            buffer_size: 4 * MIB,
                            workers: Some(workers),
                        };
                        let s = plmc_compress(&t, &p).unwrap();
                        ensure!(
                            plmc_decompress(s.as_bytes(), workers).unwrap() == t,
                            "{name} plmc {ty} bg={bg} bs={bs} segments={segments}"
                        );
                        combos += 1;
                    }
                    combos += 2;
                }
            }
        }
    }
    Ok(format!("{combos} corpus/option combinations round-trip exactly"))
}

fn c2_entropy_bound(_: &mut Shared) -> Outcome {
    let corpora = [
        delta_corpus(4 * MIB, ElementType::Bf16, 0, 21),
        delta_corpus(4 * MIB, ElementType::Bf16, 25, 22),
        delta_corpus(4 * MIB, ElementType::Fp32, 10, 23),
        delta_corpus(2 * MIB, ElementType::Fp16, 10, 24),
    ];
    let (mut blocks, mut worst) = (0usize, f64::NEG_INFINITY);
    for c in &corpora {
        let grouped = byte_group(c);
        for (i, block) in grouped.bytes().chunks(4096).enumerate() {
            let BlockRecord::Huffman { bit_len, .. } = encode_block_record(block).unwrap() else {
                continue;
            };
            let bpb = bit_len as f64 / block.len() as f64;
            let h = shannon_bits(block);
            ensure!(bpb <= h + 1.0, "block {i}: {bpb:.4} bits/byte against H = {h:.4}");
            worst = worst.max(bpb - h);
            blocks += 1;
        }
    }
    ensure!(blocks >= 1000, "only {blocks} Huffman blocks");
    Ok(format!("{blocks} Huffman blocks, max excess {worst:.4} bits/byte"))
}

fn c3_expansion_bound(_: &mut Shared) -> Outcome {
    let t = tensor(SplitMix(3).bytes(16 * MIB), ElementType::Raw8);
    let serial = lmc_compress(&t, &LmcOptions::default()).unwrap().ratio();
    let par = plmc_compress(&t, &PlmcOptions::default()).unwrap().ratio();
    ensure!(serial <= 1.001 && par <= 1.001, "ratios {serial:.6} / {par:.6}");
    Ok(format!("ratio {serial:.6} serial, {par:.6} segmented"))
}

fn c4_degenerate(_: &mut Shared) -> Outcome {
    let t = tensor(vec![0; 16 * MIB], ElementType::Raw8);
    let s = lmc_compress(&t, &LmcOptions::default()).unwrap();
    let records = walk_stream(s.as_bytes());
    ensure!(records.iter().all(|r| r.mode == 1), "non-RLE block present");
    ensure!(s.ratio() <= 0.001, "ratio {}", s.ratio());
    Ok(format!("ratio {:.6} from {} RLE blocks", s.ratio(), records.len()))
}

fn trajectory_series(shared: &mut Shared) -> &(RatioSeries, RatioSeries) {
    shared.series.get_or_insert_with(|| {
        let cfg = TrajectoryConfig {
            elements: 4 << 20,
            steps: 50,
            ..TrajectoryConfig::default()
        };
        let lmc = ratio_over_time(Trajectory::new(cfg), Codec::LMC).unwrap();
        let bg = ratio_over_time(Trajectory::new(cfg), Codec::BG_LMC).unwrap();
        (lmc, bg)
    })
}

fn c5_bg_benefit(shared: &mut Shared) -> Outcome {
    let (lmc, bg) = trajectory_series(shared);
    let mut checked = 0;
    let expected = lmc.points.iter().filter(|p| p.step + 1 > 10).count();
    for (a, b) in lmc.points.iter().zip(&bg.points) {
        // Point k is the delta into step k + 1.
        if a.step + 1 > 10 {
            ensure!(b.ratio < a.ratio, "step {}: BG-LMC {:.4} vs LMC {:.4}", a.step + 1, b.ratio, a.ratio);
            checked += 1;
        }
    }
    ensure!(checked == expected && checked > 0, "{checked} steps checked");
    Ok(format!(
        "BG-LMC below LMC at all {checked} steps past 10; means {:.4} vs {:.4}",
        bg.mean_ratio(),
        lmc.mean_ratio()
    ))
}

fn c6_convergence_trend(shared: &mut Shared) -> Outcome {
    let (_, bg) = trajectory_series(shared);
    let (first, last) = (bg.first_quartile_mean(), bg.last_quartile_mean());
    ensure!(last < first, "last quartile {last:.4} not below first {first:.4}");
    Ok(format!("BG-LMC first quartile {first:.4}, last quartile {last:.4}"))
}

fn c7_parallel(_: &mut Shared) -> Outcome {
    let corpus = synthetic_delta_corpus(256 * MIB, 10, 7);
    let p16 = PlmcOptions::with_segments(16);
    let stream = plmc_compress(&corpus, &p16).unwrap();
    for w in [1, 2, 4, 8, 16] {
        ensure!(plmc_decompress(stream.as_bytes(), w).unwrap() == corpus, "decode mismatch with {w} workers");
    }
    let serial = lmc_compress(&corpus, &LmcOptions::default()).unwrap().ratio();
    let gap = (stream.ratio() - serial).abs();
    ensure!(gap <= 0.005, "16-segment ratio {:.5} vs serial {serial:.5}", stream.ratio());
    drop(stream);

    let rows = throughput_bench(&corpus, &[1, 8], &PlmcOptions::default()).unwrap();
    let speedup = rows[1].compress_mib_s / rows[0].compress_mib_s;
    let report = format!(
        "decode identical for 1..16 workers; ratio gap {gap:.5}; compress {:.0} -> {:.0} MiB/s, \
         decompress {:.0} -> {:.0} MiB/s at 1 -> 8 workers; speedup {speedup:.2}x on {} core(s)",
        rows[0].compress_mib_s,
        rows[1].compress_mib_s,
        rows[0].decompress_mib_s,
        rows[1].decompress_mib_s,
        available_workers()
    );
    ensure!(speedup >= 3.0, "{report}");
    Ok(report)
}

fn c8_entropy_estimator(_: &mut Shared) -> Outcome {
    let h = |counts: &[(u8, u64)]| {
        let mut full = [0u64; 256];
        for &(s, c) in counts {
            full[s as usize] = c;
        }
        entropy(&ByteHistogram::from_counts(full).unwrap()).unwrap().bits_per_byte()
    };
    let uniform: Vec<(u8, u64)> = (0..=255u8).map(|s| (s, 7)).collect();
    let u = h(&uniform);
    ensure!((u - 8.0).abs() <= 1e-9, "uniform {u}");
    let skew = h(&[(1, 2), (2, 1), (3, 1)]);
    ensure!((skew - 1.5).abs() <= 1e-9, "half/quarter/quarter {skew}");
    let single = entropy(&histogram(&[9u8; 1000]).unwrap()).unwrap().bits_per_byte();
    ensure!(single == 0.0 && single.is_sign_positive(), "single symbol {single}");
    Ok(format!("H = {u}, {skew}, {single}"))
}

fn c9_huffman_oracle(_: &mut Shared) -> Outcome {
    let mut cache: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut checked = 0u64;
    for n in 1..=5usize {
        let total = 13u64.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let counts: Vec<u64> = (0..n)
                .map(|_| {
                    let v = c % 13;
                    c /= 13;
                    v
                })
                .collect();
            if counts.iter().all(|&v| v == 0) {
                continue;
            }
            let mut key = counts.clone();
            key.sort_unstable();
            let best = *cache.entry(key).or_insert_with_key(|k| brute_force_optimal_cost(k));
            let mut full = [0u64; 256];
            for (i, &v) in counts.iter().enumerate() {
                full[i * 51 + 3] = v;
            }
            let h = ByteHistogram::from_counts(full).unwrap();
            let got = build_codebook(&h).unwrap().payload_bits(&h);
            ensure!(got == best, "counts {counts:?}: {got} bits vs optimal {best}");
            checked += 1;
        }
    }
    Ok(format!("{checked} histograms agree with exhaustive search"))
}

fn c10_analysis(_: &mut Shared) -> Outcome {
    let mut rng = SplitMix(10);
    let values: Vec<f32> = (0..100_000).map(|_| ((rng.unit() * 2.0 - 1.0) * 0.005) as f32).collect();
    let shard = TensorBuffer::from_f32(&values, ElementType::Bf16);
    let bit14 = bit_set_ratios(&shard).unwrap().ratio(14);
    ensure!(bit14 == 0.0, "bit 14 set ratio {bit14}");

    let a = tensor(rng.bytes(200_000), ElementType::Bf16);
    let b = tensor(rng.bytes(200_000), ElementType::Bf16);
    let flips = xor_flip_ratios(&a, &b).unwrap();
    let (lo, hi) = flips
        .ratios()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    ensure!(lo >= 0.48 && hi <= 0.52, "flip ratios span {lo:.4}..{hi:.4}");
    Ok(format!("bit 14 ratio 0; random flip ratios in {lo:.4}..{hi:.4}"))
}

fn lmc(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lmc"));
    for a in args {
        cmd.arg(a);
    }
    cmd.env_remove("LMC_THREADS").output().expect("run lmc")
}

fn restore(chain: &Path, step: usize, out: &Path) -> Output {
    lmc(&[&"checkpoint", &"restore", &"--step", &step.to_string(), &chain, &out])
}

fn c11_chain(_: &mut Shared) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let gen = tmp.path().join("gen");
    let chain = tmp.path().join("chain");
    for (name, seed) in [("attn.bin", "1"), ("mlp.bin", "2")] {
        let o = lmc(&[&"generate", &"--elements", &"32K", &"--steps", &"20", &"--seed", &seed, &"--name", &name, &gen]);
        ensure!(o.status.success(), "generate: {}", String::from_utf8_lossy(&o.stderr));
    }
    let step_dir = |k: usize| gen.join(format!("step-{k:06}"));
    for k in 0..20 {
        let d = step_dir(k);
        let o = lmc(&[&"checkpoint", &"add", &"--dtype", &"bf16", &"--threads", &"2", &chain, &d.join("attn.bin"), &d.join("mlp.bin")]);
        ensure!(o.status.success(), "add step {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for k in 0..20 {
        let out = tmp.path().join(format!("restored-{k}"));
        let o = restore(&chain, k, &out);
        ensure!(o.status.success(), "restore step {k}: {}", String::from_utf8_lossy(&o.stderr));
        for name in ["attn.bin", "mlp.bin"] {
            ensure!(
                fs::read(out.join(name)).unwrap() == fs::read(step_dir(k).join(name)).unwrap(),
                "step {k} {name} differs"
            );
        }
    }

    let out = tmp.path().join("after-delete");
    let mut failures = 0;
    for k in 1..20 {
        let victim = chain.join(format!("step-{k:06}")).join("mlp.bin.lmc");
        ensure!(victim.exists(), "no stream at {}", victim.display());
        let aside = tmp.path().join("aside.lmc");
        fs::rename(&victim, &aside).unwrap();
        for later in [k, (k + 7).min(19), 19] {
            let o = restore(&chain, later, &out);
            ensure!(o.status.code() == Some(5), "step {later} after deleting delta {k}: {:?}", o.status);
            ensure!(!o.stderr.is_empty(), "silent failure at step {later}");
            failures += 1;
        }
        let o = restore(&chain, k - 1, &out);
        ensure!(o.status.success(), "step {} should survive deleting delta {k}", k - 1);
        fs::rename(&aside, &victim).unwrap();
    }
    Ok(format!("20 steps x 2 shards restored byte-exact; {failures} restores after deletion exited 5"))
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn c12_format(_: &mut Shared) -> Outcome {
    let dir = fixtures_dir();
    let list = fs::read_to_string(dir.join("fixtures.txt")).map_err(|e| e.to_string())?;
    let mut count = 0;
    for line in list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let (name, ty): (&str, ElementType) = (f[0], f[1].parse().unwrap());
        let (bg, bs, segments, buffer, delta) = (
            f[2] == "1",
            f[3].parse::<usize>().unwrap(),
            f[4].parse::<usize>().unwrap(),
            f[5].parse::<usize>().unwrap(),
            f[6] == "1",
        );
        let original = fs::read(dir.join(format!("{name}.bin"))).unwrap();
        let stream = fs::read(dir.join(format!("{name}.lmc"))).unwrap();
        ensure!(stream[4] == FORMAT_VERSION, "{name}: version byte {}", stream[4]);
        ensure!(read_header(&stream).unwrap().element_type == ty, "{name}: element type");
        ensure!(lmc_decompress(&stream).unwrap().bytes() == &original[..], "{name}: decode differs");

        let t = tensor(original, ty);
        let again = match (buffer, delta) {
            (0, false) => lmc_compress(&t, &LmcOptions { byte_group: bg, block_size: bs }),
            (0, true) => lmc_compress_delta(&DeltaBuffer::from_tensor(t, 0), &LmcOptions { byte_group: bg, block_size: bs }),
            (_, d) => {
                let p = PlmcOptions { byte_group: bg, block_size: bs, segment_count: segments, buffer_size: buffer, workers: Some(4) };
                if d {
                    plmc_compress_delta(&DeltaBuffer::from_tensor(t, 0), &p)
                } else {
                    plmc_compress(&t, &p)
                }
            }
        }
        .unwrap();
        ensure!(again.as_bytes() == &stream[..], "{name}: re-encoding changed the bytes");

        let mut bumped = stream.clone();
        bumped[4] = FORMAT_VERSION + 1;
        ensure!(
            matches!(lmc_decompress(&bumped), Err(LmcError::UnsupportedFormat(_))),
            "{name}: version {} accepted",
            FORMAT_VERSION + 1
        );
        count += 1;
    }
    ensure!(count > 0, "no fixtures");
    Ok(format!("{count} golden streams decode and re-encode identically; newer versions rejected"))
}
