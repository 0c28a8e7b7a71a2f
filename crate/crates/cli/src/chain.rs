//! Incremental checkpoint chains on disk.
//!
//! ```text
//! <chain>/manifest.jsonl        header line, then one line per (step, shard)
//! <chain>/step-000000/<shard>.lmc   base stream (byte-grouped LMC of the raw shard)
//! <chain>/step-00000N/<shard>.lmc   delta stream (XOR against step N-1)
//! <chain>/.lock                 held by a writer for the duration of an add
//! ```
//!
//! The manifest is only ever replaced by renaming a fully written temporary
//! file over it, so an interrupted add leaves the previous manifest intact.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use lmc_core::{
    plmc_compress, plmc_compress_delta, plmc_decompress, read_header, xor_apply_in_place,
    xor_delta, DeltaBuffer, ElementType, PlmcOptions, TensorBuffer,
};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, CliError, CliResult};

pub const MANIFEST: &str = "manifest.jsonl";
pub const MANIFEST_TMP: &str = "manifest.jsonl.tmp";
pub const LOCK: &str = ".lock";
const FORMAT: u32 = 1;

/// Set to abort an add after the new manifest is staged but before it
/// replaces the old one. Used to exercise crash recovery.
pub const CRASH_BEFORE_COMMIT_ENV: &str = "LMC_CRASH_BEFORE_COMMIT";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
struct ManifestHeader {
    chain_id: String,
    format: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Base,
    Delta,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub step: u64,
    pub role: Role,
    pub shard: String,
    pub dtype: String,
    pub original_length: u64,
    /// Stream path relative to the chain directory.
    pub stream: String,
    /// Checksum recorded in the stream header.
    pub crc32: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<u64>>,
}

impl ManifestEntry {
    pub fn element_type(&self) -> CliResult<ElementType> {
        self.dtype
            .parse()
            .map_err(|_| CliError::Integrity(format!("manifest has unknown dtype '{}'", self.dtype)))
    }
}

/// One shard to ingest.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ShardInput {
    pub name: String,
    pub dtype: String,
    pub path: PathBuf,
    #[serde(default)]
    pub shape: Option<Vec<u64>>,
}

impl ShardInput {
    /// Reads a JSON-lines shard list; relative paths resolve against its directory.
    pub fn read_list(list: &Path) -> CliResult<Vec<ShardInput>> {
        let text = fs::read_to_string(list).map_err(|e| CliError::io(list, e))?;
        let base = list.parent().unwrap_or(Path::new("."));
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let mut s: ShardInput = serde_json::from_str(line).map_err(|e| {
                    CliError::Input(format!("{}:{}: {e}", list.display(), i + 1))
                })?;
                if s.path.is_relative() {
                    s.path = base.join(&s.path);
                }
                Ok(s)
            })
            .collect()
    }

    fn load(&self) -> CliResult<TensorBuffer> {
        let ty: ElementType = self.dtype.parse().map_err(CliError::Codec)?;
        let bytes = read_file(&self.path)?;
        if let Some(shape) = &self.shape {
            let elements: u64 = shape.iter().product();
            if elements * ty.width() as u64 != bytes.len() as u64 {
                return Err(CliError::Shape(format!(
                    "shard '{}': shape {shape:?} does not match {} bytes of {ty}",
                    self.name,
                    bytes.len()
                )));
            }
        }
        Ok(TensorBuffer::new(bytes, ty)?)
    }
}

/// Exclusive writer lock on a chain directory, released on drop.
pub struct ChainLock {
    path: PathBuf,
}

impl ChainLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        let path = dir.join(LOCK);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id()).map_err(|e| CliError::io(&path, e))?;
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&path).unwrap_or_default();
                    let pid = holder.trim().parse::<u32>().ok();
                    if pid.is_some_and(|p| !process_alive(p)) {
                        // Left behind by a writer that died mid-add.
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    return Err(CliError::Input(format!(
                        "chain {} is locked by another writer ({})",
                        dir.display(),
                        path.display()
                    )));
                }
                Err(e) => return Err(CliError::io(&path, e)),
            }
        }
        Err(CliError::Input(format!("could not lock {}", dir.display())))
    }
}

impl Drop for ChainLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(target_os = "linux")]
fn process_alive(pid: u32) -> bool {
    Path::new(&format!("/proc/{pid}")).exists()
}

#[cfg(not(target_os = "linux"))]
fn process_alive(_pid: u32) -> bool {
    true
}

#[derive(Debug, Clone)]
pub struct Chain {
    dir: PathBuf,
    header: ManifestHeader,
    entries: Vec<ManifestEntry>,
}

impl Chain {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let file = File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                CliError::Missing(format!("{} is not a checkpoint chain (no {MANIFEST})", dir.display()))
            }
            _ => CliError::io(&path, e),
        })?;
        let mut lines = BufReader::new(file).lines();
        let bad = |msg: String| CliError::Integrity(format!("{}: {msg}", path.display()));
        let first = lines
            .next()
            .ok_or_else(|| bad("empty manifest".into()))?
            .map_err(|e| CliError::io(&path, e))?;
        let header: ManifestHeader =
            serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
        if header.format != FORMAT {
            return Err(bad(format!("unsupported manifest format {}", header.format)));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| CliError::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", i + 2)))?,
            );
        }
        let chain = Self {
            dir: dir.to_path_buf(),
            header,
            entries,
        };
        chain.validate()?;
        Ok(chain)
    }

    fn create(dir: &Path) -> Self {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        Self {
            dir: dir.to_path_buf(),
            header: ManifestHeader {
                chain_id: format!("{:x}-{:x}", nanos, std::process::id()),
                format: FORMAT,
            },
            entries: Vec::new(),
        }
    }

    pub fn chain_id(&self) -> &str {
        &self.header.chain_id
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn last_step(&self) -> Option<u64> {
        self.entries.iter().map(|e| e.step).max()
    }

    /// Entries of one step, keyed by shard name.
    pub fn step_entries(&self, step: u64) -> BTreeMap<&str, &ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.step == step)
            .map(|e| (e.shard.as_str(), e))
            .collect()
    }

    /// Checks the manifest invariants: one base per shard at step 0, every
    /// later step a delta over exactly the same shards, steps contiguous.
    fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| CliError::Integrity(format!("{}: {msg}", self.dir.join(MANIFEST).display()));
        let Some(last) = self.last_step() else {
            return Ok(());
        };
        let base = self.step_entries(0);
        if base.is_empty() {
            return Err(bad("no base step".into()));
        }
        for step in 0..=last {
            let entries: Vec<&ManifestEntry> = self.entries.iter().filter(|e| e.step == step).collect();
            let names = self.step_entries(step);
            if names.len() != entries.len() {
                return Err(bad(format!("step {step} lists a shard twice")));
            }
            if names.keys().ne(base.keys()) {
                return Err(bad(format!("step {step} does not cover the base shards")));
            }
            let role = if step == 0 { Role::Base } else { Role::Delta };
            if let Some(e) = entries.iter().find(|e| e.role != role) {
                return Err(bad(format!("step {step} shard '{}' has role {:?}", e.shard, e.role)));
            }
        }
        Ok(())
    }

    fn save(&self) -> CliResult<()> {
        let tmp = self.dir.join(MANIFEST_TMP);
        let mut text = serde_json::to_string(&self.header).expect("header serializes");
        text.push('\n');
        for e in &self.entries {
            text.push_str(&serde_json::to_string(e).expect("entry serializes"));
            text.push('\n');
        }
        write_synced(&tmp, text.as_bytes())?;
        if std::env::var_os(CRASH_BEFORE_COMMIT_ENV).is_some() {
            std::process::abort();
        }
        let dest = self.dir.join(MANIFEST);
        fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))
    }

    fn stream_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.dir.join(&entry.stream)
    }

    /// Loads and decodes one stream, checking it against its manifest entry.
    fn load_stream(&self, entry: &ManifestEntry, workers: usize) -> CliResult<TensorBuffer> {
        let path = self.stream_path(entry);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::Missing(format!(
                "step {} shard '{}': stream {} is missing",
                entry.step,
                entry.shard,
                path.display()
            )),
            _ => CliError::io(&path, e),
        })?;
        let header = read_header(&bytes)?;
        if header.crc32 != entry.crc32 {
            return Err(CliError::Integrity(format!(
                "{}: header checksum {:#010x} does not match manifest {:#010x}",
                path.display(),
                header.crc32,
                entry.crc32
            )));
        }
        if header.flags.delta() != (entry.role == Role::Delta) {
            return Err(CliError::Integrity(format!(
                "{}: delta flag disagrees with manifest role",
                path.display()
            )));
        }
        let tensor = plmc_decompress(&bytes, workers)?;
        if tensor.element_type() != entry.element_type()? || tensor.len() as u64 != entry.original_length {
            return Err(CliError::Integrity(format!(
                "{}: decoded {} bytes of {}, manifest says {} bytes of {}",
                path.display(),
                tensor.len(),
                tensor.element_type(),
                entry.original_length,
                entry.dtype
            )));
        }
        Ok(tensor)
    }

    /// Reconstructs every shard at `step` as base XOR delta_1 ... XOR delta_step.
    pub fn restore(&self, step: u64, workers: usize) -> CliResult<BTreeMap<String, TensorBuffer>> {
        let last = self
            .last_step()
            .ok_or_else(|| CliError::Input("chain is empty".into()))?;
        if step > last {
            return Err(CliError::Input(format!("step {step} not in chain (last step is {last})")));
        }
        let mut shards = BTreeMap::new();
        for (name, base) in self.step_entries(0) {
            let mut current = self.load_stream(base, workers)?;
            for s in 1..=step {
                let entries = self.step_entries(s);
                let entry = entries[name];
                let delta = DeltaBuffer::from_tensor(self.load_stream(entry, workers)?, s - 1);
                xor_apply_in_place(&mut current, &delta)?;
            }
            shards.insert(name.to_string(), current);
        }
        Ok(shards)
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    f.sync_all().map_err(|e| CliError::io(path, e))
}

fn check_shard_name(name: &str) -> CliResult<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\', '\0'])
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(format!("invalid shard name '{name}'")))
    }
}

/// Appends one step to the chain at `dir`, creating it if needed.
/// Returns the step index written.
pub fn add_step(
    dir: &Path,
    step: Option<u64>,
    inputs: &[ShardInput],
    options: &PlmcOptions,
    workers: usize,
) -> CliResult<u64> {
    if inputs.is_empty() {
        return Err(CliError::Input("no shards given".into()));
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let _lock = ChainLock::acquire(dir)?;

    let mut chain = if dir.join(MANIFEST).exists() {
        Chain::open(dir)?
    } else {
        Chain::create(dir)
    };
    let expected = chain.last_step().map_or(0, |s| s + 1);
    let step = step.unwrap_or(expected);
    if step < expected {
        return Err(CliError::Input(format!("step {step} is already in the chain")));
    }
    if step > expected {
        return Err(CliError::Input(format!(
            "step {step} would leave a gap; the next step is {expected}"
        )));
    }

    let mut names = BTreeMap::new();
    for input in inputs {
        check_shard_name(&input.name)?;
        if names.insert(input.name.as_str(), input).is_some() {
            return Err(CliError::Input(format!("shard '{}' given twice", input.name)));
        }
    }
    if step > 0 {
        let prev = chain.step_entries(step - 1);
        if !prev.keys().eq(names.keys()) {
            return Err(CliError::Shape(format!(
                "step {step} shards {:?} differ from step {} shards {:?}",
                names.keys().collect::<Vec<_>>(),
                step - 1,
                prev.keys().collect::<Vec<_>>()
            )));
        }
    }

    let step_dir_name = format!("step-{step:06}");
    let step_dir = dir.join(&step_dir_name);
    fs::create_dir_all(&step_dir).map_err(|e| CliError::io(&step_dir, e))?;
    let previous = if step > 0 {
        // Loaded before anything is written so a shape error leaves no trace.
        let tensors: BTreeMap<&str, TensorBuffer> =
            names.iter().map(|(n, i)| Ok((*n, i.load()?))).collect::<CliResult<_>>()?;
        let prev_entries = chain.step_entries(step - 1);
        for (name, t) in &tensors {
            let p = prev_entries[name];
            if t.element_type() != p.element_type()? || t.len() as u64 != p.original_length {
                return Err(CliError::Shape(format!(
                    "shard '{name}': {} bytes of {} at step {step}, but {} bytes of {} at step {}",
                    t.len(),
                    t.element_type(),
                    p.original_length,
                    p.dtype,
                    step - 1
                )));
            }
        }
        Some((tensors, chain.restore(step - 1, workers)?))
    } else {
        None
    };

    let mut new_entries = Vec::new();
    for (name, input) in &names {
        let (stream, tensor_len, ty, role) = match &previous {
            None => {
                let t = input.load()?;
                (plmc_compress(&t, options)?, t.len(), t.element_type(), Role::Base)
            }
            Some((tensors, prev)) => {
                let t = &tensors[name];
                let delta = xor_delta(&prev[*name], t)?.with_step_from(step - 1);
                (plmc_compress_delta(&delta, options)?, t.len(), t.element_type(), Role::Delta)
            }
        };
        let rel = format!("{step_dir_name}/{name}.lmc");
        write_synced(&dir.join(&rel), stream.as_bytes())?;
        new_entries.push(ManifestEntry {
            step,
            role,
            shard: name.to_string(),
            dtype: ty.name().to_string(),
            original_length: tensor_len as u64,
            stream: rel,
            crc32: read_header(stream.as_bytes())?.crc32,
            shape: input.shape.clone(),
        });
    }
    chain.entries.extend(new_entries);
    chain.save()?;
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shard(dir: &Path, name: &str, bytes: &[u8]) -> ShardInput {
        let path = dir.join(name);
        fs::write(&path, bytes).unwrap();
        ShardInput {
            name: name.into(),
            dtype: "bf16".into(),
            path,
            shape: None,
        }
    }

    fn opts() -> PlmcOptions {
        PlmcOptions {
            segment_count: 2,
            ..PlmcOptions::default()
        }
    }

    #[test]
    fn add_and_restore_two_shards() {
        let tmp = tempfile::tempdir().unwrap();
        let chain_dir = tmp.path().join("chain");
        let data: Vec<Vec<u8>> = (0..4u8).map(|k| (0..2000u32).map(|i| (i as u8) ^ k).collect()).collect();
        for (k, d) in data.iter().enumerate() {
            let a = shard(tmp.path(), "a.bin", d);
            let b = shard(tmp.path(), "b.bin", &d.iter().rev().copied().collect::<Vec<_>>());
            assert_eq!(add_step(&chain_dir, None, &[a, b], &opts(), 1).unwrap(), k as u64);
        }
        let chain = Chain::open(&chain_dir).unwrap();
        assert_eq!(chain.last_step(), Some(3));
        for (k, d) in data.iter().enumerate() {
            let shards = chain.restore(k as u64, 2).unwrap();
            assert_eq!(shards["a.bin"].bytes(), &d[..]);
        }
        assert!(!chain_dir.join(LOCK).exists());
    }

    #[test]
    fn rejects_duplicates_gaps_and_shape_changes() {
        let tmp = tempfile::tempdir().unwrap();
        let chain_dir = tmp.path().join("c");
        let a = shard(tmp.path(), "a", &[1, 2, 3, 4]);
        add_step(&chain_dir, None, std::slice::from_ref(&a), &opts(), 1).unwrap();
        assert!(matches!(
            add_step(&chain_dir, Some(0), std::slice::from_ref(&a), &opts(), 1),
            Err(CliError::Input(_))
        ));
        assert!(matches!(
            add_step(&chain_dir, Some(5), std::slice::from_ref(&a), &opts(), 1),
            Err(CliError::Input(_))
        ));
        let longer = shard(tmp.path(), "a", &[1, 2, 3, 4, 5, 6]);
        assert!(matches!(
            add_step(&chain_dir, None, &[longer], &opts(), 1),
            Err(CliError::Shape(_))
        ));
        let other = shard(tmp.path(), "b", &[1, 2, 3, 4]);
        assert!(matches!(
            add_step(&chain_dir, None, &[other], &opts(), 1),
            Err(CliError::Shape(_))
        ));
        assert_eq!(Chain::open(&chain_dir).unwrap().last_step(), Some(0));
    }

    #[test]
    fn stale_lock_is_reclaimed_live_lock_is_not() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join(LOCK), format!("{}\n", u32::MAX - 1)).unwrap();
        drop(ChainLock::acquire(tmp.path()).unwrap());
        let _held = ChainLock::acquire(tmp.path()).unwrap();
        assert!(matches!(ChainLock::acquire(tmp.path()), Err(CliError::Input(_))));
    }

    #[test]
    fn shard_names_are_plain_file_names() {
        for bad in ["", "..", "a/b", ".hidden"] {
            assert!(check_shard_name(bad).is_err(), "{bad}");
        }
        assert!(check_shard_name("layer0.weight.bin").is_ok());
    }

    #[test]
    fn shard_list_paths_resolve_relative_to_the_list() {
        let tmp = tempfile::tempdir().unwrap();
        let list = tmp.path().join("shards.jsonl");
        fs::write(
            &list,
            "{\"name\":\"w\",\"dtype\":\"bf16\",\"path\":\"w.bin\",\"shape\":[2,2]}\n\n",
        )
        .unwrap();
        let shards = ShardInput::read_list(&list).unwrap();
        assert_eq!(shards.len(), 1);
        assert_eq!(shards[0].path, tmp.path().join("w.bin"));
        fs::write(tmp.path().join("w.bin"), [0u8; 6]).unwrap();
        assert!(matches!(shards[0].load(), Err(CliError::Shape(_))));
    }
}
