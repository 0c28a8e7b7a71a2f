//! Segment-parallel compression over the block codec.
//!
//! Input is consumed in windows of `buffer_size` bytes. Each window is
//! byte-grouped, cut into `segment_count` block-aligned segments, and the
//! segments are coded concurrently. The segment count is stored in the
//! stream, so the bytes produced never depend on how many threads ran.

use crate::delta::DeltaBuffer;
use crate::element::{ElementType, TensorBuffer};
use crate::entropy::{validate_block_size, DEFAULT_BLOCK_SIZE};
use crate::error::{LmcError, Result};
use crate::par::{available_workers, with_workers};
use crate::stream::{decode_stream, encode_stream, CodeStream, EncodeParams, StreamFlags};

pub const DEFAULT_BUFFER_SIZE: usize = 128 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlmcOptions {
    pub byte_group: bool,
    pub block_size: usize,
    pub segment_count: usize,
    /// Window size in bytes; rounded down to a whole number of blocks.
    pub buffer_size: usize,
    /// Threads to run on. `None` uses one per segment.
    pub workers: Option<usize>,
}

impl Default for PlmcOptions {
    fn default() -> Self {
        Self {
            byte_group: true,
            block_size: DEFAULT_BLOCK_SIZE,
            segment_count: available_workers(),
            buffer_size: DEFAULT_BUFFER_SIZE,
            workers: None,
        }
    }
}

impl PlmcOptions {
    pub fn with_segments(segment_count: usize) -> Self {
        Self {
            segment_count,
            ..Self::default()
        }
    }

    fn params(&self, element_type: ElementType, flags: StreamFlags) -> Result<EncodeParams> {
        validate_block_size(self.block_size)?;
        if self.segment_count == 0 {
            return Err(LmcError::InvalidConfig("segment count must be at least 1".into()));
        }
        if self.buffer_size < self.block_size {
            return Err(LmcError::InvalidConfig(format!(
                "buffer size {} is smaller than block size {}",
                self.buffer_size, self.block_size
            )));
        }
        if self.workers == Some(0) {
            return Err(LmcError::InvalidConfig("worker count must be at least 1".into()));
        }
        Ok(EncodeParams {
            element_type,
            flags,
            block_size: self.block_size,
            segment_count: self.segment_count,
            window: self.buffer_size / self.block_size * self.block_size,
        })
    }

    fn worker_count(&self) -> usize {
        self.workers.unwrap_or(self.segment_count)
    }
}

pub fn plmc_compress(input: &TensorBuffer, options: &PlmcOptions) -> Result<CodeStream> {
    let params = options.params(input.element_type(), StreamFlags::new(options.byte_group, false))?;
    let bytes = with_workers(options.worker_count(), || {
        encode_stream(input.bytes(), &params, true)
    })?;
    Ok(CodeStream::new(bytes, input.len() as u64))
}

/// Parallel counterpart of [`crate::stream::lmc_compress_delta`].
pub fn plmc_compress_delta(delta: &DeltaBuffer, options: &PlmcOptions) -> Result<CodeStream> {
    let params = options.params(delta.element_type(), StreamFlags::new(options.byte_group, true))?;
    let bytes = with_workers(options.worker_count(), || {
        encode_stream(delta.bytes(), &params, true)
    })?;
    Ok(CodeStream::new(bytes, delta.len() as u64))
}

/// Decodes any stream, serial or segmented, on `workers` threads.
pub fn plmc_decompress(stream: &[u8], workers: usize) -> Result<TensorBuffer> {
    if workers == 0 {
        return Err(LmcError::InvalidConfig("worker count must be at least 1".into()));
    }
    let (header, bytes) = with_workers(workers, || decode_stream(stream, true))?;
    TensorBuffer::new(bytes, header.element_type)
}
