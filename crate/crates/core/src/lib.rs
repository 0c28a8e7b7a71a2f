//! Lossless compression for model checkpoint tensors.
//!
//! The pipeline for a checkpoint step is: XOR against the previous step
//! ([`delta`]), regroup bytes by significance ([`bytegroup`]), then code each
//! block with whichever of canonical Huffman, RLE or stored is smallest
//! ([`stream`]). [`plmc`] runs the block coder over independent segments in
//! parallel, and [`analysis`] measures how compressible a trajectory is.
//!
//! ```
//! use lmc_core::{lmc_compress, lmc_decompress, ElementType, LmcOptions, TensorBuffer};
//!
//! let shard = TensorBuffer::from_f32(&[0.001, -0.002, 0.0015, 0.0], ElementType::Bf16);
//! let stream = lmc_compress(&shard, &LmcOptions::default()).unwrap();
//! assert_eq!(lmc_decompress(stream.as_bytes()).unwrap(), shard);
//! ```

pub mod analysis;
pub mod bench;
pub mod bytegroup;
pub mod delta;
pub mod element;
pub mod entropy;
pub mod error;
pub mod huffman;
mod par;
pub mod plmc;
pub mod stream;

pub use bytegroup::{byte_group, byte_ungroup};
pub use delta::{xor_apply, xor_apply_in_place, xor_delta, DeltaBuffer};
pub use element::{ElementType, GroupedBuffer, TensorBuffer};
pub use entropy::{
    block_entropies, entropy, estimate_file_entropy_ratio, histogram, BlockEntropy, ByteHistogram,
};
pub use error::{LmcError, Result};
pub use par::available_workers;
pub use plmc::{plmc_compress, plmc_compress_delta, plmc_decompress, PlmcOptions};
pub use stream::{
    lmc_compress, lmc_compress_delta, lmc_decompress, read_header, CodeStream, LmcOptions,
    StreamHeader,
};
