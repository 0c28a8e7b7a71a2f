//! Canonical, length-limited Huffman coding of byte blocks.
//!
//! Only code lengths are ever serialized; codes are rebuilt from them with
//! the canonical assignment, and bits are packed most significant first.

mod bitio;
mod canonical;
mod codebook;

pub use canonical::{assign_canonical, decode_block, encode_block, CanonicalCodes, EncodedBits};
pub use codebook::{build_codebook, BlockCodebook, CODEBOOK_WIRE_LEN, MAX_CODE_LENGTH};

pub(crate) use canonical::{encode_into, DecodeTable};
