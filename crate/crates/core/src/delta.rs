//! XOR deltas between consecutive checkpoint steps.

use crate::element::{ElementType, TensorBuffer};
use crate::error::{LmcError, Result};
use crate::par::*;

const PAR_CHUNK: usize = 1 << 18;

/// Bytewise XOR of two consecutive steps of one shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaBuffer {
    bytes: Vec<u8>,
    element_type: ElementType,
    step_from: u64,
}

impl DeltaBuffer {
    /// Wraps bytes already known to be a delta, e.g. read back from a stream.
    pub fn from_tensor(buffer: TensorBuffer, step_from: u64) -> Self {
        let element_type = buffer.element_type();
        Self {
            bytes: buffer.into_bytes(),
            element_type,
            step_from,
        }
    }

    pub fn with_step_from(mut self, step_from: u64) -> Self {
        self.step_from = step_from;
        self
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn element_type(&self) -> ElementType {
        self.element_type
    }

    pub fn step_from(&self) -> u64 {
        self.step_from
    }

    pub fn step_to(&self) -> u64 {
        self.step_from + 1
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// The delta viewed as an ordinary tensor of the same element type.
    pub fn into_tensor(self) -> TensorBuffer {
        TensorBuffer::new(self.bytes, self.element_type).expect("delta keeps element alignment")
    }
}

/// `prev XOR next`, labelled as the step 0 -> 1 transition.
pub fn xor_delta(prev: &TensorBuffer, next: &TensorBuffer) -> Result<DeltaBuffer> {
    if prev.element_type() != next.element_type() {
        return Err(LmcError::TypeMismatch {
            left: prev.element_type(),
            right: next.element_type(),
        });
    }
    check_len(prev.len(), next.len())?;
    Ok(DeltaBuffer {
        bytes: xor_bytes(prev.bytes(), next.bytes()),
        element_type: prev.element_type(),
        step_from: 0,
    })
}

/// Reconstructs the next step from `prev` and the delta leading away from it.
pub fn xor_apply(prev: &TensorBuffer, delta: &DeltaBuffer) -> Result<TensorBuffer> {
    check_len(prev.len(), delta.len())?;
    TensorBuffer::new(xor_bytes(prev.bytes(), delta.bytes()), prev.element_type())
}

/// Like [`xor_apply`], overwriting `target` instead of allocating.
pub fn xor_apply_in_place(target: &mut TensorBuffer, delta: &DeltaBuffer) -> Result<()> {
    check_len(target.len(), delta.len())?;
    xor_in_place(target.bytes_mut(), delta.bytes());
    Ok(())
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(LmcError::ShapeMismatch { left, right });
    }
    Ok(())
}

pub(crate) fn xor_bytes(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len()];
    out.par_chunks_mut(PAR_CHUNK)
        .zip(a.par_chunks(PAR_CHUNK).zip(b.par_chunks(PAR_CHUNK)))
        .for_each(|(o, (x, y))| {
            for ((o, x), y) in o.iter_mut().zip(x).zip(y) {
                *o = x ^ y;
            }
        });
    out
}

/// In-place `acc ^= other`; lengths must already match.
pub(crate) fn xor_in_place(acc: &mut [u8], other: &[u8]) {
    acc.par_chunks_mut(PAR_CHUNK)
        .zip(other.par_chunks(PAR_CHUNK))
        .for_each(|(a, b)| {
            for (a, b) in a.iter_mut().zip(b) {
                *a ^= b;
            }
        });
}
