//! Element types and the raw tensor buffers the codec operates on.
//!
//! Buffers are always little-endian per element: byte 0 of an element is its
//! least significant byte, independent of the host.

use std::fmt;
use std::str::FromStr;

use crate::error::{LmcError, Result};

/// Bit layout of a binary floating point format, most significant field first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloatLayout {
    pub sign_bits: u32,
    pub exponent_bits: u32,
    pub mantissa_bits: u32,
}

impl FloatLayout {
    pub const fn total_bits(&self) -> u32 {
        self.sign_bits + self.exponent_bits + self.mantissa_bits
    }

    /// Bit index of the sign bit.
    pub const fn sign_bit(&self) -> u32 {
        self.total_bits() - 1
    }

    /// Inclusive range of exponent bit indices, lowest first.
    pub const fn exponent_range(&self) -> (u32, u32) {
        (self.mantissa_bits, self.mantissa_bits + self.exponent_bits - 1)
    }
}

pub const BF16_LAYOUT: FloatLayout = FloatLayout {
    sign_bits: 1,
    exponent_bits: 8,
    mantissa_bits: 7,
};

pub const FP16_LAYOUT: FloatLayout = FloatLayout {
    sign_bits: 1,
    exponent_bits: 5,
    mantissa_bits: 10,
};

pub const FP32_LAYOUT: FloatLayout = FloatLayout {
    sign_bits: 1,
    exponent_bits: 8,
    mantissa_bits: 23,
};

/// Element encoding of a tensor buffer. The discriminant is the wire code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ElementType {
    /// No element structure; byte-grouping is the identity.
    Raw8 = 0,
    Bf16 = 1,
    Fp16 = 2,
    Fp32 = 3,
}

impl ElementType {
    pub const ALL: [ElementType; 4] = [
        ElementType::Raw8,
        ElementType::Bf16,
        ElementType::Fp16,
        ElementType::Fp32,
    ];

    /// Bytes per element.
    pub const fn width(self) -> usize {
        match self {
            ElementType::Raw8 => 1,
            ElementType::Bf16 | ElementType::Fp16 => 2,
            ElementType::Fp32 => 4,
        }
    }

    pub const fn bits(self) -> u32 {
        self.width() as u32 * 8
    }

    pub const fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(ElementType::Raw8),
            1 => Ok(ElementType::Bf16),
            2 => Ok(ElementType::Fp16),
            3 => Ok(ElementType::Fp32),
            other => Err(LmcError::UnsupportedFormat(format!(
                "unknown element type code {other}"
            ))),
        }
    }

    pub const fn layout(self) -> Option<FloatLayout> {
        match self {
            ElementType::Raw8 => None,
            ElementType::Bf16 => Some(BF16_LAYOUT),
            ElementType::Fp16 => Some(FP16_LAYOUT),
            ElementType::Fp32 => Some(FP32_LAYOUT),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ElementType::Raw8 => "raw",
            ElementType::Bf16 => "bf16",
            ElementType::Fp16 => "fp16",
            ElementType::Fp32 => "fp32",
        }
    }

    /// Encodes `value` in this format (round to nearest even), little-endian.
    pub fn encode_f32(self, value: f32, out: &mut Vec<u8>) {
        match self {
            ElementType::Raw8 => out.push(value as u8),
            ElementType::Bf16 => out.extend_from_slice(&half::bf16::from_f32(value).to_le_bytes()),
            ElementType::Fp16 => out.extend_from_slice(&half::f16::from_f32(value).to_le_bytes()),
            ElementType::Fp32 => out.extend_from_slice(&value.to_le_bytes()),
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementType {
    type Err = LmcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "raw8" | "u8" => Ok(ElementType::Raw8),
            "bf16" | "bfloat16" => Ok(ElementType::Bf16),
            "fp16" | "f16" | "float16" => Ok(ElementType::Fp16),
            "fp32" | "f32" | "float32" => Ok(ElementType::Fp32),
            other => Err(LmcError::InvalidConfig(format!(
                "unknown dtype '{other}' (expected bf16, fp16, fp32 or raw)"
            ))),
        }
    }
}

/// bfloat16 bit pattern of `value`, rounded to nearest even.
pub fn bf16_bits(value: f32) -> u16 {
    half::bf16::from_f32(value).to_bits()
}

fn check_alignment(len: usize, element_type: ElementType) -> Result<()> {
    let width = element_type.width();
    if len % width != 0 {
        return Err(LmcError::Alignment {
            len,
            width,
            element_type,
        });
    }
    Ok(())
}

/// One tensor shard at one step: raw little-endian element bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorBuffer {
    bytes: Vec<u8>,
    element_type: ElementType,
}

impl TensorBuffer {
    pub fn new(bytes: Vec<u8>, element_type: ElementType) -> Result<Self> {
        check_alignment(bytes.len(), element_type)?;
        Ok(Self {
            bytes,
            element_type,
        })
    }

    /// Packs `values` in the given format.
    pub fn from_f32(values: &[f32], element_type: ElementType) -> Self {
        let mut bytes = Vec::with_capacity(values.len() * element_type.width());
        for &v in values {
            element_type.encode_f32(v, &mut bytes);
        }
        Self {
            bytes,
            element_type,
        }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Mutable view of the element bytes; the length cannot change.
    pub fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn element_type(&self) -> ElementType {
        self.element_type
    }

    pub fn element_count(&self) -> usize {
        self.bytes.len() / self.element_type.width()
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Element bytes rearranged so that byte `g` of every element sits in the
/// contiguous group `[g * n, (g + 1) * n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedBuffer {
    bytes: Vec<u8>,
    element_type: ElementType,
    element_count: usize,
}

impl GroupedBuffer {
    pub fn new(bytes: Vec<u8>, element_type: ElementType) -> Result<Self> {
        check_alignment(bytes.len(), element_type)?;
        let element_count = bytes.len() / element_type.width();
        Ok(Self {
            bytes,
            element_type,
            element_count,
        })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn element_type(&self) -> ElementType {
        self.element_type
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    /// Bytes of group `g`, `g < width`.
    pub fn group(&self, g: usize) -> &[u8] {
        &self.bytes[g * self.element_count..(g + 1) * self.element_count]
    }
}
