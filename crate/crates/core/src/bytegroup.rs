//! Byte-grouping: split multi-byte elements into per-significance byte planes.
//!
//! Group 0 holds the least significant byte of every element, group
//! `width - 1` the most significant. For bf16 that puts the sign bit and the
//! upper seven exponent bits together in group 1.

use crate::element::{GroupedBuffer, TensorBuffer};
use crate::par::*;

/// Elements handled by one parallel task.
const PAR_CHUNK_ELEMS: usize = 1 << 16;

pub fn byte_group(input: &TensorBuffer) -> GroupedBuffer {
    let mut out = vec![0u8; input.len()];
    group_into(input.bytes(), input.element_type().width(), &mut out);
    GroupedBuffer::new(out, input.element_type()).expect("grouping preserves alignment")
}

pub fn byte_ungroup(input: &GroupedBuffer) -> TensorBuffer {
    let mut out = vec![0u8; input.bytes().len()];
    ungroup_into(input.bytes(), input.element_type().width(), &mut out);
    TensorBuffer::new(out, input.element_type()).expect("ungrouping preserves alignment")
}

/// Writes the grouped form of `src` into `dst`. Both must have the same
/// length, a multiple of `width`.
pub fn group_into(src: &[u8], width: usize, dst: &mut [u8]) {
    debug_assert_eq!(src.len(), dst.len());
    debug_assert_eq!(src.len() % width, 0);
    let n = src.len() / width;
    if width == 1 || n == 0 {
        dst.copy_from_slice(src);
        return;
    }
    for (g, plane) in dst.chunks_exact_mut(n).enumerate() {
        gather_plane(src, width, g, plane);
    }
}

/// Inverse of [`group_into`].
pub fn ungroup_into(src: &[u8], width: usize, dst: &mut [u8]) {
    debug_assert_eq!(src.len(), dst.len());
    debug_assert_eq!(src.len() % width, 0);
    let n = src.len() / width;
    if width == 1 || n == 0 {
        dst.copy_from_slice(src);
        return;
    }
    scatter_planes(src, n, width, 0, dst);
}

/// [`group_into`] split across the current worker pool.
pub(crate) fn group_into_par(src: &[u8], width: usize, dst: &mut [u8]) {
    let n = src.len() / width;
    if width == 1 || n <= PAR_CHUNK_ELEMS {
        group_into(src, width, dst);
        return;
    }
    let tasks: Vec<(usize, usize, &mut [u8])> = dst
        .chunks_exact_mut(n)
        .enumerate()
        .flat_map(|(g, plane)| {
            plane
                .chunks_mut(PAR_CHUNK_ELEMS)
                .enumerate()
                .map(move |(c, out)| (g, c * PAR_CHUNK_ELEMS, out))
        })
        .collect();
    tasks.into_par_iter().for_each(|(g, first, out)| {
        let elems = &src[first * width..(first + out.len()) * width];
        gather_plane(elems, width, g, out);
    });
}

/// [`ungroup_into`] split across the current worker pool.
pub(crate) fn ungroup_into_par(src: &[u8], width: usize, dst: &mut [u8]) {
    let n = src.len() / width;
    if width == 1 || n <= PAR_CHUNK_ELEMS {
        ungroup_into(src, width, dst);
        return;
    }
    dst.par_chunks_mut(PAR_CHUNK_ELEMS * width)
        .enumerate()
        .for_each(|(c, out)| scatter_planes(src, n, width, c * PAR_CHUNK_ELEMS, out));
}

fn gather_plane(elems: &[u8], width: usize, g: usize, plane: &mut [u8]) {
    match width {
        2 => {
            for (o, e) in plane.iter_mut().zip(elems.chunks_exact(2)) {
                *o = e[g];
            }
        }
        4 => {
            for (o, e) in plane.iter_mut().zip(elems.chunks_exact(4)) {
                *o = e[g];
            }
        }
        _ => {
            for (o, e) in plane.iter_mut().zip(elems.chunks_exact(width)) {
                *o = e[g];
            }
        }
    }
}

/// Rebuilds elements `first..first + out.len() / width` from the planes of
/// `grouped` (which holds `n` elements).
fn scatter_planes(grouped: &[u8], n: usize, width: usize, first: usize, out: &mut [u8]) {
    let count = out.len() / width;
    for g in 0..width {
        let plane = &grouped[g * n + first..g * n + first + count];
        for (e, &b) in out.chunks_exact_mut(width).zip(plane) {
            e[g] = b;
        }
    }
}
