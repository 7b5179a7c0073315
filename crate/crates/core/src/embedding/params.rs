use std::sync::atomic::{AtomicU32, Ordering};

use super::Matrix;

/// Row-level access to the two weight matrices.
///
/// Steps read rows into scratch buffers and write back additive updates, so
/// the same step code runs against plain matrices (single worker) and
/// against shared atomic storage (several workers racing on the same rows).
pub(crate) trait Params {
    fn read_input(&self, row: usize, out: &mut [f32]);
    fn read_output(&self, row: usize, out: &mut [f32]);
    fn add_input(&mut self, row: usize, scale: f32, v: &[f32]);
    fn add_output(&mut self, row: usize, scale: f32, v: &[f32]);
}

pub(crate) struct DenseParams<'a> {
    pub input: &'a mut Matrix,
    pub output: &'a mut Matrix,
}

fn axpy(dst: &mut [f32], scale: f32, v: &[f32]) {
    for (d, &x) in dst.iter_mut().zip(v) {
        *d += scale * x;
    }
}

impl Params for DenseParams<'_> {
    fn read_input(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(self.input.row(row));
    }

    fn read_output(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(self.output.row(row));
    }

    fn add_input(&mut self, row: usize, scale: f32, v: &[f32]) {
        axpy(self.input.row_mut(row), scale, v);
    }

    fn add_output(&mut self, row: usize, scale: f32, v: &[f32]) {
        axpy(self.output.row_mut(row), scale, v);
    }
}

/// Lock-free weight storage shared by training workers.
///
/// Updates are relaxed load/add/store sequences, so concurrent writers to
/// one row may lose each other's contributions. That is the accepted
/// trade-off of asynchronous SGD on sparse updates.
pub(crate) struct SharedParams {
    cols: usize,
    input: Vec<AtomicU32>,
    output: Vec<AtomicU32>,
}

fn to_atomic(m: &Matrix) -> Vec<AtomicU32> {
    m.as_slice().iter().map(|v| AtomicU32::new(v.to_bits())).collect()
}

fn copy_back(src: &[AtomicU32], dst: &mut Matrix) {
    for (d, s) in dst.as_mut_slice().iter_mut().zip(src) {
        *d = f32::from_bits(s.load(Ordering::Relaxed));
    }
}

impl SharedParams {
    pub fn new(input: &Matrix, output: &Matrix) -> Self {
        SharedParams {
            cols: input.cols(),
            input: to_atomic(input),
            output: to_atomic(output),
        }
    }

    pub fn write_back(&self, input: &mut Matrix, output: &mut Matrix) {
        copy_back(&self.input, input);
        copy_back(&self.output, output);
    }

    pub fn is_finite(&self) -> bool {
        self.input
            .iter()
            .chain(&self.output)
            .all(|v| f32::from_bits(v.load(Ordering::Relaxed)).is_finite())
    }

    fn read(store: &[AtomicU32], cols: usize, row: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(&store[row * cols..(row + 1) * cols]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(store: &[AtomicU32], cols: usize, row: usize, scale: f32, v: &[f32]) {
        for (a, &x) in store[row * cols..(row + 1) * cols].iter().zip(v) {
            let cur = f32::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * x).to_bits(), Ordering::Relaxed);
        }
    }
}

/// A worker's handle onto [`SharedParams`].
pub(crate) struct SharedView<'a>(pub &'a SharedParams);

impl Params for SharedView<'_> {
    fn read_input(&self, row: usize, out: &mut [f32]) {
        SharedParams::read(&self.0.input, self.0.cols, row, out);
    }

    fn read_output(&self, row: usize, out: &mut [f32]) {
        SharedParams::read(&self.0.output, self.0.cols, row, out);
    }

    fn add_input(&mut self, row: usize, scale: f32, v: &[f32]) {
        SharedParams::add(&self.0.input, self.0.cols, row, scale, v);
    }

    fn add_output(&mut self, row: usize, scale: f32, v: &[f32]) {
        SharedParams::add(&self.0.output, self.0.cols, row, scale, v);
    }
}
