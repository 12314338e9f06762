//! Dense complex grids and the multidimensional DFT.
//!
//! Axes are transformed one at a time: lanes of the current axis are gathered
//! into a contiguous buffer, transformed in batches, and scattered back. Each
//! lane is independent, so the result does not depend on batching.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// X_k = Σ x_n e^{−2πi kn/M}.
    Forward,
    /// Unnormalized: x_n = Σ X_k e^{+2πi kn/M}.
    Inverse,
}

/// Row-major dense complex array.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        ComplexGrid {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<Complex64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        ComplexGrid { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.flat_index(idx)]
    }
}

const LANES_PER_TASK: usize = 64;

/// In-place multidimensional DFT over every axis of `grid`.
pub fn fft_nd(grid: &mut ComplexGrid, direction: Direction) {
    let dir = match direction {
        Direction::Forward => FftDirection::Forward,
        Direction::Inverse => FftDirection::Inverse,
    };
    let shape = grid.shape.clone();
    let total = grid.data.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];

    for axis in 0..shape.len() {
        let len = shape[axis];
        if len <= 1 {
            continue;
        }
        let stride: usize = shape[axis + 1..].iter().product();
        let fft = planner.plan_fft(len, dir);
        let src = &grid.data;

        // Gather: lane l = outer * stride + inner.
        par::for_each_chunk_mut(&mut buf, len, |lane, out| {
            let outer = lane / stride;
            let inner = lane % stride;
            let base = outer * len * stride + inner;
            for (j, o) in out.iter_mut().enumerate() {
                *o = src[base + j * stride];
            }
        });

        par::for_each_chunk_mut(&mut buf, len * LANES_PER_TASK, |_, lanes| {
            let mut scratch =
                vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(lanes, &mut scratch);
        });

        // Scatter: row r of `stride` contiguous entries is (outer, j).
        let gathered = &buf;
        par::for_each_chunk_mut(&mut grid.data, stride, |row, out| {
            let outer = row / len;
            let j = row % len;
            for (inner, o) in out.iter_mut().enumerate() {
                *o = gathered[(outer * stride + inner) * len + j];
            }
        });
    }
}
