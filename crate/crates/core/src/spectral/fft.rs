//! Unnormalized multi-dimensional FFTs on cubic arrays, axis by axis.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const PARALLEL_MIN: usize = 1 << 12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place unnormalized DFT of a `side^dim` array stored row-major.
///
/// Forward uses `e^{-2πi jk/n}`, inverse `e^{+2πi jk/n}`; no scaling.
pub fn fft_nd(data: &mut [Complex64], dim: usize, side: usize, inverse: bool) {
    debug_assert_eq!(data.len(), side.pow(dim as u32));
    let fft = plan(side, inverse);
    let parallel = data.len() >= PARALLEL_MIN;
    let mut buffer: Vec<Complex64> = Vec::new();
    for axis in 0..dim {
        let inner = side.pow((dim - 1 - axis) as u32);
        if inner == 1 {
            run_lines(&*fft, data, side, parallel);
            continue;
        }
        buffer.resize(data.len(), Complex64::default());
        gather(data, &mut buffer, side, inner, parallel);
        run_lines(&*fft, &mut buffer, side, parallel);
        scatter(&buffer, data, side, inner, parallel);
    }
}

fn run_lines(fft: &dyn Fft<f64>, data: &mut [Complex64], side: usize, parallel: bool) {
    if parallel {
        let lines_per_task = (PARALLEL_MIN / side).max(1);
        data.par_chunks_mut(side * lines_per_task)
            .for_each(|chunk| fft.process(chunk));
    } else {
        fft.process(data);
    }
}

// Line (o, i) of an axis with `inner` trailing elements occupies
// data[o*side*inner + k*inner + i] for k in 0..side.
fn gather(data: &[Complex64], buf: &mut [Complex64], side: usize, inner: usize, parallel: bool) {
    let fill = |(line, out): (usize, &mut [Complex64])| {
        let o = line / inner;
        let i = line % inner;
        let base = o * side * inner + i;
        for (k, v) in out.iter_mut().enumerate() {
            *v = data[base + k * inner];
        }
    };
    if parallel {
        buf.par_chunks_mut(side).enumerate().for_each(fill);
    } else {
        buf.chunks_mut(side).enumerate().for_each(fill);
    }
}

fn scatter(buf: &[Complex64], data: &mut [Complex64], side: usize, inner: usize, parallel: bool) {
    let fill = |(row, out): (usize, &mut [Complex64])| {
        let o = row / side;
        let k = row % side;
        for (i, v) in out.iter_mut().enumerate() {
            *v = buf[(o * inner + i) * side + k];
        }
    };
    if parallel {
        data.par_chunks_mut(inner).enumerate().for_each(fill);
    } else {
        data.chunks_mut(inner).enumerate().for_each(fill);
    }
}
