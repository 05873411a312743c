//! Thin wrappers over `rustfft` with a per-thread plan cache.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT without normalization.
pub fn forward_in_place(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse DFT without normalization.
pub fn inverse_in_place(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Unitary forward DFT (scaled by `1/sqrt(n)`).
pub fn forward_unitary(buf: &mut [Complex64]) {
    forward_in_place(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Unitary inverse DFT (scaled by `1/sqrt(n)`).
pub fn inverse_unitary(buf: &mut [Complex64]) {
    inverse_in_place(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}
