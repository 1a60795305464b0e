//! Thin n-dimensional FFT layer over `rustfft`.
//!
//! Conventions: the forward transform is unnormalized and the inverse carries
//! the `1/N` factor, so `ifft(fft(x)) = x` and `sum |X|^2 = N * sum |x|^2`.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::signal::Shape;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn process_rows(data: &mut [Complex64], len: usize, dir: Direction) {
    if len <= 1 {
        return;
    }
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let plan = match dir {
            Direction::Forward => planner.plan_fft_forward(len),
            Direction::Inverse => planner.plan_fft_inverse(len),
        };
        plan.process(data);
    });
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

fn transform(shape: Shape, data: &mut [Complex64], dir: Direction) {
    debug_assert_eq!(data.len(), shape.len());
    match shape {
        Shape::D1(n) => process_rows(data, n, dir),
        Shape::D2(rows, cols) => {
            process_rows(data, cols, dir);
            if rows > 1 {
                let mut scratch = vec![Complex64::default(); data.len()];
                transpose(data, &mut scratch, rows, cols);
                process_rows(&mut scratch, rows, dir);
                transpose(&scratch, data, cols, rows);
            }
        }
    }
}

/// In-place unnormalized forward DFT.
pub fn fft(shape: Shape, data: &mut [Complex64]) {
    transform(shape, data, Direction::Forward);
}

/// In-place inverse DFT including the `1/N` normalization.
pub fn ifft(shape: Shape, data: &mut [Complex64]) {
    transform(shape, data, Direction::Inverse);
    let scale = 1.0 / shape.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Forward DFT of a copy.
pub fn fft_of(shape: Shape, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    fft(shape, &mut out);
    out
}

/// Inverse DFT of a copy.
pub fn ifft_of(shape: Shape, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    ifft(shape, &mut out);
    out
}

/// Spectrum of `x` subsampled by `factor` per axis, computed from the spectrum
/// of `x` by folding the aliased blocks together.
///
/// Equivalent to `fft(subsample(ifft(spec)))` without the full-size inverse.
pub fn fold_spectrum(shape: Shape, spec: &[Complex64], factor: usize) -> Vec<Complex64> {
    if factor == 1 {
        return spec.to_vec();
    }
    let (rows, cols) = shape.axes();
    let row_factor = if shape.ndims() == 2 { factor } else { 1 };
    let (r_out, c_out) = (rows / row_factor, cols / factor);
    let mut out = vec![Complex64::default(); r_out * c_out];
    for r in 0..rows {
        let ro = r % r_out;
        for c in 0..cols {
            out[ro * c_out + c % c_out] += spec[r * cols + c];
        }
    }
    let norm = 1.0 / (row_factor * factor) as f64;
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

/// Adjoint of spatial subsampling in the Fourier domain: the spectrum of the
/// zero-filled upsampling of a coarse signal, given the coarse spectrum.
pub fn tile_spectrum(coarse: Shape, spec: &[Complex64], factor: usize) -> Vec<Complex64> {
    if factor == 1 {
        return spec.to_vec();
    }
    let (rows, cols) = coarse.axes();
    let row_factor = if coarse.ndims() == 2 { factor } else { 1 };
    let (r_out, c_out) = (rows * row_factor, cols * factor);
    let mut out = vec![Complex64::default(); r_out * c_out];
    for r in 0..r_out {
        for c in 0..c_out {
            out[r * c_out + c] = spec[(r % rows) * cols + c % cols];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::default(), |acc, (t, v)| {
                    let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    acc + v * Complex64::from_polar(1.0, ang)
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_1d() {
        let x: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let fast = fft_of(Shape::D1(16), &x);
        let slow = naive_dft(&x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_2d() {
        let shape = Shape::D2(8, 4);
        let x: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let back = ifft_of(shape, &fft_of(shape, &x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn folding_equals_spatial_subsampling() {
        let shape = Shape::D2(8, 8);
        let x: Vec<Complex64> = (0..64).map(|i| Complex64::new((i as f64).sin(), (2.0 * i as f64).cos())).collect();
        let spec = fft_of(shape, &x);
        let folded = fold_spectrum(shape, &spec, 2);
        let coarse = ifft_of(Shape::D2(4, 4), &folded);
        for r in 0..4 {
            for c in 0..4 {
                assert!((coarse[r * 4 + c] - x[2 * r * 8 + 2 * c]).norm() < 1e-12);
            }
        }
    }
}
