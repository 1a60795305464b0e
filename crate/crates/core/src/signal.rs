//! Periodic one- and two-dimensional complex signal grids.
//!
//! Every grid is periodic: convolution is circular and exact, shifts wrap
//! around. Axis lengths are powers of two so the dyadic cascade stays closed
//! under subsampling.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::filterbank::FrequencyKernel;

/// Grid shape. Two-dimensional grids are stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    D1(usize),
    D2(usize, usize),
}

impl Shape {
    pub fn from_dims(dims: &[usize]) -> Result<Shape> {
        match dims {
            [n] => Ok(Shape::D1(*n)),
            [r, c] => Ok(Shape::D2(*r, *c)),
            _ => Err(Error::Dimension(format!(
                "only 1 or 2 dimensions are supported, got {}",
                dims.len()
            ))),
        }
    }

    pub fn ndims(&self) -> usize {
        match self {
            Shape::D1(_) => 1,
            Shape::D2(..) => 2,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::D1(n) => vec![n],
            Shape::D2(r, c) => vec![r, c],
        }
    }

    /// `(rows, cols)`, with a single row for 1D grids.
    pub fn axes(&self) -> (usize, usize) {
        match *self {
            Shape::D1(n) => (1, n),
            Shape::D2(r, c) => (r, c),
        }
    }

    pub fn len(&self) -> usize {
        let (r, c) = self.axes();
        r * c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_axis(&self) -> usize {
        self.dims().into_iter().min().unwrap_or(0)
    }

    /// Shape after keeping one sample out of `factor` along every axis.
    pub fn subsampled(&self, factor: usize) -> Result<Shape> {
        if factor == 0 || self.dims().iter().any(|&d| d % factor != 0) {
            return Err(Error::Dimension(format!(
                "subsampling factor {factor} does not divide shape {self:?}"
            )));
        }
        Ok(match *self {
            Shape::D1(n) => Shape::D1(n / factor),
            Shape::D2(r, c) => Shape::D2(r / factor, c / factor),
        })
    }

    /// Angular frequency of every grid point, in radians per sample, with the
    /// usual `[-pi, pi)` wrap. 1D grids report a single component.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let (rows, cols) = self.axes();
        let fr: Vec<f64> = (0..rows).map(|m| signed_frequency(m, rows)).collect();
        let fc: Vec<f64> = (0..cols).map(|m| signed_frequency(m, cols)).collect();
        let mut out = Vec::with_capacity(self.len());
        for r in 0..rows {
            for c in 0..cols {
                match self {
                    Shape::D1(_) => out.push(vec![fc[c]]),
                    Shape::D2(..) => out.push(vec![fr[r], fc[c]]),
                }
            }
        }
        out
    }

    /// Flat index of the grid point holding frequency `-omega` for the point
    /// at flat index `idx`.
    pub fn negated_index(&self, idx: usize) -> usize {
        let (rows, cols) = self.axes();
        let (r, c) = (idx / cols, idx % cols);
        ((rows - r) % rows) * cols + (cols - c) % cols
    }

    fn check_power_of_two(&self, min: usize) -> Result<()> {
        for d in self.dims() {
            if !d.is_power_of_two() || d < min {
                return Err(Error::Dimension(format!(
                    "axis length {d} must be a power of two >= {min}"
                )));
            }
        }
        Ok(())
    }
}

/// Angular frequency of DFT bin `m` on an axis of length `n`.
pub fn signed_frequency(m: usize, n: usize) -> f64 {
    let s = if m < n.div_ceil(2) || n == 1 { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * s / n as f64
}

/// An n-dimensional periodic grid of complex samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    shape: Shape,
    samples: Vec<Complex64>,
    spacing: f64,
}

impl Signal {
    /// User-facing constructor: every axis must be a power of two >= 4.
    pub fn new(shape: Shape, samples: Vec<Complex64>) -> Result<Signal> {
        shape.check_power_of_two(4)?;
        Self::from_grid(shape, samples, 1.0)
    }

    /// Constructor for derived grids (coefficients, subsampled layers), which
    /// may be as small as a single sample per axis.
    pub fn from_grid(shape: Shape, samples: Vec<Complex64>, spacing: f64) -> Result<Signal> {
        shape.check_power_of_two(1)?;
        if samples.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {} samples, got {}",
                shape.len(),
                samples.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample spacing {spacing} must be positive")));
        }
        Ok(Signal { shape, samples, spacing })
    }

    pub fn from_real(shape: Shape, values: &[f64]) -> Result<Signal> {
        Self::new(shape, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(shape: Shape) -> Signal {
        Signal { shape, samples: vec![Complex64::default(); shape.len()], spacing: 1.0 }
    }

    pub fn constant(shape: Shape, value: Complex64) -> Signal {
        Signal { shape, samples: vec![value; shape.len()], spacing: 1.0 }
    }

    /// Unit impulse at the origin.
    pub fn dirac(shape: Shape) -> Signal {
        let mut s = Self::zeros(shape);
        s.samples[0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn with_spacing(mut self, spacing: f64) -> Signal {
        self.spacing = spacing;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn ndims(&self) -> usize {
        self.shape.ndims()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Area (or length) of one grid cell, `spacing^ndims`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.ndims() as i32)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// `||x||^2 = sum |x(u)|^2 * spacing^ndims`, summed in index order.
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Sum of samples weighted by the cell volume (the integral of `x`).
    pub fn integral(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.cell_volume()
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.shape.len() as f64
    }

    /// Unnormalized DFT of the samples.
    pub fn fft(&self) -> Vec<Complex64> {
        fft::fft_of(self.shape, &self.samples)
    }

    /// Build a signal from a spectrum (inverse DFT).
    pub fn from_spectrum(shape: Shape, spectrum: &[Complex64], spacing: f64) -> Result<Signal> {
        Self::from_grid(shape, fft::ifft_of(shape, spectrum), spacing)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Signal {
        Signal {
            shape: self.shape,
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            spacing: self.spacing,
        }
    }

    pub fn scaled(&self, c: f64) -> Signal {
        self.map(|z| z * c)
    }

    fn check_same_grid(&self, other: &Signal) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.check_same_grid(other)?;
        Ok(Signal {
            shape: self.shape,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            spacing: self.spacing,
        })
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.check_same_grid(other)?;
        Ok(Signal {
            shape: self.shape,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
            spacing: self.spacing,
        })
    }

    /// `||self - other||` with this signal's cell volume.
    pub fn distance(&self, other: &Signal) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Sample at `(row, col)` (use row 0 for 1D).
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        let (_, cols) = self.shape.axes();
        self.samples[row * cols + col]
    }
}

/// Circular convolution `x * h` evaluated as `ifft(fft(x) . h_hat)`.
pub fn convolve(x: &Signal, h: &FrequencyKernel) -> Result<Signal> {
    if x.shape() != h.shape() {
        return Err(Error::Dimension(format!(
            "signal shape {:?} does not match kernel shape {:?}",
            x.shape(),
            h.shape()
        )));
    }
    let mut spec = x.fft();
    for (s, k) in spec.iter_mut().zip(h.response()) {
        *s *= k;
    }
    fft::ifft(x.shape, &mut spec);
    Ok(Signal { shape: x.shape, samples: spec, spacing: x.spacing })
}

/// Keep one sample out of `factor` along every axis; spacing grows by `factor`.
pub fn subsample(x: &Signal, factor: usize) -> Result<Signal> {
    let out_shape = x.shape.subsampled(factor)?;
    if factor == 1 {
        return Ok(x.clone());
    }
    let (rows, cols) = x.shape.axes();
    let (out_rows, out_cols) = out_shape.axes();
    let row_step = if rows == out_rows { 1 } else { factor };
    let mut samples = Vec::with_capacity(out_shape.len());
    for r in 0..out_rows {
        for c in 0..out_cols {
            samples.push(x.samples[r * row_step * cols + c * factor]);
        }
    }
    Ok(Signal { shape: out_shape, samples, spacing: x.spacing * factor as f64 })
}

/// Circular shift `y(u) = x(u - tau)`. `tau` has one entry per axis.
pub fn shift(x: &Signal, tau: &[isize]) -> Result<Signal> {
    if tau.len() != x.ndims() {
        return Err(Error::Dimension(format!(
            "shift needs {} offsets, got {}",
            x.ndims(),
            tau.len()
        )));
    }
    let (rows, cols) = x.shape.axes();
    let (tr, tc) = match *tau {
        [t] => (0, t),
        [a, b] => (a, b),
        _ => unreachable!(),
    };
    let tr = tr.rem_euclid(rows as isize) as usize;
    let tc = tc.rem_euclid(cols as isize) as usize;
    let mut samples = vec![Complex64::default(); x.samples.len()];
    for r in 0..rows {
        let dr = (r + tr) % rows;
        for c in 0..cols {
            samples[dr * cols + (c + tc) % cols] = x.samples[r * cols + c];
        }
    }
    Ok(Signal { shape: x.shape, samples, spacing: x.spacing })
}

/// Periodic (bi)linear interpolation onto a grid `factor` times finer; the
/// spacing shrinks by `factor`.
pub fn upsample_linear(x: &Signal, factor: usize) -> Result<Signal> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::Dimension(format!("upsampling factor {factor} must be a power of two")));
    }
    let (rows, cols) = x.shape.axes();
    let out_shape = match x.shape {
        Shape::D1(n) => Shape::D1(n * factor),
        Shape::D2(r, c) => Shape::D2(r * factor, c * factor),
    };
    let (out_rows, out_cols) = out_shape.axes();
    let f = factor as f64;
    let mut samples = Vec::with_capacity(out_shape.len());
    for r in 0..out_rows {
        let (r0, wr) = if rows == out_rows { (r, 0.0) } else { (r / factor, (r % factor) as f64 / f) };
        let r1 = (r0 + 1) % rows;
        for c in 0..out_cols {
            let c0 = c / factor;
            let wc = (c % factor) as f64 / f;
            let c1 = (c0 + 1) % cols;
            let top = x.samples[r0 * cols + c0] * (1.0 - wc) + x.samples[r0 * cols + c1] * wc;
            let bottom = x.samples[r1 * cols + c0] * (1.0 - wc) + x.samples[r1 * cols + c1] * wc;
            samples.push(top * (1.0 - wr) + bottom * wr);
        }
    }
    Ok(Signal { shape: out_shape, samples, spacing: x.spacing / f })
}

/// Circular cross-correlation maximiser: the shift `tau` such that
/// `shift(x, tau)` best matches `reference`, computed with one FFT product.
pub fn best_alignment(x: &Signal, reference: &Signal) -> Result<Vec<isize>> {
    x.check_same_grid(reference)?;
    let fx = x.fft();
    let fr = reference.fft();
    let mut prod: Vec<Complex64> = fr.iter().zip(&fx).map(|(a, b)| a * b.conj()).collect();
    fft::ifft(x.shape, &mut prod);
    let (best, _) = prod
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v.re > bv { (i, v.re) } else { (bi, bv) });
    let (_, cols) = x.shape.axes();
    Ok(match x.shape {
        Shape::D1(_) => vec![best as isize],
        Shape::D2(..) => vec![(best / cols) as isize, (best % cols) as isize],
    })
}
