//! Morlet filter banks in the Fourier domain.
//!
//! A bank holds the low-pass `phi_J`, the band-pass wavelets `psi_{j,k}` for
//! `1 <= j <= J`, and the intermediate low-pass filters `phi_j` used by the
//! multiscale cascade. Band-pass filters are complex and analytic: their
//! centers lie in the upper half-plane (2D) or on positive frequencies (1D), so
//! frame bounds are measured with the symmetrized Littlewood-Paley sum
//!
//! ```text
//! LP(w) = |phi_J(w)|^2 + 1/2 sum_{j,k} (|psi_{j,k}(w)|^2 + |psi_{j,k}(-w)|^2)
//! ```
//!
//! which bounds `||Wx||^2 / ||x||^2` for real-valued `x`. Every bank is scaled
//! so that `max LP = 1`, which makes the wavelet transform nonexpansive.
//!
//! Each wavelet is sampled on the period cell centered on its own center
//! frequency. This keeps the finest scale intact near the Nyquist corners of
//! 2D grids.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::signal::{Shape, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    LowPass,
    BandPass,
}

/// A filter stored by its DFT samples on a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyKernel {
    shape: Shape,
    response: Vec<Complex64>,
    kind: KernelKind,
    scale: u32,
    band: u32,
}

impl FrequencyKernel {
    pub fn new(shape: Shape, response: Vec<Complex64>, kind: KernelKind, scale: u32, band: u32) -> Result<Self> {
        if response.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "kernel shape {shape:?} needs {} samples, got {}",
                shape.len(),
                response.len()
            )));
        }
        Ok(FrequencyKernel { shape, response, kind, scale, band })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn response(&self) -> &[Complex64] {
        &self.response
    }

    #[cfg(test)]
    pub(crate) fn response_mut(&mut self) -> &mut [Complex64] {
        &mut self.response
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn band(&self) -> u32 {
        self.band
    }

    /// Spatial samples `h(u)`.
    pub fn spatial(&self) -> Signal {
        Signal::from_spectrum(self.shape, &self.response, 1.0).expect("kernel grid is valid")
    }

    /// `|sum_u h(u)| / sum_u |h(u)|`; zero for an exactly zero-mean filter.
    pub fn mean_ratio(&self) -> f64 {
        let h = self.spatial();
        let total: f64 = h.samples().iter().map(|z| z.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        h.samples().iter().sum::<Complex64>().norm() / total
    }

    pub fn energy(&self) -> f64 {
        self.response.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The same filter on a coarser grid (spacing `factor` times larger): the
    /// response at the frequencies the coarse grid can represent.
    pub fn restrict(&self, target: Shape) -> Result<FrequencyKernel> {
        if target == self.shape {
            return Ok(self.clone());
        }
        let (rows, cols) = self.shape.axes();
        let (tr, tc) = target.axes();
        if target.ndims() != self.shape.ndims() || rows % tr != 0 || cols % tc != 0 {
            return Err(Error::Dimension(format!(
                "cannot restrict kernel on {:?} to {target:?}",
                self.shape
            )));
        }
        let map = |m: usize, n_target: usize, n_source: usize| -> usize {
            let signed = if m < n_target.div_ceil(2) { m as isize } else { m as isize - n_target as isize };
            signed.rem_euclid(n_source as isize) as usize
        };
        let mut response = Vec::with_capacity(target.len());
        for r in 0..tr {
            let sr = if tr == 1 { 0 } else { map(r, tr, rows) };
            for c in 0..tc {
                response.push(self.response[sr * cols + map(c, tc, cols)]);
            }
        }
        FrequencyKernel::new(target, response, self.kind, self.scale, self.band)
    }
}

impl FrequencyKernel {
    /// The filter on a coarser grid obtained by sampling its spatial kernel
    /// every `factor` points (times `factor^n`, so mass is kept). Sampling a
    /// positive kernel keeps it positive, unlike [`FrequencyKernel::restrict`].
    pub fn alias_to(&self, target: Shape) -> Result<FrequencyKernel> {
        if target == self.shape {
            return Ok(self.clone());
        }
        let factor = self.shape.axes().1 / target.axes().1.max(1);
        if self.shape.subsampled(factor).ok() != Some(target) {
            return Err(Error::Dimension(format!(
                "cannot alias kernel on {:?} to {target:?}",
                self.shape
            )));
        }
        let gain = (self.shape.len() / target.len()) as f64;
        let folded = crate::fft::fold_spectrum(self.shape, &self.response, factor);
        FrequencyKernel::new(target, folded.into_iter().map(|z| z * gain).collect(), self.kind, self.scale, self.band)
    }
}

/// Shape parameters of the 2D Morlet bank, expressed at the finest scale `j = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorletParams2d {
    /// Center frequency of `psi_{1,k}` in radians per sample.
    pub xi: f64,
    /// Radial standard deviation of the frequency envelope, relative to `xi`.
    pub radial: f64,
    /// Tangential standard deviation relative to `xi`, for `K = 4`; scaled by `4 / K`.
    pub angular: f64,
    /// Spatial standard deviation of `phi_J` in units of `2^J`.
    pub low_pass: f64,
    /// Smallest acceptable lower frame bound.
    pub min_frame_lower: f64,
}

impl Default for MorletParams2d {
    fn default() -> Self {
        MorletParams2d { xi: 2.8, radial: 0.7, angular: 0.6, low_pass: 0.35, min_frame_lower: 0.5 }
    }
}

/// Shape parameters of the 1D constant-Q Morlet bank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorletParams1d {
    /// The top band sits `offset` bands below Nyquist: `xi_1 = pi * 2^(-offset / K)`.
    pub offset: f64,
    /// Envelope standard deviation in units of the band spacing `(1 - 2^(-1/K)) xi`.
    pub bandwidth: f64,
    /// Spatial standard deviation of `phi_J` in units of `2^J`.
    pub low_pass: f64,
    pub min_frame_lower: f64,
}

impl Default for MorletParams1d {
    fn default() -> Self {
        MorletParams1d { offset: 0.2, bandwidth: 1.8, low_pass: 0.25, min_frame_lower: 0.5 }
    }
}

/// Analytic mother wavelet `psi_{0,k}`; `psi_{j,k}(w) = c * psi_{0,k}(2^j w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dims", rename_all = "snake_case")]
pub enum Mother {
    Plane { params: MorletParams2d, bands: u32 },
    Line { params: MorletParams1d, bands: u32 },
}

impl Mother {
    fn bands(&self) -> u32 {
        match self {
            Mother::Plane { bands, .. } | Mother::Line { bands, .. } => *bands,
        }
    }

    /// Dilation factor of band `(j, k)` relative to the mother.
    pub fn dilation(&self, j: u32, k: u32) -> f64 {
        match self {
            Mother::Plane { .. } => 2f64.powi(j as i32),
            Mother::Line { bands, .. } => 2f64.powf(j as f64 + k as f64 / *bands as f64),
        }
    }

    /// Center frequency of `psi_{j,k}`.
    pub fn center(&self, j: u32, k: u32) -> Vec<f64> {
        match self {
            Mother::Plane { params, bands } => {
                let theta = PI * k as f64 / *bands as f64;
                let r = 2.0 * params.xi / self.dilation(j, k);
                vec![r * theta.sin(), r * theta.cos()]
            }
            Mother::Line { params, bands } => {
                let xi1 = PI * 2f64.powf(-params.offset / *bands as f64);
                vec![2.0 * xi1 / self.dilation(j, k)]
            }
        }
    }

    /// Unnormalized analytic response of the mother `psi_{0,k}` at frequency `nu`.
    ///
    /// 2D frequencies are `(w_row, w_col)`; orientation `k` points at angle
    /// `pi k / K` from the column axis.
    pub fn evaluate(&self, k: u32, nu: &[f64]) -> f64 {
        match self {
            Mother::Plane { params, bands } => {
                let theta = PI * k as f64 / *bands as f64;
                let (s, c) = theta.sin_cos();
                let along = c * nu[1] + s * nu[0];
                let across = -s * nu[1] + c * nu[0];
                let xi0 = 2.0 * params.xi;
                let a = 2.0 * params.radial * params.xi;
                let b = 2.0 * params.angular * params.xi * 4.0 / *bands as f64;
                let envelope = |r: f64, t: f64| (-(r * r) / (2.0 * a * a) - (t * t) / (2.0 * b * b)).exp();
                envelope(along - xi0, across) - envelope(xi0, 0.0) * envelope(along, across)
            }
            Mother::Line { params, bands } => {
                let kk = *bands as f64;
                let xi0 = 2.0 * PI * 2f64.powf(-params.offset / kk);
                let a = params.bandwidth * (1.0 - 2f64.powf(-1.0 / kk)) * xi0;
                let g = |w: f64| (-(w * w) / (2.0 * a * a)).exp();
                g(nu[0] - xi0) - g(xi0) * g(nu[0])
            }
        }
    }

    fn low_pass_width(&self) -> f64 {
        match self {
            Mother::Plane { params, .. } => params.low_pass,
            Mother::Line { params, .. } => params.low_pass,
        }
    }

    fn min_frame_lower(&self) -> f64 {
        match self {
            Mother::Plane { params, .. } => params.min_frame_lower,
            Mother::Line { params, .. } => params.min_frame_lower,
        }
    }
}

/// Representative of `omega` modulo `2 pi` closest to `center`, per axis.
fn nearest_representative(omega: &[f64], center: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .zip(center)
        .map(|(&w, &c)| {
            [w - 2.0 * PI, w, w + 2.0 * PI]
                .into_iter()
                .min_by(|a, b| (a - c).abs().total_cmp(&(b - c).abs()))
                .unwrap()
        })
        .collect()
}

/// Periodized Gaussian low-pass `phi_j` with spatial width `width * 2^j`,
/// normalized to unit mass. `phi_0` is the Dirac.
fn gaussian_low_pass(shape: Shape, width: f64, j: u32) -> FrequencyKernel {
    if j == 0 {
        return FrequencyKernel::new(shape, vec![Complex64::new(1.0, 0.0); shape.len()], KernelKind::LowPass, 0, 0)
            .expect("shape matches");
    }
    let sigma = width * 2f64.powi(j as i32);
    let periodized = |w: f64| -> f64 {
        (-4..=4).map(|n| {
            let v = sigma * (w + 2.0 * PI * n as f64);
            (-0.5 * v * v).exp()
        })
        .sum()
    };
    let dc = periodized(0.0);
    let response = shape
        .frequencies()
        .iter()
        .map(|w| Complex64::new(w.iter().map(|&wa| periodized(wa) / dc).product(), 0.0))
        .collect();
    FrequencyKernel::new(shape, response, KernelKind::LowPass, j, 0).expect("shape matches")
}

/// Low-pass plus band-pass filters with measured frame bounds.
#[derive(Clone, Debug)]
pub struct FilterBank {
    shape: Shape,
    scales: u32,
    bands: u32,
    mother: Mother,
    normalization: f64,
    /// `phi_0 .. phi_J`.
    low: Vec<FrequencyKernel>,
    /// `psi_{j,k}` ordered by `j` then `k`.
    psi: Vec<FrequencyKernel>,
    frame_lower: f64,
    frame_upper: f64,
    worst_frequency: Vec<f64>,
}

impl FilterBank {
    fn build(shape: Shape, scales: u32, mother: Mother) -> Result<FilterBank> {
        let bands = mother.bands();
        if scales < 1 || bands < 1 {
            return Err(Error::Scale(format!("need J >= 1 and K >= 1, got J={scales}, K={bands}")));
        }
        Signal::new(shape, vec![Complex64::default(); shape.len()])?;
        if scales >= usize::BITS || (1usize << scales) > shape.min_axis() {
            return Err(Error::Scale(format!(
                "2^J = 2^{scales} exceeds the smallest axis of {shape:?}"
            )));
        }
        let low: Vec<FrequencyKernel> =
            (0..=scales).map(|j| gaussian_low_pass(shape, mother.low_pass_width(), j)).collect();
        let freqs = shape.frequencies();
        let mut psi = Vec::with_capacity((scales * bands) as usize);
        for j in 1..=scales {
            for k in 0..bands {
                let center = mother.center(j, k);
                let dil = mother.dilation(j, k);
                let response = freqs
                    .iter()
                    .map(|w| {
                        let rep = nearest_representative(w, &center);
                        let nu: Vec<f64> = rep.iter().map(|v| v * dil).collect();
                        Complex64::new(mother.evaluate(k, &nu), 0.0)
                    })
                    .collect();
                psi.push(FrequencyKernel::new(shape, response, KernelKind::BandPass, j, k)?);
            }
        }

        // Scale the wavelets so that max LP = 1 exactly.
        let phi_sq: Vec<f64> = low[scales as usize].response.iter().map(|z| z.norm_sqr()).collect();
        let band_sum = symmetrized_band_energy(shape, &psi);
        let normalization = band_sum
            .iter()
            .zip(&phi_sq)
            .filter(|(s, _)| **s > 1e-300)
            .map(|(s, p)| (1.0 - p) / s)
            .fold(f64::INFINITY, f64::min);
        let normalization = if normalization.is_finite() { normalization } else { 1.0 };
        let amp = normalization.sqrt();
        for f in psi.iter_mut() {
            for z in f.response.iter_mut() {
                *z *= amp;
            }
        }

        let mut bank = FilterBank {
            shape,
            scales,
            bands,
            mother,
            normalization: amp,
            low,
            psi,
            frame_lower: 0.0,
            frame_upper: 0.0,
            worst_frequency: vec![],
        };
        let lp = bank.littlewood_paley();
        let (imin, lower) = lp
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        bank.frame_lower = lower;
        bank.frame_upper = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        bank.worst_frequency = freqs[imin].clone();
        if lower < mother.min_frame_lower() {
            return Err(Error::Frame {
                lower,
                minimum: mother.min_frame_lower(),
                frequency: bank.worst_frequency.clone(),
            });
        }
        Ok(bank)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Maximum scale exponent `J`.
    pub fn scales(&self) -> u32 {
        self.scales
    }

    /// Orientations (2D) or bands per octave (1D).
    pub fn bands(&self) -> u32 {
        self.bands
    }

    pub fn mother(&self) -> &Mother {
        &self.mother
    }

    /// Amplitude factor `c` applied to every wavelet.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn phi(&self) -> &FrequencyKernel {
        &self.low[self.scales as usize]
    }

    /// Intermediate low-pass `phi_j`, `0 <= j <= J`.
    pub fn low_pass(&self, j: u32) -> &FrequencyKernel {
        &self.low[j as usize]
    }

    pub fn psi(&self, j: u32, k: u32) -> &FrequencyKernel {
        assert!((1..=self.scales).contains(&j) && k < self.bands, "band ({j},{k}) out of range");
        &self.psi[((j - 1) * self.bands + k) as usize]
    }

    pub fn wavelets(&self) -> &[FrequencyKernel] {
        &self.psi
    }

    /// `(j, k)` for every band-pass filter in storage order.
    pub fn band_indices(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (1..=self.scales).flat_map(move |j| (0..self.bands).map(move |k| (j, k)))
    }

    pub fn frame_lower(&self) -> f64 {
        self.frame_lower
    }

    pub fn frame_upper(&self) -> f64 {
        self.frame_upper
    }

    /// Frequency at which the lower frame bound is attained.
    pub fn worst_frequency(&self) -> &[f64] {
        &self.worst_frequency
    }

    /// Symmetrized Littlewood-Paley sum on every grid frequency.
    pub fn littlewood_paley(&self) -> Vec<f64> {
        let band = symmetrized_band_energy(self.shape, &self.psi);
        self.phi().response.iter().zip(band).map(|(p, b)| p.norm_sqr() + b).collect()
    }

    /// `|phi_J|^2 + sum |psi|^2` without symmetrization; the frame function
    /// for complex-valued inputs.
    pub fn littlewood_paley_one_sided(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.phi().response.iter().map(|z| z.norm_sqr()).collect();
        for f in &self.psi {
            for (o, z) in out.iter_mut().zip(&f.response) {
                *o += z.norm_sqr();
            }
        }
        out
    }

    /// Largest deviation between stored wavelets and the dilation rule
    /// `psi_{j,k}(w) = c * psi_{0,k}(2^j w)`, over grid points whose canonical
    /// frequency lies in the wavelet's period cell.
    pub fn dilation_error(&self) -> f64 {
        let freqs = self.shape.frequencies();
        let mut worst = 0.0f64;
        for f in &self.psi {
            let (j, k) = (f.scale, f.band);
            let center = self.mother.center(j, k);
            let dil = self.mother.dilation(j, k);
            for (w, z) in freqs.iter().zip(&f.response) {
                if nearest_representative(w, &center) != *w {
                    continue;
                }
                let nu: Vec<f64> = w.iter().map(|v| v * dil).collect();
                let expected = self.normalization * self.mother.evaluate(k, &nu);
                worst = worst.max((z.re - expected).abs() + z.im.abs());
            }
        }
        worst
    }

    /// Write the bank as SIG1 frequency responses plus `manifest.json`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut filters = Vec::new();
        for (j, f) in self.low.iter().enumerate() {
            let file = format!("low_j{j}.sig");
            io::write_sig1(&dir.join(&file), &self.kernel_signal(f))?;
            filters.push(FilterEntry { file, kind: KernelKind::LowPass, scale: j as u32, band: 0 });
        }
        for f in &self.psi {
            let file = format!("psi_j{}_k{}.sig", f.scale, f.band);
            io::write_sig1(&dir.join(&file), &self.kernel_signal(f))?;
            filters.push(FilterEntry { file, kind: KernelKind::BandPass, scale: f.scale, band: f.band });
        }
        let manifest = BankManifest {
            format: "scatterkit-bank-v1".into(),
            shape: self.shape.dims(),
            scales: self.scales,
            bands: self.bands,
            mother: self.mother,
            normalization: self.normalization,
            frame_lower: self.frame_lower,
            frame_upper: self.frame_upper,
            worst_frequency: self.worst_frequency.clone(),
            filters,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Read a bank written by [`FilterBank::export`].
    pub fn import(dir: &Path) -> Result<FilterBank> {
        let manifest: BankManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let shape = Shape::from_dims(&manifest.shape)?;
        let mut low = vec![None; manifest.scales as usize + 1];
        let mut psi = BTreeMap::new();
        for entry in &manifest.filters {
            let sig = io::read_sig1(&dir.join(&entry.file))?;
            if sig.shape() != shape {
                return Err(Error::Format(format!("{} has shape {:?}, expected {shape:?}", entry.file, sig.shape())));
            }
            let kernel = FrequencyKernel::new(shape, sig.into_samples(), entry.kind, entry.scale, entry.band)?;
            match entry.kind {
                KernelKind::LowPass => {
                    let slot = low
                        .get_mut(entry.scale as usize)
                        .ok_or_else(|| Error::Format(format!("low-pass scale {} out of range", entry.scale)))?;
                    *slot = Some(kernel);
                }
                KernelKind::BandPass => {
                    psi.insert((entry.scale, entry.band), kernel);
                }
            }
        }
        let low = low
            .into_iter()
            .enumerate()
            .map(|(j, f)| f.ok_or_else(|| Error::Format(format!("missing low-pass filter j={j}"))))
            .collect::<Result<Vec<_>>>()?;
        if psi.len() != (manifest.scales * manifest.bands) as usize {
            return Err(Error::Format(format!("expected {} wavelets, found {}", manifest.scales * manifest.bands, psi.len())));
        }
        Ok(FilterBank {
            shape,
            scales: manifest.scales,
            bands: manifest.bands,
            mother: manifest.mother,
            normalization: manifest.normalization,
            low,
            psi: psi.into_values().collect(),
            frame_lower: manifest.frame_lower,
            frame_upper: manifest.frame_upper,
            worst_frequency: manifest.worst_frequency,
        })
    }

    fn kernel_signal(&self, f: &FrequencyKernel) -> Signal {
        Signal::from_grid(self.shape, f.response.clone(), 1.0).expect("bank grid is valid")
    }
}

fn symmetrized_band_energy(shape: Shape, psi: &[FrequencyKernel]) -> Vec<f64> {
    let mut one_sided = vec![0.0; shape.len()];
    for f in psi {
        for (o, z) in one_sided.iter_mut().zip(&f.response) {
            *o += z.norm_sqr();
        }
    }
    (0..shape.len())
        .map(|i| 0.5 * (one_sided[i] + one_sided[shape.negated_index(i)]))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct FilterEntry {
    file: String,
    kind: KernelKind,
    scale: u32,
    band: u32,
}

#[derive(Serialize, Deserialize)]
struct BankManifest {
    format: String,
    shape: Vec<usize>,
    scales: u32,
    bands: u32,
    mother: Mother,
    normalization: f64,
    frame_lower: f64,
    frame_upper: f64,
    worst_frequency: Vec<f64>,
    filters: Vec<FilterEntry>,
}

/// 2D Morlet bank: `bands` orientations at angles `pi k / K`, scales `1..=J`.
pub fn build_morlet_2d(shape: Shape, scales: u32, bands: u32, params: MorletParams2d) -> Result<FilterBank> {
    if shape.ndims() != 2 {
        return Err(Error::Dimension(format!("2D bank needs a 2D shape, got {shape:?}")));
    }
    FilterBank::build(shape, scales, Mother::Plane { params, bands })
}

/// 1D constant-Q Morlet bank with `bands` log-spaced bands per octave
/// (`K = 12` gives half-tone resolution).
pub fn build_bank_1d(shape: Shape, scales: u32, bands: u32, params: MorletParams1d) -> Result<FilterBank> {
    if shape.ndims() != 1 {
        return Err(Error::Dimension(format!("1D bank needs a 1D shape, got {shape:?}")));
    }
    FilterBank::build(shape, scales, Mother::Line { params, bands })
}

/// Morlet bank with default parameters for a 1D or 2D grid.
pub fn build_default(shape: Shape, scales: u32, bands: u32) -> Result<FilterBank> {
    match shape {
        Shape::D1(_) => build_bank_1d(shape, scales, bands, MorletParams1d::default()),
        Shape::D2(..) => build_morlet_2d(shape, scales, bands, MorletParams2d::default()),
    }
}

/// Default band count per octave for 1D banks.
pub const DEFAULT_BANDS_1D: u32 = 12;

/// Relative threshold below which `phi_{j-1}` is treated as zero when
/// deconvolving.
pub const CASCADE_THRESHOLD: f64 = 1e-3;

/// Per-scale filters of the multiscale cascade:
/// `phi_j = w_{j,0} * phi_{j-1}` and `psi_{j,k} = w_{j,k} * phi_{j-1}`.
#[derive(Clone, Debug)]
pub struct CascadeFilters {
    /// `w_{j,0}` for `j = 1..=J`.
    pub low: Vec<FrequencyKernel>,
    /// `w_{j,k}` keyed by `(j, k)`.
    pub band: BTreeMap<(u32, u32), FrequencyKernel>,
}

impl CascadeFilters {
    pub fn low(&self, j: u32) -> &FrequencyKernel {
        &self.low[(j - 1) as usize]
    }

    pub fn band(&self, j: u32, k: u32) -> &FrequencyKernel {
        &self.band[&(j, k)]
    }
}

fn deconvolve(target: &FrequencyKernel, previous: &FrequencyKernel) -> Result<FrequencyKernel> {
    let max_prev = previous.response.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eta = CASCADE_THRESHOLD * max_prev;
    let mut uncovered = 0.0;
    let response = target
        .response
        .iter()
        .zip(&previous.response)
        .map(|(t, p)| {
            if p.norm() > eta {
                t / p
            } else {
                uncovered += t.norm_sqr();
                Complex64::default()
            }
        })
        .collect();
    let total = target.energy();
    let fraction = if total > 0.0 { uncovered / total } else { 0.0 };
    if fraction > 0.01 {
        return Err(Error::CascadeAccuracy { scale: target.scale, band: target.band, uncovered: fraction });
    }
    FrequencyKernel::new(target.shape, response, target.kind, target.scale, target.band)
}

/// Deconvolve the bank into its per-scale cascade filters.
pub fn cascade_filters(bank: &FilterBank) -> Result<CascadeFilters> {
    let mut low = Vec::with_capacity(bank.scales as usize);
    let mut band = BTreeMap::new();
    for j in 1..=bank.scales {
        let prev = bank.low_pass(j - 1);
        low.push(deconvolve(bank.low_pass(j), prev)?);
        for k in 0..bank.bands {
            band.insert((j, k), deconvolve(bank.psi(j, k), prev)?);
        }
    }
    Ok(CascadeFilters { low, band })
}
