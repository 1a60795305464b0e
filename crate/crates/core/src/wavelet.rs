//! The wavelet transform `Wx = {x * phi_J, x * psi_{j,k}}` and its dual-frame
//! inverse.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::filterbank::{CascadeFilters, FilterBank, FrequencyKernel};
use crate::io;
use crate::signal::{Shape, Signal};

/// Number of dyadic levels kept above the critical sampling rate.
///
/// A layer at scale `2^j` is subsampled with stride `2^max(0, j - o)`;
/// [`Oversampling::FULL`] disables subsampling altogether.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Option<u32>", into = "Option<u32>")]
pub struct Oversampling(Option<u32>);

impl Oversampling {
    pub const FULL: Oversampling = Oversampling(None);

    pub fn levels(o: u32) -> Oversampling {
        Oversampling(Some(o))
    }

    pub fn is_full(&self) -> bool {
        self.0.is_none()
    }

    /// Subsampling stride for a layer at scale `2^j`.
    pub fn stride(&self, j: u32) -> usize {
        match self.0 {
            None => 1,
            Some(o) => 1usize << j.saturating_sub(o),
        }
    }
}

impl Default for Oversampling {
    fn default() -> Self {
        Oversampling(Some(1))
    }
}

impl From<Option<u32>> for Oversampling {
    fn from(v: Option<u32>) -> Self {
        Oversampling(v)
    }
}

impl From<Oversampling> for Option<u32> {
    fn from(v: Oversampling) -> Self {
        v.0
    }
}

impl fmt::Display for Oversampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(f, "full"),
            Some(o) => write!(f, "{o}"),
        }
    }
}

impl FromStr for Oversampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Oversampling::FULL);
        }
        s.parse::<u32>()
            .map(Oversampling::levels)
            .map_err(|_| Error::InvalidArgument(format!("oversampling must be an integer or \"full\", got {s:?}")))
    }
}

/// Filter `spectrum` (on `shape`) by `kernel`, subsample by `stride` and return
/// the spatial layer with its spacing scaled accordingly.
pub(crate) fn filter_and_subsample(
    shape: Shape,
    spectrum: &[Complex64],
    kernel: &FrequencyKernel,
    stride: usize,
    spacing: f64,
) -> Result<Signal> {
    let filtered: Vec<Complex64> = spectrum.iter().zip(kernel.response()).map(|(a, b)| a * b).collect();
    let coarse = shape.subsampled(stride)?;
    let folded = fft::fold_spectrum(shape, &filtered, stride);
    Signal::from_spectrum(coarse, &folded, spacing * stride as f64)
}

/// Output of [`forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCoefficients {
    /// Grid of the analysed signal.
    pub shape: Shape,
    pub oversampling: Oversampling,
    /// `x * phi_J`, subsampled.
    pub low: Signal,
    /// `x * psi_{j,k}`, subsampled, keyed by `(j, k)`.
    pub bands: BTreeMap<(u32, u32), Signal>,
    /// Whether the analysed signal was real; selects the inverse formula.
    pub real_input: bool,
}

impl WaveletCoefficients {
    /// `||low||^2 + sum ||band||^2` with stride-weighted norms.
    pub fn norm_sqr(&self) -> f64 {
        self.low.norm_sqr() + self.bands.values().map(Signal::norm_sqr).sum::<f64>()
    }

    /// Squared distance to another coefficient set of identical layout.
    pub fn distance_sqr(&self, other: &WaveletCoefficients) -> Result<f64> {
        if self.bands.len() != other.bands.len() {
            return Err(Error::Dimension("coefficient sets have different band layouts".into()));
        }
        let mut total = self.low.sub(&other.low)?.norm_sqr();
        for ((key, a), (other_key, b)) in self.bands.iter().zip(&other.bands) {
            if key != other_key {
                return Err(Error::Dimension("coefficient sets have different band layouts".into()));
            }
            total += a.sub(b)?.norm_sqr();
        }
        Ok(total)
    }

    /// A copy with every band set to zero, leaving only the low-pass blur.
    pub fn low_only(&self) -> WaveletCoefficients {
        let mut out = self.clone();
        for b in out.bands.values_mut() {
            *b = Signal::zeros(b.shape()).with_spacing(b.spacing());
        }
        out
    }

    /// Write `low.sig`, `band_j{j}_k{k}.sig` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        io::write_sig1(&dir.join("low.sig"), &self.low)?;
        let mut bands = Vec::new();
        for (&(j, k), b) in &self.bands {
            let file = format!("band_j{j}_k{k}.sig");
            io::write_sig1(&dir.join(&file), b)?;
            bands.push(BandEntry { file, scale: j, band: k, spacing: b.spacing() });
        }
        let manifest = CoefficientManifest {
            format: "scatterkit-wavelet-v1".into(),
            shape: self.shape.dims(),
            oversampling: self.oversampling,
            real_input: self.real_input,
            low_spacing: self.low.spacing(),
            bands,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<WaveletCoefficients> {
        let manifest: CoefficientManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let low = io::read_sig1(&dir.join("low.sig"))?.with_spacing(manifest.low_spacing);
        let mut bands = BTreeMap::new();
        for entry in manifest.bands {
            let b = io::read_sig1(&dir.join(&entry.file))?.with_spacing(entry.spacing);
            bands.insert((entry.scale, entry.band), b);
        }
        Ok(WaveletCoefficients {
            shape: Shape::from_dims(&manifest.shape)?,
            oversampling: manifest.oversampling,
            low,
            bands,
            real_input: manifest.real_input,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BandEntry {
    file: String,
    scale: u32,
    band: u32,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct CoefficientManifest {
    format: String,
    shape: Vec<usize>,
    oversampling: Oversampling,
    real_input: bool,
    low_spacing: f64,
    bands: Vec<BandEntry>,
}

fn check_shape(x: &Signal, bank: &FilterBank) -> Result<()> {
    if x.shape() != bank.shape() {
        return Err(Error::Dimension(format!(
            "signal shape {:?} does not match bank shape {:?}",
            x.shape(),
            bank.shape()
        )));
    }
    Ok(())
}

/// Wavelet transform with layer strides set by `oversampling`.
pub fn forward(x: &Signal, bank: &FilterBank, oversampling: Oversampling) -> Result<WaveletCoefficients> {
    check_shape(x, bank)?;
    let shape = x.shape();
    let spec = x.fft();
    let low = filter_and_subsample(shape, &spec, bank.phi(), oversampling.stride(bank.scales()), x.spacing())?;
    let keys: Vec<(u32, u32)> = bank.band_indices().collect();
    let layers = keys
        .par_iter()
        .map(|&(j, k)| filter_and_subsample(shape, &spec, bank.psi(j, k), oversampling.stride(j), x.spacing()))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveletCoefficients {
        shape,
        oversampling,
        low,
        bands: keys.into_iter().zip(layers).collect(),
        real_input: x.is_real(),
    })
}

/// Local averaging `x * phi_J`, subsampled at the final stride.
pub fn average(x: &Signal, bank: &FilterBank, oversampling: Oversampling) -> Result<Signal> {
    check_shape(x, bank)?;
    filter_and_subsample(x.shape(), &x.fft(), bank.phi(), oversampling.stride(bank.scales()), x.spacing())
}

/// Full-grid spectrum of a subsampled layer, by zero-padding its spectrum.
fn upsampled_spectrum(layer: &Signal, fine: Shape) -> Result<Vec<Complex64>> {
    let coarse = layer.shape();
    let spec = layer.fft();
    if coarse == fine {
        return Ok(spec);
    }
    let (rows, cols) = fine.axes();
    let (cr, cc) = coarse.axes();
    if rows % cr != 0 || cols % cc != 0 {
        return Err(Error::Dimension(format!("layer {coarse:?} does not tile {fine:?}")));
    }
    let gain = (fine.len() / coarse.len()) as f64;
    let place = |m: usize, n_coarse: usize, n_fine: usize| -> usize {
        if m < n_coarse.div_ceil(2) { m } else { n_fine - (n_coarse - m) }
    };
    let mut out = vec![Complex64::default(); fine.len()];
    for r in 0..cr {
        let fr = if cr == rows { r } else { place(r, cr, rows) };
        for c in 0..cc {
            out[fr * cols + place(c, cc, cols)] = spec[r * cc + c] * gain;
        }
    }
    Ok(out)
}

/// Dual-frame inverse by division with the Littlewood-Paley sum.
///
/// Real inputs use the symmetrized sum, complex inputs the one-sided sum; a
/// frequency where that sum falls below the bank's frame gate is a frame error.
/// Subsampled layers are first interpolated by spectral zero-padding, which is
/// exact only when they are free of aliasing.
pub fn inverse(c: &WaveletCoefficients, bank: &FilterBank) -> Result<Signal> {
    if c.shape != bank.shape() {
        return Err(Error::Dimension(format!(
            "coefficients on {:?} do not match bank on {:?}",
            c.shape,
            bank.shape()
        )));
    }
    let gate = match bank.mother() {
        crate::filterbank::Mother::Plane { params, .. } => params.min_frame_lower,
        crate::filterbank::Mother::Line { params, .. } => params.min_frame_lower,
    };
    let shape = c.shape;
    let freqs = shape.frequencies();
    let mut y: Vec<Complex64> = upsampled_spectrum(&c.low, shape)?
        .iter()
        .zip(bank.phi().response())
        .map(|(a, h)| a * h.conj())
        .collect();
    let contributions = c
        .bands
        .par_iter()
        .map(|(&(j, k), layer)| {
            let spec = upsampled_spectrum(layer, shape)?;
            Ok(spec.iter().zip(bank.psi(j, k).response()).map(|(a, h)| a * h.conj()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    for contribution in contributions {
        for (acc, v) in y.iter_mut().zip(contribution) {
            *acc += v;
        }
    }
    let spectrum: Vec<Complex64> = if c.real_input {
        let lp = bank.littlewood_paley();
        let (imin, &lower) = lp.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if lower < gate {
            return Err(Error::Frame { lower, minimum: gate, frequency: freqs[imin].clone() });
        }
        (0..shape.len())
            .map(|i| (y[i] + y[shape.negated_index(i)].conj()) / (2.0 * lp[i]))
            .collect()
    } else {
        let lp = bank.littlewood_paley_one_sided();
        let (imin, &lower) = lp.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if lower < gate {
            return Err(Error::Frame { lower, minimum: gate, frequency: freqs[imin].clone() });
        }
        y.iter().zip(&lp).map(|(a, l)| a / l).collect()
    };
    let mut x = Signal::from_spectrum(shape, &spectrum, c.low.spacing() / c.oversampling.stride(bank.scales()) as f64)?;
    if c.real_input {
        x = x.map(|z| Complex64::new(z.re, 0.0));
    }
    Ok(x)
}

/// Multiscale cascade: `x_j(., 0) = x_{j-1}(., 0) * w_{j,0}` and
/// `x_j(., k) = x_{j-1}(., 0) * w_{j,k}`, each layer subsampled by its stride.
///
/// Produces the same layout as [`forward`]. Aliasing of the intermediate
/// low-pass layers limits accuracy at small oversampling.
pub fn forward_cascade(
    x: &Signal,
    bank: &FilterBank,
    cascade: &CascadeFilters,
    oversampling: Oversampling,
) -> Result<WaveletCoefficients> {
    check_shape(x, bank)?;
    let mut current = x.clone();
    let mut bands = BTreeMap::new();
    for j in 1..=bank.scales() {
        let shape = current.shape();
        let spec = current.fft();
        let step = oversampling.stride(j) / oversampling.stride(j - 1);
        for k in 0..bank.bands() {
            let w = cascade.band(j, k).restrict(shape)?;
            bands.insert((j, k), filter_and_subsample(shape, &spec, &w, step, current.spacing())?);
        }
        let w = cascade.low(j).restrict(shape)?;
        current = filter_and_subsample(shape, &spec, &w, step, current.spacing())?;
    }
    Ok(WaveletCoefficients {
        shape: x.shape(),
        oversampling,
        low: current,
        bands,
        real_input: x.is_real(),
    })
}
