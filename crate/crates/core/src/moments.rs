//! Scattering moments of stationary processes on the periodic grid:
//! cross-realization estimators, the decay of the estimation variance with the
//! averaging scale, and a contrast against a same-spectrum random-phase model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::scattering::{scatter, ScatteringConfig, ScatteringOutput, ScatteringPath};
use crate::signal::{shift, signed_frequency, Shape, Signal};
use crate::synth::white_noise;

/// Family of circularly stationary random fields.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessKind {
    /// Independent Gaussian samples.
    GaussianWhite { sigma: f64 },
    /// Separable first-order autoregression along every axis, unit marginal
    /// variance times `sigma^2`.
    Autoregressive { coefficient: f64, sigma: f64 },
    /// Random Fourier phases on the modulus spectrum of `image`.
    PhaseRandomized { image: Signal },
    /// Each sample equals `amplitude` with probability `probability`, else 0.
    BernoulliSpikes { probability: f64, amplitude: f64 },
    /// `image` translated by a uniform random circular shift. Stationary but
    /// not ergodic.
    ShiftedImage { image: Signal },
    /// Every realization equals `value`.
    Constant { value: f64 },
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessKind::GaussianWhite { sigma } => write!(f, "white:{sigma}"),
            ProcessKind::Autoregressive { coefficient, sigma } => write!(f, "ar1:{coefficient}:{sigma}"),
            ProcessKind::PhaseRandomized { .. } => write!(f, "phase"),
            ProcessKind::BernoulliSpikes { probability, amplitude } => write!(f, "spikes:{probability}:{amplitude}"),
            ProcessKind::ShiftedImage { .. } => write!(f, "shifted"),
            ProcessKind::Constant { value } => write!(f, "constant:{value}"),
        }
    }
}

/// Parses the image-free kinds: `white[:sigma]`, `ar1:a[:sigma]`,
/// `spikes:p[:amplitude]`, `constant:c`.
impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let nums: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number {p:?} in model {s:?}"))))
            .collect::<Result<_>>()?;
        let arg = |i: usize, default: Option<f64>| {
            nums.get(i)
                .copied()
                .or(default)
                .ok_or_else(|| Error::InvalidArgument(format!("model {s:?} is missing parameter {}", i + 1)))
        };
        let kind = match name {
            "white" => ProcessKind::GaussianWhite { sigma: arg(0, Some(1.0))? },
            "ar1" => ProcessKind::Autoregressive { coefficient: arg(0, None)?, sigma: arg(1, Some(1.0))? },
            "spikes" => ProcessKind::BernoulliSpikes { probability: arg(0, None)?, amplitude: arg(1, Some(1.0))? },
            "constant" => ProcessKind::Constant { value: arg(0, None)? },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model {name:?}; expected white, ar1, spikes or constant"
                )))
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl ProcessKind {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            ProcessKind::GaussianWhite { sigma } => *sigma >= 0.0,
            ProcessKind::Autoregressive { coefficient, sigma } => coefficient.abs() < 1.0 && *sigma >= 0.0,
            ProcessKind::BernoulliSpikes { probability, .. } => (0.0..=1.0).contains(probability),
            ProcessKind::Constant { value } => value.is_finite(),
            ProcessKind::PhaseRandomized { .. } | ProcessKind::ShiftedImage { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid process parameters: {self}")))
        }
    }
}

/// A process on a fixed grid with a master seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessModel {
    pub kind: ProcessKind,
    pub shape: Shape,
    pub seed: u64,
}

impl ProcessModel {
    pub fn new(kind: ProcessKind, shape: Shape, seed: u64) -> Result<ProcessModel> {
        kind.validate()?;
        if let ProcessKind::PhaseRandomized { image } | ProcessKind::ShiftedImage { image } = &kind {
            if image.shape() != shape {
                return Err(Error::Dimension(format!(
                    "model image is {:?}, grid is {shape:?}",
                    image.shape()
                )));
            }
        }
        Ok(ProcessModel { kind, shape, seed })
    }

    /// Realization `index`. Each index draws from its own ChaCha stream of the
    /// master seed, so realizations do not depend on evaluation order.
    pub fn sample(&self, index: u64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        match &self.kind {
            ProcessKind::GaussianWhite { sigma } => white_noise(self.shape, *sigma, &mut rng),
            ProcessKind::Autoregressive { coefficient, sigma } => {
                let w = white_noise(self.shape, *sigma, &mut rng);
                let gain = ar_gain(self.shape, *coefficient);
                let spec: Vec<Complex64> = w.fft().iter().zip(&gain).map(|(z, g)| z * g).collect();
                real_from_spectrum(self.shape, &spec)
            }
            ProcessKind::PhaseRandomized { image } => phase_randomize(image, &mut rng),
            ProcessKind::BernoulliSpikes { probability, amplitude } => {
                let v: Vec<f64> = (0..self.shape.len())
                    .map(|_| if rng.random::<f64>() < *probability { *amplitude } else { 0.0 })
                    .collect();
                Signal::from_real(self.shape, &v).expect("model grid")
            }
            ProcessKind::ShiftedImage { image } => {
                let tau: Vec<isize> = self.shape.dims().iter().map(|&d| rng.random_range(0..d) as isize).collect();
                shift(image, &tau).expect("model grid")
            }
            ProcessKind::Constant { value } => Signal::constant(self.shape, Complex64::new(*value, 0.0)),
        }
    }
}

/// Transfer function of the separable AR(1) filter, scaled so the output
/// variance equals the input variance.
fn ar_gain(shape: Shape, a: f64) -> Vec<f64> {
    let (rows, cols) = shape.axes();
    let axis = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|m| {
                if n == 1 {
                    return 1.0;
                }
                let w = signed_frequency(m, n);
                (1.0 - a * a).sqrt() / Complex64::new(1.0 - a * w.cos(), a * w.sin()).norm()
            })
            .collect()
    };
    let (gr, gc) = (axis(rows), axis(cols));
    gr.iter().flat_map(|r| gc.iter().map(move |c| r * c)).collect()
}

fn real_from_spectrum(shape: Shape, spec: &[Complex64]) -> Signal {
    let s = Signal::from_spectrum(shape, spec, 1.0).expect("model grid");
    Signal::from_real(shape, &s.real_parts()).expect("model grid")
}

/// Same modulus spectrum as `image`, phases taken from a real white-noise
/// spectrum so Hermitian symmetry holds automatically. The mean is kept.
pub fn phase_randomize(image: &Signal, rng: &mut impl Rng) -> Signal {
    let shape = image.shape();
    let spec = image.fft();
    let noise = white_noise(shape, 1.0, rng).fft();
    let out: Vec<Complex64> = spec
        .iter()
        .zip(&noise)
        .enumerate()
        .map(|(i, (x, z))| {
            if i == 0 {
                return *x;
            }
            let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
            phase * x.norm()
        })
        .collect();
    real_from_spectrum(shape, &out).with_spacing(image.spacing())
}

/// Spatial average of every path's coefficient grid (real part).
pub fn spatial_moments(output: &ScatteringOutput) -> Vec<f64> {
    output.coefficients().values().map(|s| s.mean().re).collect()
}

/// Cross-realization statistics of a process's scattering coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub scales: u32,
    pub realizations: usize,
    pub paths: Vec<ScatteringPath>,
    /// Mean over realizations of each path's spatial average.
    pub mean: Vec<f64>,
    /// Unbiased variance over realizations of each path's spatial average.
    pub variance: Vec<f64>,
    /// Pointwise mean coefficient grids.
    pub mean_field: BTreeMap<ScatteringPath, Signal>,
    /// `E ||Phi_J x - E Phi_J x||^2`, estimated with the unbiased `R - 1` divisor.
    pub sigma2: f64,
    /// Standard error of `sigma2`.
    pub sigma2_stderr: f64,
}

impl MomentEstimate {
    /// Standard error of each mean entry.
    pub fn stderr(&self) -> Vec<f64> {
        self.variance.iter().map(|v| (v / self.realizations as f64).sqrt()).collect()
    }

    /// Indices of the order `m` entries.
    pub fn order_indices(&self, m: usize) -> Vec<usize> {
        (0..self.paths.len()).filter(|&i| self.paths[i].order() == m).collect()
    }

    pub fn order_mean(&self, m: usize) -> Vec<f64> {
        self.order_indices(m).into_iter().map(|i| self.mean[i]).collect()
    }
}

fn mean_and_variance(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}

/// Scatter `realizations` independent draws in parallel and summarize them.
pub fn estimate_moments(
    model: &ProcessModel,
    bank: &FilterBank,
    config: ScatteringConfig,
    realizations: usize,
) -> Result<MomentEstimate> {
    if realizations < 2 {
        return Err(Error::InvalidArgument("at least two realizations are needed".into()));
    }
    if model.shape != bank.shape() {
        return Err(Error::Dimension(format!(
            "model grid {:?} does not match bank grid {:?}",
            model.shape,
            bank.shape()
        )));
    }
    let outputs: Vec<ScatteringOutput> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| scatter(&model.sample(r), bank, config))
        .collect::<Result<_>>()?;
    Ok(summarize(&outputs, bank.scales()))
}

fn summarize(outputs: &[ScatteringOutput], scales: u32) -> MomentEstimate {
    let r = outputs.len();
    let paths: Vec<ScatteringPath> = outputs[0].paths().cloned().collect();
    let averages: Vec<Vec<f64>> = outputs.iter().map(spatial_moments).collect();
    let (mean, variance): (Vec<f64>, Vec<f64>) =
        (0..paths.len()).map(|i| mean_and_variance(averages.iter().map(|a| a[i]), r)).unzip();

    let mut mean_field = BTreeMap::new();
    for p in &paths {
        let first = outputs[0].get(p).expect("same paths in every output");
        let mut acc = vec![Complex64::new(0.0, 0.0); first.samples().len()];
        for out in outputs {
            for (a, z) in acc.iter_mut().zip(out.get(p).expect("same paths").samples()) {
                *a += z;
            }
        }
        acc.iter_mut().for_each(|a| *a /= r as f64);
        let grid = Signal::from_grid(first.shape(), acc, first.spacing()).expect("same grid");
        mean_field.insert(p.clone(), grid);
    }
    let deviations: Vec<f64> = outputs
        .iter()
        .map(|out| {
            out.coefficients()
                .iter()
                .map(|(p, s)| s.distance(&mean_field[p]).expect("same grid").powi(2))
                .sum::<f64>()
        })
        .collect();
    let correction = r as f64 / (r - 1) as f64;
    let (dev_mean, dev_var) = mean_and_variance(deviations.iter().copied(), r);
    MomentEstimate {
        scales,
        realizations: r,
        paths,
        mean,
        variance,
        mean_field,
        sigma2: correction * dev_mean,
        sigma2_stderr: correction * (dev_var / r as f64).sqrt(),
    }
}

/// One row of a variance-decay table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub scales: u32,
    pub sigma2: f64,
    pub stderr: f64,
}

/// `sigma_J^2` for each bank, in order. The banks must share the model grid and
/// have strictly increasing `J`.
pub fn variance_decay(
    model: &ProcessModel,
    banks: &[FilterBank],
    config: ScatteringConfig,
    realizations: usize,
) -> Result<Vec<DecayRow>> {
    if banks.windows(2).any(|w| w[1].scales() <= w[0].scales()) {
        return Err(Error::Scale("banks must have strictly increasing J".into()));
    }
    banks
        .iter()
        .map(|bank| {
            let est = estimate_moments(model, bank, config, realizations)?;
            Ok(DecayRow { scales: bank.scales(), sigma2: est.sigma2, stderr: est.sigma2_stderr })
        })
        .collect()
}

/// Distances between a texture's moments and those of its random-phase
/// surrogate, relative to the surrogate.
///
/// `d1` compares first-order moments. `d2` compares second-order moments
/// divided by their first-order parent, `S[(j1,k1),(j2,k2)] / S[(j1,k1)]`,
/// which removes what the first order already explains. `d2_raw` is the same
/// comparison without that normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub d1: f64,
    pub d2: f64,
    pub d2_raw: f64,
    /// Standard errors of the surrogate estimates on the same relative scale.
    pub stderr1: f64,
    pub stderr2: f64,
    pub realizations: usize,
}

/// First-order moments followed by parent-normalized second-order moments.
fn contrast_vectors(paths: &[ScatteringPath], moments: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let first: BTreeMap<(u32, u32), f64> = paths
        .iter()
        .zip(moments)
        .filter(|(p, _)| p.order() == 1)
        .map(|(p, &v)| (p.steps()[0], v))
        .collect();
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    let mut raw = Vec::new();
    for (p, &v) in paths.iter().zip(moments) {
        match p.order() {
            1 => v1.push(v),
            2 => {
                let parent = first[&p.steps()[0]];
                v2.push(if parent > 0.0 { v / parent } else { 0.0 });
                raw.push(v);
            }
            _ => {}
        }
    }
    (v1, v2, raw)
}

pub fn gaussian_contrast(
    texture: &Signal,
    bank: &FilterBank,
    config: ScatteringConfig,
    realizations: usize,
    seed: u64,
) -> Result<ContrastReport> {
    if config.max_order < 2 {
        return Err(Error::InvalidArgument("the contrast needs second-order coefficients".into()));
    }
    if realizations < 2 {
        return Err(Error::InvalidArgument("at least two realizations are needed".into()));
    }
    let own_out = scatter(texture, bank, config)?;
    let paths: Vec<ScatteringPath> = own_out.paths().cloned().collect();
    let own = contrast_vectors(&paths, &spatial_moments(&own_out));
    let model = ProcessModel::new(ProcessKind::PhaseRandomized { image: texture.clone() }, texture.shape(), seed)?;
    let draws: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| Ok(contrast_vectors(&paths, &spatial_moments(&scatter(&model.sample(r), bank, config)?))))
        .collect::<Result<_>>()?;
    let r = realizations;
    let stats = |pick: fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> &Vec<f64>, reference: &[f64]| {
        let len = reference.len();
        let (mean, var): (Vec<f64>, Vec<f64>) =
            (0..len).map(|i| mean_and_variance(draws.iter().map(|d| pick(d)[i]), r)).unzip();
        let scale = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = mean.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let se = (var.iter().sum::<f64>() / r as f64).sqrt();
        if scale > 0.0 {
            (d / scale, se / scale)
        } else {
            (0.0, 0.0)
        }
    };
    let (d1, stderr1) = stats(|d| &d.0, &own.0);
    let (d2, stderr2) = stats(|d| &d.1, &own.1);
    let (d2_raw, _) = stats(|d| &d.2, &own.2);
    Ok(ContrastReport { d1, d2, d2_raw, stderr1, stderr2, realizations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::{build_morlet_2d, MorletParams2d};
    use crate::wavelet::Oversampling;

    fn bank(n: usize, j: u32) -> FilterBank {
        build_morlet_2d(Shape::D2(n, n), j, 4, MorletParams2d::default()).unwrap()
    }

    #[test]
    fn parse_models() {
        assert_eq!(
            "ar1:0.9".parse::<ProcessKind>().unwrap(),
            ProcessKind::Autoregressive { coefficient: 0.9, sigma: 1.0 }
        );
        assert_eq!("white".parse::<ProcessKind>().unwrap(), ProcessKind::GaussianWhite { sigma: 1.0 });
        assert!("ar1:1.5".parse::<ProcessKind>().is_err());
        assert!("ar1".parse::<ProcessKind>().is_err());
        assert!("pink".parse::<ProcessKind>().is_err());
        assert!("spikes:x".parse::<ProcessKind>().is_err());
    }

    #[test]
    fn samples_are_reproducible_and_distinct() {
        let m = ProcessModel::new(ProcessKind::GaussianWhite { sigma: 1.0 }, Shape::D2(8, 8), 3).unwrap();
        assert_eq!(m.sample(4), m.sample(4));
        assert_ne!(m.sample(4), m.sample(5));
    }

    #[test]
    fn ar_marginal_variance_and_correlation() {
        let a = 0.7;
        let m = ProcessModel::new(ProcessKind::Autoregressive { coefficient: a, sigma: 1.0 }, Shape::D1(4096), 1).unwrap();
        let x = m.sample(0).real_parts();
        let n = x.len() as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n;
        let lag1 = (0..x.len()).map(|i| x[i] * x[(i + 1) % x.len()]).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.15, "var {var}");
        assert!((lag1 / var - a).abs() < 0.05, "corr {}", lag1 / var);
    }

    #[test]
    fn phase_randomization_keeps_the_spectrum_modulus() {
        let img = crate::synth::dead_leaves(16, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = phase_randomize(&img, &mut rng);
        assert!(y.is_real());
        for (a, b) in img.fft().iter().zip(y.fft()) {
            assert!((a.norm() - b.norm()).abs() < 1e-9);
        }
        assert!(y.distance(&img).unwrap() > 0.1 * img.norm());
    }

    #[test]
    fn zero_and_constant_processes() {
        let b = bank(16, 4);
        let cfg = ScatteringConfig::default();
        let zero = ProcessModel::new(ProcessKind::Constant { value: 0.0 }, b.shape(), 0).unwrap();
        let est = estimate_moments(&zero, &b, cfg, 3).unwrap();
        assert!(est.mean.iter().all(|&v| v == 0.0));
        let c = ProcessModel::new(ProcessKind::Constant { value: 0.75 }, b.shape(), 0).unwrap();
        let est = estimate_moments(&c, &b, cfg, 3).unwrap();
        for (p, v) in est.paths.iter().zip(&est.mean) {
            if p.order() == 0 {
                assert!((v - 0.75).abs() < 1e-12, "{v}");
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
        assert!(est.variance.iter().all(|&v| v.abs() < 1e-20));
    }

    #[test]
    fn averages_commute_with_realization_mean() {
        let b = bank(16, 2);
        let m = ProcessModel::new(ProcessKind::BernoulliSpikes { probability: 0.1, amplitude: 1.0 }, b.shape(), 7).unwrap();
        let est = estimate_moments(&m, &b, ScatteringConfig::default(), 6).unwrap();
        for (i, p) in est.paths.iter().enumerate() {
            assert!((est.mean_field[p].mean().re - est.mean[i]).abs() < 1e-12);
        }
        assert!(est.variance.iter().all(|&v| v >= 0.0));
        assert!(est.sigma2 >= 0.0);
    }

    #[test]
    fn order_zero_moment_matches_process_mean() {
        let b = bank(16, 2);
        let p = 0.2;
        let m = ProcessModel::new(ProcessKind::BernoulliSpikes { probability: p, amplitude: 1.0 }, b.shape(), 2).unwrap();
        let est = estimate_moments(&m, &b, ScatteringConfig::default(), 40).unwrap();
        let se = est.stderr()[0];
        assert!((est.mean[0] - p).abs() <= 3.0 * se, "{} vs {p} (se {se})", est.mean[0]);
    }

    /// `E|z|` for a zero-mean complex Gaussian with `E|z|^2 = e` and
    /// `E z^2 = q`, by quadrature over the angle of the whitened vector.
    fn abs_gaussian_mean(e: f64, q: Complex64) -> f64 {
        let (saa, sbb, sab) = ((e + q.re) / 2.0, (e - q.re) / 2.0, q.im / 2.0);
        let tr = saa + sbb;
        let disc = ((saa - sbb).powi(2) / 4.0 + sab * sab).sqrt();
        let (l1, l2) = ((tr / 2.0 + disc).max(0.0), (tr / 2.0 - disc).max(0.0));
        let n = 20000;
        let avg = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                (l1 * t.cos().powi(2) + l2 * t.sin().powi(2)).sqrt()
            })
            .sum::<f64>()
            / n as f64;
        (std::f64::consts::PI / 2.0).sqrt() * avg
    }

    #[test]
    fn first_order_white_noise_moment_matches_closed_form() {
        let b = bank(32, 3);
        let sigma = 1.3;
        let m = ProcessModel::new(ProcessKind::GaussianWhite { sigma }, b.shape(), 11).unwrap();
        let est = estimate_moments(&m, &b, ScatteringConfig::default(), 60).unwrap();
        let se = est.stderr();
        for (i, p) in est.paths.iter().enumerate() {
            if p.order() != 1 {
                continue;
            }
            let (j, k) = p.steps()[0];
            let h = b.psi(j, k).spatial();
            let e = sigma * sigma * h.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
            let q = sigma * sigma * h.samples().iter().map(|z| z * z).sum::<Complex64>();
            let expected = abs_gaussian_mean(e, q);
            assert!((est.mean[i] - expected).abs() <= 3.0 * se[i], "{p}: {} vs {expected} (se {})", est.mean[i], se[i]);
        }
    }

    #[test]
    fn moments_are_translation_invariant_at_full_scale() {
        let b = bank(16, 4);
        let cfg = ScatteringConfig { oversampling: Oversampling::FULL, ..Default::default() };
        let x = crate::synth::dead_leaves(16, 5);
        let a = spatial_moments(&scatter(&x, &b, cfg).unwrap());
        let y = shift(&x, &[5, -3]).unwrap();
        let c = spatial_moments(&scatter(&y, &b, cfg).unwrap());
        for (u, v) in a.iter().zip(&c) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn white_noise_variance_decays() {
        let banks: Vec<FilterBank> = (1..=4).map(|j| bank(32, j)).collect();
        let m = ProcessModel::new(ProcessKind::GaussianWhite { sigma: 1.0 }, Shape::D2(32, 32), 4).unwrap();
        let rows = variance_decay(&m, &banks, ScatteringConfig::default(), 24).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].sigma2 < w[0].sigma2, "{rows:?}");
        }
    }

    #[test]
    fn decay_rejects_unordered_banks() {
        let banks = vec![bank(16, 2), bank(16, 2)];
        let m = ProcessModel::new(ProcessKind::GaussianWhite { sigma: 1.0 }, Shape::D2(16, 16), 4).unwrap();
        assert!(matches!(variance_decay(&m, &banks, ScatteringConfig::default(), 4), Err(Error::Scale(_))));
    }

    #[test]
    fn too_few_realizations() {
        let b = bank(16, 2);
        let m = ProcessModel::new(ProcessKind::GaussianWhite { sigma: 1.0 }, b.shape(), 0).unwrap();
        assert!(estimate_moments(&m, &b, ScatteringConfig::default(), 1).is_err());
    }

    #[test]
    fn contrast_separates_spikes_from_a_gaussian() {
        let b = bank(32, 3);
        let cfg = ScatteringConfig::default();
        let g = ProcessModel::new(ProcessKind::GaussianWhite { sigma: 1.0 }, b.shape(), 77).unwrap().sample(0);
        let rg = gaussian_contrast(&g, &b, cfg, 24, 1).unwrap();
        let spikes = crate::synth::sparse_spikes(b.shape(), 20, 3);
        let rs = gaussian_contrast(&spikes, &b, cfg, 24, 1).unwrap();
        assert!(rs.d1 > 5.0 * rg.d1 && rs.d2 > 5.0 * rg.d2, "{rg:?} {rs:?}");
        assert!(rs.d2 >= 2.0 * rs.d1, "{rs:?}");
    }

    #[test]
    fn image_models_need_matching_grids() {
        let img = crate::synth::dead_leaves(16, 1);
        assert!(ProcessModel::new(ProcessKind::ShiftedImage { image: img }, Shape::D2(32, 32), 0).is_err());
    }
}
