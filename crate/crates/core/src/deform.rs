//! Deformations `g.x(u) = x(u - g(u))`, the metric `2^-J |g|_inf + |grad g|_inf`,
//! and a stability harness for arbitrary representations.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::scattering::{scatter, ScatteringConfig};
use crate::signal::{Shape, Signal};

/// Displacement field on a grid, one component per axis, in samples.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpField {
    shape: Shape,
    components: Vec<Vec<f64>>,
    sup_norm: f64,
    jac_norm: f64,
}

impl WarpField {
    pub fn new(shape: Shape, components: Vec<Vec<f64>>) -> Result<WarpField> {
        if components.len() != shape.ndims() || components.iter().any(|c| c.len() != shape.len()) {
            return Err(Error::Dimension(format!(
                "warp on {shape:?} needs {} components of {} samples",
                shape.ndims(),
                shape.len()
            )));
        }
        let sup_norm = sup_norm(&components);
        let jac_norm = jacobian_norm(shape, &components);
        Ok(WarpField { shape, components, sup_norm, jac_norm })
    }

    pub fn zero(shape: Shape) -> WarpField {
        WarpField::new(shape, vec![vec![0.0; shape.len()]; shape.ndims()]).expect("shape is consistent")
    }

    /// Pure translation by `tau` (one entry per axis).
    pub fn constant(shape: Shape, tau: &[f64]) -> Result<WarpField> {
        if tau.len() != shape.ndims() {
            return Err(Error::Dimension(format!("translation needs {} entries", shape.ndims())));
        }
        WarpField::new(shape, tau.iter().map(|&t| vec![t; shape.len()]).collect())
    }

    /// `g_a(u) = eps * sin(2 pi cycles u_a / N_a)` along every axis, with `eps`
    /// chosen so the finite-difference Jacobian norm equals `jac`.
    pub fn sine(shape: Shape, cycles: f64, jac: f64) -> Result<WarpField> {
        let dims = shape.dims();
        let eps = dims
            .iter()
            .map(|&n| jac / (2.0 * PI * cycles / n as f64).sin())
            .fold(f64::INFINITY, f64::min);
        let coords = grid_coordinates(shape);
        let components = (0..shape.ndims())
            .map(|a| coords.iter().map(|u| eps * (2.0 * PI * cycles * u[a] / dims[a] as f64).sin()).collect())
            .collect();
        WarpField::new(shape, components)
    }

    /// Smooth random field made of a few sinusoids of spatial frequency
    /// `cycles` (per grid length), rescaled to Jacobian norm `jac`.
    pub fn random_smooth(shape: Shape, cycles: f64, jac: f64, rng: &mut impl Rng) -> Result<WarpField> {
        let dims = shape.dims();
        let coords = grid_coordinates(shape);
        let mut components = Vec::with_capacity(shape.ndims());
        for _ in 0..shape.ndims() {
            let mut comp = vec![0.0; shape.len()];
            for _ in 0..3 {
                let angle: f64 = rng.random_range(0.0..2.0 * PI);
                let phase: f64 = rng.random_range(0.0..2.0 * PI);
                let dir = [angle.sin(), angle.cos()];
                let weight: f64 = rng.random_range(0.5..1.0);
                for (v, u) in comp.iter_mut().zip(&coords) {
                    let t: f64 = (0..shape.ndims())
                        .map(|a| dir[a + 2 - shape.ndims()] * u[a] / dims[a] as f64)
                        .sum();
                    *v += weight * (2.0 * PI * cycles * t + phase).sin();
                }
            }
            components.push(comp);
        }
        let raw = WarpField::new(shape, components)?;
        if raw.jac_norm == 0.0 {
            return Ok(raw);
        }
        Ok(raw.scaled(jac / raw.jac_norm))
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// `max_u |g(u)|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `max_u ||grad g(u)||` with the spectral norm of the centered-difference
    /// Jacobian.
    pub fn jac_norm(&self) -> f64 {
        self.jac_norm
    }

    pub fn scaled(&self, c: f64) -> WarpField {
        let components = self.components.iter().map(|v| v.iter().map(|g| g * c).collect()).collect();
        WarpField::new(self.shape, components).expect("shape is unchanged")
    }

    pub fn negated(&self) -> WarpField {
        self.scaled(-1.0)
    }

    /// Whether the stored norms agree with a fresh computation within `tol`.
    pub fn norms_consistent(&self, tol: f64) -> bool {
        (sup_norm(&self.components) - self.sup_norm).abs() <= tol
            && (jacobian_norm(self.shape, &self.components) - self.jac_norm).abs() <= tol
    }
}

fn grid_coordinates(shape: Shape) -> Vec<Vec<f64>> {
    let (rows, cols) = shape.axes();
    let mut out = Vec::with_capacity(shape.len());
    for r in 0..rows {
        for c in 0..cols {
            out.push(match shape {
                Shape::D1(_) => vec![c as f64],
                Shape::D2(..) => vec![r as f64, c as f64],
            });
        }
    }
    out
}

fn sup_norm(components: &[Vec<f64>]) -> f64 {
    let n = components.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn jacobian_norm(shape: Shape, components: &[Vec<f64>]) -> f64 {
    let (rows, cols) = shape.axes();
    let diff = |c: &[f64], r: usize, col: usize, axis: usize| -> f64 {
        if axis == 0 {
            (c[((r + 1) % rows) * cols + col] - c[((r + rows - 1) % rows) * cols + col]) / 2.0
        } else {
            (c[r * cols + (col + 1) % cols] - c[r * cols + (col + cols - 1) % cols]) / 2.0
        }
    };
    let mut worst = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            let norm = match shape {
                Shape::D1(_) => diff(&components[0], r, c, 1).abs(),
                Shape::D2(..) => {
                    let a = diff(&components[0], r, c, 0);
                    let b = diff(&components[0], r, c, 1);
                    let cc = diff(&components[1], r, c, 0);
                    let d = diff(&components[1], r, c, 1);
                    // Largest singular value of [[a, b], [c, d]].
                    let s = a * a + b * b + cc * cc + d * d;
                    let det = a * d - b * cc;
                    ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
                }
            };
            worst = worst.max(norm);
        }
    }
    worst
}

/// Keys cubic convolution weights (`a = -1/2`) for taps at offsets -1, 0, 1, 2.
fn cubic_weights(t: f64) -> [f64; 4] {
    let k = |x: f64| -> f64 {
        let x = x.abs();
        if x <= 1.0 {
            (1.5 * x - 2.5) * x * x + 1.0
        } else if x < 2.0 {
            ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
        } else {
            0.0
        }
    };
    [k(1.0 + t), k(t), k(1.0 - t), k(2.0 - t)]
}

/// `x(u - g(u))` by periodic cubic interpolation.
pub fn warp(x: &Signal, g: &WarpField) -> Result<Signal> {
    if g.shape != x.shape() {
        return Err(Error::Dimension(format!("warp on {:?} applied to signal on {:?}", g.shape, x.shape())));
    }
    if g.jac_norm >= 1.0 {
        return Err(Error::NotDiffeomorphic(g.jac_norm));
    }
    let (rows, cols) = x.shape().axes();
    let s = x.samples();
    let coords = grid_coordinates(x.shape());
    let samples: Vec<Complex64> = coords
        .par_iter()
        .enumerate()
        .map(|(i, u)| match x.shape() {
            Shape::D1(_) => {
                let p = u[0] - g.components[0][i];
                let base = p.floor();
                let w = cubic_weights(p - base);
                (0..4)
                    .map(|t| s[(base as isize + t as isize - 1).rem_euclid(cols as isize) as usize] * w[t])
                    .sum()
            }
            Shape::D2(..) => {
                let pr = u[0] - g.components[0][i];
                let pc = u[1] - g.components[1][i];
                let (br, bc) = (pr.floor(), pc.floor());
                let (wr, wc) = (cubic_weights(pr - br), cubic_weights(pc - bc));
                let mut acc = Complex64::default();
                for a in 0..4 {
                    let r = (br as isize + a as isize - 1).rem_euclid(rows as isize) as usize;
                    let mut row = Complex64::default();
                    for b in 0..4 {
                        let c = (bc as isize + b as isize - 1).rem_euclid(cols as isize) as usize;
                        row += s[r * cols + c] * wc[b];
                    }
                    acc += row * wr[a];
                }
                acc
            }
        })
        .collect();
    Signal::from_grid(x.shape(), samples, x.spacing())
}

/// `2^-J ||g||_inf + ||grad g||_inf`.
pub fn diff_metric(g: &WarpField, scales: u32) -> f64 {
    2f64.powi(-(scales as i32)) * g.sup_norm + g.jac_norm
}

/// A signal embedding with a distance, for stability measurements.
pub trait Representation: Sync {
    fn name(&self) -> &str;
    fn distance(&self, x: &Signal, y: &Signal) -> Result<f64>;
}

/// `x` itself.
pub struct Identity;

impl Representation for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn distance(&self, x: &Signal, y: &Signal) -> Result<f64> {
        x.distance(y)
    }
}

/// `|x_hat| / sqrt(N)`: translation invariant, unstable to deformations.
pub struct FourierModulus;

impl FourierModulus {
    pub fn embed(x: &Signal) -> Vec<f64> {
        let scale = (x.cell_volume() / x.shape().len() as f64).sqrt();
        x.fft().iter().map(|z| z.norm() * scale).collect()
    }
}

impl Representation for FourierModulus {
    fn name(&self) -> &str {
        "fourier"
    }

    fn distance(&self, x: &Signal, y: &Signal) -> Result<f64> {
        if x.shape() != y.shape() {
            return Err(Error::Dimension("signals differ in shape".into()));
        }
        let (a, b) = (Self::embed(x), Self::embed(y));
        Ok(a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
    }
}

/// Scattering coefficients on a fixed bank.
pub struct Scattering<'a> {
    pub bank: &'a FilterBank,
    pub config: ScatteringConfig,
}

impl Representation for Scattering<'_> {
    fn name(&self) -> &str {
        "scattering"
    }

    fn distance(&self, x: &Signal, y: &Signal) -> Result<f64> {
        scatter(x, self.bank, self.config)?.distance(&scatter(y, self.bank, self.config)?)
    }
}

/// `||rep(g.x) - rep(x)|| / (|g|_Diff ||x||)`.
pub fn stability_ratio(rep: &dyn Representation, x: &Signal, g: &WarpField, scales: u32) -> Result<f64> {
    let metric = diff_metric(g, scales);
    let norm = x.norm();
    if metric == 0.0 || norm == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(rep.distance(&warp(x, g)?, x)? / (metric * norm))
}

/// One row of a stability sweep.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct StabilityRecord {
    pub warp_id: usize,
    pub sup_norm: f64,
    pub jac_norm: f64,
    pub metric: f64,
    pub distance: f64,
    pub ratio: f64,
}

/// `count` smooth random warps whose Jacobian norms span `jac_range` linearly
/// and whose spatial frequencies grow from 1 to `max_cycles` cycles per grid.
pub fn warp_sweep(shape: Shape, count: usize, jac_range: (f64, f64), max_cycles: f64, seed: u64) -> Result<Vec<WarpField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            let jac = jac_range.0 + t * (jac_range.1 - jac_range.0);
            let cycles = 1.0 + t * (max_cycles - 1.0);
            WarpField::random_smooth(shape, cycles, jac, &mut rng)
        })
        .collect()
}

/// Stability ratios of `rep` over `warps`, in warp order.
pub fn stability_sweep(rep: &dyn Representation, x: &Signal, warps: &[WarpField], scales: u32) -> Result<Vec<StabilityRecord>> {
    let norm = x.norm();
    warps
        .par_iter()
        .enumerate()
        .map(|(warp_id, g)| {
            let metric = diff_metric(g, scales);
            if metric == 0.0 || norm == 0.0 {
                return Err(Error::UndefinedRatio);
            }
            let distance = rep.distance(&warp(x, g)?, x)?;
            Ok(StabilityRecord {
                warp_id,
                sup_norm: g.sup_norm,
                jac_norm: g.jac_norm,
                metric,
                distance,
                ratio: distance / (metric * norm),
            })
        })
        .collect()
}
