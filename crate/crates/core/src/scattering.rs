//! Scattering transform: iterated band-pass filtering and phase removal along
//! scale-increasing paths, each path averaged by `phi_J`.

use std::cmp::Ordering;
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
use crate::filterbank::FilterBank;
use crate::io;
use crate::signal::{Shape, Signal};
use crate::wavelet::Oversampling;

/// Pointwise phase-removal nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rho {
    /// `|a|`
    #[default]
    Modulus,
    /// `max(0, Re a)`
    Rectifier,
}

impl Rho {
    pub fn apply(self, a: Complex64) -> f64 {
        match self {
            Rho::Modulus => a.norm(),
            Rho::Rectifier => a.re.max(0.0),
        }
    }

    /// `G_a` given `G_out` for `out = rho(a)`, as a complex gradient
    /// `dL/dRe a + i dL/dIm a`. The subgradient at the kink is zero.
    fn backward(self, a: Complex64, g_out: f64) -> Complex64 {
        match self {
            Rho::Modulus => {
                let r = a.norm();
                if r > 0.0 { a * (g_out / r) } else { Complex64::default() }
            }
            Rho::Rectifier => {
                if a.re > 0.0 { Complex64::new(g_out, 0.0) } else { Complex64::default() }
            }
        }
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rho::Modulus => "modulus",
            Rho::Rectifier => "rectifier",
        })
    }
}

impl FromStr for Rho {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modulus" => Ok(Rho::Modulus),
            "rectifier" => Ok(Rho::Rectifier),
            _ => Err(Error::InvalidArgument(format!("unknown nonlinearity {s:?}"))),
        }
    }
}

pub fn rho(alpha: Complex64, kind: Rho) -> f64 {
    kind.apply(alpha)
}

/// Sequence of `(j, k)` steps with strictly increasing scales.
///
/// Paths order by length, then by the scale sequence, then by the band
/// sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScatteringPath {
    steps: Vec<(u32, u32)>,
}

impl ScatteringPath {
    pub fn root() -> ScatteringPath {
        ScatteringPath { steps: vec![] }
    }

    pub fn new(steps: Vec<(u32, u32)>) -> Result<ScatteringPath> {
        let mut last = 0;
        for &(j, _) in &steps {
            if j <= last {
                return Err(Error::InvalidArgument(format!(
                    "path scales must be strictly increasing and positive: {steps:?}"
                )));
            }
            last = j;
        }
        Ok(ScatteringPath { steps })
    }

    pub fn order(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[(u32, u32)] {
        &self.steps
    }

    /// Scale of the last step, 0 for the root.
    pub fn last_scale(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.0)
    }

    pub fn child(&self, j: u32, k: u32) -> ScatteringPath {
        debug_assert!(j > self.last_scale());
        let mut steps = self.steps.clone();
        steps.push((j, k));
        ScatteringPath { steps }
    }

    /// `m0`, `m1_j2k0`, `m2_j1k3_j3k0`, ...
    pub fn label(&self) -> String {
        let mut s = format!("m{}", self.order());
        for (j, k) in &self.steps {
            s.push_str(&format!("_j{j}k{k}"));
        }
        s
    }

    pub fn parse(label: &str) -> Result<ScatteringPath> {
        let bad = || Error::Format(format!("malformed path label {label:?}"));
        let mut parts = label.split('_');
        let order: usize = parts.next().and_then(|m| m.strip_prefix('m')).and_then(|m| m.parse().ok()).ok_or_else(bad)?;
        let mut steps = Vec::new();
        for part in parts {
            let rest = part.strip_prefix('j').ok_or_else(bad)?;
            let (j, k) = rest.split_once('k').ok_or_else(bad)?;
            steps.push((j.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?));
        }
        if steps.len() != order {
            return Err(bad());
        }
        ScatteringPath::new(steps)
    }
}

impl Ord for ScatteringPath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.steps.iter().map(|s| s.0).cmp(other.steps.iter().map(|s| s.0)))
            .then_with(|| self.steps.iter().map(|s| s.1).cmp(other.steps.iter().map(|s| s.1)))
    }
}

impl PartialOrd for ScatteringPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ScatteringPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Every admissible path up to `max_order` for `J` scales and `K` bands, in
/// output order.
pub fn enumerate_paths(scales: u32, bands: u32, max_order: usize) -> Vec<ScatteringPath> {
    let mut all = vec![ScatteringPath::root()];
    let mut frontier = vec![ScatteringPath::root()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for p in &frontier {
            for j in p.last_scale() + 1..=scales {
                for k in 0..bands {
                    next.push(p.child(j, k));
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all.sort();
    all
}

/// Settings of a scattering network on a given bank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    pub max_order: usize,
    pub rho: Rho,
    pub oversampling: Oversampling,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig { max_order: 2, rho: Rho::Modulus, oversampling: Oversampling::default() }
    }
}

/// Averaged coefficient grid for every path.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringOutput {
    pub shape: Shape,
    pub scales: u32,
    pub bands: u32,
    pub config: ScatteringConfig,
    coefficients: BTreeMap<ScatteringPath, Signal>,
}

/// Where one path's coefficients sit in a flattened feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub path: String,
    pub offset: usize,
    pub shape: Vec<usize>,
    pub spacing: f64,
    /// Complex grids are stored as interleaved `(re, im)` pairs.
    pub complex: bool,
}

impl IndexEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product::<usize>() * if self.complex { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Maps feature offsets back to paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureIndex {
    pub entries: Vec<IndexEntry>,
}

impl FeatureIndex {
    pub fn len(&self) -> usize {
        self.entries.last().map_or(0, |e| e.offset + e.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Path label owning the feature at `offset`.
    pub fn path_at(&self, offset: usize) -> Option<&str> {
        let pos = self.entries.partition_point(|e| e.offset + e.len() <= offset);
        self.entries.get(pos).filter(|e| e.offset <= offset).map(|e| e.path.as_str())
    }

    /// One column label per feature: the path label for single-sample grids,
    /// `label@i` otherwise, with `.re`/`.im` suffixes for complex grids.
    pub fn column_labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for e in &self.entries {
            let n: usize = e.shape.iter().product();
            for i in 0..n {
                let base = if n == 1 { e.path.clone() } else { format!("{}@{i}", e.path) };
                if e.complex {
                    out.push(format!("{base}.re"));
                    out.push(format!("{base}.im"));
                } else {
                    out.push(base);
                }
            }
        }
        out
    }
}

impl ScatteringOutput {
    pub fn paths(&self) -> impl Iterator<Item = &ScatteringPath> {
        self.coefficients.keys()
    }

    pub fn coefficients(&self) -> &BTreeMap<ScatteringPath, Signal> {
        &self.coefficients
    }

    pub fn get(&self, path: &ScatteringPath) -> Option<&Signal> {
        self.coefficients.get(path)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `E_m = sum_{|p| = m} ||S_p||^2` for `m = 0..=max_order`.
    pub fn order_energies(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.config.max_order + 1];
        for (p, s) in &self.coefficients {
            e[p.order()] += s.norm_sqr();
        }
        e
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.values().map(Signal::norm_sqr).sum()
    }

    pub fn distance(&self, other: &ScatteringOutput) -> Result<f64> {
        Ok(self.distance_sqr(other)?.sqrt())
    }

    pub fn distance_sqr(&self, other: &ScatteringOutput) -> Result<f64> {
        if self.coefficients.len() != other.coefficients.len() {
            return Err(Error::Dimension("scattering outputs have different path sets".into()));
        }
        let mut total = 0.0;
        for ((p, a), (q, b)) in self.coefficients.iter().zip(&other.coefficients) {
            if p != q {
                return Err(Error::Dimension("scattering outputs have different path sets".into()));
            }
            total += a.sub(b)?.norm_sqr();
        }
        Ok(total)
    }

    /// Restriction to paths of order `m`.
    pub fn order_coefficients(&self, m: usize) -> impl Iterator<Item = (&ScatteringPath, &Signal)> {
        self.coefficients.iter().filter(move |(p, _)| p.order() == m)
    }

    pub fn flatten(&self) -> (Vec<f64>, FeatureIndex) {
        let mut features = Vec::new();
        let mut entries = Vec::with_capacity(self.coefficients.len());
        for (p, s) in &self.coefficients {
            let complex = !s.is_real();
            entries.push(IndexEntry {
                path: p.label(),
                offset: features.len(),
                shape: s.shape().dims(),
                spacing: s.spacing(),
                complex,
            });
            for z in s.samples() {
                features.push(z.re);
                if complex {
                    features.push(z.im);
                }
            }
        }
        (features, FeatureIndex { entries })
    }

    /// Inverse of [`ScatteringOutput::flatten`] given the run metadata.
    pub fn unflatten(
        features: &[f64],
        index: &FeatureIndex,
        shape: Shape,
        scales: u32,
        bands: u32,
        config: ScatteringConfig,
    ) -> Result<ScatteringOutput> {
        if features.len() != index.len() {
            return Err(Error::Dimension(format!(
                "{} features do not match an index of length {}",
                features.len(),
                index.len()
            )));
        }
        let mut coefficients = BTreeMap::new();
        for e in &index.entries {
            let chunk = &features[e.offset..e.offset + e.len()];
            let samples = if e.complex {
                chunk.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
            } else {
                chunk.iter().map(|&v| Complex64::new(v, 0.0)).collect()
            };
            let grid = Signal::from_grid(Shape::from_dims(&e.shape)?, samples, e.spacing)?;
            coefficients.insert(ScatteringPath::parse(&e.path)?, grid);
        }
        Ok(ScatteringOutput { shape, scales, bands, config, coefficients })
    }

    /// Write one SIG1 file per path, `manifest.json` and `features.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let (features, index) = self.flatten();
        for (p, s) in &self.coefficients {
            io::write_sig1(&dir.join(format!("{}.sig", p.label())), s)?;
        }
        let manifest = OutputManifest {
            format: "scatterkit-scattering-v1".into(),
            shape: self.shape.dims(),
            scales: self.scales,
            bands: self.bands,
            config: self.config,
            order_energies: self.order_energies(),
            index,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        let mut w = csv::Writer::from_path(dir.join("features.csv"))?;
        w.write_record(manifest.index.column_labels())?;
        w.write_record(features.iter().map(|v| format!("{v:e}")))?;
        w.flush()?;
        Ok(())
    }

    /// Read a directory written by [`ScatteringOutput::save`].
    pub fn load(dir: &Path) -> Result<ScatteringOutput> {
        let manifest: OutputManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let mut coefficients = BTreeMap::new();
        for e in &manifest.index.entries {
            let s = io::read_sig1(&dir.join(format!("{}.sig", e.path)))?.with_spacing(e.spacing);
            coefficients.insert(ScatteringPath::parse(&e.path)?, s);
        }
        Ok(ScatteringOutput {
            shape: Shape::from_dims(&manifest.shape)?,
            scales: manifest.scales,
            bands: manifest.bands,
            config: manifest.config,
            coefficients,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct OutputManifest {
    format: String,
    shape: Vec<usize>,
    scales: u32,
    bands: u32,
    config: ScatteringConfig,
    order_energies: Vec<f64>,
    index: FeatureIndex,
}

/// One propagated layer `U_p` on its (possibly subsampled) grid.
struct Node {
    path: ScatteringPath,
    parent: Option<usize>,
    /// Stride of this node's grid relative to the input.
    stride: usize,
    u: Signal,
    /// Pre-activation band output, kept for the backward pass.
    pre: Option<Vec<Complex64>>,
}

/// Forward pass record used by [`scatter_gradient`].
pub struct Tape {
    nodes: Vec<Node>,
    output: ScatteringOutput,
    input_real: bool,
}

impl Tape {
    pub fn output(&self) -> &ScatteringOutput {
        &self.output
    }
}

fn check_input(x: &Signal, bank: &FilterBank) -> Result<()> {
    if x.shape() != bank.shape() {
        return Err(Error::Dimension(format!(
            "signal shape {:?} does not match bank shape {:?}",
            x.shape(),
            bank.shape()
        )));
    }
    Ok(())
}

/// Filter a node by `psi_{j,k}`, subsample, and apply `rho`.
fn propagate_child(
    parent: &Node,
    parent_index: usize,
    spectrum: &[Complex64],
    bank: &FilterBank,
    config: &ScatteringConfig,
    j: u32,
    k: u32,
    keep_pre: bool,
) -> Result<Node> {
    let shape = parent.u.shape();
    let kernel = bank.psi(j, k).restrict(shape)?;
    let stride = config.oversampling.stride(j);
    let step = stride / parent.stride;
    let filtered: Vec<Complex64> = spectrum.iter().zip(kernel.response()).map(|(a, h)| a * h).collect();
    let coarse = shape.subsampled(step)?;
    let pre = fft::ifft_of(coarse, &fft::fold_spectrum(shape, &filtered, step));
    let u: Vec<Complex64> = pre.iter().map(|&a| Complex64::new(config.rho.apply(a), 0.0)).collect();
    Ok(Node {
        path: parent.path.child(j, k),
        parent: Some(parent_index),
        stride,
        u: Signal::from_grid(coarse, u, parent.u.spacing() * step as f64)?,
        pre: keep_pre.then_some(pre),
    })
}

fn run(x: &Signal, bank: &FilterBank, config: ScatteringConfig, keep_tape: bool) -> Result<(ScatteringOutput, Vec<Node>)> {
    check_input(x, bank)?;
    let final_stride = config.oversampling.stride(bank.scales());
    let mut nodes = vec![Node { path: ScatteringPath::root(), parent: None, stride: 1, u: x.clone(), pre: None }];
    let mut layer: Vec<usize> = vec![0];
    let mut coefficients = BTreeMap::new();
    for m in 0..=config.max_order {
        let spectra: Vec<Vec<Complex64>> = layer.par_iter().map(|&i| nodes[i].u.fft()).collect();
        let averaged = layer
            .par_iter()
            .zip(&spectra)
            .map(|(&i, spec)| {
                let node = &nodes[i];
                let phi = bank.phi().alias_to(node.u.shape())?;
                crate::wavelet::filter_and_subsample(node.u.shape(), spec, &phi, final_stride / node.stride, node.u.spacing())
            })
            .collect::<Result<Vec<_>>>()?;
        for (&i, s) in layer.iter().zip(averaged) {
            // phi_J is real and even, so real layers average to real grids.
            let s = if nodes[i].u.is_real() { s.map(|z| Complex64::new(z.re, 0.0)) } else { s };
            coefficients.insert(nodes[i].path.clone(), s);
        }
        if m == config.max_order {
            break;
        }
        let jobs: Vec<(usize, usize, u32, u32)> = layer
            .iter()
            .enumerate()
            .flat_map(|(slot, &i)| {
                let start = nodes[i].path.last_scale() + 1;
                (start..=bank.scales()).flat_map(move |j| (0..bank.bands()).map(move |k| (slot, i, j, k)))
            })
            .collect();
        let children = jobs
            .par_iter()
            .map(|&(slot, i, j, k)| propagate_child(&nodes[i], i, &spectra[slot], bank, &config, j, k, keep_tape))
            .collect::<Result<Vec<_>>>()?;
        let first = nodes.len();
        nodes.extend(children);
        layer = (first..nodes.len()).collect();
        if !keep_tape {
            // Parents are no longer needed once their children exist.
            for n in nodes[..first].iter_mut() {
                n.u = Signal::zeros(Shape::D1(1));
            }
        }
    }
    let output = ScatteringOutput {
        shape: x.shape(),
        scales: bank.scales(),
        bands: bank.bands(),
        config,
        coefficients,
    };
    Ok((output, nodes))
}

/// Scattering coefficients of `x` for every admissible path up to `max_order`.
pub fn scatter(x: &Signal, bank: &FilterBank, config: ScatteringConfig) -> Result<ScatteringOutput> {
    Ok(run(x, bank, config, false)?.0)
}

/// Forward pass keeping the intermediate layers for differentiation.
pub fn scatter_with_tape(x: &Signal, bank: &FilterBank, config: ScatteringConfig) -> Result<Tape> {
    let (output, nodes) = run(x, bank, config, true)?;
    Ok(Tape { nodes, output, input_real: x.is_real() })
}

/// `L = sum_p ||S_p - T_p||^2` with the stride-weighted norm.
pub fn objective(output: &ScatteringOutput, target: &ScatteringOutput) -> Result<f64> {
    output.distance_sqr(target)
}

/// Gradient of [`objective`] with respect to the input samples, by reverse-mode
/// differentiation of a recorded forward pass.
///
/// Complex gradients are returned as `dL/dRe x + i dL/dIm x`; for real inputs
/// only the real part is kept.
pub fn gradient_from_tape(tape: &Tape, bank: &FilterBank, target: &ScatteringOutput) -> Result<Signal> {
    let output = &tape.output;
    if output.len() != target.len() {
        return Err(Error::Dimension("target has a different path set".into()));
    }
    let final_stride = output.config.oversampling.stride(bank.scales());
    let rho = output.config.rho;
    let nodes = &tape.nodes;
    let mut grads: Vec<Option<Vec<Complex64>>> = vec![None; nodes.len()];
    for i in (0..nodes.len()).rev() {
        let node = &nodes[i];
        let shape = node.u.shape();
        let mut g = grads[i].take().unwrap_or_else(|| vec![Complex64::default(); shape.len()]);

        // Averaging branch.
        let s = &output.coefficients[&node.path];
        let t = target
            .coefficients
            .get(&node.path)
            .ok_or_else(|| Error::Dimension(format!("target lacks path {}", node.path)))?;
        let weight = 2.0 * s.cell_volume();
        let diff: Vec<Complex64> = s.samples().iter().zip(t.samples()).map(|(a, b)| (a - b) * weight).collect();
        let spread = fft::tile_spectrum(s.shape(), &fft::fft_of(s.shape(), &diff), final_stride / node.stride);
        let phi = bank.phi().alias_to(shape)?;
        for ((acc, v), h) in g.iter_mut().zip(&spread).zip(phi.response()) {
            *acc += v * h.conj();
        }

        // Back through rho and psi into the parent.
        if let (Some(p), Some(pre)) = (node.parent, node.pre.as_ref()) {
            let g_u = fft::ifft_of(shape, &g);
            let g_pre: Vec<Complex64> = pre.iter().zip(&g_u).map(|(&a, gu)| rho.backward(a, gu.re)).collect();
            let parent = &nodes[p];
            let (j, k) = *node.path.steps().last().unwrap();
            let psi = bank.psi(j, k).restrict(parent.u.shape())?;
            let spread = fft::tile_spectrum(shape, &fft::fft_of(shape, &g_pre), node.stride / parent.stride);
            let slot = grads[p].get_or_insert_with(|| vec![Complex64::default(); parent.u.shape().len()]);
            for ((acc, v), h) in slot.iter_mut().zip(&spread).zip(psi.response()) {
                *acc += v * h.conj();
            }
        } else if i == 0 {
            grads[0] = Some(g);
        }
    }
    let root = grads[0].take().expect("root gradient is accumulated last");
    let mut gx = Signal::from_spectrum(nodes[0].u.shape(), &root, nodes[0].u.spacing())?;
    if tape.input_real {
        gx = gx.map(|z| Complex64::new(z.re, 0.0));
    }
    Ok(gx)
}

/// `grad_x ||Phi(x) - target||^2`.
pub fn scatter_gradient(x: &Signal, bank: &FilterBank, config: ScatteringConfig, target: &ScatteringOutput) -> Result<Signal> {
    let tape = scatter_with_tape(x, bank, config)?;
    gradient_from_tape(&tape, bank, target)
}
