//! Reconstruction of a signal from its scattering coefficients by gradient
//! descent on `||Phi(x) - Phi(x_n)||^2`, starting from white noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::scattering::{gradient_from_tape, objective, scatter, scatter_with_tape, ScatteringOutput};
use crate::signal::Signal;
use crate::synth::white_noise;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub max_iter: usize,
    pub seed: u64,
    /// Step tried on the first iteration.
    pub initial_step: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Each iteration starts from the last accepted step times this factor.
    pub grow: f64,
    pub max_backtracks: usize,
    /// Stop threshold on `sqrt(L)`; defaults to [`sigma_j`] of the target.
    pub threshold: Option<f64>,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            max_iter: 2000,
            seed: 0,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            grow: 2.0,
            max_backtracks: 60,
            threshold: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `sqrt(L)` fell below the threshold.
    Threshold,
    /// Iteration cap reached.
    IterationCap,
    /// No step size produced sufficient decrease.
    Stalled,
}

/// Trace of one descent run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRun {
    pub seed: u64,
    pub sigma_j: f64,
    pub threshold: f64,
    /// `L_n` after every accepted step, starting with `L_0`.
    pub history: Vec<f64>,
    /// Accepted step sizes, one per iteration.
    pub steps: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
}

impl ReconstructionRun {
    pub fn final_objective(&self) -> f64 {
        *self.history.last().expect("history starts with L_0")
    }

    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Empirical spatial standard deviation of the target: `sqrt(sum_p ||S_p - mean(S_p)||^2)`.
pub fn sigma_j(target: &ScatteringOutput) -> f64 {
    target
        .coefficients()
        .values()
        .map(|s| {
            let m = s.mean();
            s.samples().iter().map(|z| (z - m).norm_sqr()).sum::<f64>() * s.cell_volume()
        })
        .sum::<f64>()
        .sqrt()
}

/// Gradient descent from a white-noise realization whose energy matches the
/// target's scattering energy.
pub fn reconstruct(target: &ScatteringOutput, bank: &FilterBank, config: &ReconstructionConfig) -> Result<(Signal, ReconstructionRun)> {
    if target.shape != bank.shape() {
        return Err(Error::Dimension(format!(
            "target computed on {:?}, bank is on {:?}",
            target.shape,
            bank.shape()
        )));
    }
    if !(config.shrink > 0.0 && config.shrink < 1.0) || config.initial_step <= 0.0 {
        return Err(Error::InvalidArgument("step schedule needs initial_step > 0 and 0 < shrink < 1".into()));
    }
    let shape = target.shape;
    let scat = target.config;
    let sigma = sigma_j(target);
    let threshold = config.threshold.unwrap_or(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise_std = (target.norm_sqr() / shape.len() as f64).sqrt();
    let mut x = white_noise(shape, noise_std, &mut rng);

    let mut tape = scatter_with_tape(&x, bank, scat)?;
    let mut loss = objective(tape.output(), target)?;
    let mut history = vec![loss];
    let mut steps = Vec::new();
    let mut step = config.initial_step;
    let mut stop = StopReason::IterationCap;
    for _ in 0..config.max_iter {
        if loss.sqrt() <= threshold {
            stop = StopReason::Threshold;
            break;
        }
        let g = gradient_from_tape(&tape, bank, target)?;
        let g2 = g.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
        if g2 == 0.0 {
            stop = StopReason::Stalled;
            break;
        }
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let candidate = x.sub(&g.scaled(step))?;
            let out = scatter(&candidate, bank, scat)?;
            let l = objective(&out, target)?;
            if l <= loss - config.armijo * step * g2 {
                accepted = Some((candidate, l));
                break;
            }
            step *= config.shrink;
        }
        let Some((candidate, l)) = accepted else {
            stop = StopReason::Stalled;
            break;
        };
        x = candidate;
        loss = l;
        history.push(loss);
        steps.push(step);
        step *= config.grow;
        tape = scatter_with_tape(&x, bank, scat)?;
    }
    if stop == StopReason::IterationCap && loss.sqrt() <= threshold {
        stop = StopReason::Threshold;
    }
    let run = ReconstructionRun {
        seed: config.seed,
        sigma_j: sigma,
        threshold,
        history,
        steps,
        converged: stop == StopReason::Threshold,
        stop,
    };
    Ok((x, run))
}
