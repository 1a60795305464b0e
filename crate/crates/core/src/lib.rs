//! Wavelet scattering transforms on periodic 1D and 2D grids.
//!
//! The crate is organized bottom-up: [`signal`] grids and FFT convolution,
//! [`filterbank`] Morlet banks with frame bounds, the [`wavelet`] transform and
//! its inverse, the [`scattering`] cascade with its gradient, and harnesses for
//! deformation stability ([`deform`]), reconstruction ([`inverse`]), moments of
//! stationary processes ([`moments`]) and linear classification ([`classify`]).

pub mod classify;
pub mod deform;
pub mod error;
pub mod fft;
pub mod filterbank;
pub mod inverse;
pub mod io;
pub mod moments;
pub mod scattering;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use filterbank::{build_bank_1d, build_default, build_morlet_2d, FilterBank, FrequencyKernel, KernelKind};
pub use scattering::{scatter, Rho, ScatteringConfig, ScatteringOutput, ScatteringPath};
pub use signal::{Shape, Signal};
pub use wavelet::Oversampling;
