//! Discrete time-frequency analysis and pseudo-differential calculus on
//! centered grids: short-time Fourier transforms, quantizations `Op_A`,
//! change of quantization, twisted products, and decay-envelope diagnostics
//! for Gelfand-Shilov symbol classes.
//!
//! Everything is built on self-dual centered grids with a unitary Fourier
//! convention; see [`grid`] for the transform bookkeeping and [`calculus`]
//! for the sign conventions used by the quantization calculus.

pub mod calculus;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod gsq1;
pub mod quantize;
pub mod stft;
pub mod windows;

pub use error::{Error, Result};
pub use grid::{
    fourier, l2_inner, l2_norm, partial_fourier, quadrature, spectral_derivative, Axis, Grid,
    SampledFunction,
};

/// Memory ceiling applied before allocating large phase-space arrays.
#[derive(Clone, Copy, Debug)]
pub struct MemLimit {
    pub max_bytes: usize,
}

impl Default for MemLimit {
    /// 2 GiB, the documented ceiling for opt-in two-dimensional work.
    fn default() -> Self {
        MemLimit {
            max_bytes: 2 * 1024 * 1024 * 1024,
        }
    }
}

impl MemLimit {
    pub fn from_mb(mb: usize) -> Self {
        MemLimit {
            max_bytes: mb * 1024 * 1024,
        }
    }

    pub fn check_values(&self, count: usize) -> Result<()> {
        let bytes = count.saturating_mul(16);
        if bytes > self.max_bytes {
            return Err(Error::MemoryBudget {
                requested: bytes,
                budget: self.max_bytes,
            });
        }
        Ok(())
    }
}
