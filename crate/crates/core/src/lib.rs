//! Energy spectra and 1/f-noise dephasing times of the split-junction
//! transmon qubit.
//!
//! The crate builds the flux-tuned charge-basis Hamiltonian, diagonalizes
//! it with a refined tridiagonal solver, differentiates the 0→1 transition
//! against charge, flux and critical-current noise (finite differences
//! cross-checked by first-order perturbation theory), converts slopes into
//! dephasing times, and sweeps everything over EJΣ/Ec with calibrated
//! scaling-law overlays.
//!
//! The spectral core is generic over the scalar (`f32`/`f64`, see
//! [`scalar::Scalar`]); the sweep engine and I/O work at `f64`, and the
//! `*64` aliases below name the concrete types the CLI uses.

pub mod asymptotics;
pub mod circuit;
pub mod config;
pub mod error;
pub mod io;
mod linalg;
pub mod noise;
pub mod scalar;
pub mod spectral;
pub mod sweep;

pub use circuit::{build_hamiltonian, CircuitParams, HermitianMatrix, TruncationConfig};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use spectral::{
    charge_dispersion, converge_ncut, eigen_spectrum, transition_energy, DispersionResult,
    SpectrumResult,
};

/// Concrete aliases at the CLI's working precision.
pub type CircuitParams64 = CircuitParams<f64>;
pub type TruncationConfig64 = TruncationConfig<f64>;
pub type HermitianMatrix64 = HermitianMatrix<f64>;
pub type SpectrumResult64 = SpectrumResult<f64>;
pub type DispersionResult64 = DispersionResult<f64>;
pub type NoiseChannel64 = noise::NoiseChannel<f64>;
pub type OperatingPoint64 = noise::OperatingPoint<f64>;
pub type CoherenceTime64 = noise::CoherenceTime<f64>;
pub type T2Result64 = noise::T2Result<f64>;
pub type RateBudget64 = noise::RateBudget<f64>;
pub type AsymptoticModel64 = asymptotics::AsymptoticModel<f64>;
