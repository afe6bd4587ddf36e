//! Simulation and verification laboratory for Volterra processes driven by
//! Lévy noise.
//!
//! The crate builds paths of the form `z_t = ∫_0^t k(t,s) dL_s` where `k` is a
//! (possibly singular) Volterra kernel and `L` is a Lévy process identified by
//! its characteristic exponent ψ, and then studies the occupation measure and
//! local time of those paths:
//!
//! - [`kernels`] — kernel families and their exact / quadrature α-energies,
//! - [`levy`] — characteristic exponents and increment samplers,
//! - [`pathsim`] — grid simulation and characteristic-function verification,
//! - [`occupation`] — occupation histograms, spectral occupation fields,
//!   Sobolev norms and space/time regularity estimators,
//! - [`lnd`] — numerical certification of the (α,ζ) local-non-determinism
//!   condition and the smallest admissible ζ,
//! - [`drift`] — synthetic Sobolev drifts and spectral convolution with local
//!   times on a periodic lattice,
//! - [`young`] — the sewing-based non-linear Young integrator, windowed Picard
//!   solver and flow-derivative equation.
//!
//! All samplers are deterministic functions of `(seed, replica)` via a
//! counter-based RNG ([`rng`]), so ensembles parallelize without stream
//! communication and runs are bit-reproducible.

pub mod drift;
pub mod error;
pub mod kernels;
pub mod lattice;
pub mod levy;
pub mod lnd;
pub mod occupation;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod young;

pub use error::{Error, Result};
pub use kernels::VolterraKernel;
pub use levy::LevyModel;
pub use pathsim::SamplePath;
