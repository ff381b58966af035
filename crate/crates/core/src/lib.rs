//! Dynamics of a single spin coupled to a heat bath.
//!
//! The library covers both closed-form results and stochastic simulation
//! for a spin precessing in a static field while exchanging energy with an
//! Ohmic (delta-correlated, hard cutoff) or Drude (exponential memory)
//! bath:
//!
//! * thermal equilibrium through the Brillouin saturation curve,
//! * relaxation rate, precession frequency, mean transverse moments, and
//!   autocorrelation in closed form for both bath kernels,
//! * linear response in time and frequency, with the dissipative part
//!   recoverable from the autocorrelation spectrum and the reactive part
//!   from a principal-value transform,
//! * colored-noise synthesis and a Stratonovich midpoint integrator for
//!   full nonlinear Langevin trajectories with ensemble statistics.

pub mod drude;
pub mod equilibrium;
pub mod model;
pub mod noise;
pub mod ode;
pub mod ohmic;
pub mod sim;
pub mod spectral;

pub use drude::{
    autocorrelation_drude, derive_drude, drude_envelope_rate, drude_kernels, mean_moments_drude,
    DrudeDerived,
};
pub use equilibrium::{brillouin, equilibrium_mz, Alignment, EquilibriumResult};
pub use noise::{kernel_spectrum, psd, synthesize_noise, NoiseRecord, NoiseSpec};
pub use ode::{integrate_drude_ode, integrate_ohmic_ode, ohmic_ode_rates, OhmicOdeRates};
pub use sim::{
    ensemble_statistics, integrate_trajectory, zero_crossing_frequency, EnsembleStats,
    OhmicDamping,
};
pub use spectral::{
    correlation_spectrum, fdt_imag_response, kramers_kronig_real, FrequencyGrid,
};
pub use ohmic::{
    autocorrelation, classical_autocorrelation, classical_tau_r, derive_ohmic, mean_moments,
    response_family, response_real_omega, OhmicDerived, ResponseParts,
};
pub use model::{
    BathSpec, ComplexTimeSeries, CoreError, MomentConvention, Result, Series, SpinState,
    SpinSystem, ThermalEnv, TimeGrid,
};
