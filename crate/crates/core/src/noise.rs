//! Colored thermal noise: bath kernel spectra, the quantum power spectral
//! density, and spectral synthesis of Gaussian noise records.
//!
//! Synthesis colors a Hermitian white spectrum by sqrt(psd) and inverse
//! transforms it. The record is generated at twice the requested length
//! and the second half discarded, so the kept samples do not wrap the
//! circular correlation of the FFT back into the window.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::model::{BathSpec, CoreError, Result, ThermalEnv, TimeGrid};

/// Real part of the friction kernel transform at frequency omega, for a
/// coupled mass `mass` (1.0 for the bare spin problem).
///
/// Ohmic: flat 2*mass*gamma up to the hard cutoff, zero beyond.
/// Drude: Lorentzian mass*gamma / (1 + (omega*tau)^2).
pub fn kernel_spectrum(bath: &BathSpec, omega: f64, mass: f64) -> f64 {
    match *bath {
        BathSpec::Ohmic { gamma, cutoff } => {
            if omega.abs() <= cutoff {
                2.0 * mass * gamma
            } else {
                0.0
            }
        }
        BathSpec::Drude { gamma, tau } => {
            let x = omega * tau;
            mass * gamma / (1.0 + x * x)
        }
    }
}

/// What noise to synthesize: the bath kernel, the thermal environment,
/// the coupled mass, and whether to use the classical (equipartition)
/// spectrum instead of the quantum one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub bath: BathSpec,
    pub env: ThermalEnv,
    pub mass: f64,
    pub classical: bool,
}

impl NoiseSpec {
    /// Quantum noise statistics at unit mass.
    pub fn quantum(bath: BathSpec, env: ThermalEnv) -> Self {
        Self {
            bath,
            env,
            mass: 1.0,
            classical: false,
        }
    }

    /// Classical (white-in-occupation) noise statistics at unit mass.
    pub fn classical(bath: BathSpec, env: ThermalEnv) -> Self {
        Self {
            bath,
            env,
            mass: 1.0,
            classical: true,
        }
    }
}

/// Two-sided noise power spectral density at frequency omega,
///
///   S(omega) = ReK(|omega|) * hbar*omega * coth(hbar*omega / (2 kB T)),
///
/// evaluated as ReK * hbar * omega / tanh(omega/omega_th). The occupation
/// factor tends to 2 kB T as omega -> 0; below 1e-8 * omega_th the limit
/// value is used directly (the relative error of the limit there is about
/// 3e-17). With the classical flag the occupation is 2 kB T at every
/// frequency.
pub fn psd(spec: &NoiseSpec, omega: f64) -> f64 {
    let rek = kernel_spectrum(&spec.bath, omega, spec.mass);
    let env = &spec.env;
    if spec.classical {
        return 2.0 * env.kb * env.t * rek;
    }
    let om_th = env.omega_th();
    if omega.abs() < 1e-8 * om_th {
        2.0 * env.kb * env.t * rek
    } else {
        rek * env.hbar * omega / (omega / om_th).tanh()
    }
}

/// One synthesized record: three independent Cartesian noise components
/// sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub grid: TimeGrid,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fz: Vec<f64>,
}

/// Synthesize three independent noise components with the spectral
/// density of `spec` on `grid`, deterministically from `seed`.
///
/// The grid length must be a power of two. For an Ohmic bath the grid
/// must resolve the cutoff: pi/dt >= cutoff, otherwise the hard spectral
/// edge cannot be represented. Components are drawn sequentially (all of
/// fx, then fy, then fz) from one ChaCha8 stream, so a record is
/// reproducible byte for byte from its seed.
pub fn synthesize_noise(spec: &NoiseSpec, grid: &TimeGrid, seed: u64) -> Result<NoiseRecord> {
    if !grid.n.is_power_of_two() {
        return Err(CoreError::Invalid(format!(
            "grid length {} is not a power of two",
            grid.n
        )));
    }
    if let BathSpec::Ohmic { cutoff, .. } = spec.bath {
        let nyquist = std::f64::consts::PI / grid.dt;
        if nyquist < cutoff {
            return Err(CoreError::Nyquist(format!(
                "grid Nyquist frequency {nyquist} cannot represent the cutoff {cutoff}"
            )));
        }
    }

    let n = grid.n;
    let l = 2 * n;
    let domega = 2.0 * std::f64::consts::PI / (l as f64 * grid.dt);
    // sqrt(psd) at the nonnegative bin frequencies; the spectrum is even,
    // so the mirror bins reuse these values.
    let amp: Vec<f64> = (0..=l / 2)
        .map(|k| psd(spec, k as f64 * domega).sqrt())
        .collect();
    let norm = 1.0 / (l as f64 * grid.dt).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(l);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(3);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..3 {
        let mut xi = vec![Complex64::new(0.0, 0.0); l];
        let a0: f64 = rng.sample(StandardNormal);
        xi[0] = Complex64::new(a0 * amp[0], 0.0);
        for k in 1..l / 2 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let bin = Complex64::new(a * inv_sqrt2, b * inv_sqrt2) * amp[k];
            xi[k] = bin;
            xi[l - k] = bin.conj();
        }
        let ah: f64 = rng.sample(StandardNormal);
        xi[l / 2] = Complex64::new(ah * amp[l / 2], 0.0);

        ifft.process(&mut xi);
        components.push(xi[..n].iter().map(|z| z.re * norm).collect());
    }
    let fz = components.pop().expect("three components were pushed");
    let fy = components.pop().expect("three components were pushed");
    let fx = components.pop().expect("three components were pushed");
    Ok(NoiseRecord {
        grid: *grid,
        fx,
        fy,
        fz,
    })
}
