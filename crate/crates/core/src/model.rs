//! Shared domain types: the spin system, bath kernels, thermal environment,
//! uniform time grids, and sampled series.
//!
//! All quantities live in natural units (moments in Bohr magnetons, fields
//! and frequencies in the same time unit); `ThermalEnv` carries kB and hbar
//! explicitly so nothing below hardcodes a unit system.

use num_complex::Complex64;
use thiserror::Error;

/// Error type shared by the whole library. Each variant corresponds to a
/// distinct failure mode of the numerical contracts.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameter combination where a quantity's defining expression has a
    /// genuine singularity (for example a pole on the real frequency axis).
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    /// The algebraic de-coupling matrix of an implicit ODE system is
    /// numerically singular.
    #[error("stiff coupling: {0}")]
    Stiffness(String),
    /// Step size violates the stepper's sanity bound.
    #[error("step size too large: {0}")]
    Step(String),
    /// Time step cannot represent the spectral support of the noise.
    #[error("Nyquist violation: {0}")]
    Nyquist(String),
    /// Sampled window too short for the requested transform.
    #[error("window too short: {0}")]
    Window(String),
    /// Evaluation too close to, or outside, a grid boundary.
    #[error("grid edge: {0}")]
    Edge(String),
    /// Internal consistency check failed (for example conjugate branches
    /// that should cancel imaginary parts did not).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A closed-form evaluation would overflow even after exponent shifting.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Malformed argument (wrong lengths, non-finite values, bad enums).
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

/// Convention for the total moment magnitude M built from S and g.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentConvention {
    /// M = g * sqrt(S(S+1)), the quantum spin magnitude. Keeps the
    /// transverse amplitude nonzero even when mz saturates at g*S, which is
    /// the regime the low-temperature dynamics needs.
    #[default]
    SqrtSSplus1,
    /// M = g * S, the classical saturation magnitude.
    SOnly,
}

/// A single spin with gyromagnetic ratio g in a static field H0 along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystem {
    /// Spin quantum number, a positive half-integer.
    pub s: f64,
    /// Gyromagnetic ratio, positive.
    pub g: f64,
    /// Static field along z, nonnegative.
    pub h0: f64,
    pub convention: MomentConvention,
}

impl SpinSystem {
    pub fn new(s: f64, g: f64, h0: f64, convention: MomentConvention) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 || ((2.0 * s).round() - 2.0 * s).abs() > 1e-9 {
            return Err(CoreError::Invalid(format!(
                "S must be a positive half-integer, got {s}"
            )));
        }
        if !g.is_finite() || g <= 0.0 {
            return Err(CoreError::Invalid(format!("g must be positive, got {g}")));
        }
        if !h0.is_finite() || h0 < 0.0 {
            return Err(CoreError::Invalid(format!(
                "H0 must be nonnegative, got {h0}"
            )));
        }
        Ok(Self { s, g, h0, convention })
    }

    /// Total moment magnitude M under the selected convention.
    pub fn total_moment(&self) -> f64 {
        match self.convention {
            MomentConvention::SqrtSSplus1 => self.g * (self.s * (self.s + 1.0)).sqrt(),
            MomentConvention::SOnly => self.g * self.s,
        }
    }

    /// Transverse amplitude sqrt(M^2 - mz^2).
    ///
    /// |mz| may exceed M by at most 1e-12 (rounding from upstream formulas);
    /// such values clamp to zero transverse amplitude. Larger excess is a
    /// domain error.
    pub fn transverse_moment(&self, mz: f64) -> Result<f64> {
        let m = self.total_moment();
        if !mz.is_finite() {
            return Err(CoreError::Domain(format!("mz must be finite, got {mz}")));
        }
        if mz.abs() > m + 1e-12 {
            return Err(CoreError::Domain(format!(
                "|mz| = {} exceeds the total moment M = {m}",
                mz.abs()
            )));
        }
        Ok((m * m - mz * mz).max(0.0).sqrt())
    }
}

/// Heat-bath description through its friction kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathSpec {
    /// Delta-correlated kernel 2*gamma*delta(t) with a hard spectral cutoff:
    /// the kernel transform is flat up to |omega| = cutoff and zero beyond.
    Ohmic { gamma: f64, cutoff: f64 },
    /// Exponential memory kernel (gamma/tau)*exp(-t/tau) for t >= 0.
    Drude { gamma: f64, tau: f64 },
}

impl BathSpec {
    pub fn ohmic(gamma: f64, cutoff: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(CoreError::Invalid(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        if !cutoff.is_finite() || cutoff <= 0.0 {
            return Err(CoreError::Invalid(format!(
                "cutoff must be positive, got {cutoff}"
            )));
        }
        Ok(BathSpec::Ohmic { gamma, cutoff })
    }

    pub fn drude(gamma: f64, tau: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(CoreError::Invalid(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(CoreError::Invalid(format!(
                "tau must be positive, got {tau}"
            )));
        }
        Ok(BathSpec::Drude { gamma, tau })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            BathSpec::Ohmic { gamma, .. } | BathSpec::Drude { gamma, .. } => gamma,
        }
    }
}

/// Temperature plus the unit constants it is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalEnv {
    pub t: f64,
    pub kb: f64,
    pub hbar: f64,
}

impl ThermalEnv {
    pub fn new(t: f64, kb: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("T", t), ("kB", kb), ("hbar", hbar)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self { t, kb, hbar })
    }

    /// Thermal frequency 2*kB*T/hbar. Hyperbolic factors in the response
    /// and noise formulas take arguments scaled by this frequency.
    pub fn omega_th(&self) -> f64 {
        2.0 * self.kb * self.t / self.hbar
    }
}

/// Uniform time grid. Sample k sits exactly at t0 + k*dt; the grid never
/// accumulates a running sum, so there is no drift for large k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(CoreError::Invalid(format!("t0 must be finite, got {t0}")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(CoreError::Invalid(format!("dt must be positive, got {dt}")));
        }
        if n < 2 {
            return Err(CoreError::Invalid(format!("n must be at least 2, got {n}")));
        }
        Ok(Self { t0, dt, n })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + (k as f64) * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.time(k))
    }
}

/// Instantaneous spin moment vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl SpinState {
    pub fn new(mx: f64, my: f64, mz: f64) -> Result<Self> {
        if !(mx.is_finite() && my.is_finite() && mz.is_finite()) {
            return Err(CoreError::Invalid(
                "spin state components must be finite".into(),
            ));
        }
        Ok(Self { mx, my, mz })
    }

    pub fn norm(&self) -> f64 {
        (self.mx * self.mx + self.my * self.my + self.mz * self.mz).sqrt()
    }
}

/// Real samples on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::Invalid(format!(
                "series has {} values for a grid of {} samples",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }
}

/// Complex samples on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTimeSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl ComplexTimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(CoreError::Invalid(format!(
                "series has {} values for a grid of {} samples",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }
}
