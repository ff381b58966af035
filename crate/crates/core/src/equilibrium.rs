//! Thermal equilibrium of the spin in a static field.
//!
//! The longitudinal moment relaxes to the paramagnetic saturation curve:
//! the Brillouin function of the dimensionless field-to-temperature ratio.

use crate::model::{Result, SpinSystem, ThermalEnv};

/// Orientation the longitudinal moment relaxes toward for a positive field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    /// Moment along +z (the convention used throughout the closed forms).
    #[default]
    Positive,
    /// Moment along -z.
    Negative,
}

/// Output of [`equilibrium_mz`]: the thermal argument, the saturation
/// fraction, and the resulting longitudinal moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumResult {
    /// Dimensionless argument x = S*H0 / (kB*T).
    pub x: f64,
    /// Brillouin function value at x, in [0, 1).
    pub bs: f64,
    /// Longitudinal moment, signed by the alignment convention.
    pub mz: f64,
}

fn coth(y: f64) -> f64 {
    1.0 / y.tanh()
}

/// Brillouin function for spin quantum number S.
///
/// B_S(x) = a*coth(a*x) - b*coth(b*x) with a = (2S+1)/(2S) and b = 1/(2S).
/// Each coth term diverges like 1/x near the origin, so for |x| < 1e-6 the
/// difference is evaluated through its odd Taylor series instead; three
/// terms leave a truncation error far below f64 resolution at the switch
/// point, while the direct difference would lose roughly six digits to
/// cancellation there.
pub fn brillouin(s: f64, x: f64) -> f64 {
    let a = (2.0 * s + 1.0) / (2.0 * s);
    let b = 1.0 / (2.0 * s);
    if x.abs() < 1e-6 {
        let (a2, b2) = (a * a, b * b);
        let (a4, b4) = (a2 * a2, b2 * b2);
        let (a6, b6) = (a4 * a2, b4 * b2);
        let x2 = x * x;
        x * ((a2 - b2) / 3.0 - x2 * ((a4 - b4) / 45.0 - x2 * 2.0 * (a6 - b6) / 945.0))
    } else {
        a * coth(a * x) - b * coth(b * x)
    }
}

/// Equilibrium longitudinal moment of the spin at temperature env.t.
///
/// The thermal argument is x = S*H0 / (kB*T); the moment magnitude is
/// g*S*B_S(x), signed by the alignment convention.
pub fn equilibrium_mz(
    sys: &SpinSystem,
    env: &ThermalEnv,
    alignment: Alignment,
) -> Result<EquilibriumResult> {
    let x = sys.s * sys.h0 / (env.kb * env.t);
    let bs = brillouin(sys.s, x);
    let sign = match alignment {
        Alignment::Positive => 1.0,
        Alignment::Negative => -1.0,
    };
    Ok(EquilibriumResult {
        x,
        bs,
        mz: sign * sys.g * sys.s * bs,
    })
}
