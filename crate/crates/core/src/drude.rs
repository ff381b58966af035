//! Closed-form mean dynamics and autocorrelation for the Drude bath
//! (exponential memory kernel).
//!
//! The memory turns the transverse equation of motion into a second-order
//! complex ODE for u = mx + i*my,
//!
//!   u'' + (a + i b) u' + i c u = 0,    u(0) = u0,   u'(0) = -i c tau u0,
//!
//! with a = 1/tau the inverse memory time, b the memory-dressed precession
//! frequency, and c the memory-scaled field coupling. The initial slope is
//! fixed by the bath starting in its stationary state, so the kernel below
//! is the exact propagator of that initial-value problem, normalized to
//! K(0) = 1. The conjugate branch propagates conj(u) with the mirrored
//! coefficients; mixing the two recovers real mx and my.

use num_complex::Complex64;

use crate::model::{BathSpec, CoreError, Result, SpinSystem};

/// Coefficients and characteristic roots of the transverse memory ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeDerived {
    /// Longitudinal moment the dynamics is linearized around.
    pub mz: f64,
    /// Total moment magnitude M.
    pub m_total: f64,
    /// Inverse memory time 1/tau.
    pub a: f64,
    /// Memory-dressed precession frequency g*(H0 + 3*gamma*mz/tau).
    pub b: f64,
    /// Memory-scaled coupling (g/tau)*(H0 + 2*gamma*mz/tau).
    pub c: f64,
    /// c*tau, the initial-slope frequency of the kernel.
    pub c_tau: f64,
    /// Root of the forward branch: sqrt((a + ib)^2 - 4ic).
    pub r1: Complex64,
    /// Root of the conjugate branch: sqrt((a - ib)^2 + 4ic). Always the
    /// conjugate of r1 (checked at construction).
    pub r2: Complex64,
    /// atan((a + ib)/r1); pi/2 when |r1| is below the degeneracy guard.
    pub phi1: Complex64,
    /// atan((a - ib)/r2), the conjugate of phi1 (checked at construction).
    pub phi2: Complex64,
    /// Initial transverse components the kernels propagate.
    pub mx0: f64,
    pub my0: f64,
}

/// Threshold below which the characteristic roots are treated as merged
/// and the kernel switches to its small-root series.
const ROOT_DEGENERACY_GUARD: f64 = 1e-8;

/// Build the memory-ODE coefficients from the system, a Drude bath, the
/// frozen longitudinal moment, and the initial transverse components.
pub fn derive_drude(
    sys: &SpinSystem,
    bath: &BathSpec,
    mz: f64,
    mx0: f64,
    my0: f64,
) -> Result<DrudeDerived> {
    let (gamma, tau) = match *bath {
        BathSpec::Drude { gamma, tau } => (gamma, tau),
        BathSpec::Ohmic { .. } => {
            return Err(CoreError::Invalid(
                "Drude closed forms require a Drude bath".into(),
            ))
        }
    };
    if !(mz.is_finite() && mx0.is_finite() && my0.is_finite()) {
        return Err(CoreError::Invalid(
            "moment components must be finite".into(),
        ));
    }
    let m = sys.total_moment();
    if mz.abs() > m + 1e-12 {
        return Err(CoreError::Domain(format!(
            "|mz| = {} exceeds the total moment M = {m}",
            mz.abs()
        )));
    }
    let budget = m * m - mz * mz;
    if mx0 * mx0 + my0 * my0 > budget + 1e-12 {
        return Err(CoreError::Domain(format!(
            "initial transverse power {} exceeds the budget M^2 - mz^2 = {budget}",
            mx0 * mx0 + my0 * my0
        )));
    }

    let a = 1.0 / tau;
    let b = sys.g * (sys.h0 + 3.0 * gamma * mz / tau);
    let c = (sys.g / tau) * (sys.h0 + 2.0 * gamma * mz / tau);
    let c_tau = c * tau;
    let fwd = Complex64::new(a, b);
    let bwd = Complex64::new(a, -b);
    let i = Complex64::i();
    let r1 = (fwd * fwd - 4.0 * i * c).sqrt();
    let r2 = (bwd * bwd + 4.0 * i * c).sqrt();
    let phi1 = if r1.norm() < ROOT_DEGENERACY_GUARD {
        Complex64::new(std::f64::consts::FRAC_PI_2, 0.0)
    } else {
        (fwd / r1).atan()
    };
    let phi2 = if r2.norm() < ROOT_DEGENERACY_GUARD {
        Complex64::new(std::f64::consts::FRAC_PI_2, 0.0)
    } else {
        (bwd / r2).atan()
    };

    // The two branches propagate conjugate quantities, so their roots and
    // phases must mirror each other; a violation means the square roots
    // landed on different branch cuts.
    if (r2 - r1.conj()).norm() > 1e-12 * (r1.norm() + 1.0) {
        return Err(CoreError::Numerical(format!(
            "conjugate root mismatch: r1 = {r1}, r2 = {r2}"
        )));
    }
    if (phi2 - phi1.conj()).norm() > 1e-12 * (phi1.norm() + 1.0) {
        return Err(CoreError::Numerical(format!(
            "conjugate phase mismatch: phi1 = {phi1}, phi2 = {phi2}"
        )));
    }

    Ok(DrudeDerived {
        mz,
        m_total: m,
        a,
        b,
        c,
        c_tau,
        r1,
        r2,
        phi1,
        phi2,
        mx0,
        my0,
    })
}

/// Asymptotic decay rate of the kernel envelope, (a - Re r1)/2: the slower
/// of the two characteristic modes. Nonnegative for aligned moments
/// (mz >= 0), approaching zero as mz -> 0.
pub fn drude_envelope_rate(d: &DrudeDerived) -> f64 {
    0.5 * (d.a - d.r1.re)
}

/// One branch of the propagator. head = a + ib (or its mirror), nu is the
/// slope coefficient head - 2i*c_tau (or its mirror), r the matching root.
///
/// The kernel is assembled per characteristic mode,
///
///   K(t) = e^{s1 t} (1 + mu)/2 + e^{s2 t} (1 - mu)/2,
///   s1,2 = (-head +- r)/2,   mu = nu / r,
///
/// so each exponent is an actual mode rate and no intermediate cosh can
/// overflow even when the two rates are far apart. When the roots merge
/// (|r| below the guard) mu diverges and the mode split breaks down; the
/// series in z = r t/2 covers that case with error O(z^4).
fn kernel_branch(head: Complex64, nu: Complex64, r: Complex64, t: f64) -> Complex64 {
    let half_t = 0.5 * t;
    if r.norm() < ROOT_DEGENERACY_GUARD {
        let z = r * half_t;
        let z2 = z * z;
        let one = Complex64::new(1.0, 0.0);
        (-head * half_t).exp() * (one + 0.5 * z2 + nu * half_t * (one + z2 / 6.0))
    } else {
        let mu = nu / r;
        let s1 = (r - head) * half_t;
        let s2 = (-r - head) * half_t;
        let one = Complex64::new(1.0, 0.0);
        0.5 * (s1.exp() * (one + mu) + s2.exp() * (one - mu))
    }
}

/// The two conjugate-branch propagators at time t, normalized to
/// K(0) = 1. The forward branch propagates u = mx + i*my, the conjugate
/// branch propagates conj(u); for real coefficients they are exact
/// conjugates of each other.
pub fn drude_kernels(d: &DrudeDerived, t: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let fwd = Complex64::new(d.a, d.b);
    let bwd = Complex64::new(d.a, -d.b);
    let nu1 = fwd - 2.0 * i * d.c_tau;
    let nu2 = bwd + 2.0 * i * d.c_tau;
    (
        kernel_branch(fwd, nu1, d.r1, t),
        kernel_branch(bwd, nu2, d.r2, t),
    )
}

/// Mean transverse moments at time t under the memory kernel. The two
/// branches are mixed back into real components,
///
///   mx = (K+ u0 + K- conj(u0)) / 2,
///   my = (K+ u0 - K- conj(u0)) / (2i),
///
/// whose imaginary parts must cancel between the branches; a residue above
/// 1e-9 of the value means the branches lost conjugacy.
pub fn mean_moments_drude(d: &DrudeDerived, t: f64) -> Result<(f64, f64)> {
    let (kp, km) = drude_kernels(d, t);
    let u0 = Complex64::new(d.mx0, d.my0);
    let mx_c = 0.5 * (kp * u0 + km * u0.conj());
    let my_c = (kp * u0 - km * u0.conj()) / Complex64::new(0.0, 2.0);
    if mx_c.im.abs() > 1e-9 * (mx_c.norm() + 1e-30) {
        return Err(CoreError::Numerical(format!(
            "mx branch residue {} did not cancel at t = {t}",
            mx_c.im
        )));
    }
    if my_c.im.abs() > 1e-9 * (my_c.norm() + 1e-30) {
        return Err(CoreError::Numerical(format!(
            "my branch residue {} did not cancel at t = {t}",
            my_c.im
        )));
    }
    Ok((mx_c.re, my_c.re))
}

/// Symmetrized moment autocorrelation under the memory kernel,
///
///   C(t) = mz^2 + (mx0^2 + my0^2) * Re[(K+ + K-)/2].
///
/// The transverse weight is the initial transverse power carried by the
/// derived state.
pub fn autocorrelation_drude(d: &DrudeDerived, t: f64) -> Result<f64> {
    let (kp, km) = drude_kernels(d, t);
    let avg = 0.5 * (kp + km);
    if avg.im.abs() > 1e-9 * (avg.norm() + 1e-30) {
        return Err(CoreError::Numerical(format!(
            "kernel average residue {} did not cancel at t = {t}",
            avg.im
        )));
    }
    let w = d.mx0 * d.mx0 + d.my0 * d.my0;
    Ok(d.mz * d.mz + w * avg.re)
}
