//! Direct numerical integration of the mean transverse dynamics.
//!
//! These integrators are deliberately independent of the closed-form
//! solutions: the Ohmic path starts from the implicit coupled pair and
//! de-couples it algebraically, the Drude path integrates the second-order
//! memory ODE as a four-component first-order system. Agreement between a
//! trajectory from here and the closed forms is therefore a genuine
//! cross-check, not a tautology.

use crate::model::{BathSpec, CoreError, Result, SpinSystem, TimeGrid};

/// Explicit de-coupled rates of the Ohmic mean dynamics,
/// mx' = -decay*mx + rotation*my, my' = -rotation*mx - decay*my.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicOdeRates {
    pub decay: f64,
    pub rotation: f64,
}

/// De-couple the implicit Ohmic pair
///
///   mx' - kappa*my' =  omega0*my
///   kappa*mx' + my' = -omega0*mx
///
/// by inverting the coupling matrix [[1, -kappa], [kappa, 1]] once. Its
/// determinant is 1 + kappa^2 >= 1 for any real kappa, so the singularity
/// guard cannot fire; it keeps the inversion contract explicit.
pub fn ohmic_ode_rates(sys: &SpinSystem, bath: &BathSpec, mz: f64) -> Result<OhmicOdeRates> {
    let (gamma, cutoff) = match *bath {
        BathSpec::Ohmic { gamma, cutoff } => (gamma, cutoff),
        BathSpec::Drude { .. } => {
            return Err(CoreError::Invalid(
                "Ohmic rates require an Ohmic bath".into(),
            ))
        }
    };
    if !mz.is_finite() {
        return Err(CoreError::Invalid(format!("mz must be finite, got {mz}")));
    }
    let kappa = 2.0 * gamma * sys.g * mz;
    let omega0 = sys.g * (sys.h0 + 2.0 * mz * cutoff * gamma);
    let det = 1.0 + kappa * kappa;
    if det.abs() <= 1e-12 {
        return Err(CoreError::Stiffness(format!(
            "coupling determinant {det} is numerically singular"
        )));
    }
    // Inverse is [[1, kappa], [-kappa, 1]] / det applied to (omega0*my,
    // -omega0*mx).
    Ok(OhmicOdeRates {
        decay: kappa * omega0 / det,
        rotation: omega0 / det,
    })
}

fn rk4_step2(f: impl Fn(f64, f64) -> (f64, f64), s: (f64, f64), dt: f64) -> (f64, f64) {
    let k1 = f(s.0, s.1);
    let k2 = f(s.0 + 0.5 * dt * k1.0, s.1 + 0.5 * dt * k1.1);
    let k3 = f(s.0 + 0.5 * dt * k2.0, s.1 + 0.5 * dt * k2.1);
    let k4 = f(s.0 + dt * k3.0, s.1 + dt * k3.1);
    (
        s.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn rk4_step4(f: impl Fn(&[f64; 4]) -> [f64; 4], s: &[f64; 4], dt: f64) -> [f64; 4] {
    let add = |a: &[f64; 4], b: &[f64; 4], w: f64| {
        [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2], a[3] + w * b[3]]
    };
    let k1 = f(s);
    let k2 = f(&add(s, &k1, 0.5 * dt));
    let k3 = f(&add(s, &k2, 0.5 * dt));
    let k4 = f(&add(s, &k3, dt));
    [
        s[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        s[3] + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    ]
}

/// Integrate the de-coupled Ohmic mean dynamics with classic fixed-step
/// RK4 over the grid. Sample 0 is the initial state.
pub fn integrate_ohmic_ode(
    sys: &SpinSystem,
    bath: &BathSpec,
    mz: f64,
    mx0: f64,
    my0: f64,
    grid: &TimeGrid,
) -> Result<Vec<(f64, f64)>> {
    let rates = ohmic_ode_rates(sys, bath, mz)?;
    let (a, b) = (rates.decay, rates.rotation);
    let f = |mx: f64, my: f64| (-a * mx + b * my, -b * mx - a * my);
    let mut out = Vec::with_capacity(grid.n);
    let mut s = (mx0, my0);
    out.push(s);
    for _ in 1..grid.n {
        s = rk4_step2(f, s, grid.dt);
        out.push(s);
    }
    Ok(out)
}

/// Derivative of the four-component Drude system
/// [mx, my, mx', my'] for coefficients a, b, c of the memory ODE.
fn drude_deriv(a: f64, b: f64, c: f64, s: &[f64; 4]) -> [f64; 4] {
    let [mx, my, vx, vy] = *s;
    [
        vx,
        vy,
        -a * vx + b * vy + c * my,
        -a * vy - b * vx - c * mx,
    ]
}

/// Integrate the Drude memory dynamics with fixed-step RK4 over the grid,
/// returning (mx, my) samples; sample 0 is the initial state.
///
/// The velocities start from the stationary-bath initial slope
/// u'(0) = -i*c*tau*u0 in components: vx0 = c*tau*my0, vy0 = -c*tau*mx0.
/// The step must resolve the fastest scale of the system:
/// dt * max(|b|, a, sqrt(|c|)) < 0.1.
pub fn integrate_drude_ode(
    sys: &SpinSystem,
    bath: &BathSpec,
    mz: f64,
    mx0: f64,
    my0: f64,
    grid: &TimeGrid,
) -> Result<Vec<(f64, f64)>> {
    let (gamma, tau) = match *bath {
        BathSpec::Drude { gamma, tau } => (gamma, tau),
        BathSpec::Ohmic { .. } => {
            return Err(CoreError::Invalid(
                "Drude integration requires a Drude bath".into(),
            ))
        }
    };
    if !mz.is_finite() {
        return Err(CoreError::Invalid(format!("mz must be finite, got {mz}")));
    }
    let a = 1.0 / tau;
    let b = sys.g * (sys.h0 + 3.0 * gamma * mz / tau);
    let c = (sys.g / tau) * (sys.h0 + 2.0 * gamma * mz / tau);
    let fastest = b.abs().max(a).max(c.abs().sqrt());
    if grid.dt * fastest >= 0.1 {
        return Err(CoreError::Step(format!(
            "dt = {} cannot resolve the fastest system scale {fastest}",
            grid.dt
        )));
    }
    let c_tau = c * tau;
    let mut s = [mx0, my0, c_tau * my0, -c_tau * mx0];
    let mut out = Vec::with_capacity(grid.n);
    out.push((s[0], s[1]));
    let f = |state: &[f64; 4]| drude_deriv(a, b, c, state);
    for _ in 1..grid.n {
        s = rk4_step4(f, &s, grid.dt);
        out.push((s[0], s[1]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drude::{derive_drude, mean_moments_drude};
    use crate::model::MomentConvention;
    use crate::ohmic::{derive_ohmic, mean_moments};

    fn spin_half(h0: f64) -> SpinSystem {
        SpinSystem::new(0.5, 1.0, h0, MomentConvention::default()).unwrap()
    }

    const MZ_MODERATE: f64 = 0.18997448112761244;

    #[test]
    fn ohmic_rates_match_the_closed_form_coefficients() {
        let sys = spin_half(8.0);
        let bath = BathSpec::ohmic(5.0, 1e6).unwrap();
        let r = ohmic_ode_rates(&sys, &bath, MZ_MODERATE).unwrap();
        assert!((r.decay / 783037.92196078253 - 1.0).abs() < 1e-12);
        assert!((r.rotation / 412180.58199868898 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_determinant_stays_regular_at_extreme_friction() {
        let sys = spin_half(8.0);
        let bath = BathSpec::ohmic(1e8, 1e6).unwrap();
        assert!(ohmic_ode_rates(&sys, &bath, 0.49).is_ok());
    }

    #[test]
    fn ohmic_trajectory_matches_the_closed_form() {
        // Strong-friction moderate-temperature point, five relaxation
        // times, 800 steps per precession period. The error is measured
        // against the decaying envelope so late, small samples count at
        // their own scale.
        let sys = spin_half(8.0);
        let bath = BathSpec::ohmic(5.0, 1e6).unwrap();
        let mz = MZ_MODERATE;
        let m = sys.total_moment();
        let mxy = (m * m - mz * mz).sqrt();
        let (mx0, my0) = ((3.0f64 / 5.0).sqrt() * mxy, (2.0f64 / 5.0).sqrt() * mxy);
        let d = derive_ohmic(&sys, &bath, mz, mx0, my0).unwrap();
        let period = 2.0 * std::f64::consts::PI / d.omega_l;
        let dt = period / 800.0;
        let n = (5.0 * d.tau_r / dt).ceil() as usize + 1;
        let grid = TimeGrid::new(0.0, dt, n).unwrap();
        let traj = integrate_ohmic_ode(&sys, &bath, mz, mx0, my0, &grid).unwrap();
        let mut worst = 0.0f64;
        for (k, &(mx, my)) in traj.iter().enumerate() {
            let t = grid.time(k);
            let (cx, cy) = mean_moments(&d, t);
            let envelope = mxy * (-d.decay_rate * t).exp();
            let err = ((mx - cx).abs()).max((my - cy).abs()) / envelope;
            worst = worst.max(err);
        }
        assert!(worst < 1e-8, "envelope-relative error {worst}");
    }

    #[test]
    fn ohmic_error_falls_at_fourth_order_on_step_halving() {
        let sys = spin_half(8.0);
        let bath = BathSpec::ohmic(5.0, 1e6).unwrap();
        let mz = MZ_MODERATE;
        let d = derive_ohmic(&sys, &bath, mz, 0.5, 0.5).unwrap();
        let period = 2.0 * std::f64::consts::PI / d.omega_l;
        let horizon = 5.0 * d.tau_r;
        let max_err = |steps_per_period: usize| {
            let dt = period / steps_per_period as f64;
            let n = (horizon / dt).ceil() as usize + 1;
            let grid = TimeGrid::new(0.0, dt, n).unwrap();
            let traj = integrate_ohmic_ode(&sys, &bath, mz, 0.5, 0.5, &grid).unwrap();
            let mut worst = 0.0f64;
            for (k, &(mx, my)) in traj.iter().enumerate() {
                let (cx, cy) = mean_moments(&d, grid.time(k));
                worst = worst.max((mx - cx).abs()).max((my - cy).abs());
            }
            worst
        };
        let coarse = max_err(200);
        let fine = max_err(400);
        assert!(
            coarse / fine >= 12.0,
            "halving gained only {}x (coarse {coarse}, fine {fine})",
            coarse / fine
        );
    }

    #[test]
    fn drude_trajectory_matches_the_closed_kernel_short_memory() {
        let sys = spin_half(8.0);
        let bath = BathSpec::drude(5.0, 0.1).unwrap();
        let grid = TimeGrid::new(0.0, 1.0 / 4096.0, 4097).unwrap();
        let traj = integrate_drude_ode(&sys, &bath, MZ_MODERATE, 0.3, -0.2, &grid).unwrap();
        let d = derive_drude(&sys, &bath, MZ_MODERATE, 0.3, -0.2).unwrap();
        let mut worst = 0.0f64;
        for (k, &(mx, my)) in traj.iter().enumerate() {
            let (cx, cy) = mean_moments_drude(&d, grid.time(k)).unwrap();
            worst = worst.max((mx - cx).abs()).max((my - cy).abs());
        }
        assert!(worst < 1e-8, "max error {worst}");
    }

    #[test]
    fn drude_error_falls_at_fourth_order_on_step_halving() {
        let sys = spin_half(8.0);
        let bath = BathSpec::drude(5.0, 5.0).unwrap();
        let d = derive_drude(&sys, &bath, MZ_MODERATE, 0.3, -0.2).unwrap();
        let max_err = |n_steps: usize| {
            let grid = TimeGrid::new(0.0, 5.0 / n_steps as f64, n_steps + 1).unwrap();
            let traj = integrate_drude_ode(&sys, &bath, MZ_MODERATE, 0.3, -0.2, &grid).unwrap();
            let mut worst = 0.0f64;
            for (k, &(mx, my)) in traj.iter().enumerate() {
                let (cx, cy) = mean_moments_drude(&d, grid.time(k)).unwrap();
                worst = worst.max((mx - cx).abs()).max((my - cy).abs());
            }
            worst
        };
        let coarse = max_err(2048);
        let fine = max_err(4096);
        assert!(
            coarse / fine >= 12.0,
            "halving gained only {}x (coarse {coarse}, fine {fine})",
            coarse / fine
        );
    }

    #[test]
    fn decoupled_drude_integration_is_time_reversible() {
        // gamma = 0 leaves pure precession; running RK4 forward ten
        // periods and then backward with the negated step must return to
        // the start far below the stated 1e-8. The memory time is kept
        // long (a * T ~ 2) because the backward pass re-amplifies rounding
        // noise in the decayed mode by e^{a T}.
        let sys = spin_half(3.0);
        let tau = 10.0;
        let a = 1.0 / tau;
        let b = sys.g * sys.h0;
        let c = (sys.g / tau) * sys.h0;
        let c_tau = c * tau;
        let period = 2.0 * std::f64::consts::PI / b;
        let dt = period / 512.0;
        let steps = 5120;
        let f = |state: &[f64; 4]| drude_deriv(a, b, c, state);
        let start = [0.3, -0.1, c_tau * -0.1, -c_tau * 0.3];
        let mut s = start;
        for _ in 0..steps {
            s = rk4_step4(f, &s, dt);
        }
        for _ in 0..steps {
            s = rk4_step4(f, &s, -dt);
        }
        for i in 0..4 {
            assert!(
                (s[i] - start[i]).abs() < 1e-8,
                "component {i} drifted by {}",
                (s[i] - start[i]).abs()
            );
        }
    }

    #[test]
    fn decoupled_drude_integration_preserves_the_amplitude() {
        let sys = spin_half(3.0);
        let bath = BathSpec::drude(0.0, 0.8).unwrap();
        let period = 2.0 * std::f64::consts::PI / (sys.g * sys.h0);
        let dt = period / 512.0;
        let n = 5121;
        let grid = TimeGrid::new(0.0, dt, n).unwrap();
        let traj = integrate_drude_ode(&sys, &bath, 0.2, 0.3, -0.1, &grid).unwrap();
        let amp0 = 0.3f64 * 0.3 + 0.1 * 0.1;
        for &(mx, my) in &traj {
            assert!(((mx * mx + my * my) - amp0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_initial_state_stays_exactly_zero() {
        let sys = spin_half(8.0);
        let bath = BathSpec::drude(5.0, 0.5).unwrap();
        let grid = TimeGrid::new(0.0, 1e-3, 1000).unwrap();
        let traj = integrate_drude_ode(&sys, &bath, 0.3, 0.0, 0.0, &grid).unwrap();
        assert!(traj.iter().all(|&(mx, my)| mx == 0.0 && my == 0.0));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let sys = spin_half(8.0);
        let bath = BathSpec::drude(5.0, 0.1).unwrap();
        // b is about 36.5 here, so dt = 0.01 crosses the 0.1 product bound.
        let grid = TimeGrid::new(0.0, 0.01, 100).unwrap();
        assert!(matches!(
            integrate_drude_ode(&sys, &bath, MZ_MODERATE, 0.1, 0.0, &grid),
            Err(CoreError::Step(_))
        ));
    }
}
