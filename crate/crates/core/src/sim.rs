//! Stochastic moment trajectories and ensemble statistics.
//!
//! A trajectory is a sequence of exact rotations: each step rotates the
//! moment around the instantaneous angular-velocity vector, so the moment
//! norm is conserved to rounding no matter how rough the noise is. The
//! noise enters through the effective field evaluated at the step
//! midpoint (Stratonovich convention): rotate half a step, re-evaluate
//! the angular velocity there, then apply the full step from the start.

use rayon::prelude::*;

use crate::model::{BathSpec, CoreError, Result, SpinState, SpinSystem, TimeGrid};
use crate::noise::{synthesize_noise, NoiseRecord, NoiseSpec};

/// Weight of the delta-correlated Ohmic kernel in the damping field.
///
/// The kernel 2*gamma*delta(t) carries weight 2*gamma integrated over the
/// whole line; sampling it only over the causal half-line halves that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OhmicDamping {
    /// lambda = 2*gamma*g, the full kernel weight.
    #[default]
    FullDelta,
    /// lambda = gamma*g, the half-line weight.
    HalfDelta,
}

type Vec3 = [f64; 3];

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Rotate mv around w by angle |w|*dt (Rodrigues form). A zero angular
/// velocity leaves the vector untouched; the tiny floor on the axis
/// normalization only prevents 0/0 in that case.
fn rotate(mv: Vec3, w: Vec3, dt: f64) -> Vec3 {
    let wn = norm(w);
    let ang = wn * dt;
    let inv = 1.0 / wn.max(1e-300);
    let axis = [w[0] * inv, w[1] * inv, w[2] * inv];
    let (sa, ca) = ang.sin_cos();
    let axm = cross(axis, mv);
    let along = dot(axis, mv) * (1.0 - ca);
    [
        mv[0] * ca + axm[0] * sa + axis[0] * along,
        mv[1] * ca + axm[1] * sa + axis[1] * along,
        mv[2] * ca + axm[2] * sa + axis[2] * along,
    ]
}

/// Integrate one noisy moment trajectory over the noise record's grid.
/// Sample 0 is the initial state; each step uses the midpoint-averaged
/// noise (f_k + f_{k+1})/2.
///
/// Ohmic baths damp through the instantaneous field,
///   Omega = -g_eff * (h + lambda * (h x M)),   h = H0 z - f,
/// with g_eff = g / (1 + lambda^2 |M|^2) fixed by the conserved norm.
/// Drude baths damp through an exponentially fading memory of the moment
/// motion,
///   Omega = -g * (H0 z - f - P),
///   P_{k+1} = e^{-dt/tau} P_k + (gamma/tau) e^{-dt/(2 tau)} (M_{k+1} - M_k).
///
/// The step must resolve the total field: dt * g * (H0 + max|f|) <= 0.5.
pub fn integrate_trajectory(
    state0: &SpinState,
    noise: &NoiseRecord,
    bath: &BathSpec,
    sys: &SpinSystem,
    damping: OhmicDamping,
) -> Result<Vec<SpinState>> {
    let m0 = [state0.mx, state0.my, state0.mz];
    if norm(m0) == 0.0 {
        return Err(CoreError::Invalid(
            "initial moment must have a nonzero norm".into(),
        ));
    }
    let n = noise.grid.n;
    if noise.fx.len() != n || noise.fy.len() != n || noise.fz.len() != n {
        return Err(CoreError::Invalid(
            "noise record components do not match its grid".into(),
        ));
    }
    let dt = noise.grid.dt;
    let fmax = (0..n)
        .map(|k| norm([noise.fx[k], noise.fy[k], noise.fz[k]]))
        .fold(0.0f64, f64::max);
    if dt * sys.g * (sys.h0 + fmax) > 0.5 {
        return Err(CoreError::Step(format!(
            "dt = {dt} cannot resolve the total field {} at g = {}",
            sys.h0 + fmax,
            sys.g
        )));
    }

    let mut out = Vec::with_capacity(n);
    out.push(*state0);
    let mut m = m0;
    match *bath {
        BathSpec::Ohmic { gamma, .. } => {
            let lambda = match damping {
                OhmicDamping::FullDelta => 2.0 * gamma * sys.g,
                OhmicDamping::HalfDelta => gamma * sys.g,
            };
            let m2 = dot(m0, m0);
            let g_eff = sys.g / (1.0 + lambda * lambda * m2);
            for k in 0..n - 1 {
                let h = [
                    -0.5 * (noise.fx[k] + noise.fx[k + 1]),
                    -0.5 * (noise.fy[k] + noise.fy[k + 1]),
                    sys.h0 - 0.5 * (noise.fz[k] + noise.fz[k + 1]),
                ];
                let omega_of = |mv: Vec3| {
                    let hxm = cross(h, mv);
                    [
                        -g_eff * (h[0] + lambda * hxm[0]),
                        -g_eff * (h[1] + lambda * hxm[1]),
                        -g_eff * (h[2] + lambda * hxm[2]),
                    ]
                };
                let m_half = rotate(m, omega_of(m), 0.5 * dt);
                m = rotate(m, omega_of(m_half), dt);
                out.push(SpinState {
                    mx: m[0],
                    my: m[1],
                    mz: m[2],
                });
            }
        }
        BathSpec::Drude { gamma, tau } => {
            let fade = (-dt / tau).exp();
            let kick = (gamma / tau) * (-dt / (2.0 * tau)).exp();
            let mut p = [0.0f64; 3];
            for k in 0..n - 1 {
                let h = [
                    -0.5 * (noise.fx[k] + noise.fx[k + 1]) - p[0],
                    -0.5 * (noise.fy[k] + noise.fy[k + 1]) - p[1],
                    sys.h0 - 0.5 * (noise.fz[k] + noise.fz[k + 1]) - p[2],
                ];
                let w = [-sys.g * h[0], -sys.g * h[1], -sys.g * h[2]];
                let m_prev = m;
                // The angular velocity does not depend on the moment here,
                // so the midpoint re-evaluation is the identity and one
                // full-step rotation is exact for this field sample.
                m = rotate(m, w, dt);
                p = [
                    fade * p[0] + kick * (m[0] - m_prev[0]),
                    fade * p[1] + kick * (m[1] - m_prev[1]),
                    fade * p[2] + kick * (m[2] - m_prev[2]),
                ];
                out.push(SpinState {
                    mx: m[0],
                    my: m[1],
                    mz: m[2],
                });
            }
        }
    }
    Ok(out)
}

/// Ensemble moments and autocorrelation over independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub grid: TimeGrid,
    pub n_trajectories: usize,
    pub mean_mx: Vec<f64>,
    pub mean_my: Vec<f64>,
    pub mean_mz: Vec<f64>,
    pub stderr_mx: Vec<f64>,
    pub stderr_my: Vec<f64>,
    pub stderr_mz: Vec<f64>,
    /// Ensemble mean of M(t) . M(0) per sample.
    pub corr: Vec<f64>,
    pub corr_stderr: Vec<f64>,
}

/// Run `n_traj` independent trajectories (trajectory k uses noise seed
/// seed_base + k) and reduce them to means, standard errors, and the
/// moment autocorrelation.
///
/// Trajectories are integrated in parallel but reduced strictly in index
/// order, so the result is identical for any thread count. With a single
/// trajectory every standard error is reported as infinite.
pub fn ensemble_statistics(
    state0: &SpinState,
    spec: &NoiseSpec,
    sys: &SpinSystem,
    grid: &TimeGrid,
    damping: OhmicDamping,
    n_traj: usize,
    seed_base: u64,
) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(CoreError::Invalid("ensemble needs at least one trajectory".into()));
    }
    let trajectories: Vec<Vec<SpinState>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let noise = synthesize_noise(spec, grid, seed_base.wrapping_add(k as u64))?;
            integrate_trajectory(state0, &noise, &spec.bath, sys, damping)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = grid.n;
    let nf = n_traj as f64;
    let mut stats = EnsembleStats {
        grid: *grid,
        n_trajectories: n_traj,
        mean_mx: vec![0.0; n],
        mean_my: vec![0.0; n],
        mean_mz: vec![0.0; n],
        stderr_mx: vec![0.0; n],
        stderr_my: vec![0.0; n],
        stderr_mz: vec![0.0; n],
        corr: vec![0.0; n],
        corr_stderr: vec![0.0; n],
    };
    let m0 = [state0.mx, state0.my, state0.mz];
    let corr_of = |s: &SpinState| s.mx * m0[0] + s.my * m0[1] + s.mz * m0[2];
    for j in 0..n {
        let mut sums = [0.0f64; 4];
        for t in &trajectories {
            let s = &t[j];
            sums[0] += s.mx;
            sums[1] += s.my;
            sums[2] += s.mz;
            sums[3] += corr_of(s);
        }
        let means = [sums[0] / nf, sums[1] / nf, sums[2] / nf, sums[3] / nf];
        stats.mean_mx[j] = means[0];
        stats.mean_my[j] = means[1];
        stats.mean_mz[j] = means[2];
        stats.corr[j] = means[3];
        if n_traj == 1 {
            stats.stderr_mx[j] = f64::INFINITY;
            stats.stderr_my[j] = f64::INFINITY;
            stats.stderr_mz[j] = f64::INFINITY;
            stats.corr_stderr[j] = f64::INFINITY;
        } else {
            let mut sq = [0.0f64; 4];
            for t in &trajectories {
                let s = &t[j];
                let d = [
                    s.mx - means[0],
                    s.my - means[1],
                    s.mz - means[2],
                    corr_of(s) - means[3],
                ];
                for (acc, di) in sq.iter_mut().zip(d) {
                    *acc += di * di;
                }
            }
            let scale = 1.0 / ((nf - 1.0) * nf);
            stats.stderr_mx[j] = (sq[0] * scale).sqrt();
            stats.stderr_my[j] = (sq[1] * scale).sqrt();
            stats.stderr_mz[j] = (sq[2] * scale).sqrt();
            stats.corr_stderr[j] = (sq[3] * scale).sqrt();
        }
    }
    Ok(stats)
}

/// Angular frequency from the zero crossings of a sampled oscillation:
/// pi over the mean gap between sign changes (linearly interpolated).
/// Needs at least two crossings; returns None otherwise.
pub fn zero_crossing_frequency(values: &[f64], dt: f64) -> Option<f64> {
    let mut crossings: Vec<f64> = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            crossings.push(i as f64 * dt);
        } else if a * b < 0.0 {
            crossings.push((i as f64 + a / (a - b)) * dt);
        }
    }
    if values.last() == Some(&0.0) {
        crossings.push((values.len() - 1) as f64 * dt);
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings.last().unwrap() - crossings.first().unwrap();
    Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MomentConvention, ThermalEnv};
    use crate::ohmic::derive_ohmic;
    use proptest::prelude::*;

    fn spin_half(h0: f64) -> SpinSystem {
        SpinSystem::new(0.5, 1.0, h0, MomentConvention::default()).unwrap()
    }

    fn silent_record(grid: TimeGrid) -> NoiseRecord {
        NoiseRecord {
            grid,
            fx: vec![0.0; grid.n],
            fy: vec![0.0; grid.n],
            fz: vec![0.0; grid.n],
        }
    }

    #[test]
    fn rotation_about_z_is_a_plane_rotation() {
        let m = rotate([1.0, 0.0, 0.5], [0.0, 0.0, 2.0], 0.25);
        let ang = 0.5f64;
        assert!((m[0] - ang.cos()).abs() < 1e-15);
        assert!((m[1] - ang.sin()).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_angular_velocity_is_the_identity() {
        let m = rotate([0.3, -0.4, 0.5], [0.0, 0.0, 0.0], 0.1);
        assert_eq!(m, [0.3, -0.4, 0.5]);
    }

    #[test]
    fn trajectory_rejects_zero_initial_state() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.1, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 16).unwrap();
        let zero = SpinState::new(0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            integrate_trajectory(&zero, &silent_record(grid), &bath, &sys, OhmicDamping::default()),
            Err(CoreError::Invalid(_))
        ));
    }

    #[test]
    fn trajectory_rejects_unresolvable_steps() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.1, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.1, 16).unwrap();
        let s0 = SpinState::new(0.5, 0.0, 0.5).unwrap();
        // dt*g*H0 = 1.0 crosses the 0.5 bound even without noise.
        assert!(matches!(
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::default()),
            Err(CoreError::Step(_))
        ));
    }

    #[test]
    fn noiseless_frictionless_motion_is_larmor_precession() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.0, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.002, 4096).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let traj =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::default())
                .unwrap();
        let mx: Vec<f64> = traj.iter().map(|s| s.mx).collect();
        let freq = zero_crossing_frequency(&mx, grid.dt).unwrap();
        assert!(
            (freq / (sys.g * sys.h0) - 1.0).abs() < 1e-6,
            "measured frequency {freq}"
        );
        // mz untouched by pure precession around z.
        assert!((traj.last().unwrap().mz - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weak_friction_frequency_matches_the_dressed_closed_form() {
        // gamma = 1e-4, H0 = 10, cutoff 50: the simulated frequency picks
        // up the cutoff shift of the dressed frequency, 0.05% above the
        // bare Larmor value, and must agree with it to 1%.
        let sys = spin_half(10.0);
        let gamma = 1e-4;
        let bath = BathSpec::ohmic(gamma, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.002, 4096).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let traj =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::default())
                .unwrap();
        let mx: Vec<f64> = traj.iter().map(|s| s.mx).collect();
        let freq = zero_crossing_frequency(&mx, grid.dt).unwrap();
        let d = derive_ohmic(&sys, &bath, 0.5, 0.5f64.sqrt(), 0.0).unwrap();
        assert!(
            (freq / d.omega_l - 1.0).abs() < 0.01,
            "simulated {freq} vs dressed {}",
            d.omega_l
        );
    }

    #[test]
    fn ohmic_damping_drives_the_moment_toward_the_field() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.002, 8192).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let traj =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::default())
                .unwrap();
        let end = traj.last().unwrap();
        assert!(
            end.mz > 0.8,
            "mz should have climbed toward the field, got {}",
            end.mz
        );
    }

    #[test]
    fn drude_damping_drives_the_moment_toward_the_field() {
        let sys = spin_half(10.0);
        let bath = BathSpec::drude(0.05, 0.3).unwrap();
        let grid = TimeGrid::new(0.0, 0.002, 16384).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let traj =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::default())
                .unwrap();
        let end = traj.last().unwrap();
        assert!(
            end.mz > 0.6,
            "mz should have climbed toward the field, got {}",
            end.mz
        );
    }

    #[test]
    fn half_weight_damping_relaxes_slower() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.002, 4096).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let full =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::FullDelta)
                .unwrap();
        let half =
            integrate_trajectory(&s0, &silent_record(grid), &bath, &sys, OhmicDamping::HalfDelta)
                .unwrap();
        assert!(full.last().unwrap().mz > half.last().unwrap().mz);
    }

    #[test]
    fn noisy_trajectory_conserves_the_norm() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let env = ThermalEnv::new(0.05, 1.0, 1.0).unwrap();
        let spec = NoiseSpec::quantum(bath, env);
        // Quantum noise at this cutoff has a per-sample spread of a few
        // field units, so the step guard needs dt well under 0.01.
        let grid = TimeGrid::new(0.0, 0.005, 2048).unwrap();
        let noise = synthesize_noise(&spec, &grid, 5).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let traj =
            integrate_trajectory(&s0, &noise, &bath, &sys, OhmicDamping::default()).unwrap();
        let m0 = s0.norm();
        let drift = traj
            .iter()
            .map(|s| (s.norm() - m0).abs())
            .fold(0.0f64, f64::max);
        assert!(drift < 1e-12, "norm drift {drift}");
    }

    #[test]
    fn ensemble_is_deterministic_and_indexed_by_seed() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let env = ThermalEnv::new(0.05, 1.0, 1.0).unwrap();
        let spec = NoiseSpec::quantum(bath, env);
        let grid = TimeGrid::new(0.0, 0.005, 256).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let one =
            ensemble_statistics(&s0, &spec, &sys, &grid, OhmicDamping::default(), 8, 3).unwrap();
        let two =
            ensemble_statistics(&s0, &spec, &sys, &grid, OhmicDamping::default(), 8, 3).unwrap();
        assert_eq!(one, two);
        let other =
            ensemble_statistics(&s0, &spec, &sys, &grid, OhmicDamping::default(), 8, 4).unwrap();
        assert_ne!(one.corr, other.corr);
    }

    #[test]
    fn ensemble_statistics_start_at_the_initial_state() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let env = ThermalEnv::new(0.05, 1.0, 1.0).unwrap();
        let spec = NoiseSpec::quantum(bath, env);
        let grid = TimeGrid::new(0.0, 0.005, 64).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let stats =
            ensemble_statistics(&s0, &spec, &sys, &grid, OhmicDamping::default(), 6, 3).unwrap();
        assert_eq!(stats.mean_mx[0], s0.mx);
        assert_eq!(stats.mean_mz[0], s0.mz);
        assert_eq!(stats.stderr_mx[0], 0.0);
        // Squaring sqrt(0.5) rounds up by one ulp, so C(0) is |M0|^2 to
        // rounding rather than exactly.
        assert!((stats.corr[0] - 0.75).abs() < 1e-15);
        assert_eq!(stats.corr_stderr[0], 0.0);
    }

    #[test]
    fn single_trajectory_has_infinite_standard_errors() {
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let env = ThermalEnv::new(0.05, 1.0, 1.0).unwrap();
        let spec = NoiseSpec::quantum(bath, env);
        let grid = TimeGrid::new(0.0, 0.005, 64).unwrap();
        let s0 = SpinState::new(0.5f64.sqrt(), 0.0, 0.5).unwrap();
        let stats =
            ensemble_statistics(&s0, &spec, &sys, &grid, OhmicDamping::default(), 1, 3).unwrap();
        assert!(stats.stderr_mx.iter().all(|v| v.is_infinite()));
        assert!(stats.corr_stderr.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn transverse_variance_scales_linearly_with_temperature() {
        // Classical noise at T and 10 T: after the transient the mean
        // transverse power must scale by 10 (equipartition linearity).
        // 256 paths keep the statistical spread of the ratio around a
        // percent; 5% is a loose gate.
        let sys = spin_half(10.0);
        let bath = BathSpec::ohmic(0.05, 50.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.02, 2048).unwrap();
        let s0 = SpinState::new(0.0, 0.0, 0.75f64.sqrt()).unwrap();
        let var_at = |temp: f64, seed: u64| {
            let env = ThermalEnv::new(temp, 1.0, 1.0).unwrap();
            let spec = NoiseSpec::classical(bath, env);
            let mut acc = 0.0f64;
            let mut cnt = 0usize;
            for p in 0..256u64 {
                let noise = synthesize_noise(&spec, &grid, seed.wrapping_add(p)).unwrap();
                let traj =
                    integrate_trajectory(&s0, &noise, &bath, &sys, OhmicDamping::default())
                        .unwrap();
                for s in &traj[514..] {
                    acc += s.mx * s.mx + s.my * s.my;
                    cnt += 1;
                }
            }
            acc / cnt as f64
        };
        let v_lo = var_at(0.005, 11);
        let v_hi = var_at(0.05, 12);
        let ratio = v_hi / v_lo;
        assert!(
            (ratio - 10.0).abs() < 0.5,
            "variance ratio {ratio} (low {v_lo}, high {v_hi})"
        );
    }

    #[test]
    fn crossing_frequency_recovers_a_pure_tone() {
        let dt = 0.01;
        let omega = 3.7;
        let vals: Vec<f64> = (0..2000).map(|i| (omega * i as f64 * dt).sin()).collect();
        let freq = zero_crossing_frequency(&vals, dt).unwrap();
        assert!((freq / omega - 1.0).abs() < 1e-5, "measured {freq}");
    }

    #[test]
    fn crossing_frequency_needs_two_crossings() {
        assert_eq!(zero_crossing_frequency(&[1.0, 2.0, 3.0], 0.1), None);
        assert_eq!(zero_crossing_frequency(&[1.0, -1.0, -2.0], 0.1), None);
    }

    proptest! {
        #[test]
        fn rotations_preserve_the_norm(
            mx in -1.0f64..1.0,
            my in -1.0f64..1.0,
            mz in -1.0f64..1.0,
            wx in -100.0f64..100.0,
            wy in -100.0f64..100.0,
            wz in -100.0f64..100.0,
            dt in 0.0f64..0.1,
        ) {
            let before = norm([mx, my, mz]);
            let after = norm(rotate([mx, my, mz], [wx, wy, wz], dt));
            prop_assert!((after - before).abs() <= 1e-13 * (before + 1e-30));
        }
    }
}
