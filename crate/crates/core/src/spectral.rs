//! Spectral transforms connecting the moment autocorrelation, the
//! dissipative response, and its reactive partner.
//!
//! The correlation is sampled on [0, T] and extended evenly to a closed
//! ring of length 2(n-1), so its transform is real and even on a linear
//! frequency grid. Detailed balance then weights each bin by
//! tanh(omega / Omega_th) to produce the dissipative response, which
//! returns to the time domain through the inverse transform. The
//! reactive part follows from a principal-value frequency integral on a
//! symmetric grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::model::{CoreError, Result, Series, ThermalEnv};

/// Uniform ascending frequency grid, omega_i = omega0 + i * domega.
///
/// Spectra produced here place the unpaired most-negative bin first and
/// omega = 0 exactly at index n/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega0: f64,
    pub domega: f64,
    pub n: usize,
}

impl FrequencyGrid {
    pub fn new(omega0: f64, domega: f64, n: usize) -> Result<Self> {
        if !omega0.is_finite() || !domega.is_finite() || domega <= 0.0 {
            return Err(CoreError::Invalid(format!(
                "frequency grid needs a finite origin and a positive spacing, got omega0 = {omega0}, domega = {domega}"
            )));
        }
        if n < 2 {
            return Err(CoreError::Invalid(format!(
                "frequency grid needs at least 2 nodes, got {n}"
            )));
        }
        Ok(Self { omega0, domega, n })
    }

    /// Frequency of node i.
    pub fn omega(&self, i: usize) -> f64 {
        self.omega0 + i as f64 * self.domega
    }
}

/// Check that the sampled correlation has settled before the window
/// ends: the last max(2, n/64) samples must sit within 1e-6 of the
/// overall scale around their own mean. A truncated transient would
/// otherwise alias ringing across the whole spectrum.
fn check_window(values: &[f64]) -> Result<()> {
    let n = values.len();
    let tail = (n / 64).max(2);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slice = &values[n - tail..];
    let mean = slice.iter().sum::<f64>() / tail as f64;
    let dev = slice
        .iter()
        .fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if dev > 1e-6 * scale + 1e-300 {
        return Err(CoreError::Window(format!(
            "series tail still varies by {dev:.3e} against a scale of {scale:.3e}; extend the window until the correlation settles"
        )));
    }
    Ok(())
}

/// Transform a settled correlation sampled on [0, T] into its real,
/// even spectrum.
///
/// The n samples (both endpoints included) are mirrored into a ring of
/// L = 2(n-1) points, transformed, and scaled by dt, so each bin
/// approximates the continuum integral of C(t) e^{-i omega t}. The
/// returned grid is ascending with spacing 2 pi / (L dt).
pub fn correlation_spectrum(c: &Series) -> Result<(FrequencyGrid, Vec<f64>)> {
    if c.grid.t0 != 0.0 {
        return Err(CoreError::Invalid(format!(
            "correlation series must start at t = 0, got t0 = {}",
            c.grid.t0
        )));
    }
    check_window(&c.values)?;
    let n = c.grid.n;
    let dt = c.grid.dt;
    let l = 2 * (n - 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (j, v) in c.values.iter().enumerate() {
        buf[j] = Complex64::new(*v, 0.0);
    }
    for j in 1..n - 1 {
        buf[l - j] = buf[j];
    }
    FftPlanner::<f64>::new().plan_fft_forward(l).process(&mut buf);
    let domega = 2.0 * PI / (l as f64 * dt);
    let half = l / 2;
    let grid = FrequencyGrid::new(-(half as f64) * domega, domega, l)?;
    let spectrum = (0..l).map(|i| dt * buf[(i + half) % l].re).collect();
    Ok((grid, spectrum))
}

/// Dissipative response in the time domain, obtained from the sampled
/// correlation by detailed balance: each spectral bin is weighted by
/// tanh(omega / Omega_th) / hbar and the product is transformed back.
/// The weighted spectrum is odd, so the inverse transform is purely
/// imaginary and its imaginary part is the response on the input grid.
/// The unpaired most-negative bin has no positive partner and is
/// dropped.
pub fn fdt_imag_response(c: &Series, env: &ThermalEnv) -> Result<Series> {
    let (fgrid, chat) = correlation_spectrum(c)?;
    let l = fgrid.n;
    let half = l / 2;
    let omega_th = env.omega_th();
    let mut weighted: Vec<f64> = (0..l)
        .map(|i| (fgrid.omega(i) / omega_th).tanh() * chat[i] / env.hbar)
        .collect();
    weighted[0] = 0.0;
    let mut buf: Vec<Complex64> = (0..l)
        .map(|k| Complex64::new(weighted[(k + half) % l], 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_inverse(l).process(&mut buf);
    let norm = 1.0 / (l as f64 * c.grid.dt);
    let values = buf[..c.grid.n].iter().map(|z| z.im * norm).collect();
    Series::new(c.grid, values)
}

/// Reactive response at one frequency from the dissipative spectrum via
/// the principal-value integral (1/pi) PV int r''(w') w' / (w'^2 - w^2) dw'.
///
/// The grid must be symmetric about zero with an odd node count, the
/// spectrum must have decayed at the edges, and the evaluation frequency
/// must sit on a grid node at least 5 nodes from the boundary. The two
/// singular cells around each pole are replaced by the analytic
/// principal value of a linear interpolant, which keeps the composite
/// rule second order.
pub fn kramers_kronig_real(grid: &FrequencyGrid, r_imag: &[f64], omega_eval: f64) -> Result<f64> {
    let n = grid.n;
    if r_imag.len() != n {
        return Err(CoreError::Invalid(format!(
            "expected {n} spectrum samples, got {}",
            r_imag.len()
        )));
    }
    if n % 2 == 0 || n < 11 {
        return Err(CoreError::Invalid(format!(
            "principal-value grid needs an odd node count of at least 11, got {n}"
        )));
    }
    let h = grid.domega;
    let c = (n - 1) / 2;
    if (grid.omega0 + c as f64 * h).abs() > 1e-9 * h {
        return Err(CoreError::Invalid(
            "principal-value grid must be symmetric about zero".into(),
        ));
    }
    let pos = (omega_eval - grid.omega0) / h;
    let near = pos.round();
    if (pos - near).abs() > 1e-6 {
        return Err(CoreError::Edge(format!(
            "evaluation frequency {omega_eval} does not sit on a grid node"
        )));
    }
    if near < 5.0 || near > (n - 6) as f64 {
        return Err(CoreError::Edge(format!(
            "evaluation frequency {omega_eval} is within 5 nodes of the grid boundary"
        )));
    }
    let peak = r_imag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = r_imag[0].abs().max(r_imag[n - 1].abs());
    if edge > 1e-4 * peak {
        return Err(CoreError::Edge(format!(
            "spectrum has not decayed at the grid edge (edge/peak = {:.3e})",
            edge / peak
        )));
    }
    let i = near as usize;

    if i == c {
        // The integrand r''(w')/w' is smooth at zero; fill the removable
        // point with the centered derivative and use a plain trapezoid.
        let mut f: Vec<f64> = (0..n)
            .map(|j| if j == c { 0.0 } else { r_imag[j] / grid.omega(j) })
            .collect();
        f[c] = (r_imag[c + 1] - r_imag[c - 1]) / (2.0 * h);
        let sum: f64 = f.iter().sum();
        let integral = h * (sum - 0.5 * f[0] - 0.5 * f[n - 1]);
        return Ok(integral / PI);
    }

    let w = grid.omega(i);
    let ip = 2 * c - i;
    let f: Vec<f64> = (0..n)
        .map(|j| {
            if j == i || j == ip {
                0.0
            } else {
                let wj = grid.omega(j);
                wj * r_imag[j] / (wj * wj - w * w)
            }
        })
        .collect();
    let mut integral = 0.0;
    for j in 0..n - 1 {
        // Skip the two cells touching each pole node; they are patched
        // analytically below.
        if j == i - 1 || j == i || j == ip - 1 || j == ip {
            continue;
        }
        integral += 0.5 * h * (f[j] + f[j + 1]);
    }
    // Principal value over [w - h, w + h] of a linear interpolant of
    // phi(w') = w' r''(w') / (w' + w): the odd part cancels and the even
    // part integrates to phi(i+1) - phi(i-1). Same construction at the
    // mirror pole with psi(w') = w' r''(w') / (w' - w).
    let phi = |j: usize| grid.omega(j) * r_imag[j] / (grid.omega(j) + w);
    integral += phi(i + 1) - phi(i - 1);
    let psi = |j: usize| grid.omega(j) * r_imag[j] / (grid.omega(j) - w);
    integral += psi(ip + 1) - psi(ip - 1);
    Ok(integral / PI)
}
