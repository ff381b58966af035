//! Command line front end: key = value config files with flag overrides,
//! scenario execution, and CSV/metadata persistence.
//!
//! Every run writes `<prefix>.csv` (one header row, 17-significant-digit
//! fields, `inf` tokens for undefined values, never NaN) and
//! `<prefix>.meta` (the resolved parameters in config syntax, so a meta
//! file re-executes the same scenario byte for byte).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use rayon::prelude::*;
use spinlangevin_core::*;

// the library exports a Result alias pinned to its own error type; this
// crate's fallible paths all carry CliError instead
use std::result::Result;

/// Errors are split by exit code: configuration problems (unknown keys,
/// invalid ranges, missing parameters) exit 2, runtime failures
/// (numerical guards, transforms, file writes) exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

/// Constructor failures during parameter resolution are range problems.
fn cfg(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

/// Failures after the parameters are validated are numerical.
fn rt(e: CoreError) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Equilibrium,
    Ohmic,
    Drude,
    Simulate,
    FdtCheck,
    KkCheck,
    SweepTauR,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "equilibrium" => Mode::Equilibrium,
            "ohmic" => Mode::Ohmic,
            "drude" => Mode::Drude,
            "simulate" => Mode::Simulate,
            "fdt-check" => Mode::FdtCheck,
            "kk-check" => Mode::KkCheck,
            "sweep-tauR" => Mode::SweepTauR,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Equilibrium => "equilibrium",
            Mode::Ohmic => "ohmic",
            Mode::Drude => "drude",
            Mode::Simulate => "simulate",
            Mode::FdtCheck => "fdt-check",
            Mode::KkCheck => "kk-check",
            Mode::SweepTauR => "sweep-tauR",
        }
    }
}

/// One named flag per config key; flags win over the config file.
#[derive(Parser, Debug, Default)]
#[command(
    name = "spinlangevin",
    version,
    about = "Closed forms, stochastic simulation, and response transforms for a spin in a heat bath"
)]
pub struct Cli {
    /// equilibrium | ohmic | drude | simulate | fdt-check | kk-check | sweep-tauR
    pub mode: String,
    /// key = value file; any flag below overrides its entry
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output path prefix: writes <prefix>.csv and <prefix>.meta
    #[arg(long)]
    pub out: Option<String>,
    /// spin quantum number S
    #[arg(long)]
    pub s: Option<f64>,
    /// gyromagnetic ratio
    #[arg(long)]
    pub g: Option<f64>,
    /// static field along z
    #[arg(long)]
    pub h0: Option<f64>,
    /// bath temperature
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Boltzmann constant (default 1)
    #[arg(long)]
    pub kb: Option<f64>,
    /// reduced Planck constant (default 1)
    #[arg(long)]
    pub hbar: Option<f64>,
    /// ohmic | drude (only needed where the mode does not imply it)
    #[arg(long)]
    pub bath: Option<String>,
    /// coupling strength
    #[arg(long)]
    pub gamma: Option<f64>,
    /// hard spectral cutoff of the delta-kernel bath
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// memory time of the exponential-kernel bath
    #[arg(long)]
    pub tau: Option<f64>,
    /// grid start time (default 0)
    #[arg(long)]
    pub t0: Option<f64>,
    /// grid step
    #[arg(long)]
    pub dt: Option<f64>,
    /// node count: time samples, or frequency nodes for kk-check
    #[arg(long)]
    pub n: Option<usize>,
    /// trajectories in the ensemble (default 100)
    #[arg(long)]
    pub n_traj: Option<usize>,
    /// base RNG seed; trajectory k uses seed + k (default 1)
    #[arg(long)]
    pub seed: Option<u64>,
    /// quantum | classical noise statistics (default quantum)
    #[arg(long)]
    pub noise: Option<String>,
    /// longitudinal moment override (default: thermal equilibrium value)
    #[arg(long)]
    pub mz: Option<f64>,
    /// initial transverse moment x (default sqrt(3/5) of the budget)
    #[arg(long)]
    pub mx0: Option<f64>,
    /// initial transverse moment y (default sqrt(2/5) of the budget)
    #[arg(long)]
    pub my0: Option<f64>,
    /// quantum (g*sqrt(S(S+1))) | saturation (g*S) total-moment size
    #[arg(long)]
    pub moment_convention: Option<String>,
    /// positive | negative equilibrium alignment (default positive)
    #[arg(long)]
    pub sign: Option<String>,
    /// bath particle mass in the kernel (default 1)
    #[arg(long)]
    pub mass: Option<f64>,
    /// full | half endpoint weight of the delta kernel (default full)
    #[arg(long)]
    pub delta_weight: Option<String>,
    /// half-width of the kk-check frequency grid (default 10x the
    /// precession frequency)
    #[arg(long)]
    pub wmax: Option<f64>,
    /// first sweep axis: T | H0 | gamma
    #[arg(long)]
    pub axis1: Option<String>,
    #[arg(long)]
    pub axis1_min: Option<f64>,
    #[arg(long)]
    pub axis1_max: Option<f64>,
    #[arg(long)]
    pub axis1_steps: Option<usize>,
    /// logarithmic spacing for axis 1 (default false)
    #[arg(long)]
    pub axis1_log: Option<bool>,
    /// second sweep axis, the faster-varying one: T | H0 | gamma
    #[arg(long)]
    pub axis2: Option<String>,
    #[arg(long)]
    pub axis2_min: Option<f64>,
    #[arg(long)]
    pub axis2_max: Option<f64>,
    #[arg(long)]
    pub axis2_steps: Option<usize>,
    /// logarithmic spacing for axis 2 (default false)
    #[arg(long)]
    pub axis2_log: Option<bool>,
}

/// Every key a config file may contain. `version`, `rel_l2`, and
/// `sup_rel` are written into meta files as provenance/results and are
/// accepted back silently so a meta file is a valid config.
const KNOWN_KEYS: &[&str] = &[
    "mode",
    "s",
    "g",
    "h0",
    "temperature",
    "kb",
    "hbar",
    "bath",
    "gamma",
    "cutoff",
    "tau",
    "t0",
    "dt",
    "n",
    "n-traj",
    "seed",
    "noise",
    "mz",
    "mx0",
    "my0",
    "moment-convention",
    "sign",
    "mass",
    "delta-weight",
    "wmax",
    "axis1",
    "axis1-min",
    "axis1-max",
    "axis1-steps",
    "axis1-log",
    "axis2",
    "axis2-min",
    "axis2-max",
    "axis2-steps",
    "axis2-log",
    "version",
    "rel_l2",
    "sup_rel",
];

/// key -> (raw value, line number), diagnosing unknown and duplicate
/// keys with their line numbers. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, (String, usize)>, CliError> {
    let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "config line {line_no}: expected `key = value`, got `{}`",
                raw.trim()
            ))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(CliError::Config(format!(
                "config line {line_no}: empty key or value in `{}`",
                raw.trim()
            )));
        }
        if !KNOWN_KEYS.contains(&k) {
            return Err(CliError::Config(format!(
                "config line {line_no}: unknown key `{k}`"
            )));
        }
        if let Some((_, prev)) = map.insert(k.to_string(), (v.to_string(), line_no)) {
            return Err(CliError::Config(format!(
                "config line {line_no}: duplicate key `{k}` (already set on line {prev})"
            )));
        }
    }
    Ok(map)
}

/// Merges flag values over config entries over defaults.
struct Resolver<'a> {
    cfg: &'a BTreeMap<String, (String, usize)>,
    mode: &'static str,
}

impl<'a> Resolver<'a> {
    fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get(key) {
            Some((raw, line)) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Config(format!(
                    "config line {line}: key `{key}`: cannot parse `{raw}`: {e}"
                ))
            }),
            None => Ok(None),
        }
    }

    fn req<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key, flag)?.ok_or_else(|| {
            CliError::Config(format!(
                "mode `{}` requires `{key}` (config key or --{key})",
                self.mode
            ))
        })
    }

    fn or<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }
}

/// Fixed-width float field: 17 significant digits, bit-stable diffs,
/// explicit `inf` for undefined values.
pub fn format_field(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the CSV text, refusing NaN anywhere.
pub fn render_csv(header: &[String], rows: &[Vec<f64>]) -> Result<String, CliError> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), header.len());
        for (j, v) in row.iter().enumerate() {
            if v.is_nan() {
                return Err(CliError::Runtime(format!(
                    "NaN produced at row {} column `{}`; refusing to write",
                    i + 1,
                    header[j]
                )));
            }
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_field(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses CSV text produced by [`render_csv`] back into header + rows.
pub fn parse_csv_text(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Runtime("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| {
            CliError::Runtime(format!("CSV row {}: cannot parse `{line}`: {e}", i + 2))
        })?;
        if row.len() != header.len() {
            return Err(CliError::Runtime(format!(
                "CSV row {}: {} fields, header has {}",
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Reads a CSV file written by this crate.
pub fn read_csv(path: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {path}: {e}")))?;
    parse_csv_text(&text)
}

/// Meta files use the config syntax so they re-execute directly.
pub fn render_meta(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

struct ModeOutput {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
    meta: Vec<(String, String)>,
}

/// Meta value helpers: floats keep full precision so a meta file
/// reproduces the run exactly.
fn mf(x: f64) -> String {
    format_field(x)
}

/// System + environment parameters shared by every mode.
struct Common {
    sys: SpinSystem,
    env: ThermalEnv,
    alignment: Alignment,
    meta: Vec<(String, String)>,
}

fn resolve_common(r: &Resolver, cli: &Cli) -> Result<Common, CliError> {
    let s = r.req("s", cli.s)?;
    let g = r.req("g", cli.g)?;
    let h0 = r.req("h0", cli.h0)?;
    let temperature = r.req("temperature", cli.temperature)?;
    let kb = r.or("kb", cli.kb, 1.0)?;
    let hbar = r.or("hbar", cli.hbar, 1.0)?;
    let conv_name: String = r.or("moment-convention", cli.moment_convention.clone(), "quantum".into())?;
    let convention = match conv_name.as_str() {
        "quantum" => MomentConvention::SqrtSSplus1,
        "saturation" => MomentConvention::SOnly,
        other => {
            return Err(CliError::Config(format!(
                "`moment-convention` must be quantum or saturation, got `{other}`"
            )))
        }
    };
    let sign_name: String = r.or("sign", cli.sign.clone(), "positive".into())?;
    let alignment = match sign_name.as_str() {
        "positive" => Alignment::Positive,
        "negative" => Alignment::Negative,
        other => {
            return Err(CliError::Config(format!(
                "`sign` must be positive or negative, got `{other}`"
            )))
        }
    };
    let sys = SpinSystem::new(s, g, h0, convention).map_err(cfg)?;
    let env = ThermalEnv::new(temperature, kb, hbar).map_err(cfg)?;
    let meta = vec![
        ("s".into(), mf(s)),
        ("g".into(), mf(g)),
        ("h0".into(), mf(h0)),
        ("temperature".into(), mf(temperature)),
        ("kb".into(), mf(kb)),
        ("hbar".into(), mf(hbar)),
        ("moment-convention".into(), conv_name),
        ("sign".into(), sign_name),
    ];
    Ok(Common {
        sys,
        env,
        alignment,
        meta,
    })
}

/// Longitudinal moment (thermal equilibrium unless overridden) and the
/// default 3:2 split of the transverse budget.
fn resolve_moments(
    r: &Resolver,
    cli: &Cli,
    c: &Common,
) -> Result<(f64, f64, f64, Vec<(String, String)>), CliError> {
    let mz = match r.get("mz", cli.mz)? {
        Some(v) => v,
        None => equilibrium_mz(&c.sys, &c.env, c.alignment).map_err(rt)?.mz,
    };
    let mxy = c.sys.transverse_moment(mz).map_err(cfg)?;
    let mx0 = r.or("mx0", cli.mx0, (3.0f64 / 5.0).sqrt() * mxy)?;
    let my0 = r.or("my0", cli.my0, (2.0f64 / 5.0).sqrt() * mxy)?;
    let meta = vec![
        ("mz".into(), mf(mz)),
        ("mx0".into(), mf(mx0)),
        ("my0".into(), mf(my0)),
    ];
    Ok((mz, mx0, my0, meta))
}

fn resolve_grid(r: &Resolver, cli: &Cli) -> Result<(TimeGrid, Vec<(String, String)>), CliError> {
    let t0 = r.or("t0", cli.t0, 0.0)?;
    let dt = r.req("dt", cli.dt)?;
    let n = r.req("n", cli.n)?;
    let grid = TimeGrid::new(t0, dt, n).map_err(cfg)?;
    let meta = vec![
        ("t0".into(), mf(t0)),
        ("dt".into(), mf(dt)),
        ("n".into(), n.to_string()),
    ];
    Ok((grid, meta))
}

/// The mode determines the bath family; an explicit `bath` key must
/// agree where the mode already implies one.
fn check_bath_key(r: &Resolver, cli: &Cli, implied: &str) -> Result<(), CliError> {
    if let Some(b) = r.get::<String>("bath", cli.bath.clone())? {
        if b != implied {
            return Err(CliError::Config(format!(
                "mode `{}` uses the {implied} bath; got bath = {b}",
                r.mode
            )));
        }
    }
    Ok(())
}

fn run_equilibrium(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    let c = resolve_common(r, cli)?;
    let eq = equilibrium_mz(&c.sys, &c.env, c.alignment).map_err(rt)?;
    let mut meta = c.meta;
    meta.push(("mz".into(), mf(eq.mz)));
    Ok(ModeOutput {
        header: vec!["x".into(), "bs".into(), "mz".into()],
        rows: vec![vec![eq.x, eq.bs, eq.mz]],
        meta,
    })
}

fn run_ohmic(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    check_bath_key(r, cli, "ohmic")?;
    let c = resolve_common(r, cli)?;
    let gamma = r.req("gamma", cli.gamma)?;
    let cutoff = r.req("cutoff", cli.cutoff)?;
    let bath = BathSpec::ohmic(gamma, cutoff).map_err(cfg)?;
    let (mz, mx0, my0, moment_meta) = resolve_moments(r, cli, &c)?;
    let (grid, grid_meta) = resolve_grid(r, cli)?;
    let d = derive_ohmic(&c.sys, &bath, mz, mx0, my0).map_err(rt)?;
    let mut rows = Vec::with_capacity(grid.n);
    for t in grid.times() {
        let (mx, my) = mean_moments(&d, t);
        let corr = autocorrelation(&d, t);
        let resp = response_family(&d, &c.env, t).map_err(rt)?.r_total;
        rows.push(vec![t, mx, my, corr, resp]);
    }
    let mut meta = c.meta;
    meta.push(("bath".into(), "ohmic".into()));
    meta.push(("gamma".into(), mf(gamma)));
    meta.push(("cutoff".into(), mf(cutoff)));
    meta.extend(grid_meta);
    meta.extend(moment_meta);
    Ok(ModeOutput {
        header: ["t", "mx", "my", "corr", "response"]
            .map(String::from)
            .to_vec(),
        rows,
        meta,
    })
}

fn run_drude(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    check_bath_key(r, cli, "drude")?;
    let c = resolve_common(r, cli)?;
    let gamma = r.req("gamma", cli.gamma)?;
    let tau = r.req("tau", cli.tau)?;
    let bath = BathSpec::drude(gamma, tau).map_err(cfg)?;
    let (mz, mx0, my0, moment_meta) = resolve_moments(r, cli, &c)?;
    let (grid, grid_meta) = resolve_grid(r, cli)?;
    let d = derive_drude(&c.sys, &bath, mz, mx0, my0).map_err(rt)?;
    let mut rows = Vec::with_capacity(grid.n);
    for t in grid.times() {
        let (mx, my) = mean_moments_drude(&d, t).map_err(rt)?;
        let corr = autocorrelation_drude(&d, t).map_err(rt)?;
        rows.push(vec![t, mx, my, corr]);
    }
    let mut meta = c.meta;
    meta.push(("bath".into(), "drude".into()));
    meta.push(("gamma".into(), mf(gamma)));
    meta.push(("tau".into(), mf(tau)));
    meta.extend(grid_meta);
    meta.extend(moment_meta);
    Ok(ModeOutput {
        header: ["t", "mx", "my", "corr"].map(String::from).to_vec(),
        rows,
        meta,
    })
}

fn run_simulate(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    let c = resolve_common(r, cli)?;
    let bath_name: String = r.req("bath", cli.bath.clone())?;
    let gamma = r.req("gamma", cli.gamma)?;
    let bath = match bath_name.as_str() {
        "ohmic" => BathSpec::ohmic(gamma, r.req("cutoff", cli.cutoff)?).map_err(cfg)?,
        "drude" => BathSpec::drude(gamma, r.req("tau", cli.tau)?).map_err(cfg)?,
        other => {
            return Err(CliError::Config(format!(
                "`bath` must be ohmic or drude, got `{other}`"
            )))
        }
    };
    let noise_name: String = r.or("noise", cli.noise.clone(), "quantum".into())?;
    let classical = match noise_name.as_str() {
        "quantum" => false,
        "classical" => true,
        other => {
            return Err(CliError::Config(format!(
                "`noise` must be quantum or classical, got `{other}`"
            )))
        }
    };
    let weight_name: String = r.or("delta-weight", cli.delta_weight.clone(), "full".into())?;
    let damping = match weight_name.as_str() {
        "full" => OhmicDamping::FullDelta,
        "half" => OhmicDamping::HalfDelta,
        other => {
            return Err(CliError::Config(format!(
                "`delta-weight` must be full or half, got `{other}`"
            )))
        }
    };
    let mass = r.or("mass", cli.mass, 1.0)?;
    let n_traj = r.or("n-traj", cli.n_traj, 100)?;
    let seed = r.or("seed", cli.seed, 1u64)?;
    let (mz, mx0, my0, moment_meta) = resolve_moments(r, cli, &c)?;
    let (grid, grid_meta) = resolve_grid(r, cli)?;
    if !grid.n.is_power_of_two() {
        return Err(CliError::Config(format!(
            "simulate needs a power-of-two sample count for the noise synthesis, got n = {}",
            grid.n
        )));
    }
    if n_traj == 0 {
        return Err(CliError::Config("`n-traj` must be at least 1".into()));
    }
    let state0 = SpinState::new(mx0, my0, mz).map_err(cfg)?;
    let spec = NoiseSpec {
        bath,
        env: c.env,
        mass,
        classical,
    };
    let stats = ensemble_statistics(&state0, &spec, &c.sys, &grid, damping, n_traj, seed)
        .map_err(rt)?;
    let mut rows = Vec::with_capacity(grid.n);
    for (k, t) in grid.times().enumerate() {
        rows.push(vec![
            t,
            stats.mean_mx[k],
            stats.mean_my[k],
            stats.mean_mz[k],
            stats.stderr_mx[k],
            stats.stderr_my[k],
            stats.stderr_mz[k],
            stats.corr[k],
            stats.corr_stderr[k],
        ]);
    }
    let mut meta = c.meta;
    meta.push(("bath".into(), bath_name));
    meta.push(("gamma".into(), mf(gamma)));
    match bath {
        BathSpec::Ohmic { cutoff, .. } => meta.push(("cutoff".into(), mf(cutoff))),
        BathSpec::Drude { tau, .. } => meta.push(("tau".into(), mf(tau))),
    }
    meta.push(("noise".into(), noise_name));
    meta.push(("mass".into(), mf(mass)));
    meta.push(("delta-weight".into(), weight_name));
    meta.push(("n-traj".into(), n_traj.to_string()));
    meta.push(("seed".into(), seed.to_string()));
    meta.extend(grid_meta);
    meta.extend(moment_meta);
    Ok(ModeOutput {
        header: [
            "t",
            "mean_mx",
            "mean_my",
            "mean_mz",
            "stderr_mx",
            "stderr_my",
            "stderr_mz",
            "corr",
            "corr_stderr",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        meta,
    })
}

fn run_fdt_check(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    check_bath_key(r, cli, "ohmic")?;
    let c = resolve_common(r, cli)?;
    let gamma = r.req("gamma", cli.gamma)?;
    let cutoff = r.req("cutoff", cli.cutoff)?;
    let bath = BathSpec::ohmic(gamma, cutoff).map_err(cfg)?;
    let (mz, mx0, my0, moment_meta) = resolve_moments(r, cli, &c)?;
    let (grid, grid_meta) = resolve_grid(r, cli)?;
    if grid.t0 != 0.0 {
        return Err(CliError::Config(format!(
            "fdt-check requires t0 = 0, got {}",
            grid.t0
        )));
    }
    let d = derive_ohmic(&c.sys, &bath, mz, mx0, my0).map_err(rt)?;
    // plateau-subtracted correlation is the transform input; its decay
    // to zero at the end of the window is what the transform checks
    let values: Vec<f64> = grid
        .times()
        .map(|t| autocorrelation(&d, t) - d.mz * d.mz)
        .collect();
    let series = Series::new(grid, values).map_err(rt)?;
    let pipeline = fdt_imag_response(&series, &c.env).map_err(rt)?;
    let jmax = if d.tau_r.is_finite() {
        ((3.0 * d.tau_r / grid.dt) as usize).min(grid.n - 1)
    } else {
        grid.n - 1
    };
    let mut rows = Vec::with_capacity(jmax + 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=jmax {
        let t = grid.time(j);
        let closed = response_family(&d, &c.env, t).map_err(rt)?.r_double_prime;
        let fft = pipeline.values[j];
        num += (fft - closed) * (fft - closed);
        den += closed * closed;
        rows.push(vec![t, fft, closed]);
    }
    let rel_l2 = (num / den).sqrt();
    let mut meta = c.meta;
    meta.push(("bath".into(), "ohmic".into()));
    meta.push(("gamma".into(), mf(gamma)));
    meta.push(("cutoff".into(), mf(cutoff)));
    meta.extend(grid_meta);
    meta.extend(moment_meta);
    meta.push(("rel_l2".into(), mf(rel_l2)));
    Ok(ModeOutput {
        header: ["t", "response_fft", "response_closed"]
            .map(String::from)
            .to_vec(),
        rows,
        meta,
    })
}

fn run_kk_check(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    check_bath_key(r, cli, "ohmic")?;
    let c = resolve_common(r, cli)?;
    let gamma = r.req("gamma", cli.gamma)?;
    let cutoff = r.req("cutoff", cli.cutoff)?;
    let bath = BathSpec::ohmic(gamma, cutoff).map_err(cfg)?;
    let (mz, mx0, my0, moment_meta) = resolve_moments(r, cli, &c)?;
    let n = r.or("n", cli.n, 32769usize)?;
    if n % 2 == 0 || n < 11 {
        return Err(CliError::Config(format!(
            "kk-check needs an odd node count of at least 11, got n = {n}"
        )));
    }
    let d = derive_ohmic(&c.sys, &bath, mz, mx0, my0).map_err(rt)?;
    let (a, b) = (d.decay_rate, d.omega_l);
    let wmax = r.or("wmax", cli.wmax, 10.0 * b)?;
    if !(wmax > 0.0) {
        return Err(CliError::Config(format!(
            "`wmax` must be positive, got {wmax}"
        )));
    }
    let center = (n - 1) / 2;
    let h = 2.0 * wmax / (n - 1) as f64;
    let grid = FrequencyGrid::new(-(center as f64) * h, h, n).map_err(cfg)?;
    // closed dissipative part on the grid: detailed-balance weight times
    // the two-pole Lorentzian pair
    let amp = d.mxy * d.mxy / c.env.hbar;
    let om_th = c.env.omega_th();
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let w = grid.omega(j);
            let lor = a / ((w - b).powi(2) + a * a) + a / ((w + b).powi(2) + a * a);
            (w / om_th).tanh() * amp * lor
        })
        .collect();
    // evaluate inside |omega| <= 2B, at most ~2049 nodes, symmetric
    let lim = ((2.0 * b / h) as usize).min(center);
    let stride = (lim / 1024).max(1);
    let k_max = (lim / stride) as isize;
    let rows: Vec<Vec<f64>> = (0..(2 * k_max + 1) as usize)
        .into_par_iter()
        .map(|kk| {
            let k = kk as isize - k_max;
            let i = (center as isize + k * stride as isize) as usize;
            let w = grid.omega(i);
            let got = kramers_kronig_real(&grid, &vals, w).map_err(rt)?;
            let want = response_real_omega(&d, &c.env, w).map_err(rt)?.re;
            Ok(vec![w, got, want])
        })
        .collect::<Result<_, CliError>>()?;
    let sup_err = rows
        .iter()
        .map(|r| (r[1] - r[2]).abs())
        .fold(0.0f64, f64::max);
    let sup_val = rows.iter().map(|r| r[2].abs()).fold(0.0f64, f64::max);
    let sup_rel = sup_err / sup_val;
    let mut meta = c.meta;
    meta.push(("bath".into(), "ohmic".into()));
    meta.push(("gamma".into(), mf(gamma)));
    meta.push(("cutoff".into(), mf(cutoff)));
    meta.push(("n".into(), n.to_string()));
    meta.push(("wmax".into(), mf(wmax)));
    meta.extend(moment_meta);
    meta.push(("sup_rel".into(), mf(sup_rel)));
    Ok(ModeOutput {
        header: ["omega", "kk_pv", "closed"].map(String::from).to_vec(),
        rows,
        meta,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Axis {
    Temperature,
    Field,
    Coupling,
}

impl Axis {
    fn parse(s: &str) -> Option<Axis> {
        Some(match s {
            "T" => Axis::Temperature,
            "H0" => Axis::Field,
            "gamma" => Axis::Coupling,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Axis::Temperature => "T",
            Axis::Field => "H0",
            Axis::Coupling => "gamma",
        }
    }
}

struct AxisSpec {
    axis: Axis,
    min: f64,
    max: f64,
    steps: usize,
    log: bool,
}

impl AxisSpec {
    fn value(&self, i: usize) -> f64 {
        let f = i as f64 / (self.steps - 1) as f64;
        if self.log {
            (self.min.ln() + (self.max.ln() - self.min.ln()) * f).exp()
        } else {
            self.min + (self.max - self.min) * f
        }
    }
}

fn resolve_axis(
    r: &Resolver,
    which: &str,
    name_flag: Option<String>,
    min_flag: Option<f64>,
    max_flag: Option<f64>,
    steps_flag: Option<usize>,
    log_flag: Option<bool>,
) -> Result<AxisSpec, CliError> {
    let name: String = r.req(which, name_flag)?;
    let axis = Axis::parse(&name).ok_or_else(|| {
        CliError::Config(format!("`{which}` must be T, H0, or gamma, got `{name}`"))
    })?;
    let min = r.req(&format!("{which}-min"), min_flag)?;
    let max = r.req(&format!("{which}-max"), max_flag)?;
    let steps = r.req(&format!("{which}-steps"), steps_flag)?;
    let log = r.or(&format!("{which}-log"), log_flag, false)?;
    if steps < 2 {
        return Err(CliError::Config(format!(
            "`{which}-steps` must be at least 2, got {steps}"
        )));
    }
    if !(min < max) {
        return Err(CliError::Config(format!(
            "`{which}` range needs min < max, got [{min}, {max}]"
        )));
    }
    if log && !(min > 0.0) {
        return Err(CliError::Config(format!(
            "`{which}` is logarithmic and needs min > 0, got {min}"
        )));
    }
    let floor_ok = match axis {
        // the equilibrium state needs a positive temperature; field and
        // coupling may start at zero (the relaxation time is then inf)
        Axis::Temperature => min > 0.0,
        Axis::Field | Axis::Coupling => min >= 0.0,
    };
    if !floor_ok {
        return Err(CliError::Config(format!(
            "`{which}` = {} needs min {} 0, got {min}",
            axis.name(),
            if axis == Axis::Temperature { ">" } else { ">=" }
        )));
    }
    Ok(AxisSpec {
        axis,
        min,
        max,
        steps,
        log,
    })
}

fn run_sweep_tau_r(r: &Resolver, cli: &Cli) -> Result<ModeOutput, CliError> {
    check_bath_key(r, cli, "ohmic")?;
    let s = r.req("s", cli.s)?;
    let g = r.req("g", cli.g)?;
    let cutoff = r.req("cutoff", cli.cutoff)?;
    let kb = r.or("kb", cli.kb, 1.0)?;
    let hbar = r.or("hbar", cli.hbar, 1.0)?;
    let conv_name: String = r.or("moment-convention", cli.moment_convention.clone(), "quantum".into())?;
    let convention = match conv_name.as_str() {
        "quantum" => MomentConvention::SqrtSSplus1,
        "saturation" => MomentConvention::SOnly,
        other => {
            return Err(CliError::Config(format!(
                "`moment-convention` must be quantum or saturation, got `{other}`"
            )))
        }
    };
    let sign_name: String = r.or("sign", cli.sign.clone(), "positive".into())?;
    let alignment = match sign_name.as_str() {
        "positive" => Alignment::Positive,
        "negative" => Alignment::Negative,
        other => {
            return Err(CliError::Config(format!(
                "`sign` must be positive or negative, got `{other}`"
            )))
        }
    };
    let a1 = resolve_axis(
        r,
        "axis1",
        cli.axis1.clone(),
        cli.axis1_min,
        cli.axis1_max,
        cli.axis1_steps,
        cli.axis1_log,
    )?;
    let a2 = resolve_axis(
        r,
        "axis2",
        cli.axis2.clone(),
        cli.axis2_min,
        cli.axis2_max,
        cli.axis2_steps,
        cli.axis2_log,
    )?;
    if a1.axis == a2.axis {
        return Err(CliError::Config(format!(
            "axis1 and axis2 must differ, both are {}",
            a1.axis.name()
        )));
    }
    // the third parameter stays fixed and must be supplied
    let swept = [a1.axis, a2.axis];
    let fixed_t = if !swept.contains(&Axis::Temperature) {
        Some(r.req("temperature", cli.temperature)?)
    } else {
        None
    };
    let fixed_h0 = if !swept.contains(&Axis::Field) {
        Some(r.req("h0", cli.h0)?)
    } else {
        None
    };
    let fixed_gamma = if !swept.contains(&Axis::Coupling) {
        Some(r.req("gamma", cli.gamma)?)
    } else {
        None
    };
    if let Some(t) = fixed_t {
        if !(t > 0.0) {
            return Err(CliError::Config(format!(
                "`temperature` must be positive, got {t}"
            )));
        }
    }

    // row-major with axis2 fastest; the equilibrium moment is recomputed
    // at every grid point
    let rows: Vec<Vec<f64>> = (0..a1.steps * a2.steps)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / a2.steps, flat % a2.steps);
            let (v1, v2) = (a1.value(i), a2.value(j));
            let pick = |axis: Axis, fixed: Option<f64>| -> f64 {
                if a1.axis == axis {
                    v1
                } else if a2.axis == axis {
                    v2
                } else {
                    fixed.unwrap()
                }
            };
            let temperature = pick(Axis::Temperature, fixed_t);
            let h0 = pick(Axis::Field, fixed_h0);
            let gamma = pick(Axis::Coupling, fixed_gamma);
            let sys = SpinSystem::new(s, g, h0, convention).map_err(rt)?;
            let env = ThermalEnv::new(temperature, kb, hbar).map_err(rt)?;
            let bath = BathSpec::ohmic(gamma, cutoff).map_err(rt)?;
            let eq = equilibrium_mz(&sys, &env, alignment).map_err(rt)?;
            let mxy = sys.transverse_moment(eq.mz).map_err(rt)?;
            let d = derive_ohmic(
                &sys,
                &bath,
                eq.mz,
                (3.0f64 / 5.0).sqrt() * mxy,
                (2.0f64 / 5.0).sqrt() * mxy,
            )
            .map_err(rt)?;
            Ok(vec![v1, v2, d.tau_r])
        })
        .collect::<Result<_, CliError>>()?;

    let mut meta = vec![
        ("s".into(), mf(s)),
        ("g".into(), mf(g)),
        ("cutoff".into(), mf(cutoff)),
        ("kb".into(), mf(kb)),
        ("hbar".into(), mf(hbar)),
        ("moment-convention".into(), conv_name),
        ("sign".into(), sign_name),
    ];
    if let Some(t) = fixed_t {
        meta.push(("temperature".into(), mf(t)));
    }
    if let Some(h) = fixed_h0 {
        meta.push(("h0".into(), mf(h)));
    }
    if let Some(gm) = fixed_gamma {
        meta.push(("gamma".into(), mf(gm)));
    }
    for (which, a) in [("axis1", &a1), ("axis2", &a2)] {
        meta.push((which.into(), a.axis.name().into()));
        meta.push((format!("{which}-min"), mf(a.min)));
        meta.push((format!("{which}-max"), mf(a.max)));
        meta.push((format!("{which}-steps"), a.steps.to_string()));
        meta.push((format!("{which}-log"), a.log.to_string()));
    }
    Ok(ModeOutput {
        header: vec![a1.axis.name().into(), a2.axis.name().into(), "tau_r".into()],
        rows,
        meta,
    })
}

/// Parses the config file, resolves parameters, runs the scenario, and
/// writes `<prefix>.csv` and `<prefix>.meta`.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mode = Mode::parse(&cli.mode).ok_or_else(|| {
        CliError::Config(format!(
            "unknown mode `{}` (expected equilibrium | ohmic | drude | simulate | fdt-check | kk-check | sweep-tauR)",
            cli.mode
        ))
    })?;
    let cfg_map = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some((m, line)) = cfg_map.get("mode") {
        if m != mode.name() {
            return Err(CliError::Config(format!(
                "config line {line}: mode `{m}` conflicts with the requested mode `{}`",
                mode.name()
            )));
        }
    }
    let out = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Config("--out <prefix> is required".into()))?;
    let r = Resolver {
        cfg: &cfg_map,
        mode: mode.name(),
    };
    let result = match mode {
        Mode::Equilibrium => run_equilibrium(&r, cli)?,
        Mode::Ohmic => run_ohmic(&r, cli)?,
        Mode::Drude => run_drude(&r, cli)?,
        Mode::Simulate => run_simulate(&r, cli)?,
        Mode::FdtCheck => run_fdt_check(&r, cli)?,
        Mode::KkCheck => run_kk_check(&r, cli)?,
        Mode::SweepTauR => run_sweep_tau_r(&r, cli)?,
    };
    let mut meta = vec![
        ("mode".to_string(), mode.name().to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    meta.extend(result.meta);
    let csv = render_csv(&result.header, &result.rows)?;
    std::fs::write(format!("{out}.csv"), csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {out}.csv: {e}")))?;
    std::fs::write(format!("{out}.meta"), render_meta(&meta))
        .map_err(|e| CliError::Runtime(format!("cannot write {out}.meta: {e}")))?;
    Ok(())
}
