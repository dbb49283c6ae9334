//! Command-line front end: profile files, subcommands and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{delta_curve, detect_onset, exponential_law, local_slopes, normalize_buildup, ONSET_WINDOW};
use crate::dynamics::{evolve_full, evolve_single_resonance, truncated_poles, TimeGrid, TransientSolution};
use crate::error::{Error, Result};
use crate::resonances::{find_poles, ResonantState};
use crate::stationary::stationary_wave;
use crate::units::{build_profile, PotentialProfile, DEFAULT_MASS_FACTOR};

/// Energies further than this many widths from every resonance are treated
/// as off-resonance.
const ON_RESONANCE_WIDTHS: f64 = 5.0;
const MAX_POLES: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "rtbuildup", version, about = "Transient buildup in resonant tunneling structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resonance table of a profile.
    Poles(PolesArgs),
    /// Psi(x, k; t) at a fixed position.
    Evolve(RunArgs),
    /// Normalized buildup |Psi/phi| against the exponential law.
    Buildup(RunArgs),
    /// ln delta(tau), its local slope and the onset summary.
    Crossover(RunArgs),
}

#[derive(Debug, Args)]
pub struct PolesArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// Upper limit on resonance energies, eV (default: highest barrier).
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long, default_value_t = MAX_POLES)]
    pub max_poles: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("energy").required(true).args(["resonance", "energy_ev"])))]
#[command(group(clap::ArgGroup::new("position").required(true).args(["x_angstrom", "auto_max"])))]
pub struct RunArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// Incidence exactly at the n-th resonance (1-based).
    #[arg(long)]
    pub resonance: Option<usize>,
    /// Explicit incidence energy, eV.
    #[arg(long)]
    pub energy_ev: Option<f64>,
    #[arg(long)]
    pub x_angstrom: Option<f64>,
    /// Position of the largest |phi|^2 inside the well.
    #[arg(long)]
    pub auto_max: bool,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub grid: Option<Spacing>,
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    pub mode: Mode,
    /// Upper limit of the resonance search, eV (default: highest barrier).
    #[arg(long)]
    pub e_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Error {
    /// 1 for usage, parse and i/o problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NoConvergence { .. } | Error::WindingMismatch { .. } | Error::NotAPole { .. } | Error::Overflow(_) => 2,
            _ => 1,
        }
    }
}

/// Reads `mass_factor = <m>` and repeated `segment = <width Å> <height eV>`
/// lines; `#` starts a comment.
pub fn parse_profile(text: &str) -> Result<PotentialProfile> {
    let mut segments = Vec::new();
    let mut mass = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let number = |s: &str| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")));
        match key.trim() {
            "segment" => {
                let fields: Vec<&str> = value.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(err("segment needs `<width> <height>`".into()));
                }
                segments.push((number(fields[0])?, number(fields[1])?));
            }
            "mass_factor" => {
                if mass.is_some() {
                    return Err(err("mass_factor given twice".into()));
                }
                mass = Some(number(value.trim())?);
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if segments.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "no segments defined".into(),
        });
    }
    build_profile(&segments, mass.unwrap_or(DEFAULT_MASS_FACTOR))
}

pub fn load_profile(path: &Path) -> Result<PotentialProfile> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_profile(&text)
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            std::io::stdout().lock().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn search_cap(profile: &PotentialProfile, e_max: Option<f64>) -> f64 {
    e_max.unwrap_or_else(|| profile.max_height())
}

pub fn poles_csv(states: &[ResonantState]) -> String {
    let mut s = String::from("n,eps_meV,gamma_meV,lifetime_fs,R_n,re_k,im_k\n");
    for (i, st) in states.iter().enumerate() {
        let row = [st.eps_mev(), st.gamma_mev(), st.lifetime_fs(), st.ratio(), st.pole.re, st.pole.im];
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        writeln!(s, "{},{}", i + 1, cells.join(",")).unwrap();
    }
    s
}

fn cmd_poles(args: &PolesArgs) -> Result<()> {
    let profile = load_profile(&args.profile)?;
    let e_max = search_cap(&profile, args.e_max);
    let states = find_poles(&profile, e_max, args.max_poles)?;
    emit(args.out.as_deref(), &poles_csv(&states))
}

/// Largest |φ(x, E)|² on a fine grid over the well segments. Lobes within
/// 1e-3 of the maximum count as equal; the one nearest its well centre wins,
/// then the leftmost.
pub fn auto_max_position(profile: &PotentialProfile, energy: f64) -> Result<f64> {
    let wells = profile.well_regions();
    if wells.is_empty() {
        return Err(Error::Config("profile has no well segment for --auto-max".into()));
    }
    let mut candidates = Vec::new();
    for &(lo, hi) in &wells {
        let n = 4000;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let d = xs
            .iter()
            .map(|&x| stationary_wave(profile, energy, x).map(|p| p.norm_sqr()))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..=n {
            let left = i == 0 || d[i] >= d[i - 1];
            let right = i == n || d[i] >= d[i + 1];
            if left && right {
                candidates.push((xs[i], d[i], (xs[i] - 0.5 * (lo + hi)).abs()));
            }
        }
    }
    let top = candidates.iter().map(|c| c.1).fold(0.0, f64::max);
    candidates.retain(|c| c.1 >= top * (1.0 - 1e-3));
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.total_cmp(&b.0)));
    Ok(candidates[0].0)
}

/// Everything a time-dependent run needs once the command line is resolved.
#[derive(Debug)]
pub struct Resolved {
    pub profile: PotentialProfile,
    pub states: Vec<ResonantState>,
    /// Index into `states` of the resonance that sets the time unit.
    pub designated: usize,
    pub energy: f64,
    pub x: f64,
    pub mode: Mode,
}

impl Resolved {
    pub fn state(&self) -> &ResonantState {
        &self.states[self.designated]
    }
}

pub fn resolve(args: &RunArgs) -> Result<Resolved> {
    let profile = load_profile(&args.profile)?;
    let states = find_poles(&profile, search_cap(&profile, args.e_max), MAX_POLES)?;
    if states.is_empty() {
        return Err(Error::Config("profile has no resonances below the search limit".into()));
    }
    let (designated, energy) = match (args.resonance, args.energy_ev) {
        (Some(n), None) => {
            if n == 0 || n > states.len() {
                return Err(Error::Config(format!(
                    "resonance {n} requested but {} found",
                    states.len()
                )));
            }
            (n - 1, states[n - 1].eps)
        }
        (None, Some(e)) => {
            if !(e > 0.0) {
                return Err(Error::NonPositiveEnergy(e));
            }
            let nearest = (0..states.len())
                .min_by(|&a, &b| {
                    let da = (states[a].eps - e).abs() / states[a].gamma;
                    let db = (states[b].eps - e).abs() / states[b].gamma;
                    da.total_cmp(&db)
                })
                .unwrap();
            (nearest, e)
        }
        _ => return Err(Error::Config("give exactly one of --resonance and --energy-ev".into())),
    };
    let mut mode = args.mode;
    let s = &states[designated];
    if (energy - s.eps).abs() > ON_RESONANCE_WIDTHS * s.gamma {
        log::warn!(
            "E = {energy} eV lies between resonances; the single-resonance approximation is \
             invalid there, running the full expansion with times in lifetimes of resonance {}",
            designated + 1
        );
        mode = Mode::Full;
    }
    let x = match (args.x_angstrom, args.auto_max) {
        (Some(x), false) => x,
        (None, true) => auto_max_position(&profile, energy)?,
        _ => return Err(Error::Config("give exactly one of --x-angstrom and --auto-max".into())),
    };
    if !(0.0..=profile.length()).contains(&x) {
        return Err(Error::PositionOutOfRange {
            x,
            length: profile.length(),
        });
    }
    log::info!("E = {energy} eV, x = {x} Å, resonance {}", designated + 1);
    Ok(Resolved {
        profile,
        states,
        designated,
        energy,
        x,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

/// 400 log-spaced points on [0.01, 50] lifetimes unless overridden.
pub fn default_grid(args: &RunArgs) -> GridSpec {
    GridSpec {
        tau_min: args.tau_min.unwrap_or(0.01),
        tau_max: args.tau_max.unwrap_or(50.0),
        points: args.points.unwrap_or(400),
        spacing: args.grid.unwrap_or(Spacing::Log),
    }
}

/// Linear grid on [0.01, 60] lifetimes with a step that resolves the
/// long-time ripple of period 2π/R_n.
pub fn crossover_grid(args: &RunArgs, ratio: f64) -> GridSpec {
    let tau_min = args.tau_min.unwrap_or(0.01);
    let tau_max = args.tau_max.unwrap_or(60.0);
    let step = (2.0 * std::f64::consts::PI / (16.0 * ratio)).min(0.01);
    GridSpec {
        tau_min,
        tau_max,
        points: args
            .points
            .unwrap_or(((tau_max - tau_min) / step).ceil() as usize + 1),
        spacing: args.grid.unwrap_or(Spacing::Linear),
    }
}

pub fn time_grid(spec: &GridSpec, lifetime_fs: f64) -> Result<TimeGrid> {
    match spec.spacing {
        Spacing::Log => TimeGrid::log_lifetimes(spec.tau_min, spec.tau_max, spec.points, lifetime_fs),
        Spacing::Linear => TimeGrid::linear_lifetimes(spec.tau_min, spec.tau_max, spec.points, lifetime_fs),
    }
}

pub fn run_evolution(r: &Resolved, grid: &TimeGrid) -> Result<TransientSolution> {
    match r.mode {
        Mode::Single => evolve_single_resonance(&r.profile, r.state(), r.energy, r.x, grid),
        Mode::Full => {
            let poles = truncated_poles(&r.profile, r.energy, MAX_POLES)?;
            if poles.is_empty() {
                return Err(Error::Config("no poles below the truncation energy".into()));
            }
            evolve_full(&r.profile, &poles, r.energy, r.x, grid)
        }
    }
}

pub fn evolve_csv(solution: &TransientSolution, state: &ResonantState) -> String {
    let mut s = String::from("t_fs,tau,re_psi,im_psi,abs2_psi,abs2_phi\n");
    let phi2 = solution.phi.norm_sqr();
    for ((t, tau), psi) in solution.times_fs.iter().zip(solution.taus(state)).zip(&solution.psi) {
        let cells = [*t, tau, psi.re, psi.im, psi.norm_sqr(), phi2].map(num);
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

fn cmd_evolve(args: &RunArgs) -> Result<()> {
    let r = resolve(args)?;
    let grid = time_grid(&default_grid(args), r.state().lifetime_fs())?;
    let solution = run_evolution(&r, &grid)?;
    emit(args.out.as_deref(), &evolve_csv(&solution, r.state()))
}

fn cmd_buildup(args: &RunArgs) -> Result<()> {
    let r = resolve(args)?;
    let grid = time_grid(&default_grid(args), r.state().lifetime_fs())?;
    let solution = run_evolution(&r, &grid)?;
    let series = normalize_buildup(&solution, r.state(), &r.profile, r.energy, r.x)?;
    let mut s = String::from("tau,ratio_abs,ratio_abs2,law_abs2\n");
    for i in 0..series.taus.len() {
        let g = exponential_law(series.taus[i]);
        let cells = [series.taus[i], series.ratio_abs[i], series.ratio_abs2[i], g * g].map(num);
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    emit(args.out.as_deref(), &s)
}

/// Data rows followed by one `# tau_0=...,tau_onset=...,R_n=...` line.
fn cmd_crossover(args: &RunArgs) -> Result<()> {
    let r = resolve(args)?;
    let ratio = r.state().ratio();
    let grid = time_grid(&crossover_grid(args, ratio), r.state().lifetime_fs())?;
    let solution = run_evolution(&r, &grid)?;
    let series = normalize_buildup(&solution, r.state(), &r.profile, r.energy, r.x)?;
    let curve = delta_curve(&series);
    if !curve.dropped.is_empty() {
        log::info!("{} samples with delta = 0 left out", curve.dropped.len());
    }
    let slopes = local_slopes(&curve, 0.5 * ONSET_WINDOW);
    let report = detect_onset(&series)?;
    let mut s = String::from("tau,ln_delta,local_slope\n");
    for (&(tau, ld), slope) in curve.points.iter().zip(&slopes) {
        writeln!(s, "{},{},{}", num(tau), num(ld), num(*slope)).unwrap();
    }
    writeln!(
        s,
        "# tau_0={},tau_onset={},R_n={}",
        num(report.tau0()),
        num(report.tau_onset),
        num(ratio)
    )
    .unwrap();
    emit(args.out.as_deref(), &s)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Poles(a) => cmd_poles(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Buildup(a) => cmd_buildup(a),
        Command::Crossover(a) => cmd_crossover(a),
    }
}
