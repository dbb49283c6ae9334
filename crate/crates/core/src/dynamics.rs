//! Time evolution of Ψ(x, k; t) inside the structure after the shutter opens.
//!
//! Ψ = φ M(y_k) − φ* M(y_{−k}) − Σ_n [ iT_n M(y_{k_n}) + iT_{−n} M(y_{−k_n*}) ]
//!
//! with iT_n = 2ik u_n(0)u_n(x)/(k² − k_n²) and the third-quadrant partner
//! −k_n* contributing T_{−n} = 2k [u_n(0)u_n(x)]*/(k² − k_n*²).

use num_complex::Complex64;

use crate::ddouble::{two_prod, DoubleDouble};
use crate::error::{Error, Result};
use crate::resonances::{find_poles, ResonantState};
use crate::special::{moshinsky_m, MoshinskyArgument};
use crate::stationary::StationaryState;
use crate::units::{PhysicalConstants, PotentialProfile};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default relative size of the last pole's contribution above which
/// `evolve_full` warns.
pub const DEFAULT_CONVERGENCE_TOLERANCE: f64 = 1e-8;

/// Strictly increasing sample times t > 0 in fs.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_fs(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("empty time grid".into()));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidGrid(format!("time {t} is not positive")));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// τ values in lifetimes of `lifetime_fs`.
    pub fn from_lifetimes(taus: &[f64], lifetime_fs: f64) -> Result<Self> {
        Self::from_fs(taus.iter().map(|tau| tau * lifetime_fs).collect())
    }

    /// `n` points log-spaced over [τ_min, τ_max].
    pub fn log_lifetimes(tau_min: f64, tau_max: f64, n: usize, lifetime_fs: f64) -> Result<Self> {
        Self::from_lifetimes(&spaced(tau_min, tau_max, n, true)?, lifetime_fs)
    }

    /// `n` points evenly spaced over [τ_min, τ_max].
    pub fn linear_lifetimes(tau_min: f64, tau_max: f64, n: usize, lifetime_fs: f64) -> Result<Self> {
        Self::from_lifetimes(&spaced(tau_min, tau_max, n, false)?, lifetime_fs)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Result<Vec<f64>> {
    if n == 0 || !(lo > 0.0) || (n > 1 && !(hi > lo)) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < tau_min < tau_max and at least one point, got [{lo}, {hi}] x {n}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let frac = |i: usize| i as f64 / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else if log {
                lo * ((hi / lo).ln() * frac(i)).exp()
            } else {
                lo + (hi - lo) * frac(i)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionMode {
    Full,
    SingleResonance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientSolution {
    pub energy: f64,
    pub k: f64,
    pub x: f64,
    /// Stationary φ(x, k) the solution approaches.
    pub phi: Complex64,
    pub times_fs: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub mode: EvolutionMode,
    /// Relative size of the last included pole's term at the final time.
    pub convergence: Option<f64>,
}

impl TransientSolution {
    /// Sample times in lifetimes ħ/Γ of `state`.
    pub fn taus(&self, state: &ResonantState) -> Vec<f64> {
        let life = state.lifetime_fs();
        self.times_fs.iter().map(|t| t / life).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }
}

fn argument(q: Complex64, t: f64, c: &PhysicalConstants) -> Complex64 {
    MoshinskyArgument::physical(q, t, c).value()
}

/// φ M(y_k) − φ* M(y_{−k}).
fn incident_term(phi: Complex64, k: f64, t: f64, c: &PhysicalConstants) -> Result<Complex64> {
    let kc = Complex64::new(k, 0.0);
    Ok(phi * moshinsky_m(argument(kc, t, c))? - phi.conj() * moshinsky_m(argument(-kc, t, c))?)
}

/// The time-independent factors of one pole pair at fixed (k, x).
#[derive(Debug, Clone, Copy)]
struct PoleTerm {
    pole: Complex64,
    /// iT_n
    forward: Complex64,
    /// iT_{−n}
    partner: Complex64,
}

impl PoleTerm {
    fn new(state: &ResonantState, k: f64, x: f64) -> Result<Self> {
        let kc = Complex64::new(k, 0.0);
        let uu = state.u0 * state.u(x)?;
        let kn = state.pole;
        Ok(Self {
            pole: kn,
            forward: 2.0 * I * kc * uu / (kc * kc - kn * kn),
            partner: 2.0 * I * kc * uu.conj() / (kc * kc - kn.conj() * kn.conj()),
        })
    }

    /// −iT_n M(y_{k_n}) − iT_{−n} M(y_{−k_n*}).
    fn at(&self, t: f64, c: &PhysicalConstants) -> Result<Complex64> {
        Ok(-self.forward * moshinsky_m(argument(self.pole, t, c))?
            - self.partner * moshinsky_m(argument(-self.pole.conj(), t, c))?)
    }
}

fn check_position(profile: &PotentialProfile, x: f64) -> Result<()> {
    if !(0.0..=profile.length()).contains(&x) {
        return Err(Error::PositionOutOfRange {
            x,
            length: profile.length(),
        });
    }
    Ok(())
}

fn evolve(
    profile: &PotentialProfile,
    poles: &[ResonantState],
    energy: f64,
    x: f64,
    grid: &TimeGrid,
    mode: EvolutionMode,
) -> Result<(TransientSolution, Vec<PoleTerm>)> {
    check_position(profile, x)?;
    let stationary = StationaryState::new(profile, energy)?;
    let phi = stationary.phi(x)?;
    let k = stationary.k;
    let c = profile.constants();
    let terms = poles
        .iter()
        .map(|s| PoleTerm::new(s, k, x))
        .collect::<Result<Vec<_>>>()?;
    let psi = grid
        .times()
        .iter()
        .map(|&t| {
            let mut s = incident_term(phi, k, t, c)?;
            for term in &terms {
                s += term.at(t, c)?;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let solution = TransientSolution {
        energy,
        k,
        x,
        phi,
        times_fs: grid.times().to_vec(),
        psi,
        mode,
        convergence: None,
    };
    Ok((solution, terms))
}

/// Single-resonance approximation with the pole pair of `state` only.
pub fn evolve_single_resonance(
    profile: &PotentialProfile,
    state: &ResonantState,
    energy: f64,
    x: f64,
    grid: &TimeGrid,
) -> Result<TransientSolution> {
    if (energy - state.eps).abs() > 5.0 * state.gamma {
        log::warn!(
            "E = {energy} eV is {:.1} widths from the resonance at {} eV; \
             the single-resonance approximation does not apply",
            (energy - state.eps).abs() / state.gamma,
            state.eps
        );
    }
    Ok(evolve(profile, std::slice::from_ref(state), energy, x, grid, EvolutionMode::SingleResonance)?.0)
}

/// Truncated pole expansion over `poles`, warning if the last pole's term at
/// the final time exceeds `DEFAULT_CONVERGENCE_TOLERANCE` relative to |Ψ|.
pub fn evolve_full(
    profile: &PotentialProfile,
    poles: &[ResonantState],
    energy: f64,
    x: f64,
    grid: &TimeGrid,
) -> Result<TransientSolution> {
    evolve_full_with_tolerance(profile, poles, energy, x, grid, DEFAULT_CONVERGENCE_TOLERANCE)
}

pub fn evolve_full_with_tolerance(
    profile: &PotentialProfile,
    poles: &[ResonantState],
    energy: f64,
    x: f64,
    grid: &TimeGrid,
    tolerance: f64,
) -> Result<TransientSolution> {
    if poles.is_empty() {
        return Err(Error::Config("full evolution needs at least one pole".into()));
    }
    let (mut solution, terms) = evolve(profile, poles, energy, x, grid, EvolutionMode::Full)?;
    let t_end = *grid.times().last().unwrap();
    let last = terms.last().unwrap().at(t_end, profile.constants())?;
    let diagnostic = last.norm() / solution.psi.last().unwrap().norm();
    if diagnostic > tolerance {
        log::warn!(
            "last pole contributes {diagnostic:.3e} of |Psi| at t = {t_end} fs \
             (tolerance {tolerance:.1e}); include more poles"
        );
    }
    solution.convergence = Some(diagnostic);
    Ok(solution)
}

/// Highest resonance energy kept in the full expansion at incidence `energy`:
/// max(4E, E + 10 Γ_max).
pub fn truncation_energy(energy: f64, poles: &[ResonantState]) -> f64 {
    let widest = poles.iter().map(|s| s.gamma).fold(0.0, f64::max);
    (4.0 * energy).max(energy + 10.0 * widest)
}

/// Finds the poles required by the truncation rule, enlarging the search
/// until the cap no longer moves.
pub fn truncated_poles(profile: &PotentialProfile, energy: f64, max_poles: usize) -> Result<Vec<ResonantState>> {
    let mut cap = 4.0 * energy;
    for _ in 0..8 {
        let poles = find_poles(profile, cap, max_poles)?;
        let wanted = truncation_energy(energy, &poles);
        if wanted <= cap * (1.0 + 1e-12) {
            return Ok(poles);
        }
        cap = wanted;
    }
    find_poles(profile, cap, max_poles)
}

/// |Ψ|² = |φ|²(1 − e^{−τ/2})² + Δ(τ).
#[derive(Debug, Clone, PartialEq)]
pub struct BuildupDecomposition {
    pub taus: Vec<f64>,
    pub exponential: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi_abs2: f64,
}

fn abs2_dd(z: Complex64) -> DoubleDouble {
    let (a, b) = two_prod(z.re, z.re);
    let (c, d) = two_prod(z.im, z.im);
    DoubleDouble::new(a, b) + DoubleDouble::new(c, d)
}

/// Splits an on-resonance solution into the exponential part and the
/// remainder Δ(τ); the subtraction is carried out in double-double.
pub fn buildup_decomposition(solution: &TransientSolution, state: &ResonantState) -> BuildupDecomposition {
    let phi2 = abs2_dd(solution.phi);
    let taus = solution.taus(state);
    let mut exponential = Vec::with_capacity(taus.len());
    let mut delta = Vec::with_capacity(taus.len());
    for (tau, psi) in taus.iter().zip(&solution.psi) {
        let g = -(-0.5 * tau).exp_m1();
        let law = phi2 * DoubleDouble::from_prod(g, g);
        exponential.push(law.to_f64());
        delta.push((abs2_dd(*psi) - law).to_f64());
    }
    BuildupDecomposition {
        taus,
        exponential,
        delta,
        phi_abs2: phi2.to_f64(),
    }
}
