//! Complex poles of the transmission amplitude in the fourth quadrant of the
//! k plane and the normalized Gamow functions attached to them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::stationary::{default_scan_points, transfer_matrix, transmission_scan, PiecewiseWave};
use crate::units::{PhysicalConstants, PotentialProfile, HBAR_EV_FS};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Largest accepted |u′(x) ∓ ik_n u(x)| / (|k_n||u(x)|) at either edge.
pub const OUTGOING_TOLERANCE: f64 = 1e-8;
const NORMALIZATION_REL_TOL: f64 = 1e-10;

/// Pole condition: M₂₂(k), the denominator of t(k).
pub fn pole_condition(profile: &PotentialProfile, k: Complex64) -> Result<Complex64> {
    Ok(transfer_matrix(profile, k)?.m22)
}

fn derivative(profile: &PotentialProfile, k: Complex64) -> Result<Complex64> {
    let h = 1e-5 * k.norm();
    let f = |d: f64| pole_condition(profile, k + d * h);
    Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
}

/// Newton iteration on the pole condition from `seed`.
pub fn refine_pole(profile: &PotentialProfile, seed: Complex64) -> Result<Complex64> {
    let mut k = seed;
    let mut step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let dk = pole_condition(profile, k)? / derivative(profile, k)?;
        if !dk.is_finite() {
            break;
        }
        k -= dk;
        step = dk.norm();
        if step < NEWTON_TOLERANCE {
            return Ok(k);
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITERATIONS,
        last_step: step,
    })
}

/// Largest |Im k|·L of the search region. Deeper down the pole condition is a
/// difference of terms of size e^{|Im k|L} and its phase becomes rounding
/// noise.
pub const MAX_DEPTH_TIMES_LENGTH: f64 = 12.0;
const CONTOUR_MAX_BISECTIONS: usize = 24;

/// Search region `re_min < Re k <= re_max`, `-depth <= Im k < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub depth: f64,
}

impl SearchRectangle {
    /// Re k up to k(E_max) and Im k down to −k(E_max), or to −12/L if that
    /// is shallower. The left edge keeps clear of the 1/k singularity of the
    /// transfer matrix at the origin.
    pub fn for_energy(profile: &PotentialProfile, e_max: f64) -> Self {
        let k_max = profile.constants().momentum(e_max);
        Self {
            re_min: 1e-3 * k_max,
            re_max: k_max,
            depth: k_max.min(MAX_DEPTH_TIMES_LENGTH / profile.length()),
        }
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re > self.re_min && k.re <= self.re_max && k.im < 0.0 && k.im >= -self.depth
    }
}

/// Number of zeros of the pole condition inside `rect`, from the change of
/// its argument around the boundary.
pub fn winding_number(profile: &PotentialProfile, rect: &SearchRectangle) -> Result<i64> {
    let corners = [
        Complex64::new(rect.re_min, 0.0),
        Complex64::new(rect.re_min, -rect.depth),
        Complex64::new(rect.re_max, -rect.depth),
        Complex64::new(rect.re_max, 0.0),
    ];
    let mut total = 0.0;
    for j in 0..4 {
        let (a, b) = (corners[j], corners[(j + 1) % 4]);
        let pieces = 256;
        let mut za = a;
        let mut fa = pole_condition(profile, za)?;
        for i in 1..=pieces {
            let zb = a + (b - a) * (i as f64 / pieces as f64);
            let fb = pole_condition(profile, zb)?;
            total += arg_change(profile, za, fa, zb, fb, 0)?;
            za = zb;
            fa = fb;
        }
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

fn arg_change(
    profile: &PotentialProfile,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.5 {
        return Ok(d);
    }
    if depth >= CONTOUR_MAX_BISECTIONS {
        return Err(Error::InsufficientData(format!(
            "phase of the pole condition unresolved near k = {za}"
        )));
    }
    let zm = 0.5 * (za + zb);
    let fm = pole_condition(profile, zm)?;
    Ok(arg_change(profile, za, fa, zm, fm, depth + 1)? + arg_change(profile, zm, fm, zb, fb, depth + 1)?)
}

/// A resonance: pole k_n, complex energy E_n = ε_n − iΓ_n/2 and the Gamow
/// function u_n normalized so that ∫₀ᴸu² + i(u(0)² + u(L)²)/(2k_n) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantState {
    pub pole: Complex64,
    pub energy: Complex64,
    /// ε_n in eV.
    pub eps: f64,
    /// Γ_n in eV.
    pub gamma: f64,
    pub u0: Complex64,
    pub u_l: Complex64,
    constants: PhysicalConstants,
    wave: PiecewiseWave,
}

impl ResonantState {
    pub fn eps_mev(&self) -> f64 {
        self.eps * 1e3
    }

    pub fn gamma_mev(&self) -> f64 {
        self.gamma * 1e3
    }

    /// ħ/Γ_n in fs.
    pub fn lifetime_fs(&self) -> f64 {
        HBAR_EV_FS / self.gamma
    }

    /// R_n = ε_n/Γ_n.
    pub fn ratio(&self) -> f64 {
        self.eps / self.gamma
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn length(&self) -> f64 {
        self.wave.length()
    }

    pub fn u(&self, x: f64) -> Result<Complex64> {
        self.wave.check_range(x)?;
        Ok(self.wave.state(x)[0])
    }

    pub fn u_derivative(&self, x: f64) -> Result<Complex64> {
        self.wave.check_range(x)?;
        Ok(self.wave.state(x)[1])
    }

    /// ∫₀ᴸu² + i(u(0)² + u(L)²)/(2k_n), re-evaluated by quadrature.
    pub fn normalization(&self) -> Complex64 {
        normalization_integral(&self.wave, self.pole)
    }

    /// Largest relative mismatch of the outgoing conditions at 0 and L.
    pub fn outgoing_residual(&self) -> f64 {
        outgoing_residual(&self.wave, self.pole)
    }
}

fn normalization_integral(wave: &PiecewiseWave, k: Complex64) -> Complex64 {
    let edges = wave.edges();
    let mut sum = Complex64::new(0.0, 0.0);
    for w in edges.windows(2) {
        sum += integrate(|x| wave.state(x)[0].powi(2), w[0], w[1], NORMALIZATION_REL_TOL).value;
    }
    let psi0 = wave.at_start()[0];
    let psi_l = wave.at_end()[0];
    sum + I * (psi0 * psi0 + psi_l * psi_l) / (2.0 * k)
}

fn outgoing_residual(wave: &PiecewiseWave, k: Complex64) -> f64 {
    let [p0, d0] = wave.state(0.0);
    let [pl, dl] = wave.at_end();
    let left = (d0 + I * k * p0).norm() / (k.norm() * p0.norm());
    let right = (dl - I * k * pl).norm() / (k.norm() * pl.norm());
    left.max(right)
}

/// Gamow state at the pole `k_n`; fails with `NotAPole` if the outgoing
/// condition at x = L is violated.
pub fn gamow_state(profile: &PotentialProfile, k_n: Complex64) -> Result<ResonantState> {
    let constants = *profile.constants();
    let energy = constants.energy_c(k_n);
    let mut wave = PiecewiseWave::new(profile, energy, [Complex64::new(1.0, 0.0), -I * k_n]);
    let residual = outgoing_residual(&wave, k_n);
    if !(residual < OUTGOING_TOLERANCE) {
        return Err(Error::NotAPole {
            residual,
            re_k: k_n.re,
            im_k: k_n.im,
        });
    }
    let norm = normalization_integral(&wave, k_n);
    wave.scale(1.0 / norm.sqrt());
    Ok(ResonantState {
        pole: k_n,
        energy,
        eps: energy.re,
        gamma: -2.0 * energy.im,
        u0: wave.state(0.0)[0],
        u_l: wave.at_end()[0],
        constants,
        wave,
    })
}

/// φ(x, k) ≈ 2ik u_n(0)u_n(x)/(k² − k_n²) near an isolated sharp resonance.
pub fn one_term_phi(state: &ResonantState, energy: f64, x: f64) -> Result<Complex64> {
    let k = Complex64::new(state.constants.momentum(energy), 0.0);
    Ok(2.0 * I * k * state.u0 * state.u(x)? / (k * k - state.pole * state.pole))
}

fn push_unique(poles: &mut Vec<Complex64>, k: Complex64) {
    if !poles.iter().any(|p| (p - k).norm() <= 1e-9 * k.norm()) {
        poles.push(k);
    }
}

fn collect_poles(
    profile: &PotentialProfile,
    rect: &SearchRectangle,
    seeds: impl Iterator<Item = Complex64>,
    poles: &mut Vec<Complex64>,
) {
    for seed in seeds {
        match refine_pole(profile, seed) {
            Ok(k) if rect.contains(k) => push_unique(poles, k),
            Ok(_) => {}
            Err(e) => log::debug!("seed {seed} discarded: {e}"),
        }
    }
}

/// Resonances with ε_n ≤ `e_max`, sorted by ε_n, at most `max_poles` of them.
///
/// Seeds come from the maxima of |t(E)|²; the argument-principle count over
/// the search rectangle must agree with the number of converged poles,
/// otherwise a grid of extra seeds is tried before giving up.
pub fn find_poles(profile: &PotentialProfile, e_max: f64, max_poles: usize) -> Result<Vec<ResonantState>> {
    if !(e_max > 0.0) {
        return Err(Error::Config(format!("E_max must be positive, got {e_max}")));
    }
    let constants = profile.constants();
    let rect = SearchRectangle::for_energy(profile, e_max);
    let e_min = (1e-3 * e_max).min(1e-3);
    let scan = transmission_scan(profile, e_min, e_max, default_scan_points(e_min, e_max))?;

    let mut poles = Vec::new();
    collect_poles(
        profile,
        &rect,
        scan.peaks.iter().map(|&e| constants.momentum(e) * Complex64::new(1.0, -1e-3)),
        &mut poles,
    );
    let winding = winding_number(profile, &rect)?;
    if winding != poles.len() as i64 {
        log::info!(
            "winding count {winding} but {} poles from transmission peaks; seeding from a grid",
            poles.len()
        );
        let (nr, ni) = (24, 12);
        let grid = (0..nr).flat_map(|i| {
            (0..ni).map(move |j| {
                Complex64::new(
                    rect.re_min + (rect.re_max - rect.re_min) * (i as f64 + 0.5) / nr as f64,
                    -rect.depth * (j as f64 + 0.5) / ni as f64,
                )
            })
        });
        collect_poles(profile, &rect, grid, &mut poles);
        if winding != poles.len() as i64 {
            return Err(Error::WindingMismatch {
                winding,
                found: poles.len(),
            });
        }
    }

    let mut states = poles
        .into_iter()
        .map(|k| gamow_state(profile, k))
        .collect::<Result<Vec<_>>>()?;
    states.retain(|s| s.eps <= e_max);
    states.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    states.truncate(max_poles);
    Ok(states)
}

/// A resonance that a calibrated effective mass must reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceTarget {
    pub segments: Vec<(f64, f64)>,
    pub eps_mev: f64,
    pub gamma_mev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassScanPoint {
    pub mass_factor: f64,
    /// Largest |ε − target| over all targets, meV.
    pub eps_error: f64,
    /// Largest |Γ − target| over all targets, meV.
    pub gamma_error: f64,
}

impl MassScanPoint {
    pub fn within(&self, eps_tol: f64, gamma_tol: f64) -> bool {
        self.eps_error <= eps_tol && self.gamma_error <= gamma_tol
    }

    fn score(&self, eps_tol: f64, gamma_tol: f64) -> f64 {
        (self.eps_error / eps_tol).max(self.gamma_error / gamma_tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassScan {
    pub points: Vec<MassScanPoint>,
    /// Point with the smallest worst-case error relative to the tolerances.
    pub best: MassScanPoint,
    /// Smallest and largest scanned mass meeting every tolerance.
    pub window: Option<(f64, f64)>,
}

/// Evaluates every target at each mass factor; each pole is refined from the
/// target values so only the resonance in question is followed.
pub fn scan_mass_factor(
    targets: &[ResonanceTarget],
    masses: &[f64],
    eps_tol: f64,
    gamma_tol: f64,
) -> Result<MassScan> {
    if targets.is_empty() || masses.is_empty() {
        return Err(Error::Config("mass scan needs targets and masses".into()));
    }
    let mut points = Vec::with_capacity(masses.len());
    for &m in masses {
        let mut point = MassScanPoint {
            mass_factor: m,
            eps_error: 0.0,
            gamma_error: 0.0,
        };
        for t in targets {
            let profile = crate::units::build_profile(&t.segments, m)?;
            let c = profile.constants().hbar2_over_2m;
            let e = Complex64::new(t.eps_mev, -0.5 * t.gamma_mev) * 1e-3;
            let k = refine_pole(&profile, (e / c).sqrt())?;
            let en = c * k * k;
            point.eps_error = point.eps_error.max((en.re * 1e3 - t.eps_mev).abs());
            point.gamma_error = point.gamma_error.max((-2e3 * en.im - t.gamma_mev).abs());
        }
        points.push(point);
    }
    let best = *points
        .iter()
        .min_by(|a, b| a.score(eps_tol, gamma_tol).total_cmp(&b.score(eps_tol, gamma_tol)))
        .unwrap();
    let inside: Vec<f64> = points
        .iter()
        .filter(|p| p.within(eps_tol, gamma_tol))
        .map(|p| p.mass_factor)
        .collect();
    let window = inside
        .iter()
        .copied()
        .fold(None, |w: Option<(f64, f64)>, m| match w {
            None => Some((m, m)),
            Some((lo, hi)) => Some((lo.min(m), hi.max(m))),
        });
    Ok(MassScan { points, best, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::stationary_wave;
    use crate::units::build_profile;

    fn symmetric() -> PotentialProfile {
        build_profile(&[(30.0, 0.5), (100.0, 0.0), (30.0, 0.5)], 0.067).unwrap()
    }

    fn asymmetric() -> PotentialProfile {
        build_profile(&[(30.0, 0.3), (50.0, 0.0), (100.0, 0.3)], 0.067).unwrap()
    }

    #[test]
    fn symmetric_poles() {
        let states = find_poles(&symmetric(), 0.4, 10).unwrap();
        let got: Vec<(f64, f64)> = states.iter().map(|s| (s.eps_mev(), s.gamma_mev())).collect();
        assert_eq!(got.len(), 3, "{got:?}");
        for ((e, g), (we, wg)) in got.iter().zip([(37.854, 0.1210), (149.127, 1.4002), (325.463, 8.5606)]) {
            assert!((e - we).abs() < 2e-3 && (g - wg).abs() < 2e-4, "({e}, {g})");
        }
        for s in &states {
            assert!(s.pole.re > 0.0 && s.pole.im < 0.0);
            assert!((s.lifetime_fs() * s.gamma - HBAR_EV_FS).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_pole() {
        let states = find_poles(&asymmetric(), 0.3, 10).unwrap();
        assert_eq!(states.len(), 1);
        assert!((states[0].eps_mev() - 89.089).abs() < 2e-3);
        assert!((states[0].gamma_mev() - 2.376).abs() < 2e-3);
    }

    #[test]
    fn max_poles_truncates() {
        let states = find_poles(&symmetric(), 0.4, 2).unwrap();
        assert_eq!(states.len(), 2);
        assert!(states[0].eps < states[1].eps);
    }

    #[test]
    fn flat_profile_has_no_poles() {
        let p = build_profile(&[(160.0, 0.0)], 0.067).unwrap();
        assert!(find_poles(&p, 0.4, 10).unwrap().is_empty());
        let rect = SearchRectangle::for_energy(&p, 0.4);
        assert_eq!(winding_number(&p, &rect).unwrap(), 0);
    }

    #[test]
    fn winding_counts() {
        let p = symmetric();
        let rect = SearchRectangle::for_energy(&p, 0.4);
        assert_eq!(winding_number(&p, &rect).unwrap(), 3);
        let rect = SearchRectangle::for_energy(&p, 0.05);
        assert_eq!(winding_number(&p, &rect).unwrap(), 1);
    }

    #[test]
    fn rejects_non_positive_energy_cap() {
        assert!(find_poles(&symmetric(), 0.0, 3).is_err());
    }

    #[test]
    fn reflected_pole_satisfies_condition() {
        let p = symmetric();
        for s in find_poles(&p, 0.4, 10).unwrap() {
            let f = pole_condition(&p, -s.pole.conj()).unwrap();
            let scale = derivative(&p, s.pole).unwrap().norm() * s.pole.norm();
            assert!(f.norm() < 1e-10 * scale, "{f}");
        }
    }

    #[test]
    fn non_pole_is_rejected() {
        let p = symmetric();
        let k = Complex64::new(0.03, -1e-4);
        assert!(matches!(gamow_state(&p, k), Err(Error::NotAPole { .. })));
    }

    #[test]
    fn gamow_function_outgoing_and_normalized() {
        let p = asymmetric();
        let s = &find_poles(&p, 0.3, 1).unwrap()[0];
        assert!(s.outgoing_residual() < OUTGOING_TOLERANCE);
        assert!((s.normalization() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn gamow_lobes_follow_stationary_wave() {
        let p = symmetric();
        let states = find_poles(&p, 0.4, 2).unwrap();
        let argmax = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            (0..=1000)
                .map(|i| lo + (hi - lo) * i as f64 / 1000.0)
                .max_by(|a, b| f(*a).total_cmp(&f(*b)))
                .unwrap()
        };
        let s1 = &states[0];
        let xm = argmax(&|x| s1.u(x).unwrap().norm_sqr(), 30.0, 130.0);
        assert!((xm - 80.0).abs() < 1.0);
        let xp = argmax(&|x| stationary_wave(&p, s1.eps, x).unwrap().norm_sqr(), 30.0, 130.0);
        assert!((xm - xp).abs() < 1.0);

        let s2 = &states[1];
        let left = argmax(&|x| s2.u(x).unwrap().norm_sqr(), 30.0, 80.0);
        assert!((left - 48.0).abs() < 2.5, "{left}");
        let node = s2.u(80.0).unwrap().norm() / s2.u(left).unwrap().norm();
        assert!(node < 0.05, "{node}");
    }

    #[test]
    fn one_term_phi_near_resonance() {
        let p = symmetric();
        let s = &find_poles(&p, 0.1, 1).unwrap()[0];
        let exact = stationary_wave(&p, s.eps, 80.0).unwrap();
        let approx = one_term_phi(s, s.eps, 80.0).unwrap();
        assert!((approx.norm() / exact.norm() - 1.0).abs() < 0.05);
    }

    #[test]
    fn mass_scan_tracks_targets() {
        let targets = vec![ResonanceTarget {
            segments: vec![(30.0, 0.3), (50.0, 0.0), (100.0, 0.3)],
            eps_mev: 89.089,
            gamma_mev: 2.376,
        }];
        let scan = scan_mass_factor(&targets, &[0.060, 0.067, 0.074], 0.01, 0.01).unwrap();
        assert_eq!(scan.best.mass_factor, 0.067);
        assert_eq!(scan.window, Some((0.067, 0.067)));
        assert!(scan.points[0].eps_error > 1.0);
    }
}
