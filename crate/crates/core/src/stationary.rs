//! Scattering states of a piecewise-constant potential by the transfer-matrix
//! method, for real or complex momentum.
//!
//! Inside each segment the wavefunction is propagated as the pair (ψ, ψ′):
//!
//! ```text
//! | ψ(x+w)  |   |  cos κw      sin κw / κ | | ψ(x)  |
//! | ψ′(x+w) | = | -κ sin κw    cos κw     | | ψ′(x) |
//! ```
//!
//! which is even in κ, so the result is an entire function of the energy and
//! the branch of κ = √(2m(E−V))/ħ never matters. Plane-wave amplitudes
//! (right-moving, left-moving) outside the structure are converted with
//! `Q(k) = [[1, 1], [ik, -ik]]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::PotentialProfile;

const I: Complex64 = Complex64::new(0.0, 1.0);

type Mat2 = [[Complex64; 2]; 2];
type State = [Complex64; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn apply(m: &Mat2, v: State) -> State {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// (ψ, ψ′) propagator over a distance `w` for local κ² = `kappa2`.
fn propagator(kappa2: Complex64, w: f64) -> Mat2 {
    if kappa2 == Complex64::new(0.0, 0.0) {
        let one = Complex64::new(1.0, 0.0);
        return [[one, Complex64::new(w, 0.0)], [Complex64::new(0.0, 0.0), one]];
    }
    let kappa = kappa2.sqrt();
    let phase = kappa * w;
    let (s, c) = (phase.sin(), phase.cos());
    [[c, s / kappa], [-kappa * s, c]]
}

/// Amplitudes relating plane waves on the left of the structure,
/// `A_L e^{ikx} + B_L e^{-ikx}`, to those on the right,
/// `A_R e^{ik(x-L)} + B_R e^{-ik(x-L)}`: `(A_R, B_R) = M (A_L, B_L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub fn determinant(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &TransferMatrix) -> TransferMatrix {
        let p = mat_mul(&self.as_array(), &other.as_array());
        Self::from_array(p)
    }

    /// t = 1/M₂₂ (right amplitude referred to x = L).
    pub fn transmission(&self) -> Complex64 {
        1.0 / self.m22
    }

    pub fn reflection(&self) -> Complex64 {
        -self.m21 / self.m22
    }

    fn as_array(&self) -> Mat2 {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    fn from_array(m: Mat2) -> Self {
        Self {
            m11: m[0][0],
            m12: m[0][1],
            m21: m[1][0],
            m22: m[1][1],
        }
    }
}

/// Local κ² = (E − V)/(ħ²/2m) of every segment.
fn local_kappa2(profile: &PotentialProfile, energy: Complex64) -> Vec<Complex64> {
    let c = profile.constants().hbar2_over_2m;
    profile
        .segments()
        .iter()
        .map(|s| (energy - s.height) / c)
        .collect()
}

fn interior_propagator(profile: &PotentialProfile, energy: Complex64) -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut p = [[one, zero], [zero, one]];
    for (seg, kappa2) in profile.segments().iter().zip(local_kappa2(profile, energy)) {
        p = mat_mul(&propagator(kappa2, seg.width), &p);
    }
    p
}

/// Transfer matrix at complex momentum `k` (Å⁻¹).
pub fn transfer_matrix(profile: &PotentialProfile, k: Complex64) -> Result<TransferMatrix> {
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroMomentum);
    }
    let energy = profile.constants().energy_c(k);
    let p = interior_propagator(profile, energy);
    let half = Complex64::new(0.5, 0.0);
    let q = [[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)], [I * k, -I * k]];
    let q_inv = [[half, half / (I * k)], [half, -half / (I * k)]];
    Ok(TransferMatrix::from_array(mat_mul(&q_inv, &mat_mul(&p, &q))))
}

/// Solution of the Schrödinger equation on [0, L], stored as (ψ, ψ′) at one
/// end of every segment.
///
/// A wave built from the left is evaluated forward from each segment start;
/// one built from the right is evaluated backward from each segment end,
/// which keeps the physical solution the growing one inside barriers when it
/// is the transmitted side that is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseWave {
    edges: Vec<f64>,
    kappa2: Vec<Complex64>,
    anchors: Vec<State>,
    from_right: bool,
    start: State,
    end: State,
}

impl PiecewiseWave {
    /// Propagates `initial` = (ψ, ψ′) at x = 0 to the right.
    pub fn new(profile: &PotentialProfile, energy: Complex64, initial: State) -> Self {
        let kappa2 = local_kappa2(profile, energy);
        let mut anchors = Vec::with_capacity(kappa2.len());
        let mut v = initial;
        for (seg, &k2) in profile.segments().iter().zip(&kappa2) {
            anchors.push(v);
            v = apply(&propagator(k2, seg.width), v);
        }
        Self {
            edges: profile.boundaries(),
            kappa2,
            anchors,
            from_right: false,
            start: initial,
            end: v,
        }
    }

    /// Propagates `last` = (ψ, ψ′) at x = L to the left.
    pub fn from_right(profile: &PotentialProfile, energy: Complex64, last: State) -> Self {
        let kappa2 = local_kappa2(profile, energy);
        let mut anchors = vec![last; kappa2.len()];
        let mut v = last;
        for (j, seg) in profile.segments().iter().enumerate().rev() {
            anchors[j] = v;
            v = apply(&propagator(kappa2[j], -seg.width), v);
        }
        Self {
            edges: profile.boundaries(),
            kappa2,
            anchors,
            from_right: true,
            start: v,
            end: last,
        }
    }

    pub fn length(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Segment boundaries, 0 and L included.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// (ψ, ψ′) at `x`; the caller guarantees `0 <= x <= L`.
    pub fn state(&self, x: f64) -> State {
        if x >= self.length() {
            return self.end;
        }
        if x <= 0.0 {
            return self.start;
        }
        let n = self.kappa2.len();
        let mut j = 0;
        while j + 1 < n && x >= self.edges[j + 1] {
            j += 1;
        }
        let anchor = if self.from_right { self.edges[j + 1] } else { self.edges[j] };
        apply(&propagator(self.kappa2[j], x - anchor), self.anchors[j])
    }

    pub fn at_start(&self) -> State {
        self.start
    }

    pub fn at_end(&self) -> State {
        self.end
    }

    pub fn scale(&mut self, factor: Complex64) {
        let all = self
            .anchors
            .iter_mut()
            .chain(std::iter::once(&mut self.start))
            .chain(std::iter::once(&mut self.end));
        for s in all {
            s[0] *= factor;
            s[1] *= factor;
        }
    }

    pub(crate) fn check_range(&self, x: f64) -> Result<()> {
        if !(0.0..=self.length()).contains(&x) {
            return Err(Error::PositionOutOfRange {
                x,
                length: self.length(),
            });
        }
        Ok(())
    }
}

/// Scattering state for a unit-amplitude wave e^{ikx} incident from the left.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    pub energy: f64,
    pub k: f64,
    /// Transmitted amplitude, referred to x = L.
    pub transmission: Complex64,
    pub reflection: Complex64,
    wave: PiecewiseWave,
}

impl StationaryState {
    pub fn new(profile: &PotentialProfile, energy: f64) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::NonPositiveEnergy(energy));
        }
        let k = profile.constants().momentum(energy);
        let kc = Complex64::new(k, 0.0);
        let m = transfer_matrix(profile, kc)?;
        let t = m.transmission();
        Ok(Self {
            energy,
            k,
            transmission: t,
            reflection: m.reflection(),
            wave: PiecewiseWave::from_right(profile, Complex64::new(energy, 0.0), [t, I * kc * t]),
        })
    }

    /// φ(x, k) for 0 ≤ x ≤ L.
    pub fn phi(&self, x: f64) -> Result<Complex64> {
        self.wave.check_range(x)?;
        Ok(self.wave.state(x)[0])
    }

    pub fn phi_and_derivative(&self, x: f64) -> Result<(Complex64, Complex64)> {
        self.wave.check_range(x)?;
        let s = self.wave.state(x);
        Ok((s[0], s[1]))
    }

    pub fn transmission_probability(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    pub fn reflection_probability(&self) -> f64 {
        self.reflection.norm_sqr()
    }
}

/// φ(x, k) at energy `energy` (eV) and position `x` (Å).
pub fn stationary_wave(profile: &PotentialProfile, energy: f64, x: f64) -> Result<Complex64> {
    StationaryState::new(profile, energy)?.phi(x)
}

pub fn transmission_probability(profile: &PotentialProfile, energy: f64) -> Result<f64> {
    let k = profile.constants().momentum(energy);
    Ok(transfer_matrix(profile, Complex64::new(k, 0.0))?
        .transmission()
        .norm_sqr())
}

/// Grid density used when a scan size is not given.
pub const SCAN_POINTS_PER_DECADE: f64 = 2000.0;

/// Local maxima of |t|² must stand out from both neighbours by at least this much.
const PEAK_PROMINENCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionScan {
    /// (E eV, |t|²) on a grid uniform in ln E.
    pub points: Vec<(f64, f64)>,
    /// Refined energies of the interior local maxima, ascending.
    pub peaks: Vec<f64>,
}

pub fn default_scan_points(e_min: f64, e_max: f64) -> usize {
    ((e_max / e_min).log10() * SCAN_POINTS_PER_DECADE).ceil().max(16.0) as usize
}

/// Samples |t(E)|² on `n_points` energies log-spaced over `[e_min, e_max]`
/// and refines each interior local maximum by golden-section search.
pub fn transmission_scan(
    profile: &PotentialProfile,
    e_min: f64,
    e_max: f64,
    n_points: usize,
) -> Result<TransmissionScan> {
    if !(e_min > 0.0 && e_max > e_min) {
        return Err(Error::Config(format!(
            "scan needs 0 < E_min < E_max, got [{e_min}, {e_max}]"
        )));
    }
    let n = n_points.max(3);
    let ratio = (e_max / e_min).ln();
    let points = (0..n)
        .map(|i| {
            let e = e_min * (ratio * i as f64 / (n - 1) as f64).exp();
            transmission_probability(profile, e).map(|t| (e, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut peaks = Vec::new();
    for w in points.windows(3) {
        let (lo, mid, hi) = (w[0], w[1], w[2]);
        if mid.1 - lo.1 > PEAK_PROMINENCE && mid.1 - hi.1 > PEAK_PROMINENCE {
            peaks.push(golden_section_max(
                |e| transmission_probability(profile, e).unwrap_or(0.0),
                lo.0,
                hi.0,
            ));
        }
    }
    Ok(TransmissionScan { points, peaks })
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * b.abs() {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::build_profile;

    fn symmetric() -> PotentialProfile {
        build_profile(&[(30.0, 0.5), (100.0, 0.0), (30.0, 0.5)], 0.067).unwrap()
    }

    fn asymmetric() -> PotentialProfile {
        build_profile(&[(30.0, 0.3), (50.0, 0.0), (100.0, 0.3)], 0.067).unwrap()
    }

    fn free() -> PotentialProfile {
        build_profile(&[(160.0, 0.0)], 0.067).unwrap()
    }

    /// Textbook rectangular-barrier transmission for E < V.
    fn single_barrier_oracle(v: f64, a: f64, e: f64, c: f64) -> f64 {
        let q = ((v - e) / c).sqrt();
        let s = (q * a).sinh();
        1.0 / (1.0 + v * v * s * s / (4.0 * e * (v - e)))
    }

    #[test]
    fn free_propagation() {
        let p = free();
        for &e in &[0.001, 0.05, 0.7, 3.0] {
            let k = p.constants().momentum(e);
            let m = transfer_matrix(&p, Complex64::new(k, 0.0)).unwrap();
            assert!((m.transmission().norm() - 1.0).abs() < 1e-13);
            assert!(m.reflection().norm() < 1e-13);
            for &x in &[0.0, 33.0, 160.0] {
                assert!((stationary_wave(&p, e, x).unwrap().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_barrier_matches_closed_form() {
        let p = build_profile(&[(30.0, 0.5)], 0.067).unwrap();
        let c = p.constants().hbar2_over_2m;
        for &e in &[0.01, 0.1, 0.3, 0.49] {
            let t = transmission_probability(&p, e).unwrap();
            let exact = single_barrier_oracle(0.5, 30.0, e, c);
            assert!((t - exact).abs() <= 1e-10 * exact, "E={e}: {t} vs {exact}");
        }
    }

    #[test]
    fn symmetric_resonance_is_fully_transmitting() {
        let p = symmetric();
        let scan = transmission_scan(&p, 0.03, 0.045, 400).unwrap();
        assert_eq!(scan.peaks.len(), 1);
        let e = scan.peaks[0];
        assert!((e - 0.0378).abs() < 2e-4, "peak at {e}");
        assert!(transmission_probability(&p, e).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn scan_seeds() {
        let p = symmetric();
        let scan = transmission_scan(&p, 0.001, 0.4, default_scan_points(0.001, 0.4)).unwrap();
        let mev: Vec<f64> = scan.peaks.iter().map(|e| e * 1e3).collect();
        assert_eq!(mev.len(), 3, "{mev:?}");
        for (got, want) in mev.iter().zip([37.8, 149.2, 325.7]) {
            assert!((got - want).abs() < 0.5, "{got} vs {want}");
        }

        let scan = transmission_scan(&asymmetric(), 0.001, 0.3, default_scan_points(0.001, 0.3)).unwrap();
        assert!((scan.peaks[0] * 1e3 - 89.1).abs() < 0.5);

        let scan = transmission_scan(&free(), 0.001, 0.4, 5000).unwrap();
        assert!(scan.peaks.is_empty());
        assert!(scan.points.iter().all(|&(_, t)| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scan_rejects_bad_range() {
        assert!(transmission_scan(&symmetric(), 0.2, 0.1, 10).is_err());
        assert!(transmission_scan(&symmetric(), 0.0, 0.1, 10).is_err());
    }

    #[test]
    fn stationary_wave_shape_at_resonances() {
        let p = symmetric();
        let lobes = |e: f64| -> Vec<f64> {
            let xs: Vec<f64> = (0..=1000).map(|i| 30.0 + 0.1 * i as f64).collect();
            let d: Vec<f64> = xs.iter().map(|&x| stationary_wave(&p, e, x).unwrap().norm_sqr()).collect();
            (1..d.len() - 1)
                .filter(|&i| d[i] > d[i - 1] && d[i] > d[i + 1])
                .map(|i| xs[i])
                .collect()
        };
        let one = lobes(0.0378538582500719);
        assert_eq!(one.len(), 1);
        assert!((one[0] - 80.0).abs() < 1.0);
        let two = lobes(0.149127452547307);
        assert_eq!(two.len(), 2);
        assert!((two[0] - 48.0).abs() < 2.0, "{two:?}");
    }

    #[test]
    fn zero_momentum_and_range_errors() {
        let p = symmetric();
        assert_eq!(transfer_matrix(&p, Complex64::new(0.0, 0.0)), Err(Error::ZeroMomentum));
        assert!(matches!(stationary_wave(&p, 0.1, -1.0), Err(Error::PositionOutOfRange { .. })));
        assert!(matches!(stationary_wave(&p, 0.1, 161.0), Err(Error::PositionOutOfRange { .. })));
        assert!(matches!(stationary_wave(&p, -0.1, 10.0), Err(Error::NonPositiveEnergy(_))));
    }

    #[test]
    fn thick_barrier_wave_decays() {
        let p = build_profile(&[(30.0, 0.5), (100.0, 0.0), (500.0, 3.0)], 0.067).unwrap();
        let s = StationaryState::new(&p, 0.05).unwrap();
        let (phi0, _) = s.phi_and_derivative(0.0).unwrap();
        assert!((phi0 - (1.0 + s.reflection)).norm() < 1e-12);
        let mut last = f64::INFINITY;
        for x in [200.0, 300.0, 400.0, 500.0] {
            let v = s.phi(x).unwrap().norm();
            assert!(v < last * 1e-8, "x = {x}: {v}");
            last = v;
        }
    }

    #[test]
    fn energy_at_barrier_top_is_regular() {
        // κ = 0 inside the barrier: the propagator takes its linear limit
        let p = symmetric();
        let t = transmission_probability(&p, 0.5).unwrap();
        let near = transmission_probability(&p, 0.5 * (1.0 + 1e-9)).unwrap();
        assert!((t - near).abs() < 1e-6);
    }
}
