//! Normalized buildup curves, the exponential law fit and the crossover to
//! the non-exponential regime.

use num_complex::Complex64;

use crate::ddouble::{two_prod, DoubleDouble};
use crate::dynamics::TransientSolution;
use crate::error::{Error, Result};
use crate::resonances::ResonantState;
use crate::stationary::stationary_wave;
use crate::units::PotentialProfile;

/// |φ| below which the normalization by φ is refused.
pub const NODE_THRESHOLD: f64 = 1e-12;
pub const FIT_START: f64 = 0.5;
pub const FIT_END: f64 = 6.0;
pub const ONSET_WINDOW: f64 = 0.5;
/// Allowed relative departure of a window slope from −1/2.
pub const ONSET_DEVIATION: f64 = 0.2;
pub const ONSET_PERSISTENCE: usize = 3;
/// RMS residual of ln δ about the fitted line above which the fit is refused.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.02;
const TAIL_OFFSET: f64 = 5.0;
const TAIL_BIN: f64 = 1.0;
const TAIL_MIN_BINS: usize = 4;

/// 1 − e^{−τ/2}.
pub fn exponential_law(tau: f64) -> f64 {
    -(-0.5 * tau).exp_m1()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildupSeries {
    pub taus: Vec<f64>,
    /// |Ψ/φ|
    pub ratio_abs: Vec<f64>,
    /// |Ψ/φ|²
    pub ratio_abs2: Vec<f64>,
    /// δ(τ) = |1 − |Ψ/φ||
    pub delta: Vec<f64>,
    /// Δ(τ)/|φ|² = |Ψ/φ|² − (1 − e^{−τ/2})²
    pub remainder: Vec<f64>,
    /// Resonance index (1-based) when known.
    pub index: Option<usize>,
    /// R_n of the resonance setting the time unit.
    pub ratio: f64,
}

fn abs2_dd(z: Complex64) -> DoubleDouble {
    let (a, b) = two_prod(z.re, z.re);
    let (c, d) = two_prod(z.im, z.im);
    DoubleDouble::new(a, b) + DoubleDouble::new(c, d)
}

impl BuildupSeries {
    /// Builds the series from samples of Ψ/φ on a τ grid.
    pub fn from_ratios(taus: Vec<f64>, ratios: &[Complex64], ratio: f64) -> Result<Self> {
        if taus.len() != ratios.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times for {} samples",
                taus.len(),
                ratios.len()
            )));
        }
        let mut s = Self {
            ratio_abs: Vec::with_capacity(taus.len()),
            ratio_abs2: Vec::with_capacity(taus.len()),
            delta: Vec::with_capacity(taus.len()),
            remainder: Vec::with_capacity(taus.len()),
            taus,
            index: None,
            ratio,
        };
        for (tau, z) in s.taus.iter().zip(ratios) {
            let a2 = abs2_dd(*z);
            let g = exponential_law(*tau);
            let a = z.norm();
            s.ratio_abs.push(a);
            s.ratio_abs2.push(a2.to_f64());
            s.delta.push((1.0 - a).abs());
            s.remainder.push((a2 - DoubleDouble::from_prod(g, g)).to_f64());
        }
        Ok(s)
    }

    pub fn with_index(mut self, n: usize) -> Self {
        self.index = Some(n);
        self
    }
}

/// Divides Ψ by φ(x, k) from the stationary solver and expresses time in
/// lifetimes of `state`.
pub fn normalize_buildup(
    solution: &TransientSolution,
    state: &ResonantState,
    profile: &PotentialProfile,
    energy: f64,
    x: f64,
) -> Result<BuildupSeries> {
    let phi = stationary_wave(profile, energy, x)?;
    if phi.norm() < NODE_THRESHOLD {
        return Err(Error::NodePosition(x));
    }
    let ratios: Vec<Complex64> = solution.psi.iter().map(|p| p / phi).collect();
    BuildupSeries::from_ratios(solution.taus(state), &ratios, state.ratio())
}

/// (τ, ln δ) with the points where δ vanishes left out.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCurve {
    pub points: Vec<(f64, f64)>,
    /// τ values dropped because δ(τ) = 0.
    pub dropped: Vec<f64>,
}

pub fn delta_curve(series: &BuildupSeries) -> DeltaCurve {
    let mut points = Vec::with_capacity(series.taus.len());
    let mut dropped = Vec::new();
    for (&tau, &d) in series.taus.iter().zip(&series.delta) {
        if d > 0.0 {
            points.push((tau, d.ln()));
        } else {
            dropped.push(tau);
        }
    }
    DeltaCurve { points, dropped }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Line {
    slope: f64,
    intercept: f64,
    rms: f64,
}

fn least_squares(points: &[(f64, f64)]) -> Option<Line> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some(Line { slope, intercept, rms })
}

/// Least-squares slope of ln δ over each window [s, s + 0.5), s = 0.5, 1, ...
/// Windows holding fewer than three points are skipped.
pub fn windowed_slopes(curve: &DeltaCurve) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let Some(&(last, _)) = curve.points.last() else {
        return out;
    };
    let mut start = FIT_START;
    let mut i = 0;
    while start + ONSET_WINDOW <= last + 1e-12 {
        let end = start + ONSET_WINDOW;
        while i < curve.points.len() && curve.points[i].0 < start {
            i += 1;
        }
        let j = i + curve.points[i..].iter().take_while(|p| p.0 < end).count();
        if j - i >= 3 {
            if let Some(line) = least_squares(&curve.points[i..j]) {
                out.push((start, line.slope));
            }
        }
        start = end;
    }
    out
}

/// Least-squares slope of ln δ over the points within ±`half_width` of each point.
pub fn local_slopes(curve: &DeltaCurve, half_width: f64) -> Vec<f64> {
    let p = &curve.points;
    let mut s = vec![[0.0; 5]; p.len() + 1];
    for (i, &(x, y)) in p.iter().enumerate() {
        let prev = s[i];
        s[i + 1] = [prev[0] + 1.0, prev[1] + x, prev[2] + y, prev[3] + x * x, prev[4] + x * y];
    }
    let (mut lo, mut hi) = (0, 0);
    p.iter()
        .map(|&(x, _)| {
            while p[lo].0 < x - half_width {
                lo += 1;
            }
            while hi < p.len() && p[hi].0 <= x + half_width {
                hi += 1;
            }
            let d: Vec<f64> = (0..5).map(|j| s[hi][j] - s[lo][j]).collect();
            let den = d[0] * d[3] - d[1] * d[1];
            if d[0] < 2.0 || den <= 0.0 {
                f64::NAN
            } else {
                (d[0] * d[4] - d[1] * d[2]) / den
            }
        })
        .collect()
}

fn deviates(slope: f64) -> bool {
    (slope + 0.5).abs() > ONSET_DEVIATION * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConstantFit {
    /// τ₀ = −1/slope, lifetimes.
    pub tau0: f64,
    /// Fitted slope of ln(1 − |Ψ/φ|) against τ.
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual of the fit.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetReport {
    pub fit: TimeConstantFit,
    pub tau_onset: f64,
    /// Exponent p of the envelope |Δ|/|φ|² ∝ τ^p after the onset, when the
    /// series extends far enough to fit it.
    pub tail_exponent: Option<f64>,
    /// Prefactor A of the same envelope fit.
    pub tail_prefactor: Option<f64>,
}

impl OnsetReport {
    pub fn tau0(&self) -> f64 {
        self.fit.tau0
    }

    pub fn initial_slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Fits ln δ against τ on [0.5, min(6, first deviating window)].
pub fn fit_time_constant(series: &BuildupSeries) -> Result<TimeConstantFit> {
    let curve = delta_curve(series);
    let first_deviation = windowed_slopes(&curve)
        .into_iter()
        .find(|&(_, s)| deviates(s))
        .map(|(start, _)| start);
    fit_window(&curve, first_deviation.map_or(FIT_END, |d| d.min(FIT_END)))
}

fn fit_window(curve: &DeltaCurve, end: f64) -> Result<TimeConstantFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .copied()
        .filter(|p| p.0 >= FIT_START && p.0 <= end)
        .collect();
    let covers = curve.points.first().is_some_and(|p| p.0 <= FIT_START)
        && curve.points.last().is_some_and(|p| p.0 >= end);
    if pts.len() < 3 || !covers {
        return Err(Error::InsufficientData(format!(
            "fit window [{FIT_START}, {end}] holds {} points",
            pts.len()
        )));
    }
    let line = least_squares(&pts).ok_or_else(|| Error::InsufficientData("degenerate fit window".into()))?;
    if line.rms > FIT_RESIDUAL_LIMIT {
        return Err(Error::NonLinearFit(line.rms));
    }
    Ok(TimeConstantFit {
        tau0: -1.0 / line.slope,
        slope: line.slope,
        intercept: line.intercept,
        window: (FIT_START, end),
        residual: line.rms,
    })
}

/// τ_onset is the start of the first of three consecutive windows whose
/// slope of ln δ departs from −1/2 by more than 20%.
pub fn detect_onset(series: &BuildupSeries) -> Result<OnsetReport> {
    let curve = delta_curve(series);
    let slopes = windowed_slopes(&curve);
    let mut run = 0;
    let mut onset = None;
    for (i, &(_, s)) in slopes.iter().enumerate() {
        run = if deviates(s) { run + 1 } else { 0 };
        if run == ONSET_PERSISTENCE {
            onset = Some(slopes[i + 1 - ONSET_PERSISTENCE].0);
            break;
        }
    }
    let tau_onset = onset.ok_or(Error::NoOnset)?;
    let first_deviation = slopes.iter().find(|&&(_, s)| deviates(s)).map(|&(t, _)| t).unwrap();
    let fit = fit_window(&curve, first_deviation.min(FIT_END))?;
    let tail = tail_envelope_fit(series, tau_onset + TAIL_OFFSET);
    Ok(OnsetReport {
        fit,
        tau_onset,
        tail_exponent: tail.map(|t| t.0),
        tail_prefactor: tail.map(|t| t.1),
    })
}

/// Envelope of |Δ|/|φ|²: its maximum in consecutive bins of one lifetime
/// from `start`, fitted as A τ^p in log–log. Returns (p, A).
pub fn tail_envelope_fit(series: &BuildupSeries, start: f64) -> Option<(f64, f64)> {
    let last = *series.taus.last()?;
    let mut pts = Vec::new();
    let mut lo = start;
    while lo + TAIL_BIN <= last + 1e-12 {
        let hi = lo + TAIL_BIN;
        let peak = series
            .taus
            .iter()
            .zip(&series.remainder)
            .filter(|(t, _)| **t >= lo && **t < hi)
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max);
        if peak > 0.0 {
            pts.push(((lo + 0.5 * TAIL_BIN).ln(), peak.ln()));
        }
        lo = hi;
    }
    if pts.len() < TAIL_MIN_BINS {
        return None;
    }
    least_squares(&pts).map(|l| (l.slope, l.intercept.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(taus: &[f64]) -> BuildupSeries {
        let ratios: Vec<Complex64> = taus.iter().map(|&t| Complex64::new(exponential_law(t), 0.0)).collect();
        BuildupSeries::from_ratios(taus.to_vec(), &ratios, 100.0).unwrap()
    }

    fn grid(hi: f64, step: f64) -> Vec<f64> {
        (1..=(hi / step).round() as usize).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn law_values() {
        assert_eq!(exponential_law(0.0), 0.0);
        assert!((exponential_law(2.0) - 0.6321205588285577).abs() < 1e-15);
        assert_eq!(exponential_law(f64::INFINITY), 1.0);
    }

    #[test]
    fn synthetic_fit_is_exact() {
        let s = synthetic(&grid(12.0, 0.01));
        let fit = fit_time_constant(&s).unwrap();
        assert!((fit.tau0 - 2.0).abs() < 1e-10);
        assert_eq!(fit.window, (0.5, 6.0));
        for &(t, ld) in &delta_curve(&s).points {
            assert!((ld + 0.5 * t).abs() < 1e-10);
        }
        assert_eq!(detect_onset(&s), Err(Error::NoOnset));
    }

    #[test]
    fn zero_delta_is_dropped() {
        let ratios = [Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.9, 0.0)];
        let s = BuildupSeries::from_ratios(vec![1.0, 2.0, 3.0], &ratios, 1.0).unwrap();
        let c = delta_curve(&s);
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.dropped, vec![2.0]);
    }

    #[test]
    fn short_series_is_rejected() {
        let s = synthetic(&grid(3.0, 0.01));
        assert!(matches!(fit_time_constant(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn onset_of_exponential_plus_floor() {
        // δ = e^{-τ/2} + 1e-4: the floor takes over near τ = 18.4
        let taus = grid(40.0, 0.01);
        let ratios: Vec<Complex64> = taus
            .iter()
            .map(|&t| Complex64::new(1.0 - (-0.5 * t).exp() - 1e-4, 0.0))
            .collect();
        let s = BuildupSeries::from_ratios(taus, &ratios, 10.0).unwrap();
        let r = detect_onset(&s).unwrap();
        assert!(r.tau_onset > 14.0 && r.tau_onset < 19.0, "{}", r.tau_onset);
        assert!(r.fit.window.1 <= r.tau_onset);
        assert!((r.tau0() - 2.0).abs() < 1e-2);
    }

    #[test]
    fn tail_fit_recovers_power_law() {
        let taus = grid(60.0, 0.005);
        let ratios: Vec<Complex64> = taus
            .iter()
            .map(|&t| {
                let g = exponential_law(t);
                Complex64::new((g * g + 0.01 * t.powf(-0.5) * (30.0 * t).cos()).sqrt(), 0.0)
            })
            .collect();
        let s = BuildupSeries::from_ratios(taus, &ratios, 30.0).unwrap();
        let (p, a) = tail_envelope_fit(&s, 20.0).unwrap();
        assert!((p + 0.5).abs() < 0.02, "{p}");
        assert!((a - 0.01).abs() < 1e-3);
    }

    #[test]
    fn local_slope_of_a_line() {
        let s = synthetic(&grid(10.0, 0.01));
        let c = delta_curve(&s);
        for v in local_slopes(&c, 0.25) {
            assert!((v + 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_lengths() {
        assert!(BuildupSeries::from_ratios(vec![1.0], &[], 1.0).is_err());
    }
}
