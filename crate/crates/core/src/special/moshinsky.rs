//! Moshinsky function M(y) = w(iy)/2 and its argument y_q.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use super::{faddeeva_scaled, Scaled};
use crate::error::{Error, Result};
use crate::units::PhysicalConstants;

/// Smallest |y| accepted by [`moshinsky_asymptotic`].
pub const ASYMPTOTIC_MIN_MODULUS: f64 = 8.0;

fn neg_eighth_turn() -> Complex64 {
    Complex64::from_polar(1.0, -FRAC_PI_4)
}

/// Which momentum q a lifetime-unit argument stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgumentKind {
    /// q = k_n
    Pole,
    /// q = -k_n
    NegPole,
    /// q = k_n*
    ConjPole,
    /// q = -k_n*
    NegConjPole,
    /// q = k, incidence exactly at ε_n
    Incident,
    /// q = -k
    NegIncident,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoshinskyArgument(pub Complex64);

impl MoshinskyArgument {
    /// y_q = -e^{-iπ/4} (m/2ħ)^{1/2} (ħq/m) t^{1/2}, with `q` in Å⁻¹ and `t` in fs.
    pub fn physical(q: Complex64, t: f64, constants: &PhysicalConstants) -> Self {
        let hbar = constants.hbar;
        // m in eV·fs²/Å²
        let mass = hbar * hbar / (2.0 * constants.hbar2_over_2m);
        let y = -neg_eighth_turn() * (mass / (2.0 * hbar)).sqrt() * (q * (hbar / mass)) * t.sqrt();
        Self(y)
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

impl From<MoshinskyArgument> for Complex64 {
    fn from(a: MoshinskyArgument) -> Self {
        a.0
    }
}

/// y_q in lifetime units: it depends only on R_n = ε_n/Γ_n and τ = tΓ_n/ħ.
pub fn moshinsky_argument_lifetime_units(ratio: f64, tau: f64, kind: ArgumentKind) -> MoshinskyArgument {
    let (sign, reduced) = match kind {
        ArgumentKind::Pole => (-1.0, Complex64::new(ratio, -0.5)),
        ArgumentKind::NegPole => (1.0, Complex64::new(ratio, -0.5)),
        ArgumentKind::ConjPole => (-1.0, Complex64::new(ratio, 0.5)),
        ArgumentKind::NegConjPole => (1.0, Complex64::new(ratio, 0.5)),
        ArgumentKind::Incident => (-1.0, Complex64::new(ratio, 0.0)),
        ArgumentKind::NegIncident => (1.0, Complex64::new(ratio, 0.0)),
    };
    MoshinskyArgument(neg_eighth_turn() * sign * (reduced * tau).sqrt())
}

/// M(y) = w(iy)/2.
pub fn moshinsky_m(y: Complex64) -> Result<Complex64> {
    moshinsky_m_scaled(y).to_complex("moshinsky")
}

/// M(y) in scaled form. For Re y >= 0 the Faddeeva argument iy lies in the
/// upper half plane and is evaluated directly; otherwise the symmetry
/// relation is applied.
pub fn moshinsky_m_scaled(y: Complex64) -> Scaled {
    if y.re >= 0.0 {
        faddeeva_scaled(Complex64::i() * y).scale(Complex64::new(0.5, 0.0))
    } else {
        moshinsky_reflect(y)
    }
}

/// M(y) = exp(y²) - M(-y).
pub fn moshinsky_reflect(y: Complex64) -> Scaled {
    let other = faddeeva_scaled(-Complex64::i() * y).scale(Complex64::new(0.5, 0.0));
    Scaled::exp(y * y).sub(other)
}

/// a_j of M(y) ~ Σ a_j / y^j. Even coefficients vanish;
/// a_{2m+1} = (-1)^m (2m-1)!! / (2^{m+1} √π).
pub fn asymptotic_coefficient(j: usize) -> f64 {
    if j == 0 || j % 2 == 0 {
        return 0.0;
    }
    let m = (j - 1) / 2;
    let mut c = 1.0 / (2.0 * PI.sqrt());
    for i in 1..=m {
        c *= -((2 * i - 1) as f64) / 2.0;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticValue {
    pub value: Complex64,
    /// Bound on the remainder: the first omitted term, times csc(2|arg y|)
    /// when π/4 < |arg y| < π/2.
    pub truncation_error: f64,
}

/// Large-|y| expansion of M(y) with `n_terms` non-vanishing terms
/// (a₁/y, a₃/y³, ...), valid for -π/2 < arg y < π/2.
pub fn moshinsky_asymptotic(y: Complex64, n_terms: usize) -> Result<AsymptoticValue> {
    moshinsky_asymptotic_with(y, n_terms, ASYMPTOTIC_MIN_MODULUS)
}

pub fn moshinsky_asymptotic_with(y: Complex64, n_terms: usize, min_modulus: f64) -> Result<AsymptoticValue> {
    let phase = y.arg();
    if !(phase.abs() < FRAC_PI_2) {
        return Err(Error::OutsideSector(phase));
    }
    if y.norm() < min_modulus {
        return Err(Error::Config(format!(
            "|y| = {} is below the asymptotic threshold {min_modulus}",
            y.norm()
        )));
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut power = inv;
    let mut value = Complex64::new(0.0, 0.0);
    for m in 0..n_terms {
        value += power * asymptotic_coefficient(2 * m + 1);
        power *= inv2;
    }
    let omitted = (power * asymptotic_coefficient(2 * n_terms + 1)).norm();
    let sector = if phase.abs() <= FRAC_PI_4 {
        1.0
    } else {
        1.0 / (2.0 * phase.abs()).sin()
    };
    Ok(AsymptoticValue {
        value,
        truncation_error: omitted * sector,
    })
}
