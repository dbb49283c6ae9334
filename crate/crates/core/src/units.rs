//! Unit system and piecewise-constant potential profiles.
//!
//! Lengths are in Å, energies in eV and times in fs throughout the crate.
//! The potential vanishes for `x < 0` and `x > L`.

use crate::error::{Error, Result};

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;

/// ħ²/2mₑ in eV·Å² for the free-electron mass.
pub const HBAR2_OVER_2ME: f64 = 3.80998;

/// m*/mₑ used when a profile does not state its own mass (GaAs).
pub const DEFAULT_MASS_FACTOR: f64 = 0.067;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub electron_mass_factor: f64,
    pub hbar2_over_2m: f64,
}

impl PhysicalConstants {
    pub fn new(mass_factor: f64) -> Result<Self> {
        if !(mass_factor > 0.0) || !mass_factor.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "mass factor must be positive, got {mass_factor}"
            )));
        }
        Ok(Self {
            hbar: HBAR_EV_FS,
            electron_mass_factor: mass_factor,
            hbar2_over_2m: HBAR2_OVER_2ME / mass_factor,
        })
    }

    /// E = ħ²k²/2m. Works for complex `k` through [`Self::energy_c`].
    pub fn energy(&self, k: f64) -> f64 {
        self.hbar2_over_2m * k * k
    }

    pub fn energy_c(&self, k: num_complex::Complex64) -> num_complex::Complex64 {
        k * k * self.hbar2_over_2m
    }

    pub fn momentum(&self, energy: f64) -> f64 {
        (energy / self.hbar2_over_2m).sqrt()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::new(DEFAULT_MASS_FACTOR).expect("default mass factor is positive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    segments: Vec<Segment>,
    constants: PhysicalConstants,
    length: f64,
}

/// Validates `(width Å, height eV)` pairs and builds a profile starting at x = 0.
pub fn build_profile(segments: &[(f64, f64)], mass_factor: f64) -> Result<PotentialProfile> {
    if segments.is_empty() {
        return Err(Error::InvalidProfile("segment list is empty".into()));
    }
    let constants = PhysicalConstants::new(mass_factor)?;
    let mut out = Vec::with_capacity(segments.len());
    for (i, &(width, height)) in segments.iter().enumerate() {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "segment {i} has non-positive width {width}"
            )));
        }
        if !height.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "segment {i} has non-finite height"
            )));
        }
        out.push(Segment { width, height });
    }
    let length = out.iter().map(|s| s.width).sum();
    Ok(PotentialProfile {
        segments: out,
        constants,
        length,
    })
}

impl PotentialProfile {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn mass_factor(&self) -> f64 {
        self.constants.electron_mass_factor
    }

    /// Total length L in Å.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn max_height(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.height)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Left edge of every segment, plus L as the final entry.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.segments.len() + 1);
        let mut x = 0.0;
        edges.push(x);
        for s in &self.segments {
            x += s.width;
            edges.push(x);
        }
        *edges.last_mut().unwrap() = self.length;
        edges
    }

    /// Intervals of interior segments whose height is exactly zero.
    pub fn well_regions(&self) -> Vec<(f64, f64)> {
        let edges = self.boundaries();
        let last = self.segments.len() - 1;
        self.segments
            .iter()
            .enumerate()
            .filter(|(i, s)| *i != 0 && *i != last && s.height == 0.0)
            .map(|(i, _)| (edges[i], edges[i + 1]))
            .collect()
    }

    /// Same profile with a different effective mass.
    pub fn with_mass_factor(&self, mass_factor: f64) -> Result<Self> {
        let pairs: Vec<_> = self.segments.iter().map(|s| (s.width, s.height)).collect();
        build_profile(&pairs, mass_factor)
    }
}

/// Height of the segment containing `x`; zero outside `[0, L]`. Interior
/// boundaries belong to the segment on their right.
pub fn potential_at(profile: &PotentialProfile, x: f64) -> f64 {
    if x < 0.0 || x > profile.length {
        return 0.0;
    }
    let mut left = 0.0;
    for s in &profile.segments {
        let right = left + s.width;
        if x < right {
            return s.height;
        }
        left = right;
    }
    // x == L
    profile.segments.last().map(|s| s.height).unwrap_or(0.0)
}
