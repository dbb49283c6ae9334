#![allow(dead_code)]

use std::path::PathBuf;

use rtbuildup::analysis::{normalize_buildup, BuildupSeries};
use rtbuildup::cli::load_profile;
use rtbuildup::dynamics::{evolve_single_resonance, TimeGrid};
use rtbuildup::resonances::{find_poles, ResonantState};
use rtbuildup::units::PotentialProfile;

pub fn profile_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../profiles").join(name)
}

pub fn shipped(name: &str) -> PotentialProfile {
    load_profile(&profile_path(name)).unwrap()
}

pub struct Case {
    pub label: &'static str,
    pub profile: PotentialProfile,
    pub state: ResonantState,
    pub x: f64,
}

/// The four reference configurations: symmetric n = 1, 2, 3 at
/// 80, 48, 80 Å and asymmetric n = 1 at 55 Å.
pub fn cases() -> Vec<Case> {
    let sym = shipped("symmetric.conf");
    let asym = shipped("asymmetric.conf");
    let sp = find_poles(&sym, 0.5, 3).unwrap();
    let ap = find_poles(&asym, 0.3, 1).unwrap();
    vec![
        Case { label: "symmetric n=1", profile: sym.clone(), state: sp[0].clone(), x: 80.0 },
        Case { label: "symmetric n=2", profile: sym.clone(), state: sp[1].clone(), x: 48.0 },
        Case { label: "symmetric n=3", profile: sym, state: sp[2].clone(), x: 80.0 },
        Case { label: "asymmetric n=1", profile: asym, state: ap[0].clone(), x: 55.0 },
    ]
}

pub fn linear(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// On-resonance single-resonance buildup on the given τ grid.
pub fn series(case: &Case, taus: &[f64]) -> BuildupSeries {
    let s = &case.state;
    let grid = TimeGrid::from_lifetimes(taus, s.lifetime_fs()).unwrap();
    let sol = evolve_single_resonance(&case.profile, s, s.eps, case.x, &grid).unwrap();
    normalize_buildup(&sol, s, &case.profile, s.eps, case.x).unwrap()
}

/// Step fine enough to follow the ripple of period 2π/R_n.
pub fn ripple_step(state: &ResonantState) -> f64 {
    (2.0 * std::f64::consts::PI / (16.0 * state.ratio())).min(0.01)
}
