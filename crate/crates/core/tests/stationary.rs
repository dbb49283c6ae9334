use num_complex::Complex64;
use proptest::prelude::*;
use rtbuildup::stationary::{transfer_matrix, StationaryState};
use rtbuildup::units::{build_profile, potential_at, PotentialProfile};

fn symmetric() -> PotentialProfile {
    build_profile(&[(30.0, 0.5), (100.0, 0.0), (30.0, 0.5)], 0.067).unwrap()
}

fn arb_segments() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.0f64..60.0, -0.2f64..0.8), 1..5)
}

#[test]
fn unitarity_over_dense_grid() {
    for p in [symmetric(), build_profile(&[(30.0, 0.3), (50.0, 0.0), (100.0, 0.3)], 0.067).unwrap()] {
        for i in 0..1000 {
            let e = 1e-3 * (1e3f64).powf(i as f64 / 999.0);
            let s = StationaryState::new(&p, e).unwrap();
            let sum = s.transmission_probability() + s.reflection_probability();
            assert!((sum - 1.0).abs() < 1e-10, "E = {e}: {sum}");
        }
    }
}

#[test]
fn schrodinger_equation_holds_segmentwise() {
    let p = symmetric();
    let c = p.constants().hbar2_over_2m;
    for &e in &[0.0378, 0.2, 0.7] {
        let s = StationaryState::new(&p, e).unwrap();
        let h = 1e-3;
        let mut x = 1.0;
        while x < 159.0 {
            let near_edge = [30.0f64, 130.0].iter().any(|b| (x - b).abs() < 2.0 * h);
            if !near_edge {
                let f = |x: f64| s.phi(x).unwrap();
                let second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let rhs = f(x) * (potential_at(&p, x) - e) / c;
                let scale = f(x).norm() * (potential_at(&p, x) - e).abs() / c;
                // second differences lose about eps/h² of |phi| to rounding
                let floor = 1e-7 * f(x).norm();
                assert!((second - rhs).norm() < 1e-6 * scale + floor, "x = {x}, E = {e}");
            }
            x += 0.37;
        }
    }
}

#[test]
fn wave_is_smooth_across_boundaries() {
    let p = symmetric();
    let s = StationaryState::new(&p, 0.149).unwrap();
    for &b in &[30.0, 130.0] {
        let eps = 1e-9;
        let (l, dl) = s.phi_and_derivative(b - eps).unwrap();
        let (r, dr) = s.phi_and_derivative(b + eps).unwrap();
        assert!((l - r).norm() < 1e-8 * l.norm());
        assert!((dl - dr).norm() < 1e-8 * dl.norm().max(l.norm()));
    }
}

#[test]
fn left_boundary_matches_incident_plus_reflected() {
    let p = symmetric();
    let s = StationaryState::new(&p, 0.1).unwrap();
    let (phi0, dphi0) = s.phi_and_derivative(0.0).unwrap();
    let ik = Complex64::new(0.0, s.k);
    assert!((phi0 - (1.0 + s.reflection)).norm() < 1e-12);
    assert!((dphi0 - ik * (1.0 - s.reflection)).norm() < 1e-12);
    let (phil, dphil) = s.phi_and_derivative(160.0).unwrap();
    assert!((phil - s.transmission).norm() < 1e-10);
    assert!((dphil - ik * s.transmission).norm() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_is_one(segs in arb_segments(), re in 0.005f64..0.3, im in -0.05f64..0.05) {
        let p = build_profile(&segs, 0.067).unwrap();
        let m = transfer_matrix(&p, Complex64::new(re, im)).unwrap();
        let scale = m.m11.norm() * m.m22.norm() + m.m12.norm() * m.m21.norm();
        prop_assert!((m.determinant() - 1.0).norm() < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn composition(a in arb_segments(), b in arb_segments(), re in 0.005f64..0.3, im in -0.03f64..0.0) {
        let k = Complex64::new(re, im);
        let joined: Vec<(f64, f64)> = a.iter().chain(&b).copied().collect();
        let ma = transfer_matrix(&build_profile(&a, 0.067).unwrap(), k).unwrap();
        let mb = transfer_matrix(&build_profile(&b, 0.067).unwrap(), k).unwrap();
        let mab = transfer_matrix(&build_profile(&joined, 0.067).unwrap(), k).unwrap();
        let c = mb.compose(&ma);
        let scale = mab.m11.norm() + mab.m12.norm() + mab.m21.norm() + mab.m22.norm();
        for (x, y) in [(c.m11, mab.m11), (c.m12, mab.m12), (c.m21, mab.m21), (c.m22, mab.m22)] {
            prop_assert!((x - y).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn unitarity_random_profiles(segs in arb_segments(), e in 1e-3f64..2.0) {
        let p = build_profile(&segs, 0.067).unwrap();
        let s = StationaryState::new(&p, e).unwrap();
        prop_assert!((s.transmission_probability() + s.reflection_probability() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn splitting_a_segment_leaves_scattering_unchanged(segs in arb_segments(), e in 1e-3f64..1.0, frac in 0.1f64..0.9) {
        let mut split = Vec::new();
        for (i, &(w, h)) in segs.iter().enumerate() {
            if i == 0 {
                split.push((w * frac, h));
                split.push((w * (1.0 - frac), h));
            } else {
                split.push((w, h));
            }
        }
        let a = StationaryState::new(&build_profile(&segs, 0.067).unwrap(), e).unwrap();
        let b = StationaryState::new(&build_profile(&split, 0.067).unwrap(), e).unwrap();
        prop_assert!((a.transmission - b.transmission).norm() < 1e-9 * a.transmission.norm().max(1e-3));
    }
}
