use num_complex::Complex64;

use super::Scaled;
use crate::ddouble::{two_prod, ComplexDD, DoubleDouble};
use crate::error::Result;

const INV_SQRT_PI: f64 = 0.5641895835477563;
const TWO_OVER_SQRT_PI: DoubleDouble = DoubleDouble::new(std::f64::consts::FRAC_2_SQRT_PI, 1.533545961316588e-17);

/// Inside this radius the Maclaurin series is summed in double-double.
const SERIES_RADIUS: f64 = 6.0;

/// w(z) = exp(-z²) erfc(-iz).
///
/// Fails with [`crate::Error::Overflow`] only when the value itself does not
/// fit in a double (deep in the lower half plane); [`faddeeva_scaled`] always
/// succeeds.
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    faddeeva_scaled(z).to_complex("faddeeva")
}

/// w(z) in scaled form. The upper half plane is evaluated directly; below the
/// real axis the reflection w(z) = 2 exp(-z²) - w(-z) is used with the
/// exponential kept separate.
pub fn faddeeva_scaled(z: Complex64) -> Scaled {
    if z.im >= 0.0 || z.im.is_nan() {
        return Scaled::unscaled(upper(z));
    }
    let reflected = upper(-z);
    let (x, y) = (z.re, z.im);
    // -z² = (y - x)(y + x) - 2ixy
    let s = (y - x) * (y + x);
    let (p, e) = two_prod(-2.0 * x, y);
    let (sin_p, cos_p) = p.sin_cos();
    let phase = Complex64::new(cos_p - sin_p * e, sin_p + cos_p * e);
    if s < 600.0 {
        Scaled::unscaled(phase * (2.0 * s.exp()) - reflected)
    } else {
        Scaled {
            mantissa: phase * 2.0 - reflected * (-s).exp(),
            log_scale: s,
        }
    }
}

fn upper(z: Complex64) -> Complex64 {
    if z.re.is_nan() || z.im.is_nan() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let mut w = if z.norm() < SERIES_RADIUS {
        maclaurin(z)
    } else {
        continued_fraction(z)
    };
    // Exact identities on the axes.
    if z.im == 0.0 {
        w.re = (-z.re * z.re).exp();
    }
    if z.re == 0.0 {
        w.im = 0.0;
    }
    w
}

/// w(z) = Σ (iz)ⁿ / Γ(n/2 + 1). The terms grow to about exp(|z|²) before
/// decaying, so the sum is carried in double-double.
fn maclaurin(z: Complex64) -> Complex64 {
    let zeta = ComplexDD::from_c64(Complex64::new(-z.im, z.re));
    let zeta2 = zeta * zeta;
    let mut even = ComplexDD::from_c64(Complex64::new(1.0, 0.0));
    let mut odd = zeta.scale(TWO_OVER_SQRT_PI);
    let mut sum = even + odd;
    let r2 = z.norm_sqr();
    for m in 1..2000 {
        let mf = m as f64;
        even = (even * zeta2).div_f64(mf);
        odd = (odd * zeta2).div_f64(mf + 0.5);
        sum = sum + even + odd;
        if mf > r2 && even.norm1() + odd.norm1() < 1e-18 * sum.norm1() {
            break;
        }
    }
    sum.to_c64()
}

/// Laplace continued fraction w(z) = (i/√π) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...)))),
/// valid for Im z >= 0 away from the origin.
fn continued_fraction(z: Complex64) -> Complex64 {
    let x = z.re.abs();
    let y = z.im;
    let depth = (1.5 * (3.9 + 11.398 / (0.08254 * x + 0.1421 * y + 0.2023))).floor() as usize + 5;
    let mut w = z;
    for k in (1..depth).rev() {
        w = z - (0.5 * k as f64) / w;
    }
    Complex64::new(0.0, INV_SQRT_PI) / w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn value_at_origin() {
        assert_eq!(faddeeva(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn value_on_imaginary_axis() {
        // e * erfc(1), from a 50-digit evaluation
        let w = faddeeva(Complex64::new(0.0, 1.0)).unwrap();
        assert!(rel(w, Complex64::new(0.427583576155807, 0.0)) < 1e-14);
    }

    #[test]
    fn real_axis_real_part_is_gaussian() {
        for &x in &[0.1, 1.0, 3.0, 5.9, 6.1, 12.0, 27.0] {
            let w = faddeeva(Complex64::new(x, 0.0)).unwrap();
            assert_eq!(w.re, (-x * x).exp());
            // Im w(x) ~ 1/(sqrt(pi) x) for large x
            if x > 10.0 {
                assert!((w.im * PI.sqrt() * x - 1.0).abs() < 1.0 / x);
            }
        }
    }

    #[test]
    fn branches_agree_across_the_switch_radius() {
        for k in 0..64 {
            let th = PI * (k as f64 + 0.5) / 64.0;
            let inside = Complex64::from_polar(SERIES_RADIUS * (1.0 - 1e-9), th);
            let outside = Complex64::from_polar(SERIES_RADIUS * (1.0 + 1e-9), th);
            let a = maclaurin(inside);
            let b = continued_fraction(outside);
            assert!(rel(a, b) < 1e-8, "theta {th}: {a} vs {b}");
            let c = maclaurin(outside);
            assert!(rel(c, b) < 2e-14, "theta {th}: {c} vs {b}");
        }
    }

    #[test]
    fn far_lower_half_plane_stays_scaled() {
        let z = Complex64::new(0.3, -40.0);
        assert!(faddeeva(z).is_err());
        let s = faddeeva_scaled(z);
        // |w| ~ 2 exp(y² - x²)
        assert!((s.ln_abs() - (1600.0 - 0.09 + 2f64.ln())).abs() < 1e-9);
    }
}
