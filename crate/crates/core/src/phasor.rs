//! Complex per-unit quantities.
//!
//! Voltages, currents, impedances, admittances and complex powers are all
//! carried as [`Phasor`], a plain `Complex64`. External formats use
//! magnitude plus angle in degrees; everything internal is rectangular with
//! radians where an angle is needed.

use num_complex::Complex64;

/// Complex per-unit electrical quantity.
pub type Phasor = Complex64;

/// Magnitudes below this are treated as having no defined angle.
pub const ANGLE_EPSILON: f64 = 1e-300;

/// Builds a phasor from magnitude and angle in degrees.
pub fn from_polar_deg(magnitude: f64, angle_deg: f64) -> Phasor {
    Complex64::from_polar(magnitude, angle_deg.to_radians())
}

/// Returns `(magnitude, angle_deg)`, or `None` for the angle when the phasor
/// is zero.
pub fn to_polar_deg(p: Phasor) -> (f64, Option<f64>) {
    let mag = p.norm();
    if mag > ANGLE_EPSILON {
        (mag, Some(p.arg().to_degrees()))
    } else {
        (mag, None)
    }
}

/// Both parts finite.
pub fn is_finite(p: Phasor) -> bool {
    p.re.is_finite() && p.im.is_finite()
}

/// `|a - b| / |b|`, falling back to the absolute difference when `b` is zero.
pub fn relative_error(a: Phasor, b: Phasor) -> f64 {
    let scale = b.norm();
    if scale > 0.0 {
        (a - b).norm() / scale
    } else {
        (a - b).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_has_no_angle() {
        let (mag, ang) = to_polar_deg(Phasor::new(0.0, 0.0));
        assert_eq!(mag, 0.0);
        assert!(ang.is_none());
    }

    #[test]
    fn known_polar_value() {
        let (mag, ang) = to_polar_deg(Phasor::new(0.5, -0.2));
        assert!((mag - 0.538_516_480_713_450_4).abs() < 1e-15);
        assert!((ang.unwrap() + 21.801_409_486_351_81).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn polar_round_trip(re in -100.0f64..100.0, im in -100.0f64..100.0) {
            let p = Phasor::new(re, im);
            prop_assume!(p.norm() > 1e-9);
            let (mag, ang) = to_polar_deg(p);
            let back = from_polar_deg(mag, ang.unwrap());
            prop_assert!(relative_error(back, p) <= 1e-12);
        }

        #[test]
        fn full_turn_is_identity(mag in 1e-6f64..100.0, ang in -720.0f64..720.0) {
            let a = from_polar_deg(mag, ang);
            let b = from_polar_deg(mag, ang + 360.0);
            prop_assert!(relative_error(b, a) <= 1e-12);
        }
    }
}
