//! Elevation-plane geometry of the two-vehicle link.
//!
//! Only chassis pitch is modelled; azimuth is fixed at zero. Vehicle 1 carries
//! its array on the front bumper, vehicle 2 on the rear bumper, and the
//! sensed bumper height is taken as the array height.

use serde::{Deserialize, Serialize};

/// Height-deviation to distance ratio above which the small-angle LOS
/// decomposition starts to lose accuracy.
pub const SMALL_ANGLE_WARN_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleGeometry {
    /// Vehicle length in metres.
    pub length: f64,
    /// Array height at rest in metres.
    pub rest_height: f64,
}

impl VehicleGeometry {
    pub fn new(length: f64, rest_height: f64) -> Option<Self> {
        (length > 0.0 && rest_height > 0.0 && length.is_finite() && rest_height.is_finite())
            .then_some(Self { length, rest_height })
    }

    pub fn pitch(&self, height: f64) -> f64 {
        pitch_angle(height, self.rest_height, self.length)
    }
}

/// Instantaneous link geometry at step `time_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub time_index: usize,
    pub h1: f64,
    pub h2: f64,
    /// True inter-vehicle distance.
    pub distance: f64,
    /// Ranging estimate of the distance.
    pub measured_distance: f64,
}

impl LinkState {
    pub fn los(&self) -> f64 {
        los_true(self.h1, self.h2, self.distance)
    }

    /// Whether the stroke deviations are small enough relative to the
    /// distance for the additive pitch decomposition of the LOS to hold.
    pub fn in_small_angle_regime(&self, g1: &VehicleGeometry, g2: &VehicleGeometry) -> bool {
        let worst = (self.h1 - g1.rest_height).abs().max((self.h2 - g2.rest_height).abs());
        worst / self.distance <= SMALL_ANGLE_WARN_RATIO
    }
}

/// Pitch of a vehicle from the height of its front (or rear) array.
pub fn pitch_angle(height: f64, rest_height: f64, length: f64) -> f64 {
    ((height - rest_height) / (0.5 * length)).atan()
}

/// LOS elevation with both vehicles at rest.
pub fn los_nominal(geom1: &VehicleGeometry, geom2: &VehicleGeometry, distance: f64) -> f64 {
    ((geom2.rest_height - geom1.rest_height) / distance).atan()
}

/// Exact LOS elevation from vehicle 1 towards vehicle 2.
pub fn los_true(h1: f64, h2: f64, distance: f64) -> f64 {
    ((h2 - h1) / distance).atan()
}

/// Small-angle decomposition of the perturbed LOS into the nominal LOS minus
/// both pitch terms.
pub fn los_approx(
    h1: f64,
    h2: f64,
    geom1: &VehicleGeometry,
    geom2: &VehicleGeometry,
    distance: f64,
) -> f64 {
    los_nominal(geom1, geom2, distance) - geom1.pitch(h1) - geom2.pitch(h2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table_vehicles() -> (VehicleGeometry, VehicleGeometry) {
        (
            VehicleGeometry::new(4.5, 0.5).unwrap(),
            VehicleGeometry::new(5.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn pitch_examples() {
        assert_eq!(pitch_angle(0.5, 0.5, 4.5), 0.0);
        assert_abs_diff_eq!(pitch_angle(1.05, 1.0, 5.0), 0.02f64.atan(), epsilon = 1e-15);
        assert_abs_diff_eq!(pitch_angle(1.05, 1.0, 5.0), 0.019997, epsilon = 1e-6);
        assert_eq!(pitch_angle(1.03, 1.0, 5.0), -pitch_angle(0.97, 1.0, 5.0));
    }

    #[test]
    fn nominal_los_examples() {
        let (g1, g2) = table_vehicles();
        assert_eq!(los_nominal(&g1, &g1, 5.0), 0.0);
        let los = los_nominal(&g1, &g2, 5.0);
        assert_abs_diff_eq!(los, 0.1f64.atan(), epsilon = 1e-15);
        assert_abs_diff_eq!(los, 0.09967, epsilon = 1e-5);
        assert_abs_diff_eq!(los.to_degrees(), 5.71, epsilon = 0.005);
        assert_eq!(los_nominal(&g2, &g1, 5.0), -los);
    }

    #[test]
    fn true_los_at_rest_equals_nominal() {
        let (g1, g2) = table_vehicles();
        assert_eq!(los_true(0.7, 0.7, 5.0), 0.0);
        assert_eq!(los_true(0.5, 1.0, 5.0), los_nominal(&g1, &g2, 5.0));
    }

    #[test]
    fn decomposition_is_nominal_minus_pitches() {
        let (g1, g2) = table_vehicles();
        let (h1, h2) = (0.53, 0.98);
        let expected = 0.1f64.atan() - (0.03f64 / 2.25).atan() - (-0.02f64 / 2.5).atan();
        assert_abs_diff_eq!(los_approx(h1, h2, &g1, &g2, 5.0), expected, epsilon = 1e-15);
        assert_eq!(los_approx(0.5, 1.0, &g1, &g2, 5.0), los_nominal(&g1, &g2, 5.0));
    }

    #[test]
    fn stroke_perturbation_of_los_shrinks_with_distance() {
        // The exact LOS departs from the nominal one by the translational
        // term only, which is bounded by the stroke spread over distance.
        let (g1, g2) = table_vehicles();
        let mut previous = f64::INFINITY;
        for &d in &[5.0, 50.0, 500.0] {
            let mut worst: f64 = 0.0;
            for i in -6..=6 {
                for j in -6..=6 {
                    let (d1, d2) = (0.005 * i as f64, 0.005 * j as f64);
                    let dev = los_true(0.5 + d1, 1.0 + d2, d) - los_nominal(&g1, &g2, d);
                    assert!(dev.abs() <= (d2 - d1).abs() / d + 1e-15);
                    worst = worst.max(dev.abs());
                }
            }
            assert!(worst < previous);
            previous = worst;
        }
        assert!(previous < 1e-3);
    }

    #[test]
    fn small_angle_regime_flag() {
        let (g1, g2) = table_vehicles();
        let mut s = LinkState {
            time_index: 0,
            h1: 0.52,
            h2: 0.99,
            distance: 5.0,
            measured_distance: 5.0,
        };
        assert!(s.in_small_angle_regime(&g1, &g2));
        s.distance = 0.1;
        assert!(!s.in_small_angle_regime(&g1, &g2));
    }

    proptest! {
        #[test]
        fn angles_bounded_and_antisymmetric(
            h1 in -10.0f64..10.0, h2 in -10.0f64..10.0, d in 0.01f64..1000.0,
        ) {
            let a = los_true(h1, h2, d);
            prop_assert!(a.abs() < std::f64::consts::FRAC_PI_2);
            prop_assert_eq!(a, -los_true(h2, h1, d));
            let p = pitch_angle(h1, 0.5, d);
            prop_assert!(p.abs() < std::f64::consts::FRAC_PI_2);
        }
    }
}
