//! Points of U(1) stored as unbounded angle accumulators.

use std::f64::consts::{PI, TAU};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A unit complex number `exp(i·angle)`.
///
/// Multiplication in U(1) is angle addition, so the accumulated angle keeps
/// integer winding information that the canonical reduction discards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    angle: f64,
}

impl Phase {
    pub const ZERO: Phase = Phase { angle: 0.0 };

    pub fn from_angle(angle: f64) -> Self {
        Self { angle }
    }

    /// Argument of a complex number given by its real and imaginary parts.
    pub fn from_complex(re: f64, im: f64) -> Self {
        Self {
            angle: im.atan2(re),
        }
    }

    /// Unreduced angle in radians.
    pub fn angle(self) -> f64 {
        self.angle
    }

    /// Angle reduced to `(-π, π]`.
    pub fn canonical(self) -> f64 {
        canonical_angle(self.angle)
    }

    pub fn inverse(self) -> Self {
        Self { angle: -self.angle }
    }

    pub fn to_complex(self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    /// Distance on the circle between the two points, in `[0, π]`.
    pub fn distance(self, other: Phase) -> f64 {
        canonical_angle(self.angle - other.angle).abs()
    }

    /// Number of full turns in the accumulated angle, rounded to nearest.
    pub fn winding(self) -> i64 {
        (self.angle / TAU).round() as i64
    }
}

pub fn canonical_angle(angle: f64) -> f64 {
    let mut r = angle.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        Phase {
            angle: self.angle + rhs.angle,
        }
    }
}

impl AddAssign for Phase {
    fn add_assign(&mut self, rhs: Phase) {
        self.angle += rhs.angle;
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        Phase {
            angle: self.angle - rhs.angle,
        }
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        self.inverse()
    }
}

impl Sum for Phase {
    fn sum<I: Iterator<Item = Phase>>(iter: I) -> Phase {
        iter.fold(Phase::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_range_is_half_open() {
        assert_eq!(canonical_angle(PI), PI);
        assert_eq!(canonical_angle(-PI), PI);
        assert!((canonical_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert_eq!(canonical_angle(0.0), 0.0);
    }

    #[test]
    fn winding_counts_turns() {
        assert_eq!(Phase::from_angle(4.0 * PI + 0.1).winding(), 2);
        assert_eq!(Phase::from_angle(-TAU).winding(), -1);
    }

    proptest! {
        #[test]
        fn group_laws(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (x, y) = (Phase::from_angle(a), Phase::from_angle(b));
            prop_assert!((x + y).distance(y + x) < 1e-12);
            prop_assert!((x + x.inverse()).distance(Phase::ZERO) < 1e-12);
            let (re, im) = (x + y).to_complex();
            prop_assert!(((re * re + im * im) - 1.0).abs() < 1e-12);
            let c = x.canonical();
            prop_assert!(c > -PI && c <= PI);
        }
    }
}
