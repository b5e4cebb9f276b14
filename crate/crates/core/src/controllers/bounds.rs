//! Ranges that the tanh outputs of the actors are mapped into.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Affine map of `a` in `[-1, 1]` into the interval.
    pub fn from_unit(&self, a: f64) -> f64 {
        let a = a.clamp(-1.0, 1.0);
        self.lo + 0.5 * (a + 1.0) * (self.hi - self.lo)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        if self.hi == self.lo {
            return 0.0;
        }
        2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn check(&self, name: &str, v: f64) -> Result<()> {
        // a small slack absorbs the rounding of the affine map
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        if v >= self.lo - slack && v <= self.hi + slack {
            Ok(())
        } else {
            Err(Error::BoundsViolation {
                name: name.to_string(),
                value: v,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "bad range for {name}: [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainBounds {
    pub k_r: Range,
    pub b_r: Range,
    pub k_theta: Range,
    pub b_theta: Range,
}

impl Default for GainBounds {
    fn default() -> Self {
        Self {
            k_r: Range::new(500.0, 10_000.0),
            b_r: Range::new(10.0, 300.0),
            k_theta: Range::new(20.0, 400.0),
            b_theta: Range::new(0.5, 20.0),
        }
    }
}

/// Bounds of the structured (foot target) policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructuredBounds {
    pub foot_x: Range,
    pub foot_y: Range,
    pub foot_velocity: Range,
    pub gains: GainBounds,
}

impl Default for StructuredBounds {
    fn default() -> Self {
        Self {
            foot_x: Range::new(-0.25, 0.25),
            foot_y: Range::new(-0.55, -0.25),
            foot_velocity: Range::new(-3.0, 3.0),
            gains: GainBounds::default(),
        }
    }
}

/// Bounds of the trajectory scalings of the trot controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingBounds {
    pub k_t: Range,
    pub k_c: Range,
    pub k_delta: Range,
    pub gains: GainBounds,
}

impl Default for ScalingBounds {
    fn default() -> Self {
        Self {
            k_t: Range::new(0.25, 1.5),
            k_c: Range::new(0.5, 1.5),
            k_delta: Range::new(0.0, 2.0),
            gains: GainBounds::default(),
        }
    }
}

impl GainBounds {
    pub fn validate(&self) -> Result<()> {
        self.k_r.validate("k_r")?;
        self.b_r.validate("b_r")?;
        self.k_theta.validate("k_theta")?;
        self.b_theta.validate("b_theta")
    }
}

impl StructuredBounds {
    pub fn validate(&self) -> Result<()> {
        self.foot_x.validate("foot_x")?;
        self.foot_y.validate("foot_y")?;
        self.foot_velocity.validate("foot_velocity")?;
        self.gains.validate()
    }
}

impl ScalingBounds {
    pub fn validate(&self) -> Result<()> {
        self.k_t.validate("k_t")?;
        self.k_c.validate("k_c")?;
        self.k_delta.validate("k_delta")?;
        self.gains.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_map_endpoints() {
        let r = Range::new(500.0, 10_000.0);
        assert_eq!(r.from_unit(-1.0), 500.0);
        assert_eq!(r.from_unit(1.0), 10_000.0);
        assert_eq!(r.from_unit(0.0), r.midpoint());
        assert_eq!(r.from_unit(7.0), 10_000.0);
        assert!((r.to_unit(r.from_unit(0.3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn check_reports_violation() {
        let r = Range::new(0.5, 1.5);
        assert!(r.check("k_t", 1.0).is_ok());
        assert!(matches!(
            r.check("k_t", 1.6),
            Err(Error::BoundsViolation { .. })
        ));
    }
}
