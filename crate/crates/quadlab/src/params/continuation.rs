use crate::dynamics::family::UnimodalFamily;
use crate::dynamics::pullback::{pull_back_orbit, sign_of};
use crate::error::{LabError, Result};
use crate::params::certify::periodic_newton;

/// A point `x` with `f^preperiod(x)` on a cycle of the given period, stored
/// symbolically so it can be followed to nearby parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PreperiodicPoint {
    pub t0: f64,
    pub x: f64,
    /// `sign f^j(x)` for `j < preperiod`.
    pub itinerary: Vec<i8>,
    pub period: usize,
    /// `f^preperiod(x)`, refined as a periodic point.
    pub cycle_point: f64,
}

/// The continuation of a [`PreperiodicPoint`] to another parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedPoint {
    pub x_t: f64,
    pub cycle_point: f64,
    /// `x_t, f_t(x_t), ..., f_t^preperiod(x_t)` computed by pulling back.
    pub pre_orbit: Vec<f64>,
    /// The full cycle through `cycle_point`.
    pub cycle: Vec<f64>,
    /// `|x_t - x_0| / |t - t_0|`, zero when `t = t_0`.
    pub lipschitz_constant: f64,
}

impl PreperiodicPoint {
    pub fn new(family: &UnimodalFamily, t0: f64, x: f64, preperiod: usize, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(LabError::InvalidArgument("period must be positive".into()));
        }
        let mut y = x;
        let mut itinerary = Vec::with_capacity(preperiod);
        for _ in 0..preperiod {
            itinerary.push(sign_of(y));
            y = family.value(t0, y);
        }
        let cycle_point = periodic_newton(family, t0, y, period)?;
        Ok(PreperiodicPoint {
            t0,
            x,
            itinerary,
            period,
            cycle_point,
        })
    }

    /// Assemble from a known itinerary and cycle point.
    pub fn from_parts(t0: f64, x: f64, itinerary: Vec<i8>, period: usize, cycle_point: f64) -> Self {
        PreperiodicPoint {
            t0,
            x,
            itinerary,
            period,
            cycle_point,
        }
    }

    pub fn preperiod(&self) -> usize {
        self.itinerary.len()
    }

    /// Follow the point to parameter `t`: Newton for the cycle, then the
    /// pre-orbit by inverse branches along the stored itinerary.
    pub fn continue_to(&self, family: &UnimodalFamily, t: f64) -> Result<ContinuedPoint> {
        family.check_parameter(t)?;
        if t == self.t0 {
            let pre = pull_back_orbit(family, t, self.cycle_point, &self.itinerary)
                .unwrap_or_else(|| vec![self.x]);
            let mut pre_orbit = pre;
            pre_orbit[0] = self.x;
            return Ok(ContinuedPoint {
                x_t: self.x,
                cycle_point: self.cycle_point,
                cycle: cycle_of(family, t, self.cycle_point, self.period),
                pre_orbit,
                lipschitz_constant: 0.0,
            });
        }
        let z = periodic_newton(family, t, self.cycle_point, self.period)?;
        let drift = (z - self.cycle_point).abs();
        if drift > 0.05 * family.interval(t).len() {
            return Err(LabError::NewtonDiverged(format!(
                "cycle point jumped from {} to {z}",
                self.cycle_point
            )));
        }
        let pre_orbit = pull_back_orbit(family, t, z, &self.itinerary).ok_or_else(|| {
            LabError::NewtonDiverged("pre-orbit left the range of an inverse branch".into())
        })?;
        let x_t = pre_orbit[0];
        Ok(ContinuedPoint {
            x_t,
            cycle_point: z,
            cycle: cycle_of(family, t, z, self.period),
            pre_orbit,
            lipschitz_constant: (x_t - self.x).abs() / (t - self.t0).abs(),
        })
    }
}

fn cycle_of(family: &UnimodalFamily, t: f64, z: f64, q: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(q);
    let mut y = z;
    for _ in 0..q {
        v.push(y);
        y = family.value(t, y);
    }
    v
}

/// Continue a preperiodic point of `f_0` to `f_t`.
pub fn continue_preperiodic(
    family: &UnimodalFamily,
    x0: f64,
    preperiod: usize,
    period: usize,
    t: f64,
) -> Result<ContinuedPoint> {
    PreperiodicPoint::new(family, 0.0, x0, preperiod, period)?.continue_to(family, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn fixed_point() {
        let c = continue_preperiodic(&cheb(), 2.0, 0, 1, 0.01).unwrap();
        let exact = 0.5 * (1.0 + (1.0 + 4.0 * 1.99f64).sqrt());
        assert!((c.x_t - exact).abs() < 1e-14);
    }

    #[test]
    fn identity_at_zero() {
        let c = continue_preperiodic(&cheb(), -2.0, 1, 1, 0.0).unwrap();
        assert_eq!(c.x_t, -2.0);
        assert_eq!(c.lipschitz_constant, 0.0);
    }

    #[test]
    fn preimage_of_fixed_point() {
        let t = 1e-3;
        let c = continue_preperiodic(&cheb(), -2.0, 1, 1, t).unwrap();
        let beta = 0.5 * (1.0 + (1.0 + 4.0 * (2.0 - t)).sqrt());
        let exact = -(beta - (-2.0 + t)).sqrt();
        assert!((c.x_t - exact).abs() < 1e-14);
    }

    #[test]
    fn period_two_cycle() {
        // {(-1 +- sqrt 5)/2} is the period-two cycle of x^2 - 2
        let z = (-1.0 + 5f64.sqrt()) / 2.0;
        let c = continue_preperiodic(&cheb(), z, 0, 2, 1e-4).unwrap();
        let y = cheb().value(1e-4, cheb().value(1e-4, c.x_t));
        assert!((y - c.x_t).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn lipschitz_in_t(j in 1usize..4, t in 1e-8f64..1e-3) {
            // positive preimages of the fixed point -1 of depth j
            let mut x = -1.0f64;
            for _ in 0..j {
                x = (x + 2.0).sqrt();
            }
            let c = continue_preperiodic(&cheb(), x, j, 1, t).unwrap();
            prop_assert!(c.lipschitz_constant < 100.0);
            let y = c.pre_orbit[j];
            prop_assert!((y - c.cycle_point).abs() < 1e-15);
        }
    }
}
