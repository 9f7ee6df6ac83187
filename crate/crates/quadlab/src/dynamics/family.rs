use std::fmt;
use std::sync::Arc;

use crate::dd::{Dd, Scalar};
use crate::error::{LabError, Result};
use crate::interval::Interval;

/// `(t, x) -> value`.
pub type MapFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `(t, y, side) -> preimage of y on the given side of the critical point`.
pub type InverseFn = Arc<dyn Fn(f64, f64, f64) -> Option<f64> + Send + Sync>;

/// A user-supplied one-parameter family with critical point at 0.
#[derive(Clone)]
pub struct CustomFamily {
    pub map: MapFn,
    pub dx: MapFn,
    pub dt: MapFn,
    pub interval: Interval,
    pub inverse: Option<InverseFn>,
}

#[derive(Clone)]
pub enum FamilyKind {
    /// `x^2 + c0 + t` on `[-beta_t, beta_t]`.
    Quadratic { c0: f64 },
    /// The same map conjugated to `[-1, 1]`: `u -> beta_t u^2 + c/beta_t`.
    Normalized { c0: f64 },
    Custom(CustomFamily),
}

/// A one-parameter family `t -> f_t` of unimodal maps with critical point 0.
#[derive(Clone)]
pub struct UnimodalFamily {
    kind: FamilyKind,
}

/// Value and partial derivatives of `f_t` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub dx: f64,
    pub dt: f64,
}

impl fmt::Debug for UnimodalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FamilyKind::Quadratic { c0 } => write!(f, "Quadratic(c0 = {c0})"),
            FamilyKind::Normalized { c0 } => write!(f, "Normalized(c0 = {c0})"),
            FamilyKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

const C_MIN: f64 = -2.0;
const C_MAX: f64 = 0.25;

fn beta_of(c: f64) -> f64 {
    0.5 * (1.0 + (1.0 - 4.0 * c).max(0.0).sqrt())
}

impl UnimodalFamily {
    pub fn quadratic(c0: f64) -> Result<UnimodalFamily> {
        check_c(c0, 0.0)?;
        Ok(UnimodalFamily {
            kind: FamilyKind::Quadratic { c0 },
        })
    }

    pub fn normalized(c0: f64) -> Result<UnimodalFamily> {
        check_c(c0, 0.0)?;
        Ok(UnimodalFamily {
            kind: FamilyKind::Normalized { c0 },
        })
    }

    pub fn custom(custom: CustomFamily) -> UnimodalFamily {
        UnimodalFamily {
            kind: FamilyKind::Custom(custom),
        }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Base parameter `c0` of a quadratic family.
    pub fn c0(&self) -> Option<f64> {
        match self.kind {
            FamilyKind::Quadratic { c0 } | FamilyKind::Normalized { c0 } => Some(c0),
            FamilyKind::Custom(_) => None,
        }
    }

    /// Whether this is one of the built-in quadratic families.
    pub fn is_quadratic(&self) -> bool {
        !matches!(self.kind, FamilyKind::Custom(_))
    }

    pub fn has_inverse(&self) -> bool {
        match &self.kind {
            FamilyKind::Custom(c) => c.inverse.is_some(),
            _ => true,
        }
    }

    pub fn check_parameter(&self, t: f64) -> Result<()> {
        match self.kind {
            FamilyKind::Quadratic { c0 } | FamilyKind::Normalized { c0 } => check_c(c0, t),
            FamilyKind::Custom(_) => {
                if t.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::Parameter { t })
                }
            }
        }
    }

    /// `beta_t`, the positive fixed point of `x^2 + c`.
    pub fn beta(&self, t: f64) -> f64 {
        match self.kind {
            FamilyKind::Quadratic { c0 } | FamilyKind::Normalized { c0 } => beta_of(c0 + t),
            FamilyKind::Custom(ref c) => c.interval.hi,
        }
    }

    /// The closed invariant interval of `f_t`.
    pub fn interval(&self, t: f64) -> Interval {
        match &self.kind {
            FamilyKind::Quadratic { c0 } => Interval::symmetric(beta_of(c0 + t)),
            FamilyKind::Normalized { .. } => Interval::new(-1.0, 1.0),
            FamilyKind::Custom(c) => c.interval,
        }
    }

    #[inline]
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            FamilyKind::Quadratic { c0 } => x * x + (c0 + t),
            FamilyKind::Normalized { c0 } => {
                let c = c0 + t;
                let b = beta_of(c);
                b * x * x + c / b
            }
            FamilyKind::Custom(c) => (c.map)(t, x),
        }
    }

    #[inline]
    pub fn dx(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            FamilyKind::Quadratic { .. } => 2.0 * x,
            FamilyKind::Normalized { c0 } => 2.0 * beta_of(c0 + t) * x,
            FamilyKind::Custom(c) => (c.dx)(t, x),
        }
    }

    #[inline]
    pub fn dt(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            FamilyKind::Quadratic { .. } => 1.0,
            FamilyKind::Normalized { c0 } => {
                let c = c0 + t;
                let b = beta_of(c);
                let db = -1.0 / (1.0 - 4.0 * c).sqrt();
                db * x * x + 1.0 / b - c * db / (b * b)
            }
            FamilyKind::Custom(c) => (c.dt)(t, x),
        }
    }

    /// Evaluate `f_t` with its partial derivatives, checking the domain.
    pub fn evaluate(&self, t: f64, x: f64) -> Result<Evaluation> {
        self.check_parameter(t)?;
        let dom = self.interval(t);
        let slack = 1e-12 * dom.len().max(1.0);
        if !(x >= dom.lo - slack && x <= dom.hi + slack) {
            return Err(LabError::Domain {
                x,
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        Ok(Evaluation {
            value: self.value(t, x),
            dx: self.dx(t, x),
            dt: self.dt(t, x),
        })
    }

    pub fn critical_value(&self, t: f64) -> f64 {
        self.value(t, 0.0)
    }

    /// Preimage of `y` on side `side` (sign) of the critical point, if `y` is in the range.
    pub fn preimage(&self, t: f64, y: f64, side: f64) -> Option<f64> {
        match &self.kind {
            FamilyKind::Quadratic { .. } | FamilyKind::Normalized { .. } => {
                self.preimage_s::<f64>(t, y, side)
            }
            FamilyKind::Custom(c) => c.inverse.as_ref().and_then(|inv| inv(t, y, side)),
        }
    }

    /// `f_t(x)` in the scalar type `S`. Custom families are evaluated in `f64`.
    #[inline]
    pub fn value_s<S: Scalar>(&self, t: f64, x: S) -> S {
        match &self.kind {
            FamilyKind::Quadratic { c0 } => x * x + param_s::<S>(*c0, t),
            FamilyKind::Normalized { c0 } => {
                let (b, shift) = normalized_coeffs::<S>(*c0, t);
                b * x * x + shift
            }
            FamilyKind::Custom(c) => S::from((c.map)(t, x.to_f64())),
        }
    }

    #[inline]
    pub fn dx_s<S: Scalar>(&self, t: f64, x: S) -> S {
        match &self.kind {
            FamilyKind::Quadratic { .. } => S::from(2.0) * x,
            FamilyKind::Normalized { c0 } => {
                let (b, _) = normalized_coeffs::<S>(*c0, t);
                S::from(2.0) * b * x
            }
            FamilyKind::Custom(c) => S::from((c.dx)(t, x.to_f64())),
        }
    }

    /// Preimage in the scalar type `S`.
    pub fn preimage_s<S: Scalar>(&self, t: f64, y: S, side: f64) -> Option<S> {
        let zero = S::from(0.0);
        let r = match &self.kind {
            FamilyKind::Quadratic { c0 } => y - param_s::<S>(*c0, t),
            FamilyKind::Normalized { c0 } => {
                let (b, shift) = normalized_coeffs::<S>(*c0, t);
                (y - shift) / b
            }
            FamilyKind::Custom(c) => {
                let inv = c.inverse.as_ref()?;
                return inv(t, y.to_f64(), side).map(S::from);
            }
        };
        if r < zero {
            return None;
        }
        let s = r.sqrt();
        Some(if side < 0.0 { -s } else { s })
    }

    /// A specialised stepping closure for hot loops.
    pub fn stepper(&self, t: f64) -> Stepper {
        match &self.kind {
            FamilyKind::Quadratic { c0 } => Stepper::Quadratic { c: c0 + t },
            FamilyKind::Normalized { c0 } => {
                let c = c0 + t;
                let b = beta_of(c);
                Stepper::Normalized { b, shift: c / b }
            }
            FamilyKind::Custom(c) => Stepper::Custom {
                map: c.map.clone(),
                dx: c.dx.clone(),
                t,
            },
        }
    }
}

fn check_c(c0: f64, t: f64) -> Result<()> {
    let c = c0 + t;
    if c.is_finite() && (C_MIN - 1e-15..=C_MAX).contains(&c) {
        Ok(())
    } else {
        Err(LabError::Parameter { t })
    }
}

#[inline]
fn param_s<S: Scalar>(c0: f64, t: f64) -> S {
    S::from(c0) + S::from(t)
}

fn normalized_coeffs<S: Scalar>(c0: f64, t: f64) -> (S, S) {
    let c = param_s::<S>(c0, t);
    let one = S::from(1.0);
    let disc = one - S::from(4.0) * c;
    let b = (one + disc.sqrt()) * S::from(0.5);
    (b, c / b)
}

/// Parameter `c0 + t` as an exact double-double.
pub fn parameter_dd(c0: f64, t: f64) -> Dd {
    Dd::sum(c0, t)
}

/// One step of `f_t`, specialised per family.
#[derive(Clone)]
pub enum Stepper {
    Quadratic { c: f64 },
    Normalized { b: f64, shift: f64 },
    Custom { map: MapFn, dx: MapFn, t: f64 },
}

impl Stepper {
    #[inline(always)]
    pub fn step(&self, x: f64) -> f64 {
        match self {
            Stepper::Quadratic { c } => x * x + c,
            Stepper::Normalized { b, shift } => b * x * x + shift,
            Stepper::Custom { map, t, .. } => map(*t, x),
        }
    }

    #[inline(always)]
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Stepper::Quadratic { .. } => 2.0 * x,
            Stepper::Normalized { b, .. } => 2.0 * b * x,
            Stepper::Custom { dx, t, .. } => dx(*t, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn chebyshev_evaluation() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        assert_eq!(
            f.evaluate(0.0, 0.0).unwrap(),
            Evaluation {
                value: -2.0,
                dx: 0.0,
                dt: 1.0
            }
        );
        assert_eq!(f.interval(0.0), Interval::new(-2.0, 2.0));
    }

    #[test]
    fn outside_domain_is_rejected() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        assert!(matches!(
            f.evaluate(0.0, 2.5),
            Err(LabError::Domain { .. })
        ));
        assert!(matches!(
            f.evaluate(-0.1, 0.0),
            Err(LabError::Parameter { .. })
        ));
    }

    #[test]
    fn normalized_parameter_derivative_matches_difference_quotient() {
        let f = UnimodalFamily::normalized(-1.8).unwrap();
        for &u in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let h = 1e-6;
            let fd = (f.value(0.01 + h, u) - f.value(0.01 - h, u)) / (2.0 * h);
            assert_relative_eq!(f.dt(0.01, u), fd, max_relative = 1e-7, epsilon = 1e-9);
        }
    }

    #[test]
    fn dd_and_f64_agree() {
        let f = UnimodalFamily::quadratic(-1.7).unwrap();
        let x = 0.3;
        assert_eq!(f.value_s::<Dd>(0.01, Dd::new(x)).to_f64(), f.value(0.01, x));
    }

    proptest! {
        #[test]
        fn normalized_is_conjugate_to_raw(c in -2.0f64..0.2, x in -1.0f64..1.0) {
            let raw = UnimodalFamily::quadratic(c).unwrap();
            let norm = UnimodalFamily::normalized(c).unwrap();
            let b = raw.beta(0.0);
            let lhs = norm.value(0.0, x);
            let rhs = raw.value(0.0, b * x) / b;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn preimage_inverts(c in -2.0f64..0.2, x in -1.0f64..1.0, normalized in any::<bool>()) {
            let f = if normalized { UnimodalFamily::normalized(c) } else { UnimodalFamily::quadratic(c) }.unwrap();
            let x = x * f.interval(0.0).hi;
            let y = f.value(0.0, x);
            let back = f.preimage(0.0, y, x.signum()).unwrap();
            prop_assert!((back - x).abs() < 1e-7);
        }

        #[test]
        fn interval_is_invariant(c in -2.0f64..0.25, s in -1.0f64..1.0) {
            let f = UnimodalFamily::quadratic(c).unwrap();
            let dom = f.interval(0.0);
            let y = f.value(0.0, s * dom.hi);
            prop_assert!(y >= dom.lo - 1e-12 && y <= dom.hi + 1e-12);
        }
    }
}
