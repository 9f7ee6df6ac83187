use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};

/// Hard ceiling on orbit length for traced orbits.
pub const MAX_TRACE: usize = 1 << 30;

/// Notable things that happened while iterating.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrbitEvents {
    /// The orbit passed exactly through a critical point, so the spatial
    /// derivative vanished from that step on.
    pub derivative_vanished: bool,
    /// The spatial derivative overflowed `f64`; the log form stays finite.
    pub derivative_overflow: bool,
}

/// An orbit `x_0, ..., x_n` with derivative cocycles.
#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub points: Vec<f64>,
    /// `log |D f_t^k (x_0)|` for `k = 0..=n`.
    pub log_abs_derivative: Vec<f64>,
    /// `d/dt f_t^k(x_0(t))` where `x_0(t) = f_t(0)` if `x_0` is the critical
    /// value and `x_0` is held fixed otherwise.
    pub param_derivative: Option<Vec<f64>>,
    pub events: OrbitEvents,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("orbit has at least one point")
    }
}

/// Iterate `f_t` from `x0` for `n` steps.
pub fn iterate_orbit(
    family: &UnimodalFamily,
    t: f64,
    x0: f64,
    n: usize,
    trace_param: bool,
) -> Result<OrbitTrace> {
    if n > MAX_TRACE {
        return Err(LabError::CapExceeded {
            cap: MAX_TRACE as u64,
        });
    }
    family.evaluate(t, x0)?;
    let dom = family.interval(t);
    let slack = 1e-12 * dom.len().max(1.0);

    let mut points = Vec::with_capacity(n + 1);
    let mut logd = Vec::with_capacity(n + 1);
    let mut events = OrbitEvents::default();
    points.push(x0);
    logd.push(0.0);

    let mut dpar = None;
    let mut d = 0.0;
    if trace_param {
        let cv = family.critical_value(t);
        d = if x0 == cv { family.dt(t, 0.0) } else { 0.0 };
        let mut v = Vec::with_capacity(n + 1);
        v.push(d);
        dpar = Some(v);
    }

    let mut x = x0;
    let mut acc = 0.0f64;
    for k in 1..=n {
        let dx = family.dx(t, x);
        if trace_param {
            d = dx * d + family.dt(t, x);
            if !d.is_finite() {
                events.derivative_overflow = true;
            }
            dpar.as_mut().unwrap().push(d);
        }
        if dx == 0.0 {
            events.derivative_vanished = true;
        }
        acc += dx.abs().ln();
        x = family.value(t, x);
        if !(x >= dom.lo - slack && x <= dom.hi + slack) {
            return Err(LabError::Escape { index: k, value: x });
        }
        x = x.clamp(dom.lo, dom.hi);
        points.push(x);
        logd.push(acc);
    }
    Ok(OrbitTrace {
        points,
        log_abs_derivative: logd,
        param_derivative: dpar,
        events,
    })
}

/// Parameter derivatives `D xi_k(t)` of the critical value map
/// `xi_k(t) = f_t^{k+1}(0)` for `k = 0..=n`.
pub fn critical_value_derivatives(family: &UnimodalFamily, t: f64, n: usize) -> Result<Vec<f64>> {
    let cv = family.critical_value(t);
    let tr = iterate_orbit(family, t, cv, n, true)?;
    Ok(tr.param_derivative.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn chebyshev_critical_orbit() {
        let tr = iterate_orbit(&cheb(), 0.0, 0.0, 3, false).unwrap();
        assert_eq!(tr.points, vec![0.0, -2.0, 2.0, 2.0]);
        assert!(tr.events.derivative_vanished);
        assert_eq!(tr.log_abs_derivative[1], f64::NEG_INFINITY);
    }

    #[test]
    fn fixed_point_log_derivative() {
        let tr = iterate_orbit(&cheb(), 0.0, 2.0, 5, false).unwrap();
        assert!((tr.log_abs_derivative[5] - 5.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn critical_value_derivative_recursion() {
        // D xi_k = 4 D xi_{k-1} + 1 after the first step, starting from 1 and -3.
        let d = critical_value_derivatives(&cheb(), 0.0, 6).unwrap();
        assert_eq!(d, vec![1.0, -3.0, -11.0, -43.0, -171.0, -683.0, -2731.0]);
    }

    #[test]
    fn escape_is_reported() {
        let f = UnimodalFamily::custom(crate::dynamics::family::CustomFamily {
            map: std::sync::Arc::new(|_, x| 3.0 * x * x - 1.5),
            dx: std::sync::Arc::new(|_, x| 6.0 * x),
            dt: std::sync::Arc::new(|_, _| 1.0),
            interval: crate::interval::Interval::new(-1.0, 1.0),
            inverse: None,
        });
        assert!(matches!(
            iterate_orbit(&f, 0.0, 0.99, 10, false),
            Err(LabError::Escape { .. })
        ));
    }

    proptest! {
        #[test]
        fn log_derivative_is_cocycle(x0 in -2.0f64..2.0, m in 1usize..20, k in 1usize..20) {
            let f = UnimodalFamily::quadratic(-1.9).unwrap();
            let dom = f.interval(0.0);
            let x0 = x0.clamp(dom.lo, dom.hi);
            let a = iterate_orbit(&f, 0.0, x0, m + k, false).unwrap();
            let b = iterate_orbit(&f, 0.0, a.points[m], k, false).unwrap();
            let lhs = a.log_abs_derivative[m + k];
            let rhs = a.log_abs_derivative[m] + b.log_abs_derivative[k];
            prop_assume!(lhs.is_finite());
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn orbits_stay_in_interval(c in -2.0f64..0.25, x in -1.0f64..1.0) {
            let f = UnimodalFamily::quadratic(c).unwrap();
            let x0 = x * f.interval(0.0).hi;
            let tr = iterate_orbit(&f, 0.0, x0, 200, false).unwrap();
            let dom = f.interval(0.0);
            for p in tr.points {
                prop_assert!(p >= dom.lo - 1e-9 && p <= dom.hi + 1e-9);
            }
        }
    }
}
