use crate::dynamics::family::{Stepper, UnimodalFamily};
use crate::dynamics::pullback::sign_of;
use crate::error::{LabError, Result};
use crate::interval::Interval;

/// Smallest `k >= 1` with `f_t^k(x) ∈ U`.
pub fn first_return_time(family: &UnimodalFamily, t: f64, u: &Interval, x: f64, cap: u64) -> Result<u64> {
    family.check_parameter(t)?;
    let st = family.stepper(t);
    let hi = family.interval(t).hi;
    let mut y = x;
    for k in 1..=cap {
        y = st.step(y).min(hi);
        if u.contains(y) {
            return Ok(k);
        }
    }
    Err(LabError::CapExceeded { cap })
}

/// Smallest `k >= 0` with `f_t^k(x) ∈ U`.
pub fn first_entry_time(family: &UnimodalFamily, t: f64, u: &Interval, x: f64, cap: u64) -> Result<u64> {
    if u.contains(x) {
        return Ok(0);
    }
    first_return_time(family, t, u, x, cap)
}

/// A first return together with the itinerary that produced it.
#[derive(Clone, Debug)]
pub struct ReturnPath {
    pub time: u64,
    /// `sign f^j(x)` for `j < time`.
    pub signs: Vec<i8>,
    /// `f^time(x)`.
    pub image: f64,
    /// Number of `j in 1..=time` with `f^j(x) ∈ outer`.
    pub outer_visits: u64,
}

/// First return to `u`, recording the itinerary and visits to `outer`.
pub fn return_path(st: &Stepper, hi: f64, u: &Interval, outer: &Interval, x: f64, cap: u64) -> Option<ReturnPath> {
    let mut y = x;
    let mut signs = Vec::with_capacity(64);
    let mut visits = 0;
    for k in 1..=cap {
        signs.push(sign_of(y));
        y = st.step(y).min(hi);
        if outer.contains(y) {
            visits += 1;
        }
        if u.contains(y) {
            return Some(ReturnPath {
                time: k,
                signs,
                image: y,
                outer_visits: visits,
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn period_two_critical_orbit() {
        let f = UnimodalFamily::quadratic(-1.0).unwrap();
        assert_eq!(first_return_time(&f, 0.0, &Interval::symmetric(0.1), 0.0, 10).unwrap(), 2);
    }

    #[test]
    fn fixed_point_never_returns() {
        assert!(matches!(
            first_return_time(&cheb(), 0.0, &Interval::symmetric(0.1), 2.0, 1000),
            Err(LabError::CapExceeded { cap: 1000 })
        ));
    }

    proptest! {
        #[test]
        fn return_time_is_first_hit(x in -0.5f64..0.5) {
            let f = cheb();
            let u = Interval::symmetric(0.5);
            if let Ok(r) = first_return_time(&f, 0.0, &u, x, 10_000) {
                let mut y = x;
                for _ in 1..r {
                    y = f.value(0.0, y);
                    prop_assert!(!u.contains(y));
                }
                prop_assert!(u.contains(f.value(0.0, y)));
            }
        }
    }
}
