//! Pulling intervals and points back along an itinerary.
//!
//! An itinerary is the sequence of signs `s_j = sign f^j(x)`, `j = 0..r`.
//! Inverse branches of a quadratic map contract near the invariant set, so
//! pulling a target back along a forward itinerary is numerically stable even
//! when the forward orbit is not.

use crate::dd::Scalar;
use crate::dynamics::family::UnimodalFamily;
use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PullbackMode {
    /// Every step must be a diffeomorphism onto the pulled-back interval.
    Strict,
    /// As `Strict`, except the final step may fold over the critical point.
    AllowCentral,
    /// Parts of an interval below the critical value are discarded.
    Clip,
}

/// Result of a successful pullback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulled<S> {
    pub lo: S,
    pub hi: S,
    /// The final step folded over the critical point.
    pub central: bool,
    /// Some step was clipped at the critical value.
    pub clipped: bool,
}

impl Pulled<f64> {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }
}

#[inline]
pub fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Pull `(lo, hi)` back along `signs`, last sign first.
pub fn pull_back<S: Scalar>(
    family: &UnimodalFamily,
    t: f64,
    lo: S,
    hi: S,
    signs: &[i8],
    mode: PullbackMode,
) -> Option<Pulled<S>> {
    let cv: S = family.value_s(t, S::from(0.0));
    let (mut a, mut b) = (lo, hi);
    let mut clipped = false;
    for (j, &s) in signs.iter().enumerate().rev() {
        if b <= cv {
            return None;
        }
        if a < cv {
            match mode {
                PullbackMode::AllowCentral if j == 0 => {
                    let w = family.preimage_s(t, b, 1.0)?;
                    return Some(Pulled {
                        lo: -w,
                        hi: w,
                        central: true,
                        clipped,
                    });
                }
                PullbackMode::Clip => {
                    a = cv;
                    clipped = true;
                }
                _ => return None,
            }
        }
        let pa = family.preimage_s(t, a, 1.0)?;
        let pb = family.preimage_s(t, b, 1.0)?;
        if s < 0 {
            a = -pb;
            b = -pa;
        } else {
            a = pa;
            b = pb;
        }
    }
    Some(Pulled {
        lo: a,
        hi: b,
        central: false,
        clipped,
    })
}

/// Pull a single point back along `signs`; returns the preimage and
/// `log |D f^r|` at it.
pub fn pull_back_point<S: Scalar>(
    family: &UnimodalFamily,
    t: f64,
    y: S,
    signs: &[i8],
) -> Option<(S, f64)> {
    let mut x = y;
    let mut logd = 0.0;
    for &s in signs.iter().rev() {
        x = family.preimage_s(t, x, s as f64)?;
        logd += family.dx_s(t, x).to_f64().abs().ln();
    }
    Some((x, logd))
}

/// Pull a point back and return every intermediate point, level `0..=r`.
pub fn pull_back_orbit(family: &UnimodalFamily, t: f64, y: f64, signs: &[i8]) -> Option<Vec<f64>> {
    let mut pts = vec![0.0; signs.len() + 1];
    pts[signs.len()] = y;
    let mut x = y;
    for (j, &s) in signs.iter().enumerate().rev() {
        x = family.preimage(t, x, s as f64)?;
        pts[j] = x;
    }
    Some(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;
    use proptest::prelude::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn central_fold() {
        let f = cheb();
        let p = pull_back(&f, 0.0, -3.0, 1.0, &[1], PullbackMode::AllowCentral).unwrap();
        assert!(p.central);
        assert!((p.hi - 3f64.sqrt()).abs() < 1e-15);
        assert!(pull_back(&f, 0.0, -3.0, 1.0, &[1], PullbackMode::Strict).is_none());
    }

    #[test]
    fn clip_keeps_upper_part() {
        let f = cheb();
        let p = pull_back(&f, 0.0, -3.0, 2.0, &[-1], PullbackMode::Clip).unwrap();
        assert!(p.clipped);
        assert_eq!((p.lo, p.hi), (-2.0, 0.0));
    }

    proptest! {
        #[test]
        fn pulled_point_maps_forward(x0 in -1.99f64..1.99, r in 1usize..12) {
            let f = cheb();
            let mut signs = Vec::new();
            let mut x = x0;
            let mut closest = f64::INFINITY;
            for _ in 0..r {
                closest = closest.min(x.abs());
                signs.push(sign_of(x));
                x = f.value(0.0, x);
            }
            prop_assume!(closest > 1e-3);
            let (back, _) = pull_back_point::<Dd>(&f, 0.0, Dd::new(x), &signs).unwrap();
            prop_assert!((back.to_f64() - x0).abs() <= 1e-9);
        }

        #[test]
        fn pullback_of_interval_contains_pulled_points(x0 in -1.99f64..1.99, r in 1usize..10, w in 1e-6f64..1e-3) {
            let f = cheb();
            let mut signs = Vec::new();
            let mut x = x0;
            for _ in 0..r {
                signs.push(sign_of(x));
                x = f.value(0.0, x);
            }
            let (lo, hi) = ((x - w).max(-2.0), (x + w).min(2.0));
            if let Some(p) = pull_back(&f, 0.0, lo, hi, &signs, PullbackMode::Strict) {
                let (y, _) = pull_back_point(&f, 0.0, x, &signs).unwrap();
                prop_assert!(p.lo <= y && y <= p.hi);
            }
        }
    }
}
