use std::fmt;

/// A bounded interval `(lo, hi)`. Membership is open unless stated otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi, "empty interval ({lo}, {hi})");
        Interval { lo, hi }
    }

    /// The symmetric interval `(-r, r)`.
    pub fn symmetric(r: f64) -> Interval {
        let r = r.abs();
        Interval { lo: -r, hi: r }
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    #[inline]
    pub fn contains_closed(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Distance from `x` to the complement of the interval, zero outside.
    pub fn depth(&self, x: f64) -> f64 {
        if self.contains(x) {
            (x - self.lo).min(self.hi - x)
        } else {
            0.0
        }
    }

    /// Point at relative position `s` in `[0, 1]`.
    #[inline]
    pub fn lerp(&self, s: f64) -> f64 {
        self.lo + s * (self.hi - self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6e}, {:.6e})", self.lo, self.hi)
    }
}
