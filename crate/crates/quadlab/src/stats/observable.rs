use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};

/// A bounded observable on the phase interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Constant(f64),
    Coordinate,
    Square,
    PostcriticalBump(Bump),
}

/// Equal to `1` within `eps_f` of a finite piece of the post-critical orbit
/// and to `0` beyond `eps_f + w`, with a C¹ smoothstep in between.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub eps_f: f64,
    pub w: f64,
    pub depth: usize,
    /// Orbit points `f_0^k(0)`, `k = 1..=depth`.
    pub points: Vec<f64>,
    /// Sorted, merged components `[p - eps_f, p + eps_f]`.
    core: Vec<(f64, f64)>,
}

impl Bump {
    pub fn new(points: Vec<f64>, eps_f: f64, w: f64) -> Result<Bump> {
        if !(eps_f >= 0.0 && w > 0.0) {
            return Err(LabError::InvalidArgument(format!("bump needs eps_f >= 0 and w > 0, got {eps_f}, {w}")));
        }
        let mut iv: Vec<(f64, f64)> = points.iter().map(|&p| (p - eps_f, p + eps_f)).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut core: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in iv {
            match core.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => core.push((lo, hi)),
            }
        }
        Ok(Bump {
            eps_f,
            w,
            depth: points.len(),
            points,
            core,
        })
    }

    /// Distance from `x` to the `eps_f`-neighbourhood of the orbit.
    fn gap(&self, x: f64) -> f64 {
        let i = self.core.partition_point(|c| c.1 < x);
        let mut d = f64::INFINITY;
        if let Some(c) = self.core.get(i) {
            d = (c.0 - x).max(0.0);
        }
        if i > 0 {
            d = d.min(x - self.core[i - 1].1);
        }
        d
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.gap(x);
        if d <= 0.0 {
            1.0
        } else if d >= self.w {
            0.0
        } else {
            let u = d / self.w;
            1.0 - u * u * (3.0 - 2.0 * u)
        }
    }

    /// Components of the support `{bump > 0}` as closed intervals.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi) in &self.core {
            let (lo, hi) = (lo - self.w, hi + self.w);
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        out
    }
}

impl Observable {
    /// Bump on the first `depth` points of the critical orbit of `f_0`.
    pub fn postcritical_bump(family: &UnimodalFamily, eps_f: f64, w: f64, depth: usize) -> Result<Observable> {
        let dom = family.interval(0.0);
        let mut x = 0.0;
        let mut pts = Vec::with_capacity(depth);
        for _ in 0..depth {
            x = family.value(0.0, x).clamp(dom.lo, dom.hi);
            pts.push(x);
        }
        Ok(Observable::PostcriticalBump(Bump::new(pts, eps_f, w)?))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::Coordinate => x,
            Observable::Square => x * x,
            Observable::PostcriticalBump(b) => b.eval(x),
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Observable::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// `sup |phi|` over `[-r, r]`.
    pub fn sup_norm(&self, r: f64) -> f64 {
        match self {
            Observable::Constant(c) => c.abs(),
            Observable::Coordinate => r,
            Observable::Square => r * r,
            Observable::PostcriticalBump(_) => 1.0,
        }
    }

    /// Lipschitz constant over `[-r, r]`.
    pub fn lipschitz_norm(&self, r: f64) -> f64 {
        match self {
            Observable::Constant(_) => 0.0,
            Observable::Coordinate => 1.0,
            Observable::Square => 2.0 * r,
            Observable::PostcriticalBump(b) => 1.5 / b.w,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::Constant(c) => format!("constant({c})"),
            Observable::Coordinate => "x".into(),
            Observable::Square => "x^2".into(),
            Observable::PostcriticalBump(b) => format!("bump(eps_f={}, w={}, depth={})", b.eps_f, b.w, b.depth),
        }
    }
}
