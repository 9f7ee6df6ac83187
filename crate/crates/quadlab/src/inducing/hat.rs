use rand::Rng;

use crate::error::Result;
use crate::inducing::classify::{Color, Scheme};
use crate::interval::Interval;
use crate::rng::par_samples;
use crate::stats::estimate::McEstimate;

/// The approximating map: `f` everywhere except on red cells, which are sent
/// affinely onto `U_1` in one step.
pub struct HatMap<'a> {
    scheme: Scheme<'a>,
}

/// Outcome of iterating the approximating map alongside `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agreement {
    pub point: f64,
    /// Steps for which `f_hat^j(x) = f^j(x)`; equals the horizon when the
    /// orbit never meets a red cell.
    pub agree_steps: u64,
}

impl<'a> HatMap<'a> {
    pub fn new(scheme: Scheme<'a>) -> HatMap<'a> {
        HatMap { scheme }
    }

    /// Red cell containing `x`, if any.
    pub fn red_cell(&self, x: f64) -> Result<Option<Interval>> {
        if self.scheme.v.is_none() || !self.scheme.pair.u1.contains(x) {
            return Ok(None);
        }
        let c = self.scheme.classify(x)?;
        Ok((c.color == Color::Red).then_some(c.domain))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.red_cell(x)? {
            Some(j) => Ok(red_affine(&j, &self.scheme.pair.u1, x)),
            None => Ok(self.scheme.family.value(self.scheme.t, x)),
        }
    }

    /// Iterate `n` times, recording how long the orbit agrees with `f`.
    pub fn iterate(&self, x: f64, n: u64) -> Result<Agreement> {
        let f = self.scheme.family;
        let mut y = x;
        let mut agree = n;
        for j in 0..n {
            match self.red_cell(y)? {
                Some(cell) => {
                    agree = agree.min(j);
                    y = red_affine(&cell, &self.scheme.pair.u1, y);
                }
                None => y = f.value(self.scheme.t, y),
            }
        }
        Ok(Agreement { point: y, agree_steps: agree })
    }

    /// `m{x : f^j(x) ∉ red cells for j < n}` over uniform points of `I`.
    pub fn agreement_fraction(&self, n: u64, samples: usize, seed: u64) -> McEstimate {
        let dom = self.scheme.family.interval(self.scheme.t);
        let st = self.scheme.family.stepper(self.scheme.t);
        let res = par_samples(samples, seed, |_, rng| {
            let mut y = dom.lerp(rng.random::<f64>());
            for _ in 0..n {
                match self.red_cell(y) {
                    Ok(Some(_)) => return Some(false),
                    Ok(None) => {}
                    Err(_) => return None,
                }
                y = st.step(y).min(dom.hi);
            }
            Some(true)
        });
        let failed = res.iter().filter(|r| r.is_none()).count();
        let ok = res.iter().filter(|r| **r == Some(true)).count();
        McEstimate::from_count(ok, samples - failed, seed, failed as u64)
    }
}

/// Increasing affine bijection of `cell` onto `target`.
pub fn red_affine(cell: &Interval, target: &Interval, x: f64) -> f64 {
    target.lerp((x - cell.lo) / cell.len())
}

/// `C` in `agreement ≈ (1 - C t)^n`.
pub fn agreement_constant(agreement: f64, t: f64, n: u64) -> f64 {
    (1.0 - agreement.powf(1.0 / n as f64)) / t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inducing::classify::ClassifyCaps;
    use crate::params::{build_returning_pair, find_superattracting};
    use crate::returns::central_geometry;
    use crate::UnimodalFamily;

    #[test]
    fn affine_surrogate_has_unit_distortion() {
        let cell = Interval::new(0.1, 0.1 + 1e-6);
        let u1 = Interval::symmetric(0.01);
        let d1 = red_affine(&cell, &u1, 0.1 + 2e-7) - red_affine(&cell, &u1, 0.1 + 1e-7);
        let d2 = red_affine(&cell, &u1, 0.1 + 9e-7) - red_affine(&cell, &u1, 0.1 + 8e-7);
        assert!((d1 / d2 - 1.0).abs() < 1e-6);
        assert_eq!(red_affine(&cell, &u1, cell.lo), u1.lo);
    }

    #[test]
    fn agrees_with_f_without_basin() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let h = HatMap::new(Scheme::new(&f, 0.0, &pair, None, ClassifyCaps::default()).unwrap());
        let a = h.iterate(0.3, 50).unwrap();
        assert_eq!(a.agree_steps, 50);
        let mut y = 0.3;
        for _ in 0..50 {
            y = f.value(0.0, y);
        }
        assert_eq!(a.point, y);
    }

    #[test]
    fn basin_is_sent_onto_u1() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let s = find_superattracting(&f, 6, 3, 0.2, 1e-15).unwrap();
        let pair = build_returning_pair(&f, s.t_n, 0.2, 1000).unwrap();
        let g = central_geometry(&f, s.t_n, s.p_n, &pair).unwrap();
        let h = HatMap::new(Scheme::new(&f, s.t_n, &pair, Some(g.v), ClassifyCaps::default()).unwrap());
        let y = h.eval(g.v.lerp(0.75)).unwrap();
        assert!((y - pair.u1.lerp(0.75)).abs() < 1e-12);
        assert_eq!(h.iterate(g.v.mid(), 3).unwrap().agree_steps, 0);
    }
}
