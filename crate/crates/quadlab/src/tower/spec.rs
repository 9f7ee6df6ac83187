use rand::Rng;

use crate::dd::Dd;
use crate::dynamics::family::{Stepper, UnimodalFamily};
use crate::error::{LabError, Result};
use crate::inducing::classify::{ClassifyCaps, Color, Scheme};
use crate::inducing::hat::red_affine;
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;
use crate::rng::{par_samples, SampleRng};

/// The map underneath an induced map, used to project the tower.
#[derive(Clone)]
pub enum BaseMap {
    /// `x -> 2x mod 1` on `[0, 1)`.
    Doubling,
    Family { family: UnimodalFamily, t: f64 },
}

impl BaseMap {
    pub fn stepper(&self) -> BaseStepper {
        match self {
            BaseMap::Doubling => BaseStepper::Doubling,
            BaseMap::Family { family, t } => {
                let dom = family.interval(*t);
                BaseStepper::Family {
                    st: family.stepper(*t),
                    lo: dom.lo,
                    hi: dom.hi,
                }
            }
        }
    }

    pub fn domain(&self) -> Interval {
        match self {
            BaseMap::Doubling => Interval::new(0.0, 1.0),
            BaseMap::Family { family, t } => family.interval(*t),
        }
    }
}

impl std::fmt::Debug for BaseMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseMap::Doubling => write!(f, "Doubling"),
            BaseMap::Family { family, t } => write!(f, "Family({family:?}, t = {t:e})"),
        }
    }
}

/// Hot-loop form of a [`BaseMap`].
#[derive(Clone)]
pub enum BaseStepper {
    Doubling,
    Family { st: Stepper, lo: f64, hi: f64 },
}

impl BaseStepper {
    #[inline]
    pub fn step(&self, x: f64) -> f64 {
        match self {
            BaseStepper::Doubling => {
                let y = 2.0 * x;
                if y >= 1.0 {
                    y - 1.0
                } else {
                    y
                }
            }
            BaseStepper::Family { st, lo, hi } => st.step(x).clamp(*lo, *hi),
        }
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            BaseStepper::Doubling => 2.0,
            BaseStepper::Family { st, .. } => st.deriv(x),
        }
    }

    pub fn iterate(&self, mut x: f64, n: u64) -> f64 {
        for _ in 0..n {
            x = self.step(x);
        }
        x
    }
}

/// How a cell is sent onto `Y`.
#[derive(Clone, Debug, PartialEq)]
pub enum BranchMap {
    Affine { slope: f64, offset: f64 },
    /// `f^tau`, followed by the increasing affine map of the first interval
    /// onto the second when `rescale` is set.
    Iterate { rescale: Option<(Interval, Interval)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedCell {
    pub domain: Interval,
    pub tau: u64,
    pub map: BranchMap,
}

/// How orbits of the induced map are generated for sampling `mu_Y`.
#[derive(Clone, Debug)]
pub enum Realization {
    /// Look up the cell holding the point and apply its branch.
    Cells,
    /// Exact first return of the doubling map to `[0, 1/2)` on a lazily drawn
    /// binary expansion.
    DoublingBits,
    /// Classify each point with the inducing scheme.
    Scheme {
        pair: ReturningIntervalPair,
        v: Option<Interval>,
        caps: ClassifyCaps,
    },
}

/// An induced map `F: Y -> Y` with full branches and its declared constants.
#[derive(Clone, Debug)]
pub struct InducedMapSpec {
    pub y: Interval,
    /// Sorted by left endpoint.
    pub cells: Vec<InducedCell>,
    pub lambda: f64,
    pub k: f64,
    pub eta: f64,
    /// Relative measure of `Y` not covered by `cells`.
    pub unresolved_mass: f64,
    pub base: Option<BaseMap>,
    pub realization: Realization,
}

impl InducedMapSpec {
    pub fn new(y: Interval, mut cells: Vec<InducedCell>, lambda: f64, k: f64, eta: f64) -> Result<InducedMapSpec> {
        if !(lambda > 1.0 && k >= 0.0 && eta > 0.0 && eta <= 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "need lambda > 1, K >= 0, eta in (0, 1]; got {lambda}, {k}, {eta}"
            )));
        }
        if cells.is_empty() {
            return Err(LabError::InvalidArgument("an induced map needs at least one cell".into()));
        }
        cells.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        Ok(InducedMapSpec {
            y,
            cells,
            lambda,
            k,
            eta,
            unresolved_mass: 0.0,
            base: None,
            realization: Realization::Cells,
        })
    }

    /// First return of the doubling map to `Y = [0, 1/2)`, truncated after
    /// `levels` cells. Cell `k` is `[1/2 - 2^-k, 1/2 - 2^-(k+1))` with
    /// `tau = k` and `F(x) = 2^k x - (2^(k-1) - 1)`.
    pub fn doubling_first_return(levels: u32) -> Result<InducedMapSpec> {
        if !(1..=60).contains(&levels) {
            return Err(LabError::InvalidArgument(format!("levels must lie in 1..=60, got {levels}")));
        }
        let cells = (1..=levels)
            .map(|k| {
                let lo = 0.5 - 0.5f64.powi(k as i32);
                let hi = 0.5 - 0.5f64.powi(k as i32 + 1);
                InducedCell {
                    domain: Interval::new(lo, hi),
                    tau: k as u64,
                    map: BranchMap::Iterate { rescale: None },
                }
            })
            .collect();
        let mut s = InducedMapSpec::new(Interval::new(0.0, 0.5), cells, 2.0, 0.0, 1.0)?;
        s.unresolved_mass = 0.5f64.powi(levels as i32);
        s.base = Some(BaseMap::Doubling);
        s.realization = Realization::DoublingBits;
        Ok(s)
    }

    /// `x -> 2x mod 1` on `[0, 1)` read as an induced map with constant `tau`.
    pub fn affine_full_shift(tau: u64) -> Result<InducedMapSpec> {
        let cells = vec![
            InducedCell {
                domain: Interval::new(0.0, 0.5),
                tau,
                map: BranchMap::Affine { slope: 2.0, offset: 0.0 },
            },
            InducedCell {
                domain: Interval::new(0.5, 1.0),
                tau,
                map: BranchMap::Affine { slope: 2.0, offset: -1.0 },
            },
        ];
        InducedMapSpec::new(Interval::new(0.0, 1.0), cells, 2.0, 0.0, 1.0)
    }

    /// Cells of the inducing scheme of `family` at `t` met by `samples`
    /// uniform points of `U_1`. Blue cells are sent by `f^rho`; red cells by
    /// `f^rho` followed by the affine map of `V` onto `U_1`, with `tau = rho + 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_scheme(
        family: &UnimodalFamily,
        t: f64,
        pair: &ReturningIntervalPair,
        v: Option<Interval>,
        caps: ClassifyCaps,
        samples: usize,
        seed: u64,
        constants: (f64, f64, f64),
    ) -> Result<InducedMapSpec> {
        let scheme = Scheme::new(family, t, pair, v, caps.clone())?;
        let u1 = pair.u1;
        let found = par_samples(samples, seed, |_, rng| scheme.classify(u1.lerp(rng.random::<f64>())).ok());
        let mut cells: Vec<InducedCell> = Vec::new();
        for c in found.into_iter().flatten() {
            let cell = match c.color {
                Color::Blue => InducedCell {
                    domain: c.domain,
                    tau: c.rho,
                    map: BranchMap::Iterate { rescale: None },
                },
                Color::Red => InducedCell {
                    domain: c.domain,
                    tau: c.rho + 1,
                    map: BranchMap::Iterate {
                        rescale: v.map(|v| (v, u1)),
                    },
                },
                Color::Yellow => continue,
            };
            cells.push(cell);
        }
        cells.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        cells.dedup_by(|a, b| a.domain == b.domain);
        let (lambda, k, eta) = constants;
        let mut s = InducedMapSpec::new(u1, cells, lambda, k, eta)?;
        let covered: f64 = s.cells.iter().map(|c| c.domain.len()).sum();
        s.unresolved_mass = (1.0 - covered / u1.len()).max(0.0);
        s.base = Some(BaseMap::Family {
            family: family.clone(),
            t,
        });
        s.realization = Realization::Scheme { pair: pair.clone(), v, caps };
        Ok(s)
    }

    /// Index of the cell whose half-open domain holds `x`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.domain.lo <= x);
        (i > 0 && x < self.cells[i - 1].domain.hi).then(|| i - 1)
    }

    fn base_stepper(&self) -> Result<BaseStepper> {
        self.base
            .as_ref()
            .map(BaseMap::stepper)
            .ok_or_else(|| LabError::Unsupported("iterated branches need a base map".into()))
    }

    /// `F` on cell `i`, extended to the closed domain.
    pub fn apply(&self, i: usize, x: f64) -> Result<f64> {
        let cell = &self.cells[i];
        match &cell.map {
            BranchMap::Affine { slope, offset } => Ok(slope * x + offset),
            BranchMap::Iterate { rescale } => {
                let y = self.base_stepper()?.iterate(x, cell.tau - rescale.is_some() as u64);
                Ok(match rescale {
                    Some((from, to)) => red_affine(from, to, y),
                    None => y,
                })
            }
        }
    }

    /// `F` on cell `i` with the base map iterated in double-double, for
    /// endpoint checks through steep branches.
    pub fn apply_precise(&self, i: usize, x: f64) -> Result<f64> {
        let cell = &self.cells[i];
        match (&cell.map, &self.base) {
            (BranchMap::Iterate { rescale }, Some(BaseMap::Family { family, t })) => {
                let mut y = Dd::new(x);
                for _ in 0..cell.tau - rescale.is_some() as u64 {
                    y = family.value_s(*t, y);
                }
                Ok(match rescale {
                    Some((from, to)) => red_affine(from, to, y.to_f64()),
                    None => y.to_f64(),
                })
            }
            _ => self.apply(i, x),
        }
    }

    /// `DF` on cell `i` by the chain rule.
    pub fn derivative(&self, i: usize, x: f64) -> Result<f64> {
        let cell = &self.cells[i];
        match &cell.map {
            BranchMap::Affine { slope, .. } => Ok(*slope),
            BranchMap::Iterate { rescale } => {
                let st = self.base_stepper()?;
                let mut d = 1.0;
                let mut y = x;
                for _ in 0..cell.tau - rescale.is_some() as u64 {
                    d *= st.deriv(y);
                    y = st.step(y);
                }
                Ok(match rescale {
                    Some((from, to)) => d * to.len() / from.len(),
                    None => d,
                })
            }
        }
    }

    /// A point of `Y` drawn from normalised Lebesgue measure.
    pub(crate) fn uniform_point(&self, rng: &mut SampleRng) -> f64 {
        self.y.lerp(rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_cells_match_the_closed_form() {
        let s = InducedMapSpec::doubling_first_return(10).unwrap();
        for (i, c) in s.cells.iter().enumerate() {
            let k = c.tau as i32;
            let x = c.domain.lerp(0.3);
            let closed = 2f64.powi(k) * x - (2f64.powi(k - 1) - 1.0);
            assert_eq!(s.apply(i, x).unwrap(), closed);
            assert_eq!(s.derivative(i, x).unwrap(), 2f64.powi(k));
        }
        assert_eq!(s.cell_of(0.3), Some(1));
        assert_eq!(s.cell_of(0.5), None);
    }

    #[test]
    fn affine_shift_lookup() {
        let s = InducedMapSpec::affine_full_shift(3).unwrap();
        assert_eq!(s.cell_of(0.5), Some(1));
        assert_eq!(s.apply(1, 0.75).unwrap(), 0.5);
        assert!(s.apply(0, 0.1).is_ok());
    }

    #[test]
    fn rejects_bad_constants() {
        let c = InducedMapSpec::affine_full_shift(1).unwrap().cells;
        assert!(InducedMapSpec::new(Interval::new(0.0, 1.0), c.clone(), 1.0, 0.0, 1.0).is_err());
        assert!(InducedMapSpec::new(Interval::new(0.0, 1.0), c, 2.0, 0.0, 1.5).is_err());
    }
}
