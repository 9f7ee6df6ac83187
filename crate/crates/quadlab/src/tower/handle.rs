use crate::error::{LabError, Result};
use crate::rng::sample_rng;
use crate::stats::estimate::McEstimate;
use crate::table::Table;
use crate::tower::moments::{replicas, MuYSampling};
use crate::tower::orbit::InducedOrbit;
use crate::tower::spec::{BaseStepper, InducedMapSpec, Realization};

/// A point `(y, level)` of the tower with `0 <= level < tau(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerPoint {
    pub y: f64,
    pub level: u64,
    pub tau: u64,
}

/// The Young tower over an induced map. Levels are produced lazily by
/// running `F` on the base.
pub struct TowerHandle<'a> {
    pub spec: &'a InducedMapSpec,
    /// `∫ tau dmu_Y`.
    pub tau_bar: McEstimate,
    pub mu: MuYSampling,
}

/// A running orbit of `T`.
pub struct TowerOrbit<'a> {
    base: InducedOrbit<'a>,
    point: TowerPoint,
}

impl Iterator for TowerOrbit<'_> {
    type Item = Result<TowerPoint>;

    fn next(&mut self) -> Option<Result<TowerPoint>> {
        let here = self.point;
        if here.level + 1 < here.tau {
            self.point.level += 1;
        } else {
            match self.base.advance() {
                Ok(s) => {
                    self.point = TowerPoint {
                        y: s.y,
                        level: 0,
                        tau: s.tau,
                    }
                }
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(here))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiConjugacy {
    pub checked: u64,
    pub mismatches: u64,
    /// First `(point, pi(T p), f(pi p))` that disagrees.
    pub first_mismatch: Option<(TowerPoint, f64, f64)>,
}

/// Empirical and predicted mass of one level of the tower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelMass {
    pub level: u64,
    /// Fraction of time a tower orbit spends on the level.
    pub empirical: McEstimate,
    /// `mu_Y{tau > level} / tau_bar`.
    pub predicted: McEstimate,
}

impl LevelMass {
    pub fn z(&self) -> f64 {
        let e = self.empirical.stderr.hypot(self.predicted.stderr);
        if e == 0.0 {
            if self.empirical.mean == self.predicted.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.empirical.mean - self.predicted.mean) / e
        }
    }
}

pub fn level_mass_table(rows: &[LevelMass]) -> Table {
    let mut t = Table::new(&["level", "empirical", "empirical_stderr", "predicted", "predicted_stderr"]);
    for r in rows {
        t.push(vec![
            r.level.into(),
            r.empirical.mean.into(),
            r.empirical.stderr.into(),
            r.predicted.mean.into(),
            r.predicted.stderr.into(),
        ]);
    }
    t
}

impl<'a> TowerHandle<'a> {
    /// Estimate `tau_bar` from `mu.replicas` orbits of `length` steps.
    pub fn new(spec: &'a InducedMapSpec, mu: MuYSampling, length: usize, seed: u64) -> Result<TowerHandle<'a>> {
        let reps = replicas(spec, mu, length.max(1), seed)?;
        let means: Vec<f64> = reps
            .iter()
            .map(|r| r.taus.iter().sum::<u64>() as f64 / r.taus.len() as f64)
            .collect();
        let restarts = reps.iter().map(|r| r.restarts).sum();
        Ok(TowerHandle {
            spec,
            tau_bar: McEstimate::from_values(&means, seed, restarts),
            mu,
        })
    }

    /// A tower orbit started at level `0` over a burnt-in base point.
    pub fn orbit(&self, seed: u64, replica: u64) -> Result<TowerOrbit<'a>> {
        let mut base = InducedOrbit::new(self.spec, sample_rng(seed, replica))?;
        base.burn(self.mu.burn_in)?;
        let s = base.advance()?;
        Ok(TowerOrbit {
            base,
            point: TowerPoint {
                y: s.y,
                level: 0,
                tau: s.tau,
            },
        })
    }

    fn base(&self) -> Result<BaseStepper> {
        if matches!(self.spec.realization, Realization::DoublingBits) {
            return Err(LabError::Unsupported(
                "bit-level orbits have no floating-point projection; use the cell realization".into(),
            ));
        }
        self.spec
            .base
            .as_ref()
            .map(|b| b.stepper())
            .ok_or_else(|| LabError::Unsupported("projection needs a base map".into()))
    }

    /// `pi(y, level) = f^level(y)`.
    pub fn project(&self, p: &TowerPoint) -> Result<f64> {
        Ok(self.base()?.iterate(p.y, p.level))
    }

    /// Compare `pi(T p)` with `f(pi p)` along `steps` steps of `replicas`
    /// tower orbits. Agreement is exact when every branch is an iterate of
    /// the base map.
    pub fn check_semiconjugacy(&self, replicas: u64, steps: u64, seed: u64) -> Result<SemiConjugacy> {
        let st = self.base()?;
        let mut out = SemiConjugacy {
            checked: 0,
            mismatches: 0,
            first_mismatch: None,
        };
        for r in 0..replicas {
            let mut orbit = self.orbit(seed, r)?;
            let mut p = orbit.next().expect("tower orbits are infinite")?;
            for _ in 0..steps {
                let q = orbit.next().expect("tower orbits are infinite")?;
                let lhs = st.iterate(q.y, q.level);
                let rhs = st.step(st.iterate(p.y, p.level));
                out.checked += 1;
                if lhs != rhs {
                    out.mismatches += 1;
                    out.first_mismatch.get_or_insert((p, lhs, rhs));
                }
                p = q;
            }
        }
        Ok(out)
    }

    /// Level masses from tower orbits of `steps` steps, against
    /// `mu_Y{tau > level} / tau_bar` from base orbits of an independent seed.
    pub fn level_masses(&self, max_level: u64, steps: u64, seed: u64) -> Result<Vec<LevelMass>> {
        let levels = max_level as usize + 1;
        let mut occupancy = vec![Vec::with_capacity(self.mu.replicas); levels];
        for r in 0..self.mu.replicas as u64 {
            let mut counts = vec![0u64; levels];
            let mut orbit = self.orbit(seed, r)?;
            for _ in 0..steps {
                let p = orbit.next().expect("tower orbits are infinite")?;
                if let Some(c) = counts.get_mut(p.level as usize) {
                    *c += 1;
                }
            }
            for (l, c) in counts.into_iter().enumerate() {
                occupancy[l].push(c as f64 / steps as f64);
            }
        }
        let pred_seed = seed.wrapping_add(0x9e37_79b9);
        let reps = replicas(self.spec, self.mu, steps as usize, pred_seed)?;
        let restarts = reps.iter().map(|r| r.restarts).sum();
        Ok((0..levels)
            .map(|l| {
                let pred: Vec<f64> = reps
                    .iter()
                    .map(|r| {
                        let above = r.taus.iter().filter(|&&t| t > l as u64).count() as f64;
                        let total = r.taus.iter().sum::<u64>() as f64;
                        above / total
                    })
                    .collect();
                LevelMass {
                    level: l as u64,
                    empirical: McEstimate::from_values(&occupancy[l], seed, 0),
                    predicted: McEstimate::from_values(&pred, pred_seed, restarts),
                }
            })
            .collect())
    }

    /// Histogram of `mu_Y` on `bins` equal bins of `Y`, normalised so that
    /// Lebesgue measure gives `1` in every bin.
    pub fn density_histogram(&self, bins: usize, steps: usize, seed: u64) -> Result<Vec<f64>> {
        if bins == 0 {
            return Err(LabError::InvalidArgument("need at least one bin".into()));
        }
        let reps = replicas(self.spec, self.mu, steps, seed)?;
        let y = self.spec.y;
        let mut counts = vec![0u64; bins];
        let mut n = 0u64;
        for p in reps.iter().flat_map(|r| r.points.iter()) {
            let b = (((p - y.lo) / y.len()) * bins as f64).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
                n += 1;
            }
        }
        Ok(counts.iter().map(|&c| c as f64 * bins as f64 / n as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mu() -> MuYSampling {
        MuYSampling {
            replicas: 8,
            burn_in: 100,
        }
    }

    #[test]
    fn doubling_tower_is_a_semiconjugacy() {
        let mut s = InducedMapSpec::doubling_first_return(50).unwrap();
        s.realization = Realization::Cells;
        let h = TowerHandle::new(&s, mu(), 100, 1).unwrap();
        let c = h.check_semiconjugacy(4, 200, 2).unwrap();
        assert_eq!((c.checked, c.mismatches), (800, 0));
    }

    #[test]
    fn bit_orbits_have_no_projection() {
        let s = InducedMapSpec::doubling_first_return(50).unwrap();
        let h = TowerHandle::new(&s, mu(), 10, 1).unwrap();
        assert!(h.check_semiconjugacy(1, 10, 1).is_err());
    }

    #[test]
    fn levels_count_up_to_tau() {
        let s = InducedMapSpec::affine_full_shift(3).unwrap();
        let h = TowerHandle::new(&s, mu(), 10, 1).unwrap();
        let levels: Vec<u64> = h.orbit(1, 0).unwrap().take(7).map(|p| p.unwrap().level).collect();
        assert_eq!(levels, vec![0, 1, 2, 0, 1, 2, 0]);
        let m = h.level_masses(3, 300, 4).unwrap();
        assert!((m[1].empirical.mean - 1.0 / 3.0).abs() < 1e-2);
        assert_eq!(m[3].predicted.mean, 0.0);
    }

    #[test]
    fn doubling_level_masses_are_consistent() {
        let s = InducedMapSpec::doubling_first_return(50).unwrap();
        let h = TowerHandle::new(
            &s,
            MuYSampling {
                replicas: 32,
                burn_in: 100,
            },
            2000,
            3,
        )
        .unwrap();
        assert!((h.tau_bar.mean - 2.0).abs() < 5.0 * h.tau_bar.stderr);
        for m in h.level_masses(5, 4000, 9).unwrap() {
            // mu_Y{tau > l} = 2^-l, tau_bar = 2
            let exact = 0.5f64.powi(m.level as i32) / 2.0;
            assert!(m.z().abs() < 4.0, "{m:?}");
            assert!((m.predicted.mean - exact).abs() < 5.0 * m.predicted.stderr + 1e-3);
        }
    }

    #[test]
    fn doubling_density_is_flat() {
        let s = InducedMapSpec::doubling_first_return(50).unwrap();
        let h = TowerHandle::new(&s, mu(), 10, 1).unwrap();
        let d = h.density_histogram(8, 5000, 2).unwrap();
        assert!(d.iter().all(|&v| (0.9..1.1).contains(&v)), "{d:?}");
    }
}
