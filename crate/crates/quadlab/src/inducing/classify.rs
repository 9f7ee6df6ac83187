use crate::dd::Dd;
use crate::dynamics::family::{Stepper, UnimodalFamily};
use crate::dynamics::pullback::{pull_back, PullbackMode};
use crate::error::{LabError, Result};
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;
use crate::returns::branches::log_derivative_range;
use crate::returns::first_return::return_path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Blue,
    Red,
    Yellow,
}

/// The cell of the coloured partition of `U_1` containing a sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct InducingCell {
    pub domain: Interval,
    pub color: Color,
    pub height: u64,
    /// Number of `0 < j <= rho` with `f^j(cell) ⊂ U_0`.
    pub index: u64,
    /// Inducing time `tau_height` in steps of `f`.
    pub rho: u64,
    /// Inducing time used by the approximating map: `1` on red cells.
    pub rho_hat: u64,
    /// Sum over the yellow ancestors `J` of the point of
    /// `m(red child of J) / m(J)`. Its mean over uniform samples is the
    /// relative red measure.
    pub red_share: f64,
    /// `(index, length)` of each yellow ancestor below the root.
    pub yellow_path: Vec<(u64, f64)>,
    /// `sign f^j` on the cell for `j < rho`.
    pub itinerary: Vec<i8>,
}

impl InducingCell {
    /// Sampled `sup |D f^rho| / inf |D f^rho|` over a blue cell.
    pub fn distortion(&self, family: &UnimodalFamily, t: f64, u1: &Interval, samples: usize) -> Option<f64> {
        if self.color != Color::Blue {
            return None;
        }
        let (lo, hi) = log_derivative_range(family, t, u1, &self.itinerary, samples);
        Some((hi - lo).exp())
    }
}

#[derive(Clone, Debug)]
pub struct ClassifyCaps {
    /// Largest height explored before giving up.
    pub max_height: u64,
    /// Cap on each return to `U_1`.
    pub return_cap: u64,
    /// Relative margin by which the image must cover `U_0`.
    pub margin: f64,
}

impl Default for ClassifyCaps {
    fn default() -> Self {
        ClassifyCaps {
            max_height: 400,
            return_cap: 1_000_000,
            margin: 1e-3,
        }
    }
}

/// Everything needed to replay the colouring at one parameter.
#[derive(Clone)]
pub struct Scheme<'a> {
    pub family: &'a UnimodalFamily,
    pub t: f64,
    pub pair: &'a ReturningIntervalPair,
    /// Basin of the central branch; `None` away from superattracting parameters.
    pub v: Option<Interval>,
    pub caps: ClassifyCaps,
    st: Stepper,
    hi: f64,
    u0_wide: Interval,
}

impl<'a> Scheme<'a> {
    pub fn new(
        family: &'a UnimodalFamily,
        t: f64,
        pair: &'a ReturningIntervalPair,
        v: Option<Interval>,
        caps: ClassifyCaps,
    ) -> Result<Scheme<'a>> {
        family.check_parameter(t)?;
        if !family.has_inverse() {
            return Err(LabError::Unsupported("the inducing scheme needs inverse branches".into()));
        }
        if let Some(v) = v {
            if !pair.u1.contains_interval(&v) {
                return Err(LabError::InvalidArgument(format!("V = {v} is not inside U_1 = {}", pair.u1)));
            }
        }
        let m = caps.margin * pair.u0.len();
        Ok(Scheme {
            family,
            t,
            pair,
            v,
            caps,
            st: family.stepper(t),
            hi: family.interval(t).hi,
            u0_wide: Interval::new(pair.u0.lo - m, pair.u0.hi + m),
        })
    }

    fn pull(&self, target: Interval, signs: &[i8]) -> Option<Interval> {
        if signs.is_empty() {
            return Some(target);
        }
        pull_back(
            self.family,
            self.t,
            Dd::new(target.lo),
            Dd::new(target.hi),
            signs,
            PullbackMode::Clip,
        )
        .map(|p| Interval::new(p.lo.to_f64(), p.hi.to_f64()))
    }

    fn forward(&self, mut x: f64, n: u64) -> f64 {
        for _ in 0..n {
            x = self.st.step(x).min(self.hi);
        }
        x
    }

    /// Replay the inductive colouring along the `phi_1`-orbit of `x`.
    pub fn classify(&self, x: f64) -> Result<InducingCell> {
        let u1 = self.pair.u1;
        if !u1.contains(x) {
            return Err(LabError::Domain { x, lo: u1.lo, hi: u1.hi });
        }
        let mut y = x;
        // A = phi_1^{k-1}(J) for the yellow cell J of P_{k-1} containing x
        let mut a = u1;
        let mut signs: Vec<i8> = Vec::new();
        let mut visits = 0u64;
        let mut red_share = 0.0;
        let mut yellow_path = Vec::new();
        let mut pending: Option<u64> = None;

        for k in 1..=self.caps.max_height + 1 {
            let cell = self
                .pull(a, &signs)
                .ok_or_else(|| LabError::NoConvergence(format!("lost the cell of x = {x} at height {k}")))?;
            if let Some(ix) = pending.take() {
                yellow_path.push((ix, cell.len()));
            }
            if let Some(v) = self.v {
                if let Some(va) = v.intersect(&a) {
                    if let Some(red) = self.pull(va, &signs) {
                        red_share += (red.len() / cell.len()).min(1.0);
                        if v.contains(y) {
                            return Ok(InducingCell {
                                domain: red,
                                color: Color::Red,
                                height: k - 1,
                                index: visits,
                                rho: signs.len() as u64,
                                rho_hat: 1,
                                red_share,
                                yellow_path,
                                itinerary: signs,
                            });
                        }
                    }
                }
            }
            if k > self.caps.max_height {
                break;
            }
            // component of A \ V holding y, split at 0 when there is no basin
            let hat = match self.v {
                Some(v) if y >= v.hi => Interval::new(a.lo.max(v.hi), a.hi),
                Some(v) if y <= v.lo => Interval::new(a.lo, a.hi.min(v.lo)),
                _ => a,
            };
            let path = return_path(&self.st, self.hi, &u1, &self.pair.u0, y, self.caps.return_cap)
                .ok_or(LabError::CapExceeded { cap: self.caps.return_cap })?;
            let w = pull_back(self.family, self.t, u1.lo, u1.hi, &path.signs, PullbackMode::AllowCentral)
                .ok_or_else(|| LabError::NoConvergence(format!("no branch of phi_1 around {y}")))?;
            let index = visits + path.outer_visits;
            if !w.central {
                let ext = pull_back(
                    self.family,
                    self.t,
                    self.u0_wide.lo,
                    self.u0_wide.hi,
                    &path.signs,
                    PullbackMode::Strict,
                );
                if let Some(w0) = ext {
                    if hat.contains_interval(&w0.interval()) {
                        signs.extend_from_slice(&path.signs);
                        let domain = self.pull(u1, &signs).unwrap_or(cell);
                        return Ok(InducingCell {
                            domain,
                            color: Color::Blue,
                            height: k,
                            index,
                            rho: signs.len() as u64,
                            rho_hat: signs.len() as u64,
                            red_share,
                            yellow_path,
                            itinerary: signs,
                        });
                    }
                }
            }
            // yellow: the next A is the image of (branch ∩ hat) under phi_1
            let mut wi = w.interval();
            if w.central {
                wi = if y >= 0.0 { Interval::new(0.0, wi.hi) } else { Interval::new(wi.lo, 0.0) };
            }
            let piece = wi.intersect(&hat).unwrap_or(wi);
            a = if !w.central && piece == wi {
                u1
            } else {
                let p = self.forward(piece.lo, path.time);
                let q = self.forward(piece.hi, path.time);
                Interval::new(p.min(q).max(u1.lo), p.max(q).min(u1.hi))
            };
            signs.extend_from_slice(&path.signs);
            visits = index;
            pending = Some(index);
            y = path.image;
            if !a.contains_closed(y) {
                a = Interval::new(a.lo.min(y), a.hi.max(y));
            }
        }
        Err(LabError::CapExceeded { cap: self.caps.max_height })
    }
}

/// Classify one point; see [`Scheme::classify`].
pub fn classify_point(
    family: &UnimodalFamily,
    t: f64,
    x: f64,
    pair: &ReturningIntervalPair,
    v: Option<Interval>,
    caps: ClassifyCaps,
) -> Result<InducingCell> {
    Scheme::new(family, t, pair, v, caps)?.classify(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_returning_pair, find_superattracting};
    use crate::returns::{central_geometry, discover_branches_with, BranchSearch};

    #[test]
    fn basin_points_are_red_at_height_zero() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let s = find_superattracting(&f, 6, 3, 0.2, 1e-15).unwrap();
        let pair = build_returning_pair(&f, s.t_n, 0.2, 1000).unwrap();
        let g = central_geometry(&f, s.t_n, s.p_n, &pair).unwrap();
        let c = classify_point(&f, s.t_n, g.v.lerp(0.3), &pair, Some(g.v), ClassifyCaps::default()).unwrap();
        assert_eq!(c.color, Color::Red);
        assert_eq!((c.height, c.rho, c.rho_hat), (0, 0, 1));
        assert_eq!(c.domain, g.v);
    }

    #[test]
    fn extensible_branches_are_blue_at_height_one() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let tab = discover_branches_with(
            &f,
            0.0,
            &pair,
            &BranchSearch {
                max_probes: 200,
                ..BranchSearch::default()
            },
        )
        .unwrap();
        let mut checked = 0;
        for b in tab.branches.iter().filter(|b| b.domain.len() > 1e-6) {
            let c = classify_point(&f, 0.0, b.domain.mid(), &pair, None, ClassifyCaps::default()).unwrap();
            assert_ne!(c.color, Color::Red);
            if c.height == 1 {
                assert_eq!(c.color, Color::Blue);
                assert_eq!(c.rho, b.return_time);
                assert!(b.extensible_over_u0);
                checked += 1;
            }
        }
        assert!(checked > 5);
    }

    #[test]
    fn blue_cells_map_onto_u1() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let sch = Scheme::new(&f, 0.0, &pair, None, ClassifyCaps::default()).unwrap();
        for i in 1..40 {
            let x = pair.u1.lerp(i as f64 / 40.0 + 0.0013);
            let c = sch.classify(x).unwrap();
            assert_eq!(c.color, Color::Blue);
            // the float orbit shadows a true orbit; near 0 the shadow can sit
            // a little way from x
            assert!(c.domain.lo - 1e-10 <= x && x <= c.domain.hi + 1e-10, "{x} {c:?}");
            if c.domain.len() < 1e-12 {
                continue;
            }
            let mut y = c.domain.mid();
            for _ in 0..c.rho {
                y = f.value(0.0, y);
            }
            assert!(pair.u1.contains(y));
            assert!(c.distortion(&f, 0.0, &pair.u1, 9).unwrap() <= 2.1);
        }
    }
}
