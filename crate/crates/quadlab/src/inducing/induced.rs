use rand::Rng;

use crate::error::{LabError, Result};
use crate::inducing::scheme::tail_of;
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;
use crate::returns::central::CentralGeometry;
use crate::returns::first_return::return_path;
use crate::rng::par_samples;
use crate::stats::estimate::McEstimate;
use crate::stats::fit::{linear_fit, LinearFit};
use crate::table::Table;
use crate::UnimodalFamily;

/// Inducing time of the induced map `F = phi_1 ∘ chi` on `U_1 \ V`, where
/// `chi` is the first entry to `U_1 \ Z` under `phi_1`.
#[derive(Clone, Debug)]
pub struct InducedTail {
    /// `(j, m(tau > j))` relative to `m(U_1 \ V)`.
    pub tail: Vec<(u64, f64)>,
    /// Fit of `log m(tau > j)` against `sqrt(j)`; `alpha = -slope`.
    pub fit: Option<LinearFit>,
    pub mean_tau: McEstimate,
    pub cap_hits: u64,
    pub samples: usize,
}

impl InducedTail {
    pub fn alpha(&self) -> Option<f64> {
        self.fit.map(|f| -f.slope)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["j", "mass"]);
        for &(j, m) in &self.tail {
            t.push(vec![j.into(), m.into()]);
        }
        t
    }
}

/// `tau(x)` for `x ∈ U_1 \ V`, or `None` past `cap` steps of `f`.
pub fn induced_time(family: &UnimodalFamily, t: f64, u1: &Interval, z: &Interval, x: f64, cap: u64) -> Option<u64> {
    let st = family.stepper(t);
    let hi = family.interval(t).hi;
    let mut y = x;
    let mut tau = 0u64;
    loop {
        let inside_z = z.contains(y);
        let p = return_path(&st, hi, u1, u1, y, cap.saturating_sub(tau).max(1))?;
        tau += p.time;
        if tau > cap {
            return None;
        }
        y = p.image;
        if !inside_z {
            return Some(tau);
        }
    }
}

/// Empirical tail of the inducing time over uniform points of `U_1 \ V`.
///
/// The fit uses every `j` at which at least `min_count` samples remain.
#[allow(clippy::too_many_arguments)]
pub fn superattracting_induced_tail(
    family: &UnimodalFamily,
    t_n: f64,
    pair: &ReturningIntervalPair,
    geometry: &CentralGeometry,
    samples: usize,
    cap: u64,
    seed: u64,
    min_count: usize,
) -> Result<InducedTail> {
    family.check_parameter(t_n)?;
    if samples == 0 {
        return Err(LabError::InvalidArgument("need samples > 0".into()));
    }
    let u1 = pair.u1;
    let v = geometry.v;
    let z = geometry.z;
    // uniform on U_1 \ V by rejection-free mapping of [0, 1)
    let left = v.lo - u1.lo;
    let right = u1.hi - v.hi;
    let taus = par_samples(samples, seed, |_, rng| {
        let s = rng.random::<f64>() * (left + right);
        let x = if s < left { u1.lo + s } else { v.hi + (s - left) };
        if !u1.contains(x) || v.contains(x) {
            return None;
        }
        induced_time(family, t_n, &u1, &z, x, cap)
    });
    let hits = taus.iter().filter(|x| x.is_none()).count() as u64;
    let mut sorted: Vec<u64> = taus.into_iter().flatten().collect();
    sorted.sort_unstable();
    let n = sorted.len();
    let tail = tail_of(&sorted, n);
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, m)| *m * n as f64 >= min_count as f64)
        .map(|&(j, m)| ((j as f64).sqrt(), m.ln()))
        .collect();
    let vals: Vec<f64> = sorted.iter().map(|&v| v as f64).collect();
    Ok(InducedTail {
        tail,
        fit: linear_fit(&pts),
        mean_tau: McEstimate::from_values(&vals, seed, hits),
        cap_hits: hits,
        samples,
    })
}

/// Fraction of uniform points of `region` whose orbit meets `v` within
/// `horizon` steps (step `0` included).
pub fn basin_entry_fraction(
    family: &UnimodalFamily,
    t: f64,
    v: &Interval,
    region: &Interval,
    horizon: u64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    family.check_parameter(t)?;
    let st = family.stepper(t);
    let dom = family.interval(t);
    let hit = par_samples(samples, seed, |_, rng| {
        let mut x = region.lerp(rng.random::<f64>());
        for _ in 0..horizon {
            if v.contains(x) {
                return true;
            }
            x = st.step(x).min(dom.hi);
        }
        v.contains(x)
    });
    Ok(McEstimate::from_count(hit.iter().filter(|h| **h).count(), samples, seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_returning_pair, find_superattracting};
    use crate::returns::{central_geometry, discover_branches_with, BranchSearch};

    #[test]
    fn off_z_the_time_is_the_return_time() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let s = find_superattracting(&f, 6, 3, 0.2, 1e-15).unwrap();
        let pair = build_returning_pair(&f, s.t_n, 0.2, 1000).unwrap();
        let g = central_geometry(&f, s.t_n, s.p_n, &pair).unwrap();
        let tab = discover_branches_with(
            &f,
            s.t_n,
            &pair,
            &BranchSearch {
                max_probes: 100,
                ..BranchSearch::default()
            },
        )
        .unwrap();
        for b in tab.branches.iter().filter(|b| !b.central && b.domain.len() > 1e-7) {
            let tau = induced_time(&f, s.t_n, &pair.u1, &g.z, b.domain.mid(), 1_000_000).unwrap();
            assert_eq!(tau, b.return_time);
        }
    }

    #[test]
    fn basin_entry_is_immediate_inside_v() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let v = Interval::symmetric(1e-3);
        let e = basin_entry_fraction(&f, 0.0, &v, &v, 0, 100, 1).unwrap();
        assert_eq!(e.mean, 1.0);
    }
}
