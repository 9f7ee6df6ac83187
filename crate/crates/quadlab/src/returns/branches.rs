use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use crate::dynamics::family::UnimodalFamily;
use crate::dynamics::pullback::{pull_back, pull_back_point, PullbackMode};
use crate::error::{LabError, Result};
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;
use crate::returns::first_return::return_path;
use crate::table::Table;

/// A branch of the first return map `phi_1` to `U_1`.
#[derive(Clone, Debug)]
pub struct ReturnBranch {
    pub domain: Interval,
    pub return_time: u64,
    /// Sign of `D phi_1` on the branch (`0` for the folding central branch).
    pub monotone_sign: i8,
    pub image: Interval,
    /// The branch contains the critical point and folds onto its image.
    pub central: bool,
    /// `phi_1` maps the branch onto all of `U_1`.
    pub full: bool,
    /// `f^r` extends to a diffeomorphism from a neighbourhood of the domain
    /// onto `U_0`.
    pub extensible_over_u0: bool,
    /// Minimum of `|D phi_1|` over the sampled points (0 for the central branch).
    pub min_abs_derivative: f64,
    /// Sampled `sup |D phi_1| / inf |D phi_1|`.
    pub distortion: f64,
    /// `sign f^j` along the branch for `j < return_time`.
    pub itinerary: Vec<i8>,
}

/// Branches found by [`discover_branches`], sorted by position.
#[derive(Clone, Debug)]
pub struct BranchTable {
    pub u1: Interval,
    pub branches: Vec<ReturnBranch>,
    /// Lebesgue measure of `U_1` not covered by a recorded branch.
    pub unresolved_mass: f64,
    /// Probes whose orbit did not return within the cap.
    pub cap_hits: u64,
    pub probes: usize,
}

impl BranchTable {
    /// Fraction of `U_1` covered by recorded branches.
    pub fn coverage(&self) -> f64 {
        self.branches.iter().map(|b| b.domain.len()).sum::<f64>() / self.u1.len()
    }

    pub fn central(&self) -> Option<&ReturnBranch> {
        self.branches.iter().find(|b| b.central)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "domain_lo",
            "domain_hi",
            "return_time",
            "monotone_sign",
            "is_central",
            "is_full",
            "extensible_over_u0",
            "min_abs_derivative",
            "distortion_sample",
        ]);
        for b in &self.branches {
            t.push(vec![
                b.domain.lo.into(),
                b.domain.hi.into(),
                b.return_time.into(),
                (b.monotone_sign as i64).into(),
                b.central.into(),
                b.full.into(),
                b.extensible_over_u0.into(),
                b.min_abs_derivative.into(),
                b.distortion.into(),
            ]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.table().write_csv(w)
    }
}

/// Search effort for [`discover_branches_with`].
#[derive(Clone, Debug)]
pub struct BranchSearch {
    pub cap: u64,
    /// Gaps narrower than this are not probed.
    pub min_width: f64,
    pub max_probes: usize,
    /// Points per branch used for derivative and distortion samples.
    pub derivative_samples: usize,
}

impl Default for BranchSearch {
    fn default() -> Self {
        BranchSearch {
            cap: 1_000_000,
            min_width: 1e-10,
            max_probes: 20_000,
            derivative_samples: 9,
        }
    }
}

#[derive(PartialEq)]
struct Gap(Interval);

impl Eq for Gap {}

impl PartialOrd for Gap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gap {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .partial_cmp(&other.0.len())
            .unwrap_or(Ordering::Equal)
            .then(other.0.lo.partial_cmp(&self.0.lo).unwrap_or(Ordering::Equal))
    }
}

/// Enumerate branches of the first return map to `U_1` by filling gaps,
/// widest first. Each probe follows one orbit to its return and pulls `U_1`
/// back along the itinerary to get the whole branch.
pub fn discover_branches(
    family: &UnimodalFamily,
    t: f64,
    pair: &ReturningIntervalPair,
    cap: u64,
    min_width: f64,
) -> Result<BranchTable> {
    discover_branches_with(
        family,
        t,
        pair,
        &BranchSearch {
            cap,
            min_width,
            ..BranchSearch::default()
        },
    )
}

pub fn discover_branches_with(
    family: &UnimodalFamily,
    t: f64,
    pair: &ReturningIntervalPair,
    cfg: &BranchSearch,
) -> Result<BranchTable> {
    family.check_parameter(t)?;
    if !family.has_inverse() {
        return Err(LabError::Unsupported("branch discovery needs inverse branches".into()));
    }
    let u1 = pair.u1;
    let st = family.stepper(t);
    let hi = family.interval(t).hi;

    let mut heap = BinaryHeap::new();
    heap.push(Gap(u1));
    let mut branches = Vec::new();
    let mut cap_hits = 0;
    let mut probes = 0;

    while let Some(Gap(gap)) = heap.pop() {
        if gap.len() < cfg.min_width || probes >= cfg.max_probes {
            continue;
        }
        probes += 1;
        let x = gap.mid();
        let split = |heap: &mut BinaryHeap<Gap>| {
            heap.push(Gap(Interval::new(gap.lo, x)));
            heap.push(Gap(Interval::new(x, gap.hi)));
        };
        let Some(path) = return_path(&st, hi, &u1, &u1, x, cfg.cap) else {
            cap_hits += 1;
            split(&mut heap);
            continue;
        };
        let Some(w) = pull_back(family, t, u1.lo, u1.hi, &path.signs, PullbackMode::AllowCentral) else {
            split(&mut heap);
            continue;
        };
        let dom = w.interval();
        let slack = 1e-12 * u1.len();
        if dom.is_empty() || dom.lo < gap.lo - slack || dom.hi > gap.hi + slack || !dom.contains_closed(x) {
            split(&mut heap);
            continue;
        }
        let dom = Interval::new(dom.lo.max(gap.lo), dom.hi.min(gap.hi));
        let branch = make_branch(family, t, pair, dom, path.time, path.signs, w.central, cfg.derivative_samples);
        if dom.lo - gap.lo > 0.0 {
            heap.push(Gap(Interval::new(gap.lo, dom.lo)));
        }
        if gap.hi - dom.hi > 0.0 {
            heap.push(Gap(Interval::new(dom.hi, gap.hi)));
        }
        branches.push(branch);
    }
    branches.sort_by(|a, b| a.domain.lo.partial_cmp(&b.domain.lo).unwrap());
    let covered: f64 = branches.iter().map(|b| b.domain.len()).sum();
    Ok(BranchTable {
        u1,
        branches,
        unresolved_mass: (u1.len() - covered).max(0.0),
        cap_hits,
        probes,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_branch(
    family: &UnimodalFamily,
    t: f64,
    pair: &ReturningIntervalPair,
    domain: Interval,
    return_time: u64,
    itinerary: Vec<i8>,
    central: bool,
    samples: usize,
) -> ReturnBranch {
    let extensible = !central && pull_back(family, t, pair.u0.lo, pair.u0.hi, &itinerary, PullbackMode::Strict).is_some();
    let monotone_sign = if central { 0 } else { itinerary.iter().product() };
    let image = if central {
        let st = family.stepper(t);
        let fwd = |mut x: f64| {
            for _ in 0..return_time {
                x = st.step(x);
            }
            x
        };
        let (a, b) = (fwd(0.0), fwd(domain.hi));
        Interval::new(a.min(b).max(pair.u1.lo), a.max(b).min(pair.u1.hi))
    } else {
        pair.u1
    };
    let (min_d, distortion) = if central {
        (0.0, f64::INFINITY)
    } else {
        let (lo, hi) = log_derivative_range(family, t, &pair.u1, &itinerary, samples);
        (lo.exp(), (hi - lo).exp())
    };
    ReturnBranch {
        domain,
        return_time,
        monotone_sign,
        image,
        central,
        full: !central,
        extensible_over_u0: extensible,
        min_abs_derivative: min_d,
        distortion,
        itinerary,
    }
}

/// Range of `log |D f^r|` over preimages of evenly spaced points of `image`.
pub(crate) fn log_derivative_range(
    family: &UnimodalFamily,
    t: f64,
    image: &Interval,
    itinerary: &[i8],
    samples: usize,
) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let k = samples.max(2);
    for i in 0..k {
        let y = image.lerp((i as f64 + 0.5) / k as f64);
        if let Some((_, l)) = pull_back_point(family, t, y, itinerary) {
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    (lo, hi)
}

/// Sampled distortion of a non-central branch and the Koebe ceiling implied
/// by the space `U_0 \ U_1` around its image.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionAudit {
    pub sampled_ratio: f64,
    /// `delta`: the relative size of the components of `U_0 \ U_1`.
    pub delta: f64,
    /// `(1 + delta)^2 / delta^2`.
    pub koebe_ceiling: f64,
    pub within_ceiling: bool,
}

pub fn koebe_ceiling(delta: f64) -> f64 {
    ((1.0 + delta) / delta).powi(2)
}

/// The `delta` at which the Koebe ceiling equals `ratio`.
pub fn delta_for_ceiling(ratio: f64) -> f64 {
    1.0 / (ratio.sqrt() - 1.0)
}

pub fn distortion_audit(
    branch: &ReturnBranch,
    family: &UnimodalFamily,
    t: f64,
    pair: &ReturningIntervalPair,
    samples: usize,
) -> Result<DistortionAudit> {
    if branch.central {
        return Err(LabError::InvalidArgument("the central branch has a critical point".into()));
    }
    let (lo, hi) = log_derivative_range(family, t, &pair.u1, &branch.itinerary, samples);
    let ratio = (hi - lo).exp();
    let left = pair.u1.lo - pair.u0.lo;
    let right = pair.u0.hi - pair.u1.hi;
    let delta = left.min(right) / pair.u1.len();
    let ceiling = koebe_ceiling(delta);
    Ok(DistortionAudit {
        sampled_ratio: ratio,
        delta,
        koebe_ceiling: ceiling,
        within_ceiling: !branch.extensible_over_u0 || ratio <= ceiling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::returning::build_returning_pair;
    use approx::assert_relative_eq;

    #[test]
    fn koebe_constants() {
        assert_relative_eq!(koebe_ceiling(1.0 + 2f64.sqrt()), 2.0, max_relative = 1e-14);
        assert_eq!(koebe_ceiling(1.0), 4.0);
        assert_relative_eq!(delta_for_ceiling(2.0), 1.0 + 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn branches_are_disjoint_and_return_onto_u1() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let cfg = BranchSearch {
            max_probes: 400,
            ..BranchSearch::default()
        };
        let tab = discover_branches_with(&f, 0.0, &pair, &cfg).unwrap();
        assert!(!tab.branches.is_empty());
        for w in tab.branches.windows(2) {
            assert!(w[0].domain.hi <= w[1].domain.lo);
        }
        for b in tab.branches.iter().filter(|b| !b.central && b.domain.len() > 1e-9) {
            // the midpoint's forward orbit returns at the recorded time
            let mut y = b.domain.mid();
            for _ in 0..b.return_time {
                y = f.value(0.0, y);
            }
            assert!(pair.u1.contains(y));
        }
    }

    #[test]
    fn extensible_branches_obey_koebe() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let cfg = BranchSearch {
            max_probes: 300,
            ..BranchSearch::default()
        };
        let tab = discover_branches_with(&f, 0.0, &pair, &cfg).unwrap();
        for b in tab.branches.iter().filter(|b| b.extensible_over_u0) {
            let a = distortion_audit(b, &f, 0.0, &pair, 33).unwrap();
            assert!(a.within_ceiling, "{a:?}");
        }
    }
}
