use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{LabError, Result};
use crate::inducing::classify::{ClassifyCaps, Color, Scheme};
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;
use crate::rng::par_samples;
use crate::stats::estimate::McEstimate;
use crate::table::Table;
use crate::UnimodalFamily;

/// Monte Carlo summary of the coloured partition at one parameter.
#[derive(Clone, Debug)]
pub struct SchemeReport {
    pub t: f64,
    pub u1: Interval,
    /// Lebesgue measure of the red cells, from the conditional red shares.
    pub red_measure: McEstimate,
    /// Fraction of samples that landed in a red cell.
    pub red_hits: McEstimate,
    pub blue_fraction: f64,
    /// Mean of `rho` over `U_1` with normalised Lebesgue measure.
    pub rho_first_moment: McEstimate,
    pub rho_second_moment: McEstimate,
    /// `(j, m(rho > j) / m(U_1))`.
    pub rho_tail: Vec<(u64, f64)>,
    /// Estimated number of yellow cells with each index, summed over heights.
    pub yellow_counts_by_index: Vec<(u64, f64)>,
    pub unresolved_fraction: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SchemeReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "t",
            "red_measure",
            "stderr",
            "rho_m1",
            "rho_m2",
            "unresolved_fraction",
        ]);
        t.push(vec![
            self.t.into(),
            self.red_measure.mean.into(),
            self.red_measure.stderr.into(),
            self.rho_first_moment.mean.into(),
            self.rho_second_moment.mean.into(),
            self.unresolved_fraction.into(),
        ]);
        t
    }

    pub fn tail_table(&self) -> Table {
        let mut t = Table::new(&["j", "mass"]);
        for &(j, m) in &self.rho_tail {
            t.push(vec![j.into(), m.into()]);
        }
        t
    }

    /// Least-squares slope of `log count` against the index over indices
    /// `1..=max_index` with a positive count; `exp(slope)` is the growth rate.
    pub fn yellow_growth_rate(&self, max_index: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .yellow_counts_by_index
            .iter()
            .filter(|(l, c)| (1..=max_index).contains(l) && *c > 0.0)
            .map(|&(l, c)| (l as f64, c.ln()))
            .collect();
        crate::stats::fit::linear_fit(&pts).map(|f| f.slope.exp())
    }
}

/// Classify `samples` uniform points of `U_1` and aggregate.
pub fn scheme_report(
    family: &UnimodalFamily,
    t: f64,
    pair: &ReturningIntervalPair,
    v: Option<Interval>,
    caps: ClassifyCaps,
    samples: usize,
    seed: u64,
) -> Result<SchemeReport> {
    if samples == 0 {
        return Err(LabError::InvalidArgument("scheme_report needs samples > 0".into()));
    }
    let sch = Scheme::new(family, t, pair, v, caps)?;
    let u1 = pair.u1;
    let cells = par_samples(samples, seed, |_, rng| {
        let x = u1.lerp(rng.random::<f64>());
        sch.classify(x)
    });

    let mut red_share = Vec::with_capacity(samples);
    let mut red_hit = 0usize;
    let mut blue = 0usize;
    let mut rho1 = Vec::with_capacity(samples);
    let mut rho2 = Vec::with_capacity(samples);
    let mut unresolved = 0u64;
    let mut yellow: BTreeMap<u64, f64> = BTreeMap::new();
    for c in &cells {
        match c {
            Ok(c) => {
                red_share.push(c.red_share * u1.len());
                match c.color {
                    Color::Red => red_hit += 1,
                    Color::Blue => blue += 1,
                    Color::Yellow => {}
                }
                rho1.push(c.rho as f64);
                rho2.push((c.rho as f64).powi(2));
                for &(ix, len) in &c.yellow_path {
                    *yellow.entry(ix).or_insert(0.0) += u1.len() / len;
                }
            }
            Err(_) => unresolved += 1,
        }
    }
    let resolved = rho1.len();
    let mut sorted: Vec<u64> = rho1.iter().map(|&r| r as u64).collect();
    sorted.sort_unstable();
    let rho_tail = tail_of(&sorted, resolved);
    Ok(SchemeReport {
        t,
        u1,
        red_measure: McEstimate::from_values(&red_share, seed, unresolved),
        red_hits: McEstimate::from_count(red_hit, resolved.max(1), seed, unresolved),
        blue_fraction: blue as f64 / resolved.max(1) as f64,
        rho_first_moment: McEstimate::from_values(&rho1, seed, unresolved),
        rho_second_moment: McEstimate::from_values(&rho2, seed, unresolved),
        rho_tail,
        yellow_counts_by_index: yellow.into_iter().map(|(k, v)| (k, v / samples as f64)).collect(),
        unresolved_fraction: unresolved as f64 / samples as f64,
        samples,
        seed,
    })
}

/// `(j, #{v > j} / n)` at every distinct value `j` of the sorted sample.
pub(crate) fn tail_of(sorted: &[u64], n: usize) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i];
        while i < sorted.len() && sorted[i] == j {
            i += 1;
        }
        out.push((j, (sorted.len() - i) as f64 / n as f64));
    }
    out
}

pub fn scheme_table(reports: &[SchemeReport]) -> Table {
    let mut t = Table::new(&[
        "t",
        "red_measure",
        "stderr",
        "rho_m1",
        "rho_m2",
        "unresolved_fraction",
    ]);
    for r in reports {
        t.rows.extend(r.table().rows);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_returning_pair, find_superattracting};
    use crate::returns::central_geometry;

    #[test]
    fn tail_counts() {
        assert_eq!(tail_of(&[1, 1, 2, 5], 4), vec![(1, 0.5), (2, 0.25), (5, 0.0)]);
    }

    #[test]
    fn no_basin_means_no_red() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        let r = scheme_report(&f, 0.0, &pair, None, ClassifyCaps::default(), 300, 1).unwrap();
        assert_eq!(r.red_measure.mean, 0.0);
        assert_eq!(r.red_hits.mean, 0.0);
        assert!(r.unresolved_fraction < 0.02);
        assert!(r.rho_second_moment.mean.is_finite());
    }

    #[test]
    fn red_measure_is_at_least_the_basin() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let s = find_superattracting(&f, 6, 3, 0.2, 1e-15).unwrap();
        let pair = build_returning_pair(&f, s.t_n, 0.2, 1000).unwrap();
        let g = central_geometry(&f, s.t_n, s.p_n, &pair).unwrap();
        let r = scheme_report(&f, s.t_n, &pair, Some(g.v), ClassifyCaps::default(), 300, 2).unwrap();
        assert!(r.red_measure.mean >= g.v.len() * (1.0 - 1e-12));
        assert!(r.red_measure.mean < 50.0 * g.v.len());
    }
}
