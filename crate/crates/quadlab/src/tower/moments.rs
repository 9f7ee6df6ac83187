use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};
use crate::rng::{par_samples, sample_rng};
use crate::stats::estimate::McEstimate;
use crate::stats::fit::{power_law_exponent, LinearFit};
use crate::stats::observable::Observable;
use crate::table::Table;
use crate::tower::orbit::InducedOrbit;
use crate::tower::spec::InducedMapSpec;

/// How `mu_Y` is sampled: independent replicas, each a long `F`-orbit after
/// a burn-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuYSampling {
    pub replicas: usize,
    pub burn_in: u64,
}

impl Default for MuYSampling {
    fn default() -> Self {
        MuYSampling {
            replicas: 64,
            burn_in: 10_000,
        }
    }
}

/// Inducing times along one replica after burn-in.
#[derive(Clone, Debug)]
pub(crate) struct Replica {
    pub taus: Vec<u64>,
    pub points: Vec<f64>,
    pub restarts: u64,
}

pub(crate) fn replicas(spec: &InducedMapSpec, mu: MuYSampling, length: usize, seed: u64) -> Result<Vec<Replica>> {
    (0..mu.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut o = InducedOrbit::new(spec, sample_rng(seed, r))?;
            o.burn(mu.burn_in)?;
            let mut taus = Vec::with_capacity(length);
            let mut points = Vec::with_capacity(length);
            for _ in 0..length {
                let s = o.advance()?;
                taus.push(s.tau);
                points.push(s.y);
            }
            Ok(Replica {
                taus,
                points,
                restarts: o.restarts,
            })
        })
        .collect()
}

/// Norms at each `k` with a power-law fit in `k`.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub rows: Vec<(u64, McEstimate)>,
    /// Slope of `log norm` against `log k`.
    pub fit: Option<LinearFit>,
    /// `tau_bar` for the concentration check, `∫phi dmu` for maximal moments.
    pub centre: f64,
    pub cap_hits: u64,
}

impl MomentReport {
    fn new(rows: Vec<(u64, McEstimate)>, centre: f64, cap_hits: u64) -> MomentReport {
        let pts: Vec<(f64, f64)> = rows.iter().map(|(k, e)| (*k as f64, e.mean)).collect();
        MomentReport {
            fit: power_law_exponent(&pts),
            rows,
            centre,
            cap_hits,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// `norm(k2) / norm(k1)` for two rows.
    pub fn ratio(&self, k1: u64, k2: u64) -> Option<f64> {
        let get = |k| self.rows.iter().find(|r| r.0 == k).map(|r| r.1.mean);
        Some(get(k2)? / get(k1)?)
    }

    pub fn table(&self, key: &str) -> Table {
        let mut t = Table::new(&[key, "norm", "stderr"]);
        for (k, e) in &self.rows {
            t.push(vec![(*k).into(), e.mean.into(), e.stderr.into()]);
        }
        t
    }
}

/// `sqrt(mean of x)` with the delta-method error of a mean of squares.
fn root_of_mean_square(per_replica: &[f64], seed: u64, cap_hits: u64) -> McEstimate {
    let m = McEstimate::from_values(per_replica, seed, cap_hits);
    let norm = m.mean.max(0.0).sqrt();
    McEstimate {
        mean: norm,
        stderr: if norm > 0.0 { m.stderr / (2.0 * norm) } else { 0.0 },
        ..m
    }
}

/// `|tau_k - k tau_bar|_{L^2(mu_Y)}` at each `k` in `ks`, where `tau_k` is
/// the sum of `tau` along `k` steps of `F`.
///
/// Each replica contributes `ceil(samples / replicas)` disjoint blocks at the
/// largest `k`; smaller `k` reuse the same orbit in shorter blocks.
pub fn tau_concentration_sweep(
    spec: &InducedMapSpec,
    ks: &[u64],
    samples: usize,
    mu: MuYSampling,
    seed: u64,
) -> Result<MomentReport> {
    if ks.is_empty() || ks.contains(&0) || mu.replicas < 2 {
        return Err(LabError::InvalidArgument("need k >= 1 and at least two replicas".into()));
    }
    let k_max = *ks.iter().max().expect("non-empty") as usize;
    let per = samples.div_ceil(mu.replicas).max(1);
    let reps = replicas(spec, mu, per * k_max, seed)?;
    let restarts: u64 = reps.iter().map(|r| r.restarts).sum();
    let total: u64 = reps.iter().flat_map(|r| r.taus.iter()).sum();
    let count: usize = reps.iter().map(|r| r.taus.len()).sum();
    let tau_bar = total as f64 / count as f64;
    let rows = ks
        .iter()
        .map(|&k| {
            let ms: Vec<f64> = reps
                .iter()
                .map(|r| {
                    let blocks = r.taus.chunks_exact(k as usize);
                    let n = blocks.len();
                    blocks
                        .map(|b| {
                            let d = b.iter().sum::<u64>() as f64 - k as f64 * tau_bar;
                            d * d
                        })
                        .sum::<f64>()
                        / n as f64
                })
                .collect();
            (k, root_of_mean_square(&ms, seed, restarts))
        })
        .collect();
    Ok(MomentReport::new(rows, tau_bar, restarts))
}

pub fn tau_concentration(spec: &InducedMapSpec, k: u64, samples: usize, seed: u64) -> Result<McEstimate> {
    Ok(tau_concentration_sweep(spec, &[k], samples, MuYSampling::default(), seed)?.rows[0].1)
}

/// A full map for the maximal-moment check.
#[derive(Clone, Debug)]
pub enum FullMap {
    /// The doubling map on exact binary expansions.
    Doubling,
    /// `f_t`, started from Lebesgue measure and burnt in.
    Family { family: UnimodalFamily, t: f64, burn_in: u64 },
}

/// `|max_{k <= n} |S_k phi - k mean||_{L^2}` at each `n` in `ns`, from
/// `samples` independent orbits.
pub fn maximal_moment_sweep(
    map: &FullMap,
    obs: &Observable,
    mean: f64,
    ns: &[u64],
    samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    if ns.is_empty() || ns.contains(&0) || samples < 2 {
        return Err(LabError::InvalidArgument("need n >= 1 and at least two samples".into()));
    }
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let n_max = ns[order[ns.len() - 1]];
    let runs: Vec<Option<Vec<f64>>> = match map {
        FullMap::Doubling => par_samples(samples, seed, |_, rng| {
            let mut window = rng.next_u64();
            let mut pool = 0u64;
            let mut left = 0u32;
            let mut s = 0.0;
            let mut best = 0.0f64;
            let mut out = vec![0.0; ns.len()];
            let mut next = 0;
            for k in 1..=n_max {
                s += obs.eval(window as f64 * 2f64.powi(-64)) - mean;
                best = best.max(s.abs());
                if left == 0 {
                    pool = rng.next_u64();
                    left = 64;
                }
                window = (window << 1) | (pool & 1);
                pool >>= 1;
                left -= 1;
                while next < order.len() && ns[order[next]] == k {
                    out[order[next]] = best * best;
                    next += 1;
                }
            }
            Some(out)
        }),
        FullMap::Family { family, t, burn_in } => {
            family.check_parameter(*t)?;
            let st = family.stepper(*t);
            let dom = family.interval(*t);
            par_samples(samples, seed, |_, rng| {
                let mut x = dom.lerp(rng.random::<f64>());
                for _ in 0..*burn_in {
                    x = st.step(x).clamp(dom.lo, dom.hi);
                }
                let mut s = 0.0;
                let mut best = 0.0f64;
                let mut out = vec![0.0; ns.len()];
                let mut next = 0;
                for k in 1..=n_max {
                    s += obs.eval(x) - mean;
                    best = best.max(s.abs());
                    let y = st.step(x).clamp(dom.lo, dom.hi);
                    if y == x && st.deriv(x).abs() > 1.0 {
                        return None;
                    }
                    x = y;
                    while next < order.len() && ns[order[next]] == k {
                        out[order[next]] = best * best;
                        next += 1;
                    }
                }
                Some(out)
            })
        }
    };
    let trapped = runs.iter().filter(|r| r.is_none()).count() as u64;
    let runs: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    let rows = (0..ns.len())
        .map(|i| {
            let v: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            (ns[i], root_of_mean_square(&v, seed, trapped))
        })
        .collect();
    Ok(MomentReport::new(rows, mean, trapped))
}

pub fn maximal_moment_check(
    map: &FullMap,
    obs: &Observable,
    mean: f64,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(maximal_moment_sweep(map, obs, mean, &[n], samples, seed)?.rows[0].1)
}

/// `2^lo, ..., 2^hi`.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MuYSampling {
        MuYSampling {
            replicas: 16,
            burn_in: 100,
        }
    }

    #[test]
    fn constant_tau_has_zero_spread() {
        let s = InducedMapSpec::affine_full_shift(3).unwrap();
        let r = tau_concentration_sweep(&s, &[1, 16, 64], 64, small(), 1).unwrap();
        assert_eq!(r.centre, 3.0);
        assert!(r.rows.iter().all(|(_, e)| e.mean == 0.0));
    }

    #[test]
    fn doubling_matches_the_geometric_variance() {
        // tau is geometric with P(tau = j) = 2^-j, so Var tau = 2
        let s = InducedMapSpec::doubling_first_return(50).unwrap();
        let r = tau_concentration_sweep(&s, &[16, 256], 2048, small(), 5).unwrap();
        for (k, e) in &r.rows {
            let exact = (2.0 * *k as f64).sqrt();
            assert!((e.mean - exact).abs() < 5.0 * e.stderr + 0.02 * exact, "{k}: {e} vs {exact}");
        }
    }

    #[test]
    fn zero_observable_has_zero_maximal_moment() {
        let m = maximal_moment_check(&FullMap::Doubling, &Observable::Constant(0.0), 0.0, 64, 10, 1).unwrap();
        assert_eq!(m.mean, 0.0);
    }

    #[test]
    fn grid() {
        assert_eq!(dyadic_grid(4, 6), vec![16, 32, 64]);
    }
}
