use rand::Rng;

use crate::dynamics::family::{Stepper, UnimodalFamily};
use crate::error::{LabError, Result};
use crate::interval::Interval;
use rayon::prelude::*;

use crate::rng::sample_rng;
use crate::stats::estimate::McEstimate;
use crate::stats::observable::Observable;
use crate::stats::reference::ReferenceMean;

/// Averages `S_{n}phi(x) / n` at each horizon in `ns` along one orbit, or
/// `None` if the float orbit sticks to a repelling fixed point.
pub(crate) fn orbit_averages(
    st: &Stepper,
    dom: &Interval,
    obs: &Observable,
    x0: f64,
    ns: &[u64],
) -> Option<Vec<f64>> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let mut next = 0;
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut res = vec![0.0; ns.len()];
    let mut sum = 0.0;
    let mut x = x0;
    for j in 0..n_max {
        sum += obs.eval(x);
        let y = st.step(x).clamp(dom.lo, dom.hi);
        if y == x && st.deriv(x).abs() > 1.0 {
            return None;
        }
        x = y;
        while next < order.len() && ns[order[next]] == j + 1 {
            res[order[next]] = sum / (j + 1) as f64;
            next += 1;
        }
    }
    Some(res)
}

/// Four orbits advanced in lockstep; each lane does exactly the arithmetic
/// of [`orbit_averages`], so results do not depend on the grouping.
fn orbit_averages_x4(
    st: &Stepper,
    dom: &Interval,
    obs: &Observable,
    x0: [f64; 4],
    ns: &[u64],
) -> [Option<Vec<f64>>; 4] {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut res = [vec![0.0; ns.len()], vec![0.0; ns.len()], vec![0.0; ns.len()], vec![0.0; ns.len()]];
    let mut sum = [0.0f64; 4];
    let mut x = x0;
    let mut alive = [true; 4];
    let mut next = 0;
    for j in 0..n_max {
        for l in 0..4 {
            sum[l] += obs.eval(x[l]);
            let y = st.step(x[l]).clamp(dom.lo, dom.hi);
            if y == x[l] && st.deriv(x[l]).abs() > 1.0 {
                alive[l] = false;
            }
            x[l] = y;
        }
        while next < order.len() && ns[order[next]] == j + 1 {
            for l in 0..4 {
                res[l][order[next]] = sum[l] / (j + 1) as f64;
            }
            next += 1;
        }
    }
    let [a, b, c, d] = res;
    let keep = |ok: bool, v: Vec<f64>| ok.then_some(v);
    [keep(alive[0], a), keep(alive[1], b), keep(alive[2], c), keep(alive[3], d)]
}

/// Per-sample averages at each horizon over Lebesgue-uniform starting points.
/// Returns `(averages[sample][horizon], trapped)`.
pub fn birkhoff_samples(
    family: &UnimodalFamily,
    t: f64,
    obs: &Observable,
    ns: &[u64],
    samples: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, u64)> {
    family.check_parameter(t)?;
    if ns.contains(&0) {
        return Err(LabError::InvalidArgument("Birkhoff horizons must be >= 1".into()));
    }
    let st = family.stepper(t);
    let dom = family.interval(t);
    let start = |i: u64| dom.lerp(sample_rng(seed, i).random::<f64>());
    let groups = samples / 4;
    let mut runs: Vec<Option<Vec<f64>>> = (0..groups as u64)
        .into_par_iter()
        .flat_map_iter(|g| {
            let x0 = [start(4 * g), start(4 * g + 1), start(4 * g + 2), start(4 * g + 3)];
            orbit_averages_x4(&st, &dom, obs, x0, ns)
        })
        .collect();
    for i in 4 * groups..samples {
        runs.push(orbit_averages(&st, &dom, obs, start(i as u64), ns));
    }
    let trapped = runs.iter().filter(|r| r.is_none()).count() as u64;
    Ok((runs.into_iter().flatten().collect(), trapped))
}

fn constant_estimate(value: f64, samples: usize, seed: u64) -> McEstimate {
    McEstimate {
        mean: value,
        stderr: 0.0,
        samples,
        seed,
        cap_hits: 0,
    }
}

/// `∫ S̄_{t,n} phi dm`.
pub fn mean_birkhoff(
    family: &UnimodalFamily,
    t: f64,
    obs: &Observable,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mean_birkhoff_sweep(family, t, obs, &[n], samples, seed)?.remove(0))
}

pub fn mean_birkhoff_sweep(
    family: &UnimodalFamily,
    t: f64,
    obs: &Observable,
    ns: &[u64],
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if let Some(c) = obs.is_constant() {
        family.check_parameter(t)?;
        return Ok(ns.iter().map(|_| constant_estimate(c, samples, seed)).collect());
    }
    let (runs, trapped) = birkhoff_samples(family, t, obs, ns, samples, seed)?;
    Ok((0..ns.len())
        .map(|k| {
            let v: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            McEstimate::from_values(&v, seed, trapped)
        })
        .collect())
}

/// `∫ |S̄_{t,n} phi - phi_bar| dm`.
pub fn birkhoff_deviation(
    family: &UnimodalFamily,
    t: f64,
    obs: &Observable,
    n: u64,
    reference: &ReferenceMean,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(birkhoff_deviation_sweep(family, t, obs, &[n], reference, samples, seed)?.remove(0))
}

pub fn birkhoff_deviation_sweep(
    family: &UnimodalFamily,
    t: f64,
    obs: &Observable,
    ns: &[u64],
    reference: &ReferenceMean,
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if let Some(c) = obs.is_constant() {
        family.check_parameter(t)?;
        return Ok(ns
            .iter()
            .map(|_| constant_estimate((c - reference.value).abs(), samples, seed))
            .collect());
    }
    let (runs, trapped) = birkhoff_samples(family, t, obs, ns, samples, seed)?;
    Ok((0..ns.len())
        .map(|k| {
            let v: Vec<f64> = runs.iter().map(|r| (r[k] - reference.value).abs()).collect();
            McEstimate::from_values(&v, seed, trapped)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::reference::{reference_mean, ReferenceMethod};

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn constant_observable_is_exact() {
        let f = cheb();
        let obs = Observable::Constant(1.0);
        let m = mean_birkhoff(&f, 1e-4, &obs, 1, 100, 3).unwrap();
        assert_eq!((m.mean, m.stderr), (1.0, 0.0));
        let r = reference_mean(&f, &Observable::Square, ReferenceMethod::AnalyticQuadrature).unwrap();
        let d = birkhoff_deviation(&f, 0.0, &obs, 1, &r, 100, 3).unwrap();
        assert_eq!((d.mean, d.stderr), ((1.0 - r.value).abs(), 0.0));
    }

    #[test]
    fn sweep_matches_single_horizons() {
        let f = cheb();
        let s = mean_birkhoff_sweep(&f, 0.0, &Observable::Square, &[10, 3, 100], 50, 9).unwrap();
        let one = mean_birkhoff(&f, 0.0, &Observable::Square, 3, 50, 9).unwrap();
        assert_eq!(s[1].mean, one.mean);
    }

    #[test]
    fn lockstep_lanes_match_single_orbits() {
        let f = cheb();
        let st = f.stepper(1e-3);
        let dom = f.interval(1e-3);
        let ns = [7, 300];
        let x0 = [0.1, -1.3, 0.77, 1.9];
        let four = orbit_averages_x4(&st, &dom, &Observable::Square, x0, &ns);
        for l in 0..4 {
            assert_eq!(four[l], orbit_averages(&st, &dom, &Observable::Square, x0[l], &ns));
        }
    }

    #[test]
    fn square_averages_to_two() {
        let f = cheb();
        let m = mean_birkhoff(&f, 0.0, &Observable::Square, 20_000, 400, 5).unwrap();
        assert!((m.mean - 2.0).abs() < 3.0 * m.stderr + 1e-3, "{m}");
    }
}
