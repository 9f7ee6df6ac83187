use crate::dd::Dd;
use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};
use crate::params::certify::certify_misiurewicz;
use crate::params::gamma::{critical_values_dd, gamma_scale};

/// A parameter `t_n` in `(0, gamma_n]` at which the critical point is periodic.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperattractingParameter {
    pub n: usize,
    pub t_n: f64,
    /// Period of the critical point at `t_n`.
    pub p_n: usize,
    pub gamma_n: f64,
    /// `|f_{t_n}^{p_n}(0)|` evaluated in double-double.
    pub residual: f64,
    /// `min_{0 < k < p_n} |f_{t_n}^k(0)|`.
    pub theta_clearance: f64,
    /// The preimage depth `N` used for the search window `p in [n+1, n+N]`.
    pub preimage_horizon: usize,
}

/// Tuning of the root search.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub kappa: f64,
    /// Grid points on `(0, gamma_n]` scanned for sign changes.
    pub grid: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            kappa: 1.0,
            grid: 4096,
        }
    }
}

/// `f_t^p(0)` in double-double.
pub fn critical_iterate_dd(family: &UnimodalFamily, t: f64, p: usize) -> Dd {
    let mut x = Dd::ZERO;
    for _ in 0..p {
        x = family.value_s(t, x);
    }
    x
}

fn clearance(family: &UnimodalFamily, t: f64, p: usize) -> f64 {
    let mut x = Dd::ZERO;
    let mut m = f64::INFINITY;
    for _ in 1..p {
        x = family.value_s(t, x);
        m = m.min(x.to_f64().abs());
    }
    m
}

/// Locate `t_n`: the smallest root in `(0, gamma_n]` of `f_t^p(0) = 0` over
/// `p in [n+1, n+big_n]` whose orbit keeps out of `(-theta, theta)` before
/// returning. Ties in `t` go to the smaller `p`. The bisection stops once
/// the bracket is below `t_tol * gamma_n`.
pub fn find_superattracting(
    family: &UnimodalFamily,
    n: usize,
    big_n: usize,
    theta: f64,
    t_tol: f64,
) -> Result<SuperattractingParameter> {
    find_superattracting_with(family, n, big_n, theta, t_tol, &SearchConfig::default())
}

pub fn find_superattracting_with(
    family: &UnimodalFamily,
    n: usize,
    big_n: usize,
    theta: f64,
    t_tol: f64,
    cfg: &SearchConfig,
) -> Result<SuperattractingParameter> {
    if big_n == 0 {
        return Err(LabError::InvalidArgument("preimage horizon must be at least 1".into()));
    }
    if !(t_tol > 0.0) {
        return Err(LabError::InvalidArgument("t_tol must be positive".into()));
    }
    let gamma = gamma_scale(family, n, cfg.kappa)?;
    let g = cfg.grid.max(16);
    let ts: Vec<f64> = (0..=g).map(|i| gamma * i as f64 / g as f64).collect();

    let mut best: Option<(f64, usize, f64, f64)> = None;
    let mut any_sign_change = false;
    for p in n + 1..=n + big_n {
        let limit = best.map_or(gamma, |b| b.0);
        let mut prev = critical_iterate_dd(family, ts[0], p);
        for i in 1..=g {
            if ts[i - 1] >= limit {
                break;
            }
            let cur = critical_iterate_dd(family, ts[i], p);
            if prev.signum() * cur.signum() > 0.0 {
                prev = cur;
                continue;
            }
            any_sign_change = true;
            let root = bisect(family, p, ts[i - 1], ts[i], prev.signum(), t_tol * gamma);
            prev = cur;
            let clear = clearance(family, root, p);
            if clear <= theta {
                continue;
            }
            if best.map_or(true, |b| root < b.0) {
                let res = critical_iterate_dd(family, root, p).to_f64().abs();
                best = Some((root, p, res, clear));
            }
            break;
        }
    }
    match best {
        Some((t_n, p_n, residual, theta_clearance)) => Ok(SuperattractingParameter {
            n,
            t_n,
            p_n,
            gamma_n: gamma,
            residual,
            theta_clearance,
            preimage_horizon: big_n,
        }),
        None if any_sign_change => Err(LabError::ClearanceFailed { n, theta }),
        None => Err(LabError::NoRootFound { n, grid: g }),
    }
}

fn bisect(family: &UnimodalFamily, p: usize, mut a: f64, mut b: f64, sign_a: f64, width: f64) -> f64 {
    while b - a > width {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = critical_iterate_dd(family, m, p);
        if v.signum() == 0.0 {
            return m;
        }
        if v.signum() == sign_a {
            a = m;
        } else {
            b = m;
        }
    }
    let va = critical_iterate_dd(family, a, p).abs();
    let vb = critical_iterate_dd(family, b, p).abs();
    if va <= vb {
        a
    } else {
        b
    }
}

/// Data-driven preimage depth `N` together with the scales it was derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimageHorizon {
    pub big_n: usize,
    /// Largest dyadic fraction of `gamma_n` on which the critical values
    /// `xi_k`, `k <= n`, stay at distance `> gap/2` from the critical point.
    pub eps0: f64,
    /// Range swept by `xi_n` on `[0, eps0 * gamma_n]`.
    pub eps1: f64,
}

/// Smallest `N <= cap` such that the preimages `U_{k<N} f_0^{-k}(0)` are
/// `eps1/2`-dense in the invariant interval.
pub fn preimage_horizon(family: &UnimodalFamily, n: usize, kappa: f64, cap: usize) -> Result<PreimageHorizon> {
    let cert = certify_misiurewicz(family, 64, 1e-6, 1.0)?;
    let gamma = gamma_scale(family, n, kappa)?;
    let half_gap = 0.5 * cert.postcritical_gap;
    const GRID: usize = 256;

    let mut eps0 = 0.0;
    let mut eps1 = 0.0;
    for j in 0..40 {
        let eps = 0.5f64.powi(j);
        let mut ok = true;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=GRID {
            let t = eps * gamma * i as f64 / GRID as f64;
            let xi = critical_values_dd(family, t, n);
            if xi.iter().any(|v| v.to_f64().abs() <= half_gap) {
                ok = false;
                break;
            }
            let v = xi[n].to_f64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if ok {
            eps0 = eps;
            eps1 = hi - lo;
            break;
        }
    }
    if eps0 == 0.0 {
        return Err(LabError::ConstructionFailed(format!(
            "critical values approach the critical point on every window for n = {n}"
        )));
    }

    let dom = family.interval(0.0);
    let mut level = vec![0.0f64];
    let mut all = vec![0.0f64];
    for big_n in 1..=cap {
        if max_gap(&all, dom.lo, dom.hi) <= 0.5 * eps1 {
            return Ok(PreimageHorizon { big_n, eps0, eps1 });
        }
        let mut next = Vec::with_capacity(2 * level.len());
        for &y in &level {
            for side in [-1.0, 1.0] {
                if let Some(x) = family.preimage(0.0, y, side) {
                    next.push(x);
                }
            }
        }
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        next.dedup();
        all.extend_from_slice(&next);
        level = next;
    }
    Ok(PreimageHorizon {
        big_n: cap,
        eps0,
        eps1,
    })
}

/// Largest distance from a point of `[lo, hi]` to the finite set `pts`.
fn max_gap(pts: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v: Vec<f64> = pts.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut m = (v[0] - lo).max(hi - v[v.len() - 1]);
    for w in v.windows(2) {
        m = m.max(0.5 * (w[1] - w[0]));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn chebyshev_horizon_is_three() {
        let h = preimage_horizon(&cheb(), 8, 1.0, 25).unwrap();
        assert_eq!(h.big_n, 3);
        assert_eq!(h.eps0, 1.0);
        // xi_n sweeps from 2 down to about 2 cos(1)
        assert!((h.eps1 - (2.0 - 2.0 * 1f64.cos())).abs() < 0.05, "{}", h.eps1);
    }

    #[test]
    fn root_is_superattracting_and_inside_window() {
        let s = find_superattracting(&cheb(), 6, 3, 0.025, 1e-15).unwrap();
        assert!(s.t_n > 0.0 && s.t_n <= s.gamma_n);
        assert!(s.residual < 1e-12);
        assert!(s.theta_clearance > 0.025);
        assert!((7..=9).contains(&s.p_n));
    }

    #[test]
    fn deepest_preimage_of_two_gives_the_smallest_root() {
        // The smallest root sends xi_n to 2 cos(pi / 2^N), the preimage of 0
        // of depth N - 1 closest to the fixed point 2.
        for n in [6usize, 8, 10] {
            let s = find_superattracting(&cheb(), n, 3, 0.025, 1e-15).unwrap();
            assert_eq!(s.p_n, n + 3);
            let xi = critical_values_dd(&cheb(), s.t_n, n)[n].to_f64();
            assert!((xi - 2.0 * (std::f64::consts::PI / 8.0).cos()).abs() < 10.0 * s.t_n);
        }
    }

    #[test]
    fn residual_stays_small_at_depth() {
        let s = find_superattracting(&cheb(), 14, 3, 0.025, 1e-15).unwrap();
        assert!(s.residual < 1e-12, "residual {}", s.residual);
    }

    #[test]
    fn larger_horizon_never_increases_the_root() {
        let a = find_superattracting(&cheb(), 7, 2, 0.025, 1e-15).unwrap();
        let b = find_superattracting(&cheb(), 7, 4, 0.025, 1e-15).unwrap();
        assert!(b.t_n <= a.t_n);
    }

    #[test]
    fn looser_tolerance_keeps_the_same_root() {
        let a = find_superattracting(&cheb(), 8, 3, 0.025, 1e-15).unwrap();
        let b = find_superattracting(&cheb(), 8, 3, 0.025, 1e-14).unwrap();
        assert_eq!(a.p_n, b.p_n);
        assert!((a.t_n - b.t_n).abs() <= 2e-14 * a.gamma_n);
    }

    #[test]
    fn huge_clearance_fails() {
        assert!(matches!(
            find_superattracting(&cheb(), 6, 3, 1.9, 1e-15),
            Err(LabError::ClearanceFailed { .. })
        ));
    }
}
