use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};

/// Evidence that `f_0` has a strictly preperiodic critical orbit landing on a
/// repelling cycle.
#[derive(Clone, Debug)]
pub struct MisiurewiczCertificate {
    /// Index `k` of the first periodic point among `xi_j = f_0^{j+1}(0)`.
    pub preperiod: usize,
    pub period: usize,
    /// The refined landing cycle, starting at `xi_k`.
    pub cycle: Vec<f64>,
    pub cycle_point: f64,
    pub cycle_multiplier: f64,
    /// `multiplier^(1/period)`, the exponential growth rate along the cycle.
    pub growth_rate: f64,
    /// `min_j |xi_j|` over the whole forward orbit, read off the symbolic
    /// description (preperiodic part plus cycle).
    pub postcritical_gap: f64,
    /// Sorted post-critical set `{xi_0, ..., xi_{k-1}} U cycle`.
    pub postcritical_set: Vec<f64>,
    pub horizon: usize,
    pub passed: bool,
}

pub fn certify_misiurewicz(
    family: &UnimodalFamily,
    horizon: usize,
    match_tol: f64,
    lambda_min: f64,
) -> Result<MisiurewiczCertificate> {
    family.check_parameter(0.0)?;
    let mut xi = Vec::with_capacity(horizon + 2);
    let mut x = family.critical_value(0.0);
    for _ in 0..=horizon {
        xi.push(x);
        x = family.value(0.0, x);
    }

    let (k, q) = find_coincidence(&xi, match_tol).ok_or_else(|| {
        LabError::NotPreperiodic(format!("no coincidence within {horizon} iterates"))
    })?;

    let z = refine_cycle_point(family, xi[k], q)?;
    let mut cycle = Vec::with_capacity(q);
    let mut y = z;
    let mut mult = 1.0f64;
    for _ in 0..q {
        cycle.push(y);
        mult *= family.dx(0.0, y);
        y = family.value(0.0, y);
    }
    let mult = mult.abs();
    if cycle.iter().any(|c| c.abs() < match_tol) || mult < match_tol {
        return Err(LabError::NotPreperiodic(
            "the critical point lies on the detected cycle".into(),
        ));
    }

    let pre = &xi[..k];
    let gap = pre
        .iter()
        .chain(cycle.iter())
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let mut set: Vec<f64> = pre.iter().chain(cycle.iter()).copied().collect();
    set.sort_by(|a, b| a.partial_cmp(b).unwrap());
    set.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    Ok(MisiurewiczCertificate {
        preperiod: k,
        period: q,
        cycle_point: z,
        growth_rate: mult.powf(1.0 / q as f64),
        passed: mult >= lambda_min && gap > 0.0,
        cycle_multiplier: mult,
        postcritical_gap: gap,
        postcritical_set: set,
        cycle,
        horizon,
    })
}

/// Smallest `k + q`, then smallest `q`, with `|xi_{k+q} - xi_k| < tol`,
/// confirmed one period later when the orbit is long enough.
fn find_coincidence(xi: &[f64], tol: f64) -> Option<(usize, usize)> {
    let n = xi.len();
    for m in 1..n {
        for q in 1..=m {
            let k = m - q;
            if (xi[k + q] - xi[k]).abs() >= tol {
                continue;
            }
            if k + 2 * q < n && (xi[k + 2 * q] - xi[k + q]).abs() >= 10.0 * tol {
                continue;
            }
            return Some((k, q));
        }
    }
    None
}

/// Newton refinement of a periodic point of period `q` near `z0`.
pub(crate) fn refine_cycle_point(family: &UnimodalFamily, z0: f64, q: usize) -> Result<f64> {
    periodic_newton(family, 0.0, z0, q)
}

pub(crate) fn periodic_newton(family: &UnimodalFamily, t: f64, z0: f64, q: usize) -> Result<f64> {
    let dom = family.interval(t);
    let mut z = z0;
    for _ in 0..80 {
        let mut y = z;
        let mut d = 1.0;
        for _ in 0..q {
            d *= family.dx(t, y);
            y = family.value(t, y);
        }
        let g = y - z;
        let dg = d - 1.0;
        if dg == 0.0 || !dg.is_finite() {
            return Err(LabError::NewtonDiverged(format!(
                "degenerate derivative at z = {z}"
            )));
        }
        let step = g / dg;
        let next = z - step;
        if !next.is_finite() {
            return Err(LabError::NewtonDiverged(format!("non-finite iterate from z0 = {z0}")));
        }
        let next = next.clamp(dom.lo, dom.hi);
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1e-300) || g == 0.0 {
            return Ok(next);
        }
        z = next;
    }
    // accept a point whose residual is at rounding level
    let mut y = z;
    for _ in 0..q {
        y = family.value(t, y);
    }
    if (y - z).abs() <= 1e-12 * dom.len() {
        Ok(z)
    } else {
        Err(LabError::NewtonDiverged(format!(
            "no convergence from z0 = {z0} (residual {:e})",
            y - z
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Real root of `c^3 + 2c^2 + 2c + 2 = 0`: `f^3(0)` is the negative fixed point.
    const MIS: f64 = -1.543_689_012_692_076_4;

    #[test]
    fn chebyshev() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let c = certify_misiurewicz(&f, 64, 1e-9, 1.0).unwrap();
        assert_eq!((c.preperiod, c.period), (1, 1));
        assert_eq!(c.cycle_point, 2.0);
        assert_eq!(c.cycle_multiplier, 4.0);
        assert_eq!(c.postcritical_set, vec![-2.0, 2.0]);
        assert_eq!(c.postcritical_gap, 2.0);
        assert!(c.passed);
    }

    #[test]
    fn lands_on_fixed_point_after_three_steps() {
        let f = UnimodalFamily::quadratic(MIS).unwrap();
        let c = certify_misiurewicz(&f, 64, 1e-6, 1.0).unwrap();
        assert_eq!((c.preperiod, c.period), (2, 1));
        // fixed point of x^2 + c on the negative side
        let z = 0.5 * (1.0 - (1.0 - 4.0 * MIS).sqrt());
        assert!((c.cycle_point - z).abs() < 1e-12);
        assert!((c.cycle_multiplier - 2.0 * z.abs()).abs() < 1e-12);
        assert!(c.passed);
    }

    #[test]
    fn ten_digit_parameter_also_certifies() {
        let f = UnimodalFamily::quadratic(-1.543_689_012_7).unwrap();
        let c = certify_misiurewicz(&f, 64, 1e-6, 1.0).unwrap();
        assert_eq!((c.preperiod, c.period), (2, 1));
        assert!((c.cycle_point + 0.839_286_755).abs() < 1e-8);
        assert!((c.cycle_multiplier - 1.678_573_51).abs() < 1e-7);
        assert!(c.passed);
    }

    #[test]
    fn superattracting_is_rejected() {
        let f = UnimodalFamily::quadratic(-1.754_877_666_246_693).unwrap();
        assert!(matches!(
            certify_misiurewicz(&f, 64, 1e-6, 1.0),
            Err(LabError::NotPreperiodic(_))
        ));
    }
}
