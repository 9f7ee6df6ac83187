use crate::dd::Dd;
use crate::dynamics::family::UnimodalFamily;
use crate::dynamics::pullback::{pull_back, PullbackMode};
use crate::error::{LabError, Result};
use crate::interval::Interval;
use crate::params::returning::ReturningIntervalPair;

/// Geometry of the central branch of the first return map to `U_1` at a
/// superattracting parameter.
#[derive(Clone, Debug)]
pub struct CentralGeometry {
    pub t: f64,
    pub period: usize,
    /// Central branch `Z` of the return map to `U_1`.
    pub z: Interval,
    /// Immediate basin `V = (-|y|, |y|)` of the superattracting cycle.
    pub v: Interval,
    /// Orientation-preserving repelling fixed point `y` of `phi_1 = f^p` on `∂V`.
    pub repelling_point: f64,
    /// `|D f^p(y)|`.
    pub multiplier: f64,
    pub z_over_sqrt_t: f64,
    pub v_over_t: f64,
    /// `sign f^j(0)` for `j < period`.
    pub itinerary: Vec<i8>,
}

/// `f_t^p(x)` and `|D f_t^p(x)|` in double-double.
pub fn phi_dd(family: &UnimodalFamily, t: f64, p: usize, x: Dd) -> (Dd, f64) {
    let mut y = x;
    let mut d = 1.0f64;
    for _ in 0..p {
        d *= family.dx_s(t, y).to_f64().abs();
        y = family.value_s(t, y);
    }
    (y, d)
}

pub fn central_geometry(
    family: &UnimodalFamily,
    t_n: f64,
    p_n: usize,
    pair: &ReturningIntervalPair,
) -> Result<CentralGeometry> {
    if !family.has_inverse() {
        return Err(LabError::Unsupported("central geometry needs inverse branches".into()));
    }
    let u1 = pair.u1;
    let mut x = Dd::ZERO;
    let mut signs = Vec::with_capacity(p_n);
    for j in 0..p_n {
        signs.push(if x.to_f64() < 0.0 { -1 } else { 1 });
        x = family.value_s(t_n, x);
        if j + 1 < p_n && u1.contains(x.to_f64()) {
            return Err(LabError::NoCentralBranch);
        }
    }
    if !u1.contains(x.to_f64()) {
        return Err(LabError::NoCentralBranch);
    }

    let z = pull_back::<Dd>(family, t_n, Dd::new(u1.lo), Dd::new(u1.hi), &signs, PullbackMode::AllowCentral)
        .filter(|p| p.central)
        .ok_or(LabError::NoCentralBranch)?;
    let w = z.hi;

    // phi is even; find the side on which it increases away from 0
    let phi0 = phi_dd(family, t_n, p_n, Dd::ZERO).0;
    let probe = phi_dd(family, t_n, p_n, w * Dd::new(1e-3)).0;
    let sigma = if probe > phi0 { 1.0 } else { -1.0 };
    let h = |s: Dd| Dd::new(sigma) * phi_dd(family, t_n, p_n, s).0 - s;

    let mut a = Dd::ZERO;
    let mut b = w;
    if !(h(b).to_f64() > 0.0) {
        return Err(LabError::ConstructionFailed(
            "no repelling fixed point on the central branch".into(),
        ));
    }
    // skip past the superattracting fixed point near 0
    let mut lo_probe = w * Dd::new(1e-6);
    while h(lo_probe).to_f64() >= 0.0 && lo_probe < w {
        lo_probe = lo_probe * Dd::new(2.0);
    }
    if lo_probe < w {
        a = lo_probe;
    }
    for _ in 0..200 {
        let m = (a + b) * Dd::new(0.5);
        if !(m > a && m < b) {
            break;
        }
        if h(m).to_f64() > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let y = ((a + b) * Dd::new(0.5)).to_f64();
    let (_, mult) = phi_dd(family, t_n, p_n, Dd::new(y));
    let v = Interval::symmetric(y);
    let zi = Interval::new(z.lo.to_f64(), z.hi.to_f64());
    Ok(CentralGeometry {
        t: t_n,
        period: p_n,
        z: zi,
        v,
        repelling_point: sigma * y,
        multiplier: mult,
        z_over_sqrt_t: zi.len() / t_n.sqrt(),
        v_over_t: v.len() / t_n,
        itinerary: signs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_returning_pair, find_superattracting};

    #[test]
    fn basin_scales_with_t() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let mut ratios = Vec::new();
        for n in [6usize, 8, 10] {
            let s = find_superattracting(&f, n, 3, 0.2, 1e-15).unwrap();
            let pair = build_returning_pair(&f, s.t_n, 0.2, 1000).unwrap();
            let g = central_geometry(&f, s.t_n, s.p_n, &pair).unwrap();
            assert!(g.v.len() < g.z.len());
            assert!((1.5..2.5).contains(&g.multiplier), "multiplier {}", g.multiplier);
            ratios.push(g.v_over_t);
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 1.5, "{ratios:?}");
    }

    #[test]
    fn non_superattracting_parameter_has_no_central_branch() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let s = find_superattracting(&f, 6, 3, 0.2, 1e-15).unwrap();
        let pair = build_returning_pair(&f, 0.0, 0.2, 1000).unwrap();
        assert!(matches!(
            central_geometry(&f, 0.0, s.p_n, &pair),
            Err(LabError::NoCentralBranch)
        ));
    }
}
