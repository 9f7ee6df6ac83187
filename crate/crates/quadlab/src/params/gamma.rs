use crate::dd::Dd;
use crate::dynamics::family::UnimodalFamily;
use crate::dynamics::orbit::critical_value_derivatives;
use crate::error::{LabError, Result};

/// `gamma_m = kappa / |D xi_m(0)|` for `m = 0..=n`, made non-increasing by a
/// running minimum.
pub fn gamma_sequence(family: &UnimodalFamily, n: usize, kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0) {
        return Err(LabError::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let d = critical_value_derivatives(family, 0.0, n)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut running = f64::INFINITY;
    for (m, dm) in d.iter().enumerate() {
        if !dm.is_finite() {
            return Err(LabError::Overflow { n: m });
        }
        running = running.min(kappa / dm.abs());
        out.push(running);
    }
    Ok(out)
}

/// The parameter scale `gamma_n` below which the critical value map
/// `xi_n` has bounded distortion.
pub fn gamma_scale(family: &UnimodalFamily, n: usize, kappa: f64) -> Result<f64> {
    Ok(*gamma_sequence(family, n, kappa)?.last().unwrap())
}

/// `xi_k(t) = f_t^{k+1}(0)` for `k = 0..=n`, evaluated in double-double.
pub fn critical_values_dd(family: &UnimodalFamily, t: f64, n: usize) -> Vec<Dd> {
    let mut x = Dd::ZERO;
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        x = family.value_s(t, x);
        out.push(x);
    }
    out
}

/// `max_k log( max |D xi_k| / min |D xi_k| )` over `m0 <= k <= n` on a grid of
/// `[0, gamma]`.
pub fn critical_value_distortion(
    family: &UnimodalFamily,
    n: usize,
    m0: usize,
    gamma: f64,
    grid: usize,
) -> Result<f64> {
    let mut lo = vec![f64::INFINITY; n + 1];
    let mut hi = vec![0.0f64; n + 1];
    for i in 0..=grid {
        let t = gamma * i as f64 / grid as f64;
        let d = critical_value_derivatives(family, t, n)?;
        for k in m0..=n {
            lo[k] = lo[k].min(d[k].abs());
            hi[k] = hi[k].max(d[k].abs());
        }
    }
    Ok((m0..=n).map(|k| (hi[k] / lo[k]).ln()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn small_indices() {
        assert_eq!(gamma_scale(&cheb(), 0, 1.0).unwrap(), 1.0);
        // |D xi_5(0)| = 683
        assert_eq!(gamma_scale(&cheb(), 5, 1.0).unwrap(), 1.0 / 683.0);
    }

    #[test]
    fn derivative_grows_like_two_thirds_four_to_the_n() {
        let g = gamma_scale(&cheb(), 10, 1.0).unwrap();
        let r = 1.0 / (g * 4f64.powi(10));
        assert!((0.5..=1.5).contains(&r), "ratio {r}");
    }

    #[test]
    fn overflow_is_flagged() {
        assert!(matches!(
            gamma_scale(&cheb(), 600, 1.0),
            Err(LabError::Overflow { .. })
        ));
    }

    #[test]
    fn bounded_distortion_on_the_window() {
        let f = cheb();
        for n in [4usize, 8, 12] {
            let g = gamma_scale(&f, n, 1.0).unwrap();
            let d = critical_value_distortion(&f, n, 1, g, 64).unwrap();
            assert!(d <= 1.0, "n = {n}: log distortion {d}");
        }
    }

    proptest! {
        #[test]
        fn consecutive_ratio_is_bounded(n in 1usize..40) {
            let s = gamma_sequence(&cheb(), n + 1, 1.0).unwrap();
            let r = s[n] / s[n + 1];
            prop_assert!((1.0..=30.0).contains(&r));
        }

        #[test]
        fn kappa_scales_linearly(n in 0usize..30, kappa in 0.01f64..10.0) {
            let a = gamma_scale(&cheb(), n, 1.0).unwrap();
            let b = gamma_scale(&cheb(), n, kappa).unwrap();
            prop_assert!((b - kappa * a).abs() <= 1e-14 * b);
        }
    }
}
