use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};

/// Partial sums of `sum_j dt f_0(f_0^j(0)) / D f_0^j(f_0(0))`.
#[derive(Clone, Debug)]
pub struct TransversalityReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Geometric estimate of the remainder after the last term.
    pub tail_bound: f64,
    pub limit_estimate: f64,
    pub converged: bool,
}

/// Terms needed before a failure to grow is reported as divergence.
const MIN_TERMS_FOR_VERDICT: usize = 10;

pub fn transversality_sum(family: &UnimodalFamily, n_max: usize, tol: f64) -> Result<TransversalityReport> {
    family.check_parameter(0.0)?;
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut sums = Vec::with_capacity(n_max + 1);
    // x = f_0^j(0) and d = D f_0^j(f_0(0)) = prod_{i=1..j} f_0'(f_0^i(0))
    let mut x = 0.0f64;
    let mut d = 1.0f64;
    let mut s = 0.0;
    for j in 0..=n_max {
        if j > 0 {
            x = family.value(0.0, x);
            d *= family.dx(0.0, x);
        }
        let term = family.dt(0.0, x) / d;
        if !term.is_finite() {
            return Err(LabError::NoConvergence(format!(
                "derivative along the critical orbit vanished at j = {j}"
            )));
        }
        s += term;
        terms.push(term);
        sums.push(s);
    }

    let (tail_bound, ratio) = geometric_tail(&terms);
    if n_max >= MIN_TERMS_FOR_VERDICT && ratio >= 1.0 {
        return Err(LabError::NoConvergence(format!(
            "terms do not decay (ratio {ratio:.3})"
        )));
    }
    Ok(TransversalityReport {
        limit_estimate: s,
        converged: tail_bound < tol,
        tail_bound,
        terms,
        partial_sums: sums,
    })
}

/// Tail estimate from the average decay ratio over the last terms.
fn geometric_tail(terms: &[f64]) -> (f64, f64) {
    let n = terms.len();
    if n < 3 {
        return (f64::INFINITY, f64::NAN);
    }
    let k = (n - 1).min(8);
    let a = terms[n - 1 - k].abs();
    let b = terms[n - 1].abs();
    if b == 0.0 {
        return (0.0, 0.0);
    }
    let ratio = (b / a).powf(1.0 / k as f64);
    if ratio >= 1.0 {
        (f64::INFINITY, ratio)
    } else {
        (b * ratio / (1.0 - ratio), ratio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chebyshev_sum_is_two_thirds() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let r = transversality_sum(&f, 60, 1e-12).unwrap();
        assert!(r.converged);
        assert!((r.limit_estimate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.terms[..4], [1.0, -0.25, -0.0625, -0.015625]);
    }

    #[test]
    fn zero_terms() {
        let f = UnimodalFamily::quadratic(-2.0).unwrap();
        let r = transversality_sum(&f, 0, 1e-12).unwrap();
        assert_eq!(r.partial_sums, vec![1.0]);
        assert!(!r.converged);
    }

    #[test]
    fn superattracting_base_diverges() {
        // c = -1 has the critical orbit 0 -> -1 -> 0
        let f = UnimodalFamily::quadratic(-1.0).unwrap();
        assert!(matches!(
            transversality_sum(&f, 20, 1e-12),
            Err(LabError::NoConvergence(_))
        ));
    }

    #[test]
    fn misiurewicz_base_is_nonzero() {
        let f = UnimodalFamily::quadratic(-1.543_689_012_692_076).unwrap();
        let r = transversality_sum(&f, 40, 1e-6).unwrap();
        assert!(r.limit_estimate.abs() > 0.1);
    }

    proptest! {
        #[test]
        fn partial_sums_accumulate_terms(n in 0usize..50) {
            let f = UnimodalFamily::quadratic(-2.0).unwrap();
            let r = transversality_sum(&f, n, 1e-12).unwrap();
            let mut s = 0.0;
            for (t, p) in r.terms.iter().zip(&r.partial_sums) {
                s += t;
                prop_assert_eq!(s, *p);
            }
        }
    }
}
