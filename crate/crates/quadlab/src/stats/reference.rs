use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::dynamics::family::{FamilyKind, UnimodalFamily};
use crate::error::{LabError, Result};
use crate::rng::par_samples;
use crate::stats::estimate::McEstimate;
use crate::stats::observable::Observable;
use crate::stats::quadrature::integrate;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceMethod {
    /// Integral against the arcsine density; Chebyshev base only.
    AnalyticQuadrature,
    /// Batch means over independent long orbits of `f_0`.
    LongRunBirkhoff { orbits: usize, length: u64, seed: u64 },
}

impl ReferenceMethod {
    pub fn long_run(seed: u64) -> ReferenceMethod {
        ReferenceMethod::LongRunBirkhoff {
            orbits: 64,
            length: 1_000_000,
            seed,
        }
    }
}

/// `phi_bar = ∫ phi dmu_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceMean {
    pub value: f64,
    pub method: ReferenceMethod,
    pub error_bar: f64,
}

const BURN_IN: u64 = 1000;

pub fn reference_mean(family: &UnimodalFamily, obs: &Observable, method: ReferenceMethod) -> Result<ReferenceMean> {
    if let Some(c) = obs.is_constant() {
        return Ok(ReferenceMean {
            value: c,
            method,
            error_bar: 0.0,
        });
    }
    match method {
        ReferenceMethod::AnalyticQuadrature => {
            // x = r sin(theta) turns the arcsine density into dtheta / pi
            let r = match family.kind() {
                FamilyKind::Quadratic { c0 } if *c0 == -2.0 => 2.0,
                FamilyKind::Normalized { c0 } if *c0 == -2.0 => 1.0,
                _ => {
                    return Err(LabError::MethodUnavailable(
                        "the invariant density is known in closed form only for c0 = -2".into(),
                    ))
                }
            };
            let q = integrate(|th: f64| obs.eval(r * th.sin()) / PI, -FRAC_PI_2, FRAC_PI_2, 1e-12, 100_000)?;
            Ok(ReferenceMean {
                value: q.value,
                method,
                error_bar: q.error,
            })
        }
        ReferenceMethod::LongRunBirkhoff { orbits, length, seed } => {
            if orbits < 2 || length == 0 {
                return Err(LabError::InvalidArgument("long-run reference needs >= 2 orbits of positive length".into()));
            }
            let st = family.stepper(0.0);
            let dom = family.interval(0.0);
            let batches = par_samples(orbits, seed, |_, rng| {
                let mut restarts = 0u64;
                let mut x = dom.lerp(rng.random::<f64>());
                let mut sum = 0.0;
                for j in 0..BURN_IN + length {
                    if j >= BURN_IN {
                        sum += obs.eval(x);
                    }
                    let y = st.step(x).clamp(dom.lo, dom.hi);
                    if y == x && st.deriv(x).abs() > 1.0 {
                        // the float orbit stuck to a repelling fixed point
                        restarts += 1;
                        x = dom.lerp(rng.random::<f64>());
                    } else {
                        x = y;
                    }
                }
                (sum / length as f64, restarts)
            });
            let means: Vec<f64> = batches.iter().map(|b| b.0).collect();
            let restarts = batches.iter().map(|b| b.1).sum();
            let e = McEstimate::from_values(&means, seed, restarts);
            Ok(ReferenceMean {
                value: e.mean,
                method,
                error_bar: e.stderr,
            })
        }
    }
}
