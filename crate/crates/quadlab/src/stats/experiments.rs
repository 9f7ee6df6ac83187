use crate::dynamics::family::UnimodalFamily;
use crate::error::{LabError, Result};
use crate::inducing::induced::basin_entry_fraction;
use crate::params::returning::{build_returning_pair, ReturningIntervalPair};
use crate::params::superattracting::{find_superattracting, preimage_horizon, SuperattractingParameter};
use crate::returns::central::{central_geometry, CentralGeometry};
use crate::stats::birkhoff::{birkhoff_deviation, mean_birkhoff};
use crate::stats::estimate::McEstimate;
use crate::stats::observable::Observable;
use crate::stats::reference::{reference_mean, ReferenceMean, ReferenceMethod};
use crate::table::Table;

/// A superattracting parameter with its returning pair and central geometry.
#[derive(Clone, Debug)]
pub struct SuperattractingSetup {
    pub param: SuperattractingParameter,
    pub pair: ReturningIntervalPair,
    pub geometry: CentralGeometry,
}

/// `big_n = None` takes the preimage horizon from the density scan.
pub fn superattracting_setup(
    family: &UnimodalFamily,
    n: usize,
    big_n: Option<usize>,
    theta: f64,
) -> Result<SuperattractingSetup> {
    let big_n = match big_n {
        Some(b) => b,
        None => preimage_horizon(family, n, 1.0, 25)?.big_n,
    };
    let param = find_superattracting(family, n, big_n, theta, 1e-15)?;
    let pair = build_returning_pair(family, param.t_n, theta, 10_000)?;
    let geometry = central_geometry(family, param.t_n, param.p_n, &pair)?;
    Ok(SuperattractingSetup { param, pair, geometry })
}

/// The analytic reference where it exists, a long-run average otherwise.
pub fn default_reference(family: &UnimodalFamily, obs: &Observable, seed: u64) -> Result<ReferenceMean> {
    match reference_mean(family, obs, ReferenceMethod::AnalyticQuadrature) {
        Err(LabError::MethodUnavailable(_)) => reference_mean(family, obs, ReferenceMethod::long_run(seed)),
        r => r,
    }
}

#[derive(Clone, Debug)]
pub struct BreakdownConfig {
    pub a: f64,
    pub ns: Vec<usize>,
    pub theta: f64,
    pub big_n: Option<usize>,
    pub eps_f: f64,
    pub w: f64,
    pub samples: usize,
    pub seed: u64,
    /// Replace the bump by this observable (for controls).
    pub observable: Option<Observable>,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        BreakdownConfig {
            a: 1.0,
            ns: (6..=10).collect(),
            theta: 0.2,
            big_n: None,
            eps_f: 0.01,
            w: 0.01,
            samples: 2000,
            seed: 7,
            observable: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BreakdownRow {
    pub n: usize,
    pub t_n: f64,
    pub p_n: usize,
    /// `floor(a / t_n)`.
    pub horizon: u64,
    pub mean: McEstimate,
    pub phi_bar: ReferenceMean,
    /// Fraction of `I` entering the basin within `floor(1 / t_n)` steps.
    pub basin_entry: McEstimate,
}

impl BreakdownRow {
    pub fn separation(&self) -> f64 {
        self.mean.mean - self.phi_bar.value
    }

    /// Separation in units of the combined standard error.
    pub fn significance(&self) -> f64 {
        let e = (self.mean.stderr.powi(2) + self.phi_bar.error_bar.powi(2)).sqrt();
        self.separation() / e
    }
}

#[derive(Clone, Debug, Default)]
pub struct BreakdownReport {
    pub rows: Vec<BreakdownRow>,
    /// `(n, reason)` for each `n` without a row.
    pub skipped: Vec<(usize, String)>,
}

impl BreakdownReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n",
            "t_n",
            "p_n",
            "horizon",
            "mean",
            "stderr",
            "phi_bar",
            "basin_entry_fraction",
            "basin_entry_stderr",
            "trapped",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n.into(),
                r.t_n.into(),
                r.p_n.into(),
                r.horizon.into(),
                r.mean.mean.into(),
                r.mean.stderr.into(),
                r.phi_bar.value.into(),
                r.basin_entry.mean.into(),
                r.basin_entry.stderr.into(),
                r.mean.cap_hits.into(),
            ]);
        }
        t
    }
}

/// Birkhoff means at the timescale `a / t_n` against the reference mean.
pub fn breakdown_experiment(family: &UnimodalFamily, cfg: &BreakdownConfig) -> Result<BreakdownReport> {
    if !(cfg.a > 0.0) {
        return Err(LabError::InvalidArgument(format!("a must be positive, got {}", cfg.a)));
    }
    let mut report = BreakdownReport::default();
    for &n in &cfg.ns {
        let setup = match superattracting_setup(family, n, cfg.big_n, cfg.theta) {
            Ok(s) => s,
            Err(e) => {
                report.skipped.push((n, e.to_string()));
                continue;
            }
        };
        let p = &setup.param;
        let obs = match &cfg.observable {
            Some(o) => o.clone(),
            None => Observable::postcritical_bump(family, cfg.eps_f, cfg.w, p.p_n.max(64))?,
        };
        let phi_bar = default_reference(family, &obs, cfg.seed)?;
        let horizon = ((cfg.a / p.t_n).floor() as u64).max(1);
        let seed = cfg.seed.wrapping_add(n as u64);
        let mean = mean_birkhoff(family, p.t_n, &obs, horizon, cfg.samples, seed)?;
        let basin_entry = basin_entry_fraction(
            family,
            p.t_n,
            &setup.geometry.v,
            &family.interval(p.t_n),
            (1.0 / p.t_n).floor() as u64,
            cfg.samples,
            seed,
        )?;
        report.rows.push(BreakdownRow {
            n,
            t_n: p.t_n,
            p_n: p.p_n,
            horizon,
            mean,
            phi_bar,
            basin_entry,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct PersistenceConfig {
    pub betas: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub observables: Vec<Observable>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PersistenceRow {
    pub observable: String,
    pub beta: f64,
    pub t: f64,
    /// `floor(t^{-beta})`.
    pub n_t: u64,
    pub deviation: McEstimate,
}

#[derive(Clone, Debug, Default)]
pub struct PersistenceReport {
    pub rows: Vec<PersistenceRow>,
}

impl PersistenceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["observable", "beta", "t", "n_t", "deviation", "stderr"]);
        for r in &self.rows {
            t.push(vec![
                r.observable.clone().into(),
                r.beta.into(),
                r.t.into(),
                r.n_t.into(),
                r.deviation.mean.into(),
                r.deviation.stderr.into(),
            ]);
        }
        t
    }

    /// Rows for one observable and exponent, in the order of the t grid.
    pub fn series(&self, observable: &str, beta: f64) -> Vec<&PersistenceRow> {
        self.rows
            .iter()
            .filter(|r| r.observable == observable && r.beta == beta)
            .collect()
    }
}

/// Deviations `∫ |S̄_{t, n(t)} phi - phi_bar| dm` with `n(t) = floor(t^{-beta})`.
pub fn persistence_experiment(family: &UnimodalFamily, cfg: &PersistenceConfig) -> Result<PersistenceReport> {
    let mut report = PersistenceReport::default();
    for obs in &cfg.observables {
        let reference = default_reference(family, obs, cfg.seed)?;
        for &beta in &cfg.betas {
            if !(0.0 < beta && beta < 1.0) {
                return Err(LabError::InvalidArgument(format!("beta must lie in (0, 1), got {beta}")));
            }
            for (i, &t) in cfg.t_grid.iter().enumerate() {
                if !(t > 0.0) {
                    return Err(LabError::Parameter { t });
                }
                let n_t = (t.powf(-beta).floor() as u64).max(1);
                let seed = cfg.seed.wrapping_add(i as u64);
                let deviation = birkhoff_deviation(family, t, obs, n_t, &reference, cfg.samples, seed)?;
                report.rows.push(PersistenceRow {
                    observable: obs.name(),
                    beta,
                    t,
                    n_t,
                    deviation,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cheb() -> UnimodalFamily {
        UnimodalFamily::quadratic(-2.0).unwrap()
    }

    #[test]
    fn constant_observable_shows_no_breakdown() {
        let cfg = BreakdownConfig {
            ns: vec![6],
            samples: 50,
            observable: Some(Observable::Constant(1.0)),
            ..BreakdownConfig::default()
        };
        let r = breakdown_experiment(&cheb(), &cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].separation(), 0.0);
    }

    #[test]
    fn horizon_scales_with_a() {
        let f = cheb();
        let mk = |a| BreakdownConfig {
            a,
            ns: vec![5],
            samples: 20,
            ..BreakdownConfig::default()
        };
        let r1 = breakdown_experiment(&f, &mk(1.0)).unwrap();
        let r2 = breakdown_experiment(&f, &mk(2.0)).unwrap();
        let (h1, h2) = (r1.rows[0].horizon as f64, r2.rows[0].horizon as f64);
        assert!((h2 / h1 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn persistence_rows_follow_the_rule() {
        let cfg = PersistenceConfig {
            betas: vec![0.5],
            t_grid: vec![1e-4, 1e-6],
            observables: vec![Observable::Square],
            samples: 40,
            seed: 1,
        };
        let r = persistence_experiment(&cheb(), &cfg).unwrap();
        let ns: Vec<u64> = r.rows.iter().map(|r| r.n_t).collect();
        assert_eq!(ns, vec![100, 1000]);
        assert_eq!(r.series("x^2", 0.5).len(), 2);
    }
}
