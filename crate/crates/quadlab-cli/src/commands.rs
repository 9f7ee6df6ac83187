//! One function per subcommand. Each returns its result tables and summary
//! lines; nothing here touches the file system.

use anyhow::Result;
use quadlab::inducing::{scheme_report, superattracting_induced_tail, ClassifyCaps};
use quadlab::params::{
    build_returning_pair, certify_misiurewicz, find_superattracting_with, preimage_horizon,
    SearchConfig,
};
use quadlab::returns::{discover_branches_with, escape_curve, escape_table, BranchSearch};
use quadlab::stats::experiments::superattracting_setup;
use quadlab::stats::{
    breakdown_experiment, linear_fit, persistence_experiment, BreakdownConfig, Observable,
    PersistenceConfig,
};
use quadlab::table::Table;
use quadlab::tower::{
    contract_report, dyadic_grid, maximal_moment_sweep, tau_concentration_sweep, FullMap,
    InducedMapSpec, MomentReport, MuYSampling,
};
use quadlab::{LabError, McEstimate, UnimodalFamily};

use crate::params::Params;

/// Result of one experiment.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// `(file name, table)` in output order.
    pub tables: Vec<(String, Table)>,
    pub summary: Vec<String>,
    /// `(what, count)` for every cap or horizon hit.
    pub cap_hits: Vec<(String, u64)>,
    /// Set when the experiment ran but did not produce its result.
    pub failure: Option<String>,
}

impl Outcome {
    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    fn caps(&mut self, what: impl Into<String>, n: u64) {
        self.cap_hits.push((what.into(), n));
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn ns(p: &Params) -> Vec<usize> {
    let (a, b) = p.range("n_range");
    (a as usize..=b as usize).collect()
}

fn ratio_spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    hi / lo
}

/// `t_n` for `n > 0`, `0` for `n = 0`.
fn parameter_of(family: &UnimodalFamily, n: usize, theta: f64) -> Result<f64> {
    Ok(if n == 0 {
        0.0
    } else {
        superattracting_setup(family, n, None, theta)?.param.t_n
    })
}

pub fn run(p: &Params) -> Result<Outcome> {
    let family = UnimodalFamily::quadratic(p.f64("c0"))?;
    match p.subcommand.as_str() {
        "certify" => certify(&family, p),
        "transversality" => transversality(&family, p),
        "superattracting" => superattracting(&family, p),
        "branches" => branches(&family, p),
        "scheme" => scheme(&family, p),
        "escape" => escape(&family, p),
        "breakdown" => breakdown(&family, p),
        "persistence" => persistence(&family, p),
        "tower-check" => tower_check(&family, p),
        "basin" => basin(&family, p),
        other => anyhow::bail!("unknown subcommand {other}"),
    }
}

fn certify(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(&[
        "preperiod",
        "period",
        "cycle_point",
        "cycle_multiplier",
        "growth_rate",
        "postcritical_gap",
        "passed",
        "reason",
    ]);
    match certify_misiurewicz(
        family,
        p.usize("horizon"),
        p.f64("match_tol"),
        p.f64("lambda_min"),
    ) {
        Ok(c) => {
            t.push(vec![
                c.preperiod.into(),
                c.period.into(),
                c.cycle_point.into(),
                c.cycle_multiplier.into(),
                c.growth_rate.into(),
                c.postcritical_gap.into(),
                c.passed.into(),
                "".into(),
            ]);
            out.line(format!(
                "(k, q) = ({}, {}), multiplier {:.10}, postcritical gap {:.6}, passed = {}",
                c.preperiod, c.period, c.cycle_multiplier, c.postcritical_gap, c.passed
            ));
            if !c.passed {
                out.failure = Some("certificate did not pass".into());
            }
        }
        Err(e @ LabError::NotPreperiodic(_)) => {
            let nan = f64::NAN;
            t.push(vec![
                (-1i64).into(),
                (-1i64).into(),
                nan.into(),
                nan.into(),
                nan.into(),
                nan.into(),
                false.into(),
                e.to_string().into(),
            ]);
            out.line(format!("rejected: {e}"));
            out.failure = Some(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    out.table("certificate.csv", t);
    Ok(out)
}

fn transversality(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let r = quadlab::dynamics::transversality_sum(family, p.usize("terms"), p.f64("tol"))?;
    let mut t = Table::new(&["j", "term", "partial_sum"]);
    for (j, (a, s)) in r.terms.iter().zip(&r.partial_sums).enumerate() {
        t.push(vec![j.into(), (*a).into(), (*s).into()]);
    }
    out.table("transversality.csv", t);
    out.line(format!(
        "limit {:.15}, tail bound {:.3e}, converged = {}",
        r.limit_estimate, r.tail_bound, r.converged
    ));
    if !r.converged {
        out.failure = Some("series did not converge within the requested terms".into());
    }
    Ok(out)
}

fn superattracting(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let cfg = SearchConfig {
        kappa: p.f64("kappa"),
        grid: p.usize("grid"),
    };
    let mut t = Table::new(&[
        "n",
        "t_n",
        "p_n",
        "gamma_n",
        "t_over_gamma",
        "residual",
        "theta_clearance",
        "preimage_horizon",
    ]);
    let mut pts = Vec::new();
    for n in ns(p) {
        let found = (|| {
            let big_n = match p.optional("big_n") {
                Some(b) => b,
                None => preimage_horizon(family, n, cfg.kappa, 25)?.big_n,
            };
            find_superattracting_with(family, n, big_n, theta, 1e-15, &cfg)
        })();
        match found {
            Ok(s) => {
                pts.push((n as f64, s.t_n.ln()));
                t.push(vec![
                    n.into(),
                    s.t_n.into(),
                    s.p_n.into(),
                    s.gamma_n.into(),
                    (s.t_n / s.gamma_n).into(),
                    s.residual.into(),
                    s.theta_clearance.into(),
                    s.preimage_horizon.into(),
                ]);
            }
            Err(e) => out.line(format!("n = {n}: {e}")),
        }
    }
    if t.is_empty() {
        out.failure = Some("no superattracting parameter found for any n".into());
    }
    if let Some(f) = linear_fit(&pts) {
        out.line(format!(
            "slope of log t_n against n: {:.6} (-log 4 = {:.6}), R^2 = {:.6}",
            f.slope,
            -(4f64.ln()),
            f.r_squared
        ));
    }
    out.table("superattracting.csv", t);
    Ok(out)
}

fn branches(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let t = parameter_of(family, p.usize("n"), theta)?;
    let pair = build_returning_pair(family, t, theta, 10_000)?;
    let cfg = BranchSearch {
        cap: p.u64("cap"),
        min_width: p.f64("min_width"),
        max_probes: p.usize("max_probes"),
        ..BranchSearch::default()
    };
    let tab = discover_branches_with(family, t, &pair, &cfg)?;
    let least = tab
        .branches
        .iter()
        .filter(|b| !b.central && b.full)
        .map(|b| b.min_abs_derivative)
        .fold(f64::INFINITY, f64::min);
    out.line(format!(
        "t = {t:e}, U_1 = {}, {} branches from {} probes, coverage {:.6}",
        pair.u1,
        tab.branches.len(),
        tab.probes,
        tab.coverage()
    ));
    out.line(format!(
        "least |D phi_1| on non-central full branches: {least:.6}"
    ));
    out.caps("branch probes without a return", tab.cap_hits);
    out.table("branches.csv", tab.table());
    Ok(out)
}

fn scheme(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let caps = ClassifyCaps {
        max_height: p.u64("max_height"),
        return_cap: p.u64("cap"),
        ..ClassifyCaps::default()
    };
    let samples = p.usize("samples");
    let seed = p.u64("seed");
    let mut main = Table::new(&[
        "n",
        "t_n",
        "red_measure",
        "red_stderr",
        "red_over_t",
        "rho_m1",
        "rho_m2",
        "rho_m2_stderr",
        "blue_fraction",
        "unresolved_fraction",
    ]);
    let mut tails = Table::new(&["n", "j", "mass"]);
    let mut fits = Table::new(&["n", "alpha", "r_squared", "points", "mean_tau", "cap_hits"]);
    let (mut reds, mut m2s) = (Vec::new(), Vec::new());
    for n in ns(p) {
        let su = match superattracting_setup(family, n, None, theta) {
            Ok(s) => s,
            Err(e) => {
                out.line(format!("n = {n}: {e}"));
                continue;
            }
        };
        let t_n = su.param.t_n;
        let s = seed.wrapping_add(n as u64);
        let r = scheme_report(
            family,
            t_n,
            &su.pair,
            Some(su.geometry.v),
            caps.clone(),
            samples,
            s,
        )?;
        reds.push(r.red_measure.mean / t_n);
        m2s.push(r.rho_second_moment.mean);
        main.push(vec![
            n.into(),
            t_n.into(),
            r.red_measure.mean.into(),
            r.red_measure.stderr.into(),
            (r.red_measure.mean / t_n).into(),
            r.rho_first_moment.mean.into(),
            r.rho_second_moment.mean.into(),
            r.rho_second_moment.stderr.into(),
            r.blue_fraction.into(),
            r.unresolved_fraction.into(),
        ]);
        out.caps(
            format!("n = {n}: unclassified points"),
            (r.unresolved_fraction * samples as f64).round() as u64,
        );
        let tail = superattracting_induced_tail(
            family,
            t_n,
            &su.pair,
            &su.geometry,
            samples,
            p.u64("cap"),
            s,
            p.usize("min_count"),
        )?;
        for &(j, m) in &tail.tail {
            tails.push(vec![n.into(), j.into(), m.into()]);
        }
        let (alpha, r2, pts) = tail.fit.map_or((f64::NAN, f64::NAN, 0), |f| {
            (-f.slope, f.r_squared, f.points)
        });
        fits.push(vec![
            n.into(),
            alpha.into(),
            r2.into(),
            pts.into(),
            tail.mean_tau.mean.into(),
            tail.cap_hits.into(),
        ]);
        out.caps(
            format!("n = {n}: inducing times past the cap"),
            tail.cap_hits,
        );
        out.line(format!(
            "n = {n}: red/t = {:.4}, int rho^2 = {:.3}, tail alpha = {alpha:.4} (R^2 = {r2:.4})",
            r.red_measure.mean / t_n,
            r.rho_second_moment.mean
        ));
    }
    if main.is_empty() {
        out.failure = Some("no superattracting parameter found for any n".into());
    } else {
        out.line(format!(
            "max/min of red/t: {:.4}; of int rho^2: {:.4}",
            ratio_spread(&reds),
            ratio_spread(&m2s)
        ));
    }
    out.table("scheme.csv", main);
    out.table("induced_tail.csv", tails);
    out.table("induced_tail_fit.csv", fits);
    Ok(out)
}

fn escape(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let t = parameter_of(family, p.usize("n"), theta)?;
    let pair = build_returning_pair(family, t, theta, 10_000)?;
    let (a, b) = p.range("times");
    let times: Vec<u64> = (a..=b).step_by(p.usize("step")).collect();
    let rows = escape_curve(
        family,
        t,
        &pair.u1,
        &times,
        p.usize("samples"),
        p.u64("seed"),
    )?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.entry.mean > 0.0)
        .map(|r| (r.n as f64, r.entry.mean.ln()))
        .collect();
    if let Some(f) = linear_fit(&pts) {
        out.line(format!(
            "slope of log m(E_n) against n: {:.6}, R^2 = {:.6}, {} points",
            f.slope, f.r_squared, f.points
        ));
    }
    let ordered = rows.iter().all(|r| r.returning.mean >= r.entry.mean);
    out.line(format!("m(R_n) >= m(E_n) at every n: {ordered}"));
    if let Some(r) = rows.first() {
        out.caps(
            "orbits trapped on a floating-point fixed point",
            r.entry.cap_hits,
        );
    }
    out.table("escape.csv", escape_table(&rows));
    Ok(out)
}

fn breakdown(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cfg = BreakdownConfig {
        a: p.f64("a"),
        ns: ns(p),
        theta: p.f64("theta"),
        big_n: p.optional("big_n"),
        eps_f: p.f64("eps_f"),
        w: p.f64("w"),
        samples: p.usize("samples"),
        seed: p.u64("seed"),
        observable: None,
    };
    let r = breakdown_experiment(family, &cfg)?;
    for row in &r.rows {
        out.line(format!(
            "n = {}: mean {:.5} vs phi_bar {:.5}, separation {:.5} ({:.1} sigma), basin entry {:.4}",
            row.n,
            row.mean.mean,
            row.phi_bar.value,
            row.separation(),
            row.significance(),
            row.basin_entry.mean
        ));
        out.caps(format!("n = {}: trapped orbits", row.n), row.mean.cap_hits);
    }
    for (n, why) in &r.skipped {
        out.line(format!("n = {n} skipped: {why}"));
    }
    if r.rows.is_empty() {
        out.failure = Some("no superattracting parameter found for any n".into());
    }
    out.table("breakdown.csv", r.table());
    Ok(out)
}

fn persistence(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let mut t_grid = Vec::new();
    for n in ns(p) {
        match superattracting_setup(family, n, p.optional("big_n"), theta) {
            Ok(s) => t_grid.push(s.param.t_n),
            Err(e) => out.line(format!("n = {n} skipped: {e}")),
        }
    }
    if t_grid.is_empty() {
        out.failure = Some("no superattracting parameter found for any n".into());
        out.table(
            "persistence.csv",
            Table::new(&["observable", "beta", "t", "n_t", "deviation", "stderr"]),
        );
        return Ok(out);
    }
    let bump = Observable::postcritical_bump(family, p.f64("eps_f"), p.f64("w"), 64)?;
    let observables = vec![Observable::Square, bump];
    let cfg = PersistenceConfig {
        betas: p.list("beta"),
        t_grid,
        observables: observables.clone(),
        samples: p.usize("samples"),
        seed: p.u64("seed"),
    };
    let r = persistence_experiment(family, &cfg)?;
    for obs in &observables {
        for &beta in &cfg.betas {
            let s = r.series(&obs.name(), beta);
            let (Some(big), Some(small)) = (
                s.iter().max_by(|a, b| a.t.total_cmp(&b.t)),
                s.iter().min_by(|a, b| a.t.total_cmp(&b.t)),
            ) else {
                continue;
            };
            let drop = big.deviation.mean - small.deviation.mean;
            let e = big.deviation.stderr.hypot(small.deviation.stderr);
            out.line(format!(
                "{} beta = {beta}: deviation {:.5} at t = {:.3e}, {:.5} at t = {:.3e}, drop {:.1} stderr",
                obs.name(),
                big.deviation.mean,
                big.t,
                small.deviation.mean,
                small.t,
                drop / e
            ));
        }
    }
    let trapped: u64 = r.rows.iter().map(|r| r.deviation.cap_hits).sum();
    out.caps("trapped orbits", trapped);
    out.table("persistence.csv", r.table());
    Ok(out)
}

fn moment_rows(t: &mut Table, system: &str, r: &MomentReport) {
    for (k, e) in &r.rows {
        t.push(vec![
            system.into(),
            (*k).into(),
            e.mean.into(),
            e.stderr.into(),
        ]);
    }
}

fn tower_check(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let seed = p.u64("seed");
    let (a, b) = p.range("k_exponents");
    let ks = dyadic_grid(a as u32, b as u32);
    let mu = MuYSampling {
        replicas: p.usize("replicas"),
        burn_in: p.u64("burn_in"),
    };
    let blocks = p.usize("blocks");
    let moment_samples = p.usize("moment_samples");

    let doubling = InducedMapSpec::doubling_first_return(50)?;
    let pair = build_returning_pair(family, 0.0, p.f64("theta"), 10_000)?;
    let base = InducedMapSpec::from_scheme(
        family,
        0.0,
        &pair,
        None,
        ClassifyCaps::default(),
        p.usize("cells"),
        seed,
        (2.0, 1.0, 1.0),
    )?;
    let square_mean = quadlab::stats::default_reference(family, &Observable::Square, seed)?.value;
    let systems: [(&str, &InducedMapSpec, FullMap, Observable, f64); 2] = [
        (
            "doubling",
            &doubling,
            FullMap::Doubling,
            Observable::Coordinate,
            0.5,
        ),
        (
            "base_map",
            &base,
            FullMap::Family {
                family: family.clone(),
                t: 0.0,
                burn_in: p.u64("burn_in"),
            },
            Observable::Square,
            square_mean,
        ),
    ];

    let mut contract = Table::new(&["system", "condition", "passed", "worst", "cell", "detail"]);
    let mut conc = Table::new(&["system", "k", "norm", "stderr"]);
    let mut maxm = Table::new(&["system", "n", "norm", "stderr"]);
    let mut fits = Table::new(&[
        "system",
        "check",
        "exponent",
        "r_squared",
        "centre",
        "cap_hits",
    ]);
    for (name, spec, full, obs, mean) in &systems {
        let c = contract_report(spec, 5)?;
        for ch in &c.checks {
            contract.push(vec![
                (*name).into(),
                ch.condition.into(),
                ch.passed.into(),
                ch.worst.into(),
                ch.cell.map_or(-1, |i| i as i64).into(),
                ch.detail.clone().into(),
            ]);
        }
        out.line(format!(
            "{name}: contract {} on {} cells (unresolved mass {:.3e})",
            if c.passed() { "holds" } else { "violated" },
            c.cells,
            spec.unresolved_mass
        ));
        if !c.passed() {
            out.failure = Some(format!("{name}: induced-map contract violated"));
        }
        let tau = tau_concentration_sweep(spec, &ks, blocks, mu, seed)?;
        let mm = maximal_moment_sweep(full, obs, *mean, &ks, moment_samples, seed)?;
        moment_rows(&mut conc, name, &tau);
        moment_rows(&mut maxm, name, &mm);
        for (check, r) in [("tau_concentration", &tau), ("maximal_moment", &mm)] {
            let (e, r2) = r
                .fit
                .map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
            fits.push(vec![
                (*name).into(),
                check.into(),
                e.into(),
                r2.into(),
                r.centre.into(),
                r.cap_hits.into(),
            ]);
            out.line(format!("{name}: {check} exponent {e:.4} (R^2 = {r2:.4})"));
        }
        out.caps(format!("{name}: induced-orbit restarts"), tau.cap_hits);
        out.caps(
            format!("{name}: maximal-moment orbits dropped"),
            mm.cap_hits,
        );
    }
    out.table("tower_contract.csv", contract);
    out.table("tau_concentration.csv", conc);
    out.table("maximal_moment.csv", maxm);
    out.table("tower_exponents.csv", fits);
    Ok(out)
}

fn basin(family: &UnimodalFamily, p: &Params) -> Result<Outcome> {
    let mut out = Outcome::default();
    let theta = p.f64("theta");
    let mut t = Table::new(&[
        "n",
        "t_n",
        "p_n",
        "z_lo",
        "z_hi",
        "v_lo",
        "v_hi",
        "z_over_sqrt_t",
        "v_over_t",
        "repelling_point",
        "multiplier",
        "basin_entry_fraction",
        "basin_entry_stderr",
    ]);
    let (mut zs, mut vs) = (Vec::new(), Vec::new());
    for n in ns(p) {
        let su = match superattracting_setup(family, n, p.optional("big_n"), theta) {
            Ok(s) => s,
            Err(e) => {
                out.line(format!("n = {n} skipped: {e}"));
                continue;
            }
        };
        let g = &su.geometry;
        let t_n = su.param.t_n;
        let horizon = (1.0 / t_n).floor() as u64;
        let entry = if horizon > p.u64("max_horizon") {
            out.caps(
                format!("n = {n}: basin entry skipped, 1/t_n = {horizon} above max_horizon"),
                1,
            );
            McEstimate::from_values(&[], 0, 1)
        } else {
            quadlab::inducing::basin_entry_fraction(
                family,
                t_n,
                &g.v,
                &family.interval(t_n),
                horizon,
                p.usize("samples"),
                p.u64("seed").wrapping_add(n as u64),
            )?
        };
        zs.push(g.z_over_sqrt_t);
        vs.push(g.v_over_t);
        t.push(vec![
            n.into(),
            t_n.into(),
            su.param.p_n.into(),
            g.z.lo.into(),
            g.z.hi.into(),
            g.v.lo.into(),
            g.v.hi.into(),
            g.z_over_sqrt_t.into(),
            g.v_over_t.into(),
            g.repelling_point.into(),
            g.multiplier.into(),
            entry.mean.into(),
            entry.stderr.into(),
        ]);
        out.line(format!(
            "n = {n}: |Z|/sqrt(t) = {:.4}, |V|/t = {:.4}, basin entry {:.4}",
            g.z_over_sqrt_t, g.v_over_t, entry.mean
        ));
    }
    if t.is_empty() {
        out.failure = Some("no superattracting parameter found for any n".into());
    } else {
        out.line(format!(
            "max/min of |Z|/sqrt(t): {:.4}; of |V|/t: {:.4}",
            ratio_spread(&zs),
            ratio_spread(&vs)
        ));
    }
    out.table("basin.csv", t);
    Ok(out)
}
