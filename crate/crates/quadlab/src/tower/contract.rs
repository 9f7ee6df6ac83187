use crate::error::{LabError, Result};
use crate::table::Table;
use crate::tower::spec::InducedMapSpec;

/// One condition of the contract with its worst sampled value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub condition: &'static str,
    pub passed: bool,
    /// Worst sampled constant: coverage ratio, least expansion, largest
    /// endpoint mismatch in units of its rounding allowance, or largest
    /// Hölder quotient.
    pub worst: f64,
    /// Cell at which `worst` occurs.
    pub cell: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractReport {
    pub checks: Vec<ConditionCheck>,
    pub cells: usize,
    pub grid: usize,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, condition: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["condition", "passed", "worst", "cell", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.condition.into(),
                c.passed.into(),
                c.worst.into(),
                c.cell.map(|i| i as i64).unwrap_or(-1).into(),
                c.detail.clone().into(),
            ]);
        }
        t
    }
}

fn grid_points(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    (0..g).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / g as f64).collect()
}

/// Sample every condition on a grid of `grid` points per cell. Never fails on
/// a violated condition; see [`verify_induced_contract`].
pub fn contract_report(spec: &InducedMapSpec, grid: usize) -> Result<ContractReport> {
    if grid < 2 {
        return Err(LabError::InvalidArgument("the contract grid needs at least 2 points per cell".into()));
    }
    let y = spec.y;
    let tol = 1e-9 * y.len();
    let mut checks = Vec::new();

    // cover
    let mut cover = ConditionCheck {
        condition: "cover",
        passed: true,
        worst: 0.0,
        cell: None,
        detail: String::new(),
    };
    let mut covered = 0.0;
    for (i, c) in spec.cells.iter().enumerate() {
        covered += c.domain.len();
        if c.domain.lo < y.lo - tol || c.domain.hi > y.hi + tol {
            cover.passed = false;
            cover.cell.get_or_insert(i);
            cover.detail = format!("cell {} leaves Y = {y}", c.domain);
        }
        if i > 0 && c.domain.lo < spec.cells[i - 1].domain.hi - tol {
            cover.passed = false;
            cover.cell.get_or_insert(i);
            cover.detail = format!("cell {} overlaps its left neighbour", c.domain);
        }
    }
    cover.worst = covered / y.len();
    if cover.passed && cover.worst < 1.0 - spec.unresolved_mass - 1e-9 {
        cover.passed = false;
        cover.detail = format!(
            "cells cover {:.6} of Y, declared unresolved mass {:.3e}",
            cover.worst, spec.unresolved_mass
        );
    }
    checks.push(cover);

    let mut expansion = ConditionCheck {
        condition: "expansion",
        passed: true,
        worst: f64::INFINITY,
        cell: None,
        detail: String::new(),
    };
    let mut bijection = ConditionCheck {
        condition: "bijection",
        passed: true,
        worst: 0.0,
        cell: None,
        detail: String::new(),
    };
    let mut distortion = ConditionCheck {
        condition: "distortion",
        passed: true,
        worst: 0.0,
        cell: None,
        detail: String::new(),
    };
    for (i, c) in spec.cells.iter().enumerate() {
        let xs = grid_points(c.domain.lo, c.domain.hi, grid);
        let fx: Vec<f64> = xs.iter().map(|&x| spec.apply_precise(i, x)).collect::<Result<_>>()?;
        let lj: Vec<f64> = xs
            .iter()
            .map(|&x| spec.derivative(i, x).map(|d| d.abs().ln()))
            .collect::<Result<_>>()?;

        // expansion from the derivative on the grid; difference quotients
        // only where the grid is resolved in floating point
        for &x in &xs {
            let d = spec.derivative(i, x)?.abs();
            if d < expansion.worst {
                expansion.worst = d;
                expansion.cell = Some(i);
            }
        }
        let resolved = c.domain.len() > 1e6 * f64::EPSILON * c.domain.lo.abs().max(c.domain.hi.abs());
        let mut increasing = None;
        for a in 0..grid {
            for b in a + 1..grid {
                if !resolved {
                    continue;
                }
                let q = (fx[b] - fx[a]).abs() / (xs[b] - xs[a]);
                if q < expansion.worst {
                    expansion.worst = q;
                    expansion.cell = Some(i);
                }
                let up = fx[b] > fx[a];
                if *increasing.get_or_insert(up) != up && bijection.passed {
                    bijection.passed = false;
                    bijection.cell = Some(i);
                    bijection.detail = format!("cell {i} is not monotone");
                }
                let gap = (fx[b] - fx[a]).abs();
                if gap > 0.0 {
                    let h = (lj[b] - lj[a]).abs() / gap.powf(spec.eta);
                    if h > distortion.worst {
                        distortion.worst = h;
                        distortion.cell = Some(i);
                    }
                }
            }
        }

        // endpoints onto the endpoints of Y, allowing for the rounding of
        // the domain endpoints to f64 before a steep branch
        let (a, b) = (spec.apply_precise(i, c.domain.lo)?, spec.apply_precise(i, c.domain.hi)?);
        let (lo, hi) = (a.min(b), a.max(b));
        let slope = spec.derivative(i, c.domain.lo)?.abs().max(spec.derivative(i, c.domain.hi)?.abs());
        let scale = c.domain.lo.abs().max(c.domain.hi.abs()).max(f64::MIN_POSITIVE);
        let allowed = tol + 4.0 * f64::EPSILON * slope * scale;
        let miss = (lo - y.lo).abs().max((hi - y.hi).abs());
        if miss / allowed > bijection.worst {
            bijection.worst = miss / allowed;
            if bijection.passed {
                bijection.cell = Some(i);
            }
        }
        if miss > allowed && bijection.passed {
            bijection.passed = false;
            bijection.cell = Some(i);
            bijection.detail = format!("cell {i} maps onto [{lo:e}, {hi:e}], not onto Y = {y}");
        }
    }
    if expansion.worst < spec.lambda * (1.0 - 1e-9) {
        expansion.passed = false;
        expansion.detail = format!("least sampled expansion {:.6e} below lambda = {}", expansion.worst, spec.lambda);
    }
    if distortion.worst > spec.k * (1.0 + 1e-9) + 1e-12 {
        distortion.passed = false;
        distortion.detail = format!(
            "log-Jacobian Hölder quotient {:.6e} above K = {} (eta = {})",
            distortion.worst, spec.k, spec.eta
        );
    }
    checks.push(expansion);
    checks.push(bijection);
    checks.push(distortion);
    Ok(ContractReport {
        checks,
        cells: spec.cells.len(),
        grid,
    })
}

/// The report if every condition holds, otherwise the first violation in
/// the order cover, expansion, bijection, distortion.
pub fn verify_induced_contract(spec: &InducedMapSpec, grid: usize) -> Result<ContractReport> {
    let r = contract_report(spec, grid)?;
    if let Some(c) = r.checks.iter().find(|c| !c.passed) {
        return Err(LabError::ContractViolation {
            cell: c.cell.unwrap_or(0),
            condition: c.condition.to_string(),
            detail: c.detail.clone(),
        });
    }
    Ok(r)
}
