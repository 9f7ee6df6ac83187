use rand::Rng;

use crate::dynamics::family::UnimodalFamily;
use crate::error::Result;
use crate::interval::Interval;
use crate::rng::par_samples;
use crate::stats::estimate::McEstimate;
use crate::table::Table;

/// Normalised Lebesgue measures of the escape sets at one time `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRow {
    pub n: u64,
    /// `E_n = { x : f^k(x) ∉ U_1 for 0 <= k <= n }`.
    pub entry: McEstimate,
    /// `R_n = { x : f^k(x) ∉ U_1 for 1 <= k <= n }`.
    pub returning: McEstimate,
}

/// `(m(E_n), m(R_n))` as fractions of the invariant interval.
pub fn escape_set_measure(
    family: &UnimodalFamily,
    t: f64,
    u1: &Interval,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    let row = escape_curve(family, t, u1, &[n], samples, seed)?.remove(0);
    Ok((row.entry, row.returning))
}

/// Escape measures for several times from one set of orbits.
pub fn escape_curve(
    family: &UnimodalFamily,
    t: f64,
    u1: &Interval,
    ns: &[u64],
    samples: usize,
    seed: u64,
) -> Result<Vec<EscapeRow>> {
    family.check_parameter(t)?;
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let st = family.stepper(t);
    let dom = family.interval(t);
    // (first entry k >= 0, first hit k >= 1), None when trapped
    let hits: Vec<Option<(u64, u64)>> = par_samples(samples, seed, |_, rng| {
        let mut x = dom.lerp(rng.random::<f64>());
        let mut entry = if u1.contains(x) { Some(0) } else { None };
        let mut hit = None;
        for k in 1..=n_max {
            let y = st.step(x).min(dom.hi);
            if y == x && st.deriv(x).abs() > 1.0 {
                return None;
            }
            x = y;
            if u1.contains(x) {
                entry.get_or_insert(k);
                hit = Some(k);
                break;
            }
        }
        Some((entry.unwrap_or(u64::MAX), hit.unwrap_or(u64::MAX)))
    });
    let trapped = hits.iter().filter(|h| h.is_none()).count() as u64;
    let valid: Vec<(u64, u64)> = hits.into_iter().flatten().collect();
    let m = valid.len();
    Ok(ns
        .iter()
        .map(|&n| {
            let e = valid.iter().filter(|h| h.0 > n).count();
            let r = valid.iter().filter(|h| h.1 > n).count();
            EscapeRow {
                n,
                entry: McEstimate::from_count(e, m, seed, trapped),
                returning: McEstimate::from_count(r, m, seed, trapped),
            }
        })
        .collect())
}

pub fn escape_table(rows: &[EscapeRow]) -> Table {
    let mut t = Table::new(&["n", "m_entry", "stderr_entry", "m_return", "stderr_return"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.entry.mean.into(),
            r.entry.stderr.into(),
            r.returning.mean.into(),
            r.returning.stderr.into(),
        ]);
    }
    t
}
