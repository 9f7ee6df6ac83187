use crate::dynamics::family::UnimodalFamily;
use crate::dynamics::pullback::{pull_back, pull_back_point, sign_of, PullbackMode};
use crate::error::{LabError, Result};
use crate::interval::Interval;
use crate::params::continuation::PreperiodicPoint;

/// Nested symmetric intervals `0 in U_1 ⊂ U_0 ⊂ (-theta, theta)` whose
/// boundary orbits never enter `U_0`, with `|U_1| <= theta * dist(U_1, ∂U_0)`.
#[derive(Clone, Debug)]
pub struct ReturningIntervalPair {
    pub t: f64,
    pub theta: f64,
    pub u0: Interval,
    pub u1: Interval,
    /// Number of forward iterates covered by the avoidance check. The check
    /// is structural (finite pre-orbit plus a cycle), so it holds for every
    /// iterate; the horizon is recorded for reporting.
    pub boundary_orbit_horizon: usize,
    /// Right endpoint of `U_0` at the base parameter: `f(q)` is periodic.
    pub u0_edge: PreperiodicPoint,
    /// Right endpoint of `U_1` at the base parameter: it lands on `±q`
    /// after its first return time to `U_0`.
    pub u1_edge: PreperiodicPoint,
}

impl ReturningIntervalPair {
    /// First return time of `∂U_1` to `∂U_0`.
    pub fn edge_return_time(&self) -> usize {
        self.u1_edge.preperiod() - 1
    }

    /// Follow both boundaries to parameter `t` and re-verify every condition.
    pub fn continue_to(&self, family: &UnimodalFamily, t: f64) -> Result<ReturningIntervalPair> {
        let q = self.u0_edge.continue_to(family, t)?;
        let e = self.u1_edge.continue_to(family, t)?;
        let qt = q.x_t;
        let et = e.x_t;
        let fail = |why: String| Err(LabError::ConstructionFailed(format!("at t = {t}: {why}")));
        if !(0.0 < et && et < qt && qt < self.theta) {
            return fail(format!("nesting lost (e = {et}, q = {qt})"));
        }
        if 2.0 * et > self.theta * (qt - et) {
            return fail("U_1 is too large relative to its distance to the boundary of U_0".into());
        }
        if q.cycle.iter().any(|z| z.abs() < qt * (1.0 - 1e-9)) {
            return fail("the boundary cycle enters U_0".into());
        }
        let r = self.edge_return_time();
        if e.pre_orbit[1..r].iter().any(|y| y.abs() < qt) {
            return fail("the orbit of the U_1 boundary enters U_0 early".into());
        }
        if (e.pre_orbit[r].abs() - qt).abs() > 1e-9 * qt {
            return fail("the U_1 boundary does not land on the U_0 boundary".into());
        }
        Ok(ReturningIntervalPair {
            t,
            theta: self.theta,
            u0: Interval::symmetric(qt),
            u1: Interval::symmetric(et),
            boundary_orbit_horizon: self.boundary_orbit_horizon,
            u0_edge: self.u0_edge.clone(),
            u1_edge: self.u1_edge.clone(),
        })
    }
}

/// Largest period tried for the boundary cycle of `U_0`.
const MAX_PERIOD: usize = 12;
/// Longest first return to `U_0` tried for the boundary of `U_1`.
const MAX_EDGE_RETURN: usize = 64;

/// Build the pair at the base parameter and continue it to `t`.
pub fn build_returning_pair(
    family: &UnimodalFamily,
    t: f64,
    theta: f64,
    horizon: usize,
) -> Result<ReturningIntervalPair> {
    if !family.is_quadratic() {
        return Err(LabError::Unsupported("returning pairs need a quadratic family".into()));
    }
    if !(theta > 0.0 && theta < 0.5 * family.interval(0.0).len()) {
        return Err(LabError::InvalidArgument(format!("theta = {theta} out of range")));
    }
    let u0_edge = find_u0_edge(family, theta)?;
    let q = u0_edge.x;
    let u1_edge = find_u1_edge(family, theta, q, &u0_edge)?;
    let base = ReturningIntervalPair {
        t: 0.0,
        theta,
        u0: Interval::symmetric(q),
        u1: Interval::symmetric(u1_edge.x),
        boundary_orbit_horizon: horizon,
        u0_edge,
        u1_edge,
    };
    let checked = base.continue_to(family, 0.0)?;
    if t == 0.0 {
        Ok(checked)
    } else {
        base.continue_to(family, t)
    }
}

/// Right endpoint `q < theta` of `U_0` with `f_0(q)` periodic and its cycle
/// outside `(-q, q)`; the largest such `q` over periods up to [`MAX_PERIOD`].
fn find_u0_edge(family: &UnimodalFamily, theta: f64) -> Result<PreperiodicPoint> {
    let cv = family.critical_value(0.0);
    let top = family.value(0.0, theta);
    let dom = family.interval(0.0);
    let q_max = theta * (1.0 - 1e-3);
    let q_min = theta / 16.0;
    let mut best: Option<(f64, f64, usize)> = None;
    for s in 1..=MAX_PERIOD {
        let osc = 4f64.powi(s as i32) * (top - cv) / dom.len();
        let m = (64.0 * osc.max(64.0)).min(4e5) as usize;
        let g = |z: f64| {
            let mut y = z;
            for _ in 0..s {
                y = family.value(0.0, y);
            }
            y - z
        };
        let mut z_prev = cv;
        let mut g_prev = g(z_prev);
        for i in 1..=m {
            let z = cv + (top - cv) * i as f64 / m as f64;
            let gz = g(z);
            if g_prev * gz <= 0.0 && g_prev != gz {
                let root = bisect_f64(&g, z_prev, z, g_prev);
                if let Some(q) = family.preimage(0.0, root, 1.0) {
                    if q >= q_min && q <= q_max && best.map_or(true, |b| q > b.0) && cycle_ok(family, root, s, q) {
                        best = Some((q, root, s));
                    }
                }
            }
            z_prev = z;
            g_prev = gz;
        }
    }
    let (q, z, s) = best.ok_or_else(|| {
        LabError::ConstructionFailed(format!("no repelling boundary cycle for U_0 with theta = {theta}"))
    })?;
    Ok(PreperiodicPoint::from_parts(0.0, q, vec![1], s, z))
}

/// The cycle through `z = f(q)` must avoid `(-q, q)`. Its last point may be
/// `-q` itself, the other preimage of `z`, which stays on the boundary under
/// continuation.
fn cycle_ok(family: &UnimodalFamily, z: f64, s: usize, q: f64) -> bool {
    let mut y = z;
    let mut d = 1.0f64;
    for j in 0..s {
        let on_boundary = j == s - 1 && (y.abs() - q).abs() <= 1e-9 * q;
        if y.abs() <= q * (1.0 + 1e-9) && !on_boundary {
            return false;
        }
        d *= family.dx(0.0, y);
        y = family.value(0.0, y);
    }
    (y - z).abs() <= 1e-9 && d.abs() > 1.0
}

fn bisect_f64(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Right endpoint `e` of `U_1`: an endpoint of a first-return branch to `U_0`
/// with `2e <= theta (q - e)`, as large as possible.
fn find_u1_edge(family: &UnimodalFamily, theta: f64, q: f64, u0_edge: &PreperiodicPoint) -> Result<PreperiodicPoint> {
    let e_max = 0.9 * theta * q / (2.0 + theta);
    const GRID: usize = 4096;
    let mut best: Option<(f64, Vec<i8>)> = None;
    for i in 0..GRID {
        let x = e_max * (1.0 / 64.0 + (1.0 - 1.0 / 64.0) * (i as f64 + 0.5) / GRID as f64);
        let mut y = x;
        let mut signs = Vec::new();
        let mut r = 0;
        for j in 1..=MAX_EDGE_RETURN {
            signs.push(sign_of(y));
            y = family.value(0.0, y);
            if y.abs() < q {
                r = j;
                break;
            }
        }
        if r == 0 {
            continue;
        }
        let Some(w) = pull_back(family, 0.0, -q, q, &signs, PullbackMode::Strict) else {
            continue;
        };
        for e in [w.lo, w.hi] {
            if e > 0.0 && e <= e_max && best.as_ref().map_or(true, |b| e > b.0) {
                best = Some((e, signs.clone()));
            }
        }
    }
    let (e, signs) = best.ok_or_else(|| {
        LabError::ConstructionFailed(format!("no first-return branch near 0 fits inside theta = {theta}"))
    })?;
    // which endpoint of U_0 does e land on?
    let land = [-q, q]
        .into_iter()
        .min_by(|a, b| {
            let da = (pull_back_point(family, 0.0, *a, &signs).map_or(f64::INFINITY, |p| p.0) - e).abs();
            let db = (pull_back_point(family, 0.0, *b, &signs).map_or(f64::INFINITY, |p| p.0) - e).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let mut itinerary = signs;
    itinerary.push(sign_of(land));
    Ok(PreperiodicPoint::from_parts(
        0.0,
        e,
        itinerary,
        u0_edge.period,
        u0_edge.cycle_point,
    ))
}
