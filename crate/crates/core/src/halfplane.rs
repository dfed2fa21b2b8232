//! Backward integration of the half-plane problem `R' = Phi_e(u, R; sigma)`, `R(1) = 0`.
//!
//! `R = V^2` where `V(u)` is the flow carried by a travelling profile at level `u`.
//! Integration runs from `u = 1` down to `u = 0` (extended mode) or until `V` first
//! meets the saturation curve `a_+` (classic mode).

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{fmt_e12, write_csv};
use crate::model::{FluxModel, ReactionModel};
use crate::ode::{dopri_step, step_factor};
use crate::tolerances::{ATOL, EVENT_TOL, RTOL, SERIES_DELTA0, STEP_FLOOR, U_MIN};

/// Longest exact step across a saturated stretch; bounds how thin a dip below `a_+` can go unseen.
const SAT_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalfplaneError {
    #[error("step size fell below the floor at u = {u} (h = {h:e})")]
    StepFailure { u: f64, h: f64 },
    #[error("non-finite value encountered at u = {u}")]
    NonFinite { u: f64 },
    #[error("only {samples} samples below u = 1e-3; at least 8 are needed")]
    InsufficientResolution { samples: usize },
    #[error("invalid speed {0}")]
    InvalidSpeed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Stops where `V` first meets `a_+`.
    Classic,
    /// Continues through saturated levels with `V' = sigma`.
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StartRule {
    /// Linearised start `V ~ m_+ (1 - u)` at `u = 1 - delta0`.
    Series { delta0: f64 },
    /// Arbitrary start `R(1 - delta) = rho^2`.
    Offset { delta: f64, rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    pub step_floor: f64,
    pub start: StartRule,
    /// Uniformly spaced levels `k / n` the integrator must land on.
    pub uniform_points: usize,
    /// Log-spaced levels per decade near both ends.
    pub per_decade: usize,
    /// Smallest forced level near `u = 0`.
    pub u_floor: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: RTOL,
            atol: ATOL,
            step_floor: STEP_FLOOR,
            start: StartRule::Series { delta0: SERIES_DELTA0 },
            uniform_points: 1000,
            per_decade: 10,
            u_floor: 1e-8,
            max_steps: 5_000_000,
        }
    }
}

impl IntegrationOptions {
    /// Lighter output grid for bisection probes.
    pub fn probe() -> Self {
        Self { uniform_points: 100, ..Self::default() }
    }
}

/// Node flag: `V >= a_+` at this level.
pub const FLAG_SATURATED: u8 = 1;
/// Node flag: level lies in `L_td`.
pub const FLAG_DEGENERATE: u8 = 2;
/// Node flag: event location (saturation crossing, pin point).
pub const FLAG_EVENT: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub w: f64,
    pub err: f64,
}

/// Backward half-plane solution on a decreasing level grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpeedSolution {
    pub sigma: f64,
    pub mode: Mode,
    pub u_grid: Vec<f64>,
    pub r_values: Vec<f64>,
    pub v_values: Vec<f64>,
    /// `dR/du` at each node, used for cubic Hermite interpolation.
    pub dr_values: Vec<f64>,
    pub flags: Vec<u8>,
    /// Stall level in classic mode (`Some(0.0)` when `u = 0` is reached).
    pub alpha: Option<f64>,
    /// `V(0)` when the grid reaches `u = 0`.
    pub v0: Option<f64>,
    pub slope0: Option<SlopeEstimate>,
    /// Level intervals `[lo, hi]` on which `V >= a_+`.
    pub saturated_spans: Vec<[f64; 2]>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

/// Right-hand side of the extended problem.
pub fn phi_extended(m: &FluxModel, r: &ReactionModel, u: f64, big_r: f64, sigma: f64) -> f64 {
    if big_r <= 0.0 {
        if m.is_td(u) {
            return 0.0;
        }
        return -2.0 * r.f(u) * m.da_ds(u, 0.0);
    }
    let v = big_r.sqrt();
    if m.is_td(u) {
        return 2.0 * sigma * v;
    }
    let ap = m.a_plus(u);
    if v >= ap {
        return 2.0 * sigma * v;
    }
    2.0 * sigma * v - 2.0 * r.f(u) * m.v_over_g(u, v)
}

/// Slope `m_+` of `V ~ m_+ (1 - u)` at `u = 1`.
pub fn series_slope(m: &FluxModel, r: &ReactionModel, sigma: f64) -> f64 {
    let c = -r.df1 * m.da_ds(1.0, 0.0);
    0.5 * (-sigma + (sigma * sigma + 4.0 * c).max(0.0).sqrt())
}

fn forced_levels(m: &FluxModel, opts: &IntegrationOptions, u_start: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::new();
    let n = opts.uniform_points.max(1);
    pts.extend((1..n).map(|k| k as f64 / n as f64));
    let pd = opts.per_decade.max(1) as f64;
    let mut j = 2.0 * pd;
    loop {
        let x = 10f64.powf(-j / pd);
        if x < opts.u_floor * (1.0 - 1e-9) {
            break;
        }
        pts.push(x);
        if 1.0 - x < u_start {
            pts.push(1.0 - x);
        }
        j += 1.0;
    }
    pts.extend(m.breakpoints());
    pts.push(0.0);
    pts.retain(|&x| x < u_start && x >= 0.0);
    pts.sort_by(|a, b| b.total_cmp(a));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    pts
}

struct Recorder {
    u: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
    flags: Vec<u8>,
}

impl Recorder {
    fn push(&mut self, u: f64, r: f64, dr: f64, flags: u8) {
        if let Some(&last) = self.u.last() {
            if (last - u).abs() <= 1e-15 {
                let k = self.u.len() - 1;
                self.r[k] = r;
                self.dr[k] = dr;
                self.flags[k] |= flags;
                return;
            }
        }
        self.u.push(u);
        self.r.push(r);
        self.dr.push(dr);
        self.flags.push(flags);
    }
}

fn sat_gap(m: &FluxModel, u: f64, big_r: f64) -> f64 {
    if m.is_td(u) {
        return big_r.max(0.0);
    }
    let ap = m.a_plus(u);
    if ap.is_infinite() {
        return f64::NEG_INFINITY;
    }
    big_r - ap * ap
}

/// A flow entering saturation (moving toward `u = 0`) can stay above `a_+` only where
/// `a_+' >= sigma`; elsewhere `V - a_+` shrinks at once.
fn enters_transversally(m: &FluxModel, u: f64, sigma: f64) -> bool {
    let eta = 1e-7;
    let (lo, hi) = ((u - eta).max(0.0), (u + eta).min(1.0));
    let slope = (m.a_plus(hi) - m.a_plus(lo)) / (hi - lo);
    !slope.is_finite() || slope >= sigma
}

/// Interval `[lo, hi]` of `L_td` containing `u` with `u > lo`.
fn td_interval_above(m: &FluxModel, u: f64) -> Option<[f64; 2]> {
    m.td_intervals().iter().copied().find(|iv| u > iv[0] && u <= iv[1])
}

/// Integrates the half-plane problem at speed `sigma`.
pub fn integrate_halfplane(
    m: &FluxModel,
    r: &ReactionModel,
    sigma: f64,
    mode: Mode,
    opts: &IntegrationOptions,
) -> Result<SpeedSolution, HalfplaneError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(HalfplaneError::InvalidSpeed(sigma));
    }
    let rhs = |u: f64, y: f64| phi_extended(m, r, u, y, sigma);
    let mut rec = Recorder { u: Vec::new(), r: Vec::new(), dr: Vec::new(), flags: Vec::new() };
    let flag_of = |u: f64, big_r: f64| -> u8 {
        let mut f = 0;
        if m.is_td(u) {
            f |= FLAG_DEGENERATE;
        }
        if sat_gap(m, u, big_r) >= 0.0 {
            f |= FLAG_SATURATED;
        }
        f
    };

    let (mut u, mut y) = match opts.start {
        StartRule::Series { delta0 } => {
            rec.push(1.0, 0.0, 0.0, flag_of(1.0, 0.0));
            let mp = series_slope(m, r, sigma);
            (1.0 - delta0, (mp * delta0).powi(2))
        }
        StartRule::Offset { delta, rho } => (1.0 - delta, rho * rho),
    };
    let stops = forced_levels(m, opts, u);
    let mut next = 0usize;
    let mut dy = rhs(u, y);
    rec.push(u, y, dy, flag_of(u, y));

    let mut spans: Vec<[f64; 2]> = Vec::new();
    let mut span_top: Option<f64> = None;
    let mut in_sat = sat_gap(m, u, y) >= 0.0;
    let mut alpha = None;
    if in_sat {
        if mode == Mode::Classic {
            alpha = Some(u);
        } else {
            span_top = Some(u);
        }
    }
    let mut h = (0.1 * (1.0 - u)).max(1e-8);
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    while alpha.is_none() && u > 0.0 {
        while next < stops.len() && stops[next] >= u {
            next += 1;
        }
        let stop = stops.get(next).copied().unwrap_or(0.0);

        if let Some(iv) = td_interval_above(m, u) {
            if mode == Mode::Classic {
                alpha = Some(u);
                break;
            }
            if !in_sat {
                in_sat = true;
                span_top = Some(u);
            }
            // On L_td the flow drops linearly with slope sigma until it pins at zero.
            let target = iv[0].max(stop);
            let v = y.max(0.0).sqrt();
            let v_new = v - sigma * (u - target);
            if v > 0.0 && v_new < 0.0 {
                let u_pin = u - v / sigma;
                rec.push(u_pin, 0.0, 0.0, FLAG_DEGENERATE | FLAG_SATURATED | FLAG_EVENT);
            }
            let v_new = v_new.max(0.0);
            u = target;
            y = v_new * v_new;
            dy = 2.0 * sigma * v_new;
            rec.push(u, y, dy, FLAG_DEGENERATE | FLAG_SATURATED);
            if u <= iv[0] {
                // Leaving L_td: the right-hand side switches to the regular branch.
                dy = rhs(u, y);
                let k = rec.u.len() - 1;
                rec.dr[k] = dy;
            }
            continue;
        }

        if in_sat && mode == Mode::Extended && y > 0.0 {
            // Above the saturation curve V is exactly linear with slope sigma.
            let (v, u_top) = (y.max(0.0).sqrt(), u);
            let line = |x: f64| (v - sigma * (u_top - x)).max(0.0);
            let u_new = (u - SAT_STEP).max(stop);
            let gap = |x: f64| sat_gap(m, x, line(x).powi(2));
            if gap(u_new) >= 0.0 {
                y = line(u_new).powi(2);
                u = u_new;
                dy = rhs(u, y);
                rec.push(u, y, dy, flag_of(u, y));
                continue;
            }
            let (mut lo, mut hi) = (u_new, u);
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if gap(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            spans.push([lo, span_top.take().unwrap_or(u)]);
            in_sat = false;
            y = line(lo).powi(2);
            u = lo;
            dy = rhs(u, y);
            rec.push(u, y, dy, flag_of(u, y) | FLAG_SATURATED | FLAG_EVENT);
            continue;
        }

        let h_try = h.min(u - stop);
        let trial = dopri_step(&mut |x, z| rhs(x, z), u, y, dy, -h_try);
        if !trial.y.is_finite() || !trial.err.is_finite() {
            return Err(HalfplaneError::NonFinite { u });
        }
        let scale = opts.atol + opts.rtol * y.abs().max(trial.y.abs());
        let err_norm = trial.err.abs() / scale;
        if err_norm > 1.0 {
            rejected += 1;
            h = h_try * step_factor(err_norm);
            if h < opts.step_floor {
                return Err(HalfplaneError::StepFailure { u, h });
            }
            continue;
        }
        accepted += 1;
        if accepted + rejected > opts.max_steps {
            return Err(HalfplaneError::StepFailure { u, h: h_try });
        }
        let u_new = if h_try >= u - stop { stop } else { u - h_try };
        let y_new = trial.y.max(0.0);
        let sat_new = sat_gap(m, u_new, y_new) >= 0.0;

        if mode == Mode::Extended && sat_new && !in_sat && !m.is_td(u_new) && !enters_transversally(m, u_new, sigma) {
            // Leftward, V - a_+ can only shrink here, so the curve is touched rather than
            // crossed; the overshoot is step error and goes back onto the curve.
            let ap = m.a_plus(u_new);
            u = u_new;
            y = ap * ap;
            dy = rhs(u, y);
            rec.push(u, y, dy, flag_of(u, y));
            h = (h_try * step_factor(err_norm)).max(opts.step_floor);
            continue;
        }

        if sat_new != in_sat {
            // Locate the crossing by re-stepping from the accepted base point.
            let gap_at = |x: f64| -> (f64, f64) {
                let t = dopri_step(&mut |a, b| rhs(a, b), u, y, dy, x - u);
                let z = t.y.max(0.0);
                (sat_gap(m, x, z), z)
            };
            let inside = |g: f64| g >= 0.0;
            let (mut lo, mut hi) = (u_new, u);
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if inside(gap_at(mid).0) == in_sat {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let u_e = lo;
            let (_, mut y_e) = gap_at(u_e);
            let ap = m.a_plus(u_e);
            if mode == Mode::Classic && !in_sat {
                y_e = ap * ap;
                let d = rhs(u_e, y_e);
                rec.push(u_e, y_e, d, flag_of(u_e, y_e) | FLAG_SATURATED | FLAG_EVENT);
                alpha = Some(u_e);
                u = u_e;
                break;
            }
            if ap.is_finite() && !m.is_td(u_e) && (y_e - ap * ap).abs() <= 1e-9 * ap * ap {
                y_e = ap * ap;
            }
            let d = rhs(u_e, y_e);
            let mut f = flag_of(u_e, y_e) | FLAG_EVENT;
            if in_sat {
                spans.push([u_e, span_top.take().unwrap_or(u)]);
                f |= FLAG_SATURATED;
            } else {
                span_top = Some(u_e);
                f |= FLAG_SATURATED;
            }
            in_sat = !in_sat;
            rec.push(u_e, y_e, d, f);
            if (u - u_e).abs() > 0.0 {
                u = u_e;
                y = y_e;
                dy = d;
            } else {
                // Crossing sits on the base point itself; just take the step.
                u = u_new;
                y = y_new;
                dy = rhs(u, y);
                rec.push(u, y, dy, flag_of(u, y));
            }
            continue;
        }

        u = u_new;
        y = y_new;
        dy = if trial.y < 0.0 { rhs(u, y) } else { trial.dy };
        rec.push(u, y, dy, flag_of(u, y));
        h = (h_try * step_factor(err_norm)).max(opts.step_floor);
    }

    if mode == Mode::Classic && alpha.is_none() {
        alpha = Some(0.0);
    }
    if let Some(top) = span_top {
        if mode == Mode::Extended {
            spans.push([u.max(0.0), top]);
        }
    }
    let reached_zero = u <= 0.0;
    let v_values: Vec<f64> = rec.r.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let v0 = if reached_zero { v_values.last().copied() } else { None };
    spans.sort_by(|a, b| b[1].total_cmp(&a[1]));
    let mut sol = SpeedSolution {
        sigma,
        mode,
        u_grid: rec.u,
        r_values: rec.r,
        v_values,
        dr_values: rec.dr,
        flags: rec.flags,
        alpha,
        v0,
        slope0: None,
        saturated_spans: spans,
        steps_accepted: accepted,
        steps_rejected: rejected,
    };
    if mode == Mode::Extended {
        sol.slope0 = slope_at_zero(&sol).ok().flatten();
    }
    Ok(sol)
}

impl SpeedSolution {
    /// `R` at level `u` by cubic Hermite interpolation between nodes.
    pub fn r_at(&self, u: f64) -> f64 {
        let n = self.u_grid.len();
        if n == 0 {
            return f64::NAN;
        }
        // u_grid is decreasing.
        let idx = self.u_grid.partition_point(|&x| x > u);
        if idx == 0 {
            return self.r_values[0];
        }
        if idx >= n {
            return self.r_values[n - 1];
        }
        let (u0, u1) = (self.u_grid[idx - 1], self.u_grid[idx]);
        if u == u1 {
            return self.r_values[idx];
        }
        let h = u1 - u0;
        let t = (u - u0) / h;
        let (y0, y1) = (self.r_values[idx - 1], self.r_values[idx]);
        let (d0, d1) = (self.dr_values[idx - 1], self.dr_values[idx]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
        v.max(0.0)
    }

    /// `V = sqrt(R)` at level `u`.
    pub fn v_at(&self, u: f64) -> f64 {
        self.r_at(u).sqrt()
    }

    /// Lowest level covered by the grid.
    pub fn u_min(&self) -> f64 {
        self.u_grid.last().copied().unwrap_or(1.0)
    }

    /// Threshold `c_sep * u_min` with `c_sep = sigma / 2` (midpoint of the two slope roots).
    pub fn v0_threshold(&self) -> f64 {
        0.5 * self.sigma * U_MIN
    }

    /// Whether the solution reaches `u = 0` with `V(0)` below the separation threshold.
    pub fn reaches_zero(&self) -> bool {
        matches!(self.v0, Some(v) if v <= self.v0_threshold())
    }

    /// Writes `u, R, V, flags` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let rows = (0..self.u_grid.len()).map(|i| {
            vec![fmt_e12(self.u_grid[i]), fmt_e12(self.r_values[i]), fmt_e12(self.v_values[i]), self.flags[i].to_string()]
        });
        write_csv(out, &["u", "R", "V", "flags"], rows)
    }
}

/// Limit of `V(u)/u` at `u = 0` from the decade `u in [1e-4, 1e-3]`, Richardson-extrapolated.
///
/// `Ok(None)` when the solution does not reach `u = 0` with `V(0)` below the separation
/// threshold.
pub fn slope_at_zero(sol: &SpeedSolution) -> Result<Option<SlopeEstimate>, HalfplaneError> {
    let below: Vec<usize> = (0..sol.u_grid.len()).filter(|&i| sol.u_grid[i] > 0.0 && sol.u_grid[i] <= 1e-3 * (1.0 + 1e-12)).collect();
    if below.len() < 8 {
        return Err(HalfplaneError::InsufficientResolution { samples: below.len() });
    }
    if !sol.reaches_zero() {
        return Ok(None);
    }
    let decade: Vec<(f64, f64)> = below
        .iter()
        .filter(|&&i| sol.u_grid[i] >= 1e-4 * (1.0 - 1e-12))
        .map(|&i| (sol.u_grid[i], sol.v_values[i] / sol.u_grid[i]))
        .collect();
    if decade.len() < 3 {
        return Err(HalfplaneError::InsufficientResolution { samples: decade.len() });
    }
    let extrapolated: Vec<f64> = decade
        .windows(2)
        .map(|w| {
            let ((ua, za), (ub, zb)) = (w[0], w[1]);
            (ua * zb - ub * za) / (ua - ub)
        })
        .collect();
    let w = *extrapolated.last().unwrap();
    let spread = extrapolated.iter().map(|x| (x - w).abs()).fold(0.0, f64::max);
    Ok(Some(SlopeEstimate { w, err: spread + 1e-8 * w.abs().max(1.0) }))
}

/// Outcome of an ordering check between two solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// `max(lower - upper)` over the common levels (0 when ordered).
    pub max_violation: f64,
    pub worst_u: Option<f64>,
    pub common_points: usize,
    /// Classic stall levels ordered as `alpha(upper) >= alpha(lower)`.
    pub alpha_ordered: bool,
    pub passed: bool,
}

/// Checks `lower.V <= upper.V + tol` on the levels both grids share.
pub fn compare_ordering(lower: &SpeedSolution, upper: &SpeedSolution, tol: f64) -> OrderingReport {
    let floor = lower.u_min().max(upper.u_min());
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0f64;
    let mut worst_u = None;
    let mut common = 0usize;
    while i < lower.u_grid.len() && j < upper.u_grid.len() {
        let (a, b) = (lower.u_grid[i], upper.u_grid[j]);
        if a == b {
            if a >= floor && a < 1.0 {
                common += 1;
                let d = lower.v_values[i] - upper.v_values[j];
                if d > worst {
                    worst = d;
                    worst_u = Some(a);
                }
            }
            i += 1;
            j += 1;
        } else if a > b {
            i += 1;
        } else {
            j += 1;
        }
    }
    let alpha_ordered = match (upper.alpha, lower.alpha) {
        (Some(au), Some(al)) => au >= al - 1e-12,
        _ => true,
    };
    OrderingReport { max_violation: worst, worst_u, common_points: common, alpha_ordered, passed: worst <= tol && alpha_ordered }
}

/// For `sol1` at `sigma1 <= sol2` at `sigma2`: checks `V_sigma1 >= V_sigma2 - tol` and `alpha_sigma1 >= alpha_sigma2`.
pub fn compare_speed_solutions(sol1: &SpeedSolution, sol2: &SpeedSolution, tol: f64) -> OrderingReport {
    if sol1.sigma <= sol2.sigma {
        compare_ordering(sol2, sol1, tol)
    } else {
        compare_ordering(sol1, sol2, tol)
    }
}
