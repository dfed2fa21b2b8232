//! Singular and classic minimal speeds by bisection over the half-plane solver,
//! slope-law classification at `u = 0`, and viscosity sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfplane::{integrate_halfplane, HalfplaneError, IntegrationOptions, Mode, SlopeEstimate, SpeedSolution};
use crate::model::{gamma0, FluxModel, ReactionModel};
use crate::tolerances::SIGMA_CAP;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeedError {
    #[error("no real roots: sigma = {sigma} < 2 sqrt(gamma0) = {bound}")]
    NoRealRoots { sigma: f64, bound: f64 },
    #[error("bracket not closed below the cap {cap} (last probe {last})")]
    BracketNotClosed { cap: f64, last: f64 },
    #[error("inconclusive classification at sigma = {sigma}: {reason}")]
    Inconclusive { sigma: f64, reason: String },
    #[error("no classic wave: every classic solution stalls on the totally degenerate interval [{lo}, {hi}]")]
    NoClassicWave { lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Integration(#[from] HalfplaneError),
}

/// Roots of `w^2 - sigma w + gamma0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRoots {
    pub w_minus: f64,
    pub w_plus: f64,
    pub discriminant: f64,
}

pub fn quadratic_roots(sigma: f64, gamma0: f64) -> Result<QuadraticRoots, SpeedError> {
    if !(gamma0 >= 0.0) {
        return Err(SpeedError::InvalidInput(format!("gamma0 = {gamma0} must be nonnegative")));
    }
    let discriminant = sigma * sigma - 4.0 * gamma0;
    if discriminant < 0.0 {
        return Err(SpeedError::NoRealRoots { sigma, bound: 2.0 * gamma0.sqrt() });
    }
    let q = 0.5 * sigma + (0.25 * sigma * sigma - gamma0).max(0.0).sqrt();
    let w_minus = if q > 0.0 { gamma0 / q } else { 0.0 };
    Ok(QuadraticRoots { w_minus, w_plus: q, discriminant })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedClass {
    BelowSigmaS,
    AtSigmaS,
    AboveSigmaS,
}

/// Where `sigma` sits relative to the singular speed, read off `V(0)` and the slope at `u = 0`.
pub fn classify_speed(m: &FluxModel, r: &ReactionModel, sigma: f64) -> Result<(SpeedClass, SpeedSolution), SpeedError> {
    if m.is_td(0.0) {
        return Err(SpeedError::InvalidInput("u = 0 is totally degenerate".into()));
    }
    let sol = integrate_halfplane(m, r, sigma, Mode::Extended, &IntegrationOptions::default())?;
    if !sol.reaches_zero() {
        return Ok((SpeedClass::BelowSigmaS, sol));
    }
    let g0 = gamma0(m, r).max(0.0);
    let roots = match quadratic_roots(sigma, g0) {
        Ok(q) if q.discriminant > 0.0 => q,
        _ => {
            return Err(SpeedError::Inconclusive {
                sigma,
                reason: "sigma does not exceed the lower bound 2 sqrt(gamma0)".into(),
            })
        }
    };
    let slope = crate::halfplane::slope_at_zero(&sol)?.ok_or_else(|| SpeedError::Inconclusive {
        sigma,
        reason: "slope at zero unavailable".into(),
    })?;
    let mid = 0.5 * (roots.w_minus + roots.w_plus);
    // Dead band around the midpoint, widened by the estimate's own error.
    let band = slope.err + 0.05 * (roots.w_plus - roots.w_minus);
    let class = if slope.w > mid + band {
        SpeedClass::AtSigmaS
    } else if slope.w < mid - band {
        SpeedClass::AboveSigmaS
    } else {
        return Err(SpeedError::Inconclusive {
            sigma,
            reason: format!("slope {} within {band} of the separation value {mid}", slope.w),
        });
    };
    Ok((class, sol))
}

/// One bisection probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub sigma: f64,
    pub outcome: bool,
    pub v0: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttainmentHint {
    Attained,
    NotAttained,
    Unknown,
}

/// Diagnostics at the upper end of the final bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEvidence {
    pub sigma: f64,
    pub v0: Option<f64>,
    pub slope0: Option<SlopeEstimate>,
    pub roots: Option<QuadraticRoots>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub sigma_r: Option<f64>,
    pub sigma_s: f64,
    pub lower_bound: f64,
    pub gamma0: f64,
    /// Final `[lo, hi]` bracket for `sigma_s`.
    pub bracket: [f64; 2],
    pub bracket_history: Vec<Probe>,
    pub sigma_r_history: Vec<Probe>,
    pub attainment_hint: AttainmentHint,
    pub evidence: Option<SpeedEvidence>,
}

impl SpeedReport {
    /// `sigma_r - sigma_s` when both are known.
    pub fn gap(&self) -> Option<f64> {
        self.sigma_r.map(|s| s - self.sigma_s)
    }
}

fn probe(m: &FluxModel, r: &ReactionModel, sigma: f64, mode: Mode) -> Result<(Probe, SpeedSolution), SpeedError> {
    let sol = integrate_halfplane(m, r, sigma, mode, &IntegrationOptions::probe())?;
    let outcome = match mode {
        Mode::Extended => sol.reaches_zero(),
        Mode::Classic => sol.alpha == Some(0.0) && sol.reaches_zero(),
    };
    Ok((Probe { sigma, outcome, v0: sol.v0, alpha: sol.alpha }, sol))
}

/// Bisection on a predicate that is false below and true above; `lo` is assumed false.
fn bracket_search(
    m: &FluxModel,
    r: &ReactionModel,
    lo: f64,
    tol: f64,
    mode: Mode,
    history: &mut Vec<Probe>,
) -> Result<(f64, f64), SpeedError> {
    let mut lo = lo;
    let mut step = 1.0;
    let mut hi = lo + step;
    loop {
        let (p, _) = probe(m, r, hi, mode)?;
        let ok = p.outcome;
        history.push(p);
        if ok {
            break;
        }
        if hi >= SIGMA_CAP {
            return Err(SpeedError::BracketNotClosed { cap: SIGMA_CAP, last: hi });
        }
        lo = hi;
        step *= 2.0;
        hi = (lo + step).min(SIGMA_CAP);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (p, _) = probe(m, r, mid, mode)?;
        let ok = p.outcome;
        history.push(p);
        if ok {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Singular speed: smallest `sigma` whose extended solution has `V(0) = 0`.
pub fn find_sigma_s(m: &FluxModel, r: &ReactionModel, tol: f64) -> Result<SpeedReport, SpeedError> {
    if !(tol > 0.0) {
        return Err(SpeedError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let g0 = gamma0(m, r).max(0.0);
    let lb = 2.0 * g0.sqrt();
    let mut history = Vec::new();
    let (lo, hi) = bracket_search(m, r, lb, tol, Mode::Extended, &mut history)?;
    let sigma_s = 0.5 * (lo + hi);
    let sol = integrate_halfplane(m, r, hi, Mode::Extended, &IntegrationOptions::default())?;
    let evidence = SpeedEvidence { sigma: hi, v0: sol.v0, slope0: sol.slope0, roots: quadratic_roots(hi, g0).ok() };
    Ok(SpeedReport {
        sigma_r: None,
        sigma_s,
        lower_bound: lb,
        gamma0: g0,
        bracket: [lo, hi],
        bracket_history: history,
        sigma_r_history: Vec::new(),
        attainment_hint: AttainmentHint::Unknown,
        evidence: Some(evidence),
    })
}

/// Classic speed: smallest `sigma` whose classic solution reaches `u = 0` with `V(0) = 0`.
pub fn find_sigma_r(m: &FluxModel, r: &ReactionModel, tol: f64) -> Result<(f64, AttainmentHint, Vec<Probe>), SpeedError> {
    if !(tol > 0.0) {
        return Err(SpeedError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    // Classic solutions stop at the top of any nontrivial totally degenerate interval.
    if let Some(iv) = m.td_intervals().iter().find(|iv| iv[1] > iv[0]) {
        return Err(SpeedError::NoClassicWave { lo: iv[0], hi: iv[1] });
    }
    let lb = 2.0 * gamma0(m, r).max(0.0).sqrt();
    let mut history = Vec::new();
    let (lo, hi) = bracket_search(m, r, lb, tol, Mode::Classic, &mut history)?;
    let sigma_r = 0.5 * (lo + hi);
    // A stall level that stays away from zero just below sigma_r means the limit
    // solution does not reach u = 0 inside the strip.
    let stall = |s: f64| -> Result<f64, SpeedError> {
        let sol = integrate_halfplane(m, r, s.max(0.0), Mode::Classic, &IntegrationOptions::probe())?;
        Ok(sol.alpha.unwrap_or(0.0))
    };
    let a1 = stall(lo - tol)?;
    let a2 = stall(lo - 0.1 * tol)?;
    let hint = if a1 > 1e-3 && a2 > 0.5 * a1 {
        AttainmentHint::NotAttained
    } else if a1 <= 1e-3 && a2 <= 1e-3 {
        AttainmentHint::Attained
    } else {
        AttainmentHint::Unknown
    };
    Ok((sigma_r, hint, history))
}

/// Both speeds in one report. `sigma_r` is `None` when no classic wave exists at any speed.
pub fn speed_report(m: &FluxModel, r: &ReactionModel, tol: f64) -> Result<SpeedReport, SpeedError> {
    let mut rep = find_sigma_s(m, r, tol)?;
    match find_sigma_r(m, r, tol) {
        Ok((sigma_r, hint, hist)) => {
            rep.sigma_r = Some(sigma_r);
            rep.attainment_hint = hint;
            rep.sigma_r_history = hist;
        }
        Err(SpeedError::NoClassicWave { .. }) => rep.attainment_hint = AttainmentHint::NotAttained,
        Err(e) => return Err(e),
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub sigma: f64,
    /// `sigma` does not exceed the previous (larger-eps) row by more than `tol`.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Extrapolation of `sigma(eps)` to `eps = 0`.
    pub limit: f64,
    pub limit_err: f64,
    /// Estimated convergence order in `eps` (`None` for polynomial extrapolation).
    pub order: Option<f64>,
}

/// Neville extrapolation to `x = 0`. Returns the full-order value and the change from the
/// next-lower order as an error estimate.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n == ys.len() && n > 0);
    if n == 1 {
        return (ys[0], f64::INFINITY);
    }
    let mut p = ys.to_vec();
    let mut prev_top = p[n - 1];
    let mut top = p[n - 1];
    for k in 1..n {
        for i in (k..n).rev() {
            p[i] = (xs[i] * p[i - 1] - xs[i - k] * p[i]) / (xs[i] - xs[i - k]);
        }
        prev_top = top;
        top = p[n - 1];
    }
    (top, (top - prev_top).abs())
}

/// Aitken delta-squared limit of a sequence sampled at geometrically decreasing `eps`.
///
/// Assumes `sigma(eps) ~ L + C eps^p` and estimates `p` from the last three values. The
/// error is the change from the previous triple, or the last correction when only three
/// values exist. Returns `None` if the differences are not strictly contracting.
pub fn aitken_limit(ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = ys.len();
    if n < 3 {
        return None;
    }
    let triple = |i: usize| -> Option<(f64, f64)> {
        let (d1, d2) = (ys[i + 1] - ys[i], ys[i + 2] - ys[i + 1]);
        if d1 == 0.0 || d2 == 0.0 {
            return Some((ys[i + 2], 0.0));
        }
        let q = d1 / d2;
        if !(q > 1.0) {
            return None;
        }
        Some((ys[i + 2] + d2 / (q - 1.0), q))
    };
    let (last, q) = triple(n - 3)?;
    let err = if n >= 4 {
        match triple(n - 4) {
            Some((prev, _)) => (last - prev).abs(),
            None => (last - ys[n - 1]).abs(),
        }
    } else {
        (last - ys[n - 1]).abs()
    };
    Some((last, err, q))
}

/// `sigma_r` of the viscous fluxes `a + eps s` for a strictly decreasing list of `eps`.
pub fn viscosity_sweep(m: &FluxModel, r: &ReactionModel, eps: &[f64], tol: f64) -> Result<SweepTable, SpeedError> {
    if eps.is_empty() {
        return Err(SpeedError::InvalidInput("empty epsilon list".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SpeedError::InvalidInput("epsilon list must be positive and strictly decreasing".into()));
    }
    let sigmas: Vec<f64> = eps
        .par_iter()
        .map(|&e| find_sigma_r(&m.with_viscosity(e), r, tol).map(|x| x.0))
        .collect::<Result<_, _>>()?;
    let rows = eps
        .iter()
        .zip(&sigmas)
        .enumerate()
        .map(|(i, (&e, &s))| SweepRow { eps: e, sigma: s, monotone: i == 0 || s <= sigmas[i - 1] + tol })
        .collect();
    // The observed order in eps need not be an integer, so a geometric eps list is
    // extrapolated with an estimated order; otherwise fall back to a low-degree polynomial.
    let ratio = |i: usize| eps[i] / eps[i + 1];
    let geometric = eps.len() >= 3 && (0..eps.len() - 1).all(|i| (ratio(i) / ratio(0) - 1.0).abs() < 1e-9);
    if geometric {
        if let Some((limit, err, q)) = aitken_limit(&sigmas) {
            let order = q.ln() / ratio(0).ln();
            return Ok(SweepTable { rows, limit, limit_err: err + 2.0 * tol, order: Some(order) });
        }
    }
    let k = eps.len().min(3);
    let (limit, err) = extrapolate_to_zero(&eps[eps.len() - k..], &sigmas[sigmas.len() - k..]);
    Ok(SweepTable { rows, limit, limit_err: err + 2.0 * tol, order: None })
}
