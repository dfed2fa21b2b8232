//! Wave profiles from a half-plane solution.
//!
//! The profile is the inverse of `G(u) = int_{u0}^{u} H(d, V(d)) dd` with `H = 1/g` below the
//! saturation curve and `H = 0` on plateaus (`V >= a_+` or `u` in `L_td`). Each plateau
//! `[mu, nu]` becomes a jump of the profile at `xi = G(mu) = G(nu)`.

use std::io::Write;

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfplane::{Mode, SpeedSolution};
use crate::io::{fmt_e12, write_csv};
use crate::model::{FluxModel, ReactionModel};
use crate::tolerances::{PLATEAU_CELLS, PLATEAU_H, U_LO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("solution at sigma = {sigma} keeps V(0) = {v0:e} > 0; no profile below the singular speed")]
    BelowSigmaS { sigma: f64, v0: f64 },
    #[error("a profile needs an extended-mode solution")]
    NotExtended,
    #[error("anchor level {u0} lies on the plateau [{lo}, {hi}]")]
    AnchorOnPlateau { u0: f64, lo: f64, hi: f64 },
    #[error("a_+ is unbounded at u = {u}")]
    UnboundedAPlus { u: f64 },
    #[error("profile has {0} jumps; the classic residual needs a smooth profile")]
    NotClassic(usize),
    #[error("xi grid must be uniform and contain at least 3 points")]
    BadGrid,
}

/// Quadrature error target per knot interval.
const QUAD_TOL: f64 = 1e-14;

/// Tabulated `G` on level knots plus the plateau set.
#[derive(Clone, Debug)]
pub struct GMap {
    pub sigma: f64,
    pub anchor: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    /// Increasing level knots.
    pub knots_u: Vec<f64>,
    /// `G` at the knots, nondecreasing, zero at the anchor.
    pub knots_g: Vec<f64>,
    /// Level intervals on which `H = 0`, increasing and disjoint.
    pub plateaus: Vec<[f64; 2]>,
    /// Per-decade growth of `|G|` over the last two decades at each end: `[low, high]`.
    pub tail_growth: [[f64; 2]; 2],
    sol: SpeedSolution,
    flux: FluxModel,
}

fn merge_intervals(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    v.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut out: Vec<[f64; 2]> = Vec::new();
    for iv in v {
        match out.last_mut() {
            Some(last) if iv[0] <= last[1] + 1e-15 => last[1] = last[1].max(iv[1]),
            _ => out.push(iv),
        }
    }
    out
}

impl GMap {
    /// `H(u, V(u))`.
    pub fn h(&self, u: f64) -> f64 {
        self.flux.h_reciprocal(u, self.sol.v_at(u))
    }

    fn in_plateau(&self, u: f64) -> Option<[f64; 2]> {
        self.plateaus.iter().copied().find(|p| u >= p[0] && u <= p[1])
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        double_exponential::integrate(|x| self.h(x), a, b, QUAD_TOL).integral
    }

    fn interval_is_flat(&self, a: f64, b: f64) -> bool {
        self.in_plateau(0.5 * (a + b)).is_some()
    }

    /// `G(u)` for `u` in the window.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(self.u_lo, self.u_hi);
        let k = self.knots_u.partition_point(|&x| x <= u).saturating_sub(1).min(self.knots_u.len() - 2);
        let a = self.knots_u[k];
        if self.interval_is_flat(a, self.knots_u[k + 1]) {
            return self.knots_g[k];
        }
        self.knots_g[k] + self.integral(a, u)
    }

    /// Level `u` with `G(u) = xi`, clamped to the window.
    pub fn invert(&self, xi: f64) -> f64 {
        let n = self.knots_g.len();
        if xi <= self.knots_g[0] {
            return self.u_lo;
        }
        if xi >= self.knots_g[n - 1] {
            return self.u_hi;
        }
        // First knot with G > xi; flat intervals have equal ends and are skipped.
        let j = self.knots_g.partition_point(|&g| g <= xi);
        let k = j - 1;
        let (mut a, mut b) = (self.knots_u[k], self.knots_u[j]);
        let (g0, g1) = (self.knots_g[k], self.knots_g[j]);
        let target = xi - g0;
        let mut x = a + (b - a) * target / (g1 - g0);
        for _ in 0..100 {
            let r = self.integral(self.knots_u[k], x) - target;
            if r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            if r.abs() <= 1e-14 * (1.0 + xi.abs()) || b - a <= 4.0 * f64::EPSILON * b {
                break;
            }
            let d = self.h(x);
            let newton = if d > 0.0 { x - r / d } else { f64::NAN };
            x = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        }
        x
    }

    /// Both ends of `G` grow at least logarithmically: per-decade increments do not collapse.
    pub fn diverges_at_ends(&self) -> bool {
        self.tail_growth.iter().all(|t| t[0] > 0.0 && t[0] >= 0.5 * t[1])
    }

    pub fn solution(&self) -> &SpeedSolution {
        &self.sol
    }
}

/// `preferred` unless it sits on a plateau of `sol`; then the middle of the free range above
/// (or below) that plateau.
pub fn pick_anchor(sol: &SpeedSolution, preferred: f64) -> f64 {
    let (lo, hi) = (U_LO, 1.0 - U_LO);
    for p in &sol.saturated_spans {
        if preferred >= p[0] && preferred <= p[1] {
            return if p[1] < hi - 1e-3 { 0.5 * (p[1] + hi) } else { 0.5 * (lo + p[0]) };
        }
    }
    preferred
}

/// Tabulates `G` for an extended solution with `V(0) = 0`, anchored at `G(u0) = 0`.
pub fn build_g(sol: &SpeedSolution, m: &FluxModel, u0: f64) -> Result<GMap, ProfileError> {
    if sol.mode != Mode::Extended {
        return Err(ProfileError::NotExtended);
    }
    if !sol.reaches_zero() {
        return Err(ProfileError::BelowSigmaS { sigma: sol.sigma, v0: sol.v0.unwrap_or(f64::NAN) });
    }
    let (u_lo, u_hi) = (U_LO, 1.0 - U_LO);
    let mut plateaus: Vec<[f64; 2]> = sol
        .saturated_spans
        .iter()
        .map(|p| [p[0].max(u_lo), p[1].min(u_hi)])
        .filter(|p| p[1] > p[0])
        .collect();
    for iv in m.td_intervals() {
        let p = [iv[0].max(u_lo), iv[1].min(u_hi)];
        if p[1] > p[0] {
            plateaus.push(p);
        }
    }
    let plateaus = merge_intervals(plateaus);

    let mut knots: Vec<f64> = sol.u_grid.iter().copied().filter(|&u| u > u_lo && u < u_hi).collect();
    knots.extend([u_lo, u_hi, u0]);
    for p in &plateaus {
        knots.extend([p[0], p[1]]);
    }
    for d in 1..=2 {
        let x = u_lo * 10f64.powi(d);
        knots.extend([x, 1.0 - x]);
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let mut map = GMap {
        sigma: sol.sigma,
        anchor: u0,
        u_lo,
        u_hi,
        knots_g: vec![0.0; knots.len()],
        knots_u: knots,
        plateaus,
        tail_growth: [[0.0; 2]; 2],
        sol: sol.clone(),
        flux: m.clone(),
    };
    if let Some(p) = map.in_plateau(u0) {
        if u0 > p[0] && u0 < p[1] {
            return Err(ProfileError::AnchorOnPlateau { u0, lo: p[0], hi: p[1] });
        }
    }

    // Guard against saturation the span bookkeeping missed: runs of vanishing H.
    let cells: Vec<bool> = map.knots_u.windows(2).map(|w| map.h(0.5 * (w[0] + w[1])) < PLATEAU_H).collect();
    let mut extra = Vec::new();
    let mut i = 0;
    while i < cells.len() {
        if cells[i] {
            let start = i;
            while i < cells.len() && cells[i] {
                i += 1;
            }
            if i - start >= PLATEAU_CELLS {
                extra.push([map.knots_u[start], map.knots_u[i]]);
            }
        } else {
            i += 1;
        }
    }
    if !extra.is_empty() {
        extra.extend(map.plateaus.iter().copied());
        map.plateaus = merge_intervals(extra);
    }

    let incs: Vec<f64> = map
        .knots_u
        .windows(2)
        .map(|w| if map.interval_is_flat(w[0], w[1]) { 0.0 } else { map.integral(w[0], w[1]) })
        .collect();
    let mut g = 0.0;
    map.knots_g[0] = 0.0;
    for (k, inc) in incs.iter().enumerate() {
        g += inc;
        map.knots_g[k + 1] = g;
    }
    let ia = map.knots_u.iter().position(|&x| x == u0).expect("anchor is a knot");
    let shift = map.knots_g[ia];
    for v in &mut map.knots_g {
        *v -= shift;
    }
    let at = |u: f64| map.eval(u);
    let low = [at(10.0 * u_lo) - at(u_lo), at(100.0 * u_lo) - at(10.0 * u_lo)];
    let high = [at(u_hi) - at(1.0 - 10.0 * U_LO), at(1.0 - 10.0 * U_LO) - at(1.0 - 100.0 * U_LO)];
    map.tail_growth = [low, high];
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Classic,
    FluxSaturated,
}

/// Jump of the profile at `xi` from level `mu` to level `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub xi: f64,
    pub mu: f64,
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub sigma: f64,
    pub anchor: f64,
    pub xi_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `u' = 1 / H(u)` from the map; infinite where `H` vanishes.
    pub du_values: Vec<f64>,
    pub kind: ProfileKind,
    pub saturation_points: Vec<SaturationPoint>,
}

/// `n` equispaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + h * i as f64).collect()
}

/// Samples the profile `u(xi) = G^{-1}(xi)` on `xi_grid`.
pub fn invert_profile(g: &GMap, xi_grid: &[f64]) -> WaveProfile {
    let u_values: Vec<f64> = xi_grid.iter().map(|&xi| g.invert(xi)).collect();
    let du_values = u_values.iter().map(|&u| 1.0 / g.h(u)).collect();
    let saturation_points: Vec<SaturationPoint> =
        g.plateaus.iter().map(|p| SaturationPoint { xi: g.eval(p[0]), mu: p[0], nu: p[1] }).collect();
    let kind = if saturation_points.is_empty() { ProfileKind::Classic } else { ProfileKind::FluxSaturated };
    WaveProfile { sigma: g.sigma, anchor: g.anchor, xi_grid: xi_grid.to_vec(), u_values, du_values, kind, saturation_points }
}

impl WaveProfile {
    /// `1` at the first grid point past each jump.
    pub fn jump_flags(&self) -> Vec<u8> {
        let mut flags = vec![0u8; self.xi_grid.len()];
        for sp in &self.saturation_points {
            let i = self.xi_grid.partition_point(|&x| x < sp.xi);
            if i > 0 && i < flags.len() {
                flags[i] = 1;
            }
        }
        flags
    }

    /// Writes `xi, u, is_jump` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let flags = self.jump_flags();
        let rows = (0..self.xi_grid.len())
            .map(|i| vec![fmt_e12(self.xi_grid[i]), fmt_e12(self.u_values[i]), flags[i].to_string()]);
        write_csv(out, &["xi", "u", "is_jump"], rows)
    }

    /// Translates the profile so that `xi` shifts by `c`.
    pub fn shifted(&self, c: f64) -> WaveProfile {
        let mut p = self.clone();
        p.xi_grid.iter_mut().for_each(|x| *x += c);
        p.saturation_points.iter_mut().for_each(|s| s.xi += c);
        p
    }
}

fn a_plus_checked(m: &FluxModel, u: f64) -> Result<f64, ProfileError> {
    let a = m.a_plus(u);
    if a.is_finite() {
        Ok(a)
    } else {
        Err(ProfileError::UnboundedAPlus { u })
    }
}

/// `|sigma (nu - mu) - (a_+(nu) - a_+(mu))|` per jump.
pub fn check_rankine_hugoniot(p: &WaveProfile, m: &FluxModel, sigma: f64) -> Result<Vec<f64>, ProfileError> {
    p.saturation_points
        .iter()
        .map(|s| Ok((sigma * (s.nu - s.mu) - (a_plus_checked(m, s.nu)? - a_plus_checked(m, s.mu)?)).abs()))
        .collect()
}

/// Largest excess of an intermediate chord slope from `mu` over the jump chord slope
/// (nonpositive when the condition holds). Zero for degenerate jumps.
pub fn check_bertsch_dalpasso(p: &WaveProfile, m: &FluxModel, _sigma: f64) -> Result<Vec<f64>, ProfileError> {
    const SAMPLES: usize = 4000;
    p.saturation_points
        .iter()
        .map(|s| {
            if s.nu <= s.mu {
                return Ok(0.0);
            }
            let a_mu = a_plus_checked(m, s.mu)?;
            let chord = (a_plus_checked(m, s.nu)? - a_mu) / (s.nu - s.mu);
            let mut worst = f64::NEG_INFINITY;
            for i in 1..=SAMPLES {
                let u = s.mu + (s.nu - s.mu) * i as f64 / SAMPLES as f64;
                let slope = (a_plus_checked(m, u)? - a_mu) / (u - s.mu);
                worst = worst.max(slope - chord);
            }
            Ok(worst)
        })
        .collect()
}

/// `|h(mu) - h(nu)|` with `h(u) = a_+(u) - sigma u`.
pub fn check_h_continuity(p: &WaveProfile, m: &FluxModel, sigma: f64) -> Result<Vec<f64>, ProfileError> {
    let h = |u: f64| -> Result<f64, ProfileError> { Ok(a_plus_checked(m, u)? - sigma * u) };
    p.saturation_points.iter().map(|s| Ok((h(s.mu)? - h(s.nu)?).abs())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCheck {
    pub xi: f64,
    pub mu: f64,
    pub nu: f64,
    pub rh_residual: f64,
    pub bdp_margin: f64,
    pub h_residual: f64,
    pub rh_ok: bool,
    pub bdp_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCheckReport {
    pub sigma: f64,
    pub tolerance: f64,
    pub jumps: Vec<JumpCheck>,
}

/// All jump conditions with pass flags at `tol`.
pub fn check_jumps(p: &WaveProfile, m: &FluxModel, sigma: f64, tol: f64) -> Result<JumpCheckReport, ProfileError> {
    let rh = check_rankine_hugoniot(p, m, sigma)?;
    let bdp = check_bertsch_dalpasso(p, m, sigma)?;
    let hc = check_h_continuity(p, m, sigma)?;
    let jumps = p
        .saturation_points
        .iter()
        .enumerate()
        .map(|(i, s)| JumpCheck {
            xi: s.xi,
            mu: s.mu,
            nu: s.nu,
            rh_residual: rh[i],
            bdp_margin: bdp[i],
            h_residual: hc[i],
            rh_ok: rh[i] <= tol,
            bdp_ok: bdp[i] <= tol,
        })
        .collect();
    Ok(JumpCheckReport { sigma, tolerance: tol, jumps })
}

impl JumpCheckReport {
    /// Writes `xi_k, mu, nu, rh_residual, bdp_margin` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let rows = self
            .jumps
            .iter()
            .map(|j| vec![fmt_e12(j.xi), fmt_e12(j.mu), fmt_e12(j.nu), fmt_e12(j.rh_residual), fmt_e12(j.bdp_margin)]);
        write_csv(out, &["xi_k", "mu", "nu", "rh_residual", "bdp_margin"], rows)
    }
}

/// Max of `|(a(u, u'))' - sigma u' + f(u)|` over grid points with `u` in `[u_min, 1 - u_min]`.
/// The flux `a(u, u')` is formed from the profile's own slopes and differenced centrally, so the
/// check is second order in `h` while rounding in `u` is amplified only by `1/h`.
pub fn residual_classic(p: &WaveProfile, m: &FluxModel, r: &ReactionModel, sigma: f64, u_min: f64) -> Result<f64, ProfileError> {
    if !p.saturation_points.is_empty() {
        return Err(ProfileError::NotClassic(p.saturation_points.len()));
    }
    let n = p.xi_grid.len();
    if n < 3 {
        return Err(ProfileError::BadGrid);
    }
    let h = p.xi_grid[1] - p.xi_grid[0];
    if !(h > 0.0) || p.xi_grid.windows(2).any(|w| ((w[1] - w[0]) / h - 1.0).abs() > 1e-6) {
        return Err(ProfileError::BadGrid);
    }
    let (u, du) = (&p.u_values, &p.du_values);
    if du.len() != n || du.iter().any(|d| !d.is_finite()) {
        return Err(ProfileError::BadGrid);
    }
    let flux: Vec<f64> = (0..n).map(|i| m.a(u[i], du[i])).collect();
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        if u[i] < u_min || u[i] > 1.0 - u_min {
            continue;
        }
        let div = (flux[i + 1] - flux[i - 1]) / (2.0 * h);
        worst = worst.max((div - sigma * du[i] + r.f(u[i])).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfplane::{integrate_halfplane, IntegrationOptions};

    fn fisher_map(sigma: f64) -> (GMap, FluxModel) {
        let m = FluxModel::linear(1.0);
        let r = ReactionModel::logistic(1.0);
        let sol = integrate_halfplane(&m, &r, sigma, Mode::Extended, &IntegrationOptions::default()).unwrap();
        (build_g(&sol, &m, 0.5).unwrap(), m)
    }

    #[test]
    fn fisher_g_is_strictly_increasing_and_anchored() {
        let (g, _) = fisher_map(2.5);
        assert!(g.plateaus.is_empty());
        assert_eq!(g.eval(0.5), 0.0);
        assert!(g.knots_g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.diverges_at_ends(), "{:?}", g.tail_growth);
    }

    #[test]
    fn inversion_round_trip() {
        let (g, _) = fisher_map(2.5);
        for &xi in &[-5.0, -1.0, 0.0, 0.3, 4.0] {
            let u = g.invert(xi);
            assert!((g.eval(u) - xi).abs() < 1e-10, "xi={xi}");
        }
    }

    #[test]
    fn below_sigma_s_is_refused() {
        let m = FluxModel::linear(1.0);
        let r = ReactionModel::logistic(1.0);
        let sol = integrate_halfplane(&m, &r, 1.0, Mode::Extended, &IntegrationOptions::probe()).unwrap();
        assert!(matches!(build_g(&sol, &m, 0.5), Err(ProfileError::BelowSigmaS { .. })));
    }

    #[test]
    fn linear_saturation_gives_zero_rh_residual() {
        use crate::model::{Diffusivity, Phi, Poly};
        let m = FluxModel::separable(Diffusivity::Poly(Poly::new(0.0, vec![0.1, 0.5])), Phi::RatioP(2.0));
        let p = WaveProfile {
            sigma: 0.5,
            anchor: 0.5,
            xi_grid: vec![0.0, 1.0],
            u_values: vec![0.2, 0.9],
            du_values: vec![1.0, 1.0],
            kind: ProfileKind::FluxSaturated,
            saturation_points: vec![SaturationPoint { xi: 0.5, mu: 0.3, nu: 0.8 }],
        };
        let rh = check_rankine_hugoniot(&p, &m, 0.5).unwrap();
        assert!(rh[0] < 1e-15);
        let hc = check_h_continuity(&p, &m, 0.5).unwrap();
        assert!(hc[0] < 1e-15);
        assert!(check_bertsch_dalpasso(&p, &m, 0.5).unwrap()[0] < 1e-12);
    }

    #[test]
    fn unbounded_a_plus_is_rejected() {
        let m = FluxModel::linear(1.0);
        let p = WaveProfile {
            sigma: 1.0,
            anchor: 0.5,
            xi_grid: vec![0.0],
            u_values: vec![0.5],
            du_values: vec![1.0],
            kind: ProfileKind::FluxSaturated,
            saturation_points: vec![SaturationPoint { xi: 0.0, mu: 0.2, nu: 0.4 }],
        };
        assert!(matches!(check_rankine_hugoniot(&p, &m, 1.0), Err(ProfileError::UnboundedAPlus { .. })));
    }

    #[test]
    fn equilibrium_has_zero_residual() {
        let m = FluxModel::linear(1.0);
        let r = ReactionModel::logistic(1.0);
        let p = WaveProfile {
            sigma: 2.0,
            anchor: 0.5,
            xi_grid: uniform_grid(0.0, 1.0, 11),
            u_values: vec![1.0; 11],
            du_values: vec![0.0; 11],
            kind: ProfileKind::Classic,
            saturation_points: vec![],
        };
        assert_eq!(residual_classic(&p, &m, &r, 2.0, 0.0).unwrap(), 0.0);
    }
}
