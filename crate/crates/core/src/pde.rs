//! Explicit finite-difference solver for `u_t = (a(u, u_x))_x + f(u)` on `[-L, L]`, used as an
//! independent check of computed front speeds.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{fmt_e12, write_csv};
use crate::model::{classify_flux, FluxModel, ReactionModel};
use crate::tolerances::MIN_CLASSIFY_GRID;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("flux is not over-elliptic; the explicit scheme is only trusted for over-elliptic fluxes")]
    NotOverElliptic,
    #[error("fit window [{t0}, {t1}] is unusable: {reason}")]
    InsufficientWindow { t0: f64, t1: f64, reason: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `u = 1` for `x > at`, `0` otherwise. Fronts travel toward `x = 0`.
    Step { at: f64 },
    /// `u = 1` for `|x - center| < radius`, `0` otherwise.
    Bump { center: f64, radius: f64 },
    Constant(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub h: f64,
    pub half_width: f64,
    /// Defaults to `0.9 h^2 / (2 max da/ds)`.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Sampling interval of the level trajectories.
    pub output_every: f64,
    pub ic: InitialCondition,
}

impl SimGrid {
    /// Step at the origin.
    pub fn new(h: f64, half_width: f64, t_end: f64) -> Self {
        Self { h, half_width, dt: None, t_end, output_every: 0.1, ic: InitialCondition::Step { at: 0.0 } }
    }
}

/// Levels whose crossings are tracked.
pub const LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Leftmost crossing of each level in [`LEVELS`].
    pub x_left: [Vec<f64>; 3],
    /// Rightmost crossing of each level.
    pub x_right: [Vec<f64>; 3],
    pub dt: f64,
    pub t_end: f64,
    pub warnings: Vec<String>,
    pub x_grid: Vec<f64>,
    pub final_u: Vec<f64>,
}

impl Trajectory {
    /// Writes `t, x_0.1, x_0.5, x_0.9` rows (leftmost crossings).
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let rows = (0..self.t.len()).map(|i| {
            let mut row = vec![fmt_e12(self.t[i])];
            row.extend(self.x_left.iter().map(|x| fmt_e12(x[i])));
            row
        });
        write_csv(out, &["t", "x_0.1", "x_0.5", "x_0.9"], rows)
    }
}

/// Largest `da/ds` sampled over `u` in `[0, 1]` and `s` from 0 to `1e4`.
pub fn max_diffusivity(m: &FluxModel) -> f64 {
    let mut best = 0.0f64;
    for i in 0..=200 {
        let u = i as f64 / 200.0;
        best = best.max(m.da_ds(u, 0.0));
        for j in 0..=80 {
            let s = 10f64.powf(-4.0 + 0.1 * j as f64);
            if s >= m.omega_plus(u) {
                break;
            }
            best = best.max(m.da_ds(u, s));
        }
    }
    best
}

/// Crossings of level `c` by linear interpolation: `(leftmost, rightmost)`.
pub fn level_crossings(x: &[f64], u: &[f64], c: f64) -> (f64, f64) {
    let cross = |i: usize| -> f64 {
        let (a, b) = (u[i], u[i + 1]);
        x[i] + (c - a) / (b - a) * (x[i + 1] - x[i])
    };
    let hits = |i: &usize| (u[*i] - c) * (u[*i + 1] - c) <= 0.0 && u[*i] != u[*i + 1];
    let n = u.len();
    let left = (0..n - 1).find(hits).map(cross).unwrap_or(f64::NAN);
    let right = (0..n - 1).rev().find(hits).map(cross).unwrap_or(f64::NAN);
    (left, right)
}

/// Explicit Euler with conservative face fluxes and zero-flux ends.
pub fn simulate_front(m: &FluxModel, r: &ReactionModel, grid: &SimGrid) -> Result<Trajectory, PdeError> {
    if !(grid.h > 0.0 && grid.half_width > grid.h && grid.t_end > 0.0 && grid.output_every > 0.0) {
        return Err(PdeError::InvalidGrid(format!("{grid:?}")));
    }
    let class = classify_flux(m, MIN_CLASSIFY_GRID).map_err(|e| PdeError::InvalidGrid(e.to_string()))?;
    if class.over_elliptic.is_none() {
        return Err(PdeError::NotOverElliptic);
    }
    let h = grid.h;
    let limit = h * h / (2.0 * max_diffusivity(m));
    let dt = grid.dt.unwrap_or(0.9 * limit);
    if dt > limit {
        return Err(PdeError::CflViolation { dt, limit });
    }
    let n = (2.0 * grid.half_width / h).round() as usize + 1;
    let x: Vec<f64> = (0..n).map(|i| -grid.half_width + h * i as f64).collect();
    let mut u: Vec<f64> = x
        .iter()
        .map(|&xi| match grid.ic {
            InitialCondition::Step { at } => {
                if xi > at {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::Bump { center, radius } => {
                if (xi - center).abs() < radius {
                    1.0
                } else {
                    0.0
                }
            }
            InitialCondition::Constant(c) => c,
        })
        .collect();
    let monotone_ic = matches!(grid.ic, InitialCondition::Step { .. } | InitialCondition::Constant(_));

    let mut flux = vec![0.0; n + 1];
    let mut traj = Trajectory {
        t: Vec::new(),
        x_left: Default::default(),
        x_right: Default::default(),
        dt,
        t_end: grid.t_end,
        warnings: Vec::new(),
        x_grid: x.clone(),
        final_u: Vec::new(),
    };
    let record = |t: f64, u: &[f64], traj: &mut Trajectory| {
        traj.t.push(t);
        for (k, &c) in LEVELS.iter().enumerate() {
            let (l, r) = level_crossings(&x, u, c);
            traj.x_left[k].push(l);
            traj.x_right[k].push(r);
        }
        if monotone_ic && u.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            traj.warnings.push(format!("NonMonotoneProfile at t = {t}"));
        }
    };
    let steps = (grid.t_end / dt).ceil() as usize;
    let out_stride = ((grid.output_every / dt).round() as usize).max(1);
    let mut clipped = false;
    record(0.0, &u, &mut traj);
    for step in 1..=steps {
        // Neumann ends: flux[0] = flux[n] = 0.
        for i in 0..n - 1 {
            flux[i + 1] = m.a(0.5 * (u[i] + u[i + 1]), (u[i + 1] - u[i]) / h);
        }
        for i in 0..n {
            let v = u[i] + dt * ((flux[i + 1] - flux[i]) / h + r.f(u[i]));
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                clipped = true;
            }
            u[i] = v.clamp(0.0, 1.0);
        }
        if step % out_stride == 0 || step == steps {
            record(step as f64 * dt, &u, &mut traj);
        }
    }
    if clipped {
        traj.warnings.push("solution left [0, 1] and was clipped".into());
    }
    traj.final_u = u;
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    /// `(|slope|, stderr)` of the leftmost crossing for each tracked level.
    pub per_level: Vec<(f64, f64)>,
    pub speed: f64,
    /// `(max - min) / mean` over levels.
    pub spread: f64,
}

/// Least-squares slope and its standard error.
pub fn linear_fit(t: &[f64], x: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|ti| (ti - tm).powi(2)).sum();
    let stx: f64 = t.iter().zip(x).map(|(ti, xi)| (ti - tm) * (xi - xm)).sum();
    let slope = stx / stt;
    let sse: f64 = t.iter().zip(x).map(|(ti, xi)| (xi - xm - slope * (ti - tm)).powi(2)).sum();
    let stderr = if n > 2.0 { (sse / (n - 2.0) / stt).sqrt() } else { f64::INFINITY };
    (slope, stderr)
}

/// Front speed over `[t0, t1]`; the window must skip the first quarter of the run.
pub fn measure_speed(traj: &Trajectory, t0: f64, t1: f64) -> Result<SpeedFit, PdeError> {
    let bad = |reason: &str| Err(PdeError::InsufficientWindow { t0, t1, reason: reason.into() });
    if t0 < 0.25 * traj.t_end - 1e-12 {
        return bad("window must exclude the first 25% of the run");
    }
    let idx: Vec<usize> = (0..traj.t.len()).filter(|&i| traj.t[i] >= t0 - 1e-12 && traj.t[i] <= t1 + 1e-12).collect();
    if idx.len() < 3 {
        return bad("fewer than 3 samples");
    }
    let t: Vec<f64> = idx.iter().map(|&i| traj.t[i]).collect();
    let mut per_level = Vec::new();
    for xs in &traj.x_left {
        let x: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return bad("level not present at every sample");
        }
        let (s, e) = linear_fit(&t, &x);
        per_level.push((s.abs(), e));
    }
    let speeds: Vec<f64> = per_level.iter().map(|p| p.0).collect();
    let speed = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let spread = (speeds.iter().cloned().fold(f64::MIN, f64::max) - speeds.iter().cloned().fold(f64::MAX, f64::min)) / speed;
    Ok(SpeedFit { per_level, speed, spread })
}
