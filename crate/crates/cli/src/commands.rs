use satwave::families::{
    alpha_beta, characteristic_values, check_e4, make_example, make_example4, verify_example4, DegenerateFamilySpec,
};
use satwave::io::{fmt_e12, write_csv};
use satwave::profile::{pick_anchor, residual_classic, uniform_grid, ProfileKind};
use satwave::speeds::{viscosity_sweep, SpeedReport};
use satwave::{
    build_g, check_jumps, find_sigma_s, integrate_halfplane, invert_profile, measure_speed, preset_config, simulate_front,
    speed_report, FluxClassification, IntegrationOptions, ModelConfig, Mode, SimGrid, SpeedSolution,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{ExampleArgs, GlobalArgs, ProfileArgs, SweepArgs, ValidateArgs};
use crate::output::OutDir;
use crate::setup::{apply_overrides, family_spec, resolve_model, Failure, EXIT_BELOW_SIGMA_S, EXIT_FAILURE};

/// Jump conditions pass at this residual.
const JUMP_TOL: f64 = 1e-6;
/// Levels closer than this to 0 or 1 are left out of the classic residual.
const RESIDUAL_U_MIN: f64 = 1e-4;
/// Nodes kept per flow curve in `flows.csv`.
const FLOW_POINTS: usize = 2000;

/// What a command leaves for the manifest. `failure` is reported after the manifest is written.
pub struct Outcome {
    pub config: Option<ModelConfig>,
    pub summary: Value,
    pub failure: Option<Failure>,
}

impl Outcome {
    fn ok(config: ModelConfig, summary: Value) -> Self {
        Self { config: Some(config), summary, failure: None }
    }
}

fn fmt_speed(s: Option<f64>) -> String {
    s.map_or("n/a".to_string(), |s| format!("{s:.6}"))
}

#[derive(Serialize)]
struct SpeedsFile<'a> {
    #[serde(flatten)]
    report: &'a SpeedReport,
    gap: Option<f64>,
    sigma_s_below_sigma_r: bool,
    classification: &'a FluxClassification,
}

pub fn speeds(g: &GlobalArgs, out: &mut OutDir) -> Result<Outcome, Failure> {
    let lm = resolve_model(g)?;
    let rep = speed_report(&lm.flux, &lm.reaction, g.tol)?;
    let gap = rep.gap();
    let below = gap.is_some_and(|d| d > 2.0 * g.tol);
    out.json("speeds.json", &SpeedsFile { report: &rep, gap, sigma_s_below_sigma_r: below, classification: &lm.classification })?;
    let mut line = format!("sigma_s={:.6} sigma_r={} lower_bound={:.6}", rep.sigma_s, fmt_speed(rep.sigma_r), rep.lower_bound);
    if below {
        line.push_str(&format!(" [sigma_s < sigma_r, gap {:.6}]", gap.unwrap_or(0.0)));
    }
    println!("{line}");
    let summary = json!({ "sigma_s": rep.sigma_s, "sigma_r": rep.sigma_r, "lower_bound": rep.lower_bound, "sigma_s_below_sigma_r": below });
    Ok(Outcome::ok(lm.config, summary))
}

pub fn profile(g: &GlobalArgs, a: &ProfileArgs, out: &mut OutDir) -> Result<Outcome, Failure> {
    let (lo, hi) = (a.window[0], a.window[1]);
    if !(lo < hi) || a.points < 3 {
        return Err(Failure::usage("--window needs LO < HI and --points at least 3"));
    }
    let lm = resolve_model(g)?;
    let (m, r) = (&lm.flux, &lm.reaction);
    let rep = find_sigma_s(m, r, g.tol)?;
    let requested = a.sigma.unwrap_or(rep.bracket[1]);
    if requested < rep.sigma_s - g.tol {
        return Err(Failure::new(
            EXIT_BELOW_SIGMA_S,
            format!(
                "sigma = {requested} is below the singular speed {:.6}; profiles exist only from there up (try --sigma {:.6})",
                rep.sigma_s, rep.bracket[1]
            ),
        ));
    }
    // Within the bisection tolerance of sigma_s, use the bracket end known to reach u = 0.
    let sigma = requested.max(rep.bracket[1]);
    let sol = integrate_halfplane(m, r, sigma, Mode::Extended, &IntegrationOptions::default())?;
    let anchor = pick_anchor(&sol, a.anchor);
    let gmap = build_g(&sol, m, anchor)?;
    let p = invert_profile(&gmap, &uniform_grid(lo, hi, a.points));
    let checks = check_jumps(&p, m, sigma, JUMP_TOL)?;
    let residual = if p.kind == ProfileKind::Classic { residual_classic(&p, m, r, sigma, RESIDUAL_U_MIN).ok() } else { None };
    let all_ok = checks.jumps.iter().all(|j| j.rh_ok && j.bdp_ok);
    out.csv("profile.csv", |w| p.write_csv(w))?;
    out.csv("jumps.csv", |w| checks.write_csv(w))?;
    let doc = json!({
        "sigma_requested": requested,
        "sigma": sigma,
        "sigma_s": rep.sigma_s,
        "sigma_s_bracket": rep.bracket,
        "anchor": anchor,
        "kind": p.kind,
        "window": [lo, hi],
        "points": a.points,
        "tolerance": JUMP_TOL,
        "jumps": checks.jumps,
        "classic_residual": residual,
        "all_ok": all_ok,
    });
    out.json("checks.json", &doc)?;
    let kind = if p.kind == ProfileKind::Classic { "classic" } else { "flux-saturated" };
    println!("sigma={sigma:.6} kind={kind} jumps={} checks={}", p.saturation_points.len(), if all_ok { "ok" } else { "FAILED" });
    let summary = json!({ "sigma": sigma, "kind": p.kind, "jumps": p.saturation_points.len(), "all_ok": all_ok });
    Ok(Outcome::ok(lm.config, summary))
}

pub fn sweep(g: &GlobalArgs, a: &SweepArgs, out: &mut OutDir) -> Result<Outcome, Failure> {
    let mut eps = a.eps.clone();
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Failure::usage("--eps values must be positive"));
    }
    eps.sort_by(|x, y| y.total_cmp(x));
    eps.dedup();
    let lm = resolve_model(g)?;
    let table = viscosity_sweep(&lm.flux, &lm.reaction, &eps, g.tol)?;
    out.csv("sweep.csv", |w| {
        let rows = table.rows.iter().map(|row| vec![fmt_e12(row.eps), fmt_e12(row.sigma), row.monotone.to_string()]);
        write_csv(w, &["eps", "sigma_eps", "monotone"], rows)
    })?;
    let monotone = table.rows.iter().all(|r| r.monotone);
    println!("limit={:.6} +- {:.2e} rows={} monotone={monotone}", table.limit, table.limit_err, table.rows.len());
    let summary = json!({ "limit": table.limit, "limit_err": table.limit_err, "order": table.order, "monotone": monotone });
    Ok(Outcome::ok(lm.config, summary))
}

pub fn validate(g: &GlobalArgs, a: &ValidateArgs, out: &mut OutDir) -> Result<Outcome, Failure> {
    let lm = resolve_model(g)?;
    let grid = SimGrid::new(a.h, a.half_width, a.t_end);
    let (t0, t1) = match &a.fit {
        Some(w) => (w[0], w[1]),
        None => (0.25 * a.t_end, a.t_end),
    };
    let traj = simulate_front(&lm.flux, &lm.reaction, &grid)?;
    let fit = measure_speed(&traj, t0, t1)?;
    let reference = find_sigma_s(&lm.flux, &lm.reaction, g.tol)?.sigma_s;
    let rel = (fit.speed - reference).abs() / reference;
    let passed = rel <= a.speed_tol && fit.spread <= a.spread_tol && traj.warnings.is_empty();
    out.csv("trajectory.csv", |w| traj.write_csv(w))?;
    let doc = json!({
        "pde_speed": fit.speed,
        "per_level": fit.per_level.iter().zip(satwave::pde::LEVELS).map(|(p, c)| json!({"level": c, "speed": p.0, "stderr": p.1})).collect::<Vec<_>>(),
        "spread": fit.spread,
        "sigma_s": reference,
        "relative_error": rel,
        "tolerances": { "speed_rel": a.speed_tol, "spread": a.spread_tol },
        "grid": { "h": a.h, "half_width": a.half_width, "t_end": a.t_end, "dt": traj.dt, "fit_window": [t0, t1] },
        "warnings": traj.warnings,
        "passed": passed,
    });
    out.json("validate.json", &doc)?;
    println!("pde_speed={:.6} sigma_s={reference:.6} rel_error={rel:.3e} spread={:.3e} {}", fit.speed, fit.spread, if passed { "PASS" } else { "FAIL" });
    let summary = json!({ "pde_speed": fit.speed, "sigma_s": reference, "passed": passed });
    let failure = (!passed).then(|| Failure::new(EXIT_FAILURE, "PDE speed outside the requested tolerances"));
    Ok(Outcome { config: Some(lm.config), summary, failure })
}

fn flow_rows(sols: &[SpeedSolution]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for sol in sols {
        let stride = sol.u_grid.len().div_ceil(FLOW_POINTS).max(1);
        let last = sol.u_grid.len() - 1;
        for i in (0..sol.u_grid.len()).filter(|i| i % stride == 0 || *i == last) {
            rows.push(vec![fmt_e12(sol.sigma), fmt_e12(sol.u_grid[i]), fmt_e12(sol.v_values[i])]);
        }
    }
    rows
}

fn flows(spec: &DegenerateFamilySpec, n: u8, sigmas: &[f64]) -> Result<Vec<SpeedSolution>, Failure> {
    let (m, r) = if n == 4 { make_example4(spec)? } else { make_example(n, spec)? };
    sigmas
        .iter()
        .map(|&s| integrate_halfplane(&m, &r, s, Mode::Extended, &IntegrationOptions::default()).map_err(Failure::from))
        .collect()
}

pub fn example(g: &GlobalArgs, a: &ExampleArgs, out: &mut OutDir) -> Result<Outcome, Failure> {
    let name = format!("example{}", a.n);
    let base = preset_config(&name).expect("example presets exist");
    let config = apply_overrides(base, g)?;
    let spec = family_spec(&config)?;
    let tol = g.tol;
    let (doc, sigmas) = match a.n {
        1 => {
            let cv = characteristic_values(&spec, tol)?;
            let (m, r) = make_example(1, &spec)?;
            let table: Vec<_> = (1..=60).map(|k| alpha_beta(&m, &r, 1.5 * cv.tau * k as f64 / 60.0)).collect::<Result<_, _>>()?;
            out.csv("alpha_beta.csv", |w| {
                let rows = table.iter().map(|ab| vec![fmt_e12(ab.sigma), fmt_e12(ab.alpha), fmt_e12(ab.v_alpha), fmt_e12(ab.beta)]);
                write_csv(w, &["sigma", "alpha", "v_alpha", "beta"], rows)
            })?;
            println!("tau={:.6} alpha_tau={:.6} sigma_tilde={:.6}", cv.tau, cv.alpha_tau, cv.sigma_tilde);
            (json!({ "characteristic_values": cv }), vec![0.5 * cv.tau, cv.sigma_tilde, cv.tau])
        }
        2 => {
            let e4 = check_e4(&spec, tol)?;
            println!("sigma_s2={:.6} bound={:.6} e4_strict={}", e4.sigma_s2, e4.bound, e4.strict);
            (json!({ "e4": e4 }), vec![0.0, 0.5 * e4.sigma_s2, e4.sigma_s2 + tol, 2.0 * e4.sigma_s2])
        }
        3 => {
            let (m, r) = make_example(3, &spec)?;
            let rep = find_sigma_s(&m, &r, tol)?;
            let layout = verify_example4(&spec, rep.bracket[1])?;
            let cv = characteristic_values(&spec, tol)?;
            let e4 = check_e4(&spec, tol)?;
            println!(
                "sigma_bar={:.6} gamma={:.6} alpha={:.6} sigma_s2={:.6} sigma_tilde={:.6}",
                rep.sigma_s, layout.gamma, layout.alpha, e4.sigma_s2, cv.sigma_tilde
            );
            let doc = json!({ "sigma_bar": rep.sigma_s, "bracket": rep.bracket, "layout": layout, "sigma_tilde": cv.sigma_tilde, "e4": e4 });
            (doc, vec![0.5 * rep.sigma_s, rep.bracket[1], 2.0 * rep.sigma_s])
        }
        _ => {
            let (m3, r3) = make_example(3, &spec)?;
            let bar = find_sigma_s(&m3, &r3, tol)?;
            let layout = verify_example4(&spec, bar.bracket[1])?;
            let (m, r) = make_example4(&spec)?;
            let rep = speed_report(&m, &r, tol)?;
            let small = (rep.sigma_s - bar.sigma_s).abs() <= 2.0 * tol;
            // Largest excess of D^lambda over the flow line of the sigma-bar span on [u2, u1].
            let d = spec.diffusivity4();
            let c_bar = spec.diffusivity(3).eval(layout.gamma) - bar.bracket[1] * layout.gamma;
            let excess = (0..=1000)
                .map(|i| spec.u2 + (spec.u1 - spec.u2) * i as f64 / 1000.0)
                .map(|u| d.eval(u) - bar.bracket[1] * u - c_bar)
                .fold(f64::NEG_INFINITY, f64::max);
            println!(
                "lambda={} sigma_s={:.6} sigma_r={} sigma_bar={:.6} regime={}",
                spec.lambda,
                rep.sigma_s,
                fmt_speed(rep.sigma_r),
                bar.sigma_s,
                if small { "small" } else { "large" }
            );
            let doc = json!({
                "lambda": spec.lambda,
                "sigma_s": rep.sigma_s,
                "sigma_r": rep.sigma_r,
                "gap": rep.gap(),
                "attainment_hint": rep.attainment_hint,
                "sigma_bar": bar.sigma_s,
                "layout": layout,
                "regime": if small { "small" } else { "large" },
                "max_excess_over_flow_line": excess,
            });
            (doc, vec![bar.bracket[1], rep.bracket[1]])
        }
    };
    let sols = flows(&spec, a.n, &sigmas)?;
    out.csv("flows.csv", |w| write_csv(w, &["sigma", "u", "V"], flow_rows(&sols)))?;
    out.json("example.json", &json!({ "example": a.n, "spec": spec, "results": doc }))?;
    Ok(Outcome::ok(config, json!({ "example": a.n })))
}
