//! Acceptance suite. Runs each criterion in sequence, prints one PASS/FAIL line per criterion,
//! and exits non-zero if any failed. Timing budgets are part of each criterion.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satwave::families::{fisher, make_example, make_example4, DegenerateFamilySpec};
use satwave::halfplane::{compare_ordering, compare_speed_solutions, integrate_halfplane, slope_at_zero, IntegrationOptions, Mode};
use satwave::model::{Diffusivity, Phi, Poly};
use satwave::profile::{pick_anchor, residual_classic, uniform_grid};
use satwave::speeds::viscosity_sweep;
use satwave::{
    build_g, check_jumps, find_sigma_s, invert_profile, measure_speed, preset_config, quadratic_roots, simulate_front, speed_report,
    FluxModel, LoadedModel, ReactionModel, SimGrid,
};

/// Bisection tolerance on speeds.
const TOL_SIGMA: f64 = 1e-6;
/// Fisher speeds, relative.
const FISHER_REL: f64 = 1e-3;
const LOWER_BOUND_SLACK: f64 = 1e-6;
const SLOPE_W_MINUS_REL: f64 = 0.02;
const SLOPE_W_PLUS_REL: f64 = 0.05;
const ORDERING_TOL: f64 = 1e-9;
const RH_TOL: f64 = 1e-6;
const RESIDUAL_MAX: f64 = 1e-4;
/// Accepted band for "about 4x" residual decrease under h-halving.
const RESIDUAL_RATIO: (f64, f64) = (3.0, 5.0);
const IDENTITY_TOL: f64 = 1e-12;
const PDE_REL: f64 = 0.05;
const PDE_SPREAD: f64 = 0.02;
const SEED: u64 = 20_240_611;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bounded() -> (FluxModel, ReactionModel) {
    let lm = LoadedModel::from_config(preset_config("bounded").unwrap()).unwrap();
    (lm.flux, lm.reaction)
}

fn sigma_bar() -> f64 {
    let (m, r) = make_example(3, &DegenerateFamilySpec::default()).unwrap();
    find_sigma_s(&m, &r, TOL_SIGMA).unwrap().bracket[1]
}

fn fisher_speeds() -> Outcome {
    let mut worst = 0.0f64;
    for (d, k) in [(1.0, 1.0), (4.0, 1.0), (0.25, 4.0)] {
        let (m, r) = fisher(d, k);
        let start = Instant::now();
        let s = find_sigma_s(&m, &r, TOL_SIGMA).map_err(|e| e.to_string())?.sigma_s;
        let took = start.elapsed();
        let want = 2.0 * (d * k).sqrt();
        let rel = (s - want).abs() / want;
        worst = worst.max(rel);
        ensure(rel <= FISHER_REL, || format!("d={d} k={k}: sigma_s {s} vs {want}"))?;
        ensure(took < Duration::from_secs(1), || format!("d={d} k={k}: took {took:?}"))?;
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn lower_bound_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut min_margin = f64::INFINITY;
    for case in 0..20 {
        let d0 = rng.gen_range(0.05..2.0);
        let coeffs = vec![d0, rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)];
        let phi = match rng.gen_range(0..3) {
            0 => Phi::Linear,
            1 => Phi::Atan,
            _ => Phi::RatioP(rng.gen_range(1.5..4.0)),
        };
        let k = rng.gen_range(0.5..2.0);
        let m = FluxModel::separable(Diffusivity::Poly(Poly::new(0.0, coeffs.clone())), phi);
        let bound = 2.0 * (d0 * phi.deriv(0.0) * k).sqrt();
        let s = find_sigma_s(&m, &ReactionModel::logistic(k), TOL_SIGMA).map_err(|e| format!("case {case}: {e}"))?.sigma_s;
        min_margin = min_margin.min(s - bound);
        ensure(s >= bound - LOWER_BOUND_SLACK, || format!("case {case} D={coeffs:?} {phi:?} k={k}: {s} < {bound}"))?;
    }
    Ok(format!("20 cases, min sigma_s - bound = {min_margin:.3e}"))
}

fn slope_classification() -> Outcome {
    let (m, r) = fisher(1.0, 1.0);
    let mut worst_minus = 0.0f64;
    for sigma in [2.2, 2.5, 3.0] {
        let sol = integrate_halfplane(&m, &r, sigma, Mode::Extended, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
        let w = slope_at_zero(&sol).map_err(|e| e.to_string())?.ok_or("no slope at zero")?.w;
        let want = (sigma - (sigma * sigma - 4.0f64).sqrt()) / 2.0;
        let rel = (w - want).abs() / want;
        worst_minus = worst_minus.max(rel);
        ensure(rel <= SLOPE_W_MINUS_REL, || format!("sigma={sigma}: slope {w} vs w- {want}"))?;
    }
    let (m, r) = bounded();
    let rep = find_sigma_s(&m, &r, TOL_SIGMA).map_err(|e| e.to_string())?;
    let sigma = rep.bracket[1];
    let sol = integrate_halfplane(&m, &r, sigma, Mode::Extended, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
    let w = slope_at_zero(&sol).map_err(|e| e.to_string())?.ok_or("no slope at zero")?.w;
    let w_plus = quadratic_roots(sigma, rep.gamma0).map_err(|e| e.to_string())?.w_plus;
    let rel = (w - w_plus).abs() / w_plus;
    ensure(rel <= SLOPE_W_PLUS_REL, || format!("bounded at sigma_s={sigma}: slope {w} vs w+ {w_plus}"))?;
    Ok(format!("w- within {:.2}%, w+ within {:.2}%", 100.0 * worst_minus, 100.0 * rel))
}

fn monotonicity() -> Outcome {
    // V is resolved near u = 0 only to about sqrt(atol); tighten it so 1e-9 is meaningful.
    let opts = IntegrationOptions { atol: 1e-22, ..IntegrationOptions::probe() };
    let models = [bounded(), fisher(1.0, 1.0), make_example4(&DegenerateFamilySpec { lambda: 0.1, ..Default::default() }).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut compared = 0;
    for pair in 0..50 {
        let (m, r) = &models[pair % models.len()];
        let s1 = rng.gen_range(0.0..2.5);
        let s2 = s1 + rng.gen_range(1e-3..1.5);
        let a = integrate_halfplane(m, r, s1, Mode::Extended, &opts).map_err(|e| e.to_string())?;
        let b = integrate_halfplane(m, r, s2, Mode::Extended, &opts).map_err(|e| e.to_string())?;
        let rep = compare_speed_solutions(&a, &b, ORDERING_TOL);
        compared += rep.common_points;
        ensure(rep.passed, || format!("pair {pair} sigma {s1} < {s2}: {rep:?}"))?;
    }
    let (m, r) = bounded();
    for pair in 0..20 {
        let sigma = rng.gen_range(0.3..2.0);
        let e1 = rng.gen_range(1e-3..0.3);
        let e2 = e1 + rng.gen_range(1e-3..0.3);
        let a = integrate_halfplane(&m.with_viscosity(e1), &r, sigma, Mode::Extended, &opts).map_err(|e| e.to_string())?;
        let b = integrate_halfplane(&m.with_viscosity(e2), &r, sigma, Mode::Extended, &opts).map_err(|e| e.to_string())?;
        let rep = compare_ordering(&a, &b, ORDERING_TOL);
        compared += rep.common_points;
        ensure(rep.passed, || format!("viscosity pair {pair} eps {e1} < {e2}: {rep:?}"))?;
    }
    Ok(format!("50 speed pairs and 20 viscosity pairs, {compared} levels compared"))
}

fn viscosity_limit() -> Outcome {
    let (m, r) = bounded();
    let direct = find_sigma_s(&m, &r, TOL_SIGMA).map_err(|e| e.to_string())?.sigma_s;
    let eps = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let table = viscosity_sweep(&m, &r, &eps, TOL_SIGMA).map_err(|e| e.to_string())?;
    ensure(table.rows.iter().all(|row| row.monotone), || format!("non-monotone column {:?}", table.rows))?;
    let allowed = 5.0 * TOL_SIGMA + table.limit_err;
    let off = (table.limit - direct).abs();
    ensure(off <= allowed, || format!("limit {} +- {} vs direct {direct}", table.limit, table.limit_err))?;
    Ok(format!("limit {:.6} vs sigma_s {direct:.6}, |diff| {off:.2e} <= {allowed:.2e}", table.limit))
}

fn example4_regimes() -> Outcome {
    let spec = DegenerateFamilySpec::default();
    let bar = sigma_bar();
    let small = {
        let (m, r) = make_example4(&DegenerateFamilySpec { lambda: 0.01, ..spec }).unwrap();
        speed_report(&m, &r, TOL_SIGMA).map_err(|e| e.to_string())?
    };
    ensure((small.sigma_s - bar).abs() <= 2.0 * TOL_SIGMA, || format!("(a) sigma_s {} vs sigma-bar {bar}", small.sigma_s))?;
    let gap = small.gap().ok_or("(a) no sigma_r")?;
    ensure(gap > 0.0, || format!("(a) gap {gap}"))?;
    let (m_large, r_large) = make_example4(&DegenerateFamilySpec { lambda: 1.0, ..spec }).unwrap();
    let large = find_sigma_s(&m_large, &r_large, TOL_SIGMA).map_err(|e| e.to_string())?;
    ensure(large.sigma_s > bar + TOL_SIGMA, || format!("(b) sigma_s {} vs sigma-bar {bar}", large.sigma_s))?;

    let (m, r) = make_example4(&spec).unwrap();
    let sol = integrate_halfplane(&m, &r, bar, Mode::Extended, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
    let g = build_g(&sol, &m, pick_anchor(&sol, 0.5)).map_err(|e| e.to_string())?;
    let p = invert_profile(&g, &uniform_grid(-20.0, 20.0, 401));
    ensure(p.saturation_points.len() == 1, || format!("(c) {} jumps", p.saturation_points.len()))?;
    let own = check_jumps(&p, &m, bar, RH_TOL).map_err(|e| e.to_string())?;
    let rh = own.jumps[0].rh_residual;
    ensure(rh <= RH_TOL, || format!("(c) RH residual {rh:e}"))?;
    let perturbed = check_jumps(&p, &m_large, bar, RH_TOL).map_err(|e| e.to_string())?;
    let margin = perturbed.jumps[0].bdp_margin;
    ensure(margin > RH_TOL, || format!("(c) BDP margin {margin} for the large-lambda flux"))?;
    Ok(format!(
        "(a) gap {gap:.4} (b) sigma_s^1 {:.6} > {bar:.6} (c) RH {rh:.1e}, BDP margin {margin:.3}",
        large.sigma_s
    ))
}

fn profile_consistency() -> Outcome {
    let (m, r) = fisher(1.0, 1.0);
    let sigma = 2.5;
    let sol = integrate_halfplane(&m, &r, sigma, Mode::Extended, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
    let g = build_g(&sol, &m, 0.5).map_err(|e| e.to_string())?;
    let residual = |h: f64| {
        let n = (20.0 / h).round() as usize + 1;
        let p = invert_profile(&g, &uniform_grid(-10.0, 10.0, n));
        residual_classic(&p, &m, &r, sigma, 1e-4).map_err(|e| e.to_string())
    };
    let (coarse, fine) = (residual(1e-3)?, residual(5e-4)?);
    ensure(coarse <= RESIDUAL_MAX, || format!("residual {coarse:e} at h = 1e-3"))?;
    let ratio = coarse / fine;
    ensure(ratio >= RESIDUAL_RATIO.0 && ratio <= RESIDUAL_RATIO.1, || format!("halving ratio {ratio}"))?;

    let bar = sigma_bar();
    let (m4, r4) = make_example4(&DegenerateFamilySpec::default()).unwrap();
    let sol = integrate_halfplane(&m4, &r4, bar, Mode::Extended, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
    let g = build_g(&sol, &m4, pick_anchor(&sol, 0.5)).map_err(|e| e.to_string())?;
    let p = invert_profile(&g, &uniform_grid(-20.0, 20.0, 401));
    let rep = check_jumps(&p, &m4, bar, RH_TOL).map_err(|e| e.to_string())?;
    ensure(!rep.jumps.is_empty(), || "no jumps in the sigma-bar profile".into())?;
    let worst = rep.jumps.iter().map(|j| (j.h_residual - j.rh_residual).abs()).fold(0.0, f64::max);
    ensure(worst <= IDENTITY_TOL, || format!("|h - RH| = {worst:e}"))?;
    Ok(format!("residual {coarse:.2e} at h = 1e-3, ratio {ratio:.2}; |h - RH| {worst:.1e}"))
}

fn pde_cross_check() -> Outcome {
    let (m, r) = fisher(1.0, 1.0);
    let traj = simulate_front(&m, &r, &SimGrid::new(0.05, 200.0, 60.0)).map_err(|e| e.to_string())?;
    let fit = measure_speed(&traj, 15.0, 60.0).map_err(|e| e.to_string())?;
    let rel = (fit.speed - 2.0).abs() / 2.0;
    ensure(rel <= PDE_REL, || format!("speed {} vs 2", fit.speed))?;
    ensure(fit.spread <= PDE_SPREAD, || format!("spread {}", fit.spread))?;
    Ok(format!("speed {:.4} ({:.2}% off), spread {:.2}%", fit.speed, 100.0 * rel, 100.0 * fit.spread))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("Fisher-KPP speeds", fisher_speeds, Duration::from_secs(3)),
        ("lower-bound law", lower_bound_law, Duration::from_secs(30)),
        ("slope classification", slope_classification, Duration::from_secs(10)),
        ("monotonicity suites", monotonicity, Duration::from_secs(60)),
        ("viscosity limit", viscosity_limit, Duration::from_secs(300)),
        ("Example 4 regimes", example4_regimes, Duration::from_secs(120)),
        ("profile self-consistency", profile_consistency, Duration::from_secs(30)),
        ("PDE cross-check", pde_cross_check, Duration::from_secs(180)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > *budget => Err(format!("{detail}; took {took:.2?} > {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
