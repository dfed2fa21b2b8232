//! Degenerate families: structural claims and frozen characteristic values.
//!
//! Frozen numbers were produced by the solver after the RK4 and offset-start oracles in
//! `halfplane_oracles.rs` validated the integrator; they guard against regressions.

use satwave::families::{
    alpha_beta, characteristic_values, check_e4, make_example, make_example4, verify_example4, DegenerateFamilySpec,
};
use satwave::halfplane::{integrate_halfplane, IntegrationOptions, Mode};
use satwave::speeds::{speed_report, AttainmentHint};
use satwave::{find_sigma_s, preset_config, LoadedModel};

const TOL: f64 = 1e-6;

mod frozen {
    pub const TAU: f64 = 0.819_858_350_086;
    pub const ALPHA_TAU: f64 = 0.640_993_253_088;
    pub const SIGMA_TILDE: f64 = 0.303_147_912_699;
    pub const SIGMA_S2: f64 = 0.134_164_555_487;
    pub const SIGMA_BAR: f64 = 0.198_502_285_895;
    pub const GAMMA: f64 = 0.021_635_009_402;
    pub const ALPHA: f64 = 0.719_317_315_906;
    pub const SIGMA_S_LAMBDA: [(f64, f64); 3] = [(0.01, 0.198_502_285_895), (0.1, 0.221_238_835_272), (1.0, 0.731_274_350_104)];
    pub const SIGMA_R_LAMBDA: [(f64, f64); 3] = [(0.01, 0.817_435_009_894), (0.1, 0.800_039_990_363), (1.0, 1.381_681_187_567)];
    pub const SIGMA_S_BOUNDED: f64 = 0.658_494_895_091;
}

fn spec() -> DegenerateFamilySpec {
    DegenerateFamilySpec::default()
}

#[test]
fn characteristic_values_are_frozen() {
    let cv = characteristic_values(&spec(), 1e-9).unwrap();
    assert!((cv.tau - frozen::TAU).abs() < 1e-6, "{}", cv.tau);
    assert!((cv.alpha_tau - frozen::ALPHA_TAU).abs() < 1e-6, "{}", cv.alpha_tau);
    assert!((cv.sigma_tilde - frozen::SIGMA_TILDE).abs() < 1e-6, "{}", cv.sigma_tilde);
    assert!((cv.at_sigma_tilde.beta - spec().u2).abs() < 1e-6);
}

#[test]
fn alpha_is_continuous_below_tau_and_jumps_at_tau() {
    let s = spec();
    let (m, r) = make_example(1, &s).unwrap();
    let cv = characteristic_values(&s, 1e-9).unwrap();
    let n = 40;
    let ds = cv.tau / n as f64;
    let alphas: Vec<f64> = (1..=n).map(|k| alpha_beta(&m, &r, ds * k as f64).unwrap().alpha).collect();
    for w in alphas.windows(2) {
        // Observed |d alpha / d sigma| stays below 0.6 on (0, tau].
        assert!((w[1] - w[0]).abs() <= ds, "{w:?}");
    }
    let below = alpha_beta(&m, &r, cv.tau - TOL).unwrap().alpha;
    let above = alpha_beta(&m, &r, cv.tau + TOL).unwrap().alpha;
    assert!((below - above).abs() >= 0.5 * (cv.alpha_tau - s.u1), "{below} {above}");
    for sigma in [cv.tau + TOL, 1.0, 3.0] {
        assert_eq!(alpha_beta(&m, &r, sigma).unwrap().alpha, s.u1);
    }
}

#[test]
fn beta_increases_from_minus_infinity() {
    // beta tends to -inf as sigma -> 0, so on (0, tau) it rises rather than falls.
    let (m, r) = make_example(1, &spec()).unwrap();
    let tau = characteristic_values(&spec(), 1e-9).unwrap().tau;
    assert!(alpha_beta(&m, &r, 1e-3).unwrap().beta < -100.0);
    let betas: Vec<f64> = (1..40).map(|k| alpha_beta(&m, &r, tau * k as f64 / 40.0).unwrap().beta).collect();
    assert!(betas.windows(2).all(|w| w[1] > w[0]), "{betas:?}");
}

#[test]
fn example2_flow_stays_below_d2() {
    // Near u2 the flow hugs D2 from below with a gap of order (u2 - u)^4, far under the
    // integrator's resolution in V (about sqrt(atol) where V is tiny). There we only require
    // V <= D2 up to that resolution; further down the gap is resolvable and must be strict.
    let s = spec();
    let (m, r) = make_example(2, &s).unwrap();
    let d2 = s.d2();
    let opts = IntegrationOptions::default();
    let resolution = opts.atol.sqrt();
    for sigma in [0.0, 0.05, 0.134, 0.3, 1.0, 2.0] {
        let sol = integrate_halfplane(&m, &r, sigma, Mode::Extended, &opts).unwrap();
        let mut strict = 0;
        for (u, v) in sol.u_grid.iter().zip(&sol.v_values) {
            if *u > 0.0 && *u < s.u2 {
                let d = d2.eval(*u);
                assert!(*v <= d + resolution, "sigma={sigma} u={u}: V={v} D2={d}");
                if *u <= s.u2 - 0.05 {
                    assert!(*v < d, "sigma={sigma} u={u}: V={v} D2={d}");
                    strict += 1;
                }
            }
        }
        assert!(strict > 10, "sigma={sigma}: too few nodes below u2 - 0.05");
    }
}

#[test]
fn example2_is_pulled_and_below_sigma_tilde() {
    let (m, r) = make_example(2, &spec()).unwrap();
    let rep = find_sigma_s(&m, &r, TOL).unwrap();
    assert!((rep.sigma_s - frozen::SIGMA_S2).abs() < 2.0 * TOL);
    // D2 peaks at u = 0 and phi' <= phi'(0), so the linear bound is attained.
    assert!(rep.sigma_s - rep.lower_bound <= 2.0 * TOL);
    let e4 = check_e4(&spec(), TOL).unwrap();
    assert!(!e4.strict && e4.sigma_s2 == rep.sigma_s, "{e4:?}");
    let cv = characteristic_values(&spec(), 1e-9).unwrap();
    assert!(rep.sigma_s < cv.sigma_tilde);
}

#[test]
fn example3_singular_speed_and_layout() {
    let s = spec();
    let (m, r) = make_example(3, &s).unwrap();
    let rep = find_sigma_s(&m, &r, TOL).unwrap();
    assert!((rep.sigma_s - frozen::SIGMA_BAR).abs() < 2.0 * TOL, "{}", rep.sigma_s);
    assert!(rep.sigma_s > rep.lower_bound + 0.05);
    let lay = verify_example4(&s, rep.bracket[1]).unwrap();
    assert!((lay.gamma - frozen::GAMMA).abs() < 1e-6 && (lay.alpha - frozen::ALPHA).abs() < 1e-6, "{lay:?}");
}

#[test]
fn perturbed_family_speeds_are_frozen() {
    for ((lam, ss), (_, sr)) in frozen::SIGMA_S_LAMBDA.iter().zip(frozen::SIGMA_R_LAMBDA.iter()) {
        let (m, r) = make_example4(&DegenerateFamilySpec { lambda: *lam, ..spec() }).unwrap();
        let rep = speed_report(&m, &r, TOL).unwrap();
        assert!((rep.sigma_s - ss).abs() < 2.0 * TOL, "lambda={lam}: {}", rep.sigma_s);
        assert!((rep.sigma_r.unwrap() - sr).abs() < 2.0 * TOL, "lambda={lam}: {:?}", rep.sigma_r);
        assert_eq!(rep.attainment_hint, AttainmentHint::NotAttained);
    }
}

#[test]
fn bump_stays_under_the_flow_line_only_for_small_lambda() {
    let s = spec();
    let sigma_bar = {
        let (m, r) = make_example(3, &s).unwrap();
        find_sigma_s(&m, &r, TOL).unwrap().bracket[1]
    };
    let lay = verify_example4(&s, sigma_bar).unwrap();
    let d3 = s.diffusivity(3);
    // Flow on the saturated span: V(u) = sigma_bar u + c_bar.
    let c_bar = d3.eval(lay.gamma) - sigma_bar * lay.gamma;
    let excess = |lam: f64, lo: f64, hi: f64| {
        let d = DegenerateFamilySpec { lambda: lam, ..s }.diffusivity4();
        (1..1000).map(|i| lo + (hi - lo) * i as f64 / 1000.0).map(|u| d.eval(u) - sigma_bar * u - c_bar).fold(f64::MIN, f64::max)
    };
    assert!(excess(0.01, lay.gamma, lay.alpha) <= 1e-12);
    assert!(excess(1.0, s.u2, s.u1) > 0.0);
}

#[test]
fn bounded_preset_is_pushed_and_attained() {
    let lm = LoadedModel::from_config(preset_config("bounded").unwrap()).unwrap();
    let rep = speed_report(&lm.flux, &lm.reaction, TOL).unwrap();
    assert!((rep.sigma_s - frozen::SIGMA_S_BOUNDED).abs() < 2.0 * TOL);
    assert!(rep.sigma_s > rep.lower_bound + 0.1);
    assert_eq!(rep.attainment_hint, AttainmentHint::Attained);
}
