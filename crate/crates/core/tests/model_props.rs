use proptest::prelude::*;
use satwave::families::{fisher, make_example, make_example4, DegenerateFamilySpec};
use satwave::model::{Diffusivity, Phi, Poly};
use satwave::tolerances::TOL_G;
use satwave::{lower_speed_bound, preset_config, FluxModel, LoadedModel, ModelError, ReactionModel};

fn builtin_fluxes() -> Vec<(&'static str, FluxModel)> {
    let spec = DegenerateFamilySpec::default();
    let mut out = vec![
        ("linear", FluxModel::linear(1.3)),
        ("ratio-p", FluxModel::separable(Diffusivity::Poly(Poly::new(0.0, vec![0.2, 1.0])), Phi::RatioP(3.0))),
        ("atan", FluxModel::separable(Diffusivity::constant(0.7), Phi::Atan)),
        ("bounded", LoadedModel::from_config(preset_config("bounded").unwrap()).unwrap().flux),
        ("viscous", FluxModel::separable(Diffusivity::constant(1.0), Phi::RatioP(2.0)).with_viscosity(0.1)),
        ("example4", make_example4(&DegenerateFamilySpec { lambda: 0.5, ..spec }).unwrap().0),
    ];
    for n in 1..=3 {
        out.push(("example", make_example(n, &spec).unwrap().0));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fluxes_are_odd(u in 0.0f64..=1.0, s in -50.0f64..50.0) {
        for (name, m) in builtin_fluxes() {
            let (p, q) = (m.a(u, s), m.a(u, -s));
            prop_assert!((p + q).abs() <= 1e-12 * (1.0 + p.abs()), "{name}: a({u},{s}) = {p}, a({u},-{s}) = {q}");
        }
    }

    #[test]
    fn inversion_round_trips(u in 0.0f64..=1.0, frac in 0.0f64..0.99) {
        for (name, m) in builtin_fluxes() {
            if m.is_td(u) {
                continue;
            }
            let ap = m.a_plus(u);
            let v = if ap.is_finite() { frac * ap } else { 10.0 * frac };
            if v <= 0.0 {
                continue;
            }
            let s = m.invert_flux(u, v).unwrap();
            prop_assert!((m.a(u, s) - v).abs() <= TOL_G, "{name}: u={u} v={v} s={s}");
        }
    }

    #[test]
    fn viscosity_is_over_elliptic(u in 0.0f64..=1.0, s in -50.0f64..50.0, eps in 1e-3f64..1.0) {
        for (name, m) in builtin_fluxes() {
            let mv = m.with_viscosity(eps);
            prop_assert!(mv.a(u, s) * s >= eps * s * s * (1.0 - 1e-12), "{name}");
        }
    }
}

#[test]
fn h_reciprocal_is_nonincreasing_in_flow() {
    for (name, m) in builtin_fluxes() {
        for i in 0..=40 {
            let u = i as f64 / 40.0;
            let ap = m.a_plus(u);
            let top = if ap.is_finite() { 1.2 * ap } else { 20.0 };
            let mut prev = f64::INFINITY;
            for j in 1..=400 {
                let h = m.h_reciprocal(u, top * j as f64 / 400.0);
                assert!(h <= prev + 1e-12, "{name}: u={u} j={j} {h} > {prev}");
                prev = h;
            }
        }
    }
}

#[test]
fn viscous_lower_bound_for_linear_flux() {
    for (d, k, eps) in [(1.0, 1.0, 0.1), (0.25, 4.0, 0.5), (3.0, 0.2, 1e-3)] {
        let (m, r) = fisher(d, k);
        let got = lower_speed_bound(&m.with_viscosity(eps), &r).unwrap();
        let want = 2.0 * ((d + eps) * k).sqrt();
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }
    let r = ReactionModel::logistic(2.0);
    assert!(matches!(lower_speed_bound(&FluxModel::linear(0.0), &r), Err(ModelError::Degenerate { .. })));
}
