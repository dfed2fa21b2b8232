//! Grid-based classification of a flux against the structural hypotheses.

use serde::{Deserialize, Serialize};

use super::flux::FluxModel;
use super::phi::Phi;
use super::ModelError;
use crate::model::diffusivity::Diffusivity;
use crate::tolerances::{MIN_CLASSIFY_GRID, TOL_ODD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxClassification {
    /// `da/ds > 0` at every sample off `L_td`.
    pub regular: bool,
    /// `a_+` continuous on `[0, 1]` (jumps do not shrink under refinement).
    pub a_plus_continuous: bool,
    /// `(a_bar, a_tilde)` with `|a| <= a_bar |s| + a_tilde`.
    pub linear_growth: Option<(f64, f64)>,
    /// `(k1, k2)` with `k1 s^2 <= a s <= k2 s^2`.
    pub elliptic: Option<(f64, f64)>,
    /// `k1` with `k1 s^2 <= a s`.
    pub over_elliptic: Option<f64>,
    pub ultra_degenerate: bool,
    pub l_td: Vec<[f64; 2]>,
    /// Bound on `|da/ds|`.
    pub m_bound: Option<f64>,
    /// Whether `a_+ = +inf` at every sampled level.
    pub a_plus_unbounded: bool,
}

/// Ratio bounds `(min a/s, max a/s)` known from the model structure.
fn structural_ratio_bounds(m: &FluxModel) -> Option<(f64, Option<f64>)> {
    if let Some((eps, base)) = m.viscosity() {
        let (k1, k2) = structural_ratio_bounds(base).unwrap_or((0.0, None));
        return Some((k1 + eps, k2.map(|k| k + eps)));
    }
    if let Some((d, phi)) = m.separable_parts() {
        if phi != Phi::Linear {
            return Some((0.0, None));
        }
        return Some(match d {
            Diffusivity::Poly(p) if p.coeffs.len() <= 1 => {
                let c = p.eval(0.0);
                (c, Some(c))
            }
            _ => {
                let vals: Vec<f64> = (0..=2000).map(|i| d.eval(i as f64 / 2000.0)).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, Some(hi))
            }
        });
    }
    if m.kind_hint() == super::flux::KindHint::Linear {
        let d = m.da_ds(0.0, 0.0);
        return Some((d, Some(d)));
    }
    None
}

/// Samples `m` on a `grid x grid` lattice of `u in [0, 1]` and `s in [1e-4, 1e4]`.
pub fn classify_flux(m: &FluxModel, grid: usize) -> Result<FluxClassification, ModelError> {
    if grid < MIN_CLASSIFY_GRID {
        return Err(ModelError::InvalidGrid { requested: grid, minimum: MIN_CLASSIFY_GRID });
    }
    let us: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let ss: Vec<f64> = (0..grid).map(|j| 10f64.powf(-4.0 + 8.0 * j as f64 / (grid - 1) as f64)).collect();
    let s_cut = ss[grid - 1] / 100.0;

    let mut regular = true;
    let mut a_plus_unbounded = true;
    let mut min_ratio = f64::INFINITY;
    let mut min_ratio_cut = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut max_ratio_cut = 0.0f64;
    let mut growth_hi = 0.0f64;
    let mut growth_hi_cut = 0.0f64;
    let mut growth_lo = 0.0f64;
    let mut max_slope = 0.0f64;
    let mut max_slope_cut = 0.0f64;
    let mut omega_finite = false;

    for &u in &us {
        let omega = m.omega_plus(u);
        omega_finite |= omega.is_finite();
        if m.a_plus(u).is_finite() {
            a_plus_unbounded = false;
        }
        let td = m.is_td(u);
        max_slope = max_slope.max(m.da_ds(u, 0.0).abs());
        max_slope_cut = max_slope_cut.max(m.da_ds(u, 0.0).abs());
        for &s in ss.iter().filter(|&&s| s < omega) {
            let a = m.a(u, s);
            let am = m.a(u, -s);
            if (a + am).abs() > TOL_ODD * (1.0 + a.abs()) {
                return Err(ModelError::SymmetryViolation { u, s, residual: (a + am).abs() });
            }
            let slope = m.da_ds(u, s);
            if !td && !(slope > 0.0) {
                regular = false;
            }
            max_slope = max_slope.max(slope.abs());
            let ratio = a / s;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            if s >= 1.0 {
                growth_hi = growth_hi.max(ratio);
            } else {
                growth_lo = growth_lo.max(a.abs());
            }
            if s <= s_cut {
                min_ratio_cut = min_ratio_cut.min(ratio);
                max_ratio_cut = max_ratio_cut.max(ratio);
                max_slope_cut = max_slope_cut.max(slope.abs());
                if s >= 1.0 {
                    growth_hi_cut = growth_hi_cut.max(ratio);
                }
            }
        }
    }

    let stable = |full: f64, cut: f64| full <= 1.01 * cut + 1e-12;
    let linear_growth = if !omega_finite && stable(growth_hi, growth_hi_cut) {
        Some((growth_hi.max(1e-300), growth_lo.max(1e-300)))
    } else {
        None
    };
    let m_bound = if stable(max_slope, max_slope_cut) { Some(max_slope) } else { None };

    let (over_elliptic, elliptic) = if !a_plus_unbounded {
        (None, None)
    } else {
        match structural_ratio_bounds(m) {
            Some((k1, k2)) => {
                let k1 = if k1 > 0.0 && min_ratio >= k1 * (1.0 - 1e-9) { Some(k1) } else { None };
                let k2 = k2.filter(|&k| max_ratio <= k * (1.0 + 1e-9));
                (k1, k1.zip(k2))
            }
            None => {
                let k1 = if min_ratio > 1e-9 && min_ratio >= 0.99 * min_ratio_cut { Some(min_ratio) } else { None };
                let k2 = if stable(max_ratio, max_ratio_cut) { Some(max_ratio) } else { None };
                (k1, k1.zip(k2))
            }
        }
    };

    let a_plus_continuous = if a_plus_unbounded {
        true
    } else {
        let jump = |n: usize| -> Option<f64> {
            let mut worst = 0.0f64;
            let mut prev = m.a_plus(0.0);
            for i in 1..=n {
                let cur = m.a_plus(i as f64 / n as f64);
                if prev.is_finite() != cur.is_finite() {
                    return None;
                }
                if cur.is_finite() {
                    worst = worst.max((cur - prev).abs());
                }
                prev = cur;
            }
            Some(worst)
        };
        match (jump(grid), jump(4 * grid)) {
            (Some(coarse), Some(fine)) => fine <= 0.6 * coarse || fine <= 1e-9,
            _ => false,
        }
    };

    let l_td = m.td_intervals().to_vec();
    Ok(FluxClassification {
        regular,
        a_plus_continuous,
        linear_growth,
        elliptic,
        over_elliptic,
        ultra_degenerate: !l_td.is_empty(),
        l_td,
        m_bound,
        a_plus_unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::diffusivity::{Piece, Poly};
    use crate::model::flux::FluxFunction;
    use std::sync::Arc;

    #[test]
    fn linear_is_elliptic() {
        let c = classify_flux(&FluxModel::linear(2.0), 64).unwrap();
        assert_eq!(c.elliptic, Some((2.0, 2.0)));
        assert_eq!(c.over_elliptic, Some(2.0));
        assert!(c.regular && c.a_plus_continuous && c.l_td.is_empty() && !c.ultra_degenerate);
        assert_eq!(c.m_bound, Some(2.0));
    }

    #[test]
    fn bounded_separable_has_linear_growth_only() {
        let m = FluxModel::separable(Diffusivity::constant(0.5), Phi::RatioP(2.0));
        let c = classify_flux(&m, 64).unwrap();
        assert!(c.over_elliptic.is_none() && c.elliptic.is_none());
        let (a_bar, a_tilde) = c.linear_growth.unwrap();
        assert!(a_bar > 0.0 && a_tilde > 0.0);
        assert!(c.regular && c.a_plus_continuous);
        let v = classify_flux(&m.with_viscosity(0.05), 64).unwrap();
        assert!((v.over_elliptic.unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn degenerate_interval_detected() {
        let d = Diffusivity::Piecewise(vec![
            Piece { lo: 0.0, hi: 0.3, poly: Poly::power(1.0, 0.3, 2) },
            Piece { lo: 0.3, hi: 0.6, poly: Poly::zero() },
            Piece { lo: 0.6, hi: 1.0, poly: Poly::power(1.0, 0.6, 2) },
        ]);
        let c = classify_flux(&FluxModel::separable(d, Phi::RatioP(2.0)), 64).unwrap();
        assert!(c.ultra_degenerate);
        assert_eq!(c.l_td, vec![[0.3, 0.6]]);
        assert!(c.regular, "levels off L_td keep a positive slope");
    }

    #[test]
    fn asymmetric_flux_is_rejected() {
        struct Skew;
        impl FluxFunction for Skew {
            fn a(&self, _u: f64, s: f64) -> f64 {
                s + 0.1 * s * s
            }
            fn da_ds(&self, _u: f64, s: f64) -> f64 {
                1.0 + 0.2 * s
            }
            fn a_plus(&self, _u: f64) -> f64 {
                f64::INFINITY
            }
        }
        let err = classify_flux(&FluxModel::custom(Arc::new(Skew)), 64).unwrap_err();
        assert!(matches!(err, ModelError::SymmetryViolation { .. }));
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            classify_flux(&FluxModel::linear(1.0), 16),
            Err(ModelError::InvalidGrid { .. })
        ));
    }
}
