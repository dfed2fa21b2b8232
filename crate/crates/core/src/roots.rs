//! Scalar root finding for monotone maps.

/// Why a monotone inversion failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootFailure {
    /// The target is not reached before the domain bound.
    Unreachable,
    /// The function returned a non-finite value.
    NonFinite,
}

/// Solves `f(s) = target` for `s >= 0` where `f` is nondecreasing with `f(0) = 0 < target`.
///
/// The upper end grows geometrically from `guess` until `f(hi) > target` or `hi`
/// passes `s_max`. Inside the bracket a secant step is taken when it lands well
/// inside, bisection otherwise. Stops once `|f(s) - target| <= abs_tol` (capped
/// relative to the target so tiny flows keep full precision) or the bracket
/// collapses to a few ulps.
pub fn invert_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    guess: f64,
    s_max: f64,
    abs_tol: f64,
) -> Result<f64, RootFailure> {
    debug_assert!(target > 0.0);
    let tol = abs_tol.min(4.0 * f64::EPSILON * target.abs()).max(f64::MIN_POSITIVE);
    let mut lo = 0.0;
    let mut f_lo = -target;
    let mut hi = if guess.is_finite() && guess > 0.0 { guess } else { 1.0 };
    if hi >= s_max {
        hi = 0.5 * s_max;
    }
    let mut f_hi;
    loop {
        f_hi = f(hi) - target;
        if !f_hi.is_finite() {
            return Err(RootFailure::NonFinite);
        }
        if f_hi.abs() <= tol {
            return Ok(hi);
        }
        if f_hi > 0.0 {
            break;
        }
        lo = hi;
        f_lo = f_hi;
        if hi >= s_max * (1.0 - 1e-12) {
            return Err(RootFailure::Unreachable);
        }
        hi = (hi * 2.0).min(s_max * (1.0 - 1e-12));
        if hi > 1e300 {
            return Err(RootFailure::Unreachable);
        }
    }
    let mut prev_width = hi - lo;
    for _ in 0..400 {
        let width = hi - lo;
        let secant = lo - f_lo * width / (f_hi - f_lo);
        let use_secant = secant.is_finite()
            && secant > lo + 0.01 * width
            && secant < hi - 0.01 * width
            && width < 0.75 * prev_width;
        let mid = if use_secant { secant } else { lo + 0.5 * width };
        prev_width = width;
        let fm = f(mid) - target;
        if !fm.is_finite() {
            return Err(RootFailure::NonFinite);
        }
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if fm > 0.0 {
            hi = mid;
            f_hi = fm;
        } else {
            lo = mid;
            f_lo = fm;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(if f_hi.abs() < f_lo.abs() { hi } else { lo })
}

/// Bisection on a boolean predicate that is false at `lo` and true at `hi`.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Bisection for a sign change of `f` on `[a, b]`. Returns `None` when the signs agree.
pub fn bisect_sign<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_cubic() {
        let s = invert_increasing(|s| s * s * s + s, 10.0, 1.0, f64::INFINITY, 1e-12).unwrap();
        assert!((s * s * s + s - 10.0).abs() <= 1e-12);
    }

    #[test]
    fn keeps_relative_precision_for_tiny_targets() {
        let s = invert_increasing(|s| 3.0 * s, 3e-20, 1e-20, f64::INFINITY, 1e-12).unwrap();
        assert!((s - 1e-20).abs() <= 1e-33);
    }

    #[test]
    fn reports_saturation() {
        let r = invert_increasing(|s: f64| s.atan(), 2.0, 1.0, f64::INFINITY, 1e-12);
        assert_eq!(r, Err(RootFailure::Unreachable));
    }

    #[test]
    fn flat_then_steep_map() {
        let f = |s: f64| if s < 5.0 { 1e-3 * s } else { 5e-3 + (s - 5.0) * 100.0 };
        let s = invert_increasing(f, 1.0, 0.1, f64::INFINITY, 1e-12).unwrap();
        assert!((f(s) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sign_bisection_finds_sqrt2() {
        let r = bisect_sign(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect_sign(|x| x * x + 1.0, 0.0, 1.0, 1e-9).is_none());
    }
}
