//! Dormand-Prince 5(4) steps for scalar equations `y' = F(x, y)`.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of one trial step.
#[derive(Clone, Copy, Debug)]
pub struct Trial {
    pub y: f64,
    /// Slope at the new point (first stage of the next step).
    pub dy: f64,
    /// Difference between the embedded 5th and 4th order solutions.
    pub err: f64,
}

/// One Dormand-Prince step from `(x, y)` with slope `dy0 = F(x, y)` over signed step `h`.
pub fn dopri_step<F: FnMut(f64, f64) -> f64>(f: &mut F, x: f64, y: f64, dy0: f64, h: f64) -> Trial {
    let k1 = dy0;
    let k2 = f(x + C2 * h, y + h * A21 * k1);
    let k3 = f(x + C3 * h, y + h * (A31 * k1 + A32 * k2));
    let k4 = f(x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(x + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(x + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(x + h, y_new);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Trial { y: y_new, dy: k7, err }
}

/// Classic fixed-step fourth-order Runge-Kutta step.
pub fn rk4_step<F: FnMut(f64, f64) -> f64>(f: &mut F, x: f64, y: f64, h: f64) -> f64 {
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(x + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Step size factor from a normalised error `err_norm` (accepted when `<= 1`).
pub fn step_factor(err_norm: f64) -> f64 {
    if err_norm == 0.0 {
        return 5.0;
    }
    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
}
