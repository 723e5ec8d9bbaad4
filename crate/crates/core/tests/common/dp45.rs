//! Adaptive Dormand–Prince 5(4) integration of
//! `y''' + lambda p1 y'' + lambda^2 p2 y' + lambda^3 p3 y = 0`,
//! an independent check on the closed-form fundamental system.

use bcrecon::{Complex, ProblemCoefficients};

type State = [Complex; 3];

fn rhs(p: &ProblemCoefficients, lambda: Complex, y: &State) -> State {
    let l2 = lambda * lambda;
    [y[1], y[2], -(lambda * p.p1 * y[2] + l2 * p.p2 * y[1] + l2 * lambda * p.p3 * y[0])]
}

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// `(y, y', y'')` at `x = 1` from the given initial state at `x = 0`.
pub fn integrate(p: &ProblemCoefficients, lambda: Complex, y0: State, rtol: f64) -> State {
    let mut y = y0;
    let mut x = 0.0f64;
    let mut h = 1e-3;
    let mut k1 = rhs(p, lambda, &y);
    let mut steps = 0usize;
    while x < 1.0 {
        steps += 1;
        assert!(steps < 5_000_000, "integrator stalled at x = {x}");
        if x + h > 1.0 {
            h = 1.0 - x;
        }
        let k2 = rhs(p, lambda, &axpy(&y, &[(1.0 / 5.0, &k1)], h));
        let k3 = rhs(p, lambda, &axpy(&y, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)], h));
        let k4 = rhs(
            p,
            lambda,
            &axpy(&y, &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)], h),
        );
        let k5 = rhs(
            p,
            lambda,
            &axpy(
                &y,
                &[
                    (19372.0 / 6561.0, &k1),
                    (-25360.0 / 2187.0, &k2),
                    (64448.0 / 6561.0, &k3),
                    (-212.0 / 729.0, &k4),
                ],
                h,
            ),
        );
        let k6 = rhs(
            p,
            lambda,
            &axpy(
                &y,
                &[
                    (9017.0 / 3168.0, &k1),
                    (-355.0 / 33.0, &k2),
                    (46732.0 / 5247.0, &k3),
                    (49.0 / 176.0, &k4),
                    (-5103.0 / 18656.0, &k5),
                ],
                h,
            ),
        );
        let y5 = axpy(
            &y,
            &[
                (35.0 / 384.0, &k1),
                (500.0 / 1113.0, &k3),
                (125.0 / 192.0, &k4),
                (-2187.0 / 6784.0, &k5),
                (11.0 / 84.0, &k6),
            ],
            h,
        );
        let k7 = rhs(p, lambda, &y5);
        // difference between the 5th- and embedded 4th-order solutions
        let e = [
            (35.0 / 384.0 - 5179.0 / 57600.0, &k1),
            (500.0 / 1113.0 - 7571.0 / 16695.0, &k3),
            (125.0 / 192.0 - 393.0 / 640.0, &k4),
            (-2187.0 / 6784.0 + 92097.0 / 339200.0, &k5),
            (11.0 / 84.0 - 187.0 / 2100.0, &k6),
            (-1.0 / 40.0, &k7),
        ];
        let zero = [Complex::new(0.0, 0.0); 3];
        let err_vec = axpy(&zero, &e, h);
        let scale = y
            .iter()
            .chain(y5.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        let err = err_vec.iter().map(|v| v.norm()).fold(0.0, f64::max) / (rtol * scale);
        if err <= 1.0 {
            x += h;
            y = y5;
            k1 = k7;
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    y
}
