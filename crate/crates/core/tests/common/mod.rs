#![allow(dead_code)]

pub mod dp45;

use bcrecon::{BoundaryMatrix, Complex, ProblemCoefficients};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// `y''' + lambda(-3-3i) y'' + lambda^2(-2+9i) y' + 6 lambda^3 y = 0`,
/// characteristic roots i, 2i, 3.
pub fn worked_problem() -> ProblemCoefficients {
    ProblemCoefficients::new(c(-3.0, -3.0), c(-2.0, 9.0), c(6.0, 0.0))
}

pub fn worked_boundary() -> BoundaryMatrix {
    BoundaryMatrix::from_real([
        [1.0, 1.0, 0.0, 0.5, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.5, 1.0, 0.0],
    ])
    .unwrap()
}

/// The published two-decimal eigenvalues of the worked example.
pub const PUBLISHED_EIGENVALUES: [(f64, f64); 19] = [
    (0.46, -0.12),
    (5.88, 3.86),
    (6.51, -0.55),
    (12.81, -0.56),
    (19.1, -0.56),
    (-4.27, 0.51),
    (-7.16, 1.06),
    (-10.54, 1.0),
    (-13.50, 1.32),
    (-19.81, 1.49),
    (-23.1, 1.41),
    (-26.11, 1.61),
    (-29.38, 1.54),
    (-32.41, 1.71),
    (-35.67, 1.64),
    (-38.7, 1.8),
    (-44.99, 1.87),
    (-48.23, 1.80),
    (-51.28, 1.93),
];

pub fn published_eigenvalues() -> Vec<Complex> {
    PUBLISHED_EIGENVALUES.iter().map(|&(re, im)| c(re, im)).collect()
}

pub fn unit_disc<R: Rng>(rng: &mut R) -> Complex {
    let r: f64 = rng.gen::<f64>().sqrt();
    Complex::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU)
}

/// Entries uniform in the unit disc; redrawn in the (measure-zero) event of
/// rank deficiency.
pub fn random_boundary<R: Rng>(rng: &mut R) -> BoundaryMatrix {
    loop {
        let rows: [[Complex; 6]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| unit_disc(rng)));
        if let Ok(a) = BoundaryMatrix::new(rows) {
            return a;
        }
    }
}

/// Roots uniform in the disc of radius 3, pairwise at least 0.3 apart.
pub fn random_problem<R: Rng>(rng: &mut R) -> ProblemCoefficients {
    loop {
        let w: [Complex; 3] = std::array::from_fn(|_| unit_disc(rng) * 3.0);
        let sep = (w[0] - w[1]).norm().min((w[0] - w[2]).norm()).min((w[1] - w[2]).norm());
        if sep > 0.3 {
            return ProblemCoefficients::from_roots(w);
        }
    }
}

/// Relative disagreement between the closed-form boundary values at `x = 1`
/// and adaptive integration, per fundamental solution.
pub fn integration_error(p: &ProblemCoefficients, lambda: Complex) -> f64 {
    let z = bcrecon::boundary_values(p, lambda).unwrap().z;
    let mut worst = 0.0f64;
    for k in 0..3 {
        let mut y0 = [c(0.0, 0.0); 3];
        y0[k] = c(1.0, 0.0);
        let y1 = dp45::integrate(p, lambda, y0, 1e-12);
        let scale = (0..3).map(|m| z[(k, 3 + m)].norm()).fold(1.0, f64::max);
        for m in 0..3 {
            worst = worst.max((y1[m] - z[(k, 3 + m)]).norm() / scale);
        }
    }
    worst
}

/// Number of zeros of `Delta` inside the rectangle, by the argument
/// principle with adaptive subdivision of the contour.
pub fn winding_count(
    p: &ProblemCoefficients,
    a: &BoundaryMatrix,
    re: (f64, f64),
    im: (f64, f64),
) -> i64 {
    let f = |z: Complex| bcrecon::char_det(p, a, z).unwrap();
    let corners = [c(re.0, im.0), c(re.1, im.0), c(re.1, im.1), c(re.0, im.1)];
    let mut total = 0.0;
    for i in 0..4 {
        let (za, zb) = (corners[i], corners[(i + 1) % 4]);
        let n = ((zb - za).norm() / 0.05).ceil() as usize;
        for s in 0..n {
            let t0 = s as f64 / n as f64;
            let t1 = (s + 1) as f64 / n as f64;
            total += arg_change(&f, za + (zb - za) * t0, za + (zb - za) * t1, 0);
        }
    }
    (total / std::f64::consts::TAU).round() as i64
}

fn arg_change(f: &dyn Fn(Complex) -> Complex, a: Complex, b: Complex, depth: u32) -> f64 {
    let d = (f(b) / f(a)).arg();
    if d.abs() < 0.5 || depth > 40 {
        return d;
    }
    let mid = (a + b) * 0.5;
    arg_change(f, a, mid, depth + 1) + arg_change(f, mid, b, depth + 1)
}
