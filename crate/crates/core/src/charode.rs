//! The constant-coefficient ODE
//!
//! ```text
//! y''' + lambda p1 y'' + lambda^2 p2 y' + lambda^3 p3 y = 0
//! ```
//!
//! whose solutions are combinations of `exp(omega_j lambda x)` with `omega_j`
//! the roots of `w^3 + p1 w^2 + p2 w + p3`. This module builds the
//! fundamental system normalized by `y_k^(j-1)(0) = delta_kj`, its boundary
//! values at `x = 0` and `x = 1`, and the 20 third-order minors of that
//! boundary-value matrix.

use serde::{Deserialize, Serialize};

use crate::complexalg::{solve_cubic, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::pluecker::{TripleIndex, MINOR_COUNT};

/// Relative separation below which two characteristic roots count as equal.
pub const ROOT_SEPARATION: f64 = 1e-8;

/// Smallest admissible `|lambda|`.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Largest real exponent we let reach `exp`.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemCoefficients {
    pub p1: Complex,
    pub p2: Complex,
    pub p3: Complex,
}

impl ProblemCoefficients {
    pub fn new(p1: Complex, p2: Complex, p3: Complex) -> Self {
        Self { p1, p2, p3 }
    }

    pub fn is_finite(&self) -> bool {
        [self.p1, self.p2, self.p3].iter().all(|z| z.is_finite())
    }

    /// Monic cubic with roots `omega`.
    pub fn from_roots(omega: [Complex; 3]) -> Self {
        let [a, b, c] = omega;
        Self {
            p1: -(a + b + c),
            p2: a * b + a * c + b * c,
            p3: -(a * b * c),
        }
    }
}

/// Roots of the characteristic cubic in lexicographic (re, im) order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoots {
    omega: [Complex; 3],
}

impl CharacteristicRoots {
    pub fn omega(&self) -> [Complex; 3] {
        self.omega
    }

    fn min_separation(omega: &[Complex; 3]) -> f64 {
        let d01 = (omega[0] - omega[1]).norm();
        let d02 = (omega[0] - omega[2]).norm();
        let d12 = (omega[1] - omega[2]).norm();
        d01.min(d02).min(d12)
    }
}

pub fn characteristic_roots(p: &ProblemCoefficients) -> Result<CharacteristicRoots> {
    if !p.is_finite() {
        return Err(Error::NonFinite("ODE coefficients".into()));
    }
    let omega = solve_cubic(p.p1, p.p2, p.p3);
    let scale = omega.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let separation = CharacteristicRoots::min_separation(&omega);
    if scale == 0.0 || separation < ROOT_SEPARATION * scale {
        return Err(Error::RepeatedRoots { separation });
    }
    Ok(CharacteristicRoots { omega })
}

/// A signed partial sum `sum_{i in subset} sign_i omega_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedSubset {
    /// 1-based root indices, ascending.
    pub subset: Vec<usize>,
    pub signs: Vec<i8>,
    pub value: Complex,
}

/// Outcome of the uniqueness hypotheses on the characteristic roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub roots: [Complex; 3],
    pub condition1_ok: bool,
    pub violating_combination: Option<SignedSubset>,
    pub combinations_checked: usize,
    pub p2_nonzero: bool,
    pub p1_nonzero: bool,
    pub p3_nonzero: bool,
    pub tolerance_used: f64,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.condition1_ok && self.p2_nonzero && self.p1_nonzero && self.p3_nonzero
    }
}

/// Every nonempty subset of {1, 2, 3} with every sign pattern (26 in all),
/// subsets in bitmask order, `+` before `-`.
pub fn signed_subsets(omega: &[Complex; 3]) -> Vec<SignedSubset> {
    let mut out = Vec::with_capacity(26);
    for mask in 1u8..8 {
        let subset: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let k = subset.len();
        for pattern in 0u8..(1 << k) {
            let signs: Vec<i8> = (0..k)
                .map(|b| if pattern & (1 << b) == 0 { 1 } else { -1 })
                .collect();
            let value = subset
                .iter()
                .zip(&signs)
                .map(|(&i, &s)| omega[i] * f64::from(s))
                .sum();
            out.push(SignedSubset {
                subset: subset.iter().map(|i| i + 1).collect(),
                signs,
                value,
            });
        }
    }
    out
}

pub fn check_theorem1(p: &ProblemCoefficients, tol: f64) -> Result<ConditionReport> {
    let roots = characteristic_roots(p)?;
    let combos = signed_subsets(&roots.omega);
    let combinations_checked = combos.len();
    let violating_combination = combos.into_iter().find(|c| c.value.norm() <= tol);
    Ok(ConditionReport {
        roots: roots.omega,
        condition1_ok: violating_combination.is_none(),
        violating_combination,
        combinations_checked,
        p2_nonzero: p.p2.norm() > tol,
        p1_nonzero: p.p1.norm() > tol,
        p3_nonzero: p.p3.norm() > tol,
        tolerance_used: tol,
    })
}

/// `y_k(x) = sum_j coeffs[k][j] exp(rates[j] x)` with `rates[j] = omega_j lambda`.
#[derive(Clone, Debug)]
pub struct FundamentalSystem {
    pub lambda: Complex,
    pub rates: [Complex; 3],
    pub coeffs: [[Complex; 3]; 3],
}

impl FundamentalSystem {
    pub fn new(p: &ProblemCoefficients, lambda: Complex) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::NonFinite("spectral parameter".into()));
        }
        if lambda.norm() <= LAMBDA_FLOOR {
            return Err(Error::LambdaTooSmall { lambda });
        }
        let omega = characteristic_roots(p)?.omega;
        let rates = omega.map(|w| w * lambda);
        for r in rates {
            if r.re > EXPONENT_LIMIT {
                return Err(Error::ExponentOverflow {
                    lambda,
                    exponent: r.re,
                });
            }
        }
        // Lagrange basis polynomials in t on the nodes r_j: the coefficient
        // of t^(k) in L_j is the weight of exp(r_j x) in y_(k+1).
        let mut coeffs = [[Complex::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            let a = rates[(j + 1) % 3];
            let b = rates[(j + 2) % 3];
            let den = (rates[j] - a) * (rates[j] - b);
            coeffs[0][j] = a * b / den;
            coeffs[1][j] = -(a + b) / den;
            coeffs[2][j] = Complex::new(1.0, 0.0) / den;
        }
        Ok(Self {
            lambda,
            rates,
            coeffs,
        })
    }

    /// `d^order/dx^order y_k` at `x`, `k` zero-based.
    pub fn eval(&self, k: usize, x: f64, order: u32) -> Complex {
        (0..3)
            .map(|j| self.coeffs[k][j] * self.rates[j].powu(order) * (self.rates[j] * x).exp())
            .sum()
    }
}

/// Boundary values of the normalized fundamental system.
///
/// Row `k` is `(y_k(0), y_k'(0), y_k''(0), y_k(1), y_k'(1), y_k''(1))`.
#[derive(Clone, Debug)]
pub struct BoundaryValues {
    pub z: CMatrix,
    pub lambda: Complex,
}

pub fn boundary_values(p: &ProblemCoefficients, lambda: Complex) -> Result<BoundaryValues> {
    let fs = FundamentalSystem::new(p, lambda)?;
    let mut z = CMatrix::zeros(3, 6);
    for k in 0..3 {
        z[(k, k)] = Complex::new(1.0, 0.0);
        for m in 0..3u32 {
            z[(k, 3 + m as usize)] = fs.eval(k, 1.0, m);
        }
    }
    Ok(BoundaryValues { z, lambda })
}

/// The 20 third-order minors `Z_ijk(lambda)` of the boundary-value matrix,
/// in canonical triple order.
///
/// Row-reducing the boundary-value matrix gives `[V | E V]` with
/// `V[j] = (1, r_j, r_j^2)` and `E = diag(exp(r_j))`, scaled by `1 / det V`.
/// A Laplace expansion over the left/right column split then turns each minor
/// into at most three terms with distinct exponentials, avoiding the
/// cancellation a direct 3x3 determinant of the boundary values suffers once
/// `|lambda|` is large.
pub fn boundary_minors(p: &ProblemCoefficients, lambda: Complex) -> Result<[Complex; MINOR_COUNT]> {
    let fs = FundamentalSystem::new(p, lambda)?;
    let r = fs.rates;
    let positive: f64 = r.iter().map(|x| x.re.max(0.0)).sum();
    if positive > EXPONENT_LIMIT {
        return Err(Error::ExponentOverflow {
            lambda,
            exponent: positive,
        });
    }
    let poly = r.map(|x| [Complex::new(1.0, 0.0), x, x * x]);
    let exps = r.map(|x| x.exp());
    let vandermonde = (r[1] - r[0]) * (r[2] - r[0]) * (r[2] - r[1]);

    let mut out = [Complex::new(0.0, 0.0); MINOR_COUNT];
    for (slot, triple) in out.iter_mut().zip(TripleIndex::all()) {
        let cols = triple.zero_based();
        let left: Vec<usize> = cols.iter().copied().filter(|&c| c < 3).collect();
        let right: Vec<usize> = cols.iter().copied().filter(|&c| c >= 3).map(|c| c - 3).collect();
        let mut acc = Complex::new(0.0, 0.0);
        for left_rows in row_subsets(left.len()) {
            let right_rows: Vec<usize> = (0..3).filter(|j| !left_rows.contains(j)).collect();
            let row_sum: usize = left_rows.iter().map(|j| j + 1).sum();
            let col_sum: usize = (1..=left.len()).sum();
            let sign = if (row_sum + col_sum).is_multiple_of(2) { 1.0 } else { -1.0 };
            let dl = small_det(&poly, &left_rows, &left);
            let dr = small_det(&poly, &right_rows, &right);
            let e: Complex = right_rows.iter().map(|&j| exps[j]).product();
            acc += dl * dr * e * sign;
        }
        *slot = acc / vandermonde;
    }
    Ok(out)
}

fn row_subsets(size: usize) -> Vec<Vec<usize>> {
    match size {
        0 => vec![vec![]],
        1 => vec![vec![0], vec![1], vec![2]],
        2 => vec![vec![0, 1], vec![0, 2], vec![1, 2]],
        _ => vec![vec![0, 1, 2]],
    }
}

fn small_det(poly: &[[Complex; 3]; 3], rows: &[usize], cols: &[usize]) -> Complex {
    let at = |i: usize, j: usize| poly[rows[i]][cols[j]];
    match rows.len() {
        0 => Complex::new(1.0, 0.0),
        1 => at(0, 0),
        2 => at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0),
        _ => {
            let m = [
                [at(0, 0), at(0, 1), at(0, 2)],
                [at(1, 0), at(1, 1), at(1, 2)],
                [at(2, 0), at(2, 1), at(2, 2)],
            ];
            crate::complexalg::det3_rows(&m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexalg::det3;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn worked_example() -> ProblemCoefficients {
        ProblemCoefficients::new(c(-3.0, -3.0), c(-2.0, 9.0), c(6.0, 0.0))
    }

    #[test]
    fn roots_of_worked_example() {
        let w = characteristic_roots(&worked_example()).unwrap().omega();
        assert!((w[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((w[1] - c(0.0, 2.0)).norm() < 1e-12);
        assert!((w[2] - c(3.0, 0.0)).norm() < 1e-12);

        let w = characteristic_roots(&ProblemCoefficients::new(c(-6.0, 0.0), c(11.0, 0.0), c(-6.0, 0.0)))
            .unwrap()
            .omega();
        assert!((w[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn double_root_is_rejected() {
        let p = ProblemCoefficients::new(c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!(matches!(characteristic_roots(&p), Err(Error::RepeatedRoots { .. })));
        assert!(matches!(
            boundary_values(&p, c(1.0, 0.0)),
            Err(Error::RepeatedRoots { .. })
        ));
    }

    #[test]
    fn theorem1_worked_example_passes() {
        let rep = check_theorem1(&worked_example(), 1e-8).unwrap();
        assert_eq!(rep.combinations_checked, 26);
        assert!(rep.condition1_ok && rep.p2_nonzero && rep.p1_nonzero && rep.p3_nonzero);
        assert!(rep.violating_combination.is_none());
    }

    #[test]
    fn theorem1_planted_violation() {
        let p = ProblemCoefficients::new(c(-2.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0));
        let rep = check_theorem1(&p, 1e-8).unwrap();
        assert!(!rep.condition1_ok);
        let witness = rep.violating_combination.unwrap();
        // roots sorted: -1, 1, 2
        assert_eq!(witness.subset, vec![1, 2]);
        assert_eq!(witness.signs, vec![1, 1]);
        assert!(witness.value.norm() < 1e-12);
    }

    #[test]
    fn theorem1_p2_zero() {
        let p = ProblemCoefficients::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let rep = check_theorem1(&p, 1e-8).unwrap();
        assert!(!rep.p2_nonzero);
        assert!(rep.p1_nonzero && rep.p3_nonzero);
    }

    #[test]
    fn worked_example_coefficients() {
        let p = worked_example();
        for lambda in [c(1.0, 0.0), c(-3.5, 0.7)] {
            let fs = FundamentalSystem::new(&p, lambda).unwrap();
            // node j = 0 is omega = i
            assert!((fs.coeffs[0][0] - c(1.8, 0.6)).norm() < 1e-13);
            assert!((fs.coeffs[0][1] - c(-9.0 / 13.0, -6.0 / 13.0)).norm() < 1e-13);
            assert!((fs.coeffs[0][2] - c(-7.0 / 65.0, -9.0 / 65.0)).norm() < 1e-13);
            assert!((fs.coeffs[1][0] * lambda - c(-0.9, 0.7)).norm() < 1e-13);
            assert!((fs.coeffs[1][2] * lambda - c(27.0 / 130.0, -21.0 / 130.0)).norm() < 1e-13);
            assert!((fs.coeffs[2][0] * lambda * lambda - c(0.1, -0.3)).norm() < 1e-13);
            assert!((fs.coeffs[2][1] * lambda * lambda - c(-2.0 / 13.0, 3.0 / 13.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn left_block_is_identity() {
        let bv = boundary_values(&worked_example(), c(2.5, -1.0)).unwrap();
        for k in 0..3 {
            for m in 0..3 {
                let want = if k == m { 1.0 } else { 0.0 };
                assert_eq!(bv.z[(k, m)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn small_lambda_and_overflow_are_rejected() {
        let p = worked_example();
        assert!(matches!(
            boundary_values(&p, c(1e-13, 0.0)),
            Err(Error::LambdaTooSmall { .. })
        ));
        assert!(matches!(
            boundary_values(&p, c(300.0, 0.0)),
            Err(Error::ExponentOverflow { .. })
        ));
        // each exponent is below the limit but their sum is not
        let lambda = c(200.0, -150.0);
        assert!(boundary_values(&p, lambda).is_ok());
        assert!(matches!(
            boundary_minors(&p, lambda),
            Err(Error::ExponentOverflow { .. })
        ));
    }

    #[test]
    fn minors_match_direct_determinants_for_moderate_lambda() {
        let p = worked_example();
        let lambda = c(0.8, 0.3);
        let bv = boundary_values(&p, lambda).unwrap();
        let z = boundary_minors(&p, lambda).unwrap();
        for (t, zt) in TripleIndex::all().zip(z) {
            let direct = det3(&bv.z.select_columns(&t.zero_based())).unwrap();
            assert!((direct - zt).norm() < 1e-12 * (1.0 + direct.norm()), "{t}");
        }
        assert!((z[0] - c(1.0, 0.0)).norm() < 1e-14);
        // Z_456 is the Wronskian-like product exp(r1 + r2 + r3)
        let fs = FundamentalSystem::new(&p, lambda).unwrap();
        let e: Complex = fs.rates.iter().sum::<Complex>().exp();
        assert!((z[19] - e).norm() < 1e-12 * e.norm());
    }
}
