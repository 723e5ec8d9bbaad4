//! Small dense complex linear algebra.
//!
//! Everything here works on row-major [`CMatrix`] values of modest size (the
//! largest system the pipeline builds is a few hundred rows by 20 columns).
//! The SVD is a one-sided (Hestenes) Jacobi iteration, which keeps small
//! singular values accurate relative to the column scaling of the input.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

const SVD_MAX_SWEEPS: usize = 80;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                expected: "non-empty matrix".into(),
                found: format!("{rows}x{cols}"),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries for {rows}x{cols}", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[Complex]>>(rows: &[R]) -> Result<Self> {
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {ncols}"),
                found: "ragged rows".into(),
            });
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(rows.len(), ncols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Complex] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right operand", self.cols),
                found: format!("{}", rhs.rows),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                out[(r, k)] = self[(r, c)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;

    fn index(&self, (r, c): (usize, usize)) -> &Complex {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Lexicographic order on (re, im) used for every reported root list.
pub fn lexicographic(a: &Complex, b: &Complex) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn vector_norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `<a, b> = sum conj(a_i) b_i`.
pub fn inner(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn eval_monic_cubic(c2: Complex, c1: Complex, c0: Complex, w: Complex) -> Complex {
    ((w + c2) * w + c1) * w + c0
}

/// All three roots of `w^3 + c2 w^2 + c1 w + c0`, with multiplicity.
///
/// Cardano on the depressed cubic, taking the cube-root branch of larger
/// magnitude, then one guarded Newton step per root. Roots are returned in
/// lexicographic (re, im) order.
pub fn solve_cubic(c2: Complex, c1: Complex, c0: Complex) -> [Complex; 3] {
    let third = 1.0 / 3.0;
    let shift = c2 * third;
    // w = t - c2/3  gives  t^3 + p t + q = 0
    let p = c1 - c2 * c2 * third;
    let q = c2 * c2 * c2 * (2.0 / 27.0) - c2 * c1 * third + c0;

    let half_q = q * 0.5;
    let disc = (half_q * half_q + p * p * p / 27.0).sqrt();
    let u3_plus = -half_q + disc;
    let u3_minus = -half_q - disc;
    let u3 = if u3_plus.norm() >= u3_minus.norm() { u3_plus } else { u3_minus };

    let mut roots = if u3.norm() == 0.0 {
        // p = q = 0: triple root
        [-shift; 3]
    } else {
        let u = u3.powf(third);
        let rot = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let mut out = [Complex::new(0.0, 0.0); 3];
        let mut uk = u;
        for slot in out.iter_mut() {
            *slot = uk - p / (3.0 * uk) - shift;
            uk *= rot;
        }
        out
    };

    for w in roots.iter_mut() {
        let f = eval_monic_cubic(c2, c1, c0, *w);
        let df = (3.0 * *w + 2.0 * c2) * *w + c1;
        if df.norm() > 0.0 {
            let candidate = *w - f / df;
            let fc = eval_monic_cubic(c2, c1, c0, candidate);
            if fc.is_finite() && fc.norm() < f.norm() {
                *w = candidate;
            }
        }
    }
    roots.sort_by(lexicographic);
    roots
}

/// Determinant of a 3x3 block given as rows.
pub fn det3_rows(m: &[[Complex; 3]; 3]) -> Complex {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cofactor-expansion determinant of a 3x3 matrix.
pub fn det3(m: &CMatrix) -> Result<Complex> {
    if m.rows() != 3 || m.cols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: "3x3".into(),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let rows = [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ];
    Ok(det3_rows(&rows))
}

/// Singular value decomposition `A = U diag(s) V^*`.
///
/// `right_vectors` is the full `n x n` unitary factor, so for wide inputs the
/// trailing `n - m` columns span the structural nullspace; `singular_values`
/// has one entry per column of `A` (the trailing entries of a wide matrix are
/// roundoff-level). `left_vectors` is `m x min(m, n)`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub left_vectors: CMatrix,
    pub right_vectors: CMatrix,
}

impl SvdResult {
    /// `U_k diag(s_k) V_k^*` with `k = min(m, n)`.
    pub fn reconstruct(&self) -> CMatrix {
        let m = self.left_vectors.rows();
        let k = self.left_vectors.cols();
        let n = self.right_vectors.rows();
        let mut out = CMatrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                let mut acc = Complex::new(0.0, 0.0);
                for j in 0..k {
                    acc += self.left_vectors[(r, j)]
                        * self.singular_values[j]
                        * self.right_vectors[(c, j)].conj();
                }
                out[(r, c)] = acc;
            }
        }
        out
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    let m = a.rows();
    let n = a.cols();
    // Column-major working copies: w[j] is column j of A V.
    let mut w: Vec<Vec<Complex>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex::new(0.0, 0.0); n];
            e[j] = Complex::new(1.0, 0.0);
            e
        })
        .collect();

    let eps = f64::EPSILON;
    // Columns this small are roundoff; in a wide matrix they can never all be
    // made orthogonal to the rest, so they are left alone.
    let negligible = (eps * a.frobenius_norm()).powi(2).max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < SVD_MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&w[p], &w[q]);
                let g = gamma.norm();
                if alpha < negligible || beta < negligible {
                    continue;
                }
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase.conj() * s;
                let cp = phase.conj() * c;
                rotate_pair(&mut w, p, q, c, s, sp, cp);
                rotate_pair(&mut v, p, q, c, s, sp, cp);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence { sweeps });
    }

    let norms: Vec<f64> = w.iter().map(|col| vector_norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut right_vectors = CMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        for r in 0..n {
            right_vectors[(r, k)] = v[j][r];
        }
    }

    let k = m.min(n);
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let floor = (m.max(n) as f64) * eps * smax;
    let mut basis: Vec<Vec<Complex>> = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        if norms[j] > floor && norms[j] > 0.0 {
            basis.push(w[j].iter().map(|z| z / norms[j]).collect());
        } else {
            basis.push(Vec::new());
        }
    }
    complete_orthonormal(&mut basis, m);

    let mut left_vectors = CMatrix::zeros(m, k);
    for (c, col) in basis.iter().enumerate() {
        for r in 0..m {
            left_vectors[(r, c)] = col[r];
        }
    }

    Ok(SvdResult {
        singular_values,
        left_vectors,
        right_vectors,
    })
}

#[inline]
fn rotate_pair(
    cols: &mut [Vec<Complex>],
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    sp: Complex,
    cp: Complex,
) {
    let (head, tail) = cols.split_at_mut(q);
    let cp_col = &mut head[p];
    let cq_col = &mut tail[0];
    for (x, y) in cp_col.iter_mut().zip(cq_col.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = xp * c - sp * xq;
        *y = xp * s + cp * xq;
    }
}

/// Fill empty slots of `basis` with unit vectors orthogonal to the rest.
fn complete_orthonormal(basis: &mut [Vec<Complex>], dim: usize) {
    let mut candidate = 0usize;
    for slot in 0..basis.len() {
        if !basis[slot].is_empty() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![Complex::new(0.0, 0.0); dim];
            e[candidate] = Complex::new(1.0, 0.0);
            candidate += 1;
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for other in basis.iter().filter(|b| !b.is_empty()) {
                    let proj = inner(other, &e);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let nrm = vector_norm(&e);
            if nrm > 0.5 {
                basis[slot] = e.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}

/// Rotate `v` so its largest-magnitude entry (first one on ties) is real and
/// positive.
pub fn normalize_phase(v: &mut [Complex]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / best_mag;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[best] = Complex::new(v[best].norm(), 0.0);
    }
}

/// Approximate nullspace direction of `m` together with its rank-gap
/// diagnostic `max(s[n-2], floor) / max(s[n-1], floor)`.
#[derive(Clone, Debug)]
pub struct NullspaceVector {
    pub vector: Vec<Complex>,
    pub gap: f64,
    pub singular_values: Vec<f64>,
}

/// Right singular vector of the smallest singular value, unit norm and
/// phase-normalized.
pub fn nullspace_vector(m: &CMatrix) -> Result<NullspaceVector> {
    let n = m.cols();
    if n < 2 {
        return Err(Error::DimensionMismatch {
            expected: "at least 2 columns".into(),
            found: format!("{n}"),
        });
    }
    let dec = svd(m)?;
    let s = &dec.singular_values;
    let floor = machine_floor(s, m.rows(), n);
    let gap = s[n - 2].max(floor) / s[n - 1].max(floor);
    let mut vector = dec.right_vectors.column(n - 1);
    let nrm = vector_norm(&vector);
    for z in vector.iter_mut() {
        *z /= nrm;
    }
    normalize_phase(&mut vector);
    Ok(NullspaceVector {
        vector,
        gap,
        singular_values: dec.singular_values,
    })
}

/// Numerical-rank floor `max(m, n) * eps * s_max`, never below the smallest
/// positive normal number.
pub fn machine_floor(s: &[f64], rows: usize, cols: usize) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    ((rows.max(cols) as f64) * f64::EPSILON * smax).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn cubic_worked_example_roots() {
        let r = solve_cubic(c(-3.0, -3.0), c(-2.0, 9.0), c(6.0, 0.0));
        // sorted by re: i (0,1), 2i (0,2), 3
        assert!(close(r[0], c(0.0, 1.0), 1e-12), "{r:?}");
        assert!(close(r[1], c(0.0, 2.0), 1e-12), "{r:?}");
        assert!(close(r[2], c(3.0, 0.0), 1e-12), "{r:?}");
    }

    #[test]
    fn cubic_roots_of_unity() {
        let r = solve_cubic(c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
        let s3 = 3f64.sqrt() / 2.0;
        assert!(close(r[0], c(-0.5, -s3), 1e-14));
        assert!(close(r[1], c(-0.5, s3), 1e-14));
        assert!(close(r[2], c(1.0, 0.0), 1e-14));
    }

    #[test]
    fn cubic_real_factorization() {
        let r = solve_cubic(c(-6.0, 0.0), c(11.0, 0.0), c(-6.0, 0.0));
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!(close(*got, c(want, 0.0), 1e-12), "{r:?}");
        }
    }

    #[test]
    fn cubic_triple_and_double_roots() {
        // (w - 2)^3
        let r = solve_cubic(c(-6.0, 0.0), c(12.0, 0.0), c(-8.0, 0.0));
        for w in r {
            assert!(close(w, c(2.0, 0.0), 1e-5), "{r:?}");
        }
        // w^2 (w - 1)
        let r = solve_cubic(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(close(r[2], c(1.0, 0.0), 1e-12));
        assert!(r[0].norm() < 1e-7 && r[1].norm() < 1e-7);
    }

    #[test]
    fn det3_examples() {
        let id = CMatrix::identity(3);
        assert_eq!(det3(&id).unwrap(), c(1.0, 0.0));

        let two_equal = CMatrix::from_rows(&[
            [c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0)],
            [c(1.0, 2.0), c(3.0, 0.0), c(0.0, -1.0)],
            [c(5.0, 0.0), c(0.5, 0.5), c(2.0, 0.0)],
        ])
        .unwrap();
        assert!(det3(&two_equal).unwrap().norm() < 1e-14);

        let recovered = CMatrix::from_rows(&[
            [c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        assert_eq!(det3(&recovered).unwrap(), c(0.5, 0.0));

        assert!(matches!(
            det3(&CMatrix::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn svd_diagonal_and_unitary() {
        let d = CMatrix::from_rows(&[[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]])
            .unwrap();
        let s = svd(&d).unwrap().singular_values;
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);

        let h = 0.5f64.sqrt();
        let u = CMatrix::from_rows(&[[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]]).unwrap();
        let s = svd(&u).unwrap().singular_values;
        assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14, "{s:?}");
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nullspace_simple_cases() {
        let m = CMatrix::from_rows(&[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        let ns = nullspace_vector(&m).unwrap();
        assert!(close(ns.vector[0], c(0.0, 0.0), 1e-15));
        assert!(close(ns.vector[1], c(1.0, 0.0), 1e-15));
        assert!(ns.gap > 1e10);

        let wide = CMatrix::from_rows(&[[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let ns = nullspace_vector(&wide).unwrap();
        assert!((ns.gap - 1.0).abs() < 1e-12, "gap {}", ns.gap);
        assert!(ns.vector[0].norm() < 1e-15);
    }

    #[test]
    fn phase_normalization_makes_largest_entry_real_positive() {
        let mut v = vec![c(0.1, 0.2), c(0.0, -3.0), c(1.0, 1.0)];
        normalize_phase(&mut v);
        assert_eq!(v[1], c(3.0, 0.0));
        assert!((v[0].norm() - c(0.1, 0.2).norm()).abs() < 1e-15);
    }
}
