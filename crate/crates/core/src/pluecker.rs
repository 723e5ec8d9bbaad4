//! Third-order minors of 3x6 boundary matrices.
//!
//! The 20 minors `M_ijk` (columns `i < j < k`) are the Plücker coordinates of
//! the row span. Row operations scale all of them by one constant, so a
//! [`MinorVector`] is only meaningful up to a nonzero complex factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complexalg::{det3_rows, inner, svd, vector_norm, CMatrix, Complex};
use crate::error::{Error, Result};

pub const MINOR_COUNT: usize = 20;

/// Smallest-to-largest singular value ratio a boundary matrix must exceed.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Default relative deviation accepted by the reconstruct round trip.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Column triple `1 <= i < j < k <= 6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripleIndex {
    cols: [u8; 3],
}

const TRIPLES: [[u8; 3]; MINOR_COUNT] = [
    [1, 2, 3],
    [1, 2, 4],
    [1, 2, 5],
    [1, 2, 6],
    [1, 3, 4],
    [1, 3, 5],
    [1, 3, 6],
    [1, 4, 5],
    [1, 4, 6],
    [1, 5, 6],
    [2, 3, 4],
    [2, 3, 5],
    [2, 3, 6],
    [2, 4, 5],
    [2, 4, 6],
    [2, 5, 6],
    [3, 4, 5],
    [3, 4, 6],
    [3, 5, 6],
    [4, 5, 6],
];

impl TripleIndex {
    /// 1-based columns; must be strictly ascending within 1..=6.
    pub fn new(i: u8, j: u8, k: u8) -> Option<Self> {
        (1 <= i && i < j && j < k && k <= 6).then_some(Self { cols: [i, j, k] })
    }

    /// Canonical triples in lexicographic order.
    pub fn all() -> impl Iterator<Item = TripleIndex> {
        TRIPLES.iter().map(|&cols| TripleIndex { cols })
    }

    pub fn from_position(pos: usize) -> Option<Self> {
        TRIPLES.get(pos).map(|&cols| TripleIndex { cols })
    }

    /// Lexicographic rank among the 20 triples.
    pub fn position(&self) -> usize {
        TRIPLES
            .iter()
            .position(|t| *t == self.cols)
            .expect("TripleIndex is always canonical")
    }

    pub fn one_based(&self) -> [u8; 3] {
        self.cols
    }

    pub fn zero_based(&self) -> [usize; 3] {
        self.cols.map(|c| usize::from(c) - 1)
    }

    pub fn contains(&self, col: u8) -> bool {
        self.cols.contains(&col)
    }
}

impl fmt::Display for TripleIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.cols[0], self.cols[1], self.cols[2])
    }
}

impl std::str::FromStr for TripleIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .unwrap_or_default();
        match digits.as_slice() {
            [i, j, k] => TripleIndex::new(*i, *j, *k),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidSettings(format!("not a column triple: {s:?}")))
    }
}

/// 3x6 matrix of boundary-form coefficients, validated to have rank 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[Complex; 6]; 3]", into = "[[Complex; 6]; 3]")]
pub struct BoundaryMatrix {
    rows: [[Complex; 6]; 3],
}

impl BoundaryMatrix {
    pub fn new(rows: [[Complex; 6]; 3]) -> Result<Self> {
        if rows.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("boundary matrix".into()));
        }
        let m = CMatrix::from_rows(&rows)?;
        let s = svd(&m)?.singular_values;
        let ratio = if s[0] > 0.0 { s[2] / s[0] } else { 0.0 };
        if ratio <= RANK_TOLERANCE {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self { rows })
    }

    pub fn from_real(rows: [[f64; 6]; 3]) -> Result<Self> {
        Self::new(rows.map(|r| r.map(|x| Complex::new(x, 0.0))))
    }

    /// `[I_3 | 0]`: the three conditions `y(0) = y'(0) = y''(0) = 0`.
    pub fn initial_value() -> Self {
        let mut rows = [[Complex::new(0.0, 0.0); 6]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = Complex::new(1.0, 0.0);
        }
        Self { rows }
    }

    pub fn rows(&self) -> &[[Complex; 6]; 3] {
        &self.rows
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&self.rows).expect("3x6 rows")
    }

    /// `R * A` for a 3x3 `R`; fails if the product loses rank.
    pub fn left_multiply(&self, r: &[[Complex; 3]; 3]) -> Result<Self> {
        let mut out = [[Complex::new(0.0, 0.0); 6]; 3];
        for i in 0..3 {
            for c in 0..6 {
                out[i][c] = (0..3).map(|k| r[i][k] * self.rows[k][c]).sum();
            }
        }
        Self::new(out)
    }

    fn minor(&self, t: TripleIndex) -> Complex {
        let [a, b, c] = t.zero_based();
        let block = self.rows.map(|r| [r[a], r[b], r[c]]);
        det3_rows(&block)
    }
}

impl TryFrom<[[Complex; 6]; 3]> for BoundaryMatrix {
    type Error = Error;

    fn try_from(rows: [[Complex; 6]; 3]) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<BoundaryMatrix> for [[Complex; 6]; 3] {
    fn from(a: BoundaryMatrix) -> Self {
        a.rows
    }
}

/// The 20 minors in canonical triple order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorVector {
    m: [Complex; MINOR_COUNT],
}

impl MinorVector {
    pub fn new(m: [Complex; MINOR_COUNT]) -> Result<Self> {
        if m.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("minor vector".into()));
        }
        if m.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroMinorVector);
        }
        Ok(Self { m })
    }

    pub fn from_slice(m: &[Complex]) -> Result<Self> {
        let arr: [Complex; MINOR_COUNT] = m.try_into().map_err(|_| Error::DimensionMismatch {
            expected: format!("{MINOR_COUNT} minors"),
            found: format!("{}", m.len()),
        })?;
        Self::new(arr)
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.m
    }

    pub fn get(&self, t: TripleIndex) -> Complex {
        self.m[t.position()]
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.m)
    }

    /// Position of the largest-magnitude minor (first on ties).
    pub fn largest(&self) -> TripleIndex {
        let mut best = 0;
        for (i, z) in self.m.iter().enumerate() {
            if z.norm() > self.m[best].norm() {
                best = i;
            }
        }
        TripleIndex::from_position(best).expect("position < 20")
    }

    pub fn scaled(&self, factor: Complex) -> Result<Self> {
        Self::new(self.m.map(|z| z * factor))
    }

    /// Representative with `M_t = 1`.
    pub fn normalized_to(&self, t: TripleIndex) -> Result<Self> {
        let pivot = self.get(t);
        if pivot.norm() == 0.0 {
            return Err(Error::ZeroPivot {
                pivot: t.to_string(),
            });
        }
        self.scaled(Complex::new(1.0, 0.0) / pivot)
    }
}

pub fn minors_of(a: &BoundaryMatrix) -> MinorVector {
    let m = std::array::from_fn(|i| a.minor(TripleIndex::from_position(i).expect("i < 20")));
    MinorVector { m }
}

/// Parity of the permutation sorting `seq` (three distinct entries).
fn sort_sign(seq: [u8; 3]) -> f64 {
    let mut inversions = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Rebuild a boundary matrix from its minors.
///
/// With pivot columns `S = (s1, s2, s3)` the result has `e_r` in column `s_r`,
/// and column `c` outside `S` holds, in row `r`, the minor obtained by
/// substituting `c` for `s_r` (signed by the sort parity) divided by `M_S`.
/// The first row is then multiplied by `M_S`, so `minors_of(result)` equals
/// `m` itself whenever `m` is decomposable. Without an explicit pivot the
/// largest-magnitude minor is used.
pub fn reconstruct(m: &MinorVector, pivot: Option<TripleIndex>) -> Result<BoundaryMatrix> {
    reconstruct_with_tolerance(m, pivot, CONSISTENCY_TOLERANCE)
}

pub fn reconstruct_with_tolerance(
    m: &MinorVector,
    pivot: Option<TripleIndex>,
    tolerance: f64,
) -> Result<BoundaryMatrix> {
    if m.as_slice().iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroMinorVector);
    }
    let pivot = pivot.unwrap_or_else(|| m.largest());
    let mp = m.get(pivot);
    if mp.norm() == 0.0 {
        return Err(Error::ZeroPivot {
            pivot: pivot.to_string(),
        });
    }
    let s = pivot.one_based();
    let mut rows = [[Complex::new(0.0, 0.0); 6]; 3];
    for r in 0..3 {
        for c in 1..=6u8 {
            let col = usize::from(c) - 1;
            if pivot.contains(c) {
                rows[r][col] = if s[r] == c {
                    Complex::new(1.0, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
                continue;
            }
            let mut seq = s;
            seq[r] = c;
            let sign = sort_sign(seq);
            let mut sorted = seq;
            sorted.sort_unstable();
            let t = TripleIndex::new(sorted[0], sorted[1], sorted[2]).expect("distinct columns");
            rows[r][col] = m.get(t) * sign / mp;
        }
    }
    for z in rows[0].iter_mut() {
        *z *= mp;
    }
    let a = BoundaryMatrix::new(rows)?;

    let back = minors_of(&a);
    let scale = m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let deviation = back
        .as_slice()
        .iter()
        .zip(m.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale;
    if deviation > tolerance {
        return Err(Error::InconsistentMinors { deviation });
    }
    Ok(a)
}

/// Chordal distance between row spans via their minor vectors, in `[0, 1]`.
pub fn span_distance(a: &BoundaryMatrix, b: &BoundaryMatrix) -> f64 {
    minor_distance(&minors_of(a), &minors_of(b))
}

/// Chordal distance between two projective minor vectors.
///
/// Evaluated as the norm of the component of `b` orthogonal to `a` (both
/// normalized), which equals `sqrt(1 - |<a, b>|^2)` but stays accurate for
/// nearly equal spans.
pub fn minor_distance(a: &MinorVector, b: &MinorVector) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    let ua: Vec<Complex> = a.as_slice().iter().map(|z| z / na).collect();
    let ub: Vec<Complex> = b.as_slice().iter().map(|z| z / nb).collect();
    let proj = inner(&ua, &ub);
    let residual: Vec<Complex> = ub.iter().zip(&ua).map(|(y, x)| y - proj * x).collect();
    vector_norm(&residual).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    pub(crate) fn recovered_example() -> BoundaryMatrix {
        BoundaryMatrix::from_real([
            [1.0, 1.0, 0.0, 0.5, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.5, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn t(s: &str) -> TripleIndex {
        s.parse().unwrap()
    }

    #[test]
    fn triple_order_is_lexicographic() {
        let all: Vec<String> = TripleIndex::all().map(|t| t.to_string()).collect();
        assert_eq!(all.len(), 20);
        assert_eq!(all[0], "123");
        assert_eq!(all[5], "135");
        assert_eq!(all[19], "456");
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(t("135").position(), 5);
        assert!(TripleIndex::new(3, 2, 4).is_none());
        assert!(TripleIndex::new(1, 2, 7).is_none());
    }

    #[test]
    fn minors_of_identity_block() {
        let m = minors_of(&BoundaryMatrix::initial_value());
        assert_eq!(m.get(t("123")), c(1.0, 0.0));
        assert!(m.as_slice()[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn minors_of_recovered_example() {
        let m = minors_of(&recovered_example());
        let expected = [
            ("135", 1.0),
            ("134", 0.5),
            ("345", -0.5),
            ("235", 1.0),
            ("356", 1.0),
            ("234", 0.5),
            ("346", 0.5),
        ];
        for tr in TripleIndex::all() {
            let want = expected
                .iter()
                .find(|(s, _)| t(s) == tr)
                .map(|(_, v)| *v)
                .unwrap_or(0.0);
            assert_eq!(m.get(tr), c(want, 0.0), "M_{tr}");
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let r = BoundaryMatrix::from_real([
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        ]);
        assert!(matches!(r, Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn reconstruct_identity_minor() {
        let mut m = [c(0.0, 0.0); MINOR_COUNT];
        m[0] = c(1.0, 0.0);
        let a = reconstruct(&MinorVector::new(m).unwrap(), None).unwrap();
        assert_eq!(a, BoundaryMatrix::initial_value());
    }

    #[test]
    fn reconstruct_worked_example_with_pivot_135() {
        let m = minors_of(&recovered_example());
        let a = reconstruct(&m, Some(t("135"))).unwrap();
        assert_eq!(a, recovered_example());
    }

    #[test]
    fn zero_vector_and_zero_pivot() {
        assert!(matches!(
            MinorVector::new([c(0.0, 0.0); MINOR_COUNT]),
            Err(Error::ZeroMinorVector)
        ));
        let m = minors_of(&recovered_example());
        assert!(matches!(
            reconstruct(&m, Some(t("123"))),
            Err(Error::ZeroPivot { .. })
        ));
    }

    #[test]
    fn non_decomposable_vector_is_inconsistent() {
        // e_123 + e_456 is not a Plücker vector
        let mut m = [c(0.0, 0.0); MINOR_COUNT];
        m[0] = c(1.0, 0.0);
        m[19] = c(1.0, 0.0);
        let r = reconstruct(&MinorVector::new(m).unwrap(), None);
        assert!(matches!(r, Err(Error::InconsistentMinors { .. })), "{r:?}");
    }

    #[test]
    fn span_distance_examples() {
        let a = recovered_example();
        assert!(span_distance(&a, &a) < 1e-15);
        let r = [
            [c(2.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)],
            [c(0.0, 0.0), c(1.0, -1.0), c(0.0, 3.0)],
            [c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)],
        ];
        let ra = a.left_multiply(&r).unwrap();
        assert!(span_distance(&a, &ra) < 1e-14);

        let mut tail = [[c(0.0, 0.0); 6]; 3];
        for (i, row) in tail.iter_mut().enumerate() {
            row[i + 3] = c(1.0, 0.0);
        }
        let b = BoundaryMatrix::new(tail).unwrap();
        assert_eq!(span_distance(&BoundaryMatrix::initial_value(), &b), 1.0);
    }
}
