//! Characteristic determinant and its zeros.
//!
//! `Delta(lambda) = sum_S Z_S(lambda) M_S` over the 20 column triples, where
//! `Z_S` are minors of the boundary values of the fundamental system and `M_S`
//! minors of the boundary matrix. Eigenvalues are the zeros of `Delta`; they
//! are located by sampling a rectangle and polishing local minima of the
//! normalized magnitude with Newton's method.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charode::{boundary_minors, boundary_values, ProblemCoefficients};
use crate::complexalg::{det3, lexicographic, Complex};
use crate::error::{Error, Result};
use crate::pluecker::{minors_of, BoundaryMatrix, MinorVector};

/// Radius of the excluded disc around the origin.
pub const ORIGIN_EXCLUSION: f64 = 1e-6;

/// Normalized `|Delta|` a polished zero must reach.
pub const ZERO_TOLERANCE: f64 = 1e-10;

/// Distance below which two polished zeros are merged.
pub const DEDUP_DISTANCE: f64 = 1e-6;

pub const DEFAULT_GRID_DENSITY: f64 = 4.0;

const NEWTON_MAX_ITER: usize = 80;

/// Grid doublings allowed when the argument principle reports missed zeros.
pub const MAX_REFINEMENTS: usize = 3;

/// Initial spacing of contour samples for the argument principle.
const CONTOUR_STEP: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Samples per unit length along each axis.
    pub grid_density: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        Self::with_density(re_min, re_max, im_min, im_max, DEFAULT_GRID_DENSITY)
    }

    pub fn with_density(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        grid_density: f64,
    ) -> Result<Self> {
        let region = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            grid_density,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.re_min, self.re_max, self.im_min, self.im_max, self.grid_density];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion("bounds must be finite".into()));
        }
        if self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(Error::InvalidRegion(format!(
                "empty rectangle [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.grid_density <= 0.0 {
            return Err(Error::InvalidRegion("grid density must be positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex) -> bool {
        z.re >= self.re_min
            && z.re <= self.re_max
            && z.im >= self.im_min
            && z.im <= self.im_max
            && z.norm() > ORIGIN_EXCLUSION
    }

    fn grid_shape(&self) -> (usize, usize) {
        let nx = ((self.re_max - self.re_min) * self.grid_density).ceil() as usize + 1;
        let ny = ((self.im_max - self.im_min) * self.grid_density).ceil() as usize + 1;
        (nx.max(2), ny.max(2))
    }

    fn grid_point(&self, ix: usize, iy: usize, nx: usize, ny: usize) -> Complex {
        let re = self.re_min + (self.re_max - self.re_min) * ix as f64 / (nx - 1) as f64;
        let im = self.im_min + (self.im_max - self.im_min) * iy as f64 / (ny - 1) as f64;
        Complex::new(re, im)
    }
}

/// `Delta(lambda)` together with the absolute-term scale `sum_S |Z_S M_S|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeterminantValue {
    pub value: Complex,
    pub scale: f64,
}

impl DeterminantValue {
    /// `|Delta| / sum_S |Z_S M_S|`, in `[0, 1]`.
    pub fn normalized(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.norm() / self.scale
        } else {
            0.0
        }
    }
}

/// Minor-expansion evaluation of the characteristic determinant.
pub fn char_det(p: &ProblemCoefficients, a: &BoundaryMatrix, lambda: Complex) -> Result<Complex> {
    Ok(char_det_scaled(p, &minors_of(a), lambda)?.value)
}

pub fn char_det_scaled(
    p: &ProblemCoefficients,
    minors: &MinorVector,
    lambda: Complex,
) -> Result<DeterminantValue> {
    let z = boundary_minors(p, lambda)?;
    let mut value = Complex::new(0.0, 0.0);
    let mut scale = 0.0;
    for (zs, ms) in z.iter().zip(minors.as_slice()) {
        let term = zs * ms;
        value += term;
        scale += term.norm();
    }
    Ok(DeterminantValue { value, scale })
}

/// `det[U_i(y_k)]` formed directly from the boundary values, with the
/// Hadamard bound (product of row norms) of that 3x3 matrix.
pub fn char_det_direct(
    p: &ProblemCoefficients,
    a: &BoundaryMatrix,
    lambda: Complex,
) -> Result<DeterminantValue> {
    let z = boundary_values(p, lambda)?.z;
    let forms = a.to_matrix().matmul(&z.transpose())?;
    let value = det3(&forms)?;
    let scale = (0..3)
        .map(|r| forms.row(r).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .product();
    Ok(DeterminantValue { value, scale })
}

/// Per-seed outcome of the Newton polish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeedOutcome {
    Converged { lambda: Complex, residual: f64 },
    NonConvergence { seed: Complex, last: Complex, residual: f64 },
    Failed { seed: Complex, reason: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub grid_points: usize,
    pub seeds: usize,
    pub converged: usize,
    pub outside_region: usize,
    pub merged_duplicates: usize,
    pub non_converged: Vec<Complex>,
    /// Zeros where `|Delta'|` is tiny relative to the scale; possibly multiple.
    pub suspected_multiple: Vec<Complex>,
    /// Zero count inside the region from the argument principle, when the
    /// boundary allows it to be evaluated.
    pub expected_count: Option<usize>,
    /// Grid doublings needed to reach `expected_count`.
    pub refinements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex>,
    pub region: SearchRegion,
    pub tolerance: f64,
    pub diagnostics: SearchDiagnostics,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn fd_step(lambda: Complex) -> f64 {
    f64::EPSILON.cbrt() * lambda.norm().max(1.0)
}

/// Central-difference derivative of `Delta` at `lambda`.
pub fn char_det_derivative(
    p: &ProblemCoefficients,
    minors: &MinorVector,
    lambda: Complex,
) -> Result<Complex> {
    let h = fd_step(lambda);
    let fp = char_det_scaled(p, minors, lambda + h)?.value;
    let fm = char_det_scaled(p, minors, lambda - h)?.value;
    Ok((fp - fm) / (2.0 * h))
}

/// Newton iteration on `Delta` from `seed`.
pub fn polish_zero(p: &ProblemCoefficients, minors: &MinorVector, seed: Complex) -> SeedOutcome {
    let mut lambda = seed;
    let mut last_residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let f = match char_det_scaled(p, minors, lambda) {
            Ok(f) => f,
            Err(e) => {
                return SeedOutcome::Failed {
                    seed,
                    reason: e.to_string(),
                }
            }
        };
        last_residual = f.normalized();
        let df = match char_det_derivative(p, minors, lambda) {
            Ok(d) => d,
            Err(e) => {
                return SeedOutcome::Failed {
                    seed,
                    reason: e.to_string(),
                }
            }
        };
        if df.norm() == 0.0 || !df.is_finite() {
            break;
        }
        let mut step = f.value / df;
        // keep each step local to the basin the seed came from
        let cap = 1.0;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        lambda -= step;
        if !lambda.is_finite() {
            break;
        }
        if step.norm() <= 4.0 * f64::EPSILON * lambda.norm().max(1.0) {
            break;
        }
    }
    match char_det_scaled(p, minors, lambda) {
        Ok(f) if f.normalized() <= ZERO_TOLERANCE => SeedOutcome::Converged {
            lambda,
            residual: f.normalized(),
        },
        Ok(f) => SeedOutcome::NonConvergence {
            seed,
            last: lambda,
            residual: f.normalized(),
        },
        Err(_) => SeedOutcome::NonConvergence {
            seed,
            last: lambda,
            residual: last_residual,
        },
    }
}

/// One sampling pass: seeds at grid-local minima of the normalized
/// determinant, polished by Newton. Returns the converged zeros inside the
/// region, unsorted and possibly repeated.
fn grid_pass(
    p: &ProblemCoefficients,
    minors: &MinorVector,
    region: &SearchRegion,
    diagnostics: &mut SearchDiagnostics,
) -> Vec<Complex> {
    let (nx, ny) = region.grid_shape();

    let samples: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let lambda = region.grid_point(idx % nx, idx / nx, nx, ny);
            if lambda.norm() <= ORIGIN_EXCLUSION {
                return f64::INFINITY;
            }
            char_det_scaled(p, minors, lambda)
                .map(|f| f.normalized())
                .unwrap_or(f64::INFINITY)
        })
        .collect();

    let mut seeds = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let v = samples[iy * nx + ix];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            let mut rises = false;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let jx = ix as i64 + dx;
                    let jy = iy as i64 + dy;
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    let w = samples[jy as usize * nx + jx as usize];
                    rises |= w > v;
                    // strict on one side of the scan so plateaus seed once
                    let lower = if (dy, dx) < (0, 0) { w <= v } else { w < v };
                    if lower {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            // a flat neighbourhood carries no information about zeros
            if is_min && rises {
                seeds.push(region.grid_point(ix, iy, nx, ny));
            }
        }
    }

    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&s| polish_zero(p, minors, s))
        .collect();

    diagnostics.grid_points += nx * ny;
    diagnostics.seeds += seeds.len();
    // only the last pass's failures are worth reporting
    diagnostics.non_converged.clear();
    let mut found = Vec::new();
    for outcome in outcomes {
        match outcome {
            SeedOutcome::Converged { lambda, .. } => {
                diagnostics.converged += 1;
                if region.contains(lambda) {
                    found.push(lambda);
                } else {
                    diagnostics.outside_region += 1;
                }
            }
            // edge seeds often chase a zero beyond the boundary
            SeedOutcome::NonConvergence { last, .. } if !region.contains(last) => {
                diagnostics.outside_region += 1;
            }
            SeedOutcome::NonConvergence { seed, .. } | SeedOutcome::Failed { seed, .. } => {
                diagnostics.non_converged.push(seed)
            }
        }
    }
    found
}

/// Number of zeros of `Delta` enclosed by the region boundary, from the
/// winding of `Delta` along it. `None` if the boundary passes through the
/// origin or `Delta` cannot be evaluated on it.
pub fn enclosed_zero_count(
    p: &ProblemCoefficients,
    minors: &MinorVector,
    region: &SearchRegion,
) -> Option<usize> {
    let corners = [
        Complex::new(region.re_min, region.im_min),
        Complex::new(region.re_max, region.im_min),
        Complex::new(region.re_max, region.im_max),
        Complex::new(region.re_min, region.im_max),
    ];
    let mut segments = Vec::new();
    for k in 0..4 {
        let (za, zb) = (corners[k], corners[(k + 1) % 4]);
        let n = ((zb - za).norm() / CONTOUR_STEP).ceil().max(1.0) as usize;
        for i in 0..n {
            segments.push((
                za + (zb - za) * (i as f64 / n as f64),
                za + (zb - za) * ((i + 1) as f64 / n as f64),
            ));
        }
    }
    let f = |z: Complex| -> Option<Complex> {
        if z.norm() <= ORIGIN_EXCLUSION {
            return None;
        }
        let v = char_det_scaled(p, minors, z).ok()?.value;
        (v.is_finite() && v != Complex::new(0.0, 0.0)).then_some(v)
    };
    let turns: Vec<Option<f64>> = segments
        .par_iter()
        .map(|&(a, b)| arg_change(&f, a, f(a)?, b, f(b)?, 0))
        .collect();
    let mut total = 0.0;
    for t in turns {
        total += t?;
    }
    let count = (total / std::f64::consts::TAU).round();
    (count >= 0.0).then_some(count as usize)
}

fn arg_change(
    f: &dyn Fn(Complex) -> Option<Complex>,
    a: Complex,
    fa: Complex,
    b: Complex,
    fb: Complex,
    depth: u32,
) -> Option<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.5 {
        return Some(d);
    }
    if depth >= 40 {
        return None;
    }
    let mid = (a + b) * 0.5;
    let fm = f(mid)?;
    Some(arg_change(f, a, fa, mid, fm, depth + 1)? + arg_change(f, mid, fm, b, fb, depth + 1)?)
}

/// Zeros of `Delta` inside `region`, sorted by (re, im), at most `max_count`.
///
/// Seeds come from a sampling grid; if fewer zeros turn up than the argument
/// principle says the region holds, the grid is refined (up to
/// `MAX_REFINEMENTS` doublings) and the passes are merged.
///
/// The result is independent of the rayon thread count: every stage collects
/// in index order before sorting and merging.
pub fn find_eigenvalues(
    p: &ProblemCoefficients,
    a: &BoundaryMatrix,
    region: &SearchRegion,
    max_count: usize,
) -> Result<Spectrum> {
    region.validate()?;
    let minors = minors_of(a);
    let mut diagnostics = SearchDiagnostics {
        expected_count: enclosed_zero_count(p, &minors, region),
        ..Default::default()
    };

    let mut found = Vec::new();
    let mut pass_region = *region;
    loop {
        found.extend(grid_pass(p, &minors, &pass_region, &mut diagnostics));
        let distinct = dedup_sorted(&mut found.clone(), &mut 0).len();
        let short = diagnostics.expected_count.is_some_and(|n| distinct < n);
        if !short || diagnostics.refinements >= MAX_REFINEMENTS {
            break;
        }
        diagnostics.refinements += 1;
        pass_region.grid_density *= 2.0;
    }

    let mut eigenvalues = dedup_sorted(&mut found, &mut diagnostics.merged_duplicates);
    for &lambda in &eigenvalues {
        if let (Ok(d), Ok(f)) = (
            char_det_derivative(p, &minors, lambda),
            char_det_scaled(p, &minors, lambda),
        ) {
            if d.norm() * lambda.norm().max(1.0) < 1e-6 * f.scale {
                diagnostics.suspected_multiple.push(lambda);
            }
        }
    }
    eigenvalues.truncate(max_count);

    Ok(Spectrum {
        eigenvalues,
        region: *region,
        tolerance: ZERO_TOLERANCE,
        diagnostics,
    })
}

fn dedup_sorted(found: &mut [Complex], merged: &mut usize) -> Vec<Complex> {
    found.sort_by(lexicographic);
    let mut out: Vec<Complex> = Vec::with_capacity(found.len());
    for &lambda in found.iter() {
        if out.iter().any(|e| (e - lambda).norm() <= DEDUP_DISTANCE) {
            *merged += 1;
        } else {
            out.push(lambda);
        }
    }
    out
}
