//! Recovering the boundary matrix from eigenvalues.
//!
//! Each eigenvalue `lambda_m` gives one homogeneous linear equation
//! `sum_S Z_S(lambda_m) M_S = 0` in the 20 unknown minors. With at least 19
//! equations of rank 19 the minors are fixed up to a common factor; they are
//! taken as the smallest right singular vector of the stacked system and
//! turned back into a matrix by [`reconstruct`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charode::{boundary_minors, check_theorem1, ConditionReport, ProblemCoefficients};
use crate::complexalg::{lexicographic, nullspace_vector, vector_norm, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::forward::{find_eigenvalues, SearchRegion};
use crate::pluecker::{
    minor_distance, minors_of, reconstruct_with_tolerance, BoundaryMatrix,
    MinorVector, TripleIndex, MINOR_COUNT,
};

/// Number of eigenvalues below which the minors cannot be pinned down.
pub const MINIMUM_EIGENVALUES: usize = 19;

/// Tolerance for the root-combination checks reported alongside a result.
pub const THEOREM1_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionSettings {
    pub rank_gap_threshold: f64,
    pub consistency_tolerance: f64,
    pub minimum_eigenvalues: usize,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            rank_gap_threshold: 1e3,
            consistency_tolerance: 1e-6,
            minimum_eigenvalues: MINIMUM_EIGENVALUES,
        }
    }
}

impl InversionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_gap_threshold > 1.0) {
            return Err(Error::InvalidSettings(format!(
                "rank gap threshold must exceed 1, got {}",
                self.rank_gap_threshold
            )));
        }
        if !(self.consistency_tolerance > 0.0 && self.consistency_tolerance < 1.0) {
            return Err(Error::InvalidSettings(format!(
                "consistency tolerance must lie in (0, 1), got {}",
                self.consistency_tolerance
            )));
        }
        if self.minimum_eigenvalues != MINIMUM_EIGENVALUES {
            return Err(Error::InvalidSettings(format!(
                "minimum eigenvalue count is fixed at {MINIMUM_EIGENVALUES}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// Input eigenvalues, sorted by (re, im).
    pub eigenvalues: Vec<Complex>,
    /// Unit-norm minors, largest entry real and positive.
    pub minors: MinorVector,
    /// Reduced form: the pivot columns hold the identity.
    pub matrix: BoundaryMatrix,
    pub pivot_used: TripleIndex,
    /// One value per unknown, padded with the trailing roundoff-level values
    /// when there are exactly 19 equations.
    pub singular_values: Vec<f64>,
    pub rank_gap: f64,
    /// `false` when `rank_gap` is below the configured threshold.
    pub unique: bool,
    /// `|Z(lambda_m) . M| / (|Z(lambda_m)| |M|)` with the reconstructed matrix.
    pub per_eigenvalue_residuals: Vec<f64>,
    pub theorem1: ConditionReport,
    pub warnings: Vec<String>,
}

/// Stack one unit-norm row `Z(lambda_m)` per eigenvalue.
pub fn assemble_system(p: &ProblemCoefficients, eigenvalues: &[Complex]) -> Result<CMatrix> {
    if eigenvalues.len() < MINIMUM_EIGENVALUES {
        return Err(Error::TooFewEigenvalues {
            found: eigenvalues.len(),
            required: MINIMUM_EIGENVALUES,
        });
    }
    let mut system = CMatrix::zeros(eigenvalues.len(), MINOR_COUNT);
    for (index, &lambda) in eigenvalues.iter().enumerate() {
        let row = normalized_row(p, lambda).map_err(|e| Error::EigenvalueRejected {
            index,
            lambda,
            source: Box::new(e),
        })?;
        system.row_mut(index).copy_from_slice(&row);
    }
    Ok(system)
}

fn normalized_row(p: &ProblemCoefficients, lambda: Complex) -> Result<[Complex; MINOR_COUNT]> {
    let mut row = boundary_minors(p, lambda)?;
    let nrm = vector_norm(&row);
    if !(nrm.is_finite() && nrm > 0.0) {
        return Err(Error::NonFinite(format!("minor row at lambda = {lambda}")));
    }
    for z in row.iter_mut() {
        *z /= nrm;
    }
    Ok(row)
}

/// Normalized residual `|Z(lambda) . M| / (|Z(lambda)| |M|)`.
pub fn eigenvalue_residual(
    p: &ProblemCoefficients,
    minors: &MinorVector,
    lambda: Complex,
) -> Result<f64> {
    let row = normalized_row(p, lambda)?;
    let dot: Complex = row
        .iter()
        .zip(minors.as_slice())
        .map(|(z, m)| z * m)
        .sum();
    Ok(dot.norm() / minors.norm())
}

pub fn invert_spectrum(
    p: &ProblemCoefficients,
    eigenvalues: &[Complex],
    settings: &InversionSettings,
) -> Result<ReconstructionReport> {
    settings.validate()?;
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(lexicographic);

    let system = assemble_system(p, &sorted)?;
    let ns = nullspace_vector(&system)?;
    let minors = MinorVector::from_slice(&ns.vector)?;
    let pivot_used = minors.largest();
    // Scaling the pivot minor to 1 yields the reduced form with unit pivot columns.
    let matrix = reconstruct_with_tolerance(
        &minors.normalized_to(pivot_used)?,
        Some(pivot_used),
        settings.consistency_tolerance,
    )?;

    let back = minors_of(&matrix);
    let per_eigenvalue_residuals = sorted
        .iter()
        .map(|&l| eigenvalue_residual(p, &back, l))
        .collect::<Result<Vec<_>>>()?;

    let theorem1 = check_theorem1(p, THEOREM1_TOLERANCE)?;
    let mut warnings = Vec::new();
    let unique = ns.gap >= settings.rank_gap_threshold;
    if !unique {
        warnings.push(format!(
            "rank gap {:.3e} is below {:.3e}: the system may not have rank 19 and the \
             reconstruction may not be unique",
            ns.gap, settings.rank_gap_threshold
        ));
    }
    if !theorem1.all_pass() {
        warnings.push("characteristic roots violate the uniqueness hypotheses".into());
    }

    Ok(ReconstructionReport {
        eigenvalues: sorted,
        minors,
        matrix,
        pivot_used,
        singular_values: ns.singular_values,
        rank_gap: ns.gap,
        unique,
        per_eigenvalue_residuals,
        theorem1,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub trial: usize,
    pub noise_level: f64,
    pub span_distance: Option<f64>,
    pub status: String,
}

/// Invert noisy copies of the spectrum of `(p, a)` and measure how far the
/// recovered span drifts.
///
/// Each eigenvalue receives independent complex Gaussian noise with
/// `E|eps|^2 = noise_level^2`. Trial `t` draws from the ChaCha stream `t` of
/// `seed`, so records do not depend on scheduling.
pub fn perturbation_study(
    p: &ProblemCoefficients,
    a: &BoundaryMatrix,
    region: &SearchRegion,
    noise_level: f64,
    trials: usize,
    seed: u64,
    settings: &InversionSettings,
) -> Result<Vec<PerturbationRecord>> {
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::InvalidSettings(format!("noise level {noise_level}")));
    }
    let spectrum = find_eigenvalues(p, a, region, usize::MAX)?;
    if spectrum.len() < MINIMUM_EIGENVALUES {
        return Err(Error::TooFewEigenvalues {
            found: spectrum.len(),
            required: MINIMUM_EIGENVALUES,
        });
    }
    let truth = minors_of(a);
    let component = Normal::new(0.0, noise_level / std::f64::consts::SQRT_2)
        .map_err(|e| Error::InvalidSettings(e.to_string()))?;

    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let noisy: Vec<Complex> = spectrum
                .eigenvalues
                .iter()
                .map(|&l| l + Complex::new(component.sample(&mut rng), component.sample(&mut rng)))
                .collect();
            match invert_spectrum(p, &noisy, settings) {
                Ok(rep) => PerturbationRecord {
                    trial,
                    noise_level,
                    span_distance: Some(minor_distance(&truth, &minors_of(&rep.matrix))),
                    status: if rep.unique { "ok" } else { "ok-nonunique" }.into(),
                },
                // Noise pushes the minors off the Grassmannian; the distance of
                // the nearest candidate is still the quantity of interest.
                Err(Error::InconsistentMinors { deviation }) => PerturbationRecord {
                    trial,
                    noise_level,
                    span_distance: candidate_matrix(p, &noisy)
                        .ok()
                        .map(|b| minor_distance(&truth, &minors_of(&b))),
                    status: format!("inconsistent (deviation {deviation:.3e})"),
                },
                Err(e) => PerturbationRecord {
                    trial,
                    noise_level,
                    span_distance: None,
                    status: format!("failed: {e}"),
                },
            }
        })
        .collect();
    Ok(records)
}

/// Reconstruction from the smallest singular vector without the
/// decomposability check.
pub fn candidate_matrix(p: &ProblemCoefficients, eigenvalues: &[Complex]) -> Result<BoundaryMatrix> {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(lexicographic);
    let ns = nullspace_vector(&assemble_system(p, &sorted)?)?;
    let minors = MinorVector::from_slice(&ns.vector)?;
    let pivot = minors.largest();
    reconstruct_with_tolerance(&minors.normalized_to(pivot)?, Some(pivot), f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn worked_example() -> ProblemCoefficients {
        ProblemCoefficients::new(c(-3.0, -3.0), c(-2.0, 9.0), c(6.0, 0.0))
    }

    #[test]
    fn too_few_eigenvalues() {
        let ls: Vec<Complex> = (1..=18).map(|k| c(k as f64, 0.5)).collect();
        assert!(matches!(
            assemble_system(&worked_example(), &ls),
            Err(Error::TooFewEigenvalues { found: 18, required: 19 })
        ));
        assert!(matches!(
            invert_spectrum(&worked_example(), &[], &InversionSettings::default()),
            Err(Error::TooFewEigenvalues { found: 0, .. })
        ));
    }

    #[test]
    fn rows_are_unit_norm() {
        let ls: Vec<Complex> = (1..=19).map(|k| c(k as f64 - 10.5, 0.3)).collect();
        let s = assemble_system(&worked_example(), &ls).unwrap();
        for r in 0..s.rows() {
            assert!((vector_norm(s.row(r)) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn offending_eigenvalue_is_identified() {
        let mut ls: Vec<Complex> = (1..=19).map(|k| c(k as f64, 0.3)).collect();
        ls[7] = c(0.0, 0.0);
        match assemble_system(&worked_example(), &ls) {
            Err(Error::EigenvalueRejected { index, source, .. }) => {
                assert_eq!(index, 7);
                assert!(matches!(*source, Error::LambdaTooSmall { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn settings_validation() {
        let mut s = InversionSettings::default();
        assert!(s.validate().is_ok());
        s.rank_gap_threshold = 1.0;
        assert!(s.validate().is_err());
        let s = InversionSettings {
            consistency_tolerance: 1.5,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = InversionSettings {
            minimum_eigenvalues: 10,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
