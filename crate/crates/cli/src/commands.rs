//! The five subcommands. Each returns the process exit code or a
//! [`CliError`] carrying one.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use bcrecon::inverse::THEOREM1_TOLERANCE;
use bcrecon::{
    check_theorem1, find_eigenvalues, invert_spectrum, perturbation_study, span_distance,
    BoundaryMatrix, Error, InversionSettings, ReconstructionReport, SearchRegion, Spectrum,
};

use crate::display;
use crate::files::{self, InputError, ProblemSpec, RegionSpec};
use crate::report::{Results, RunReport, Settings};

pub const EXIT_OK: i32 = 0;
/// Unreadable or malformed input, bad flags.
pub const EXIT_INPUT: i32 = 1;
/// Failed uniqueness conditions, missing boundary matrix, or too few eigenvalues.
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
/// The spectrum is not compatible with any rank-3 boundary matrix.
pub const EXIT_INCONSISTENT: i32 = 4;
/// `verify` ran to completion but the recovered span is too far off.
pub const EXIT_VERIFY_FAILED: i32 = 5;

/// `println!` that stops quietly when stdout is closed (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(EXIT_OK)
        }
    };
}

/// Span distance at or below which `verify` passes.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

/// Used when neither the command line nor the problem file names a region.
pub const DEFAULT_REGION: [f64; 4] = [-55.0, 25.0, -5.0, 5.0];

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::new(EXIT_INPUT, e.to_string())
    }
}

type CmdResult = Result<i32, CliError>;

/// Options shared by the commands that search for eigenvalues.
#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    pub region: Option<[f64; 4]>,
    pub grid: Option<f64>,
    pub count: Option<usize>,
}

impl SearchOptions {
    fn resolve(&self, spec: &ProblemSpec) -> Result<SearchRegion, CliError> {
        let region = match (self.region, spec.region) {
            (Some([re_min, re_max, im_min, im_max]), _) => RegionSpec {
                re_min,
                re_max,
                im_min,
                im_max,
                grid_density: None,
            },
            (None, Some(r)) => r,
            (None, None) => {
                let [re_min, re_max, im_min, im_max] = DEFAULT_REGION;
                RegionSpec {
                    re_min,
                    re_max,
                    im_min,
                    im_max,
                    grid_density: None,
                }
            }
        };
        region
            .resolve(self.grid)
            .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))
    }
}

fn inversion_settings(rank_gap_threshold: Option<f64>) -> Result<InversionSettings, CliError> {
    let mut s = InversionSettings::default();
    if let Some(t) = rank_gap_threshold {
        s.rank_gap_threshold = t;
    }
    s.validate()
        .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))?;
    Ok(s)
}

fn require_boundary(spec: &ProblemSpec) -> Result<&BoundaryMatrix, CliError> {
    spec.boundary.as_ref().ok_or_else(|| {
        CliError::new(
            EXIT_PRECONDITION,
            "the problem file has no `boundary` matrix; forward computations need one",
        )
    })
}

fn inversion_error(e: Error) -> CliError {
    let code = match e {
        Error::TooFewEigenvalues { .. } => EXIT_PRECONDITION,
        Error::InconsistentMinors { .. } | Error::ZeroMinorVector | Error::ZeroPivot { .. } => {
            EXIT_INCONSISTENT
        }
        Error::InvalidSettings(_) => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    };
    CliError::new(code, e.to_string())
}

fn write_report(out: Option<&Path>, report: &RunReport) -> Result<(), CliError> {
    if let Some(path) = out {
        files::emit(Some(path), &report.to_json())
            .map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn elapsed(start: Instant) {
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
}

pub fn roots(problem: &Path, out: Option<&Path>) -> CmdResult {
    let start = Instant::now();
    let spec = ProblemSpec::load(problem)?;
    let p = spec.coefficients();
    let report = match check_theorem1(&p, THEOREM1_TOLERANCE) {
        Ok(r) => r,
        Err(Error::RepeatedRoots { separation }) => {
            say!("characteristic roots coincide (separation {separation:.3e})");
            say!("conditions: FAILED (a difference of two roots vanishes)");
            return Ok(EXIT_PRECONDITION);
        }
        Err(e) => return Err(CliError::new(EXIT_INPUT, e.to_string())),
    };
    let combinations = bcrecon::charode::signed_subsets(&report.roots);
    for line in display::condition_table(&report, &combinations) {
        say!("{line}");
    }
    let code = if report.all_pass() {
        EXIT_OK
    } else {
        EXIT_PRECONDITION
    };
    write_report(
        out,
        &RunReport {
            command: "roots".into(),
            problem: spec,
            spectrum_file: None,
            settings: Settings {
                theorem1_tolerance: THEOREM1_TOLERANCE,
                ..Default::default()
            },
            results: Results::Roots {
                report,
                combinations,
            },
            warnings: Vec::new(),
            timing: None,
        },
    )?;
    elapsed(start);
    Ok(code)
}

fn search(spec: &ProblemSpec, options: &SearchOptions) -> Result<Spectrum, CliError> {
    let a = require_boundary(spec)?;
    let region = options.resolve(spec)?;
    find_eigenvalues(
        &spec.coefficients(),
        a,
        &region,
        options.count.unwrap_or(usize::MAX),
    )
    .map_err(|e| CliError::new(EXIT_NUMERIC, e.to_string()))
}

fn search_warnings(spectrum: &Spectrum, count: Option<usize>) -> Vec<String> {
    let d = &spectrum.diagnostics;
    let mut w = Vec::new();
    if spectrum.is_empty() {
        w.push("no eigenvalues found in the search region".into());
    }
    let truncated = count.is_some_and(|c| spectrum.len() >= c);
    if let Some(n) = d.expected_count.filter(|&n| n > spectrum.len() && !truncated) {
        w.push(format!(
            "the argument principle counts {n} eigenvalues in the region but only {} were located",
            spectrum.len()
        ));
    }
    if !d.non_converged.is_empty() {
        w.push(format!(
            "{} seed(s) did not converge; refine with a denser --grid",
            d.non_converged.len()
        ));
    }
    for z in &d.suspected_multiple {
        w.push(format!(
            "eigenvalue near {} may be multiple (listed once)",
            display::complex(*z)
        ));
    }
    w
}

fn describe_region(r: &SearchRegion) -> String {
    format!(
        "[{}, {}] x [{}, {}], grid density {}",
        r.re_min, r.re_max, r.im_min, r.im_max, r.grid_density
    )
}

pub fn forward(problem: &Path, options: &SearchOptions, out: Option<&Path>) -> CmdResult {
    let start = Instant::now();
    let spec = ProblemSpec::load(problem)?;
    let spectrum = search(&spec, options)?;
    files::emit(out, &files::spectrum_csv(&spectrum.eigenvalues))
        .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))?;
    // The table may have gone to stdout, so the summary goes to stderr.
    eprintln!(
        "{} eigenvalue(s) in {}",
        spectrum.len(),
        describe_region(&spectrum.region)
    );
    print_warnings(&search_warnings(&spectrum, options.count));
    elapsed(start);
    Ok(EXIT_OK)
}

fn print_reconstruction(rep: &ReconstructionReport) {
    say!("pivot minor: M_{}", rep.pivot_used);
    say!("rank gap (s19/s20): {:.3e}", rep.rank_gap);
    let worst = rep
        .per_eigenvalue_residuals
        .iter()
        .copied()
        .fold(0.0, f64::max);
    say!("largest normalized residual: {worst:.3e}");
    say!("reconstructed boundary conditions:");
    for line in display::boundary_conditions(&rep.matrix) {
        say!("  {line}");
    }
}

pub fn invert(
    problem: &Path,
    spectrum_path: &Path,
    rank_gap_threshold: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let start = Instant::now();
    let spec = ProblemSpec::load(problem)?;
    let eigenvalues = files::load_spectrum(spectrum_path)?;
    let settings = inversion_settings(rank_gap_threshold)?;
    let rep = invert_spectrum(&spec.coefficients(), &eigenvalues, &settings)
        .map_err(inversion_error)?;
    print_reconstruction(&rep);
    print_warnings(&rep.warnings);
    let warnings = rep.warnings.clone();
    write_report(
        out,
        &RunReport {
            command: "invert".into(),
            problem: spec,
            spectrum_file: Some(spectrum_path.display().to_string()),
            settings: Settings {
                theorem1_tolerance: THEOREM1_TOLERANCE,
                inversion: Some(settings),
                ..Default::default()
            },
            results: Results::Reconstruction(rep),
            warnings,
            timing: None,
        },
    )?;
    elapsed(start);
    Ok(EXIT_OK)
}

pub fn verify(
    problem: &Path,
    options: &SearchOptions,
    rank_gap_threshold: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let start = Instant::now();
    let spec = ProblemSpec::load(problem)?;
    let settings = inversion_settings(rank_gap_threshold)?;
    let spectrum = search(&spec, options)?;
    let a = require_boundary(&spec)?;
    say!(
        "{} eigenvalue(s) in {}",
        spectrum.len(),
        describe_region(&spectrum.region)
    );
    let mut warnings = search_warnings(&spectrum, options.count);
    print_warnings(&warnings);
    let rep = invert_spectrum(&spec.coefficients(), &spectrum.eigenvalues, &settings)
        .map_err(inversion_error)?;
    print_reconstruction(&rep);
    print_warnings(&rep.warnings);
    warnings.extend(rep.warnings.iter().cloned());

    let distance = span_distance(&rep.matrix, a);
    let pass = distance <= VERIFY_TOLERANCE;
    say!(
        "span distance to the original: {distance:.3e} ({} at {VERIFY_TOLERANCE:e})",
        if pass { "PASS" } else { "FAIL" }
    );
    let region = spectrum.region;
    write_report(
        out,
        &RunReport {
            command: "verify".into(),
            problem: spec,
            spectrum_file: None,
            settings: Settings {
                theorem1_tolerance: THEOREM1_TOLERANCE,
                region: Some(region.into()),
                count: options.count,
                inversion: Some(settings),
                verify_tolerance: Some(VERIFY_TOLERANCE),
            },
            results: Results::Verify {
                spectrum,
                reconstruction: rep,
                span_distance: distance,
                pass,
            },
            warnings,
            timing: None,
        },
    )?;
    elapsed(start);
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[derive(Clone, Debug)]
pub struct StudyOptions {
    pub noise: f64,
    pub trials: usize,
    pub seed: u64,
}

pub fn perturb(
    problem: &Path,
    search_options: &SearchOptions,
    study: &StudyOptions,
    rank_gap_threshold: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let start = Instant::now();
    let spec = ProblemSpec::load(problem)?;
    let a = require_boundary(&spec)?;
    let region = search_options.resolve(&spec)?;
    let settings = inversion_settings(rank_gap_threshold)?;
    let records = perturbation_study(
        &spec.coefficients(),
        a,
        &region,
        study.noise,
        study.trials,
        study.seed,
        &settings,
    )
    .map_err(|e| match e {
        Error::InvalidSettings(_) => CliError::new(EXIT_INPUT, e.to_string()),
        _ => CliError::new(EXIT_NUMERIC, e.to_string()),
    })?;
    files::emit(out, &files::study_csv(&records))
        .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))?;
    let distances: Vec<f64> = records.iter().filter_map(|r| r.span_distance).collect();
    let worst = distances.iter().copied().fold(0.0, f64::max);
    let ok = records.iter().filter(|r| r.status.starts_with("ok")).count();
    eprintln!(
        "{} trial(s) at noise {:e}: {ok} consistent, largest span distance {worst:.3e}",
        records.len(),
        study.noise,
    );
    elapsed(start);
    Ok(EXIT_OK)
}
