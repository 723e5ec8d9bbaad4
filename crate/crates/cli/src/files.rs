//! On-disk formats: problem documents (JSON), spectra and study tables (CSV).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bcrecon::{BoundaryMatrix, Complex, PerturbationRecord, ProblemCoefficients, SearchRegion};
use serde::{Deserialize, Serialize};

/// Failure to read or parse an input file. Always maps to exit code 1.
#[derive(Debug)]
pub struct InputError {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

impl std::error::Error for InputError {}

fn input_error(path: &Path, message: impl Into<String>) -> InputError {
    InputError {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// A problem document: ODE coefficients, optionally the boundary matrix and
/// a search region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub p: [Complex; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
}

/// Region as written in a problem file; the grid density is optional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_density: Option<f64>,
}

impl ProblemSpec {
    pub fn coefficients(&self) -> ProblemCoefficients {
        ProblemCoefficients::new(self.p[0], self.p[1], self.p[2])
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ProblemSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            // serde_json's message already ends with the line and column
            input_error(path, format!("field `{}`: {}", e.path(), e.inner()))
        })?;
        if !spec.coefficients().is_finite() {
            return Err(input_error(path, "field `p`: coefficients must be finite"));
        }
        if let Some(r) = spec.region {
            r.resolve(None)
                .map_err(|e| input_error(path, format!("field `region`: {e}")))?;
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = fs::read_to_string(path).map_err(|e| input_error(path, e.to_string()))?;
        Self::parse(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem documents always serialize");
        s.push('\n');
        s
    }
}

impl RegionSpec {
    pub fn resolve(&self, density: Option<f64>) -> bcrecon::Result<SearchRegion> {
        SearchRegion::with_density(
            self.re_min,
            self.re_max,
            self.im_min,
            self.im_max,
            density
                .or(self.grid_density)
                .unwrap_or(bcrecon::forward::DEFAULT_GRID_DENSITY),
        )
    }
}

impl From<SearchRegion> for RegionSpec {
    fn from(r: SearchRegion) -> Self {
        Self {
            re_min: r.re_min,
            re_max: r.re_max,
            im_min: r.im_min,
            im_max: r.im_max,
            grid_density: Some(r.grid_density),
        }
    }
}

/// 17 significant digits: enough for every f64 to survive a text round trip.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn spectrum_csv(eigenvalues: &[Complex]) -> String {
    let mut out = String::from("re,im\n");
    for l in eigenvalues {
        out.push_str(&format_f64(l.re));
        out.push(',');
        out.push_str(&format_f64(l.im));
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct SpectrumRow {
    re: f64,
    im: f64,
}

pub fn parse_spectrum(text: &str, path: &Path) -> Result<Vec<Complex>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| input_error(path, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "re" || &headers[1] != "im" {
        return Err(input_error(path, "line 1: header must be `re,im`"));
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<SpectrumRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            input_error(path, format!("line {line}: {e}"))
        })?;
        let z = Complex::new(row.re, row.im);
        if !z.is_finite() {
            return Err(input_error(path, format!("non-finite eigenvalue {z}")));
        }
        out.push(z);
    }
    Ok(out)
}

pub fn load_spectrum(path: &Path) -> Result<Vec<Complex>, InputError> {
    let text = fs::read_to_string(path).map_err(|e| input_error(path, e.to_string()))?;
    parse_spectrum(&text, path)
}

pub fn study_csv(records: &[PerturbationRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "noise_level", "span_distance", "status"])
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.trial.to_string(),
            format_f64(r.noise_level),
            r.span_distance.map(format_f64).unwrap_or_default(),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn parse_study(text: &str, path: &Path) -> Result<Vec<PerturbationRecord>, InputError> {
    #[derive(Deserialize)]
    struct Row {
        trial: usize,
        noise_level: f64,
        span_distance: Option<f64>,
        status: String,
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize::<Row>()
        .map(|row| {
            row.map(|r| PerturbationRecord {
                trial: r.trial,
                noise_level: r.noise_level,
                span_distance: r.span_distance,
                status: r.status,
            })
            .map_err(|e| input_error(path, e.to_string()))
        })
        .collect()
}

/// Write `contents` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(contents.as_bytes()).and_then(|_| out.flush()) {
                // a closed pipe means the reader has seen enough
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn problem_round_trip() {
        let text = r#"{"p": [[-3, -3], [-2, 9], [6, 0]],
            "region": {"re_min": -1, "re_max": 1, "im_min": -2, "im_max": 2}}"#;
        let spec = ProblemSpec::parse(text, here()).unwrap();
        assert_eq!(spec.p[1], Complex::new(-2.0, 9.0));
        assert!(spec.boundary.is_none());
        let again = ProblemSpec::parse(&spec.to_json(), here()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let err = ProblemSpec::parse(r#"{"p": [[1, 0], [2, "x"], [3, 0]]}"#, here()).unwrap_err();
        assert!(err.message.contains("line 1"), "{}", err.message);
        assert!(err.message.contains("p[1]"), "{}", err.message);
        let err = ProblemSpec::parse("{}", here()).unwrap_err();
        assert!(err.message.contains("missing field `p`"), "{}", err.message);
        let err = ProblemSpec::parse(
            r#"{"p": [[1,0],[2,0],[3,0]], "boundary": [[[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]],
               [[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]]}"#,
            here(),
        )
        .unwrap_err();
        assert!(err.message.contains("boundary"), "{}", err.message);
    }

    #[test]
    fn spectrum_round_trip_is_exact() {
        let ls = vec![
            Complex::new(0.1, -1.0 / 3.0),
            Complex::new(-51.28, 1.93),
            Complex::new(1e-300, f64::MAX),
        ];
        let text = spectrum_csv(&ls);
        assert!(text.starts_with("re,im\n"));
        assert_eq!(parse_spectrum(&text, here()).unwrap(), ls);
        assert!(parse_spectrum("re,im\n", here()).unwrap().is_empty());
        assert!(parse_spectrum("x,y\n1,2\n", here()).is_err());
        let err = parse_spectrum("re,im\n1,2\n3,oops\n", here()).unwrap_err();
        assert!(err.message.contains("line 3"), "{}", err.message);
    }

    #[test]
    fn study_round_trip() {
        let rs = vec![
            PerturbationRecord {
                trial: 0,
                noise_level: 1e-4,
                span_distance: Some(2.5e-3),
                status: "ok".into(),
            },
            PerturbationRecord {
                trial: 1,
                noise_level: 1e-4,
                span_distance: None,
                status: "failed: minor vector is not decomposable, badly".into(),
            },
        ];
        assert_eq!(parse_study(&study_csv(&rs), here()).unwrap(), rs);
    }
}
