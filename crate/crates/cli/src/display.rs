//! Human-readable rendering of boundary conditions and root checks.

use bcrecon::{BoundaryMatrix, Complex, ConditionReport, SignedSubset};

/// Coefficients smaller than this fraction of the row maximum print as zero.
pub const DISPLAY_THRESHOLD: f64 = 1e-6;

const TERMS: [&str; 6] = ["y(0)", "y'(0)", "y''(0)", "y(1)", "y'(1)", "y''(1)"];

fn trim_number(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Sign and magnitude text for one coefficient; `None` if it prints as zero.
fn coefficient(c: Complex, row_max: f64) -> Option<(bool, String)> {
    let cut = DISPLAY_THRESHOLD * row_max;
    let re = if c.re.abs() < cut { 0.0 } else { c.re };
    let im = if c.im.abs() < cut { 0.0 } else { c.im };
    match (re != 0.0, im != 0.0) {
        (false, false) => None,
        (true, false) => {
            let mag = trim_number(re.abs());
            Some((re < 0.0, if mag == "1" { String::new() } else { format!("{mag} ") }))
        }
        (false, true) => {
            let mag = trim_number(im.abs());
            let mag = if mag == "1" { String::new() } else { mag };
            Some((im < 0.0, format!("{mag}i ")))
        }
        (true, true) => {
            let sign = if im < 0.0 { '-' } else { '+' };
            Some((
                false,
                format!("({}{sign}{}i) ", trim_number(re), trim_number(im.abs())),
            ))
        }
    }
}

/// `U_k(y) = ... = 0` for each row, mirroring the usual written form.
pub fn boundary_conditions(a: &BoundaryMatrix) -> Vec<String> {
    a.rows()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let row_max = row.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let mut text = String::new();
            for (c, term) in row.iter().zip(TERMS) {
                let Some((negative, mag)) = coefficient(*c, row_max) else {
                    continue;
                };
                match (text.is_empty(), negative) {
                    (true, true) => text.push('-'),
                    (true, false) => {}
                    (false, true) => text.push_str(" - "),
                    (false, false) => text.push_str(" + "),
                }
                text.push_str(&mag);
                text.push_str(term);
            }
            if text.is_empty() {
                text.push('0');
            }
            format!("U_{}(y) = {} = 0", k + 1, text)
        })
        .collect()
}

fn fixed(x: f64) -> String {
    let s = format!("{x:.10}");
    match s.strip_prefix('-') {
        // roundoff-sized negatives would otherwise print as -0.0000000000
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.into(),
        _ => s,
    }
}

pub fn complex(z: Complex) -> String {
    let im = fixed(z.im);
    match im.strip_prefix('-') {
        Some(mag) => format!("{}-{mag}i", fixed(z.re)),
        None => format!("{}+{im}i", fixed(z.re)),
    }
}

fn subset_label(s: &SignedSubset) -> String {
    s.subset
        .iter()
        .zip(&s.signs)
        .map(|(i, sign)| format!("{}w{i}", if *sign > 0 { '+' } else { '-' }))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Table of every signed subset sum with its verdict, followed by the
/// coefficient checks.
pub fn condition_table(report: &ConditionReport, subsets: &[SignedSubset]) -> Vec<String> {
    let mut lines = Vec::new();
    for (k, w) in report.roots.iter().enumerate() {
        lines.push(format!("w{} = {}", k + 1, complex(*w)));
    }
    lines.push(format!(
        "signed subset sums ({} combinations, tolerance {:.1e}):",
        report.combinations_checked, report.tolerance_used
    ));
    for s in subsets {
        let ok = s.value.norm() > report.tolerance_used;
        lines.push(format!(
            "  {:<14} = {:<34} {}",
            subset_label(s),
            complex(s.value),
            if ok { "ok" } else { "VANISHES" }
        ));
    }
    let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
    lines.push(format!("p2 != 0: {}", verdict(report.p2_nonzero)));
    lines.push(format!("p1 != 0: {}", verdict(report.p1_nonzero)));
    lines.push(format!("p3 != 0: {}", verdict(report.p3_nonzero)));
    if let Some(w) = &report.violating_combination {
        lines.push(format!("first violation: {}", subset_label(w)));
    }
    lines.push(format!(
        "conditions: {}",
        if report.all_pass() { "all pass" } else { "FAILED" }
    ));
    lines
}
