//! CSV renderings of results. Every real number is printed with nine
//! significant digits.

use std::fmt::Write;

use crate::adaptive::AdaptiveTrace;
use crate::eval::PrPoint;
use crate::window::LocalizationResult;

/// Nine significant digits, fixed notation for exponents in `-5..9`,
/// scientific otherwise, trailing zeros trimmed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let prec = (8 - exp) as usize;
        trim(format!("{x:.prec$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const MATCH_HEADER: &str = "query_index,best_ref,window_len,score,significance,status";
pub const TRACE_HEADER: &str = "query_index,chosen_L,best_ref,score,significance,status";
pub const PR_HEADER: &str = "threshold,precision,recall,n_accepted,n_correct";
pub const CURVE_HEADER: &str = "query_index,L,p";

fn hyp_fields(r: &LocalizationResult) -> (String, String, String) {
    match r.hypothesis {
        Some(h) => (h.best_ref.to_string(), sig9(h.score), sig9(h.significance)),
        None => (String::new(), String::new(), String::new()),
    }
}

/// Fixed-length match output.
pub fn match_csv(results: &[LocalizationResult]) -> String {
    let mut s = format!("{MATCH_HEADER}\n");
    for r in results {
        let (best, score, sig) = hyp_fields(r);
        writeln!(s, "{},{best},{},{score},{sig},{}", r.query_index, r.window_len, r.status().as_str())
            .unwrap();
    }
    s
}

/// Adaptive trace output; `chosen_L` is empty for frames without a hypothesis.
pub fn trace_csv(results: &[LocalizationResult]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in results {
        let (best, score, sig) = hyp_fields(r);
        let len = if r.hypothesis.is_some() { r.window_len.to_string() } else { String::new() };
        writeln!(s, "{},{len},{best},{score},{sig},{}", r.query_index, r.status().as_str()).unwrap();
    }
    s
}

pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut s = format!("{PR_HEADER}\n");
    for p in points {
        writeln!(
            s,
            "{},{},{},{},{}",
            sig9(p.threshold),
            sig9(p.precision),
            sig9(p.recall),
            p.n_accepted,
            p.n_correct
        )
        .unwrap();
    }
    s
}

/// Per-frame p(L) curves from a trace run with `keep_curves`.
pub fn curve_csv(trace: &AdaptiveTrace) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for f in &trace.frames {
        for w in f.curve.iter().flatten() {
            writeln!(s, "{},{},{}", f.result.query_index, w.window_len, sig9(w.p)).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::Hypothesis;

    #[test]
    fn sig9_examples() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-1.224744871391589), "-1.22474487");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567894.0), "1.23456789e9");
        assert_eq!(sig9(9.9999999999), "10");
        assert_eq!(sig9(0.000012345678912), "0.0000123456789");
        assert_eq!(sig9(1.5e-300), "1.5e-300");
        for &x in &[std::f64::consts::PI, -2.5e-7, 6.02214076e23, 0.1] {
            let back: f64 = sig9(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }

    #[test]
    fn csv_rows() {
        let r = [
            LocalizationResult::none(0, 10),
            LocalizationResult {
                query_index: 1,
                window_len: 10,
                hypothesis: Some(Hypothesis { best_ref: 7, score: -0.5, significance: 0.25, log_significance: 0.25f64.ln() }),
            },
        ];
        assert_eq!(
            match_csv(&r),
            format!("{MATCH_HEADER}\n0,,10,,,no_hypothesis\n1,7,10,-0.5,0.25,hypothesis\n")
        );
        assert_eq!(
            trace_csv(&r),
            format!("{TRACE_HEADER}\n0,,,,,no_hypothesis\n1,10,7,-0.5,0.25,hypothesis\n")
        );
    }
}
