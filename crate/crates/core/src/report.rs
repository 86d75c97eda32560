//! Deterministic CSV and JSON emission for every table the library
//! produces. Numbers are written with 17 significant digits, '.' decimal
//! separator and '\n' line endings, so fixed-seed runs are byte-identical.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::iteration::{ProfileTable, RegimeReport};
use crate::simulate::{
    ConvergenceRow, DiscontinuityRow, HighDisorderTable, SampleBatch, TailRow,
    WeakConvergenceReport,
};
use crate::sphere::SpectralCoeffs;

/// Short hex digest of a canonical label, used to pin runs to their inputs.
pub fn digest8(label: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// 17-significant-digit scientific form; round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Profile table CSV: t, value, converged_at, profile_kind.
pub fn profile_csv(table: &ProfileTable) -> String {
    let mut out = String::from("t,value,converged_at,profile_kind\n");
    for i in 0..table.grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(table.grid[i]),
            fmt_float(table.values[i]),
            table.converged_at[i],
            table.profile_kind.as_str()
        );
    }
    out
}

/// Spectral coefficients CSV: l, D_l.
pub fn spectral_csv(sc: &SpectralCoeffs) -> String {
    let mut out = String::from("l,coefficient\n");
    for (l, &d) in sc.coeffs.iter().enumerate() {
        let _ = writeln!(out, "{l},{}", fmt_float(d));
    }
    out
}

/// Sample batch CSV: one draw per row, one column per configuration point.
pub fn samples_csv(batch: &SampleBatch) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..batch.m).map(|j| format!("x{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in 0..batch.n {
        for j in 0..batch.m {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_float(batch.draws[row * batch.m + j]));
        }
        out.push('\n');
    }
    out
}

/// Covariance-rescaling table CSV.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("L,i,j,rescaled,limit,abs_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.l,
            r.i,
            r.j,
            fmt_float(r.rescaled),
            fmt_float(r.limit),
            fmt_float(r.abs_error)
        );
    }
    out
}

/// Tail-rate curve CSV.
pub fn tail_csv(rows: &[TailRow]) -> String {
    let mut out = String::from("L,log_tail_over_speed,limit,abs_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.l,
            fmt_float(r.log_tail_over_speed),
            fmt_float(r.limit),
            fmt_float(r.abs_error)
        );
    }
    out
}

/// Sparse-discontinuity table CSV.
pub fn discontinuity_csv(rows: &[DiscontinuityRow]) -> String {
    let mut out =
        String::from("eps,diag_1,diag_2,off_diag,ratio,expected_diag,expected_off\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_float(r.eps),
            fmt_float(r.diag_1),
            fmt_float(r.diag_2),
            fmt_float(r.off_diag),
            fmt_float(r.ratio),
            fmt_float(r.expected_diag),
            fmt_float(r.expected_off)
        );
    }
    out
}

/// High-disorder limit table CSV.
pub fn high_disorder_csv(table: &HighDisorderTable) -> String {
    let mut out = String::from("centering,i,j,computed,limit,abs_error\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.centering.as_str(),
            r.i,
            r.j,
            fmt_float(r.computed),
            fmt_float(r.limit),
            fmt_float(r.abs_error)
        );
    }
    out
}

/// Weak-convergence covariance bands CSV.
pub fn weak_convergence_csv(report: &WeakConvergenceReport) -> String {
    let mut out = String::from("i,j,empirical,limit,band,inside\n");
    for b in &report.covariance_bands {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.i,
            b.j,
            fmt_float(b.empirical),
            fmt_float(b.limit),
            fmt_float(b.band),
            b.inside
        );
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Regime report JSON.
pub fn regime_json(report: &RegimeReport) -> String {
    to_json_pretty(report)
}
