//! Locale-independent CSV with a `#` metadata header.
//!
//! Numbers are written as `{:.16e}` (17 significant digits, `.` separator).
//! The `# generated_unix_time` line is the only one that differs between
//! runs of the same sweep.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use dlgc::sweep::{AxisParam, RowOutcome, SweepResult};

pub const TIMESTAMP_PREFIX: &str = "# generated_unix_time:";

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn metadata_block(metadata: &[(String, String)]) -> String {
    let mut s = String::from("# dlgc steady-state correlations\n");
    let _ = writeln!(s, "{TIMESTAMP_PREFIX} {}", timestamp());
    for (k, v) in metadata {
        let _ = writeln!(s, "# {k}: {}", v.replace('\n', " "));
    }
    s
}

pub fn header(result: &SweepResult) -> Vec<String> {
    let spec = &result.spec;
    let mut cols: Vec<String> = spec.axes.iter().map(|a| a.param.column().to_string()).collect();
    if spec.axes.iter().any(|a| a.param == AxisParam::GmaOverG0) {
        cols.push("gma_over_g".into());
    }
    cols.extend(spec.measures.iter().map(|m| m.column().to_string()));
    cols.push("stable".into());
    cols
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let spec = &result.spec;
    let mut s = metadata_block(&result.metadata);
    let failed = result
        .rows
        .iter()
        .filter(|r| matches!(r.outcome, RowOutcome::Failed(_)))
        .count();
    if failed > 0 {
        let _ = writeln!(s, "# failed_points: {failed}");
    }
    s.push_str(&header(result).join(","));
    s.push('\n');
    let has_gma = spec.has_gma_axis();
    for row in &result.rows {
        let mut fields: Vec<String> = row.coords.iter().map(|&x| number(x)).collect();
        if has_gma {
            fields.push(match (row.is_stable(), row.gma_over_g) {
                (true, Some(g)) => number(g),
                _ => String::new(),
            });
        }
        for m in &spec.measures {
            fields.push(row.measure(*m).map(number).unwrap_or_default());
        }
        fields.push(if row.is_stable() { "1" } else { "0" }.into());
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Drops the timestamp line so two outputs can be compared.
#[cfg(test)]
pub fn strip_timestamp(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with(TIMESTAMP_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect()
}
