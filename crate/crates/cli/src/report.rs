//! Report emission.

use std::fmt::Write as _;

use clap::ValueEnum;

use crate::suite::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

fn text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "suite {:?}  seed {}  points {}  scenario {}", r.suite, r.seed, r.points, r.scenario_digest);
    for rec in &r.records {
        let glyph = if rec.pass { "✓" } else { "✗" };
        let residual = rec.residual.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let _ = write!(out, "{glyph} {:<30} {:>10} <= {:<8.0e} {}", rec.id, residual, rec.tolerance, rec.anchor);
        if let Some(note) = &rec.note {
            let _ = write!(out, "  [{note}]");
        }
        if let Some(s) = rec.seconds {
            let _ = write!(out, "  ({s:.3}s)");
        }
        out.push('\n');
    }
    let failed = r.records.iter().filter(|rec| !rec.pass).count();
    let _ = writeln!(out, "{} checks, {} failed", r.records.len(), failed);
    out
}

/// JSON keys follow struct declaration order and maps are sorted, so equal
/// reports emit identical bytes.
pub fn emit_report(r: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(r).expect("reports serialize") + "\n",
        Format::Text => text(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{Record, Suite};

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::empty(Suite::All, 7, 50, "abc".into());
        let json = emit_report(&r, Format::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["records"], serde_json::json!([]));
    }

    #[test]
    fn failing_record_shows_anchor_verbatim() {
        let mut r = Report::empty(Suite::Bianchi, 7, 50, "abc".into());
        r.records.push(Record {
            id: "bianchi.defect".into(),
            anchor: "Bianchi identity of the field strength with the zeta defect".into(),
            residual: Some(0.5),
            tolerance: 1e-8,
            pass: false,
            note: None,
            seconds: None,
        });
        let out = emit_report(&r, Format::Text);
        assert!(out.contains("✗ bianchi.defect"));
        assert!(out.contains("Bianchi identity of the field strength with the zeta defect"));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut r = Report::empty(Suite::Gauge, 3, 10, "d".into());
        r.records.push(Record {
            id: "gauge.covariance".into(),
            anchor: "a".into(),
            residual: Some(1.2345678901234567e-13),
            tolerance: 1e-8,
            pass: true,
            note: Some("n".into()),
            seconds: None,
        });
        let json = emit_report(&r, Format::Json);
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(emit_report(&back, Format::Json), json);
    }
}
