//! Deterministic artifact emission: CSV with shortest round-trip floats and
//! a JSON summary with sorted keys. Output bytes are a pure function of the
//! config content; volatile run facts (wall time, worker count) go to
//! stdout only.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Shortest decimal representation that round-trips; '.' separator,
/// exponent form where shorter, locale-independent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Lowercase hex SHA-256 of the raw config bytes: the content hash embedded
/// in every summary.
pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub struct RunOutcome {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub scalars: serde_json::Value,
    pub violations: Vec<String>,
}

pub fn write_artifacts(
    out_dir: &Path,
    subcommand: &str,
    hash: &str,
    outcome: &RunOutcome,
) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;

    let csv_path = out_dir.join(format!("{subcommand}.csv"));
    let mut csv = fs::File::create(csv_path)?;
    writeln!(csv, "{}", outcome.header.join(","))?;
    for row in &outcome.rows {
        writeln!(csv, "{}", row.join(","))?;
    }

    let summary = serde_json::json!({
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "scalars": outcome.scalars,
        "violations": outcome.violations,
    });
    let json_path = out_dir.join("summary.json");
    let mut json = fs::File::create(json_path)?;
    writeln!(json, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.1, 1.0, -3.5e-7, 1e300, 0.6180339887498949, f64::INFINITY] {
            let s = fmt_f64(v);
            assert!(!s.contains(','));
            if v.is_finite() {
                let back: f64 = s.parse().unwrap();
                assert_eq!(back, v, "{s}");
            }
        }
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = config_hash(b"abc");
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(b"abc"));
        assert_ne!(a, config_hash(b"abd"));
    }
}
