//! CSV and summary emission.
//!
//! Every artifact is deterministic for a fixed `(config, seed)` pair: no
//! timestamps, float formatting through Rust's shortest round-trip `{}`,
//! `\n` line endings, `.` decimal separator, mandatory header row. The
//! config hash and seed ride along in a leading comment line so replays are
//! attributable without breaking byte identity.

use std::io::Write;
use std::path::Path;

/// FNV-1a over raw bytes; used to fingerprint config files.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Canonical float formatting: shortest representation that round-trips.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

/// In-memory CSV table with a mandatory header row.
#[derive(Clone, Debug)]
pub struct Csv {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Csv {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = String>) {
        let row: Vec<String> = row.into_iter().collect();
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Render with an attribution comment line, the header row, then data.
    pub fn render(&self, config_hash: u64, seed: u64) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# chainlab config_hash={config_hash:016x} seed={seed}\n"
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path, config_hash: u64, seed: u64) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render(config_hash, seed).as_bytes())
    }
}

/// Line-oriented human-readable summary, same determinism rules.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    lines: Vec<String>,
}

impl Summary {
    pub fn new(title: &str, config_hash: u64, seed: u64) -> Self {
        Summary {
            lines: vec![
                format!("== {title} =="),
                format!("config_hash: {config_hash:016x}"),
                format!("seed: {seed}"),
            ],
        }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    pub fn render(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_renders_deterministically() {
        let mut csv = Csv::new(["t", "h"]);
        csv.push([fmt_f64(0.1), fmt_f64(3.0)]);
        csv.push([fmt_f64(0.2), fmt_f64(2.5)]);
        let a = csv.render(0xabcd, 7);
        let b = csv.render(0xabcd, 7);
        assert_eq!(a, b);
        assert!(a.starts_with("# chainlab config_hash=000000000000abcd seed=7\nt,h\n"));
        assert!(a.ends_with("0.2,2.5\n"));
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, 1e-10, 123456.789, -2.5e300, 1.0 / 3.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(!s.contains(','));
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv64(b"a"), fnv64(b"a"));
        assert_ne!(fnv64(b"a"), fnv64(b"b"));
    }
}
