//! Report emission: CSV tables, JSON summaries, minimal static SVG plots,
//! and the checksummed artifact manifest.

use crate::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// List of produced artifacts with checksums, plus run provenance.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub library_version: String,
    pub schema_version: u32,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(experiment: &str, config_hash: String) -> Self {
        Manifest {
            experiment: experiment.to_string(),
            config_hash,
            library_version: crate::VERSION.to_string(),
            schema_version: 1,
            files: Vec::new(),
        }
    }

    /// Write `bytes` under the output directory and record the checksum.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        self.files.push(ManifestEntry { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// Serialize the manifest itself (sorted file order by name for
    /// reproducibility) and write it as `manifest.json`.
    pub fn finalize(&mut self, dir: &Path) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let text = serde_json::to_string_pretty(&self)?;
        let path = dir.join("manifest.json");
        fs::create_dir_all(dir)?;
        fs::write(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// RFC-4180-style CSV from a header and rows of preformatted cells.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let escaped: Vec<String> = row
            .iter()
            .map(|cell| {
                if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
                    format!("\"{}\"", cell.replace('"', "\"\""))
                } else {
                    cell.clone()
                }
            })
            .collect();
        out.push_str(&escaped.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Minimal deterministic SVG: scatter of (log lag, log S) with the fitted
/// line, used by the regularity reports.
pub fn svg_loglog_plot(title: &str, points: &[(f64, f64)], slope: f64, intercept: f64) -> Vec<u8> {
    let (w, h) = (560.0, 400.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 50.0);
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (xmin, xmax) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (ymin, ymax) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let xr = (xmax - xmin).max(1e-12);
    let yr = (ymax - ymin).max(1e-12);
    let px = |x: f64| ml + (x - xmin) / xr * (w - ml - mr);
    let py = |y: f64| h - mb - (y - ymin) / yr * (h - mt - mb);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>\n",
        ml
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        h - mb
    ));
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\">log lag</text>\n",
        0.5 * (ml + w - mr) - 24.0,
        h - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 14 {:.2})\">log S_p</text>\n",
        0.5 * (mt + h - mb) + 24.0,
        0.5 * (mt + h - mb) + 24.0
    ));
    // fitted line across the x-range
    let y0 = slope * xmin + intercept;
    let y1 = slope * xmax + intercept;
    s.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#C62828\" stroke-width=\"1.5\"/>\n",
        px(xmin),
        py(y0),
        px(xmax),
        py(y1)
    ));
    for (x, y) in xs.iter().zip(&ys) {
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#1565C0\"/>\n",
            px(*x),
            py(*y)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\">slope = {slope:.4}</text>\n",
        ml + 8.0,
        mt + 16.0
    ));
    s.push_str("</svg>\n");
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escapes_delimiters() {
        let bytes = csv_bytes(&["a", "b"], &[vec!["1,5".into(), "plain".into()]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n\"1,5\",plain\n");
    }

    #[test]
    fn manifest_is_deterministic() {
        let dir = std::env::temp_dir().join(format!("spde-lab-test-{}", std::process::id()));
        let run = |tag: &str| -> String {
            let d = dir.join(tag);
            let mut m = Manifest::new("solve", "cafebabe".into());
            m.emit(&d, "b.csv", b"x,y\n1,2\n").unwrap();
            m.emit(&d, "a.csv", b"q\n3\n").unwrap();
            let p = m.finalize(&d).unwrap();
            std::fs::read_to_string(p).unwrap()
        };
        assert_eq!(run("one"), run("two"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn svg_is_wellformed_and_deterministic() {
        let pts = [(1.0, 0.5), (2.0, 0.9), (4.0, 1.7)];
        let a = svg_loglog_plot("t", &pts, 0.5, -0.7);
        let b = svg_loglog_plot("t", &pts, 0.5, -0.7);
        assert_eq!(a, b);
        let s = String::from_utf8(a).unwrap();
        assert!(s.starts_with("<svg"));
        assert!(s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<circle").count(), 3);
    }
}
