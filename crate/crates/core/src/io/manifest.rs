use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic::write_atomic;
use crate::io::ppm::read_ppm;
use crate::synth::TextureImage;
use crate::synth::semantics::{label_name, SEMANTIC_DIM};

pub const MANIFEST_MAGIC: &str = "# texsem manifest v1";
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// Image path relative to the manifest's directory.
    pub image: String,
    pub semantics: Vec<f64>,
    /// Empty when the manifest carries no features.
    pub features: Vec<f64>,
}

/// Dataset index: one row per image with its semantic vector and optional features.
///
/// The text form is a magic line with the dimension counts, a column-name line, and
/// one tab-separated row per image:
///
/// ```text
/// # texsem manifest v1<TAB>semantic_dim=94<TAB>feature_dim=24
/// image<TAB>adj:repetitive<TAB>...<TAB>color<TAB>gabor_s0_o0_mean<TAB>...
/// tex_00000.ppm<TAB>0.31<TAB>...
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub semantic_dim: usize,
    pub feature_names: Vec<String>,
    pub rows: Vec<ManifestRow>,
}

fn parse_err(line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        what: "manifest",
        line,
        detail: detail.into(),
    }
}

impl DatasetManifest {
    pub fn new(semantic_dim: usize) -> Self {
        Self {
            semantic_dim,
            feature_names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn semantic_names(&self) -> Vec<String> {
        if self.semantic_dim == SEMANTIC_DIM {
            (0..SEMANTIC_DIM).map(label_name).collect()
        } else {
            (0..self.semantic_dim).map(|i| format!("sem_{i}")).collect()
        }
    }

    fn check_row(&self, row: &ManifestRow) -> Result<()> {
        if row.semantics.len() != self.semantic_dim {
            return Err(Error::DimensionMismatch {
                expected: self.semantic_dim,
                got: row.semantics.len(),
            });
        }
        if row.features.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: row.features.len(),
            });
        }
        if row.image.is_empty() || row.image.contains(['\t', '\n']) {
            return Err(Error::Config(format!("invalid image name {:?}", row.image)));
        }
        Ok(())
    }

    pub fn push(&mut self, row: ManifestRow) -> Result<()> {
        self.check_row(&row)?;
        self.rows.push(row);
        Ok(())
    }

    /// Replaces every row's features; `features[i]` belongs to row `i`.
    pub fn set_features(&mut self, names: Vec<String>, features: Vec<Vec<f64>>) -> Result<()> {
        if features.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                left: self.rows.len(),
                right: features.len(),
            });
        }
        if let Some(bad) = features.iter().find(|f| f.len() != names.len()) {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: bad.len(),
            });
        }
        self.feature_names = names;
        for (row, f) in self.rows.iter_mut().zip(features) {
            row.features = f;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MANIFEST_MAGIC}\tsemantic_dim={}\tfeature_dim={}\n",
            self.semantic_dim,
            self.feature_dim()
        );
        let mut header = vec!["image".to_string()];
        header.extend(self.semantic_names());
        header.extend(self.feature_names.iter().cloned());
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.image);
            for v in row.semantics.iter().chain(&row.features) {
                out.push('\t');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let magic = lines.next().unwrap_or_default();
        let mut parts = magic.split('\t');
        if parts.next() != Some(MANIFEST_MAGIC) {
            return Err(parse_err(1, "missing manifest magic line"));
        }
        let mut dim = |key: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(1, format!("missing {key}<n>")))
        };
        let semantic_dim = dim("semantic_dim=")?;
        let feature_dim = dim("feature_dim=")?;

        let header: Vec<&str> = lines.next().ok_or_else(|| parse_err(2, "missing column header"))?.split('\t').collect();
        let width = 1 + semantic_dim + feature_dim;
        if header.len() != width || header[0] != "image" {
            return Err(parse_err(2, format!("header has {} columns, expected {width}", header.len())));
        }
        let mut manifest = DatasetManifest {
            semantic_dim,
            feature_names: header[1 + semantic_dim..].iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        };
        let body: Vec<&str> = lines.collect();
        for (k, line) in body.iter().enumerate() {
            let line_no = k + 3;
            if line.is_empty() && k + 1 == body.len() {
                break;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != width {
                return Err(parse_err(line_no, format!("row has {} columns, expected {width}", cells.len())));
            }
            let values = cells[1..]
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(line_no, format!("bad number {c:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let row = ManifestRow {
                image: cells[0].to_string(),
                semantics: values[..semantic_dim].to_vec(),
                features: values[semantic_dim..].to_vec(),
            };
            manifest.check_row(&row).map_err(|e| parse_err(line_no, e.to_string()))?;
            manifest.rows.push(row);
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Reads every referenced image from `dir`, in row order.
    pub fn load_images(&self, dir: &Path) -> Result<Vec<TextureImage>> {
        self.verify_images(dir)?;
        self.rows.iter().map(|r| read_ppm(&dir.join(&r.image))).collect()
    }

    /// Checks that every referenced image exists under `dir`.
    pub fn verify_images(&self, dir: &Path) -> Result<()> {
        for row in &self.rows {
            let p = dir.join(&row.image);
            if !p.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("manifest references missing image {}", p.display()),
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetManifest {
        let mut m = DatasetManifest::new(3);
        for i in 0..3 {
            m.push(ManifestRow {
                image: format!("img{i}.ppm"),
                semantics: vec![i as f64, -0.2, 1.0 / 3.0],
                features: vec![],
            })
            .unwrap();
        }
        m
    }

    #[test]
    fn round_trip() {
        let mut m = sample();
        assert_eq!(DatasetManifest::parse(&m.to_text()).unwrap(), m);
        m.set_features(vec!["a".into(), "b".into()], vec![vec![0.5, 1e-300]; 3]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("# texsem manifest v1\tsemantic_dim=3\tfeature_dim=2\nimage\tsem_0"));
        assert!(text.ends_with('\n'));
        assert_eq!(DatasetManifest::parse(&text).unwrap(), m);
    }

    #[test]
    fn full_semantic_header_uses_label_names() {
        let text = DatasetManifest::new(SEMANTIC_DIM).to_text();
        let header = text.lines().nth(1).unwrap();
        assert!(header.starts_with("image\tadj:repetitive\tadj:floral"));
        assert!(header.ends_with("noun:windmill\tcolor"));
    }

    #[test]
    fn wrong_arity_row_is_rejected() {
        let mut text = sample().to_text();
        text.push_str("extra.ppm\t1\t2\n");
        assert!(matches!(DatasetManifest::parse(&text), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn push_checks_dimensions() {
        let mut m = DatasetManifest::new(3);
        let row = ManifestRow {
            image: "x.ppm".into(),
            semantics: vec![0.0; 2],
            features: vec![],
        };
        assert!(m.push(row).is_err());
    }
}
