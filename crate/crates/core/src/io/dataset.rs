use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sampler::validate_observations;
use crate::spd::SpdMatrix;

pub const DATASET_FORMAT: &str = "wishmix-dataset";
pub const DATASET_VERSION: u32 = 1;

/// A set of SPD observations on disk, with optional truth and subject ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetBundle {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    #[serde(default)]
    pub labels: Option<Vec<usize>>,
    #[serde(default)]
    pub subject_ids: Option<Vec<String>>,
    #[serde(default)]
    pub provenance: BTreeMap<String, Value>,
    /// Full p×p matrices, row-major.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl DatasetBundle {
    pub fn from_matrices(
        data: &[SpdMatrix],
        labels: Option<Vec<usize>>,
        subject_ids: Option<Vec<String>>,
        provenance: BTreeMap<String, Value>,
    ) -> Result<Self> {
        let dim = data
            .first()
            .ok_or_else(|| Error::Data("data set is empty".into()))?
            .dim();
        let matrices = data
            .iter()
            .map(|w| {
                let m = w.matrix();
                (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
            })
            .collect();
        let bundle = DatasetBundle {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            dim,
            labels,
            subject_ids,
            provenance,
            matrices,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Checks the header, the label/id lengths and that every matrix is SPD.
    pub fn validate(&self) -> Result<()> {
        self.observations().map(|_| ())
    }

    pub fn observations(&self) -> Result<Vec<SpdMatrix>> {
        if self.format != DATASET_FORMAT {
            return Err(Error::Data(format!("not a dataset bundle (format {:?})", self.format)));
        }
        if self.version != DATASET_VERSION {
            return Err(Error::Data(format!("unsupported dataset version {}", self.version)));
        }
        if self.matrices.is_empty() {
            return Err(Error::Data("data set is empty".into()));
        }
        let n = self.matrices.len();
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: l.len() });
            }
        }
        if let Some(ids) = &self.subject_ids {
            if ids.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: ids.len() });
            }
        }
        let p = self.dim;
        let mut raw = Vec::with_capacity(n);
        for (index, rows) in self.matrices.iter().enumerate() {
            if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                let found = rows.iter().map(Vec::len).chain([rows.len()]).find(|&l| l != p).unwrap_or(p);
                return Err(Error::HeterogeneousDims { index, expected: p, found });
            }
            raw.push(DMatrix::from_fn(p, p, |i, j| rows[i][j]));
        }
        validate_observations(raw)
    }

    /// JSON text with one matrix row per line.
    pub fn to_json(&self) -> Result<String> {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"format\": {},", enc(&self.format)?);
        let _ = writeln!(out, "  \"version\": {},", self.version);
        let _ = writeln!(out, "  \"dim\": {},", self.dim);
        let _ = writeln!(out, "  \"labels\": {},", enc(&self.labels)?);
        let _ = writeln!(out, "  \"subject_ids\": {},", enc(&self.subject_ids)?);
        let _ = writeln!(out, "  \"provenance\": {},", enc(&self.provenance)?);
        out.push_str("  \"matrices\": [");
        for (k, m) in self.matrices.iter().enumerate() {
            out.push_str(if k == 0 { "\n    [" } else { ",\n    [" });
            for (i, row) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n     ");
                }
                out.push_str(&enc(row)?);
            }
            out.push(']');
        }
        out.push_str("\n  ]\n}\n");
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: DatasetBundle = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("dataset bundle: {e}")))?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| with_path(e, path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json()?)
    }
}

fn enc<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Data(e.to_string()))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}
