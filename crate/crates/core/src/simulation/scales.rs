use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

pub const BUNDLED_SCALE_NAMES: [&str; 5] =
    ["small-k3", "small-k5", "medium-k3", "medium-k5", "large-block"];

/// A named list of scale matrices as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSet {
    pub format: String,
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl ScaleSet {
    pub fn to_spd(&self) -> Result<Vec<SpdMatrix>> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                if rows.len() != self.dim {
                    return Err(Error::HeterogeneousDims {
                        index: i,
                        expected: self.dim,
                        found: rows.len(),
                    });
                }
                SpdMatrix::from_rows(rows).map_err(|e| Error::NonSpdObservation {
                    index: i,
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

pub fn load_scale_set(text: &str) -> Result<ScaleSet> {
    let set: ScaleSet =
        serde_json::from_str(text).map_err(|e| Error::config("scale set", e.to_string()))?;
    if set.format != "wishmix-scales" {
        return Err(Error::config("scale set", format!("unknown format {:?}", set.format)));
    }
    Ok(set)
}

fn bundled_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "small-k3" => include_str!("../../scales/small-k3.json"),
        "small-k5" => include_str!("../../scales/small-k5.json"),
        "medium-k3" => include_str!("../../scales/medium-k3.json"),
        "medium-k5" => include_str!("../../scales/medium-k5.json"),
        "large-block" => include_str!("../../scales/large-block.json"),
        _ => return None,
    })
}

/// One of the shipped scale sets (see [`BUNDLED_SCALE_NAMES`]).
pub fn bundled_scales(name: &str) -> Result<Vec<SpdMatrix>> {
    let text = bundled_text(name)
        .ok_or_else(|| Error::MissingScaleConfig(format!("no bundled scale set named {name:?}")))?;
    load_scale_set(text)?.to_spd()
}
