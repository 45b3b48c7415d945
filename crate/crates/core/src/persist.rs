//! Text knowledge-base format for trained similarity models.
//!
//! ```text
//! resyduo-model 1
//! similarity msd
//! mode user
//! min_support 1
//! k 20
//! global_mean 0.25
//! training_hash <sha256 hex>
//! axis 3
//! "label-0"
//! ...
//! sim
//! 1
//! 0.5 1
//! 0.25 0.5 1
//! end
//! ```
//!
//! Axis labels are JSON string literals; similarity rows are the lower
//! triangle, diagonal included, in shortest round-trip decimal form.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::knn::{CfMode, KnnConfig, SimilarityMatrix, SimilarityModel};
use crate::matrix::RatingMatrix;
use crate::similarity::Similarity;

const MAGIC: &str = "resyduo-model 1";

pub fn model_to_text(model: &SimilarityModel) -> String {
    let cfg = model.config();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "similarity {}", cfg.similarity).unwrap();
    writeln!(out, "mode {}", cfg.mode).unwrap();
    writeln!(out, "min_support {}", cfg.min_support).unwrap();
    writeln!(out, "k {}", cfg.k).unwrap();
    writeln!(out, "global_mean {}", model.global_mean()).unwrap();
    writeln!(out, "training_hash {}", model.training_hash()).unwrap();
    writeln!(out, "axis {}", model.axis_labels().len()).unwrap();
    for label in model.axis_labels() {
        writeln!(out, "{}", serde_json::to_string(label).unwrap()).unwrap();
    }
    writeln!(out, "sim").unwrap();
    let sim = model.similarities();
    for i in 0..sim.side() {
        let row: Vec<String> = sim.lower_row(i).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    writeln!(out, "end").unwrap();
    out
}

pub fn save_model(model: &SimilarityModel, path: &Path) -> Result<()> {
    crate::atomic_write(path, model_to_text(model).as_bytes())
}

/// Header and similarity payload of a model file, before it is bound to a
/// training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub config: KnnConfig,
    pub global_mean: f64,
    pub training_hash: String,
    pub axis_labels: Vec<String>,
    pub sim: SimilarityMatrix,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "model file is truncated")))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (no, line) = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| (no, v))
            .ok_or_else(|| Error::ModelFormat {
                line: no,
                message: format!("expected `{key} <value>`"),
            })
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (no, v) = self.keyed(key)?;
        v.parse().map_err(|e: T::Err| Error::ModelFormat {
            line: no,
            message: format!("{key}: {e}"),
        })
    }
}

pub fn parse_model_text(text: &str) -> Result<StoredModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (no, magic) = lines.next_line()?;
    if magic != MAGIC {
        return Err(Error::ModelFormat {
            line: no,
            message: format!("expected `{MAGIC}`"),
        });
    }
    let similarity: Similarity = lines.parsed("similarity")?;
    let mode: CfMode = lines.parsed("mode")?;
    let min_support: usize = lines.parsed("min_support")?;
    let k: usize = lines.parsed("k")?;
    let config = KnnConfig::new(similarity, mode, min_support, k)?;
    let global_mean: f64 = lines.parsed("global_mean")?;
    let (_, hash) = lines.keyed("training_hash")?;
    let side: usize = lines.parsed("axis")?;

    let mut axis_labels = Vec::with_capacity(side);
    for _ in 0..side {
        let (no, line) = lines.next_line()?;
        let label: String = serde_json::from_str(line).map_err(|e| Error::ModelFormat {
            line: no,
            message: format!("axis label: {e}"),
        })?;
        axis_labels.push(label);
    }
    let (no, marker) = lines.next_line()?;
    if marker != "sim" {
        return Err(Error::ModelFormat {
            line: no,
            message: "expected `sim`".into(),
        });
    }
    let mut lower = Vec::with_capacity(side * (side + 1) / 2);
    for i in 0..side {
        let (no, line) = lines.next_line()?;
        let row = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::ModelFormat {
                line: no,
                message: format!("similarity value: {e}"),
            })?;
        if row.len() != i + 1 {
            return Err(Error::ModelFormat {
                line: no,
                message: format!("similarity row {i} has {} values, expected {}", row.len(), i + 1),
            });
        }
        lower.extend(row);
    }
    let (no, end) = lines.next_line()?;
    if end != "end" {
        return Err(Error::ModelFormat {
            line: no,
            message: "expected `end`".into(),
        });
    }
    Ok(StoredModel {
        config,
        global_mean,
        training_hash: hash.to_string(),
        axis_labels,
        sim: SimilarityMatrix::from_lower(side, lower)?,
    })
}

impl StoredModel {
    /// Binds the stored similarities to `training`. A hash mismatch is a
    /// stale-model error unless `force` is set; the axis labels must match
    /// either way.
    pub fn bind(self, training: Arc<RatingMatrix>, force: bool) -> Result<SimilarityModel> {
        let found = training.content_hash();
        if found != self.training_hash && !force {
            return Err(Error::StaleModel {
                expected: self.training_hash,
                found,
            });
        }
        let axis = match self.config.mode {
            CfMode::UserBased => training.row_labels(),
            CfMode::ItemBased => training.col_labels(),
        };
        if axis != self.axis_labels.as_slice() {
            return Err(Error::ModelState(
                "stored axis labels do not match the supplied training matrix".into(),
            ));
        }
        SimilarityModel::from_parts(self.config, self.sim, training, self.global_mean)
    }
}

pub fn load_model(path: &Path, training: impl Into<Arc<RatingMatrix>>, force: bool) -> Result<SimilarityModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model_text(&text)?.bind(training.into(), force)
}
