//! Feature schema: named groups of encoded columns, fitted from a raw table.
//!
//! The schema is the contract between raw CSV rows and the numeric feature
//! space: it records how each named feature group maps onto a span of
//! encoded columns, the category vocabularies, the standardization
//! statistics for continuous columns, and which group is the protected
//! attribute. Serialized as JSON with exactly these field names; the
//! SHA-256 of that JSON is the fingerprint embedded in model files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::format::ColumnKind;
use crate::data::table::RawTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    /// Standardized to zero mean / unit variance with these fit-time stats.
    Continuous { mean: f64, stddev: f64 },
    /// Two categories in one column: `categories[1]` encodes as 1.
    /// For the protected group the privileged category is stored last,
    /// so privileged membership always encodes as 1.
    BinaryCategorical { categories: [String; 2] },
    /// One column per category, in vocabulary order.
    OneHotCategorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatGroup", into = "FlatGroup")]
pub struct FeatureGroup {
    pub name: String,
    pub kind: GroupKind,
    /// Column span [start, end) in the encoded matrix.
    pub span: (usize, usize),
}

/// Serialized form of [`FeatureGroup`]. Kept flat (no serde flatten) because
/// flattened enums round floats through buffered content, which does not
/// round-trip the last bit.
#[derive(Serialize, Deserialize)]
struct FlatGroup {
    name: String,
    kind: String,
    span: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    categories: Option<Vec<String>>,
}

impl From<FeatureGroup> for FlatGroup {
    fn from(g: FeatureGroup) -> Self {
        match g.kind {
            GroupKind::Continuous { mean, stddev } => FlatGroup {
                name: g.name,
                kind: "continuous".into(),
                span: g.span,
                mean: Some(mean),
                stddev: Some(stddev),
                categories: None,
            },
            GroupKind::BinaryCategorical { categories } => FlatGroup {
                name: g.name,
                kind: "binary_categorical".into(),
                span: g.span,
                mean: None,
                stddev: None,
                categories: Some(categories.to_vec()),
            },
            GroupKind::OneHotCategorical { categories } => FlatGroup {
                name: g.name,
                kind: "one_hot_categorical".into(),
                span: g.span,
                mean: None,
                stddev: None,
                categories: Some(categories),
            },
        }
    }
}

impl TryFrom<FlatGroup> for FeatureGroup {
    type Error = String;

    fn try_from(f: FlatGroup) -> std::result::Result<Self, String> {
        let kind = match f.kind.as_str() {
            "continuous" => GroupKind::Continuous {
                mean: f.mean.ok_or("continuous group missing mean")?,
                stddev: f.stddev.ok_or("continuous group missing stddev")?,
            },
            "binary_categorical" => {
                let cats = f.categories.ok_or("binary group missing categories")?;
                let [a, b]: [String; 2] = cats
                    .try_into()
                    .map_err(|_| "binary group needs exactly 2 categories".to_string())?;
                GroupKind::BinaryCategorical { categories: [a, b] }
            }
            "one_hot_categorical" => GroupKind::OneHotCategorical {
                categories: f.categories.ok_or("one-hot group missing categories")?,
            },
            other => return Err(format!("unknown group kind {other:?}")),
        };
        Ok(FeatureGroup {
            name: f.name,
            kind,
            span: f.span,
        })
    }
}

impl FeatureGroup {
    pub fn width(&self) -> usize {
        self.span.1 - self.span.0
    }

    pub fn columns(&self) -> std::ops::Range<usize> {
        self.span.0..self.span.1
    }

    /// Original category label for an encoded slice of this group's columns.
    pub fn decode(&self, cells: &[f64]) -> Option<&str> {
        match &self.kind {
            GroupKind::Continuous { .. } => None,
            GroupKind::BinaryCategorical { categories } => {
                Some(if cells[0] == 1.0 { &categories[1] } else { &categories[0] })
            }
            GroupKind::OneHotCategorical { categories } => cells
                .iter()
                .position(|&v| v == 1.0)
                .map(|i| categories[i].as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub groups: Vec<FeatureGroup>,
    pub protected: String,
    pub privileged_value: String,
    pub label_positive: String,
}

impl FeatureSchema {
    pub fn total_width(&self) -> usize {
        self.groups.last().map_or(0, |g| g.span.1)
    }

    pub fn group(&self, name: &str) -> Option<&FeatureGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn protected_group(&self) -> &FeatureGroup {
        self.group(&self.protected)
            .expect("validated: protected names an existing group")
    }

    /// Whether an encoded row belongs to the privileged group.
    pub fn is_privileged(&self, row: &[f64]) -> bool {
        let g = self.protected_group();
        match &g.kind {
            GroupKind::BinaryCategorical { .. } => row[g.span.0] == 1.0,
            GroupKind::OneHotCategorical { categories } => {
                let idx = categories
                    .iter()
                    .position(|c| *c == self.privileged_value)
                    .expect("validated: privileged value in vocabulary");
                row[g.span.0 + idx] == 1.0
            }
            GroupKind::Continuous { .. } => unreachable!("protected group is categorical"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(json)?;
        schema.validate()?;
        Ok(schema)
    }

    /// SHA-256 hex digest of the serialized schema.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut cursor = 0usize;
        for g in &self.groups {
            if g.span.0 != cursor || g.span.1 <= g.span.0 {
                return Err(Error::Contract(format!(
                    "group {:?} span {:?} not contiguous at column {}",
                    g.name, g.span, cursor
                )));
            }
            let expected_width = match &g.kind {
                GroupKind::Continuous { .. } | GroupKind::BinaryCategorical { .. } => 1,
                GroupKind::OneHotCategorical { categories } => categories.len(),
            };
            if g.width() != expected_width {
                return Err(Error::Contract(format!(
                    "group {:?} has width {} but kind implies {}",
                    g.name,
                    g.width(),
                    expected_width
                )));
            }
            cursor = g.span.1;
        }
        let protected = self
            .group(&self.protected)
            .ok_or_else(|| Error::UnknownGroup(self.protected.clone()))?;
        match &protected.kind {
            GroupKind::Continuous { .. } => Err(Error::Contract(format!(
                "protected group {:?} must be categorical",
                self.protected
            ))),
            GroupKind::BinaryCategorical { categories } => {
                if !categories.contains(&self.privileged_value) {
                    return Err(Error::UnseenProtectedValue {
                        column: self.protected.clone(),
                        value: self.privileged_value.clone(),
                    });
                }
                Ok(())
            }
            GroupKind::OneHotCategorical { categories } => {
                if !categories.contains(&self.privileged_value) {
                    return Err(Error::UnseenProtectedValue {
                        column: self.protected.clone(),
                        value: self.privileged_value.clone(),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Fit a schema from a raw table.
///
/// Continuous columns take standardization stats from this table only.
/// Categorical vocabularies are the sorted distinct values; two-category
/// columns become a single binary column, larger ones become one-hot
/// groups.
pub fn fit_schema(table: &RawTable, protected: &str, privileged: &str) -> Result<FeatureSchema> {
    let protected_idx = table
        .column_index(protected)
        .ok_or_else(|| Error::UnknownColumn(protected.to_string()))?;
    if table.columns[protected_idx].kind != ColumnKind::Categorical {
        return Err(Error::Contract(format!(
            "protected column {protected:?} must be categorical"
        )));
    }

    let mut groups = Vec::with_capacity(table.columns.len());
    let mut cursor = 0usize;
    for (col, spec) in table.columns.iter().enumerate() {
        let kind = match spec.kind {
            ColumnKind::Continuous => {
                let mut values = Vec::with_capacity(table.n_rows());
                for (row, cells) in table.rows.iter().enumerate() {
                    let v: f64 = cells[col].parse().map_err(|_| Error::NonNumeric {
                        column: spec.name.clone(),
                        value: cells[col].clone(),
                        row,
                    })?;
                    values.push(v);
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let stddev = var.sqrt();
                if stddev < 1e-12 {
                    return Err(Error::ConstantColumn {
                        column: spec.name.clone(),
                    });
                }
                GroupKind::Continuous { mean, stddev }
            }
            ColumnKind::Categorical => {
                let mut vocab: Vec<String> = table
                    .rows
                    .iter()
                    .map(|cells| cells[col].clone())
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                if col == protected_idx && !vocab.iter().any(|v| v == privileged) {
                    return Err(Error::UnseenProtectedValue {
                        column: spec.name.clone(),
                        value: privileged.to_string(),
                    });
                }
                match vocab.len() {
                    0 | 1 => {
                        return Err(Error::ConstantColumn {
                            column: spec.name.clone(),
                        })
                    }
                    2 => {
                        // protected group stores the privileged category last
                        // so that privileged membership encodes as 1
                        if col == protected_idx && vocab[0] == privileged {
                            vocab.swap(0, 1);
                        }
                        GroupKind::BinaryCategorical {
                            categories: [vocab[0].clone(), vocab[1].clone()],
                        }
                    }
                    _ => GroupKind::OneHotCategorical { categories: vocab },
                }
            }
        };
        let width = match &kind {
            GroupKind::Continuous { .. } | GroupKind::BinaryCategorical { .. } => 1,
            GroupKind::OneHotCategorical { categories } => categories.len(),
        };
        groups.push(FeatureGroup {
            name: spec.name.clone(),
            kind,
            span: (cursor, cursor + width),
        });
        cursor += width;
    }

    let schema = FeatureSchema {
        groups,
        protected: protected.to_string(),
        privileged_value: privileged.to_string(),
        label_positive: table.label_positive.clone(),
    };
    Ok(schema)
}
