//! Input file description: column names/kinds, label mapping, missing marker.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn continuous(name: &str) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Continuous,
        }
    }

    pub fn categorical(name: &str) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
        }
    }
}

/// Shape of a CSV source: attribute columns in file order, then the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFormat {
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
    /// Raw label string that maps to 1; every other label maps to 0.
    pub label_positive: String,
    /// Cell content treated as missing; rows containing it are dropped.
    #[serde(default = "default_missing_marker")]
    pub missing_marker: String,
    #[serde(default)]
    pub has_header: bool,
}

fn default_missing_marker() -> String {
    "?".to_string()
}

impl DataFormat {
    /// Number of fields a data row must have (attributes + label).
    pub fn arity(&self) -> usize {
        self.columns.len() + 1
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// The canonical UCI census-income layout: 14 attributes, `income` label
/// with ">50K" positive, "?" missing markers, no header row.
pub fn adult_format() -> DataFormat {
    DataFormat {
        columns: vec![
            ColumnSpec::continuous("age"),
            ColumnSpec::categorical("workclass"),
            ColumnSpec::continuous("fnlwgt"),
            ColumnSpec::categorical("education"),
            ColumnSpec::continuous("education-num"),
            ColumnSpec::categorical("marital-status"),
            ColumnSpec::categorical("occupation"),
            ColumnSpec::categorical("relationship"),
            ColumnSpec::categorical("race"),
            ColumnSpec::categorical("sex"),
            ColumnSpec::continuous("capital-gain"),
            ColumnSpec::continuous("capital-loss"),
            ColumnSpec::continuous("hours-per-week"),
            ColumnSpec::categorical("native-country"),
        ],
        label_column: "income".to_string(),
        label_positive: ">50K".to_string(),
        missing_marker: "?".to_string(),
        has_header: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adult_has_fourteen_attributes() {
        let f = adult_format();
        assert_eq!(f.columns.len(), 14);
        assert_eq!(f.arity(), 15);
        assert_eq!(f.column_index("sex"), Some(9));
        assert_eq!(f.column_index("nope"), None);
    }

    #[test]
    fn format_json_round_trip() {
        let f = adult_format();
        let json = serde_json::to_string(&f).unwrap();
        let back: DataFormat = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
    }
}
