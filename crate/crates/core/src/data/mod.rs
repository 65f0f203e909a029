//! Tabular CSV ingestion, schema fitting, and numeric encoding.

mod encode;
mod format;
mod schema;
mod table;

pub use encode::{encode, encode_row, split, EncodedDataset};
pub use format::{adult_format, ColumnKind, ColumnSpec, DataFormat};
pub use schema::{fit_schema, FeatureGroup, FeatureSchema, GroupKind};
pub use table::{load_csv, RawTable};
