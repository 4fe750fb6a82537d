//! AI4I-format table ingestion, feature encoding and target derivation.
//!
//! The loader is strict: the 14-column schema must match by name, order and
//! kind, rows must be complete, and label cells must be 0/1. The only
//! tolerated variation is the historical `UDI`/`UID` spelling of the first
//! column, which is recorded as seen.

mod split;
mod standardize;

pub use split::{kfold, train_test_split, FoldPlan};
pub use standardize::Standardizer;

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

/// Names of the six model inputs, in feature-matrix column order.
pub const FEATURE_NAMES: [&str; 6] = [
    "Type",
    "Air temperature [K]",
    "Process temperature [K]",
    "Rotational speed [rpm]",
    "Torque [Nm]",
    "Tool wear [min]",
];

/// Feature-matrix column indices.
pub const F_TYPE: usize = 0;
pub const F_AIR: usize = 1;
pub const F_PROCESS: usize = 2;
pub const F_SPEED: usize = 3;
pub const F_TORQUE: usize = 4;
pub const F_WEAR: usize = 5;

/// The five fault-mode flags, in schema order.
pub const FLAG_NAMES: [&str; 5] = ["TWF", "HDF", "PWF", "OSF", "RNF"];

/// Schema column kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Id,
    Categorical,
    Numeric,
    BinaryLabel,
}

/// The declared 14-column schema (first column name is `UDI` or `UID`).
pub fn schema() -> Vec<(&'static str, ColumnKind)> {
    vec![
        ("UDI", ColumnKind::Id),
        ("Product ID", ColumnKind::Id),
        ("Type", ColumnKind::Categorical),
        ("Air temperature [K]", ColumnKind::Numeric),
        ("Process temperature [K]", ColumnKind::Numeric),
        ("Rotational speed [rpm]", ColumnKind::Numeric),
        ("Torque [Nm]", ColumnKind::Numeric),
        ("Tool wear [min]", ColumnKind::Numeric),
        ("Machine failure", ColumnKind::BinaryLabel),
        ("TWF", ColumnKind::BinaryLabel),
        ("HDF", ColumnKind::BinaryLabel),
        ("PWF", ColumnKind::BinaryLabel),
        ("OSF", ColumnKind::BinaryLabel),
        ("RNF", ColumnKind::BinaryLabel),
    ]
}

/// Which spelling of the identifier column the input used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UidHeader {
    Udi,
    Uid,
}

impl fmt::Display for UidHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UidHeader::Udi => "UDI",
            UidHeader::Uid => "UID",
        })
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{name}` at position {position}")]
    UnexpectedColumn { name: String, position: usize },
    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("label cell `{value}` at row {row}, column `{column}` is not 0/1")]
    InvalidLabel { row: usize, column: String, value: String },
    #[error("file contains a header but no records")]
    EmptyDataset,
    #[error("unknown product type `{value}` at row {row} (expected L, M or H)")]
    UnknownCategory { row: usize, value: String },
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("test fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("fold count {k} is invalid for {n} rows (need 2 <= k <= n)")]
    BadK { k: usize, n: usize },
}

/// A schema-validated AI4I table, columns stored by role.
#[derive(Clone, Debug)]
pub struct Table {
    pub uid_header: UidHeader,
    pub uid: Vec<u64>,
    pub product_id: Vec<String>,
    pub product_type: Vec<String>,
    pub air_temp: Vec<f64>,
    pub process_temp: Vec<f64>,
    pub rotational_speed: Vec<f64>,
    pub torque: Vec<f64>,
    pub tool_wear: Vec<f64>,
    pub machine_failure: Vec<u8>,
    /// Row-major `[TWF, HDF, PWF, OSF, RNF]` flags.
    pub flags: Vec<[u8; 5]>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.uid.len()
    }

    /// Column names in schema order, with the identifier spelling as seen.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = schema().iter().map(|(n, _)| n.to_string()).collect();
        names[0] = self.uid_header.to_string();
        names
    }
}

/// Encoded dataset: six-column feature matrix plus label columns.
///
/// Identifiers are dropped; `Type` is mapped L->0, M->1, H->2. Features stay
/// on their raw scales here; standardization is a separate, fitted step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dataset {
    pub uid_header: UidHeader,
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub machine_failure: Vec<u8>,
    pub flags: Vec<[u8; 5]>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }
}

/// Target construction modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// `Machine failure` as a 0/1 vector.
    Binary,
    /// The five fault flags as an n x 5 0/1 matrix.
    MultiLabel,
    /// Count of raised fault flags (0..=5) as a real-valued vector.
    Severity,
}

impl std::str::FromStr for TargetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(TargetMode::Binary),
            "multilabel" | "multi_label" => Ok(TargetMode::MultiLabel),
            "severity" => Ok(TargetMode::Severity),
            other => Err(format!("unknown target mode `{other}`")),
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMode::Binary => "binary",
            TargetMode::MultiLabel => "multilabel",
            TargetMode::Severity => "severity",
        })
    }
}

/// A derived target: one vector, or the 0/1 flag matrix.
#[derive(Clone, Debug)]
pub enum Target {
    Vector(Vec<f64>),
    Flags(Matrix),
}

/// Load and schema-validate an AI4I-format CSV file.
pub fn load_ai4i<P: AsRef<Path>>(path: P) -> Result<Table, DatasetError> {
    let file = File::open(path)?;
    load_ai4i_reader(file)
}

/// Same as [`load_ai4i`] over any reader.
pub fn load_ai4i_reader<R: Read>(reader: R) -> Result<Table, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let uid_header = validate_header(&header)?;
    let names: Vec<String> = header.iter().map(str::to_string).collect();

    let mut table = Table {
        uid_header,
        uid: Vec::new(),
        product_id: Vec::new(),
        product_type: Vec::new(),
        air_temp: Vec::new(),
        process_temp: Vec::new(),
        rotational_speed: Vec::new(),
        torque: Vec::new(),
        tool_wear: Vec::new(),
        machine_failure: Vec::new(),
        flags: Vec::new(),
    };

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != 14 {
            let column = names.get(record.len()).cloned().unwrap_or_default();
            return Err(DatasetError::MissingValue { row, column });
        }
        let cell = |c: usize| -> Result<&str, DatasetError> {
            let v = record.get(c).unwrap_or("").trim();
            if v.is_empty() {
                return Err(DatasetError::MissingValue { row, column: names[c].clone() });
            }
            Ok(v)
        };
        let num = |c: usize| -> Result<f64, DatasetError> {
            let v = cell(c)?;
            v.parse::<f64>().map_err(|_| DatasetError::NonNumericCell {
                row,
                column: names[c].clone(),
                value: v.to_string(),
            })
        };
        let label = |c: usize| -> Result<u8, DatasetError> {
            match cell(c)? {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(DatasetError::InvalidLabel {
                    row,
                    column: names[c].clone(),
                    value: other.to_string(),
                }),
            }
        };

        let uid = cell(0)?.parse::<u64>().map_err(|_| DatasetError::NonNumericCell {
            row,
            column: names[0].clone(),
            value: record.get(0).unwrap_or("").to_string(),
        })?;
        table.uid.push(uid);
        table.product_id.push(cell(1)?.to_string());
        table.product_type.push(cell(2)?.to_string());
        table.air_temp.push(num(3)?);
        table.process_temp.push(num(4)?);
        table.rotational_speed.push(num(5)?);
        table.torque.push(num(6)?);
        table.tool_wear.push(num(7)?);
        table.machine_failure.push(label(8)?);
        table.flags.push([label(9)?, label(10)?, label(11)?, label(12)?, label(13)?]);
    }

    if table.n_rows() == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    Ok(table)
}

fn validate_header(header: &csv::StringRecord) -> Result<UidHeader, DatasetError> {
    let expected = schema();
    let found: Vec<&str> = header.iter().map(str::trim).collect();

    let uid_header = match found.first().copied() {
        Some("UDI") => UidHeader::Udi,
        Some("UID") => UidHeader::Uid,
        _ => return Err(DatasetError::MissingColumn("UDI".into())),
    };

    // Set checks first so the error names the offending column, then order.
    for (name, _) in expected.iter().skip(1) {
        if !found.contains(name) {
            return Err(DatasetError::MissingColumn((*name).to_string()));
        }
    }
    for (pos, name) in found.iter().enumerate() {
        if pos >= expected.len() {
            return Err(DatasetError::UnexpectedColumn { name: name.to_string(), position: pos });
        }
        if pos > 0 && *name != expected[pos].0 {
            return Err(DatasetError::UnexpectedColumn { name: name.to_string(), position: pos });
        }
    }
    if found.len() < expected.len() {
        return Err(DatasetError::MissingColumn(expected[found.len()].0.to_string()));
    }
    Ok(uid_header)
}

/// Encode features: `Type` mapped L->0, M->1, H->2, identifiers dropped.
pub fn encode_features(table: &Table) -> Result<Dataset, DatasetError> {
    let n = table.n_rows();
    let mut features = Matrix::zeros(n, FEATURE_NAMES.len());
    for row in 0..n {
        let t = match table.product_type[row].as_str() {
            "L" => 0.0,
            "M" => 1.0,
            "H" => 2.0,
            other => {
                return Err(DatasetError::UnknownCategory {
                    row: row + 1,
                    value: other.to_string(),
                })
            }
        };
        features.set(row, F_TYPE, t);
        features.set(row, F_AIR, table.air_temp[row]);
        features.set(row, F_PROCESS, table.process_temp[row]);
        features.set(row, F_SPEED, table.rotational_speed[row]);
        features.set(row, F_TORQUE, table.torque[row]);
        features.set(row, F_WEAR, table.tool_wear[row]);
    }
    Ok(Dataset {
        uid_header: table.uid_header,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        features,
        machine_failure: table.machine_failure.clone(),
        flags: table.flags.clone(),
    })
}

/// Derive the target for the given mode.
pub fn derive_target(dataset: &Dataset, mode: TargetMode) -> Target {
    match mode {
        TargetMode::Binary => {
            Target::Vector(dataset.machine_failure.iter().map(|&v| f64::from(v)).collect())
        }
        TargetMode::Severity => Target::Vector(severity_vector(dataset)),
        TargetMode::MultiLabel => {
            let mut m = Matrix::zeros(dataset.n_rows(), FLAG_NAMES.len());
            for (r, flags) in dataset.flags.iter().enumerate() {
                for (c, &v) in flags.iter().enumerate() {
                    m.set(r, c, f64::from(v));
                }
            }
            Target::Flags(m)
        }
    }
}

/// Count of raised fault flags per row, as reals.
pub fn severity_vector(dataset: &Dataset) -> Vec<f64> {
    dataset.flags.iter().map(|f| f.iter().map(|&v| f64::from(v)).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TOY_CSV: &str = "\
UDI,Product ID,Type,Air temperature [K],Process temperature [K],Rotational speed [rpm],Torque [Nm],Tool wear [min],Machine failure,TWF,HDF,PWF,OSF,RNF
1,M14860,M,298.1,308.6,1551,42.8,0,0,0,0,0,0,0
2,L47181,L,298.2,308.7,1408,46.3,3,1,0,1,1,0,0
3,H29424,H,298.3,308.5,1498,49.4,5,0,0,0,0,0,0
";

    #[test]
    fn loads_toy_table() {
        let t = load_ai4i_reader(TOY_CSV.as_bytes()).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.uid_header, UidHeader::Udi);
        assert_eq!(t.uid, vec![1, 2, 3]);
        assert_eq!(t.product_type, vec!["M", "L", "H"]);
        assert_eq!(t.torque, vec![42.8, 46.3, 49.4]);
        assert_eq!(t.machine_failure, vec![0, 1, 0]);
        assert_eq!(t.flags[1], [0, 1, 1, 0, 0]);
        assert_eq!(t.column_names().len(), 14);
    }

    #[test]
    fn accepts_uid_spelling() {
        let csv = TOY_CSV.replacen("UDI", "UID", 1);
        let t = load_ai4i_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.uid_header, UidHeader::Uid);
        assert_eq!(t.column_names()[0], "UID");
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let csv = TOY_CSV.lines().next().unwrap().to_string() + "\n";
        assert!(matches!(load_ai4i_reader(csv.as_bytes()), Err(DatasetError::EmptyDataset)));
    }

    #[test]
    fn missing_torque_column_is_reported() {
        let mut lines: Vec<String> = TOY_CSV
            .lines()
            .map(|l| {
                let mut parts: Vec<&str> = l.split(',').collect();
                parts.remove(6);
                parts.join(",")
            })
            .collect();
        lines.push(String::new());
        let err = load_ai4i_reader(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            DatasetError::MissingColumn(name) => assert_eq!(name, "Torque [Nm]"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn extra_column_is_unexpected() {
        let csv = TOY_CSV.replace(",RNF", ",RNF,Extra").replace("0,0\n", "0,0,9\n");
        let err = load_ai4i_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::UnexpectedColumn { .. }));
    }

    #[test]
    fn out_of_order_columns_rejected() {
        let csv = TOY_CSV.replacen(
            "Torque [Nm],Tool wear [min]",
            "Tool wear [min],Torque [Nm]",
            1,
        );
        let err = load_ai4i_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::UnexpectedColumn { .. }));
    }

    #[test]
    fn empty_cell_is_missing_value() {
        let csv = TOY_CSV.replacen("42.8", "", 1);
        let err = load_ai4i_reader(csv.as_bytes()).unwrap_err();
        match err {
            DatasetError::MissingValue { row, column } => {
                assert_eq!(row, 1);
                assert_eq!(column, "Torque [Nm]");
            }
            other => panic!("expected MissingValue, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_reported() {
        let csv = TOY_CSV.replacen("42.8", "fast", 1);
        let err = load_ai4i_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::NonNumericCell { .. }));
    }

    #[test]
    fn non_binary_label_is_rejected() {
        let csv = TOY_CSV.replacen(",0,0,0,0,0,0\n", ",2,0,0,0,0,0\n", 1);
        let err = load_ai4i_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::InvalidLabel { .. }));
    }

    #[test]
    fn encode_maps_type_and_drops_ids() {
        let t = load_ai4i_reader(TOY_CSV.as_bytes()).unwrap();
        let d = encode_features(&t).unwrap();
        assert_eq!(d.n_features(), 6);
        assert_eq!(d.feature_names, FEATURE_NAMES.to_vec());
        assert_eq!(d.features.get(0, F_TYPE), 1.0); // M
        assert_eq!(d.features.get(1, F_TYPE), 0.0); // L
        assert_eq!(d.features.get(2, F_TYPE), 2.0); // H
        assert_eq!(d.features.get(1, F_TORQUE), 46.3);
    }

    #[test]
    fn encode_rejects_unknown_category() {
        let mut t = load_ai4i_reader(TOY_CSV.as_bytes()).unwrap();
        t.product_type[2] = "X".into();
        let err = encode_features(&t).unwrap_err();
        match err {
            DatasetError::UnknownCategory { row, value } => {
                assert_eq!(row, 3);
                assert_eq!(value, "X");
            }
            other => panic!("expected UnknownCategory, got {other:?}"),
        }
    }

    #[test]
    fn targets_match_flags() {
        let t = load_ai4i_reader(TOY_CSV.as_bytes()).unwrap();
        let d = encode_features(&t).unwrap();
        let sev = severity_vector(&d);
        assert_eq!(sev, vec![0.0, 2.0, 0.0]); // HDF + PWF on row 2
        match derive_target(&d, TargetMode::Binary) {
            Target::Vector(v) => assert_eq!(v, vec![0.0, 1.0, 0.0]),
            _ => unreachable!(),
        }
        match derive_target(&d, TargetMode::MultiLabel) {
            Target::Flags(m) => {
                assert_eq!(m.n_cols(), 5);
                assert_eq!(m.get(1, 1), 1.0);
                assert_eq!(m.get(1, 2), 1.0);
                assert_eq!(m.get(0, 0), 0.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn load_encode_derive_is_deterministic() {
        let run = || {
            let t = load_ai4i_reader(TOY_CSV.as_bytes()).unwrap();
            let d = encode_features(&t).unwrap();
            (d.features.clone(), severity_vector(&d))
        };
        assert_eq!(run(), run());
    }
}
