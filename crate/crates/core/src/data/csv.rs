use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Which column holds the label and how its tokens map to `+1` / `-1`.
///
/// Tokens are compared after trimming; when both sides parse as numbers they
/// are compared numerically, so `+1`, `1` and `1.0` are the same token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    pub positive_label: String,
    pub negative_label: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: "label".into(),
            positive_label: "1".into(),
            negative_label: "-1".into(),
        }
    }
}

impl CsvSchema {
    fn matches(token: &str, target: &str) -> bool {
        let (token, target) = (token.trim(), target.trim());
        match (token.parse::<f64>(), target.parse::<f64>()) {
            (Ok(a), Ok(b)) => a == b,
            _ => token == target,
        }
    }

    fn parse_label(&self, row: usize, token: &str) -> Result<Label> {
        if Self::matches(token, &self.positive_label) {
            Ok(Label::Positive)
        } else if Self::matches(token, &self.negative_label) {
            Ok(Label::Negative)
        } else {
            Err(Error::InvalidLabel {
                row,
                value: token.to_string(),
            })
        }
    }
}

/// Load a CSV with a header row. Every column other than the label column is
/// a feature. The dataset is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(std::fs::File::open(path)?, name, schema)
}

pub fn read_csv(reader: impl Read, name: impl Into<String>, schema: &CsvSchema) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| Error::Config(format!("no label column `{}`", schema.label_column)))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_col).collect();
    if feature_cols.is_empty() {
        return Err(Error::Empty("feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::DimensionMismatch {
                expected: headers.len(),
                found: record.len(),
            });
        }
        labels.push(schema.parse_label(row, &record[label_col])?);
        for &c in &feature_cols {
            let cell = &record[c];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        row,
                        column: headers[c].to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    let features = Array2::from_shape_vec((labels.len(), feature_cols.len()), values)
        .expect("row lengths checked");
    LabeledDataset::new(name, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LabeledDataset> {
        read_csv(text.as_bytes(), "t", &CsvSchema::default())
    }

    #[test]
    fn minimal_two_row_file() {
        let ds = parse("a,b,label\n1,2,1\n3,4,-1\n").unwrap();
        assert_eq!((ds.n(), ds.dim()), (2, 2));
        assert_eq!(ds.labels(), &[Label::Positive, Label::Negative]);
        assert_eq!(ds.features()[[1, 0]], 3.0);
    }

    #[test]
    fn label_column_can_be_anywhere_and_tokens_are_numeric() {
        let ds = parse("label,a\n+1,0.5\n-1.0,2\n").unwrap();
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.n_positive(), 1);
    }

    #[test]
    fn zero_label_is_invalid() {
        let err = parse("a,label\n1,1\n2,0\n").unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { row: 1, .. }));
        assert!(err.to_string().contains("invalid label value"));
    }

    #[test]
    fn reports_distinct_errors() {
        assert!(matches!(parse("a,label\nx,1\n2,-1\n"), Err(Error::NonNumeric { .. })));
        assert!(matches!(parse("a,label\n1,1\n2,1\n"), Err(Error::SingleClass)));
        assert!(matches!(parse("a,b,label\n1,1\n2,3,-1\n"), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            load_csv("/definitely/not/here.csv", &CsvSchema::default()),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn custom_tokens() {
        let schema = CsvSchema {
            label_column: "class".into(),
            positive_label: "anomaly".into(),
            negative_label: "normal".into(),
        };
        let ds = read_csv("x,class\n1,normal\n2,anomaly\n".as_bytes(), "c", &schema).unwrap();
        assert_eq!(ds.labels(), &[Label::Negative, Label::Positive]);
    }
}
