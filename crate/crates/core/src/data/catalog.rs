//! Reference metadata for the 14 imbalanced benchmark datasets.

use serde::{Deserialize, Serialize};

use super::LabeledDataset;

const CATALOG_CSV: &str = include_str!("../../data/catalog.csv");

/// Allowed absolute deviation of the positive ratio, in ratio units (0.5 pp).
pub const RATIO_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub positive_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::builtin()
    }
}

impl Catalog {
    pub fn builtin() -> Catalog {
        let mut rdr = csv::Reader::from_reader(CATALOG_CSV.as_bytes());
        let entries = rdr
            .deserialize()
            .collect::<Result<Vec<CatalogEntry>, _>>()
            .expect("built-in catalog is well formed");
        Catalog { entries }
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// Case-insensitive lookup; `_` and `-` match spaces.
    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        let key = normalize(name);
        self.entries.iter().find(|e| normalize(&e.name) == key)
    }
}

fn normalize(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c.to_ascii_lowercase() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub field: &'static str,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub in_catalog: bool,
    pub checks: Vec<CheckEntry>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.in_catalog && self.checks.iter().all(|c| c.pass)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.in_catalog {
            return write!(f, "{}: not in catalog", self.name);
        }
        write!(f, "{}:", self.name)?;
        for c in &self.checks {
            let mark = if c.pass { "ok" } else { "MISMATCH" };
            write!(f, " {}={} (expected {}) {};", c.field, c.actual, c.expected, mark)?;
        }
        Ok(())
    }
}

impl LabeledDataset {
    /// Compare shape and positive ratio to the catalog. Mismatches are
    /// reported, never fatal.
    pub fn validate_against_catalog(&self, catalog: &Catalog) -> ValidationReport {
        let Some(entry) = catalog.get(self.name()) else {
            return ValidationReport {
                name: self.name().to_string(),
                in_catalog: false,
                checks: Vec::new(),
            };
        };
        let ratio = self.positive_ratio();
        let checks = vec![
            CheckEntry {
                field: "n",
                expected: entry.n as f64,
                actual: self.n() as f64,
                pass: entry.n == self.n(),
            },
            CheckEntry {
                field: "d",
                expected: entry.d as f64,
                actual: self.dim() as f64,
                pass: entry.d == self.dim(),
            },
            CheckEntry {
                field: "positive_ratio",
                expected: entry.positive_ratio,
                actual: ratio,
                pass: (ratio - entry.positive_ratio).abs() <= RATIO_TOLERANCE,
            },
        ];
        ValidationReport {
            name: entry.name.clone(),
            in_catalog: true,
            checks,
        }
    }
}
