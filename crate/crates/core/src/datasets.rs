//! Bundled reference data.

use crate::dataset::{Dataset, LoadConfig};

/// Fisher's Iris data: 150 cases, 4 attributes, 3 classes.
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// Iris in original units.
pub fn iris() -> Dataset {
    Dataset::load_csv(IRIS_CSV.as_bytes(), &LoadConfig::default()).expect("bundled iris parses")
}
