//! Lossless 3D General Line Coordinate layouts for labeled n-D data.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`]: CSV ingestion, min-max normalization and padding.
//! - [`linear_model`]: linear functions, coefficient normalization, GLC-L
//!   angles, per-pair contributions and discriminant search.
//! - [`transforms`]: SPC-2D, SPC-3D, STC, GLC-L and GLC-3SL glyph mappings
//!   plus reconstruction of the original point from geometry.
//! - [`rules`]: hyperblocks, rectangle rules, discriminant rules, regression
//!   intervals/planes and their statistics.
//! - [`scene`]: renderer-agnostic scene assembly and canonical serialization.
//! - [`formats`]: the text formats for models and rules.

pub mod canonical;
pub mod dataset;
pub mod datasets;
pub mod error;
pub mod formats;
pub mod linear_model;
pub mod rules;
pub mod scene;
pub mod transforms;

pub use dataset::{pad_to_multiple, CaseRecord, Dataset, LoadConfig};
pub use error::{Error, Result};
pub use linear_model::{Decision, LinearModel, SearchParams};
pub use rules::{Hyperblock, Interval, Rect, RectangleRule, Rule, RuleStats};
pub use scene::{CameraPreset, Scene, ViewKind};
pub use transforms::{Glyph, GlyphKind, LayoutConfig, Placement};
