//! Text formats for linear models and rules.
//!
//! Models use a line-oriented `key = value` document; vectors are
//! space-separated. Rules use the canonical JSON encoding. All reals are
//! written with 17 significant digits so documents round-trip exactly.

use serde::{Deserialize, Serialize};

use crate::canonical::{self, format_f64};
use crate::error::{Error, Location, Result};
use crate::linear_model::LinearModel;
use crate::rules::{Hyperblock, Interval, Rule};

pub const FORMAT_VERSION: u32 = 1;

/// A model plus the class its class-1 side stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: LinearModel,
    pub positive_class: Option<String>,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(" ")
}

impl ModelDocument {
    pub fn new(model: LinearModel, positive_class: Option<String>) -> Self {
        Self { model, positive_class }
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut out = String::from("# glc3d linear model\n");
        out += &format!("format_version = {FORMAT_VERSION}\n");
        out += &format!("dimension = {}\n", m.dimensionality());
        if let Some(c) = &self.positive_class {
            out += &format!("positive_class = {c}\n");
        }
        out += &format!("scale = {}\n", format_f64(m.scale()));
        if let Some(t) = m.threshold() {
            out += &format!("threshold = {}\n", format_f64(t));
        }
        out += &format!("raw_coefficients = {}\n", join(m.raw_coefficients()));
        out += &format!("normalized_coefficients = {}\n", join(m.coefficients()));
        out += &format!("angles = {}\n", join(m.angles()));
        out
    }

    /// Parses a model document.
    ///
    /// The model is rebuilt from the raw coefficients; the normalized
    /// coefficients, angles and scale, when present, must agree with the
    /// rebuilt values exactly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: Vec<(u64, &str, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: Location { line: line_no, column: None },
                message: format!("expected 'key = value', found '{line}'"),
            })?;
            let key = key.trim();
            if fields.iter().any(|(_, k, _)| *k == key) {
                return Err(parse_err(line_no, key, "duplicate key"));
            }
            fields.push((line_no, key, value.trim()));
        }
        let get = |key: &str| fields.iter().find(|(_, k, _)| *k == key).map(|&(l, _, v)| (l, v));

        for (line, key, _) in &fields {
            if !KNOWN_KEYS.contains(key) {
                return Err(parse_err(*line, key, "unknown key"));
            }
        }
        let (line, version) = get("format_version").ok_or_else(|| missing("format_version"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(parse_err(line, "format_version", &format!("unsupported version {version}")));
        }
        let (line, raw) = get("raw_coefficients").ok_or_else(|| missing("raw_coefficients"))?;
        let raw = parse_reals(line, "raw_coefficients", raw)?;
        let mut model = LinearModel::from_raw(raw)?;

        if let Some((line, dim)) = get("dimension") {
            let dim: usize = dim.parse().map_err(|_| parse_err(line, "dimension", "not an integer"))?;
            if dim != model.dimensionality() {
                return Err(Error::validation(format!(
                    "dimension {dim} disagrees with {} raw coefficients",
                    model.dimensionality()
                )));
            }
        }
        if let Some((line, t)) = get("threshold") {
            model = model.with_threshold(parse_real(line, "threshold", t)?);
        }
        if let Some((line, s)) = get("scale") {
            check_same(&[parse_real(line, "scale", s)?], &[model.scale()], "scale")?;
        }
        if let Some((line, a)) = get("normalized_coefficients") {
            check_same(&parse_reals(line, "normalized_coefficients", a)?, model.coefficients(), "normalized_coefficients")?;
        }
        if let Some((line, q)) = get("angles") {
            check_same(&parse_reals(line, "angles", q)?, model.angles(), "angles")?;
        }
        let positive_class = get("positive_class").map(|(_, c)| c.to_string());
        Ok(Self { model, positive_class })
    }
}

const KNOWN_KEYS: [&str; 8] = [
    "format_version",
    "dimension",
    "positive_class",
    "scale",
    "threshold",
    "raw_coefficients",
    "normalized_coefficients",
    "angles",
];

fn parse_err(line: u64, key: &str, message: &str) -> Error {
    Error::Parse {
        location: Location { line, column: Some(key.to_string()) },
        message: message.to_string(),
    }
}

fn missing(key: &str) -> Error {
    Error::validation(format!("model document lacks '{key}'"))
}

fn parse_real(line: u64, key: &str, text: &str) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, key, &format!("'{text}' is not a finite number"))),
    }
}

fn parse_reals(line: u64, key: &str, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| parse_real(line, key, t)).collect()
}

fn check_same(stored: &[f64], rebuilt: &[f64], key: &str) -> Result<()> {
    if stored.len() == rebuilt.len() && stored.iter().zip(rebuilt).all(|(a, b)| a == b) {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "'{key}' does not match the raw coefficients"
        )))
    }
}

/// One attribute interval in a rule document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalEntry {
    pub attribute: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Wire form of a [`Rule`]. Attributes without an entry span `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDocument {
    pub format_version: u32,
    pub dimension: usize,
    pub predicted_class: String,
    #[serde(default)]
    pub discriminant: Option<String>,
    #[serde(default)]
    pub intervals: Vec<IntervalEntry>,
}

impl RuleDocument {
    pub fn from_rule(rule: &Rule) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dimension: rule.block.dimensionality(),
            predicted_class: rule.predicted_class.clone(),
            discriminant: rule.discriminant.clone(),
            intervals: rule
                .block
                .bounds()
                .iter()
                .enumerate()
                .map(|(attribute, b)| IntervalEntry {
                    attribute,
                    lower: b.lower,
                    upper: b.upper,
                })
                .collect(),
        }
    }

    pub fn into_rule(self) -> Result<Rule> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported rule format_version {}",
                self.format_version
            )));
        }
        let mut bounds = vec![None; self.dimension];
        for e in &self.intervals {
            let slot = bounds.get_mut(e.attribute).ok_or_else(|| {
                Error::validation(format!(
                    "interval for attribute {} exceeds dimension {}",
                    e.attribute, self.dimension
                ))
            })?;
            if slot.is_some() {
                return Err(Error::validation(format!(
                    "attribute {} listed twice",
                    e.attribute
                )));
            }
            *slot = Some(Interval::new(e.lower, e.upper)?);
        }
        let block = Hyperblock::new(bounds.into_iter().map(|b| b.unwrap_or(Interval::UNIT)).collect())?;
        Ok(Rule {
            predicted_class: self.predicted_class,
            block,
            discriminant: self.discriminant,
        })
    }
}

pub fn rule_to_bytes(rule: &Rule) -> Vec<u8> {
    canonical::to_bytes(&RuleDocument::from_rule(rule))
}

pub fn rule_from_bytes(bytes: &[u8]) -> Result<Rule> {
    canonical::from_slice::<RuleDocument>(bytes)?.into_rule()
}
