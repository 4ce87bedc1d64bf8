//! Interpretable rules and their quality statistics.
//!
//! A [`Hyperblock`] is a box of closed per-attribute intervals. Rectangle
//! rules built over coordinate pairs are hyperblocks whose unselected
//! attributes span `[0, 1]`. A [`Rule`] may additionally require the linear
//! discriminant `f(x) >= T` to hold, which is how a discrimination plane is
//! narrowed to a sub-region.

use serde::{Deserialize, Serialize};

use crate::dataset::{pad_to_multiple, CaseRecord, Dataset};
use crate::error::{Error, Result};
use crate::linear_model::{Decision, LinearModel};

/// Default tolerance for "same fixed attributes" in [`residuals_on_plane`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lower: 0.0, upper: 1.0 };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::validation(format!(
                "interval bounds must be finite (got [{lower}, {upper}])"
            )));
        }
        if lower > upper {
            return Err(Error::validation(format!(
                "interval lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lower <= self.lower && self.upper <= other.upper
    }

    fn clamp_unit(self) -> Self {
        Self {
            lower: self.lower.clamp(0.0, 1.0),
            upper: self.upper.clamp(0.0, 1.0),
        }
    }

    fn within_unit(&self) -> bool {
        self.lower <= self.upper && self.is_subset_of(&Interval::UNIT)
    }
}

/// Axis-aligned box in one SPC cube: `x` is the pair's first attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: Interval,
    pub y: Interval,
}

impl Rect {
    pub const UNIT: Rect = Rect { x: Interval::UNIT, y: Interval::UNIT };

    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Ok(Self {
            x: Interval::new(x0, x1)?,
            y: Interval::new(y0, y1)?,
        })
    }

    pub fn is_subset_of(&self, other: &Rect) -> bool {
        self.x.is_subset_of(&other.x) && self.y.is_subset_of(&other.y)
    }

    fn check_unit(&self) -> Result<()> {
        if self.x.within_unit() && self.y.within_unit() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "rectangle {self:?} is not inside the unit square"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperblock {
    bounds: Vec<Interval>,
}

impl Hyperblock {
    /// Builds a hyperblock, clamping every bound into `[0, 1]`.
    pub fn new(bounds: Vec<Interval>) -> Result<Self> {
        for b in &bounds {
            Interval::new(b.lower, b.upper)?;
        }
        Ok(Self {
            bounds: bounds.into_iter().map(Interval::clamp_unit).collect(),
        })
    }

    /// The whole unit cube in `n` dimensions.
    pub fn full(n: usize) -> Self {
        Self { bounds: vec![Interval::UNIT; n] }
    }

    /// Box around `center` reaching `below[i]` under and `above[i]` over it on
    /// each attribute, clamped to the unit cube.
    pub fn around(center: &[f64], below: &[f64], above: &[f64]) -> Result<Self> {
        if below.len() != center.len() || above.len() != center.len() {
            return Err(Error::contract("center and extents differ in length"));
        }
        if below.iter().chain(above).any(|d| d.is_nan() || *d < 0.0) {
            return Err(Error::validation("half-extents must be non-negative"));
        }
        let bounds = center
            .iter()
            .zip(below.iter().zip(above))
            .map(|(&c, (&lo, &hi))| Interval::new(c - lo, c + hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bounds)
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn dimensionality(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &CaseRecord) -> Result<bool> {
        let values = x.attributes();
        if values.len() != self.bounds.len() {
            return Err(Error::contract(format!(
                "hyperblock has {} intervals but case {} has {} attributes",
                self.bounds.len(),
                x.id,
                values.len()
            )));
        }
        Ok(self.contains_values(values))
    }

    fn contains_values(&self, values: &[f64]) -> bool {
        self.bounds.iter().zip(values).all(|(b, &v)| b.contains(v))
    }

    pub fn is_subset_of(&self, other: &Hyperblock) -> bool {
        self.bounds.len() == other.bounds.len()
            && self.bounds.iter().zip(&other.bounds).all(|(a, b)| a.is_subset_of(b))
    }

    /// The 2-D box this hyperblock induces in cube `pair`.
    pub fn pair_rect(&self, pair: usize) -> Option<Rect> {
        let x = *self.bounds.get(2 * pair)?;
        // a padded trailing attribute is a copy, so it shares the interval
        let y = self.bounds.get(2 * pair + 1).copied().unwrap_or(x);
        Some(Rect { x, y })
    }

    /// Replaces the intervals of coordinate pair `pair` with `new_box`.
    pub fn refine_pair(&self, pair: usize, new_box: Rect) -> Result<Self> {
        new_box.check_unit()?;
        let n = self.bounds.len();
        if 2 * pair >= n {
            return Err(Error::contract(format!(
                "pair {pair} out of range for {n} attributes"
            )));
        }
        let mut bounds = self.bounds.clone();
        if 2 * pair + 1 < n {
            bounds[2 * pair] = new_box.x;
            bounds[2 * pair + 1] = new_box.y;
        } else {
            bounds[2 * pair] = intersect_padded(new_box)?;
        }
        Ok(Self { bounds })
    }
}

/// Interval for an odd trailing attribute whose padded copy shares the box.
fn intersect_padded(r: Rect) -> Result<Interval> {
    let lower = r.x.lower.max(r.y.lower);
    let upper = r.x.upper.min(r.y.upper);
    Interval::new(lower, upper).map_err(|_| {
        Error::validation("box on a padded pair must overlap the diagonal")
    })
}

/// Conjunction of rectangles over distinct coordinate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleRule {
    rectangles: Vec<(usize, Rect)>,
    predicted_class: String,
}

impl RectangleRule {
    pub fn new(predicted_class: impl Into<String>, rectangles: Vec<(usize, Rect)>) -> Result<Self> {
        for (i, (pair, rect)) in rectangles.iter().enumerate() {
            rect.check_unit()?;
            if rectangles[..i].iter().any(|(p, _)| p == pair) {
                return Err(Error::validation(format!("pair {pair} appears twice")));
            }
        }
        Ok(Self {
            rectangles,
            predicted_class: predicted_class.into(),
        })
    }

    pub fn rectangles(&self) -> &[(usize, Rect)] {
        &self.rectangles
    }

    pub fn predicted_class(&self) -> &str {
        &self.predicted_class
    }

    /// The equivalent hyperblock over `n` attributes.
    pub fn to_hyperblock(&self, n: usize) -> Result<Hyperblock> {
        self.rectangles
            .iter()
            .try_fold(Hyperblock::full(n), |hb, (pair, rect)| hb.refine_pair(*pair, *rect))
    }

    /// Direct conjunction test, pair by pair.
    pub fn covers(&self, x: &CaseRecord) -> Result<bool> {
        let padded = pad_to_multiple(x, 2);
        for (pair, rect) in &self.rectangles {
            let (Some(&u), Some(&v)) = (padded.values.get(2 * pair), padded.values.get(2 * pair + 1)) else {
                return Err(Error::contract(format!(
                    "pair {pair} out of range for case {} with {} attributes",
                    x.id,
                    x.dimensionality()
                )));
            };
            if !(rect.x.contains(u) && rect.y.contains(v)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn into_rule(self, n: usize) -> Result<Rule> {
        Ok(Rule {
            block: self.to_hyperblock(n)?,
            predicted_class: self.predicted_class,
            discriminant: None,
        })
    }
}

/// General rule: a hyperblock antecedent, optionally intersected with the
/// class-1 side of a discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub predicted_class: String,
    pub block: Hyperblock,
    /// Reference to the discriminant model the rule also requires, if any.
    pub discriminant: Option<String>,
}

impl Rule {
    pub fn new(predicted_class: impl Into<String>, block: Hyperblock) -> Self {
        Self {
            predicted_class: predicted_class.into(),
            block,
            discriminant: None,
        }
    }

    #[must_use]
    pub fn with_discriminant(mut self, reference: impl Into<String>) -> Self {
        self.discriminant = Some(reference.into());
        self
    }

    fn model<'a>(&self, model: Option<&'a LinearModel>) -> Result<Option<&'a LinearModel>> {
        match (&self.discriminant, model) {
            (None, _) => Ok(None),
            (Some(_), Some(m)) => Ok(Some(m)),
            (Some(r), None) => Err(Error::config(format!(
                "rule references discriminant '{r}' but no model was supplied"
            ))),
        }
    }

    pub fn covers(&self, x: &CaseRecord, model: Option<&LinearModel>) -> Result<bool> {
        let model = self.model(model)?;
        if !self.block.contains(x)? {
            return Ok(false);
        }
        match model {
            Some(m) => Ok(m.classify(x)? == Decision::Class1),
            None => Ok(true),
        }
    }

    pub fn evaluate(&self, dataset: &Dataset, model: Option<&LinearModel>) -> Result<RuleStats> {
        let covered = dataset
            .cases()
            .iter()
            .map(|c| self.covers(c, model))
            .collect::<Result<Vec<_>>>()?;
        Ok(RuleStats::from_coverage(dataset, &self.predicted_class, &covered))
    }
}

/// Replaces the rectangle at a pair, producing a new rule.
pub trait Refine: Sized {
    fn refine(&self, pair: usize, new_box: Rect) -> Result<Self>;
}

impl Refine for Hyperblock {
    fn refine(&self, pair: usize, new_box: Rect) -> Result<Self> {
        self.refine_pair(pair, new_box)
    }
}

impl Refine for RectangleRule {
    fn refine(&self, pair: usize, new_box: Rect) -> Result<Self> {
        new_box.check_unit()?;
        let mut rectangles = self.rectangles.clone();
        match rectangles.iter_mut().find(|(p, _)| *p == pair) {
            Some(slot) => slot.1 = new_box,
            None => rectangles.push((pair, new_box)),
        }
        Ok(Self {
            rectangles,
            predicted_class: self.predicted_class.clone(),
        })
    }
}

impl Refine for Rule {
    fn refine(&self, pair: usize, new_box: Rect) -> Result<Self> {
        Ok(Self {
            block: self.block.refine_pair(pair, new_box)?,
            ..self.clone()
        })
    }
}

pub fn refine_rule<R: Refine>(rule: &R, pair: usize, new_box: Rect) -> Result<R> {
    rule.refine(pair, new_box)
}

pub fn hyperblock_contains(hb: &Hyperblock, x: &CaseRecord) -> Result<bool> {
    hb.contains(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: String,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

/// Coverage and confusion counts of a rule against a dataset.
///
/// "Covered" means the rule fires (inside the box, or on the class-1 side of
/// a discriminant). Purity is the covered fraction in the predicted class;
/// an empty coverage reports purity 0 with `empty` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub predicted_class: String,
    pub total: usize,
    pub covered: usize,
    /// Covered cases per class, in the dataset's class order.
    pub per_class: Vec<ClassCount>,
    pub purity: f64,
    pub empty: bool,
    /// Fraction of all cases where firing agrees with membership in the
    /// predicted class.
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl RuleStats {
    pub fn from_coverage(dataset: &Dataset, predicted_class: &str, covered: &[bool]) -> Self {
        let mut confusion = Confusion {
            true_positive: 0,
            false_positive: 0,
            true_negative: 0,
            false_negative: 0,
        };
        let mut per_class: Vec<ClassCount> = dataset
            .class_labels()
            .iter()
            .map(|c| ClassCount { class: c.clone(), count: 0 })
            .collect();
        for (case, &fires) in dataset.cases().iter().zip(covered) {
            let member = case.class_label == predicted_class;
            match (fires, member) {
                (true, true) => confusion.true_positive += 1,
                (true, false) => confusion.false_positive += 1,
                (false, false) => confusion.true_negative += 1,
                (false, true) => confusion.false_negative += 1,
            }
            if fires {
                if let Some(slot) = per_class.iter_mut().find(|s| s.class == case.class_label) {
                    slot.count += 1;
                }
            }
        }
        let total = dataset.len();
        let n_covered = confusion.true_positive + confusion.false_positive;
        let empty = n_covered == 0;
        let purity = if empty {
            0.0
        } else {
            confusion.true_positive as f64 / n_covered as f64
        };
        let accuracy = (confusion.true_positive + confusion.true_negative) as f64 / total as f64;
        Self {
            predicted_class: predicted_class.to_string(),
            total,
            covered: n_covered,
            per_class,
            purity,
            empty,
            accuracy,
            confusion,
        }
    }

    pub fn count_for(&self, class: &str) -> usize {
        self.per_class
            .iter()
            .find(|c| c.class == class)
            .map_or(0, |c| c.count)
    }
}

pub fn evaluate_rectangle_rule(rule: &RectangleRule, dataset: &Dataset) -> Result<RuleStats> {
    let covered = dataset
        .cases()
        .iter()
        .map(|c| rule.covers(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(RuleStats::from_coverage(dataset, rule.predicted_class(), &covered))
}

/// One-vs-rest statistics of `f(x) >= T` with `positive_class` as class 1.
pub fn apply_discrimination_rule(
    model: &LinearModel,
    dataset: &Dataset,
    positive_class: &str,
) -> Result<RuleStats> {
    if !dataset.class_labels().iter().any(|c| c == positive_class) {
        return Err(Error::Lookup {
            kind: "class",
            name: positive_class.to_string(),
            valid: dataset.class_labels().to_vec(),
        });
    }
    let covered = dataset
        .cases()
        .iter()
        .map(|c| Ok(model.classify(c)? == Decision::Class1))
        .collect::<Result<Vec<_>>>()?;
    Ok(RuleStats::from_coverage(dataset, positive_class, &covered))
}

/// Exact range `[f1, f2]` of the model's `f` over the hyperblock.
///
/// A linear function on a box attains its extrema at corners: each term takes
/// its lower bound when minimizing if the coefficient is non-negative, and its
/// upper bound otherwise.
pub fn regression_interval(hb: &Hyperblock, model: &LinearModel) -> Result<(f64, f64)> {
    if hb.dimensionality() != model.dimensionality() {
        return Err(Error::contract(format!(
            "hyperblock has {} intervals but model has {} coefficients",
            hb.dimensionality(),
            model.dimensionality()
        )));
    }
    let (mut f1, mut f2) = (0.0, 0.0);
    for (a, b) in model.coefficients().iter().zip(hb.bounds()) {
        if *a >= 0.0 {
            f1 += a * b.lower;
            f2 += a * b.upper;
        } else {
            f1 += a * b.upper;
            f2 += a * b.lower;
        }
    }
    Ok((f1, f2))
}

/// Graph of `f` over one cube's pair with every other attribute held at the
/// reference case's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionPlane {
    pub cube_index: usize,
    /// `f` at pair corners (0,0), (0,1), (1,0), (1,1).
    pub corner_values: [f64; 4],
    pub fixed_point: CaseRecord,
}

impl RegressionPlane {
    /// Bilinear interpolation of the corner values at pair coordinates (u, v).
    pub fn value_at(&self, u: f64, v: f64) -> f64 {
        let [f00, f01, f10, f11] = self.corner_values;
        f00 * (1.0 - u) * (1.0 - v) + f01 * (1.0 - u) * v + f10 * u * (1.0 - v) + f11 * u * v
    }
}

fn pair_indices(model: &LinearModel, x: &CaseRecord, cube: usize) -> Result<(CaseRecord, usize)> {
    if model.dimensionality() != x.dimensionality() {
        return Err(Error::contract(format!(
            "model has {} coefficients but case {} has {} attributes",
            model.dimensionality(),
            x.id,
            x.dimensionality()
        )));
    }
    let padded = pad_to_multiple(x, 2);
    if 2 * cube >= padded.values.len() {
        return Err(Error::contract(format!(
            "cube {cube} out of range for {} attributes",
            x.dimensionality()
        )));
    }
    Ok((padded, 2 * cube))
}

fn substituted(model: &LinearModel, padded: &CaseRecord, i: usize, u: f64, v: f64) -> Result<f64> {
    let mut probe = padded.clone();
    probe.values[i] = u;
    probe.values[i + 1] = v;
    model.evaluate(&probe)
}

pub fn build_regression_plane(model: &LinearModel, x: &CaseRecord, cube_index: usize) -> Result<RegressionPlane> {
    let (padded, i) = pair_indices(model, x, cube_index)?;
    let mut corner_values = [0.0; 4];
    for (slot, (u, v)) in corner_values
        .iter_mut()
        .zip([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)])
    {
        *slot = substituted(model, &padded, i, u, v)?;
    }
    Ok(RegressionPlane {
        cube_index,
        corner_values,
        fixed_point: x.unpadded(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub value: f64,
    /// Set when a perturbed coordinate left `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// `f` at `x` with only cube `cube_index`'s pair shifted by `deltas`.
pub fn probe(model: &LinearModel, x: &CaseRecord, cube_index: usize, deltas: (f64, f64)) -> Result<Probe> {
    let (padded, i) = pair_indices(model, x, cube_index)?;
    let shift = |v: f64, d: f64| {
        let p = v + d;
        (p.clamp(0.0, 1.0), !(0.0..=1.0).contains(&p))
    };
    let (u, cu) = shift(padded.values[i], deltas.0);
    let (v, cv) = shift(padded.values[i + 1], deltas.1);
    Ok(Probe {
        value: substituted(model, &padded, i, u, v)?,
        clamped: cu || cv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub case_id: usize,
    pub predicted: f64,
    pub actual: f64,
    /// `actual - predicted`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
    /// Cases whose fixed attributes differ from the reference by more than the
    /// tolerance.
    pub excluded: Vec<usize>,
}

/// Signed residuals of the target against the regression plane through
/// `reference` in cube `cube_index`.
pub fn residuals_on_plane(
    model: &LinearModel,
    dataset: &Dataset,
    cube_index: usize,
    reference: &CaseRecord,
    tolerance: f64,
) -> Result<ResidualReport> {
    if !dataset.has_target() {
        return Err(Error::config("dataset has no numeric target column"));
    }
    let plane = build_regression_plane(model, reference, cube_index)?;
    let reference = pad_to_multiple(reference, 2);
    let i = 2 * cube_index;
    let mut report = ResidualReport::default();
    for case in dataset.cases() {
        let padded = pad_to_multiple(case, 2);
        let shares_fixed = padded
            .values
            .iter()
            .zip(&reference.values)
            .enumerate()
            .filter(|(j, _)| *j != i && *j != i + 1)
            .all(|(_, (a, b))| (a - b).abs() <= tolerance);
        if !shares_fixed {
            report.excluded.push(case.id);
            continue;
        }
        let predicted = plane.value_at(padded.values[i], padded.values[i + 1]);
        let actual = case.target.expect("has_target checked");
        report.residuals.push(Residual {
            case_id: case.id,
            predicted,
            actual,
            residual: actual - predicted,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: usize, values: &[f64], label: &str) -> CaseRecord {
        CaseRecord::new(id, values.to_vec(), label)
    }

    fn toy() -> Dataset {
        let cases = vec![
            case(0, &[0.1, 0.1, 0.2, 0.2], "A"),
            case(1, &[0.2, 0.3, 0.1, 0.3], "A"),
            case(2, &[0.8, 0.7, 0.9, 0.6], "B"),
            case(3, &[0.9, 0.9, 0.7, 0.8], "B"),
            case(4, &[0.5, 0.5, 0.5, 0.5], "B"),
        ];
        Dataset::from_unit_cases((0..4).map(|i| format!("x{i}")).collect(), cases).unwrap()
    }

    #[test]
    fn hyperblock_membership() {
        let x = case(0, &[0.3, 0.5], "A");
        assert!(Hyperblock::full(2).contains(&x).unwrap());
        let edge = Hyperblock::new(vec![Interval::new(0.3, 0.4).unwrap(), Interval::UNIT]).unwrap();
        assert!(edge.contains(&x).unwrap());
        let miss = Hyperblock::new(vec![Interval::UNIT, Interval::new(0.2, 0.4).unwrap()]).unwrap();
        assert!(!miss.contains(&x).unwrap());
        assert!(matches!(
            Hyperblock::full(3).contains(&x),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn hyperblock_clamps_and_validates() {
        let hb = Hyperblock::new(vec![Interval { lower: -0.5, upper: 1.5 }]).unwrap();
        assert_eq!(hb.bounds()[0], Interval::UNIT);
        assert!(Hyperblock::new(vec![Interval { lower: 0.6, upper: 0.4 }]).is_err());
    }

    #[test]
    fn delta_constructor() {
        let hb = Hyperblock::around(&[0.5, 0.9], &[0.1, 0.2], &[0.2, 0.3]).unwrap();
        assert!((hb.bounds()[0].lower - 0.4).abs() < 1e-15);
        assert!((hb.bounds()[0].upper - 0.7).abs() < 1e-15);
        assert_eq!(hb.bounds()[1].upper, 1.0);
        assert!(Hyperblock::around(&[0.5], &[-0.1], &[0.1]).is_err());
    }

    #[test]
    fn full_rectangle_covers_everything() {
        let d = toy();
        let rule = RectangleRule::new("A", vec![(0, Rect::UNIT)]).unwrap();
        let s = evaluate_rectangle_rule(&rule, &d).unwrap();
        assert_eq!(s.covered, 5);
        assert!((s.purity - 0.4).abs() < 1e-15);
        assert!(!s.empty);
    }

    #[test]
    fn empty_rectangle_flags_purity() {
        let d = toy();
        let rule = RectangleRule::new("A", vec![(1, Rect::new(0.05, 0.05, 0.95, 0.95).unwrap())]).unwrap();
        let s = evaluate_rectangle_rule(&rule, &d).unwrap();
        assert_eq!(s.covered, 0);
        assert_eq!(s.purity, 0.0);
        assert!(s.empty);
    }

    #[test]
    fn rectangle_rule_matches_hyperblock() {
        let d = toy();
        let rule = RectangleRule::new(
            "A",
            vec![(0, Rect::new(0.0, 0.3, 0.0, 0.3).unwrap()), (1, Rect::new(0.0, 0.5, 0.0, 0.5).unwrap())],
        )
        .unwrap();
        let s = evaluate_rectangle_rule(&rule, &d).unwrap();
        assert_eq!((s.covered, s.purity), (2, 1.0));
        assert_eq!(s.accuracy, 1.0);
        let via_block = rule.clone().into_rule(4).unwrap().evaluate(&d, None).unwrap();
        assert_eq!(s, via_block);
    }

    #[test]
    fn duplicate_pair_rejected() {
        assert!(RectangleRule::new("A", vec![(0, Rect::UNIT), (0, Rect::UNIT)]).is_err());
    }

    #[test]
    fn out_of_range_pair_is_contract_error() {
        let rule = RectangleRule::new("A", vec![(2, Rect::UNIT)]).unwrap();
        assert!(matches!(evaluate_rectangle_rule(&rule, &toy()), Err(Error::Contract(_))));
    }

    #[test]
    fn refine_examples() {
        let d = toy();
        let full = RectangleRule::new("A", vec![(0, Rect::UNIT)]).unwrap();
        let quadrant = refine_rule(&full, 0, Rect::new(0.0, 0.5, 0.0, 0.5).unwrap()).unwrap();
        let before = evaluate_rectangle_rule(&full, &d).unwrap();
        let after = evaluate_rectangle_rule(&quadrant, &d).unwrap();
        assert!(after.covered <= before.covered);
        let same = refine_rule(&quadrant, 0, Rect::new(0.0, 0.5, 0.0, 0.5).unwrap()).unwrap();
        assert_eq!(evaluate_rectangle_rule(&same, &d).unwrap(), after);
        assert!(matches!(
            refine_rule(&full, 0, Rect { x: Interval { lower: 0.6, upper: 0.2 }, y: Interval::UNIT }),
            Err(Error::Validation(_))
        ));
        assert!(refine_rule(&full, 0, Rect::new(0.0, 1.2, 0.0, 1.0).unwrap()).is_err());
        // adding a new pair
        let two = refine_rule(&full, 1, Rect::UNIT).unwrap();
        assert_eq!(two.rectangles().len(), 2);
    }

    #[test]
    fn odd_dimension_pair_uses_padded_copy() {
        let hb = Hyperblock::full(3)
            .refine_pair(1, Rect::new(0.2, 0.6, 0.4, 0.9).unwrap())
            .unwrap();
        assert_eq!(hb.bounds()[2], Interval::new(0.4, 0.6).unwrap());
        let rule = RectangleRule::new("A", vec![(1, Rect::new(0.2, 0.6, 0.4, 0.9).unwrap())]).unwrap();
        for v in [0.1, 0.3, 0.5, 0.7] {
            let x = case(0, &[0.5, 0.5, v], "A");
            assert_eq!(rule.covers(&x).unwrap(), hb.contains(&x).unwrap());
        }
    }

    #[test]
    fn discrimination_extremes() {
        let d = toy();
        let m = LinearModel::from_raw(vec![1.0; 4]).unwrap();
        let low = apply_discrimination_rule(&m.clone().with_threshold(-1.0), &d, "A").unwrap();
        assert_eq!(low.covered, 5);
        assert!((low.accuracy - 0.4).abs() < 1e-15);
        let high = apply_discrimination_rule(&m.clone().with_threshold(10.0), &d, "A").unwrap();
        assert_eq!(high.covered, 0);
        assert_eq!(high.confusion.true_negative + high.confusion.false_negative, 5);
        assert!(matches!(
            apply_discrimination_rule(&m.with_threshold(0.0), &d, "Z"),
            Err(Error::Lookup { .. })
        ));
    }

    #[test]
    fn rule_with_discriminant_needs_model() {
        let d = toy();
        let rule = Rule::new("B", Hyperblock::full(4)).with_discriminant("m");
        assert!(matches!(rule.evaluate(&d, None), Err(Error::Config(_))));
        let m = LinearModel::from_raw(vec![1.0; 4]).unwrap().with_threshold(2.5);
        let s = rule.evaluate(&d, Some(&m)).unwrap();
        assert_eq!((s.covered, s.purity), (2, 1.0));
    }

    #[test]
    fn interval_examples() {
        let m = LinearModel::from_raw(vec![1.0, -1.0]).unwrap();
        assert_eq!(regression_interval(&Hyperblock::full(2), &m).unwrap(), (-1.0, 1.0));
        let point = Hyperblock::new(vec![Interval::point(0.3), Interval::point(0.8)]).unwrap();
        let (f1, f2) = regression_interval(&point, &m).unwrap();
        assert_eq!(f1, f2);
        assert!((f1 - (0.3 - 0.8)).abs() < 1e-15);
    }

    #[test]
    fn regression_plane_example() {
        let m = LinearModel::from_raw(vec![1.0; 4]).unwrap();
        let x = case(0, &[0.1, 0.4, 0.5, 0.7], "A");
        let p = build_regression_plane(&m, &x, 0).unwrap();
        let expected = [1.2, 2.2, 2.2, 3.2];
        for (v, e) in p.corner_values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((p.value_at(0.1, 0.4) - 1.7).abs() < 1e-12);
        assert!(matches!(build_regression_plane(&m, &x, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn flat_plane_when_pair_has_zero_weight() {
        let m = LinearModel::from_normalized(vec![0.0, 0.0, 1.0, -0.5]).unwrap();
        let x = case(0, &[0.1, 0.4, 0.5, 0.7], "A");
        let p = build_regression_plane(&m, &x, 0).unwrap();
        let f = m.evaluate(&x).unwrap();
        assert!(p.corner_values.iter().all(|v| *v == f));
    }

    #[test]
    fn probe_examples() {
        let m = LinearModel::from_raw(vec![1.0; 4]).unwrap();
        let x = case(0, &[0.1, 0.4, 0.5, 0.7], "A");
        let p0 = probe(&m, &x, 0, (0.0, 0.0)).unwrap();
        assert_eq!(p0.value, m.evaluate(&x).unwrap());
        assert!(!p0.clamped);
        let p = probe(&m, &x, 0, (0.1, 0.1)).unwrap();
        assert!((p.value - 1.9).abs() < 1e-12);
        let c = probe(&m, &x, 1, (0.7, 0.0)).unwrap();
        assert!(c.clamped);
        assert!((c.value - (0.5 + 1.0 + 0.7)).abs() < 1e-12);
    }

    #[test]
    fn residuals_need_target() {
        let m = LinearModel::from_raw(vec![1.0; 4]).unwrap();
        let d = toy();
        assert!(matches!(
            residuals_on_plane(&m, &d, 0, &d.cases()[0], RESIDUAL_TOLERANCE),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn residuals_exclude_unshared_cases() {
        let m = LinearModel::from_raw(vec![1.0, 0.5, 0.25, 0.5]).unwrap();
        let mk = |id, v: [f64; 4], shift: f64| {
            let f = m.evaluate_values(&v).unwrap();
            case(id, &v, "A").with_target(f + shift)
        };
        let cases = vec![
            mk(0, [0.1, 0.2, 0.5, 0.5], 0.1),
            mk(1, [0.7, 0.9, 0.5, 0.5], 0.1),
            mk(2, [0.7, 0.9, 0.4, 0.5], 0.1),
        ];
        let d = Dataset::from_unit_cases((0..4).map(|i| format!("x{i}")).collect(), cases)
            .unwrap()
            .with_target_name("y");
        let r = residuals_on_plane(&m, &d, 0, &d.cases()[0], RESIDUAL_TOLERANCE).unwrap();
        assert_eq!(r.excluded, vec![2]);
        assert!(r.residuals.iter().all(|r| (r.residual - 0.1).abs() < 1e-12));
    }
}
