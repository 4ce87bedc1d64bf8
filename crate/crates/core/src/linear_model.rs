//! Linear functions over normalized attributes and their GLC-L encoding.
//!
//! A model keeps the raw coefficients `c_i` it was built from together with
//! the normalized coefficients `a_i = c_i / max_j |c_j|` and the GLC-L angles
//! `Q_i = arccos(a_i)`. Everything that evaluates `f` uses the normalized
//! coefficients; thresholds are expressed in the same normalized units.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CaseRecord, Dataset};
use crate::error::{Error, Result};
use crate::rules::{apply_discrimination_rule, RuleStats};

/// Outcome of the threshold rule `f(x) >= T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Class1,
    Class2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    angles: Vec<f64>,
    scale: f64,
    threshold: Option<f64>,
}

/// Normalizes raw coefficients by their largest magnitude.
pub fn normalize_coefficients(raw: &[f64]) -> Result<LinearModel> {
    LinearModel::from_raw(raw.to_vec())
}

/// `Q_i = arccos(a_i)` for coefficients already inside `[-1, 1]`.
pub fn angles_from_coefficients(a: &[f64]) -> Result<Vec<f64>> {
    a.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_finite() && v.abs() <= 1.0 {
                Ok(v.acos())
            } else {
                Err(Error::validation(format!(
                    "coefficient {i} = {v} lies outside [-1, 1]"
                )))
            }
        })
        .collect()
}

impl LinearModel {
    /// Builds a model from raw coefficients `c_i`.
    ///
    /// `c_max` is the largest absolute coefficient, so every normalized
    /// coefficient lands in `[-1, 1]` and at least one has magnitude 1.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::validation("model has no coefficients"));
        }
        if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite coefficient {v}")));
        }
        let scale = raw.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Err(Error::validation(
                "all coefficients are zero; c_max is undefined",
            ));
        }
        let normalized: Vec<f64> = raw.iter().map(|c| c / scale).collect();
        let angles = angles_from_coefficients(&normalized)?;
        Ok(Self {
            raw,
            normalized,
            angles,
            scale,
            threshold: None,
        })
    }

    /// Builds a model directly from coefficients in `[-1, 1]` with scale 1.
    ///
    /// Unlike [`LinearModel::from_raw`] this does not require any coefficient
    /// to reach magnitude 1, so degenerate models (all zeros) are allowed.
    pub fn from_normalized(a: Vec<f64>) -> Result<Self> {
        let angles = angles_from_coefficients(&a)?;
        Ok(Self {
            raw: a.clone(),
            normalized: a,
            angles,
            scale: 1.0,
            threshold: None,
        })
    }

    /// Sets the threshold `T` in normalized-function units.
    #[must_use]
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    /// Sets the threshold from a value expressed against the raw function `F`.
    #[must_use]
    pub fn with_raw_threshold(self, raw_threshold: f64) -> Self {
        let t = self.scaled_threshold(raw_threshold);
        self.with_threshold(t)
    }

    pub fn raw_coefficients(&self) -> &[f64] {
        &self.raw
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.normalized
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn dimensionality(&self) -> usize {
        self.normalized.len()
    }

    /// Coefficient for attribute `i`; zero past the model's dimensionality,
    /// which is how padded attributes are treated.
    pub(crate) fn coefficient_or_zero(&self, i: usize) -> f64 {
        self.normalized.get(i).copied().unwrap_or(0.0)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n == self.dimensionality() {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "model has {} coefficients but case has {} attributes",
                self.dimensionality(),
                n
            )))
        }
    }

    /// `f(x) = Σ a_i x_i` over the case's unpadded attributes.
    pub fn evaluate(&self, x: &CaseRecord) -> Result<f64> {
        self.evaluate_values(x.attributes())
    }

    pub fn evaluate_values(&self, values: &[f64]) -> Result<f64> {
        self.check_dim(values.len())?;
        Ok(dot(&self.normalized, values))
    }

    /// The raw function `F(x) = Σ c_i x_i`.
    pub fn evaluate_raw(&self, values: &[f64]) -> Result<f64> {
        self.check_dim(values.len())?;
        Ok(dot(&self.raw, values))
    }

    /// Contribution of coordinate pair `pair` (0-based) to `f(x)`.
    ///
    /// Pairs are taken over the case's values including padding; padded
    /// attributes carry a zero coefficient, so an odd trailing attribute
    /// contributes alone.
    pub fn contribution(&self, x: &CaseRecord, pair: usize) -> Result<f64> {
        self.check_dim(x.dimensionality())?;
        let pairs = x.values.len().div_ceil(2);
        if pair >= pairs {
            return Err(Error::contract(format!(
                "pair index {pair} out of range (case has {pairs} pairs)"
            )));
        }
        let i = 2 * pair;
        let mut sum = self.coefficient_or_zero(i) * x.values[i];
        if let Some(&v) = x.values.get(i + 1) {
            sum += self.coefficient_or_zero(i + 1) * v;
        }
        Ok(sum)
    }

    /// Every pair contribution, in cube order.
    pub fn contributions(&self, x: &CaseRecord) -> Result<Vec<f64>> {
        (0..x.values.len().div_ceil(2))
            .map(|k| self.contribution(x, k))
            .collect()
    }

    /// Applies `f(x) >= T`; ties go to class 1.
    pub fn classify(&self, x: &CaseRecord) -> Result<Decision> {
        let t = self
            .threshold
            .ok_or_else(|| Error::contract("model threshold is not set"))?;
        Ok(decide(self.evaluate(x)?, t))
    }

    /// Converts a threshold on the raw function into normalized units.
    pub fn scaled_threshold(&self, raw_threshold: f64) -> f64 {
        raw_threshold / self.scale
    }
}

pub(crate) fn decide(f: f64, threshold: f64) -> Decision {
    if f >= threshold {
        Decision::Class1
    } else {
        Decision::Class2
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// Settings for [`search_discriminant`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Maximum coordinate sweeps per step size.
    pub max_sweeps: usize,
    /// Step sizes tried in order.
    pub steps: Vec<f64>,
    /// Seeds the coordinate visiting order.
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            steps: (1..=10).map(|k| 0.5_f64.powi(k)).collect(),
            seed: 0,
        }
    }
}

impl SearchParams {
    #[must_use]
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Best threshold for scores labelled positive/negative.
///
/// Candidates are the minimum score (everything class 1), midpoints between
/// consecutive distinct scores, and one past the maximum (everything class 2).
/// Returns the first threshold reaching the highest number of correct cases.
pub fn best_threshold(scored: &[(f64, bool)]) -> (f64, usize) {
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = sorted.iter().filter(|s| s.1).count();
    let Some(first) = sorted.first() else {
        return (0.0, 0);
    };
    let mut best = (first.0, positives);
    let mut correct = positives;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == v {
            // this case drops below the threshold and becomes class 2
            if sorted[j].1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            j += 1;
        }
        let t = match sorted.get(j) {
            Some(next) => v + (next.0 - v) / 2.0,
            None => v + 1.0,
        };
        if correct > best.1 {
            best = (t, correct);
        }
        i = j;
    }
    best
}

fn descend(
    mut a: Vec<f64>,
    score: &dyn Fn(&[f64]) -> (f64, usize),
    params: &SearchParams,
    rng: &mut ChaCha8Rng,
    perfect: usize,
) -> (Vec<f64>, (f64, usize)) {
    let mut order: Vec<usize> = (0..a.len()).collect();
    let mut best = score(&a);
    'steps: for &step in &params.steps {
        for _ in 0..params.max_sweeps {
            order.shuffle(rng);
            let mut improved = false;
            for &i in &order {
                let current = a[i];
                for candidate in [current + step, current - step] {
                    let candidate = candidate.clamp(-1.0, 1.0);
                    if candidate == current {
                        continue;
                    }
                    a[i] = candidate;
                    if a.iter().all(|&v| v == 0.0) {
                        a[i] = current;
                        continue;
                    }
                    let s = score(&a);
                    if s.1 > best.1 {
                        best = s;
                        improved = true;
                        break;
                    }
                    a[i] = current;
                }
            }
            if best.1 == perfect {
                break 'steps;
            }
            if !improved {
                break;
            }
        }
    }
    (a, best)
}

/// Coordinate descent for a one-vs-rest linear discriminant.
///
/// Starts from `a = (1, …, 1)` (and, if that falls short of 100%, also from
/// `a = (-1, …, -1)`, keeping the better); for each step size, sweeps the coordinates in
/// a seeded order trying `a_i ± step` (clamped to `[-1, 1]`) and keeps a move
/// only when it strictly increases the number of correctly classified cases
/// under the best threshold. The result is renormalized so the largest
/// coefficient has magnitude 1 and the threshold is re-swept on it.
pub fn search_discriminant(
    dataset: &Dataset,
    target_class: &str,
    params: &SearchParams,
) -> Result<(LinearModel, RuleStats)> {
    if !dataset.is_normalized() {
        return Err(Error::validation("discriminant search needs normalized data"));
    }
    if dataset.count_class(target_class) == 0 {
        return Err(Error::validation(format!(
            "target class '{target_class}' has no cases"
        )));
    }
    let n = dataset.dimensionality();
    let labels: Vec<bool> = dataset
        .cases()
        .iter()
        .map(|c| c.class_label == target_class)
        .collect();
    let score = |a: &[f64]| -> (f64, usize) {
        let scored: Vec<(f64, bool)> = dataset
            .cases()
            .iter()
            .zip(&labels)
            .map(|(c, &l)| (dot(a, &c.values), l))
            .collect();
        best_threshold(&scored)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut a, mut best) = descend(vec![1.0; n], &score, params, &mut rng, dataset.len());
    if best.1 < dataset.len() {
        // a target class at the low end of f(1, …, 1) sits on a plateau the
        // single-coordinate moves cannot leave; the mirrored start covers it
        let (b, mirrored) = descend(vec![-1.0; n], &score, params, &mut rng, dataset.len());
        if mirrored.1 > best.1 {
            a = b;
            best = mirrored;
        }
    }
    debug_assert!(best.1 <= dataset.len());

    // re-sweep on the normalized coefficients so boundary cases keep their
    // side exactly (a / c_max can differ from a in the last bit)
    let model = LinearModel::from_raw(a)?;
    let threshold = score(model.coefficients()).0;
    let model = model.with_threshold(threshold);
    let stats = apply_discrimination_rule(&model, dataset, target_class)?;
    Ok((model, stats))
}
