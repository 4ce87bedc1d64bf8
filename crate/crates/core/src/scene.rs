//! Renderer-agnostic scene assembly.
//!
//! A [`Scene`] is an immutable snapshot: one glyph per case with a visibility
//! state, overlay geometry (threshold plane, interval planes, regression
//! planes, rule rectangles), named camera presets, a class palette and the
//! display toggles a viewer exposes. [`serialize`] produces the canonical
//! byte encoding documented in `docs/scene-format.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linear_model::LinearModel;
use crate::rules::{build_regression_plane, regression_interval, Rect, Rule};
use crate::transforms::{map_case, Glyph, GlyphKind, LayoutConfig, Point3};

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Spc2d,
    Spc3d,
    Stc,
    Glcl,
    Glc3sl,
}

impl ViewKind {
    pub const ALL: [ViewKind; 5] = [
        ViewKind::Spc2d,
        ViewKind::Spc3d,
        ViewKind::Stc,
        ViewKind::Glcl,
        ViewKind::Glc3sl,
    ];

    pub fn glyph_kind(self) -> GlyphKind {
        match self {
            ViewKind::Spc2d => GlyphKind::Spc2d,
            ViewKind::Spc3d => GlyphKind::Spc3d,
            ViewKind::Stc => GlyphKind::Stc,
            ViewKind::Glcl => GlyphKind::Glcl,
            ViewKind::Glc3sl => GlyphKind::Glc3sl,
        }
    }

    /// Whether the view encodes `f(x)` and therefore needs a model.
    pub fn needs_model(self) -> bool {
        matches!(self, ViewKind::Spc3d | ViewKind::Glcl | ViewKind::Glc3sl)
    }

    fn pair_based(self) -> bool {
        matches!(self, ViewKind::Spc2d | ViewKind::Spc3d | ViewKind::Glc3sl)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Spc2d => "spc2d",
            ViewKind::Spc3d => "spc3d",
            ViewKind::Stc => "stc",
            ViewKind::Glcl => "glcl",
            ViewKind::Glc3sl => "glc3sl",
        }
    }

    fn cube_count(self, n: usize) -> usize {
        match self {
            ViewKind::Stc => n.div_ceil(3),
            ViewKind::Glcl => 1,
            _ => n.div_ceil(2),
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewKind::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Lookup {
                kind: "view",
                name: s.to_string(),
                valid: ViewKind::ALL.iter().map(|v| v.to_string()).collect(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Normal,
    /// Outside every rule: drawn desaturated, without connecting segments.
    Grayed,
    /// Switched off by a display toggle.
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGlyph {
    pub glyph: Glyph,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlayKind {
    ThresholdPlane,
    RegressionPlane,
    RuleRectangle,
    IntervalPlanePair,
}

/// Planes and rectangles drawn over the glyphs. Each quad lists its four
/// corners in drawing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub kind: OverlayKind,
    pub quads: Vec<[Point3; 4]>,
    /// Heights of horizontal planes (`T`, or `f1` and `f2`).
    pub levels: Vec<f64>,
    pub color_role: String,
    pub interactive: bool,
    pub cube: Option<usize>,
    /// Index of the rule this overlay belongs to.
    pub rule: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Perspective,
    Orthographic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPreset {
    pub name: String,
    pub position: Point3,
    pub look_at: Point3,
    /// Unit vector orthogonal to the viewing direction.
    pub up: Point3,
    pub projection: Projection,
}

/// Preset names in the order viewers list them.
pub const CAMERA_PRESETS: [&str; 8] = [
    "front",
    "top",
    "ortho-left",
    "low-front",
    "middle-front",
    "center",
    "left",
    "right",
];

const UNIT_TARGET: Point3 = [0.5, 0.5, 0.5];
const UNIT_DISTANCE: f64 = 3.0;

/// Looks up a camera preset framed on the unit cube.
///
/// Every preset looks at the cube center from distance 3. `top` looks down
/// −Z orthographically (the 2-D SPC picture); `front` looks along −Y.
pub fn camera_preset(name: &str) -> Result<CameraPreset> {
    use Projection::*;
    let d = UNIT_DISTANCE;
    let (offset, up, projection): (Point3, Point3, Projection) = match name {
        "front" => ([0.0, d, 0.0], [0.0, 0.0, 1.0], Perspective),
        "top" => ([0.0, 0.0, d], [0.0, 1.0, 0.0], Orthographic),
        "ortho-left" => ([-d, 0.0, 0.0], [0.0, 0.0, 1.0], Orthographic),
        "low-front" => ([0.0, d, -0.4 * d], [0.0, 0.0, 1.0], Perspective),
        "middle-front" => ([0.0, d, -0.15 * d], [0.0, 0.0, 1.0], Perspective),
        "center" => ([0.5 * d, 0.8 * d, 0.6 * d], [0.0, 0.0, 1.0], Perspective),
        "left" => ([-d, 0.0, 0.0], [0.0, 0.0, 1.0], Perspective),
        "right" => ([d, 0.0, 0.0], [0.0, 0.0, 1.0], Perspective),
        _ => {
            return Err(Error::Lookup {
                kind: "camera preset",
                name: name.to_string(),
                valid: CAMERA_PRESETS.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    let position = add(UNIT_TARGET, offset);
    Ok(CameraPreset {
        name: name.to_string(),
        position,
        look_at: UNIT_TARGET,
        up: orthonormal_up(up, sub(UNIT_TARGET, position)),
        projection,
    })
}

impl CameraPreset {
    /// Direction from the camera to its target, normalized.
    pub fn view_direction(&self) -> Point3 {
        normalize(sub(self.look_at, self.position))
    }

    /// Re-targets a unit-cube preset on `center`, scaling its distance by
    /// `extent`.
    pub fn framed(&self, center: Point3, extent: f64) -> CameraPreset {
        let offset = sub(self.position, self.look_at);
        CameraPreset {
            position: add(center, scale(offset, extent)),
            look_at: center,
            ..self.clone()
        }
    }
}

fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(a: Point3) -> Point3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

fn orthonormal_up(up: Point3, direction: Point3) -> Point3 {
    let d = normalize(direction);
    normalize(sub(up, scale(d, dot(up, d))))
}

/// Palette cycle; the first three match the conventional Iris colors.
pub const PALETTE: [&str; 8] = [
    "#e41a1c", // red
    "#4daf4a", // green
    "#377eb8", // blue
    "#984ea3", // purple
    "#ff7f00", // orange
    "#a65628", // brown
    "#f781bf", // pink
    "#17becf", // cyan
];

/// Assigns colors in class order from [`PALETTE`], except that Iris class
/// names always get red (setosa), green (versicolor) and blue (virginica).
pub fn default_palette(class_labels: &[String]) -> BTreeMap<String, String> {
    class_labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let lower = label.to_ascii_lowercase();
            let slot = if lower.contains("setosa") {
                0
            } else if lower.contains("versicolor") {
                1
            } else if lower.contains("virginica") {
                2
            } else {
                i % PALETTE.len()
            };
            (label.clone(), PALETTE[slot].to_string())
        })
        .collect()
}

pub const TOGGLE_THRESHOLD_PLANE: &str = "threshold_plane";
pub const TOGGLE_INTERVAL_PLANES: &str = "interval_planes";
pub const TOGGLE_REGRESSION_PLANES: &str = "regression_planes";
pub const TOGGLE_CONTRIBUTION_DOTS: &str = "contribution_dots";
pub const TOGGLE_GRAYED_CASES: &str = "grayed_cases";
pub const TOGGLE_GLCL_OVERLAY: &str = "glcl_overlay";

/// Toggle key controlling one class's visibility.
pub fn class_toggle(label: &str) -> String {
    format!("class:{label}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub format_version: u32,
    pub view: ViewKind,
    pub glyphs: Vec<SceneGlyph>,
    pub overlays: Vec<Overlay>,
    pub cameras: BTreeMap<String, CameraPreset>,
    pub palette: BTreeMap<String, String>,
    pub layout: LayoutConfig,
    pub toggles: BTreeMap<String, bool>,
}

impl Scene {
    pub fn count(&self, visibility: Visibility) -> usize {
        self.glyphs.iter().filter(|g| g.visibility == visibility).count()
    }

    pub fn overlays_of(&self, kind: OverlayKind) -> impl Iterator<Item = &Overlay> {
        self.overlays.iter().filter(move |o| o.kind == kind)
    }

    /// Checks the structural invariants a deserialized scene must satisfy.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != SCENE_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported scene format_version {} (supported: {SCENE_FORMAT_VERSION})",
                self.format_version
            )));
        }
        for g in &self.glyphs {
            if !self.palette.contains_key(&g.glyph.class_label) {
                return Err(Error::validation(format!(
                    "class '{}' has no palette entry",
                    g.glyph.class_label
                )));
            }
            if g.visibility == Visibility::Grayed && !g.glyph.paths.is_empty() {
                return Err(Error::validation(format!(
                    "grayed glyph {} still has connecting segments",
                    g.glyph.case_id
                )));
            }
        }
        Ok(())
    }
}

/// Assembles a [`Scene`]; see [`build_scene`] for the common case.
#[derive(Debug, Clone)]
pub struct SceneBuilder<'a> {
    dataset: &'a Dataset,
    view: ViewKind,
    model: Option<&'a LinearModel>,
    rules: &'a [Rule],
    layout: LayoutConfig,
    reference_case: Option<usize>,
    toggles: BTreeMap<String, bool>,
}

impl<'a> SceneBuilder<'a> {
    pub fn new(dataset: &'a Dataset, view: ViewKind) -> Self {
        let mut toggles: BTreeMap<String, bool> = [
            TOGGLE_THRESHOLD_PLANE,
            TOGGLE_INTERVAL_PLANES,
            TOGGLE_REGRESSION_PLANES,
            TOGGLE_CONTRIBUTION_DOTS,
            TOGGLE_GRAYED_CASES,
            TOGGLE_GLCL_OVERLAY,
        ]
        .into_iter()
        .map(|k| (k.to_string(), true))
        .collect();
        for label in dataset.class_labels() {
            toggles.insert(class_toggle(label), true);
        }
        Self {
            dataset,
            view,
            model: None,
            rules: &[],
            layout: LayoutConfig::default(),
            reference_case: None,
            toggles,
        }
    }

    pub fn model(mut self, model: Option<&'a LinearModel>) -> Self {
        self.model = model;
        self
    }

    pub fn rules(mut self, rules: &'a [Rule]) -> Self {
        self.rules = rules;
        self
    }

    pub fn layout(mut self, layout: LayoutConfig) -> Self {
        self.layout = layout;
        self
    }

    /// Adds regression planes through this case (by id) in every cube.
    pub fn reference_case(mut self, case_id: usize) -> Self {
        self.reference_case = Some(case_id);
        self
    }

    /// Overrides a display toggle. Unknown names are rejected at build time.
    pub fn toggle(mut self, name: impl Into<String>, on: bool) -> Self {
        let name = name.into();
        self.toggles.insert(name, on);
        self
    }

    fn check_toggles(&self) -> Result<()> {
        let defaults = SceneBuilder::new(self.dataset, self.view).toggles;
        match self.toggles.keys().find(|k| !defaults.contains_key(*k)) {
            None => Ok(()),
            Some(k) => Err(Error::Lookup {
                kind: "toggle",
                name: k.clone(),
                valid: defaults.into_keys().collect(),
            }),
        }
    }

    pub fn build(self) -> Result<Scene> {
        self.layout.validate()?;
        self.check_toggles()?;
        let ds = self.dataset;
        if !ds.is_normalized() {
            return Err(Error::validation("scenes are built from normalized data"));
        }
        let model = match (self.view.needs_model(), self.model) {
            (true, None) => {
                return Err(Error::config(format!("the {} view needs a linear model", self.view)))
            }
            (_, m) => m,
        };
        let kind = self.view.glyph_kind();
        let on = |k: &str| self.toggles.get(k).copied().unwrap_or(true);

        let mut glyphs = Vec::with_capacity(ds.len());
        for case in ds.cases() {
            let mut glyph = map_case(kind, case, model, &self.layout)?;
            let covered = if self.rules.is_empty() {
                true
            } else {
                let mut any = false;
                for rule in self.rules {
                    if rule.covers(case, model)? {
                        any = true;
                        break;
                    }
                }
                any
            };
            let mut visibility = if covered { Visibility::Normal } else { Visibility::Grayed };
            if visibility == Visibility::Grayed {
                glyph.paths.clear();
                if !on(TOGGLE_GRAYED_CASES) {
                    visibility = Visibility::Hidden;
                }
            }
            if !on(&class_toggle(&case.class_label)) {
                visibility = Visibility::Hidden;
            }
            glyphs.push(SceneGlyph { glyph, visibility });
        }

        let cubes = self.view.cube_count(ds.dimensionality());
        let s = self.layout.cube_size;
        let width = self.layout.cube_offset(cubes - 1) + s;
        let floor = |x0: f64, x1: f64, y0: f64, y1: f64, z: f64| -> [Point3; 4] {
            [[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]
        };
        let mut overlays = Vec::new();

        if let (true, Some(m)) = (self.view.needs_model(), model) {
            if let Some(t) = m.threshold() {
                overlays.push(Overlay {
                    kind: OverlayKind::ThresholdPlane,
                    quads: vec![floor(0.0, width, 0.0, s, t)],
                    levels: vec![t],
                    color_role: "discrimination-plane".into(),
                    interactive: true,
                    cube: None,
                    rule: None,
                });
            }
            for (i, rule) in self.rules.iter().enumerate() {
                let (f1, f2) = regression_interval(&rule.block, m)?;
                overlays.push(Overlay {
                    kind: OverlayKind::IntervalPlanePair,
                    quads: vec![floor(0.0, width, 0.0, s, f1), floor(0.0, width, 0.0, s, f2)],
                    levels: vec![f1, f2],
                    color_role: "interval-plane".into(),
                    interactive: false,
                    cube: None,
                    rule: Some(i),
                });
            }
            if let Some(id) = self.reference_case {
                let x = ds.cases().iter().find(|c| c.id == id).ok_or_else(|| {
                    Error::validation(format!("reference case {id} is not in the dataset"))
                })?;
                if self.view.pair_based() {
                    for k in 0..cubes {
                        let plane = build_regression_plane(m, x, k)?;
                        let [f00, f01, f10, f11] = plane.corner_values;
                        let x0 = self.layout.cube_offset(k);
                        overlays.push(Overlay {
                            kind: OverlayKind::RegressionPlane,
                            quads: vec![[
                                [x0, 0.0, f00],
                                [x0 + s, 0.0, f10],
                                [x0 + s, s, f11],
                                [x0, s, f01],
                            ]],
                            levels: Vec::new(),
                            color_role: "regression-plane".into(),
                            interactive: false,
                            cube: Some(k),
                            rule: None,
                        });
                    }
                }
            }
        }

        if self.view.pair_based() {
            for (i, rule) in self.rules.iter().enumerate() {
                for k in 0..cubes {
                    let Some(r) = rule.block.pair_rect(k) else { continue };
                    if r == Rect::UNIT {
                        continue;
                    }
                    let x0 = self.layout.cube_offset(k);
                    overlays.push(Overlay {
                        kind: OverlayKind::RuleRectangle,
                        quads: vec![floor(
                            x0 + r.x.lower * s,
                            x0 + r.x.upper * s,
                            r.y.lower * s,
                            r.y.upper * s,
                            0.0,
                        )],
                        levels: Vec::new(),
                        color_role: "rule-rectangle".into(),
                        interactive: true,
                        cube: Some(k),
                        rule: Some(i),
                    });
                }
            }
        }

        let center = [width / 2.0, s / 2.0, s / 2.0];
        let extent = width.max(s);
        let cameras = CAMERA_PRESETS
            .iter()
            .map(|name| {
                let preset = camera_preset(name)?.framed(center, extent);
                Ok((name.to_string(), preset))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;

        Ok(Scene {
            format_version: SCENE_FORMAT_VERSION,
            view: self.view,
            glyphs,
            overlays,
            cameras,
            palette: default_palette(ds.class_labels()),
            layout: self.layout,
            toggles: self.toggles,
        })
    }
}

/// One glyph per case, visibility from the rules (covered by any rule means
/// normal; everything is normal when there are no rules), overlays from the
/// model threshold and the rules, all camera presets.
pub fn build_scene(
    dataset: &Dataset,
    view: ViewKind,
    model: Option<&LinearModel>,
    rules: &[Rule],
    layout: &LayoutConfig,
) -> Result<Scene> {
    SceneBuilder::new(dataset, view)
        .model(model)
        .rules(rules)
        .layout(*layout)
        .build()
}

pub fn serialize(scene: &Scene) -> Vec<u8> {
    canonical::to_bytes(scene)
}

pub fn deserialize(bytes: &[u8]) -> Result<Scene> {
    // check the version before the full parse so old/new files fail clearly
    let probe: serde_json::Value = canonical::from_slice(bytes)?;
    let version = probe.get("format_version").and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(SCENE_FORMAT_VERSION)) {
        return Err(Error::validation(format!(
            "unsupported scene format_version {} (supported: {SCENE_FORMAT_VERSION})",
            version.map_or_else(|| "missing".to_string(), |v| v.to_string())
        )));
    }
    let scene: Scene = serde_json::from_value(probe)
        .map_err(|e| Error::validation(format!("malformed scene: {e}")))?;
    scene.validate()?;
    Ok(scene)
}
