//! Lossless mappings of n-D cases into 3D glyphs.
//!
//! Cubes are laid out in a row along +X. Cube `k` starts at
//! `k * (cube_size + cube_spacing)`; pair- and triple-based layouts place one
//! node per cube. Heights that encode the linear function (`f(x)`, pair
//! contributions, GLC-L segment projections) are in function units and are
//! not scaled by the cube size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{pad_to_multiple, CaseRecord};
use crate::error::{Error, Result};
use crate::linear_model::LinearModel;

pub type Point3 = [f64; 3];

/// How GLC-L polylines leave their anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Segments stay in the plane through the anchor parallel to (Y, Z),
    /// advancing along +Y.
    AnchoredPlane,
    /// Each segment gets a seeded random azimuth; only its Z projection is
    /// fixed by the model.
    #[serde(rename = "free-3d")]
    Free3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub cube_size: f64,
    /// Gap between consecutive cubes along X.
    pub cube_spacing: f64,
    pub glcl_placement: Placement,
    pub random_seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            cube_size: 1.0,
            cube_spacing: 0.25,
            glcl_placement: Placement::AnchoredPlane,
            random_seed: 0,
        }
    }
}

impl LayoutConfig {
    /// Default layout with the spacing tied to a custom cube size.
    pub fn with_cube_size(cube_size: f64) -> Self {
        Self {
            cube_size,
            cube_spacing: 0.25 * cube_size,
            ..Self::default()
        }
    }

    #[must_use]
    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.glcl_placement = placement;
        self
    }

    #[must_use]
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.random_seed = seed;
        self
    }

    /// X coordinate where cube `k` starts.
    pub fn cube_offset(&self, k: usize) -> f64 {
        k as f64 * (self.cube_size + self.cube_spacing)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.cube_size) && ok(self.cube_spacing) {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "cube size and spacing must be positive (got {}, {})",
                self.cube_size, self.cube_spacing
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlyphKind {
    #[serde(rename = "spc2d-polyline")]
    Spc2d,
    #[serde(rename = "spc3d-figure")]
    Spc3d,
    #[serde(rename = "stc-polyline")]
    Stc,
    #[serde(rename = "glcl-polyline")]
    Glcl,
    #[serde(rename = "glc3sl-figure")]
    Glc3sl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerRole {
    /// White dot at the height of a pair's contribution.
    ContributionDot,
    /// Class-colored top of a vertical line, or a GLC-L endpoint.
    Apex,
    /// Node on the cube floor (SPC/STC node, GLC-L anchor).
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub position: Point3,
    pub role: MarkerRole,
    pub cube: usize,
}

/// Geometry for one case.
///
/// `paths` are polylines: consecutive points in a path are joined by a
/// segment. Markers are points that survive even when segments are removed
/// (grayed-out cases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub case_id: usize,
    pub kind: GlyphKind,
    pub class_label: String,
    /// Dimensionality of the case before padding.
    pub dimensionality: usize,
    pub paths: Vec<Vec<Point3>>,
    pub markers: Vec<Marker>,
}

impl Glyph {
    fn new(x: &CaseRecord, kind: GlyphKind) -> Self {
        Self {
            case_id: x.id,
            kind,
            class_label: x.class_label.clone(),
            dimensionality: x.dimensionality(),
            paths: Vec::new(),
            markers: Vec::new(),
        }
    }

    pub fn markers_with(&self, role: MarkerRole) -> impl Iterator<Item = &Marker> {
        self.markers.iter().filter(move |m| m.role == role)
    }

    pub fn segment_count(&self) -> usize {
        self.paths.iter().map(|p| p.len().saturating_sub(1)).sum()
    }
}

fn check_unit(x: &CaseRecord) -> Result<()> {
    match x.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        None => Ok(()),
        Some(i) => Err(Error::validation(format!(
            "case {} attribute {} = {} is not normalized to [0, 1]",
            x.id, i, x.values[i]
        ))),
    }
}

fn check_model(model: &LinearModel, x: &CaseRecord) -> Result<()> {
    if model.dimensionality() == x.dimensionality() {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "model has {} coefficients but case {} has {} attributes",
            model.dimensionality(),
            x.id,
            x.dimensionality()
        )))
    }
}

fn pair_base(values: &[f64], k: usize, cfg: &LayoutConfig) -> Point3 {
    [
        cfg.cube_offset(k) + values[2 * k] * cfg.cube_size,
        values[2 * k + 1] * cfg.cube_size,
        0.0,
    ]
}

/// Flat Shifted Paired Coordinates: one node per coordinate pair at Z = 0.
pub fn map_spc2d(x: &CaseRecord, cfg: &LayoutConfig) -> Result<Glyph> {
    check_unit(x)?;
    let padded = pad_to_multiple(x, 2);
    let mut glyph = Glyph::new(x, GlyphKind::Spc2d);
    let nodes: Vec<Point3> = (0..padded.values.len() / 2)
        .map(|k| pair_base(&padded.values, k, cfg))
        .collect();
    glyph.markers = nodes
        .iter()
        .enumerate()
        .map(|(cube, &position)| Marker {
            position,
            role: MarkerRole::Origin,
            cube,
        })
        .collect();
    glyph.paths.push(nodes);
    Ok(glyph)
}

/// SPC in 3D: each cube gets a vertical line from the pair's floor node up to
/// `f(x)`, with a contribution dot on it; apexes are chained across cubes.
pub fn map_spc3d(x: &CaseRecord, model: &LinearModel, cfg: &LayoutConfig) -> Result<Glyph> {
    check_unit(x)?;
    check_model(model, x)?;
    let padded = pad_to_multiple(x, 2);
    let f = model.evaluate(x)?;
    let contributions = model.contributions(&padded)?;
    let mut glyph = Glyph::new(x, GlyphKind::Spc3d);
    let mut apexes = Vec::with_capacity(contributions.len());
    for (k, c) in contributions.into_iter().enumerate() {
        let base = pair_base(&padded.values, k, cfg);
        let apex = [base[0], base[1], f];
        glyph.paths.push(vec![base, apex]);
        glyph.markers.extend([
            Marker { position: base, role: MarkerRole::Origin, cube: k },
            Marker { position: apex, role: MarkerRole::Apex, cube: k },
            Marker { position: [base[0], base[1], c], role: MarkerRole::ContributionDot, cube: k },
        ]);
        apexes.push(apex);
    }
    if apexes.len() > 1 {
        glyph.paths.push(apexes);
    }
    Ok(glyph)
}

/// Shifted Tripled Coordinates: each triple is a point inside its cube.
pub fn map_stc(x: &CaseRecord, cfg: &LayoutConfig) -> Result<Glyph> {
    check_unit(x)?;
    let padded = pad_to_multiple(x, 3);
    let s = cfg.cube_size;
    let v = &padded.values;
    let nodes: Vec<Point3> = (0..v.len() / 3)
        .map(|k| {
            [
                cfg.cube_offset(k) + v[3 * k] * s,
                v[3 * k + 1] * s,
                v[3 * k + 2] * s,
            ]
        })
        .collect();
    let mut glyph = Glyph::new(x, GlyphKind::Stc);
    glyph.markers = nodes
        .iter()
        .enumerate()
        .map(|(cube, &position)| Marker { position, role: MarkerRole::Origin, cube })
        .collect();
    glyph.paths.push(nodes);
    Ok(glyph)
}

/// Per-segment displacement directions for a GLC-L polyline: for segment `i`
/// the unit-length-scaled vector whose Z component is `cos(Q_i)`.
fn glcl_directions(x: &CaseRecord, model: &LinearModel, cfg: &LayoutConfig) -> Vec<Point3> {
    let mut rng = match cfg.glcl_placement {
        Placement::AnchoredPlane => None,
        Placement::Free3d => Some(ChaCha8Rng::seed_from_u64(
            cfg.random_seed ^ (x.id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )),
    };
    model
        .angles()
        .iter()
        .map(|q| {
            let (sin, cos) = q.sin_cos();
            match rng.as_mut() {
                None => [0.0, sin, cos],
                Some(rng) => {
                    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
                    let (s_az, c_az) = azimuth.sin_cos();
                    [sin * c_az, sin * s_az, cos]
                }
            }
        })
        .collect()
}

fn glcl_path(anchor: Point3, x: &CaseRecord, directions: &[Point3]) -> Vec<Point3> {
    let mut path = Vec::with_capacity(directions.len() + 1);
    let mut p = anchor;
    path.push(p);
    for (d, &len) in directions.iter().zip(x.attributes()) {
        p = [p[0] + d[0] * len, p[1] + d[1] * len, p[2] + d[2] * len];
        path.push(p);
    }
    path
}

/// GLC-L polyline: segment `i` has length `x_i` and rises `cos(Q_i) * x_i`,
/// so the endpoint sits `f(x)` above the anchor.
pub fn map_glcl(
    x: &CaseRecord,
    model: &LinearModel,
    anchor: Point3,
    cfg: &LayoutConfig,
) -> Result<Glyph> {
    check_unit(x)?;
    check_model(model, x)?;
    let directions = glcl_directions(x, model, cfg);
    let path = glcl_path(anchor, x, &directions);
    let mut glyph = Glyph::new(x, GlyphKind::Glcl);
    glyph.markers = vec![
        Marker { position: anchor, role: MarkerRole::Origin, cube: 0 },
        Marker { position: *path.last().unwrap(), role: MarkerRole::Apex, cube: 0 },
    ];
    glyph.paths.push(path);
    Ok(glyph)
}

/// GLC-3SL: a full GLC-L polyline anchored at each cube's SPC floor node.
pub fn map_glc3sl(x: &CaseRecord, model: &LinearModel, cfg: &LayoutConfig) -> Result<Glyph> {
    check_unit(x)?;
    check_model(model, x)?;
    let padded = pad_to_multiple(x, 2);
    let directions = glcl_directions(x, model, cfg);
    let mut glyph = Glyph::new(x, GlyphKind::Glc3sl);
    for k in 0..padded.values.len() / 2 {
        let anchor = pair_base(&padded.values, k, cfg);
        let path = glcl_path(anchor, x, &directions);
        glyph.markers.push(Marker { position: anchor, role: MarkerRole::Origin, cube: k });
        glyph.markers.push(Marker { position: *path.last().unwrap(), role: MarkerRole::Apex, cube: k });
        glyph.paths.push(path);
    }
    Ok(glyph)
}

/// Maps a case with the layout that `kind` names. The GLC-L anchor for
/// standalone polylines is the origin of cube 0.
pub fn map_case(
    kind: GlyphKind,
    x: &CaseRecord,
    model: Option<&LinearModel>,
    cfg: &LayoutConfig,
) -> Result<Glyph> {
    let need = || Error::config(format!("{kind:?} layout needs a linear model"));
    match kind {
        GlyphKind::Spc2d => map_spc2d(x, cfg),
        GlyphKind::Stc => map_stc(x, cfg),
        GlyphKind::Spc3d => map_spc3d(x, model.ok_or_else(need)?, cfg),
        GlyphKind::Glcl => map_glcl(x, model.ok_or_else(need)?, [0.0, 0.0, 0.0], cfg),
        GlyphKind::Glc3sl => map_glc3sl(x, model.ok_or_else(need)?, cfg),
    }
}

const MISMATCH_TOL: f64 = 1e-9;

fn mismatch(glyph: &Glyph, what: &str) -> Error {
    Error::contract(format!(
        "glyph for case {} ({:?}) does not match the layout: {what}",
        glyph.case_id, glyph.kind
    ))
}

/// Recovers the pair-or-triple coordinates of a node in cube `k`.
fn unshift(glyph: &Glyph, p: &Point3, k: usize, cfg: &LayoutConfig) -> Result<[f64; 3]> {
    let s = cfg.cube_size;
    let local = [(p[0] - cfg.cube_offset(k)) / s, p[1] / s, p[2] / s];
    if local[..2]
        .iter()
        .any(|v| *v < -MISMATCH_TOL || *v > 1.0 + MISMATCH_TOL)
    {
        return Err(mismatch(glyph, &format!("node outside cube {k}")));
    }
    Ok(local)
}

fn finish(glyph: &Glyph, mut values: Vec<f64>) -> Result<CaseRecord> {
    if values.len() < glyph.dimensionality {
        return Err(mismatch(glyph, "too few nodes for the recorded dimensionality"));
    }
    values.truncate(glyph.dimensionality);
    Ok(CaseRecord::new(glyph.case_id, values, glyph.class_label.clone()))
}

fn origins(glyph: &Glyph) -> Vec<&Marker> {
    glyph.markers_with(MarkerRole::Origin).collect()
}

/// Recovers the original case from a glyph.
///
/// SPC and STC glyphs are inverted by undoing the cube shift; GLC-L based
/// glyphs by measuring segment lengths. When a model is given, the heights
/// encoded in the glyph are checked against it.
pub fn reconstruct(glyph: &Glyph, cfg: &LayoutConfig, model: Option<&LinearModel>) -> Result<CaseRecord> {
    cfg.validate()?;
    let case = match glyph.kind {
        GlyphKind::Spc2d | GlyphKind::Spc3d => {
            let mut values = Vec::new();
            for (k, m) in origins(glyph).into_iter().enumerate() {
                if m.cube != k || m.position[2] != 0.0 {
                    return Err(mismatch(glyph, "floor nodes out of order"));
                }
                let local = unshift(glyph, &m.position, k, cfg)?;
                values.extend_from_slice(&local[..2]);
            }
            finish(glyph, values)?
        }
        GlyphKind::Stc => {
            let path = glyph.paths.first().ok_or_else(|| mismatch(glyph, "no path"))?;
            let mut values = Vec::new();
            for (k, p) in path.iter().enumerate() {
                values.extend_from_slice(&unshift(glyph, p, k, cfg)?);
            }
            finish(glyph, values)?
        }
        GlyphKind::Glcl | GlyphKind::Glc3sl => {
            let path = glyph.paths.first().ok_or_else(|| mismatch(glyph, "no path"))?;
            let values: Vec<f64> = path
                .windows(2)
                .map(|w| {
                    let d = [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]];
                    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
                })
                .collect();
            if values.len() != glyph.dimensionality {
                return Err(mismatch(glyph, "segment count differs from dimensionality"));
            }
            if glyph.kind == GlyphKind::Glc3sl {
                // each anchor must be the SPC floor node of the recovered case
                let padded = pad_to_multiple(&CaseRecord::new(0, values.clone(), ""), 2);
                for (k, m) in origins(glyph).into_iter().enumerate() {
                    let expected = pair_base(&padded.values, k, cfg);
                    if (0..3).any(|i| (expected[i] - m.position[i]).abs() > MISMATCH_TOL) {
                        return Err(mismatch(glyph, &format!("anchor of cube {k} is off")));
                    }
                }
            }
            finish(glyph, values)?
        }
    };

    if let Some(model) = model {
        verify_heights(glyph, &case, model)?;
    }
    Ok(case)
}

fn verify_heights(glyph: &Glyph, case: &CaseRecord, model: &LinearModel) -> Result<()> {
    let f = match glyph.kind {
        GlyphKind::Spc2d | GlyphKind::Stc => return Ok(()),
        _ => model
            .evaluate(case)
            .map_err(|_| mismatch(glyph, "model dimensionality differs"))?,
    };
    let off = match glyph.kind {
        GlyphKind::Spc3d => glyph
            .markers_with(MarkerRole::Apex)
            .any(|m| (m.position[2] - f).abs() > MISMATCH_TOL),
        _ => glyph
            .paths
            .iter()
            .any(|p| (p.last().unwrap()[2] - p[0][2] - f).abs() > MISMATCH_TOL),
    };
    if off {
        Err(mismatch(glyph, "heights disagree with the model"))
    } else {
        Ok(())
    }
}
