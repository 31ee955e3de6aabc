//! The serialized projection bundle shared with the browser viewer.
//!
//! `normalized_matrix` travels with the points so a client can re-project
//! under a different anchor order without the original data.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anchors::{circle_anchors, default_anchors, AnchorMode, AnchorSet, UnitVector};
use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::overlap::Heatmap;
use crate::projection::{normalize, project_rows, Normalization, ProjectionMethod};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for the re-projection check in [`Scene::validate`].
pub const SELF_CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Categorical palette cycled across classes.
pub const PALETTE: [&str; 12] = [
    "#1F77B4", "#FF7F0E", "#2CA02C", "#D62728", "#9467BD", "#8C564B", "#E377C2", "#7F7F7F", "#BCBD22", "#17BECF",
    "#393B79", "#AD494A",
];

/// Marker shapes distinguishing classes that share a color.
pub const MARKERS: [&str; 4] = ["circle", "square", "diamond", "triangle"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub timestamp: String,
    pub normalization: Normalization,
    /// Marker shape per class; present only when classes outnumber the palette.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_markers: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema_version: u32,
    pub method: ProjectionMethod,
    /// `n` rows of `[x, y, z]`; 2D projections have `z = 0`.
    pub points: Vec<[f64; 3]>,
    /// `p` rows of `[x, y, z]`; circle anchors have `z = 0`.
    pub anchors: Vec<[f64; 3]>,
    pub feature_names: Vec<String>,
    /// The matrix actually projected. In `[0, 1]` for minmax and
    /// compositional normalization; raw values otherwise.
    pub normalized_matrix: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub class_palette: BTreeMap<String, String>,
    pub row_ids: Vec<String>,
    pub overlap: Option<Heatmap>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct SceneOptions {
    pub method: ProjectionMethod,
    /// Anchor override for RadViz3D; other methods always use circle anchors.
    pub anchors: Option<AnchorSet>,
    pub anchor_mode: AnchorMode,
    pub normalization: Normalization,
    pub palette_seed: u64,
    pub overlap: Option<Heatmap>,
    pub command: String,
    pub timestamp: String,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            method: ProjectionMethod::RadViz3D,
            anchors: None,
            anchor_mode: AnchorMode::Auto,
            normalization: Normalization::MinMax,
            palette_seed: 0,
            overlap: None,
            command: String::new(),
            timestamp: String::new(),
        }
    }
}

fn pad3(u: &UnitVector) -> [f64; 3] {
    let c = u.coords();
    [c[0], c[1], c.get(2).copied().unwrap_or(0.0)]
}

/// Seeded assignment of palette colors (and, past 12 classes, marker shapes)
/// to classes in order of first appearance.
pub fn assign_palette(classes: &[String], seed: u64) -> (BTreeMap<String, String>, Option<BTreeMap<String, String>>) {
    let mut colors = PALETTE;
    colors.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let palette = classes.iter().enumerate().map(|(k, c)| (c.clone(), colors[k % colors.len()].to_string())).collect();
    let markers = (classes.len() > colors.len()).then(|| {
        classes
            .iter()
            .enumerate()
            .map(|(k, c)| (c.clone(), MARKERS[(k / colors.len()) % MARKERS.len()].to_string()))
            .collect()
    });
    (palette, markers)
}

fn scene_anchors(data: &DataSet, options: &SceneOptions) -> Result<AnchorSet> {
    match options.method {
        ProjectionMethod::RadViz3D => match &options.anchors {
            Some(a) if a.p() != data.p() => Err(Error::DimensionMismatch { expected: data.p(), actual: a.p() }),
            Some(a) if a.dim() != 3 => Err(Error::InvalidData("RadViz3D needs sphere anchors".into())),
            Some(a) => Ok(a.clone()),
            None => default_anchors(data.p(), options.anchor_mode),
        },
        ProjectionMethod::RadViz2D | ProjectionMethod::Viz3D => circle_anchors(data.p()),
    }
}

/// Projects `values` (already prepared) the way `method` does.
fn project_for_method(values: &DMatrix<f64>, anchors: &AnchorSet, method: ProjectionMethod) -> Vec<[f64; 3]> {
    let (planar, _) = project_rows(values, anchors);
    let p = values.ncols() as f64;
    (0..values.nrows())
        .map(|i| {
            let r = planar.row(i);
            match method {
                ProjectionMethod::RadViz3D => [r[0], r[1], r[2]],
                ProjectionMethod::RadViz2D => [r[0], r[1], 0.0],
                ProjectionMethod::Viz3D => [r[0], r[1], values.row(i).sum() / p],
            }
        })
        .collect()
}

/// Runs the projection pipeline and packs everything the viewer needs.
pub fn build_scene(data: &DataSet, options: &SceneOptions) -> Result<Scene> {
    let anchors = scene_anchors(data, options)?;
    let (prepared, _) = normalize(data, options.normalization)?;
    let values = prepared.values();
    let points = project_for_method(values, &anchors, options.method);
    let (class_palette, class_markers) = assign_palette(&data.classes(), options.palette_seed);
    let scene = Scene {
        schema_version: SCHEMA_VERSION,
        method: options.method,
        points,
        anchors: anchors.iter().map(pad3).collect(),
        feature_names: data.feature_names().to_vec(),
        normalized_matrix: values.row_iter().map(|r| r.iter().copied().collect()).collect(),
        labels: data.labels().to_vec(),
        class_palette,
        row_ids: data.row_ids().to_vec(),
        overlap: options.overlap.clone(),
        provenance: Provenance {
            command: options.command.clone(),
            seed: options.palette_seed,
            timestamp: options.timestamp.clone(),
            normalization: options.normalization,
            class_markers,
        },
    };
    scene.validate()?;
    Ok(scene)
}

fn is_hex_color(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Checks row counts, colors and that re-projecting the normalized
    /// matrix reproduces the points to 1e-9.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema_version));
        }
        let n = self.points.len();
        if self.normalized_matrix.len() != n || self.labels.len() != n || self.row_ids.len() != n {
            return bad("points, normalized_matrix, labels and row_ids disagree in length".into());
        }
        let p = self.feature_names.len();
        if self.anchors.len() != p {
            return bad(format!("{} anchors for {p} features", self.anchors.len()));
        }
        if self.normalized_matrix.iter().any(|r| r.len() != p) {
            return bad("normalized_matrix row length differs from feature count".into());
        }
        if let Some(c) = self.class_palette.values().find(|c| !is_hex_color(c)) {
            return bad(format!("invalid color {c}"));
        }
        if let Some(l) = self.labels.iter().find(|l| !self.class_palette.contains_key(*l)) {
            return bad(format!("class '{l}' has no palette entry"));
        }
        if matches!(self.provenance.normalization, Normalization::MinMax | Normalization::Compositional)
            && self.normalized_matrix.iter().flatten().any(|v| !(0.0..=1.0).contains(v))
        {
            return bad("normalized_matrix has entries outside [0, 1]".into());
        }
        let max_dev = self.reprojection_error()?;
        if max_dev > SELF_CONSISTENCY_TOLERANCE {
            return bad(format!("re-projection differs from points by {max_dev}"));
        }
        Ok(())
    }

    /// Largest coordinate difference between `points` and a fresh
    /// projection of `normalized_matrix` with `anchors`.
    pub fn reprojection_error(&self) -> Result<f64> {
        let dim = if self.method == ProjectionMethod::RadViz3D { 3 } else { 2 };
        let anchors = self
            .anchors
            .iter()
            .map(|a| UnitVector::new(a[..dim].to_vec()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidScene(format!("bad anchor: {e}")))?;
        let method =
            if dim == 3 { crate::anchors::AnchorMethod::Fibonacci } else { crate::anchors::AnchorMethod::Circle };
        let set = AnchorSet::from_anchors(anchors, method)?;
        let n = self.normalized_matrix.len();
        let p = self.feature_names.len();
        let values = DMatrix::from_fn(n, p, |i, j| self.normalized_matrix[i][j]);
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidScene("normalized_matrix has negative or non-finite entries".into()));
        }
        let fresh = project_for_method(&values, &set, self.method);
        Ok(fresh
            .iter()
            .zip(&self.points)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    /// `points` as an `n x 3` matrix.
    pub fn points_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.points.len(), 3, |i, k| self.points[i][k])
    }

    /// Class names in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.labels.iter().filter(|l| seen.insert(l.as_str())).cloned().collect()
    }
}
